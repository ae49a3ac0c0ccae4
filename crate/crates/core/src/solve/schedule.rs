use crate::assembly::{financial_role, series_key, BalanceLedger, Financial, TimeGrid};
use crate::milp::LinExpr;

use super::{Solution, SolveStats, Status};

/// Evaluated time series of a solved model, in ledger registration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub grid: TimeGrid,
    pub status: Status,
    /// False when the solver returned no assignment.
    pub solved: bool,
    pub objective: f64,
    pub stats: SolveStats,
    pub series: Vec<(String, Vec<f64>)>,
}

impl Schedule {
    pub fn has_solution(&self) -> bool {
        self.solved
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.series.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_slice())
    }

    /// Financial inputs minus outputs summed from the extracted series.
    pub fn recomputed_objective(&self) -> f64 {
        let sum = |prefix: &str| -> f64 {
            self.series
                .iter()
                .filter(|(k, _)| k.starts_with(prefix))
                .map(|(_, v)| v.iter().sum::<f64>())
                .sum()
        };
        sum("financialInput_") - sum("financialOutput_")
    }
}

/// Evaluates every ledger series under the solution. Without a solution the
/// schedule carries status and statistics only.
pub fn extract_schedule(solution: &Solution, ledger: &BalanceLedger, grid: &TimeGrid) -> Schedule {
    let mut schedule = Schedule {
        grid: grid.clone(),
        status: solution.status,
        solved: solution.has_solution(),
        objective: solution.objective,
        stats: solution.stats.clone(),
        series: Vec::new(),
    };
    if !schedule.solved {
        return schedule;
    }
    let eval = |s: &[LinExpr]| -> Vec<f64> { s.iter().map(|e| clean(e.eval(&solution.values))).collect() };
    for e in &ledger.power {
        schedule.series.push((series_key(&e.role, &e.component), eval(&e.series)));
    }
    for kind in [Financial::Input, Financial::Output] {
        for e in ledger.financial.iter().filter(|e| e.kind == kind) {
            schedule.series.push((series_key(financial_role(kind), &e.component), eval(&e.series)));
        }
    }
    for e in &ledger.states {
        schedule.series.push((series_key(&e.role, &e.component), eval(&e.series)));
    }
    schedule
}

/// Collapses solver noise such as `-0.0` and `1e-15` so output files stay
/// stable.
fn clean(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{build_balances, build_objective, Carrier, Side};
    use crate::milp::Model;
    use crate::solve::{solve_builtin, SolveOptions};

    #[test]
    fn grid_only_demand() {
        let grid = TimeGrid::new(3, 0.25).unwrap();
        let mut m = Model::new();
        let mut ledger = BalanceLedger::new(3);
        let supply: Vec<_> = (1..=3).map(|i| m.add_continuous(format!("s{i}"), 0.0, 10.0).unwrap()).collect();
        let series: Vec<LinExpr> = supply.iter().map(|&v| v.into()).collect();
        ledger.add_power(Carrier::Electric, Side::Source, "Grid", "electricOutputPower", series).unwrap();
        ledger.add_power(Carrier::Electric, Side::Sink, "Usage", "electricInputPower", vec![LinExpr::constant(2.0); 3]).unwrap();
        let cost = supply.iter().map(|&v| LinExpr::term(v, 0.25 * 30.0)).collect();
        ledger.add_financial(Financial::Input, "Grid", cost).unwrap();
        build_balances(&mut m, &ledger).unwrap();
        build_objective(&mut m, &ledger).unwrap();
        let sol = solve_builtin(&m, &SolveOptions::default()).unwrap();
        let s = extract_schedule(&sol, &ledger, &grid);
        assert_eq!(s.get("electricOutputPower_Grid").unwrap(), &[2.0, 2.0, 2.0]);
        assert!((s.recomputed_objective() - sol.objective).abs() < 1e-6);
        let keys: Vec<&str> = s.series.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["electricOutputPower_Grid", "electricInputPower_Usage", "financialInput_Grid"]);
    }

    #[test]
    fn no_solution_means_no_series() {
        let grid = TimeGrid::new(2, 1.0).unwrap();
        let sol = Solution::without_values(Status::Infeasible, SolveStats::default());
        let s = extract_schedule(&sol, &BalanceLedger::new(2), &grid);
        assert!(s.series.is_empty());
        assert_eq!(s.status, Status::Infeasible);
    }
}
