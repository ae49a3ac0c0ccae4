//! Time grid, the per-carrier ledger of power expressions, and assembly of
//! balance rows and the objective.

use std::fmt;

use chrono::NaiveDateTime;
use thiserror::Error;

use crate::milp::{LinExpr, Model, ModelError, Sense};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("time grid needs at least one unit and a positive unit length (got {n}, {hours} h)")]
    BadGrid { n: usize, hours: f64 },
    #[error("series `{key}` has {found} entries, expected {expected}")]
    Length { key: String, found: usize, expected: usize },
    #[error("{carrier} balance is structurally infeasible: only {side}s, and `{key}` is nonzero at unit {unit}")]
    OneSided { carrier: Carrier, side: &'static str, key: String, unit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub n: usize,
    pub hours_per_unit: f64,
    pub start: Option<NaiveDateTime>,
}

const ROUNDING_SLACK: f64 = 1e-9;

impl TimeGrid {
    pub fn new(n: usize, hours_per_unit: f64) -> Result<Self, AssemblyError> {
        if n == 0 || !(hours_per_unit > 0.0) || !hours_per_unit.is_finite() {
            return Err(AssemblyError::BadGrid { n, hours: hours_per_unit });
        }
        Ok(TimeGrid { n, hours_per_unit, start: None })
    }

    pub fn with_start(mut self, start: NaiveDateTime) -> Self {
        self.start = Some(start);
        self
    }

    pub fn horizon_hours(&self) -> f64 {
        self.n as f64 * self.hours_per_unit
    }

    /// `ceil(hours * N / T)`, tolerant of representation error.
    pub fn units_ceil(&self, hours: f64) -> usize {
        (hours / self.hours_per_unit - ROUNDING_SLACK).ceil().max(0.0) as usize
    }

    /// `floor(hours * N / T)`, tolerant of representation error.
    pub fn units_floor(&self, hours: f64) -> usize {
        (hours / self.hours_per_unit + ROUNDING_SLACK).floor().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Carrier {
    Electric,
    Heat,
    Cold,
}

impl Carrier {
    pub const ALL: [Carrier; 3] = [Carrier::Electric, Carrier::Heat, Carrier::Cold];

    pub fn label(self) -> &'static str {
        match self {
            Carrier::Electric => "electric",
            Carrier::Heat => "heat",
            Carrier::Cold => "cold",
        }
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Financial {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerEntry {
    pub carrier: Carrier,
    pub side: Side,
    pub component: String,
    pub role: String,
    pub series: Vec<LinExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinancialEntry {
    pub kind: Financial,
    pub component: String,
    pub series: Vec<LinExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateEntry {
    pub component: String,
    pub role: String,
    pub series: Vec<LinExpr>,
}

/// Series are addressed as `<role>_<component>`.
pub fn series_key(role: &str, component: &str) -> String {
    format!("{role}_{component}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceLedger {
    pub n: usize,
    pub power: Vec<PowerEntry>,
    pub financial: Vec<FinancialEntry>,
    pub states: Vec<StateEntry>,
}

fn merge_into(target: &mut [LinExpr], series: &[LinExpr]) {
    for (t, s) in target.iter_mut().zip(series) {
        t.add_expr(s, 1.0);
    }
}

impl BalanceLedger {
    pub fn new(n: usize) -> Self {
        BalanceLedger { n, power: Vec::new(), financial: Vec::new(), states: Vec::new() }
    }

    fn check_len(&self, key: &str, series: &[LinExpr]) -> Result<(), AssemblyError> {
        if series.len() != self.n {
            return Err(AssemblyError::Length { key: key.to_string(), found: series.len(), expected: self.n });
        }
        Ok(())
    }

    /// Registers a power series; a repeated (carrier, side, component, role)
    /// adds onto the existing entry.
    pub fn add_power(
        &mut self,
        carrier: Carrier,
        side: Side,
        component: &str,
        role: &str,
        series: Vec<LinExpr>,
    ) -> Result<(), AssemblyError> {
        self.check_len(&series_key(role, component), &series)?;
        if let Some(e) = self
            .power
            .iter_mut()
            .find(|e| e.carrier == carrier && e.side == side && e.component == component && e.role == role)
        {
            merge_into(&mut e.series, &series);
        } else {
            self.power.push(PowerEntry { carrier, side, component: component.into(), role: role.into(), series });
        }
        Ok(())
    }

    pub fn add_financial(&mut self, kind: Financial, component: &str, series: Vec<LinExpr>) -> Result<(), AssemblyError> {
        self.check_len(&series_key(financial_role(kind), component), &series)?;
        if let Some(e) = self.financial.iter_mut().find(|e| e.kind == kind && e.component == component) {
            merge_into(&mut e.series, &series);
        } else {
            self.financial.push(FinancialEntry { kind, component: component.into(), series });
        }
        Ok(())
    }

    /// Registers a non-balanced series (levels, phase flags) for output.
    pub fn add_state(&mut self, component: &str, role: &str, series: Vec<LinExpr>) -> Result<(), AssemblyError> {
        self.check_len(&series_key(role, component), &series)?;
        self.states.push(StateEntry { component: component.into(), role: role.into(), series });
        Ok(())
    }

    pub fn entries(&self, carrier: Carrier) -> impl Iterator<Item = &PowerEntry> {
        self.power.iter().filter(move |e| e.carrier == carrier)
    }

    /// Every component that registered anything.
    pub fn components(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let names = self
            .power
            .iter()
            .map(|e| e.component.as_str())
            .chain(self.financial.iter().map(|e| e.component.as_str()))
            .chain(self.states.iter().map(|e| e.component.as_str()));
        for c in names {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }
}

pub fn financial_role(kind: Financial) -> &'static str {
    match kind {
        Financial::Input => "financialInput",
        Financial::Output => "financialOutput",
    }
}

/// One equality row per carrier and unit: sources equal sinks.
pub fn build_balances(model: &mut Model, ledger: &BalanceLedger) -> Result<(), AssemblyError> {
    for carrier in Carrier::ALL {
        let entries: Vec<&PowerEntry> = ledger.entries(carrier).collect();
        if entries.is_empty() {
            continue;
        }
        let has = |side| entries.iter().any(|e| e.side == side);
        if !(has(Side::Source) && has(Side::Sink)) {
            let side = if has(Side::Source) { "source" } else { "sink" };
            for e in &entries {
                for (i, x) in e.series.iter().enumerate() {
                    let x = x.normalized();
                    if x.is_constant() && x.constant.abs() > 0.0 {
                        return Err(AssemblyError::OneSided {
                            carrier,
                            side,
                            key: series_key(&e.role, &e.component),
                            unit: i + 1,
                        });
                    }
                }
            }
        }
        for i in 0..ledger.n {
            let mut row = LinExpr::new();
            for e in &entries {
                let sign = if e.side == Side::Source { 1.0 } else { -1.0 };
                row.add_expr(&e.series[i], sign);
            }
            model.add_constraint(row, Sense::Eq, 0.0, format!("balance.{carrier}.{}", i + 1))?;
        }
    }
    Ok(())
}

/// Sum of financial inputs minus financial outputs over the horizon.
pub fn objective_expr(ledger: &BalanceLedger) -> LinExpr {
    let mut obj = LinExpr::new();
    for e in &ledger.financial {
        let sign = match e.kind {
            Financial::Input => 1.0,
            Financial::Output => -1.0,
        };
        for x in &e.series {
            obj.add_expr(x, sign);
        }
    }
    obj.normalized()
}

pub fn build_objective(model: &mut Model, ledger: &BalanceLedger) -> Result<(), AssemblyError> {
    model.set_objective(objective_expr(ledger))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rounding() {
        let g = TimeGrid::new(96, 0.25).unwrap();
        assert_eq!(g.units_ceil(1.25), 5);
        assert_eq!(g.units_ceil(0.3), 2);
        assert_eq!(g.units_floor(0.3), 1);
        let g = TimeGrid::new(10, 0.1).unwrap();
        assert_eq!(g.units_ceil(0.3), 3);
        assert_eq!(g.units_floor(0.3), 3);
        assert!(TimeGrid::new(0, 0.25).is_err());
    }

    #[test]
    fn grid_only_demand_forces_supply() {
        let mut m = Model::new();
        let mut ledger = BalanceLedger::new(3);
        let supply: Vec<_> = (1..=3).map(|i| m.add_continuous(format!("s{i}"), 0.0, 10.0).unwrap()).collect();
        ledger
            .add_power(Carrier::Electric, Side::Source, "Grid", "electricOutputPower", supply.iter().map(|&v| v.into()).collect())
            .unwrap();
        ledger.add_power(Carrier::Electric, Side::Sink, "Usage", "electricInputPower", vec![LinExpr::constant(2.0); 3]).unwrap();
        build_balances(&mut m, &ledger).unwrap();
        assert_eq!(m.num_constraints(), 3);
        assert_eq!(m.constraints_with_prefix("balance.heat").count(), 0);
        for c in m.constraints() {
            assert_eq!(c.sense, Sense::Eq);
            assert_eq!(c.rhs, 2.0);
        }
    }

    #[test]
    fn one_sided_nonzero_is_rejected() {
        let mut m = Model::new();
        let mut ledger = BalanceLedger::new(2);
        ledger.add_power(Carrier::Heat, Side::Sink, "Usage", "thermalInputPower", vec![LinExpr::constant(1.0); 2]).unwrap();
        assert!(matches!(build_balances(&mut m, &ledger), Err(AssemblyError::OneSided { .. })));
    }

    #[test]
    fn repeated_roles_merge_and_objective_signs() {
        let mut m = Model::new();
        let a = m.add_continuous("a", 0.0, 1.0).unwrap();
        let mut ledger = BalanceLedger::new(1);
        ledger.add_financial(Financial::Input, "Grid", vec![3.0 * a]).unwrap();
        ledger.add_financial(Financial::Input, "Grid", vec![LinExpr::constant(1.0)]).unwrap();
        ledger.add_financial(Financial::Output, "Grid", vec![LinExpr::from(a)]).unwrap();
        assert_eq!(ledger.financial.len(), 2);
        let obj = objective_expr(&ledger);
        assert_eq!(obj.terms, vec![(a, 2.0)]);
        assert_eq!(obj.constant, 1.0);
    }

    #[test]
    fn length_is_checked() {
        let mut ledger = BalanceLedger::new(2);
        assert!(matches!(
            ledger.add_state("B", "level", vec![LinExpr::new()]),
            Err(AssemblyError::Length { found: 1, expected: 2, .. })
        ));
    }
}
