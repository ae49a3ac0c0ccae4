//! Solver backends and schedule extraction.
//!
//! `solve_builtin` is an exact branch-and-bound over the dense simplex in
//! [`simplex`]; `solve_external` hands an LP file to a separate solver
//! process. Both results go through the same independent row check.

mod bnb;
pub mod external;
mod presolve;
mod schedule;
mod simplex;

use std::time::Duration;

use thiserror::Error;

use crate::milp::{Model, VarId};

pub use external::{solve_external, ExternalSolver, SolutionFormat};
pub use schedule::{extract_schedule, Schedule};

/// Row tolerance used when independently checking any returned solution.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Builtin,
    External(ExternalSolver),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub backend: Backend,
    pub abs_gap: f64,
    pub time_limit: Option<Duration>,
    pub int_tol: f64,
    pub node_limit: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { backend: Backend::Builtin, abs_gap: 1e-6, time_limit: None, int_tol: 1e-6, node_limit: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Optimal,
    /// Feasible with the stated absolute gap to the best bound.
    Feasible { gap: f64 },
    Infeasible,
    Unbounded,
    TimeLimit,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible { .. } => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::TimeLimit => "timeLimit",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: usize,
    pub lp_pivots: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Indexed by [`VarId::index`]; empty when there is no solution.
    pub values: Vec<f64>,
    pub objective: f64,
    pub stats: SolveStats,
}

impl Solution {
    /// True when an assignment came back; a time limit may or may not
    /// carry one.
    pub fn has_solution(&self) -> bool {
        !self.values.is_empty() || (self.status == Status::Optimal && self.objective.is_finite())
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.index()]
    }

    pub fn value_by_name(&self, model: &Model, name: &str) -> Option<f64> {
        model.var_by_name(name).map(|v| self.values[v.index()])
    }

    pub(crate) fn without_values(status: Status, stats: SolveStats) -> Self {
        Solution { status, values: Vec::new(), objective: f64::NAN, stats }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error("could not start solver `{command}`: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("solver `{command}` failed ({status}): {stderr}")]
    Process { command: String, status: String, stderr: String },
    #[error("cannot parse solver output: {0}")]
    Parse(String),
    #[error("solver returned a solution violating `{tag}` by {violation:e}")]
    SolverInconsistency { tag: String, violation: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Solves with whichever backend the options select.
pub fn solve(model: &Model, options: &SolveOptions) -> Result<Solution, SolveError> {
    match &options.backend {
        Backend::Builtin => solve_builtin(model, options),
        Backend::External(ext) => solve_external(model, ext, options),
    }
}

pub fn solve_builtin(model: &Model, options: &SolveOptions) -> Result<Solution, SolveError> {
    if !(options.abs_gap > 0.0) || !(options.int_tol > 0.0) {
        return Err(SolveError::Options("tolerances must be positive".into()));
    }
    let solution = bnb::branch_and_bound(model, options)?;
    if solution.has_solution() {
        verify(model, &solution.values, options.int_tol)?;
    }
    Ok(solution)
}

/// Independent feasibility check of an assignment against the model.
pub fn verify(model: &Model, values: &[f64], int_tol: f64) -> Result<(), SolveError> {
    if values.len() != model.num_vars() {
        return Err(SolveError::Parse(format!("expected {} values, got {}", model.num_vars(), values.len())));
    }
    for (decl, &x) in model.vars().iter().zip(values) {
        let (lo, hi) = decl.domain.bounds();
        let viol = (lo - x).max(x - hi).max(0.0);
        if viol > VERIFY_TOL || !x.is_finite() {
            return Err(SolveError::SolverInconsistency { tag: format!("bounds of {}", decl.name), violation: viol });
        }
        if decl.domain.is_integral() && (x - x.round()).abs() > int_tol {
            return Err(SolveError::SolverInconsistency {
                tag: format!("integrality of {}", decl.name),
                violation: (x - x.round()).abs(),
            });
        }
    }
    for c in model.constraints() {
        let v = c.violation(values);
        if v > VERIFY_TOL {
            return Err(SolveError::SolverInconsistency { tag: c.tag.clone(), violation: v });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, Sense};

    #[test]
    fn rounding_forced() {
        let mut m = Model::new();
        let x = m.add_binary("x").unwrap();
        m.add_constraint(LinExpr::from(x), Sense::Ge, 0.3, "lb").unwrap();
        m.set_objective(LinExpr::from(x)).unwrap();
        let s = solve_builtin(&m, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.value(x), 1.0);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_pair() {
        let mut m = Model::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_constraint(LinExpr::from(x), Sense::Le, 0.0, "ub").unwrap();
        m.add_constraint(LinExpr::from(x), Sense::Ge, 1.0, "lb").unwrap();
        let s = solve_builtin(&m, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, Status::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut m = Model::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        let y = m.add_integer("y", 0.0, 3.0).unwrap();
        m.add_constraint(x - y, Sense::Ge, 0.0, "r").unwrap();
        m.set_objective(-1.0 * x).unwrap();
        let s = solve_builtin(&m, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, Status::Unbounded);
    }

    #[test]
    fn small_knapsack() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = Model::new();
        let a = m.add_integer("a", 0.0, 10.0).unwrap();
        let b = m.add_integer("b", 0.0, 10.0).unwrap();
        let c = m.add_integer("c", 0.0, 10.0).unwrap();
        m.add_constraint(2.0 * a + 3.0 * b + c, Sense::Le, 5.0, "r1").unwrap();
        m.add_constraint(4.0 * a + b + 2.0 * c, Sense::Le, 11.0, "r2").unwrap();
        m.add_constraint(3.0 * a + 4.0 * b + 2.0 * c, Sense::Le, 8.0, "r3").unwrap();
        m.set_objective(-5.0 * a - 4.0 * b - 3.0 * c).unwrap();
        let s = solve_builtin(&m, &SolveOptions::default()).unwrap();
        // Enumeration gives 13 at (2, 0, 1).
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective + 13.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_values() {
        let mut m = Model::new();
        let xs: Vec<_> = (0..6).map(|i| m.add_binary(format!("x{i}")).unwrap()).collect();
        let mut e = LinExpr::new();
        for &x in &xs {
            e += x;
        }
        m.add_constraint(e.clone(), Sense::Ge, 2.5, "cover").unwrap();
        m.set_objective(e).unwrap();
        let a = solve_builtin(&m, &SolveOptions::default()).unwrap();
        let b = solve_builtin(&m, &SolveOptions::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert!((a.objective - 3.0).abs() < 1e-9);
    }
}
