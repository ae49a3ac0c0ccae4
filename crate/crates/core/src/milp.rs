//! In-memory mixed-integer linear program: variables with domains, tagged
//! linear rows, and a linear objective that is always minimized.
//!
//! Yields enter the objective with a negative sign so that a single sense
//! covers both cost minimization and yield maximization.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("constraint `{tag}` references undeclared variable #{index}")]
    UndeclaredVariable { tag: String, index: usize },
    #[error("invalid bounds for `{name}`: [{lo}, {hi}]")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("non-finite coefficient or right-hand side in `{0}`")]
    NonFinite(String),
    #[error("variable name must not be empty")]
    EmptyName,
    #[error("constraint tag must not be empty")]
    EmptyTag,
    #[error("big-M `{tag}` = {value} is below the required bound {required}")]
    BigMTooSmall { tag: String, value: f64, required: f64 },
}

/// Opaque variable handle. Stable for the lifetime of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Continuous { lo: f64, hi: f64 },
    Integer { lo: f64, hi: f64 },
    Binary,
}

impl Domain {
    pub fn continuous(lo: f64, hi: f64) -> Self {
        Domain::Continuous { lo, hi }
    }

    pub fn integer(lo: f64, hi: f64) -> Self {
        Domain::Integer { lo, hi }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Continuous { lo, hi } | Domain::Integer { lo, hi } => (lo, hi),
            Domain::Binary => (0.0, 1.0),
        }
    }

    pub fn is_integral(&self) -> bool {
        !matches!(self, Domain::Continuous { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
}

/// Linear expression `sum(coef * var) + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: value }
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        LinExpr { terms: vec![(var, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) -> &mut Self {
        self.terms.push((var, coef));
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut out = LinExpr::new();
        out.add_expr(self, scale);
        out
    }

    /// Merges duplicate handles, drops zero coefficients and sorts by handle.
    pub fn normalized(&self) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        LinExpr { terms: merged, constant: self.constant }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Interval of the expression given per-variable bounds.
    pub fn bounds(&self, model: &Model) -> (f64, f64) {
        let mut lo = self.constant;
        let mut hi = self.constant;
        for &(v, c) in &self.normalized().terms {
            let (vl, vh) = model.var(v).domain.bounds();
            if c > 0.0 {
                lo += c * vl;
                hi += c * vh;
            } else {
                lo += c * vh;
                hi += c * vl;
            }
        }
        (lo, hi)
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl<T: Into<LinExpr>> Add<T> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: T) -> LinExpr {
        let rhs = rhs.into();
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
        self
    }
}

impl<T: Into<LinExpr>> Sub<T> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: T) -> LinExpr {
        self.add_expr(&rhs.into(), -1.0);
        self
    }
}

impl<T: Into<LinExpr>> AddAssign<T> for LinExpr {
    fn add_assign(&mut self, rhs: T) {
        let rhs = rhs.into();
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
    }
}

impl<T: Into<LinExpr>> SubAssign<T> for LinExpr {
    fn sub_assign(&mut self, rhs: T) {
        self.add_expr(&rhs.into(), -1.0);
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl Mul<f64> for VarId {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        LinExpr::term(self, rhs)
    }
}

impl Mul<VarId> for f64 {
    type Output = LinExpr;
    fn mul(self, rhs: VarId) -> LinExpr {
        LinExpr::term(rhs, self)
    }
}

impl Mul<LinExpr> for f64 {
    type Output = LinExpr;
    fn mul(self, rhs: LinExpr) -> LinExpr {
        rhs.scaled(self)
    }
}

impl<T: Into<LinExpr>> Add<T> for VarId {
    type Output = LinExpr;
    fn add(self, rhs: T) -> LinExpr {
        LinExpr::from(self) + rhs
    }
}

impl<T: Into<LinExpr>> Sub<T> for VarId {
    type Output = LinExpr;
    fn sub(self, rhs: T) -> LinExpr {
        LinExpr::from(self) - rhs
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

macro_rules! scalar_lhs {
    ($($t:ty),*) => {$(
        impl Add<$t> for f64 {
            type Output = LinExpr;
            fn add(self, rhs: $t) -> LinExpr {
                LinExpr::constant(self) + rhs
            }
        }
        impl Sub<$t> for f64 {
            type Output = LinExpr;
            fn sub(self, rhs: $t) -> LinExpr {
                LinExpr::constant(self) - rhs
            }
        }
    )*};
}
scalar_lhs!(LinExpr, VarId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstraintId(pub(crate) usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// `lhs sense rhs` with the expression constant folded into `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.lhs.eval(values)
    }

    /// Amount by which the row is violated at `values` (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Big-M constant together with the bound it must dominate.
#[derive(Debug, Clone, PartialEq)]
pub struct BigM {
    pub value: f64,
    pub tag: String,
    pub required: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    vars: Vec<VarDecl>,
    by_name: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    objective: LinExpr,
    big_ms: Vec<BigM>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, domain: Domain) -> Result<VarId, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyName);
        }
        if self.by_name.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        let (lo, hi) = domain.bounds();
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(ModelError::InvalidBounds { name, lo, hi });
        }
        let id = VarId(self.vars.len());
        self.by_name.insert(name.clone(), id);
        self.vars.push(VarDecl { name, domain });
        Ok(id)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, Domain::Binary)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> Result<VarId, ModelError> {
        self.add_var(name, Domain::continuous(lo, hi))
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> Result<VarId, ModelError> {
        self.add_var(name, Domain::integer(lo, hi))
    }

    pub fn add_constraint(
        &mut self,
        lhs: impl Into<LinExpr>,
        sense: Sense,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<ConstraintId, ModelError> {
        let tag = tag.into();
        if tag.is_empty() {
            return Err(ModelError::EmptyTag);
        }
        let lhs = lhs.into().normalized();
        if let Some(&(v, _)) = lhs.terms.iter().find(|&&(v, _)| v.0 >= self.vars.len()) {
            return Err(ModelError::UndeclaredVariable { tag, index: v.0 });
        }
        let rhs = rhs - lhs.constant;
        if !rhs.is_finite() || lhs.terms.iter().any(|&(_, c)| !c.is_finite()) {
            return Err(ModelError::NonFinite(tag));
        }
        let id = ConstraintId(self.constraints.len());
        self.constraints.push(Constraint {
            lhs: LinExpr { terms: lhs.terms, constant: 0.0 },
            sense,
            rhs,
            tag,
        });
        Ok(id)
    }

    /// Adds `lhs sense rhs` where both sides are expressions.
    pub fn add_row(
        &mut self,
        lhs: impl Into<LinExpr>,
        sense: Sense,
        rhs: impl Into<LinExpr>,
        tag: impl Into<String>,
    ) -> Result<ConstraintId, ModelError> {
        let expr = lhs.into() - rhs.into();
        self.add_constraint(expr, sense, 0.0, tag)
    }

    pub fn set_objective(&mut self, objective: impl Into<LinExpr>) -> Result<(), ModelError> {
        let objective = objective.into().normalized();
        if let Some(&(v, _)) = objective.terms.iter().find(|&&(v, _)| v.0 >= self.vars.len()) {
            return Err(ModelError::UndeclaredVariable { tag: "objective".into(), index: v.0 });
        }
        if !objective.constant.is_finite() || objective.terms.iter().any(|&(_, c)| !c.is_finite()) {
            return Err(ModelError::NonFinite("objective".into()));
        }
        self.objective = objective;
        Ok(())
    }

    /// Records a big-M constant; fails if it does not dominate `required`.
    pub fn record_big_m(&mut self, tag: impl Into<String>, value: f64, required: f64) -> Result<f64, ModelError> {
        let tag = tag.into();
        if !(value > 0.0) || value < required {
            return Err(ModelError::BigMTooSmall { tag, value, required });
        }
        self.big_ms.push(BigM { value, tag, required });
        Ok(value)
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &VarDecl {
        &self.vars[id.0]
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.vars.len()).map(VarId)
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn constraints_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (ConstraintId, &'a Constraint)> + 'a {
        self.constraints
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.tag.starts_with(prefix))
            .map(|(i, c)| (ConstraintId(i), c))
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn big_ms(&self) -> &[BigM] {
        &self.big_ms
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Tightens the bounds of a variable in place (used to fix decisions).
    pub fn set_bounds(&mut self, id: VarId, lo: f64, hi: f64) -> Result<(), ModelError> {
        let decl = &mut self.vars[id.0];
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(ModelError::InvalidBounds { name: decl.name.clone(), lo, hi });
        }
        decl.domain = match decl.domain {
            Domain::Continuous { .. } => Domain::Continuous { lo, hi },
            Domain::Integer { .. } => Domain::Integer { lo, hi },
            Domain::Binary if lo == 0.0 && hi == 1.0 => Domain::Binary,
            Domain::Binary => Domain::Integer { lo, hi },
        };
        Ok(())
    }

    pub fn fix(&mut self, id: VarId, value: f64) -> Result<(), ModelError> {
        self.set_bounds(id, value, value)
    }

    /// Largest violation over rows and variable bounds.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(d, &x)| {
                let (lo, hi) = d.domain.bounds();
                (lo - x).max(x - hi).max(0.0)
            })
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// `tag: 2 x.1 - y.1 <= 3` with variable names, for diagnostics.
    pub fn render_row(&self, c: &Constraint) -> String {
        let mut out = format!("{}:", c.tag);
        for (k, &(v, a)) in c.lhs.terms.iter().enumerate() {
            if a < 0.0 {
                out.push_str(" -");
            } else if k > 0 {
                out.push_str(" +");
            }
            if a.abs() != 1.0 {
                out += &format!(" {}", a.abs());
            }
            out += &format!(" {}", self.vars[v.0].name);
        }
        if c.lhs.terms.is_empty() {
            out.push_str(" 0");
        }
        out + &format!(" {} {}", c.sense, c.rhs)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut used = vec![false; self.vars.len()];
        let mut report = ValidationReport::default();
        for (i, c) in self.constraints.iter().enumerate() {
            for &(v, _) in &c.lhs.terms {
                used[v.0] = true;
            }
            if c.lhs.terms.is_empty() {
                let ok = match c.sense {
                    Sense::Le => 0.0 <= c.rhs,
                    Sense::Ge => 0.0 >= c.rhs,
                    Sense::Eq => c.rhs == 0.0,
                };
                if ok {
                    report.trivially_true.push(ConstraintId(i));
                } else {
                    report.infeasible_rows.push(ConstraintId(i));
                }
            }
        }
        for &(v, c) in &self.objective.terms {
            used[v.0] = true;
            let (lo, hi) = self.vars[v.0].domain.bounds();
            if (c > 0.0 && lo == f64::NEG_INFINITY) || (c < 0.0 && hi == f64::INFINITY) {
                report.unbounded_objective_vars.push(v);
            }
        }
        report.unused_vars = used
            .iter()
            .enumerate()
            .filter(|(_, &u)| !u)
            .map(|(i, _)| VarId(i))
            .collect();
        report
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub unused_vars: Vec<VarId>,
    pub infeasible_rows: Vec<ConstraintId>,
    pub trivially_true: Vec<ConstraintId>,
    pub unbounded_objective_vars: Vec<VarId>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.unused_vars.is_empty()
            && self.infeasible_rows.is_empty()
            && self.trivially_true.is_empty()
            && self.unbounded_objective_vars.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        !self.infeasible_rows.is_empty()
    }

    pub fn describe(&self, model: &Model) -> Vec<String> {
        let mut lines = Vec::new();
        for &r in &self.infeasible_rows {
            lines.push(format!("infeasible row `{}`", model.constraint(r).tag));
        }
        for &r in &self.trivially_true {
            lines.push(format!("trivially true row `{}`", model.constraint(r).tag));
        }
        for &v in &self.unbounded_objective_vars {
            lines.push(format!("objective unbounded in `{}`", model.var(v).name));
        }
        for &v in &self.unused_vars {
            lines.push(format!("unused variable `{}`", model.var(v).name));
        }
        lines
    }
}
