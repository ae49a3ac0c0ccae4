//! Linear reformulations of products, absolute values, conjunctions and
//! table lookups. Every builder only appends variables and rows.

use thiserror::Error;

use crate::milp::{LinExpr, Model, ModelError, Sense, VarId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearizeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("`{0}`: operand bounds must be finite")]
    Unbounded(String),
    #[error("`{0}`: lookup table is empty")]
    EmptyTable(String),
    #[error("`{name}`: argument range [{lo}, {hi}] is outside the table indices 1..={len}")]
    OutsideTable { name: String, lo: f64, hi: f64, len: usize },
}

pub type Result<T> = std::result::Result<T, LinearizeError>;

/// `V = alpha * u` for a binary `alpha` and `u` in `[u_min, u_max]`.
pub fn product_bin_bounded(
    model: &mut Model,
    name: &str,
    alpha: VarId,
    u: &LinExpr,
    (u_min, u_max): (f64, f64),
) -> Result<VarId> {
    if !u_min.is_finite() || !u_max.is_finite() {
        return Err(LinearizeError::Unbounded(name.to_string()));
    }
    if u_min > u_max {
        return Err(ModelError::InvalidBounds { name: name.to_string(), lo: u_min, hi: u_max }.into());
    }
    let m = u_min.abs().max(u_max.abs());
    if m > 0.0 {
        model.record_big_m(format!("{name}.prod"), m, m)?;
    }
    let v = model.add_continuous(name, u_min.min(0.0), u_max.max(0.0))?;
    model.add_row(u_min * alpha, Sense::Le, v, format!("{name}.prod.a"))?;
    model.add_row(v, Sense::Le, u_max * alpha, format!("{name}.prod.b"))?;
    // u - u_max (1 - alpha) <= V <= u - u_min (1 - alpha)
    model.add_row(u.clone() - u_max + u_max * alpha, Sense::Le, v, format!("{name}.prod.c"))?;
    model.add_row(v, Sense::Le, u.clone() - u_min + u_min * alpha, format!("{name}.prod.d"))?;
    Ok(v)
}

/// Same as [`product_bin_bounded`] with the interval taken from the
/// variable bounds of `u`.
pub fn product_bin(model: &mut Model, name: &str, alpha: VarId, u: &LinExpr) -> Result<VarId> {
    let bounds = u.bounds(model);
    product_bin_bounded(model, name, alpha, u, bounds)
}

/// `X = |b - a|` given `|b - a| <= bound`.
///
/// Uses one product: `X = (a - b) + 2 beta (b - a)`, which equals
/// `beta (b - a) + (1 - beta)(a - b)`.
pub fn abs_diff(model: &mut Model, name: &str, a: &LinExpr, b: &LinExpr, bound: f64) -> Result<VarId> {
    if !bound.is_finite() || bound < 0.0 {
        return Err(LinearizeError::Unbounded(name.to_string()));
    }
    let beta = model.add_binary(format!("{name}.beta"))?;
    let diff = b.clone() - a.clone();
    let p = product_bin_bounded(model, &format!("{name}.bdiff"), beta, &diff, (-bound, bound))?;
    let x = model.add_continuous(name, 0.0, bound)?;
    model.add_row(x, Sense::Eq, a.clone() - b.clone() + 2.0 * p, format!("{name}.abs"))?;
    Ok(x)
}

/// `|x_i - x_{i-1}|` for on/off binaries, valid once the start/stop
/// compatibility rows are in place.
pub fn binary_abs_diff(start: VarId, stop: VarId) -> LinExpr {
    start + stop
}

/// `gamma = a AND b`.
pub fn bool_and(model: &mut Model, name: &str, a: VarId, b: VarId) -> Result<VarId> {
    let g = model.add_binary(name)?;
    model.add_row(g, Sense::Ge, a + b - 1.0, format!("{name}.and.ab"))?;
    model.add_row(g, Sense::Le, a, format!("{name}.and.a"))?;
    model.add_row(g, Sense::Le, b, format!("{name}.and.b"))?;
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub value: LinExpr,
    pub lambdas: Vec<VarId>,
}

fn check_range(name: &str, len: usize, (lo, hi): (f64, f64)) -> Result<()> {
    if len == 0 {
        return Err(LinearizeError::EmptyTable(name.to_string()));
    }
    if lo < 1.0 || hi > len as f64 || lo > hi {
        return Err(LinearizeError::OutsideTable { name: name.to_string(), lo, hi, len });
    }
    Ok(())
}

/// `value = table[x - 1]` for an integer-valued `x` in `1..=table.len()`,
/// with one indicator per table entry.
pub fn select_value(model: &mut Model, name: &str, x: &LinExpr, table: &[f64]) -> Result<Selection> {
    let range = x.bounds(model);
    select_value_in(model, name, x, range, table)
}

/// Like [`select_value`] for an argument whose range is known structurally
/// rather than from variable bounds.
pub fn select_value_in(
    model: &mut Model,
    name: &str,
    x: &LinExpr,
    range: (f64, f64),
    table: &[f64],
) -> Result<Selection> {
    check_range(name, table.len(), range)?;
    let runs: Vec<(usize, usize, f64)> = table.iter().enumerate().map(|(i, &f)| (i + 1, i + 1, f)).collect();
    indicator_lookup(model, name, x, table.len(), &runs)
}

/// Lookup with one indicator per run of equal consecutive table values.
/// Exact for integer-valued `x`; needs far fewer binaries on tables with
/// plateaus.
pub fn select_grouped_in(
    model: &mut Model,
    name: &str,
    x: &LinExpr,
    range: (f64, f64),
    table: &[f64],
) -> Result<Selection> {
    check_range(name, table.len(), range)?;
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &f) in table.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.2 == f => run.1 = i + 1,
            _ => runs.push((i + 1, i + 1, f)),
        }
    }
    indicator_lookup(model, name, x, table.len(), &runs)
}

fn indicator_lookup(
    model: &mut Model,
    name: &str,
    x: &LinExpr,
    len: usize,
    runs: &[(usize, usize, f64)],
) -> Result<Selection> {
    let m = model.record_big_m(format!("{name}.select"), len as f64, (len - 1) as f64)?;
    let mut lambdas = Vec::with_capacity(runs.len());
    let mut sum = LinExpr::new();
    let mut value = LinExpr::new();
    for (g, &(a, b, f)) in runs.iter().enumerate() {
        let lam = model.add_binary(format!("{name}.lambda{}", g + 1))?;
        // lambda = 1 implies a <= x <= b
        model.add_row(x.clone() - a as f64, Sense::Ge, -m + m * lam, format!("{name}.select.lo{}", g + 1))?;
        model.add_row(x.clone() - b as f64, Sense::Le, m - m * lam, format!("{name}.select.hi{}", g + 1))?;
        sum += lam;
        value.add_term(lam, f);
        lambdas.push(lam);
    }
    model.add_constraint(sum, Sense::Eq, 1.0, format!("{name}.select.one"))?;
    Ok(Selection { value, lambdas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{solve_builtin, SolveOptions, Status};

    /// Minimum and maximum of `target` over the feasible set.
    fn range_of(model: &Model, target: &LinExpr) -> Option<(f64, f64)> {
        let mut m = model.clone();
        m.set_objective(target.clone()).unwrap();
        let lo = solve_builtin(&m, &SolveOptions::default()).unwrap();
        if lo.status == Status::Infeasible {
            return None;
        }
        m.set_objective(-target.clone()).unwrap();
        let hi = solve_builtin(&m, &SolveOptions::default()).unwrap();
        Some((lo.objective, -hi.objective))
    }

    #[test]
    fn product_cases() {
        for alpha_v in [0.0, 1.0] {
            for u_v in [-10.0, -3.0, 0.0, 5.0, 10.0] {
                let mut m = Model::new();
                let a = m.add_binary("a").unwrap();
                let u = m.add_continuous("u", -10.0, 10.0).unwrap();
                let v = product_bin_bounded(&mut m, "v", a, &u.into(), (-10.0, 10.0)).unwrap();
                m.fix(a, alpha_v).unwrap();
                m.fix(u, u_v).unwrap();
                let (lo, hi) = range_of(&m, &v.into()).unwrap();
                assert!((lo - alpha_v * u_v).abs() < 1e-9 && (hi - alpha_v * u_v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn product_needs_finite_bounds() {
        let mut m = Model::new();
        let a = m.add_binary("a").unwrap();
        let u = m.add_continuous("u", 0.0, f64::INFINITY).unwrap();
        assert!(matches!(product_bin(&mut m, "v", a, &u.into()), Err(LinearizeError::Unbounded(_))));
    }

    #[test]
    fn abs_diff_cases() {
        for (av, bv) in [(3.0, 3.0), (2.0, 5.0), (5.0, 2.0)] {
            let mut m = Model::new();
            let a = m.add_continuous("a", 0.0, 10.0).unwrap();
            let b = m.add_continuous("b", 0.0, 10.0).unwrap();
            let x = abs_diff(&mut m, "x", &a.into(), &b.into(), 10.0).unwrap();
            m.fix(a, av).unwrap();
            m.fix(b, bv).unwrap();
            let (lo, hi) = range_of(&m, &x.into()).unwrap();
            let want = f64::abs(bv - av);
            assert!((lo - want).abs() < 1e-9 && (hi - want).abs() < 1e-9, "{av} {bv}: {lo} {hi}");
        }
    }

    #[test]
    fn and_truth_table() {
        for av in [0.0, 1.0] {
            for bv in [0.0, 1.0] {
                let mut m = Model::new();
                let a = m.add_binary("a").unwrap();
                let b = m.add_binary("b").unwrap();
                let g = bool_and(&mut m, "g", a, b).unwrap();
                m.fix(a, av).unwrap();
                m.fix(b, bv).unwrap();
                assert_eq!(range_of(&m, &g.into()), Some((av * bv, av * bv)));
            }
        }
    }

    #[test]
    fn binary_abs_diff_matches_chain() {
        for x0 in [0.0, 1.0] {
            for x1 in [0.0, 1.0] {
                let mut m = Model::new();
                let p = m.add_binary("p").unwrap();
                let x = m.add_binary("x").unwrap();
                let start = m.add_binary("start").unwrap();
                let stop = m.add_binary("stop").unwrap();
                m.add_row(start, Sense::Ge, x - p, "s1").unwrap();
                m.add_row(start, Sense::Le, x, "s2").unwrap();
                m.add_row(start, Sense::Le, 1.0 - LinExpr::from(p), "s3").unwrap();
                m.add_row(stop, Sense::Ge, p - x, "t1").unwrap();
                m.add_row(stop, Sense::Le, p, "t2").unwrap();
                m.add_row(stop, Sense::Le, 1.0 - LinExpr::from(x), "t3").unwrap();
                m.fix(p, x0).unwrap();
                m.fix(x, x1).unwrap();
                let e = binary_abs_diff(start, stop);
                let want = f64::abs(x1 - x0);
                assert_eq!(range_of(&m, &e), Some((want, want)));
            }
        }
    }

    #[test]
    fn lookup_direct_and_boundary() {
        let table = [1.0, 1.0, 2.0, 4.0];
        for (xv, want) in [(3.0, 2.0), (1.0, 1.0), (4.0, 4.0)] {
            let mut m = Model::new();
            let x = m.add_integer("x", 1.0, 4.0).unwrap();
            let sel = select_value(&mut m, "f", &x.into(), &table).unwrap();
            m.fix(x, xv).unwrap();
            assert_eq!(range_of(&m, &sel.value), Some((want, want)));
        }
    }

    #[test]
    fn lookup_rejects_empty_and_out_of_range() {
        let mut m = Model::new();
        let x = m.add_integer("x", 1.0, 4.0).unwrap();
        assert!(matches!(select_value(&mut m, "f", &x.into(), &[]), Err(LinearizeError::EmptyTable(_))));
        let y = m.add_integer("y", 0.0, 2.0).unwrap();
        assert!(matches!(
            select_value(&mut m, "g", &y.into(), &[1.0, 2.0]),
            Err(LinearizeError::OutsideTable { .. })
        ));
    }

    #[test]
    fn grouped_lookup_matches_table() {
        let table = [1.0, 1.0, 2.0, 2.0, 2.0, 5.0];
        for xv in 1..=6 {
            let mut m = Model::new();
            let x = m.add_integer("x", 1.0, 6.0).unwrap();
            let sel = select_grouped_in(&mut m, "f", &x.into(), (1.0, 6.0), &table).unwrap();
            assert_eq!(sel.lambdas.len(), 3);
            m.fix(x, xv as f64).unwrap();
            let want = table[xv - 1];
            assert_eq!(range_of(&m, &sel.value), Some((want, want)));
        }
    }

    #[test]
    fn big_ms_are_recorded() {
        let mut m = Model::new();
        let x = m.add_integer("x", 1.0, 5.0).unwrap();
        select_value(&mut m, "f", &x.into(), &[1.0; 5]).unwrap();
        assert!(m.big_ms().iter().any(|b| b.tag == "f.select" && b.value == 5.0 && b.required == 4.0));
    }
}
