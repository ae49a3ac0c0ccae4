//! Activity-based bound tightening and removal of fixed columns and
//! redundant rows. Nothing else is reformulated.

use crate::milp::{Model, Sense};

use super::simplex::LpProblem;

const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub lp: LpProblem,
    /// Reduced column -> model variable index.
    pub cols: Vec<usize>,
    pub integral: Vec<bool>,
    /// Value of every model variable that presolve fixed.
    pub fixed: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PresolveOutcome {
    Reduced,
    Infeasible,
}

struct Row {
    terms: Vec<(usize, f64)>,
    lo: f64,
    hi: f64,
}

fn row_bounds(sense: Sense, rhs: f64) -> (f64, f64) {
    match sense {
        Sense::Le => (f64::NEG_INFINITY, rhs),
        Sense::Ge => (rhs, f64::INFINITY),
        Sense::Eq => (rhs, rhs),
    }
}

/// Minimum and maximum activity, plus the number of infinite contributions.
fn activity(terms: &[(usize, f64)], lo: &[f64], hi: &[f64]) -> (f64, usize, f64, usize) {
    let (mut amin, mut nmin, mut amax, mut nmax) = (0.0, 0, 0.0, 0);
    for &(j, a) in terms {
        let (l, h) = if a > 0.0 { (a * lo[j], a * hi[j]) } else { (a * hi[j], a * lo[j]) };
        if l.is_finite() {
            amin += l;
        } else {
            nmin += 1;
        }
        if h.is_finite() {
            amax += h;
        } else {
            nmax += 1;
        }
    }
    (amin, nmin, amax, nmax)
}

fn round_integral(lo: &mut f64, hi: &mut f64) {
    *lo = (*lo - 1e-6).ceil();
    *hi = (*hi + 1e-6).floor();
}

/// Tightens `lo`/`hi` in place. Returns false when a domain becomes empty.
fn tighten(rows: &[Row], lo: &mut [f64], hi: &mut [f64], integral: &[bool], passes: usize) -> bool {
    for _ in 0..passes {
        let mut changed = false;
        for row in rows {
            let (amin, nmin, amax, nmax) = activity(&row.terms, lo, hi);
            for &(j, a) in &row.terms {
                let (cl, ch) = if a > 0.0 { (a * lo[j], a * hi[j]) } else { (a * hi[j], a * lo[j]) };
                // Residual activity of the other terms.
                let rest_min = if cl.is_finite() {
                    if nmin == 0 { amin - cl } else { f64::NEG_INFINITY }
                } else if nmin == 1 {
                    amin
                } else {
                    f64::NEG_INFINITY
                };
                let rest_max = if ch.is_finite() {
                    if nmax == 0 { amax - ch } else { f64::INFINITY }
                } else if nmax == 1 {
                    amax
                } else {
                    f64::INFINITY
                };
                // a x in [row.lo - rest_max, row.hi - rest_min]
                let lo_ax = row.lo - rest_max;
                let hi_ax = row.hi - rest_min;
                let (mut nl, mut nh) = if a > 0.0 { (lo_ax / a, hi_ax / a) } else { (hi_ax / a, lo_ax / a) };
                if nl.is_nan() {
                    nl = f64::NEG_INFINITY;
                }
                if nh.is_nan() {
                    nh = f64::INFINITY;
                }
                if integral[j] {
                    round_integral(&mut nl, &mut nh);
                }
                let scale = 1.0 + lo[j].abs().max(hi[j].abs()).min(1e6);
                if nl > lo[j] + 1e-7 * scale {
                    lo[j] = nl;
                    changed = true;
                }
                if nh < hi[j] - 1e-7 * scale {
                    hi[j] = nh;
                    changed = true;
                }
                if lo[j] > hi[j] {
                    if lo[j] - hi[j] <= 1e-7 * scale && !integral[j] {
                        let mid = 0.5 * (lo[j] + hi[j]);
                        lo[j] = mid;
                        hi[j] = mid;
                    } else {
                        return false;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

pub(crate) fn presolve(model: &Model, lo_override: Option<(&[f64], &[f64])>) -> (PresolveOutcome, Option<Reduced>) {
    let nv = model.num_vars();
    let integral: Vec<bool> = model.vars().iter().map(|v| v.domain.is_integral()).collect();
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = match lo_override {
        Some((l, h)) => (l.to_vec(), h.to_vec()),
        None => model.vars().iter().map(|v| v.domain.bounds()).unzip(),
    };
    for j in 0..nv {
        if integral[j] {
            round_integral(&mut lo[j], &mut hi[j]);
        }
        if lo[j] > hi[j] {
            return (PresolveOutcome::Infeasible, None);
        }
    }
    let rows: Vec<Row> = model
        .constraints()
        .iter()
        .map(|c| {
            let (l, h) = row_bounds(c.sense, c.rhs);
            Row { terms: c.lhs.terms.iter().map(|&(v, a)| (v.index(), a)).collect(), lo: l, hi: h }
        })
        .collect();
    if !tighten(&rows, &mut lo, &mut hi, &integral, 50) {
        return (PresolveOutcome::Infeasible, None);
    }
    let fixed: Vec<Option<f64>> = (0..nv).map(|j| if lo[j] == hi[j] { Some(lo[j]) } else { None }).collect();
    let mut col_of = vec![usize::MAX; nv];
    let mut cols = Vec::new();
    for j in 0..nv {
        if fixed[j].is_none() {
            col_of[j] = cols.len();
            cols.push(j);
        }
    }
    let free_lo: Vec<f64> = cols.iter().map(|&j| lo[j]).collect();
    let free_hi: Vec<f64> = cols.iter().map(|&j| hi[j]).collect();
    let mut lp_rows = Vec::new();
    let mut row_lo = Vec::new();
    let mut row_hi = Vec::new();
    for row in &rows {
        let mut shift = 0.0;
        let mut terms = Vec::new();
        for &(j, a) in &row.terms {
            match fixed[j] {
                Some(v) => shift += a * v,
                None => terms.push((col_of[j], a)),
            }
        }
        let (l, h) = (row.lo - shift, row.hi - shift);
        if terms.is_empty() {
            let tol = FEAS_TOL * (1.0 + shift.abs());
            if l > tol || h < -tol {
                return (PresolveOutcome::Infeasible, None);
            }
            continue;
        }
        let (amin, nmin, amax, nmax) = activity(&terms, &free_lo, &free_hi);
        let redundant_lo = l == f64::NEG_INFINITY || (nmin == 0 && amin >= l - FEAS_TOL * (1.0 + l.abs()));
        let redundant_hi = h == f64::INFINITY || (nmax == 0 && amax <= h + FEAS_TOL * (1.0 + h.abs()));
        if redundant_lo && redundant_hi {
            continue;
        }
        lp_rows.push(terms);
        row_lo.push(if redundant_lo { f64::NEG_INFINITY } else { l });
        row_hi.push(if redundant_hi { f64::INFINITY } else { h });
    }
    let mut cost = vec![0.0; cols.len()];
    for &(v, c) in &model.objective().terms {
        if fixed[v.index()].is_none() {
            cost[col_of[v.index()]] += c;
        }
    }
    let lp = LpProblem {
        n: cols.len(),
        rows: lp_rows,
        row_lo,
        row_hi,
        lo: free_lo,
        hi: free_hi,
        cost,
    };
    let integral_cols = cols.iter().map(|&j| integral[j]).collect();
    (
        PresolveOutcome::Reduced,
        Some(Reduced { lp, cols, integral: integral_cols, fixed }),
    )
}
