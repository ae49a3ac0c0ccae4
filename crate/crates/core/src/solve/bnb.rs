//! Depth-first branch-and-bound with best-bound backtracking.
//!
//! A dive re-optimizes the parent's tableau with the dual simplex; a node
//! taken from the open list restarts from a copy of the root tableau. The
//! branching variable is the most fractional one, ties to the lowest index.
//! When every feasible objective value lies on a lattice `c + g Z`, nodes
//! whose bound cannot reach the next lattice point below the incumbent are
//! pruned.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use web_time::Instant;

use crate::milp::Model;

use super::presolve::{presolve, PresolveOutcome, Reduced};
use super::simplex::{LpFailure, LpOutcome, LpProblem, Tableau};
use super::{Solution, SolveError, SolveOptions, SolveStats, Status};

#[derive(Debug, Clone)]
struct Node {
    /// Bound changes from the root, applied in order.
    path: Vec<(usize, f64, f64)>,
    bound: f64,
    seq: usize,
}

struct Open(Node);

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    // BinaryHeap is a max-heap: the smallest bound, then the oldest node,
    // must compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

fn lp_error(e: LpFailure) -> SolveError {
    SolveError::Numerical(format!("simplex stopped: {e:?}"))
}

struct Search<'a> {
    red: &'a Reduced,
    root: Tableau,
    deadline: Option<Instant>,
    pivots: usize,
}

impl Search<'_> {
    fn node_bounds(&self, path: &[(usize, f64, f64)]) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.red.lp.lo.clone();
        let mut hi = self.red.lp.hi.clone();
        for &(j, l, h) in path {
            lo[j] = lo[j].max(l);
            hi[j] = hi[j].min(h);
        }
        (lo, hi)
    }

    /// Re-optimizes `tab` under new bounds, falling back to a fresh solve
    /// when the basis cannot be reused.
    fn reoptimize(&mut self, tab: &mut Tableau, lo: &[f64], hi: &[f64]) -> Result<LpOutcome, LpFailure> {
        let before = tab.pivots;
        let out = match tab.reoptimize(lo, hi, self.deadline) {
            Err(LpFailure::NotDualFeasible) | Err(LpFailure::IterationLimit) => {
                let mut lp = self.red.lp.clone();
                lp.lo = lo.to_vec();
                lp.hi = hi.to_vec();
                let (fresh, out) = Tableau::solve_from_scratch(&lp, self.deadline)?;
                *tab = fresh;
                self.pivots += tab.pivots;
                return Ok(out);
            }
            other => other,
        };
        self.pivots += tab.pivots.saturating_sub(before);
        out
    }
}

fn float_gcd(mut a: f64, mut b: f64) -> f64 {
    let tol = 1e-9 * a.max(b);
    while b > tol {
        (a, b) = (b, a % b);
    }
    a
}

/// Spacing `g` of the objective values of integral points, if there is one.
/// A continuous column with a cost is only accepted when some equality row
/// defines it from integral columns; its cost is then moved onto those.
fn objective_step(lp: &LpProblem, integral: &[bool]) -> Option<f64> {
    let mut coef: Vec<f64> = (0..lp.n).map(|j| if integral[j] { lp.cost[j] } else { 0.0 }).collect();
    let mut defining: Vec<Option<usize>> = vec![None; lp.n];
    for (r, terms) in lp.rows.iter().enumerate() {
        if lp.row_lo[r] != lp.row_hi[r] {
            continue;
        }
        let mut continuous = terms.iter().filter(|&&(k, a)| !integral[k] && a != 0.0);
        if let (Some(&(j, _)), None) = (continuous.next(), continuous.next()) {
            defining[j].get_or_insert(r);
        }
    }
    for j in (0..lp.n).filter(|&j| !integral[j] && lp.cost[j] != 0.0) {
        let r = defining[j]?;
        let a_j = lp.rows[r].iter().find(|&&(k, _)| k == j).map(|&(_, a)| a)?;
        for &(k, a) in &lp.rows[r] {
            if k != j {
                coef[k] -= lp.cost[j] * a / a_j;
            }
        }
    }
    let mags: Vec<f64> = coef.iter().map(|c| c.abs()).filter(|&c| c > 1e-12).collect();
    let largest = mags.iter().cloned().fold(0.0, f64::max);
    let g = mags.iter().cloned().reduce(float_gcd)?;
    if g < 1e-6 * largest {
        return None;
    }
    let on_lattice = mags.iter().all(|&c| {
        let q = c / g;
        (q - q.round()).abs() <= 1e-9 * q.max(1.0)
    });
    on_lattice.then_some(g)
}

pub(crate) fn branch_and_bound(model: &Model, options: &SolveOptions) -> Result<Solution, SolveError> {
    let start = Instant::now();
    let deadline = options.time_limit.map(|t| start + t);
    let stats = |nodes: usize, pivots: usize| SolveStats { nodes, lp_pivots: pivots, seconds: start.elapsed().as_secs_f64() };

    let (outcome, reduced) = presolve(model, None);
    let red = match (outcome, reduced) {
        (PresolveOutcome::Reduced, Some(r)) => r,
        _ => return Ok(Solution::without_values(Status::Infeasible, stats(0, 0))),
    };

    let (root, root_out) = match Tableau::solve_from_scratch(&red.lp, deadline) {
        Ok(r) => r,
        Err(LpFailure::Deadline) => return Ok(Solution::without_values(Status::TimeLimit, stats(1, 0))),
        Err(e) => return Err(lp_error(e)),
    };
    let root_pivots = root.pivots;
    match root_out {
        LpOutcome::Optimal => {}
        LpOutcome::Infeasible => return Ok(Solution::without_values(Status::Infeasible, stats(1, root_pivots))),
        LpOutcome::Unbounded => return Ok(Solution::without_values(Status::Unbounded, stats(1, root_pivots))),
    }

    let step = objective_step(&red.lp, &red.integral);
    // A node is worth exploring only if its bound is below this.
    let cutoff = |best: f64| match step {
        Some(g) if g - 1e-7 * (1.0 + best.abs()) > options.abs_gap => best - g + 1e-7 * (1.0 + best.abs()),
        _ => best - options.abs_gap,
    };

    let mut search = Search { red: &red, root: root.clone(), deadline, pivots: root_pivots };
    let mut tab = root;
    let mut open: BinaryHeap<Open> = BinaryHeap::new();
    let mut pending = Some(Node { path: Vec::new(), bound: f64::NEG_INFINITY, seq: 0 });
    let mut seq = 1usize;
    let mut nodes = 0usize;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut limited = false;

    loop {
        let (node, warm) = match pending.take() {
            Some(n) => (n, true),
            None => match open.pop() {
                Some(Open(n)) => (n, false),
                None => break,
            },
        };
        if let Some((_, best)) = &incumbent {
            if node.bound >= cutoff(*best) {
                continue;
            }
        }
        if deadline.is_some_and(|d| Instant::now() > d) || options.node_limit.is_some_and(|l| nodes >= l) {
            open.push(Open(node));
            limited = true;
            break;
        }
        nodes += 1;
        let (lo, hi) = search.node_bounds(&node.path);
        if !warm {
            tab = search.root.clone();
        }
        let out = match search.reoptimize(&mut tab, &lo, &hi) {
            Ok(o) => o,
            Err(LpFailure::Deadline) => {
                open.push(Open(node));
                limited = true;
                break;
            }
            Err(e) => return Err(lp_error(e)),
        };
        match out {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => return Err(SolveError::Numerical("unbounded node under a bounded root".into())),
            LpOutcome::Optimal => {}
        }
        let obj = tab.objective();
        if let Some((_, best)) = &incumbent {
            if obj >= cutoff(*best) {
                continue;
            }
        }
        let x = tab.structural_values();
        let mut branch: Option<(usize, f64)> = None;
        let mut best_dist = options.int_tol;
        for (j, &is_int) in red.integral.iter().enumerate() {
            if !is_int {
                continue;
            }
            let frac = x[j] - x[j].floor();
            let dist = frac.min(1.0 - frac);
            if dist > best_dist {
                best_dist = dist;
                branch = Some((j, x[j]));
            }
        }
        match branch {
            None => incumbent = Some((x.to_vec(), obj)),
            Some((j, v)) => {
                let down = (j, f64::NEG_INFINITY, v.floor());
                let up = (j, v.ceil(), f64::INFINITY);
                let (first, second) = if v - v.floor() >= 0.5 { (up, down) } else { (down, up) };
                let mut later = node.path.clone();
                later.push(second);
                open.push(Open(Node { path: later, bound: obj, seq }));
                seq += 1;
                let mut next = node.path;
                next.push(first);
                pending = Some(Node { path: next, bound: obj, seq });
                seq += 1;
            }
        }
    }

    let Some((x, obj)) = incumbent else {
        let status = if limited { Status::TimeLimit } else { Status::Infeasible };
        return Ok(Solution::without_values(status, stats(nodes, search.pivots)));
    };

    // Polish: fix the integers at their rounded values and re-solve the LP so
    // the continuous part is consistent to working precision.
    let mut lo = red.lp.lo.clone();
    let mut hi = red.lp.hi.clone();
    for (j, &is_int) in red.integral.iter().enumerate() {
        if is_int {
            lo[j] = x[j].round();
            hi[j] = x[j].round();
        }
    }
    let mut polish = search.root.clone();
    let polished = match search.reoptimize(&mut polish, &lo, &hi) {
        Ok(LpOutcome::Optimal) => polish.structural_values().to_vec(),
        _ => x,
    };

    let mut values = vec![0.0; model.num_vars()];
    for (j, f) in red.fixed.iter().enumerate() {
        if let Some(v) = f {
            values[j] = *v;
        }
    }
    for (k, &j) in red.cols.iter().enumerate() {
        let decl = &model.vars()[j];
        let (l, h) = decl.domain.bounds();
        let mut v = polished[k].clamp(l, h);
        if decl.domain.is_integral() {
            v = v.round();
        }
        values[j] = v;
    }
    let objective = model.objective().eval(&values);

    let status = if limited {
        let bound = open.iter().map(|o| o.0.bound).fold(obj, f64::min);
        if obj - bound <= options.abs_gap || bound >= cutoff(obj) {
            Status::Optimal
        } else {
            Status::TimeLimit
        }
    } else {
        Status::Optimal
    };
    Ok(Solution { status, values, objective, stats: stats(nodes, search.pivots) })
}
