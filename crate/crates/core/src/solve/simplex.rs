//! Dense bounded-variable simplex on an explicit tableau.
//!
//! Every row `i` carries a logical column `s_i = a_i . x` whose bounds encode
//! the row sense, so the system is `A x - s = 0` with bounds on all columns.
//! The primal method (two phases with artificials) solves the root; the dual
//! method re-optimizes after bound changes, which is all branching does.

use web_time::Instant;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;
const REFRESH_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ColStatus {
    Basic(usize),
    Lower,
    Upper,
    /// Nonbasic free column sitting at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpFailure {
    IterationLimit,
    Deadline,
    /// The warm basis cannot be reused; re-solve from scratch.
    NotDualFeasible,
}

/// Sparse LP in row form: `lo_s <= a_i . x <= hi_s`, `lo <= x <= hi`.
#[derive(Debug, Clone)]
pub(crate) struct LpProblem {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cost: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    nc: usize,
    /// Structural column count; logicals follow, then artificials.
    n: usize,
    t: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<ColStatus>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    pub pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.nc + j]
    }

    pub fn structural_values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    /// Builds the slack-basis tableau, adding an artificial column for every
    /// row whose logical would start outside its bounds.
    pub fn new(p: &LpProblem) -> (Tableau, Vec<usize>) {
        let m = p.rows.len();
        let n = p.n;
        let mut x0: Vec<f64> = (0..n)
            .map(|j| {
                if p.lo[j].is_finite() {
                    p.lo[j]
                } else if p.hi[j].is_finite() {
                    p.hi[j]
                } else {
                    0.0
                }
            })
            .collect();
        let act: Vec<f64> = p.rows.iter().map(|r| r.iter().map(|&(j, a)| a * x0[j]).sum()).collect();
        let mut art_rows = Vec::new();
        for i in 0..m {
            if act[i] < p.row_lo[i] - PRIMAL_TOL || act[i] > p.row_hi[i] + PRIMAL_TOL {
                art_rows.push(i);
            }
        }
        let na = art_rows.len();
        let nc = n + m + na;
        let mut t = vec![0.0; m * nc];
        let mut lo = Vec::with_capacity(nc);
        let mut hi = Vec::with_capacity(nc);
        lo.extend_from_slice(&p.lo);
        hi.extend_from_slice(&p.hi);
        lo.extend_from_slice(&p.row_lo);
        hi.extend_from_slice(&p.row_hi);
        lo.extend(std::iter::repeat(0.0).take(na));
        hi.extend(std::iter::repeat(f64::INFINITY).take(na));
        let mut status = vec![ColStatus::Lower; nc];
        for j in 0..n {
            status[j] = if p.lo[j].is_finite() {
                ColStatus::Lower
            } else if p.hi[j].is_finite() {
                ColStatus::Upper
            } else {
                ColStatus::Zero
            };
        }
        let mut basis = vec![0; m];
        x0.resize(nc, 0.0);
        let mut art_of_row = vec![usize::MAX; m];
        for (k, &i) in art_rows.iter().enumerate() {
            art_of_row[i] = n + m + k;
        }
        for i in 0..m {
            let row = &mut t[i * nc..(i + 1) * nc];
            let a = art_of_row[i];
            if a == usize::MAX {
                for &(j, v) in &p.rows[i] {
                    row[j] -= v;
                }
                row[n + i] = 1.0;
                basis[i] = n + i;
                status[n + i] = ColStatus::Basic(i);
                x0[n + i] = act[i];
            } else {
                let (bound, st) = if act[i] < p.row_lo[i] {
                    (p.row_lo[i], ColStatus::Lower)
                } else {
                    (p.row_hi[i], ColStatus::Upper)
                };
                let sigma = if act[i] > bound { 1.0 } else { -1.0 };
                for &(j, v) in &p.rows[i] {
                    row[j] -= v / sigma;
                }
                row[n + i] = 1.0 / sigma;
                row[a] = 1.0;
                status[n + i] = st;
                x0[n + i] = bound;
                basis[i] = a;
                status[a] = ColStatus::Basic(i);
                x0[a] = (act[i] - bound) / sigma;
            }
        }
        let mut cost = vec![0.0; nc];
        for c in &mut cost[n + m..] {
            *c = 1.0;
        }
        let mut tab = Tableau {
            m,
            nc,
            n,
            t,
            d: vec![0.0; nc],
            basis,
            status,
            x: x0,
            lo,
            hi,
            cost,
            pivots: 0,
        };
        tab.recompute_duals();
        (tab, art_rows)
    }

    fn recompute_duals(&mut self) {
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.nc..(i + 1) * self.nc];
                for (dj, &tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.d = d;
    }

    /// Basic values from the nonbasic ones: `x_B = -T_N x_N`.
    fn recompute_basics(&mut self) {
        let nonzero: Vec<(usize, f64)> = (0..self.nc)
            .filter(|&j| !matches!(self.status[j], ColStatus::Basic(_)) && self.x[j] != 0.0)
            .map(|j| (j, self.x[j]))
            .collect();
        for i in 0..self.m {
            let row = &self.t[i * self.nc..(i + 1) * self.nc];
            let v: f64 = nonzero.iter().map(|&(j, xj)| row[j] * xj).sum();
            self.x[self.basis[i]] = -v;
        }
    }

    fn refresh(&mut self) {
        self.recompute_basics();
        self.recompute_duals();
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.nc;
        let piv = self.t[r * nc + j];
        let inv = 1.0 / piv;
        let mut prow: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        prow.push((k, *v));
                    }
                }
            }
            row[j] = 1.0;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &(k, v) in &prow {
                let nv = row[k] - f * v;
                row[k] = if nv.abs() < DROP_TOL { 0.0 } else { nv };
            }
            row[j] = 0.0;
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for &(k, v) in &prow {
                self.d[k] -= dj * v;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.basis[r] = j;
        self.status[j] = ColStatus::Basic(r);
        // Caller fixes the leaving status; default to the nearer bound.
        let xl = self.x[leaving];
        self.status[leaving] = if (xl - self.lo[leaving]).abs() <= (self.hi[leaving] - xl).abs() {
            ColStatus::Lower
        } else {
            ColStatus::Upper
        };
        self.pivots += 1;
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lo[j] == self.hi[j]
    }

    /// Primal simplex from a primal feasible basis.
    fn primal(&mut self, max_iter: usize, deadline: Option<Instant>) -> Result<LpOutcome, LpFailure> {
        let mut degenerate = 0usize;
        for it in 0..max_iter {
            if it % REFRESH_EVERY == REFRESH_EVERY - 1 {
                self.refresh();
                if let Some(dl) = deadline {
                    if Instant::now() > dl {
                        return Err(LpFailure::Deadline);
                    }
                }
            }
            let bland = degenerate > DEGENERATE_LIMIT;
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..self.nc {
                let dj = self.d[j];
                let score = match self.status[j] {
                    ColStatus::Basic(_) => continue,
                    _ if self.is_fixed(j) => continue,
                    ColStatus::Lower if dj < -DUAL_TOL => -dj,
                    ColStatus::Upper if dj > DUAL_TOL => dj,
                    ColStatus::Zero if dj.abs() > DUAL_TOL => dj.abs(),
                    _ => continue,
                };
                if bland {
                    enter = Some(j);
                    break;
                }
                if score > best {
                    best = score;
                    enter = Some(j);
                }
            }
            let Some(j) = enter else {
                return Ok(LpOutcome::Optimal);
            };
            let dir = if self.d[j] < 0.0 { 1.0 } else { -1.0 };

            // Ratio test; the entering column's own box is the first limit.
            let mut step = self.hi[j] - self.lo[j];
            let mut leave: Option<usize> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.at(i, j);
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * alpha;
                let lim = if rate < 0.0 {
                    if self.lo[b].is_finite() {
                        ((self.x[b] - self.lo[b]) / -rate).max(0.0)
                    } else {
                        continue;
                    }
                } else if self.hi[b].is_finite() {
                    ((self.hi[b] - self.x[b]) / rate).max(0.0)
                } else {
                    continue;
                };
                let take = if lim < step - 1e-12 {
                    true
                } else if lim <= step + 1e-12 {
                    match leave {
                        Some(cur) if bland => b < self.basis[cur],
                        Some(_) => alpha.abs() > leave_alpha,
                        None => false,
                    }
                } else {
                    false
                };
                if take {
                    step = lim;
                    leave = Some(i);
                    leave_alpha = alpha.abs();
                }
            }
            if !step.is_finite() {
                return Ok(LpOutcome::Unbounded);
            }
            if step <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            // Move along the edge.
            if step != 0.0 {
                self.x[j] += dir * step;
                for i in 0..self.m {
                    let alpha = self.at(i, j);
                    if alpha != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= dir * alpha * step;
                    }
                }
            }
            match leave {
                None => {
                    // Bound flip.
                    if dir > 0.0 {
                        self.x[j] = self.hi[j];
                        self.status[j] = ColStatus::Upper;
                    } else {
                        self.x[j] = self.lo[j];
                        self.status[j] = ColStatus::Lower;
                    }
                }
                Some(r) => {
                    let b = self.basis[r];
                    let rate = -dir * self.at(r, j);
                    let (target, st) = if rate < 0.0 {
                        (self.lo[b], ColStatus::Lower)
                    } else {
                        (self.hi[b], ColStatus::Upper)
                    };
                    self.pivot(r, j);
                    self.x[b] = target;
                    self.status[b] = st;
                }
            }
        }
        Err(LpFailure::IterationLimit)
    }

    fn is_dual_feasible(&self) -> bool {
        (0..self.nc).all(|j| {
            if self.is_fixed(j) {
                return true;
            }
            match self.status[j] {
                ColStatus::Basic(_) => true,
                ColStatus::Lower => self.d[j] >= -DUAL_TOL * 10.0,
                ColStatus::Upper => self.d[j] <= DUAL_TOL * 10.0,
                ColStatus::Zero => self.d[j].abs() <= DUAL_TOL * 10.0,
            }
        })
    }

    /// Dual simplex from a dual feasible basis.
    fn dual(&mut self, max_iter: usize, deadline: Option<Instant>) -> Result<LpOutcome, LpFailure> {
        let mut stall = 0usize;
        let mut last_obj = f64::NEG_INFINITY;
        for it in 0..max_iter {
            if it % REFRESH_EVERY == REFRESH_EVERY - 1 {
                self.refresh();
                if let Some(dl) = deadline {
                    if Instant::now() > dl {
                        return Err(LpFailure::Deadline);
                    }
                }
            }
            let bland = stall > DEGENERATE_LIMIT;
            let mut leave = None;
            let mut worst = PRIMAL_TOL;
            for i in 0..self.m {
                let b = self.basis[i];
                let xb = self.x[b];
                let viol = if xb < self.lo[b] - PRIMAL_TOL {
                    self.lo[b] - xb
                } else if xb > self.hi[b] + PRIMAL_TOL {
                    xb - self.hi[b]
                } else {
                    continue;
                };
                // Scale-aware tolerance for large magnitudes.
                if viol <= PRIMAL_TOL * (1.0 + xb.abs()) {
                    continue;
                }
                if bland {
                    match leave {
                        Some(cur) if self.basis[cur] < b => {}
                        _ => leave = Some(i),
                    }
                } else if viol > worst {
                    worst = viol;
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return Ok(LpOutcome::Optimal);
            };
            let b = self.basis[r];
            let below = self.x[b] < self.lo[b];
            let target = if below { self.lo[b] } else { self.hi[b] };

            let mut enter = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0;
            let row_start = r * self.nc;
            for j in 0..self.nc {
                let alpha = self.t[row_start + j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let st = self.status[j];
                if matches!(st, ColStatus::Basic(_)) || self.is_fixed(j) {
                    continue;
                }
                // Moving x_j by delta changes x_b by -alpha * delta.
                let can_inc = matches!(st, ColStatus::Lower | ColStatus::Zero);
                let can_dec = matches!(st, ColStatus::Upper | ColStatus::Zero);
                let ok = if below {
                    (can_inc && alpha < 0.0) || (can_dec && alpha > 0.0)
                } else {
                    (can_inc && alpha > 0.0) || (can_dec && alpha < 0.0)
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / alpha.abs();
                let better = if ratio < best_ratio - 1e-12 {
                    true
                } else if ratio <= best_ratio + 1e-12 {
                    if bland {
                        false
                    } else {
                        alpha.abs() > best_alpha
                    }
                } else {
                    false
                };
                if better {
                    best_ratio = ratio;
                    best_alpha = alpha.abs();
                    enter = Some(j);
                }
            }
            let Some(j) = enter else {
                return Ok(LpOutcome::Infeasible);
            };
            let alpha = self.at(r, j);
            let delta = (self.x[b] - target) / alpha;
            self.x[j] += delta;
            for i in 0..self.m {
                let a = self.at(i, j);
                if a != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] -= a * delta;
                }
            }
            self.pivot(r, j);
            self.x[b] = target;
            self.status[b] = if below { ColStatus::Lower } else { ColStatus::Upper };
            let obj = self.objective();
            if obj <= last_obj + 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            last_obj = obj;
        }
        Err(LpFailure::IterationLimit)
    }

    fn iteration_cap(&self) -> usize {
        100 * (self.m + self.nc) + 1000
    }

    /// Two-phase primal solve from the initial slack basis.
    pub fn solve_from_scratch(p: &LpProblem, deadline: Option<Instant>) -> Result<(Tableau, LpOutcome), LpFailure> {
        let (mut tab, art_rows) = Tableau::new(p);
        let cap = tab.iteration_cap();
        if !art_rows.is_empty() {
            match tab.primal(cap, deadline)? {
                LpOutcome::Optimal => {}
                other => return Ok((tab, other)),
            }
            tab.refresh();
            let infeas: f64 = (tab.n + tab.m..tab.nc).map(|a| tab.x[a]).sum();
            if infeas > 1e-7 {
                return Ok((tab, LpOutcome::Infeasible));
            }
        }
        tab.drop_artificials(p);
        let out = tab.primal(cap, deadline)?;
        tab.refresh();
        Ok((tab, out))
    }

    /// Pins artificials to zero, compacts away the nonbasic ones and installs
    /// the true objective.
    fn drop_artificials(&mut self, p: &LpProblem) {
        let first_art = self.n + self.m;
        let keep: Vec<usize> = (0..self.nc)
            .filter(|&j| j < first_art || matches!(self.status[j], ColStatus::Basic(_)))
            .collect();
        if keep.len() != self.nc {
            let new_nc = keep.len();
            let mut t = vec![0.0; self.m * new_nc];
            for i in 0..self.m {
                let src = &self.t[i * self.nc..(i + 1) * self.nc];
                let dst = &mut t[i * new_nc..(i + 1) * new_nc];
                for (nj, &oj) in keep.iter().enumerate() {
                    dst[nj] = src[oj];
                }
            }
            let remap = |v: &Vec<f64>| keep.iter().map(|&j| v[j]).collect::<Vec<f64>>();
            self.x = remap(&self.x);
            self.lo = remap(&self.lo);
            self.hi = remap(&self.hi);
            self.status = keep.iter().map(|&j| self.status[j]).collect();
            let mut index = vec![usize::MAX; self.nc];
            for (nj, &oj) in keep.iter().enumerate() {
                index[oj] = nj;
            }
            for b in &mut self.basis {
                *b = index[*b];
            }
            self.t = t;
            self.nc = new_nc;
        }
        for j in first_art..self.nc {
            self.lo[j] = 0.0;
            self.hi[j] = 0.0;
        }
        self.cost = vec![0.0; self.nc];
        self.cost[..self.n].copy_from_slice(&p.cost);
        self.recompute_duals();
    }

    /// Replaces structural bounds and re-optimizes with the dual simplex.
    pub fn reoptimize(&mut self, lo: &[f64], hi: &[f64], deadline: Option<Instant>) -> Result<LpOutcome, LpFailure> {
        for j in 0..self.n {
            if self.lo[j] == lo[j] && self.hi[j] == hi[j] {
                continue;
            }
            if lo[j] > hi[j] {
                return Ok(LpOutcome::Infeasible);
            }
            self.lo[j] = lo[j];
            self.hi[j] = hi[j];
            match self.status[j] {
                ColStatus::Basic(_) => {}
                _ => {
                    let st = if self.d[j] > 0.0 && lo[j].is_finite() {
                        ColStatus::Lower
                    } else if self.d[j] < 0.0 && hi[j].is_finite() {
                        ColStatus::Upper
                    } else if lo[j].is_finite() {
                        ColStatus::Lower
                    } else if hi[j].is_finite() {
                        ColStatus::Upper
                    } else {
                        ColStatus::Zero
                    };
                    self.status[j] = st;
                    self.x[j] = match st {
                        ColStatus::Lower => lo[j],
                        ColStatus::Upper => hi[j],
                        _ => 0.0,
                    };
                }
            }
        }
        self.refresh();
        let cap = self.iteration_cap();
        if !self.is_dual_feasible() {
            return Err(LpFailure::NotDualFeasible);
        }
        let out = self.dual(cap, deadline)?;
        if out == LpOutcome::Optimal {
            self.refresh();
            // Drift in the refreshed values can leave tiny infeasibilities;
            // one more dual pass clears them.
            let out = self.dual(cap, deadline)?;
            if out == LpOutcome::Optimal {
                let polish = self.primal(cap, deadline)?;
                return Ok(polish);
            }
            return Ok(out);
        }
        Ok(out)
    }
}
