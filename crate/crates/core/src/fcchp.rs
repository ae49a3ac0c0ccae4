//! Fuel-cell CHP sub-model: on/off chain, operating-time limits, downtime
//! tracking, cold starts, downtime-dependent warm-up, start-up and shut-down
//! power steps, the modulating production band, power and cost equations.
//!
//! Units are indexed `1..=N`; index 0 and below refer to the declared
//! pre-horizon state. Auxiliary counters (`l`, `r`, `w`) are declared
//! continuous: the rows make them integral whenever the binaries are.

use thiserror::Error;

use crate::assembly::{AssemblyError, BalanceLedger, Carrier, Financial, Side, TimeGrid};
use crate::linearize::{bool_and, product_bin_bounded, select_grouped_in, LinearizeError};
use crate::milp::{LinExpr, Model, ModelError, Sense, VarId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FcchpError {
    #[error("fcCHP `{id}`: {msg}")]
    Parameter { id: String, msg: String },
    #[error("fcCHP `{id}`: inconsistent initial state: {msg}")]
    InitialState { id: String, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linearize(#[from] LinearizeError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

type Result<T> = std::result::Result<T, FcchpError>;

#[derive(Debug, Clone, PartialEq)]
pub struct FcchpPhysicalParams {
    pub eta_th: f64,
    pub eta_el: f64,
    pub p_th_max: f64,
    pub p_th_min: f64,
    pub p_th_init: f64,
    pub p_th_start_up: f64,
    pub d_on_min: f64,
    pub d_on_max: f64,
    pub d_off_min: f64,
    pub d_init: f64,
    pub d_start_up: f64,
    pub d_down: f64,
    /// Warm-up time in units for a downtime of `d` units at index `d - 1`.
    pub warm_up_table: Vec<usize>,
    pub p_el_stand_by: f64,
    pub p_el_warm_up: f64,
    pub p_el_cold_start: f64,
    pub p_el_add_shut_down: f64,
    pub p_pr_warm_up: f64,
    pub p_pr_cold_start: f64,
    /// Thermal ramp limit in kW per hour.
    pub delta_p_th_prod: f64,
    /// Downtime in units beyond which a start is cold.
    pub cold_start_units: usize,
}

/// Samples a downtime-to-warm-up function given in hours onto the grid.
pub fn sample_warm_up(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Vec<usize> {
    (1..=grid.n).map(|d| grid.units_ceil(f(d as f64 * grid.hours_per_unit)).max(1)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcchpCostParams {
    /// Primary energy price per unit (ct/kWh).
    pub k_pr: Vec<f64>,
    pub k_on: f64,
    pub k_off: f64,
    pub k_warm_up: f64,
    pub k_cold_start: f64,
    pub k_prod: f64,
}

impl FcchpCostParams {
    pub fn zero(n: usize) -> Self {
        FcchpCostParams { k_pr: vec![0.0; n], k_on: 0.0, k_off: 0.0, k_warm_up: 0.0, k_cold_start: 0.0, k_prod: 0.0 }
    }
}

/// State just before the horizon. The pre-horizon event flags (starts,
/// stops, ends of warm-up) are replayed from `l0`, `r0` and `w0`: the last
/// start was at `r0`, the warm-up it triggered lasted `w0` units, and when
/// the plant is off it stopped at `l0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FcchpInitialState {
    pub x0: bool,
    pub y0: bool,
    pub z0: bool,
    pub k0: bool,
    pub l0: i64,
    pub r0: i64,
    pub w0: usize,
    /// Thermal production level at unit 0; ramp-limits unit 1 when producing.
    pub u0: Option<f64>,
}

impl FcchpInitialState {
    /// Derives the phase flags from the event history.
    pub fn replay(x0: bool, l0: i64, r0: i64, w0: usize, k0: bool, start_up: usize) -> Self {
        let warm_end = r0 + w0 as i64;
        FcchpInitialState {
            x0,
            y0: x0 && warm_end > 0,
            z0: x0 && warm_end + start_up as i64 <= 0,
            k0,
            l0,
            r0,
            w0,
            u0: None,
        }
    }

    fn start_hist(&self, k: i64) -> bool {
        k == self.r0
    }

    fn stop_hist(&self, k: i64) -> bool {
        !self.x0 && k == self.l0
    }

    fn warm_end_hist(&self, k: i64) -> bool {
        k == self.r0 + self.w0 as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcchpUnitParams {
    pub on_min: usize,
    pub on_max: usize,
    pub off_min: usize,
    pub lower_init: usize,
    pub upper_init: usize,
    pub start_up: usize,
    pub shut_down: usize,
    pub th_up: Vec<f64>,
    pub el_up: Vec<f64>,
    pub pr_up: Vec<f64>,
    pub el_down: Vec<f64>,
    /// Largest change of the production level between two units (kW).
    pub ramp: f64,
}

fn param_err(msg: impl Into<String>) -> FcchpError {
    FcchpError::Parameter { id: String::new(), msg: msg.into() }
}

fn check_physical(p: &FcchpPhysicalParams) -> Result<()> {
    let in_unit = |v: f64| v > 0.0 && v < 1.0;
    if !in_unit(p.eta_th) || !in_unit(p.eta_el) || p.eta_th + p.eta_el >= 1.0 {
        return Err(param_err("efficiencies must lie in (0, 1) and sum to less than 1"));
    }
    if !(p.p_th_init <= p.p_th_min && p.p_th_min < p.p_th_start_up && p.p_th_start_up <= p.p_th_max) {
        return Err(param_err("need P_init <= P_min < P_startUp <= P_max"));
    }
    let durations = [p.d_on_min, p.d_on_max, p.d_off_min, p.d_init, p.d_start_up, p.d_down];
    if durations.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(param_err("durations must be positive"));
    }
    if p.d_init > p.d_start_up {
        return Err(param_err("initial jump must not outlast the start-up phase"));
    }
    if p.d_on_max < p.d_on_min {
        return Err(param_err("maximum operating time below the minimum"));
    }
    if p.cold_start_units == 0 {
        return Err(param_err("cold-start threshold must be positive"));
    }
    if p.warm_up_table.is_empty() || p.warm_up_table.contains(&0) {
        return Err(param_err("warm-up table must be nonempty with positive entries"));
    }
    if p.warm_up_table.windows(2).any(|w| w[0] > w[1]) {
        return Err(param_err("warm-up table must be non-decreasing"));
    }
    let powers = [
        p.p_el_stand_by,
        p.p_el_warm_up,
        p.p_el_cold_start,
        p.p_el_add_shut_down,
        p.p_pr_warm_up,
        p.p_pr_cold_start,
        p.delta_p_th_prod,
        p.p_th_init,
    ];
    if powers.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(param_err("powers and the ramp limit must be finite and non-negative"));
    }
    Ok(())
}

/// Integral from 0 to `t` of the start-up thermal profile: `P_init` until
/// `D_init`, a linear ramp to `P_startUp` at `D_startUp`, then held.
fn start_up_integral(p: &FcchpPhysicalParams, t: f64) -> f64 {
    let (di, ds) = (p.d_init, p.d_start_up);
    if t <= di {
        return p.p_th_init * t;
    }
    let mut acc = p.p_th_init * di;
    if ds > di {
        let slope = (p.p_th_start_up - p.p_th_init) / (ds - di);
        let tt = t.min(ds) - di;
        acc += p.p_th_init * tt + 0.5 * slope * tt * tt;
    }
    if t > ds {
        acc += p.p_th_start_up * (t - ds);
    }
    acc
}

pub fn derive_unit_params(p: &FcchpPhysicalParams, grid: &TimeGrid) -> Result<FcchpUnitParams> {
    check_physical(p)?;
    let h = grid.hours_per_unit;
    let on_min = grid.units_ceil(p.d_on_min).max(1);
    if on_min > grid.n {
        return Err(param_err(format!("minimum operating time of {on_min} units exceeds the horizon of {}", grid.n)));
    }
    let start_up = grid.units_ceil(p.d_start_up).max(1);
    let shut_down = grid.units_ceil(p.d_down).max(1);
    let th_up: Vec<f64> = (1..=start_up)
        .map(|k| (start_up_integral(p, k as f64 * h) - start_up_integral(p, (k - 1) as f64 * h)) / h)
        .collect();
    let el_down = (1..=shut_down)
        .map(|j| {
            let overlap = (p.d_down.min(j as f64 * h) - (j - 1) as f64 * h).max(0.0);
            p.p_el_add_shut_down * overlap / h
        })
        .collect();
    Ok(FcchpUnitParams {
        on_min,
        on_max: grid.units_ceil(p.d_on_max).max(on_min),
        off_min: grid.units_ceil(p.d_off_min).max(1),
        lower_init: grid.units_floor(p.d_init),
        upper_init: grid.units_ceil(p.d_init),
        start_up,
        shut_down,
        el_up: th_up.iter().map(|v| v * p.eta_el / p.eta_th).collect(),
        pr_up: th_up.iter().map(|v| v / p.eta_th).collect(),
        th_up,
        el_down,
        ramp: p.delta_p_th_prod * h,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcchpSpec {
    pub id: String,
    pub physical: FcchpPhysicalParams,
    pub costs: FcchpCostParams,
    pub initial: FcchpInitialState,
}

/// Variables and expressions of one built fcCHP. Vectors are indexed by
/// `unit - 1`.
#[derive(Debug, Clone, Default)]
pub struct FcchpModel {
    pub id: String,
    pub n: usize,
    pub x: Vec<VarId>,
    pub start: Vec<VarId>,
    pub stop: Vec<VarId>,
    pub l: Vec<VarId>,
    /// `start_i * (i - l_{i-1})`: the downtime ending with a start.
    pub down_run: Vec<VarId>,
    /// `stop_i * (i - l_{i-1})`: the operating time ending with a stop.
    pub up_run: Vec<VarId>,
    pub k: Vec<VarId>,
    pub w: Vec<VarId>,
    pub y: Vec<VarId>,
    pub stop_warm_up: Vec<VarId>,
    pub r: Vec<VarId>,
    pub sigma: Vec<(usize, usize, VarId)>,
    pub s: Vec<LinExpr>,
    pub z: Vec<VarId>,
    pub u_th: Vec<VarId>,
    pub gamma: Vec<VarId>,
    pub thermal_output: Vec<LinExpr>,
    pub electric_output: Vec<LinExpr>,
    pub electric_input: Vec<LinExpr>,
    pub primary_input: Vec<LinExpr>,
    pub financial_input: Vec<LinExpr>,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Stepwise builder; each `build_*` requires the ones before it.
pub struct FcchpBuilder {
    pub out: FcchpModel,
    pub unit: FcchpUnitParams,
    pub init: FcchpInitialState,
    table: Vec<usize>,
}

impl FcchpBuilder {
    pub fn new(
        id: &str,
        grid: &TimeGrid,
        unit: FcchpUnitParams,
        table: Vec<usize>,
        init: FcchpInitialState,
    ) -> Result<Self> {
        let err = |msg: String| FcchpError::InitialState { id: id.to_string(), msg };
        if init.l0 > 0 || init.r0 > 0 {
            return Err(err("l0 and r0 must not be positive".into()));
        }
        if !table.contains(&init.w0) {
            return Err(err(format!("w0 = {} is not a value of the warm-up table", init.w0)));
        }
        let warm_end = init.r0 + init.w0 as i64;
        if init.x0 {
            if init.r0 != init.l0 {
                return Err(err("a running plant's last change is its last start (r0 = l0)".into()));
            }
        } else if warm_end + unit.start_up as i64 > init.l0 - 1 {
            return Err(err("the stop at l0 must follow a completed warm-up and start-up".into()));
        }
        let replayed = FcchpInitialState::replay(init.x0, init.l0, init.r0, init.w0, init.k0, unit.start_up);
        if replayed.y0 != init.y0 || replayed.z0 != init.z0 {
            return Err(err(format!(
                "declared y0 = {}, z0 = {} but the history implies y0 = {}, z0 = {}",
                init.y0, init.z0, replayed.y0, replayed.z0
            )));
        }
        if init.u0.is_some() && !init.z0 {
            return Err(err("a production level u0 is only meaningful while producing".into()));
        }
        Ok(FcchpBuilder {
            out: FcchpModel { id: id.to_string(), n: grid.n, ..Default::default() },
            unit,
            init,
            table,
        })
    }

    fn id(&self) -> &str {
        &self.out.id
    }

    fn n(&self) -> usize {
        self.out.n
    }

    fn name(&self, var: &str, i: usize) -> String {
        format!("{}.{var}.{i}", self.out.id)
    }

    fn tag(&self, family: &str, i: usize) -> String {
        format!("{}.{family}.i={i}", self.out.id)
    }

    fn at(series: &[VarId], i: i64, before: impl Fn(i64) -> f64) -> LinExpr {
        if i >= 1 {
            LinExpr::from(series[(i - 1) as usize])
        } else {
            LinExpr::constant(before(i))
        }
    }

    pub fn x_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.x, i, |_| flag(self.init.x0))
    }
    pub fn start_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.start, i, |k| flag(self.init.start_hist(k)))
    }
    pub fn stop_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.stop, i, |k| flag(self.init.stop_hist(k)))
    }
    pub fn stop_warm_up_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.stop_warm_up, i, |k| flag(self.init.warm_end_hist(k)))
    }
    fn l_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.l, i, |_| self.init.l0 as f64)
    }
    fn w_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.w, i, |_| self.init.w0 as f64)
    }
    fn y_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.y, i, |_| flag(self.init.y0))
    }
    fn r_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.r, i, |_| self.init.r0 as f64)
    }
    fn z_at(&self, i: i64) -> LinExpr {
        Self::at(&self.out.z, i, |_| flag(self.init.z0))
    }

    /// Adds the pair of "event" rows that tie a binary state `b` to its
    /// rising-edge flag `up` and falling-edge flag `down`.
    fn edge_rows(
        &self,
        m: &mut Model,
        family: &str,
        i: usize,
        (prev, cur): (&LinExpr, &LinExpr),
        up: &LinExpr,
        down: &LinExpr,
    ) -> Result<()> {
        let t = |s: &str| self.tag(&format!("{family}.{s}"), i);
        m.add_row(up.clone(), Sense::Ge, cur.clone() - prev.clone(), t("up_ge"))?;
        m.add_row(up.clone(), Sense::Le, cur.clone(), t("up_le_cur"))?;
        m.add_row(up.clone(), Sense::Le, 1.0 - prev.clone(), t("up_le_prev"))?;
        m.add_row(down.clone(), Sense::Ge, prev.clone() - cur.clone(), t("down_ge"))?;
        m.add_row(down.clone(), Sense::Le, prev.clone(), t("down_le_prev"))?;
        m.add_row(down.clone(), Sense::Le, 1.0 - cur.clone(), t("down_le_cur"))?;
        Ok(())
    }

    pub fn build_onoff_chain(&mut self, m: &mut Model) -> Result<()> {
        for i in 1..=self.n() {
            let x = m.add_binary(self.name("x", i))?;
            let start = m.add_binary(self.name("start", i))?;
            let stop = m.add_binary(self.name("stop", i))?;
            self.out.x.push(x);
            self.out.start.push(start);
            self.out.stop.push(stop);
            let prev = self.x_at(i as i64 - 1);
            self.edge_rows(m, "startstop", i, (&prev, &x.into()), &start.into(), &stop.into())?;
        }
        Ok(())
    }

    pub fn build_min_durations(&mut self, m: &mut Model) -> Result<()> {
        let (on_min, off_min) = (self.unit.on_min as i64, self.unit.off_min as i64);
        for i in 1..=self.n() as i64 {
            let x = self.x_at(i);
            if on_min > 1 {
                let mut recent = LinExpr::new();
                for k in (i - on_min + 1)..i {
                    recent += self.start_at(k);
                }
                m.add_row(x.clone(), Sense::Ge, recent, self.tag("minon", i as usize))?;
            }
            if off_min > 1 {
                let mut recent = LinExpr::new();
                for k in (i - off_min + 1)..i {
                    recent += self.stop_at(k);
                }
                m.add_row(x, Sense::Le, 1.0 - recent, self.tag("minoff", i as usize))?;
            }
        }
        Ok(())
    }

    /// `l_i = l_{i-1} + (start_i + stop_i)(i - l_{i-1})`, with the product
    /// split into its start and stop parts.
    pub fn build_change_tracker(&mut self, m: &mut Model) -> Result<()> {
        let l0 = self.init.l0;
        for i in 1..=self.n() {
            let since = i as f64 - self.l_at(i as i64 - 1);
            let span = (1.0, (i as i64 - l0) as f64);
            let a = product_bin_bounded(m, &self.name("downRun", i), self.out.start[i - 1], &since, span)?;
            let b = product_bin_bounded(m, &self.name("upRun", i), self.out.stop[i - 1], &since, span)?;
            let l = m.add_continuous(self.name("l", i), l0 as f64, i as f64)?;
            m.add_row(l, Sense::Eq, self.l_at(i as i64 - 1) + a + b, self.tag("lastchange", i))?;
            self.out.l.push(l);
            self.out.down_run.push(a);
            self.out.up_run.push(b);
        }
        Ok(())
    }

    pub fn build_max_runtime(&mut self, m: &mut Model) -> Result<()> {
        let on_max = self.unit.on_max as f64;
        for i in 1..=self.n() {
            if (i as i64 - self.init.l0) as f64 > on_max {
                m.add_constraint(self.out.up_run[i - 1], Sense::Le, on_max, self.tag("maxon", i))?;
            }
        }
        Ok(())
    }

    pub fn build_cold_start_flags(&mut self, m: &mut Model, cold_units: usize) -> Result<()> {
        let (n, l0) = (self.n() as i64, self.init.l0);
        let big_m = m.record_big_m(format!("{}.coldstart", self.id()), (n + l0.abs() + 1) as f64, (n - l0) as f64)?;
        let cold = cold_units as f64;
        for i in 1..=self.n() {
            let k = m.add_binary(self.name("k", i))?;
            self.out.k.push(k);
            if (i as i64 - l0) as f64 > cold {
                m.add_row(self.out.down_run[i - 1] - cold, Sense::Le, big_m * k, self.tag("coldstart.start", i))?;
            }
            // k_{i-1} (i - l_i) <= M k_i keeps the flag through the warm-up.
            let since_l = i as f64 - LinExpr::from(self.out.l[i - 1]);
            let carried = if i == 1 {
                since_l.scaled(flag(self.init.k0))
            } else {
                let prev_k = self.out.k[i - 2];
                product_bin_bounded(m, &self.name("coldCarry", i), prev_k, &since_l, (0.0, (i as i64 - l0) as f64))?
                    .into()
            };
            m.add_row(carried, Sense::Le, big_m * k, self.tag("coldstart.carry", i))?;
        }
        Ok(())
    }

    /// Table entries for downtimes `1..=len`; downtimes beyond the horizon
    /// or the table map to the last tabulated value.
    fn extended_table(&self, len: usize) -> Vec<f64> {
        let last = self.table.len().min(self.n());
        (1..=len).map(|d| self.table[d.min(last) - 1] as f64).collect()
    }

    fn warm_up_range(&self) -> (f64, f64) {
        let used = &self.table[..self.table.len().min(self.n())];
        let lo = used[0].min(self.init.w0);
        let hi = used[used.len() - 1].max(self.init.w0);
        (lo as f64, hi as f64)
    }

    pub fn build_warmup_duration(&mut self, m: &mut Model) -> Result<()> {
        let l0 = self.init.l0;
        let (w_lo, w_hi) = self.warm_up_range();
        let reach = (self.n() as i64 - l0) as usize;
        let tabulated = self.table.len().min(self.n());
        if reach > tabulated {
            log::info!(
                "fcCHP `{}`: downtimes {}..={reach} use the warm-up of downtime {tabulated}",
                self.id(),
                tabulated + 1
            );
        }
        for i in 1..=self.n() {
            let span = (i as i64 - l0) as usize;
            let table = self.extended_table(span);
            let since = i as f64 - self.l_at(i as i64 - 1);
            let sel = select_grouped_in(m, &self.name("f", i), &since, (1.0, span as f64), &table)?;
            let (f_lo, f_hi) = (table[0], table[span - 1]);
            let delta = sel.value - self.w_at(i as i64 - 1);
            let q = product_bin_bounded(m, &self.name("wStep", i), self.out.start[i - 1], &delta, (f_lo - w_hi, f_hi - w_lo))?;
            let w = m.add_continuous(self.name("w", i), w_lo, w_hi)?;
            m.add_row(w, Sense::Eq, self.w_at(i as i64 - 1) + q, self.tag("warmupduration", i))?;
            self.out.w.push(w);
        }
        Ok(())
    }

    pub fn build_warmup_phase(&mut self, m: &mut Model) -> Result<()> {
        for i in 1..=self.n() {
            let y = m.add_binary(self.name("y", i))?;
            let swu = m.add_binary(self.name("stopWarmUp", i))?;
            self.out.y.push(y);
            self.out.stop_warm_up.push(swu);
            let prev = self.y_at(i as i64 - 1);
            self.edge_rows(m, "warmup", i, (&prev, &y.into()), &self.out.start[i - 1].into(), &swu.into())?;
            m.add_row(self.out.x[i - 1], Sense::Ge, y, self.tag("warmup.on", i))?;
        }
        Ok(())
    }

    /// Most recent start `r`, the upper warm-up bound `y_i (i - r_i) <= w_i - 1`
    /// and the lower bound through the window indicators `sigma`.
    pub fn build_warmup_bounds(&mut self, m: &mut Model) -> Result<()> {
        let r0 = self.init.r0;
        let (w_lo, w_hi) = self.warm_up_range();
        let mut values: Vec<usize> = self.table[..self.table.len().min(self.n())].to_vec();
        values.dedup();
        let spread = (values[values.len() - 1] - values[0] + 1) as f64;
        for i in 1..=self.n() {
            let reach = (i as i64 - r0) as f64;
            let since = i as f64 - self.r_at(i as i64 - 1);
            let step = product_bin_bounded(m, &self.name("rStep", i), self.out.start[i - 1], &since, (1.0, reach))?;
            let r = m.add_continuous(self.name("r", i), r0 as f64, i as f64)?;
            m.add_row(r, Sense::Eq, self.r_at(i as i64 - 1) + step, self.tag("laststart", i))?;
            self.out.r.push(r);

            let elapsed = i as f64 - LinExpr::from(r);
            let yr = product_bin_bounded(m, &self.name("warmElapsed", i), self.out.y[i - 1], &elapsed, (0.0, reach))?;
            m.add_row(yr, Sense::Le, LinExpr::from(self.out.w[i - 1]) - 1.0, self.tag("warmup.max", i))?;

            for &j in &values {
                if w_hi - j as f64 + 1.0 <= 0.0 {
                    continue;
                }
                let mut recent = LinExpr::new();
                for k in (i as i64 - j as i64 + 1)..i as i64 {
                    recent += self.start_at(k);
                }
                let recent = recent.normalized();
                let excess = LinExpr::from(self.out.w[i - 1]) - (j as f64 - 1.0);
                let rhs: LinExpr = if recent.is_constant() {
                    if recent.constant > 0.0 {
                        excess
                    } else {
                        continue;
                    }
                } else {
                    let sm = m.record_big_m(
                        format!("{}.sigma.j={j}", self.id()),
                        (j as f64 - 1.0).max(1.0),
                        j as f64 - 1.0,
                    )?;
                    let sigma = m.add_binary(format!("{}.sigma.{i}.{j}", self.id()))?;
                    m.add_row(sm * sigma, Sense::Ge, recent.clone(), self.tag(&format!("sigma.j={j}.ge"), i))?;
                    m.add_row(sigma, Sense::Le, recent, self.tag(&format!("sigma.j={j}.le"), i))?;
                    self.out.sigma.push((i, j, sigma));
                    let bounds = (w_lo - j as f64 + 1.0, w_hi - j as f64 + 1.0);
                    product_bin_bounded(m, &format!("{}.sigmaExcess.{i}.{j}", self.id()), sigma, &excess, bounds)?.into()
                };
                m.add_row(spread * self.out.y[i - 1], Sense::Ge, rhs, self.tag(&format!("warmup.min.j={j}"), i))?;
            }
        }
        Ok(())
    }

    pub fn build_startup_shutdown(&mut self) {
        let lower = self.unit.lower_init as i64;
        self.out.s = (1..=self.n() as i64)
            .map(|i| {
                let mut s = LinExpr::new();
                for j in 1..=lower {
                    s += self.stop_warm_up_at(i - j + 1);
                }
                s.normalized()
            })
            .collect();
    }

    pub fn build_production_phase(&mut self, m: &mut Model) -> Result<()> {
        let su = self.unit.start_up as i64;
        for i in 1..=self.n() {
            let z = m.add_binary(self.name("z", i))?;
            self.out.z.push(z);
            let prev = self.z_at(i as i64 - 1);
            let begin = self.stop_warm_up_at(i as i64 - su);
            let stop = self.out.stop[i - 1].into();
            self.edge_rows(m, "production", i, (&prev, &z.into()), &begin, &stop)?;
            m.add_row(self.out.x[i - 1], Sense::Ge, z, self.tag("production.on", i))?;
        }
        Ok(())
    }

    fn stepped(&self, event: impl Fn(i64) -> LinExpr, steps: &[f64], i: i64) -> LinExpr {
        let mut e = LinExpr::new();
        for (j, &p) in steps.iter().enumerate() {
            if p != 0.0 {
                e.add_expr(&event(i - j as i64), p);
            }
        }
        e
    }

    pub fn build_power_equations(&mut self, m: &mut Model, phys: &FcchpPhysicalParams) -> Result<()> {
        let ramp = self.unit.ramp;
        let ratio = phys.eta_el / phys.eta_th;
        for i in 1..=self.n() {
            let u = m.add_continuous(self.name("uTh", i), phys.p_th_min, phys.p_th_max)?;
            self.out.u_th.push(u);
            let zu = product_bin_bounded(m, &self.name("zu", i), self.out.z[i - 1], &u.into(), (phys.p_th_min, phys.p_th_max))?;
            let prev_u: Option<LinExpr> = if i >= 2 {
                Some(self.out.u_th[i - 2].into())
            } else {
                self.init.u0.map(LinExpr::constant)
            };
            if let Some(prev) = prev_u {
                m.add_row(u - prev.clone(), Sense::Le, LinExpr::constant(ramp), self.tag("ramp.up", i))?;
                m.add_row(u - prev, Sense::Ge, LinExpr::constant(-ramp), self.tag("ramp.down", i))?;
            }
            let gamma = bool_and(m, &self.name("gamma", i), self.out.y[i - 1], self.out.k[i - 1])?;
            self.out.gamma.push(gamma);

            let ii = i as i64;
            let swu = |k| self.stop_warm_up_at(k);
            let mut thermal = self.stepped(swu, &self.unit.th_up, ii);
            thermal += zu;
            let thermal = thermal.normalized();

            let mut e_in = phys.p_el_warm_up * self.out.y[i - 1] + phys.p_el_cold_start * gamma;
            e_in += self.stepped(|k| self.stop_at(k), &self.unit.el_down, ii);
            e_in += (1.0 - self.x_at(ii)).scaled(phys.p_el_stand_by);

            let mut primary = phys.p_pr_warm_up * self.out.y[i - 1] + phys.p_pr_cold_start * gamma;
            primary += self.stepped(|k| self.stop_warm_up_at(k), &self.unit.pr_up, ii);
            primary += zu * (1.0 / phys.eta_th);

            self.out.electric_output.push(thermal.scaled(ratio));
            self.out.thermal_output.push(thermal);
            self.out.electric_input.push(e_in.normalized());
            self.out.primary_input.push(primary.normalized());
        }
        Ok(())
    }

    pub fn build_cost_equation(&mut self, costs: &FcchpCostParams, grid: &TimeGrid) -> Result<()> {
        if costs.k_pr.len() != self.n() {
            return Err(FcchpError::Parameter {
                id: self.id().to_string(),
                msg: format!("primary price series has {} entries, expected {}", costs.k_pr.len(), self.n()),
            });
        }
        let h = grid.hours_per_unit;
        self.out.financial_input = (0..self.n())
            .map(|i| {
                let mut f = self.out.primary_input[i].scaled(costs.k_pr[i] * h);
                f.add_term(self.out.start[i], costs.k_on);
                f.add_term(self.out.stop[i], costs.k_off);
                f.add_term(self.out.y[i], costs.k_warm_up);
                f.add_term(self.out.gamma[i], costs.k_cold_start);
                f.add_term(self.out.z[i], costs.k_prod);
                f.normalized()
            })
            .collect();
        Ok(())
    }

    pub fn register(&self, ledger: &mut BalanceLedger) -> Result<()> {
        let o = &self.out;
        let id = o.id.as_str();
        ledger.add_power(Carrier::Heat, Side::Source, id, "thermalOutputPower", o.thermal_output.clone())?;
        ledger.add_power(Carrier::Electric, Side::Source, id, "electricOutputPower", o.electric_output.clone())?;
        ledger.add_power(Carrier::Electric, Side::Sink, id, "electricInputPower", o.electric_input.clone())?;
        ledger.add_financial(Financial::Input, id, o.financial_input.clone())?;
        ledger.add_state(id, "primaryInputPower", o.primary_input.clone())?;
        let series = |v: &[VarId]| v.iter().map(|&x| LinExpr::from(x)).collect::<Vec<_>>();
        ledger.add_state(id, "isOn", series(&o.x))?;
        ledger.add_state(id, "isWarmingUp", series(&o.y))?;
        ledger.add_state(id, "isInPowerJump", o.s.clone())?;
        ledger.add_state(id, "isProducing", series(&o.z))?;
        ledger.add_state(id, "isColdStart", series(&o.k))?;
        ledger.add_state(id, "warmUpUnits", series(&o.w))?;
        Ok(())
    }
}

/// Builds the complete sub-model and registers it in the ledger.
pub fn build_fcchp(
    model: &mut Model,
    ledger: &mut BalanceLedger,
    spec: &FcchpSpec,
    grid: &TimeGrid,
) -> Result<FcchpModel> {
    let tag_id = |e: FcchpError| match e {
        FcchpError::Parameter { msg, .. } => FcchpError::Parameter { id: spec.id.clone(), msg },
        other => other,
    };
    let unit = derive_unit_params(&spec.physical, grid).map_err(tag_id)?;
    let mut b = FcchpBuilder::new(&spec.id, grid, unit, spec.physical.warm_up_table.clone(), spec.initial.clone())?;
    build_all(&mut b, model, &spec.physical)?;
    b.build_cost_equation(&spec.costs, grid).map_err(tag_id)?;
    b.register(ledger)?;
    Ok(b.out)
}

/// Every structural step, without costs or ledger registration.
pub fn build_all(b: &mut FcchpBuilder, m: &mut Model, phys: &FcchpPhysicalParams) -> Result<()> {
    b.build_onoff_chain(m)?;
    b.build_min_durations(m)?;
    b.build_change_tracker(m)?;
    b.build_max_runtime(m)?;
    b.build_cold_start_flags(m, phys.cold_start_units)?;
    b.build_warmup_duration(m)?;
    b.build_warmup_phase(m)?;
    b.build_warmup_bounds(m)?;
    b.build_startup_shutdown();
    b.build_production_phase(m)?;
    b.build_power_equations(m, phys)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{solve_builtin, Solution, SolveOptions, Status};

    pub(crate) fn phys() -> FcchpPhysicalParams {
        FcchpPhysicalParams {
            eta_th: 0.5,
            eta_el: 0.3,
            p_th_max: 1.5,
            p_th_min: 0.75,
            p_th_init: 0.3,
            p_th_start_up: 0.9,
            d_on_min: 1.0,
            d_on_max: 4.0,
            d_off_min: 0.5,
            d_init: 0.25,
            d_start_up: 0.5,
            d_down: 0.25,
            warm_up_table: vec![1, 1, 2, 2, 2, 3],
            p_el_stand_by: 0.05,
            p_el_warm_up: 0.2,
            p_el_cold_start: 0.1,
            p_el_add_shut_down: 0.4,
            p_pr_warm_up: 1.0,
            p_pr_cold_start: 0.5,
            delta_p_th_prod: 1.2,
            cold_start_units: 3,
        }
    }

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(n, 0.25).unwrap()
    }

    fn solve(m: &Model) -> Solution {
        solve_builtin(m, &SolveOptions::default()).unwrap()
    }

    fn feasible(m: &Model) -> bool {
        solve(m).status == Status::Optimal
    }

    fn val(s: &Solution, v: VarId) -> f64 {
        s.value(v)
    }

    #[test]
    fn unit_counts() {
        let mut p = phys();
        p.d_on_min = 1.25;
        let u = derive_unit_params(&p, &grid(96)).unwrap();
        assert_eq!(u.on_min, 5);
        assert_eq!((u.lower_init, u.upper_init, u.start_up), (1, 1, 2));
        assert_eq!(u.shut_down, 1);
        assert!((u.el_down[0] - 0.4).abs() < 1e-12);
        assert!((u.ramp - 0.3).abs() < 1e-12);
    }

    #[test]
    fn start_up_steps_match_numeric_integration() {
        let mut p = phys();
        p.d_init = 0.1;
        p.d_start_up = 0.5;
        let g = grid(96);
        let u = derive_unit_params(&p, &g).unwrap();
        assert_eq!(u.start_up, 2);
        assert_eq!((u.lower_init, u.upper_init), (0, 1));
        let profile = |t: f64| {
            if t < 0.1 {
                0.3
            } else if t < 0.5 {
                0.3 + (0.9 - 0.3) * (t - 0.1) / 0.4
            } else {
                0.9
            }
        };
        let samples = 200_000;
        for k in 0..u.start_up {
            let a = k as f64 * 0.25;
            let dt = 0.25 / samples as f64;
            let avg: f64 = (0..samples).map(|s| profile(a + (s as f64 + 0.5) * dt)).sum::<f64>() * dt / 0.25;
            assert!((u.th_up[k] - avg).abs() < 1e-6, "step {k}: {} vs {avg}", u.th_up[k]);
            assert!((u.el_up[k] - avg * 0.6).abs() < 1e-6);
            assert!((u.pr_up[k] - avg * 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn horizon_too_short() {
        let mut p = phys();
        p.d_on_min = 3.0;
        assert!(matches!(derive_unit_params(&p, &grid(8)), Err(FcchpError::Parameter { .. })));
    }

    #[test]
    fn invariants_rejected() {
        let mut p = phys();
        p.eta_el = 0.6;
        assert!(derive_unit_params(&p, &grid(8)).is_err());
        let mut p = phys();
        p.warm_up_table = vec![2, 1];
        assert!(derive_unit_params(&p, &grid(8)).is_err());
    }

    fn off_state(l0: i64) -> FcchpInitialState {
        // Stopped at l0 after a start long ago.
        FcchpInitialState::replay(false, l0, l0 - 10, 1, false, 2)
    }

    fn builder(n: usize, unit: FcchpUnitParams, table: Vec<usize>, init: FcchpInitialState) -> FcchpBuilder {
        FcchpBuilder::new("chp", &grid(n), unit, table, init).unwrap()
    }

    fn unit_with(on_min: usize, off_min: usize, on_max: usize) -> FcchpUnitParams {
        let mut u = derive_unit_params(&phys(), &grid(96)).unwrap();
        u.on_min = on_min;
        u.off_min = off_min;
        u.on_max = on_max;
        u
    }

    #[test]
    fn onoff_unique_completion() {
        let mut m = Model::new();
        let mut b = builder(3, unit_with(1, 1, 50), vec![1], off_state(-1));
        b.build_onoff_chain(&mut m).unwrap();
        for (i, v) in [1.0, 1.0, 0.0].into_iter().enumerate() {
            m.fix(b.out.x[i], v).unwrap();
        }
        let mut obj = LinExpr::new();
        for i in 0..3 {
            obj += b.out.start[i];
            obj += b.out.stop[i];
        }
        // Both extremes of the event flags coincide.
        for sign in [1.0, -1.0] {
            m.set_objective(obj.scaled(sign)).unwrap();
            let s = solve(&m);
            let starts: Vec<f64> = b.out.start.iter().map(|&v| val(&s, v)).collect();
            let stops: Vec<f64> = b.out.stop.iter().map(|&v| val(&s, v)).collect();
            assert_eq!(starts, vec![1.0, 0.0, 0.0]);
            assert_eq!(stops, vec![0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn off_min_after_stop() {
        let mut m = Model::new();
        let mut b = builder(6, unit_with(1, 2, 50), vec![1], off_state(-5));
        b.build_onoff_chain(&mut m).unwrap();
        b.build_min_durations(&mut m).unwrap();
        m.fix(b.out.stop[3], 1.0).unwrap();
        m.set_objective(-1.0 * b.out.x[4]).unwrap();
        let s = solve(&m);
        assert_eq!(val(&s, b.out.x[4]), 0.0);
    }

    fn tracked(n: usize, on_max: usize, init: FcchpInitialState) -> (Model, FcchpBuilder) {
        let mut m = Model::new();
        let mut b = builder(n, unit_with(1, 1, on_max), vec![1], init);
        b.build_onoff_chain(&mut m).unwrap();
        b.build_change_tracker(&mut m).unwrap();
        b.build_max_runtime(&mut m).unwrap();
        (m, b)
    }

    fn running_since(start: i64) -> FcchpInitialState {
        FcchpInitialState::replay(true, start, start, 1, false, 2)
    }

    #[test]
    fn change_tracker_example() {
        let (mut m, b) = tracked(14, 50, running_since(-3));
        for i in 0..14 {
            m.fix(b.out.x[i], if i < 13 { 1.0 } else { 0.0 }).unwrap();
        }
        let s = solve(&m);
        assert_eq!(val(&s, b.out.l[12]), -3.0);
        assert_eq!(val(&s, b.out.l[13]), 14.0);
        for i in 0..13 {
            assert_eq!(val(&s, b.out.l[i]), -3.0);
        }
    }

    #[test]
    fn max_runtime_threshold() {
        for (on_max, ok) in [(16, false), (17, true)] {
            let (mut m, b) = tracked(14, on_max, running_since(-3));
            for i in 0..14 {
                m.fix(b.out.x[i], if i < 13 { 1.0 } else { 0.0 }).unwrap();
            }
            assert_eq!(feasible(&m), ok, "On_max = {on_max}");
        }
    }

    #[test]
    fn max_runtime_forces_early_stop() {
        // Start at 1 with On_max = 10: a stop at 12 or later is infeasible.
        for (stop_at, ok) in [(11, true), (12, false), (13, false)] {
            let (mut m, b) = tracked(14, 10, off_state(-2));
            for i in 1..=14 {
                m.fix(b.out.x[i - 1], if i < stop_at { 1.0 } else { 0.0 }).unwrap();
            }
            assert_eq!(feasible(&m), ok, "stop at {stop_at}");
        }
    }

    #[test]
    fn cold_start_forced_after_long_downtime() {
        let (mut m, mut b) = tracked(8, 50, off_state(0));
        b.build_cold_start_flags(&mut m, 3).unwrap();
        // Off at 1..4, start at 5: downtime 5 > 3.
        for i in 1..=8 {
            m.fix(b.out.x[i - 1], if i >= 5 { 1.0 } else { 0.0 }).unwrap();
        }
        m.set_objective(LinExpr::from(b.out.k[4])).unwrap();
        assert_eq!(val(&solve(&m), b.out.k[4]), 1.0);
        // Propagated while no change happens.
        m.set_objective(LinExpr::from(b.out.k[6])).unwrap();
        assert_eq!(val(&solve(&m), b.out.k[6]), 1.0);
    }

    #[test]
    fn warm_start_not_forced() {
        let (mut m, mut b) = tracked(8, 50, off_state(0));
        b.build_cold_start_flags(&mut m, 3).unwrap();
        // Start at 3: downtime 3, not above the threshold.
        for i in 1..=8 {
            m.fix(b.out.x[i - 1], if i >= 3 { 1.0 } else { 0.0 }).unwrap();
        }
        let mut obj = LinExpr::new();
        for &k in &b.out.k {
            obj += k;
        }
        m.set_objective(obj).unwrap();
        let s = solve(&m);
        assert!(b.out.k.iter().all(|&k| val(&s, k) == 0.0));
    }

    /// Builds everything on a short horizon with the given table.
    fn full(n: usize, table: Vec<usize>, init: FcchpInitialState, p: &FcchpPhysicalParams) -> (Model, FcchpBuilder) {
        let mut m = Model::new();
        let mut u = derive_unit_params(p, &grid(n)).unwrap();
        u.on_min = 1;
        u.off_min = 1;
        u.on_max = 50;
        let mut b = builder(n, u, table, init);
        build_all(&mut b, &mut m, p).unwrap();
        (m, b)
    }

    fn fix_pattern(m: &mut Model, b: &FcchpBuilder, on: impl Fn(usize) -> bool) {
        for i in 1..=b.out.n {
            m.fix(b.out.x[i - 1], flag(on(i))).unwrap();
        }
    }

    #[test]
    fn constant_warm_up_of_two() {
        let mut p = phys();
        p.warm_up_table = vec![2; 6];
        let init = FcchpInitialState::replay(false, 0, -10, 2, false, 2);
        let (mut m, b) = full(6, vec![2; 6], init, &p);
        fix_pattern(&mut m, &b, |i| i >= 3);
        let s = solve(&m);
        assert_eq!(s.status, Status::Optimal);
        let y: Vec<f64> = b.out.y.iter().map(|&v| val(&s, v)).collect();
        assert_eq!(y, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(val(&s, b.out.w[3]), 2.0);
    }

    #[test]
    fn identity_warm_up_after_downtime_of_four() {
        let table: Vec<usize> = (1..=8).collect();
        let mut p = phys();
        p.warm_up_table = table.clone();
        let init = FcchpInitialState::replay(false, 0, -12, 1, false, 2);
        let (mut m, b) = full(8, table, init, &p);
        // Stopped at 0; off 1..3; start at 4 gives downtime 4.
        fix_pattern(&mut m, &b, |i| i >= 4);
        let s = solve(&m);
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(val(&s, b.out.w[3]), 4.0);
        let y: Vec<f64> = b.out.y.iter().map(|&v| val(&s, v)).collect();
        assert_eq!(y, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn no_start_keeps_history() {
        let table = vec![1, 2, 3];
        let mut p = phys();
        p.warm_up_table = table.clone();
        let init = FcchpInitialState::replay(false, -1, -9, 3, false, 2);
        let (mut m, b) = full(6, table, init, &p);
        fix_pattern(&mut m, &b, |_| false);
        let s = solve(&m);
        for i in 0..6 {
            assert_eq!(val(&s, b.out.w[i]), 3.0);
            assert_eq!(val(&s, b.out.y[i]), 0.0);
            assert_eq!(val(&s, b.out.l[i]), -1.0);
            assert_eq!(val(&s, b.out.r[i]), -9.0);
        }
    }

    #[test]
    fn last_start_tracking() {
        let table = vec![1; 12];
        let mut p = phys();
        p.warm_up_table = table.clone();
        p.d_start_up = 0.25;
        let init = FcchpInitialState::replay(false, 0, -5, 1, false, 1);
        let (mut m, b) = full(12, table, init, &p);
        // Starts at 2 and 7; warm-up 1 and start-up 1 unit, so a stop at 5 is allowed.
        fix_pattern(&mut m, &b, |i| (2..5).contains(&i) || i >= 7);
        let s = solve(&m);
        assert_eq!(s.status, Status::Optimal);
        let r: Vec<f64> = b.out.r.iter().map(|&v| val(&s, v)).collect();
        assert_eq!(r, vec![-5.0, 2.0, 2.0, 2.0, 2.0, 2.0, 7.0, 7.0, 7.0, 7.0, 7.0, 7.0]);
    }

    #[test]
    fn stop_only_from_production() {
        let p = phys();
        let init = off_state(-1);
        let (mut m, b) = full(8, p.warm_up_table.clone(), init, &p);
        // Downtime 4 before the start at 3 gives two warm-up units, so the
        // stop at 4 would end a warm-up.
        fix_pattern(&mut m, &b, |i| i == 3);
        assert!(!feasible(&m));
    }

    #[test]
    fn event_flags_and_steps() {
        let p = phys();
        let init = off_state(-1);
        let (mut m, b) = full(10, p.warm_up_table.clone(), init, &p);
        // Downtime before unit 2 is 3 units: F_3 = 2 warm-up units at 2, 3.
        fix_pattern(&mut m, &b, |i| (2..9).contains(&i));
        let s = solve(&m);
        assert_eq!(s.status, Status::Optimal);
        let swu: Vec<f64> = b.out.stop_warm_up.iter().map(|&v| val(&s, v)).collect();
        assert_eq!(swu, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let z: Vec<f64> = b.out.z.iter().map(|&v| val(&s, v)).collect();
        assert_eq!(z, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let th: Vec<f64> = b.out.thermal_output.iter().map(|e| e.eval(&s.values)).collect();
        assert!((th[3] - b.unit.th_up[0]).abs() < 1e-9 && (th[4] - b.unit.th_up[1]).abs() < 1e-9);
        assert_eq!(th[1], 0.0);
        let jump: Vec<f64> = b.out.s.iter().map(|e| e.eval(&s.values)).collect();
        assert_eq!(jump[3], 1.0);
        assert_eq!(jump.iter().sum::<f64>(), 1.0);
        // Stop at 9: shut-down peak on top of stand-by.
        let e_in = b.out.electric_input[8].eval(&s.values);
        assert!((e_in - (p.p_el_stand_by + p.p_el_add_shut_down)).abs() < 1e-9);
        // Warm-up draw and no stand-by while on.
        let e_in = b.out.electric_input[1].eval(&s.values);
        assert!((e_in - p.p_el_warm_up).abs() < 1e-9);
        // Electric output proportional to heat.
        for i in 0..10 {
            let eo = b.out.electric_output[i].eval(&s.values);
            assert!((eo * p.eta_th - th[i] * p.eta_el).abs() < 1e-12);
        }
    }

    #[test]
    fn inconsistent_initial_state_rejected() {
        let u = derive_unit_params(&phys(), &grid(8)).unwrap();
        let mut init = FcchpInitialState::replay(true, -3, -3, 2, false, u.start_up);
        init.z0 = !init.z0;
        assert!(matches!(
            FcchpBuilder::new("c", &grid(8), u.clone(), phys().warm_up_table, init),
            Err(FcchpError::InitialState { .. })
        ));
        let init = FcchpInitialState::replay(true, -3, -4, 2, false, u.start_up);
        assert!(FcchpBuilder::new("c", &grid(8), u.clone(), phys().warm_up_table, init).is_err());
        let init = FcchpInitialState::replay(false, -3, -10, 5, false, u.start_up);
        assert!(FcchpBuilder::new("c", &grid(8), u, phys().warm_up_table, init).is_err());
    }

    #[test]
    fn costs_of_a_cycle() {
        let mut p = phys();
        p.warm_up_table = vec![2; 12];
        let init = FcchpInitialState::replay(false, -1, -9, 2, false, 2);
        let g = grid(12);
        let (mut m, mut b) = full(12, p.warm_up_table.clone(), init, &p);
        let costs = FcchpCostParams { k_pr: vec![0.0; 12], k_on: 7.0, k_off: 3.0, k_warm_up: 2.0, k_cold_start: 5.0, k_prod: 0.0 };
        b.build_cost_equation(&costs, &g).unwrap();
        fix_pattern(&mut m, &b, |i| (2..10).contains(&i));
        let mut obj = LinExpr::new();
        for f in &b.out.financial_input {
            obj.add_expr(f, 1.0);
        }
        m.set_objective(obj).unwrap();
        let s = solve(&m);
        // Downtime 3 before the start: exactly at the threshold, warm start.
        assert!((s.objective - (7.0 + 3.0 + 2.0 * 2.0)).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn cold_start_costs_per_warm_up_unit() {
        let mut p = phys();
        p.warm_up_table = vec![2; 12];
        let init = FcchpInitialState::replay(false, -3, -11, 2, false, 2);
        let g = grid(12);
        let (mut m, mut b) = full(12, p.warm_up_table.clone(), init, &p);
        let costs = FcchpCostParams { k_pr: vec![0.0; 12], k_on: 0.0, k_off: 0.0, k_warm_up: 0.0, k_cold_start: 5.0, k_prod: 0.0 };
        b.build_cost_equation(&costs, &g).unwrap();
        fix_pattern(&mut m, &b, |i| i >= 2);
        let mut obj = LinExpr::new();
        for f in &b.out.financial_input {
            obj.add_expr(f, 1.0);
        }
        m.set_objective(obj).unwrap();
        let s = solve(&m);
        assert!((s.objective - 10.0).abs() < 1e-9, "{}", s.objective);
    }
}
