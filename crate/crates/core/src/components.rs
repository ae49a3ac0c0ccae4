//! Sub-models for the standard building components: usage, grid
//! connection, heat/cooling pump, storages, PV, single-input converters and
//! a mechanical CHP with peak boiler.

use thiserror::Error;

use crate::assembly::{AssemblyError, BalanceLedger, Carrier, Financial, Side, TimeGrid};
use crate::milp::{LinExpr, Model, ModelError, Sense, VarId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComponentError {
    #[error("component `{id}`: {msg}")]
    Invalid { id: String, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

type Result<T> = std::result::Result<T, ComponentError>;

fn invalid(id: &str, msg: impl Into<String>) -> ComponentError {
    ComponentError::Invalid { id: id.to_string(), msg: msg.into() }
}

fn check_series(id: &str, what: &str, s: &[f64], grid: &TimeGrid) -> Result<()> {
    if s.len() != grid.n {
        return Err(invalid(id, format!("{what} has {} entries, expected {}", s.len(), grid.n)));
    }
    if let Some(i) = s.iter().position(|v| !v.is_finite()) {
        return Err(invalid(id, format!("{what} is not finite at unit {}", i + 1)));
    }
    Ok(())
}

fn check_nonneg(id: &str, what: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(invalid(id, format!("{what} must be finite and non-negative, got {v}")));
    }
    Ok(())
}

fn constants(s: &[f64]) -> Vec<LinExpr> {
    s.iter().map(|&v| LinExpr::constant(v)).collect()
}

fn exprs(vars: &[VarId]) -> Vec<LinExpr> {
    vars.iter().map(|&v| LinExpr::from(v)).collect()
}

fn role_in(carrier: Carrier) -> &'static str {
    match carrier {
        Carrier::Electric => "electricInputPower",
        Carrier::Heat => "thermalInputPower",
        Carrier::Cold => "coolingInputPower",
    }
}

fn role_out(carrier: Carrier) -> &'static str {
    match carrier {
        Carrier::Electric => "electricOutputPower",
        Carrier::Heat => "thermalOutputPower",
        Carrier::Cold => "coolingOutputPower",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageSpec {
    pub id: String,
    pub electric: Vec<f64>,
    pub hot_water: Vec<f64>,
    pub heating_min: Vec<f64>,
    pub heating_max: Vec<f64>,
    pub cooling_min: Vec<f64>,
    pub cooling_max: Vec<f64>,
    pub max_electric: f64,
    pub max_heating: f64,
    pub max_cooling: f64,
}

/// Fixed electric and hot-water demand plus flexible heating and cooling
/// within their per-unit bands.
pub fn build_usage(model: &mut Model, ledger: &mut BalanceLedger, spec: &UsageSpec, grid: &TimeGrid) -> Result<()> {
    let id = spec.id.as_str();
    for (what, s) in [
        ("electric demand", &spec.electric),
        ("hot-water demand", &spec.hot_water),
        ("minimum heating", &spec.heating_min),
        ("maximum heating", &spec.heating_max),
        ("minimum cooling", &spec.cooling_min),
        ("maximum cooling", &spec.cooling_max),
    ] {
        check_series(id, what, s, grid)?;
        if let Some(i) = s.iter().position(|&v| v < 0.0) {
            return Err(invalid(id, format!("{what} is negative at unit {}", i + 1)));
        }
    }
    let over = |s: &[f64], cap: f64| s.iter().position(|&v| v > cap + 1e-9);
    if let Some(i) = over(&spec.electric, spec.max_electric) {
        return Err(invalid(id, format!("electric demand exceeds maxElectricPowerUse at unit {}", i + 1)));
    }
    if let Some(i) = over(&spec.hot_water, spec.max_heating) {
        return Err(invalid(id, format!("hot-water demand exceeds maxHeatingPowerUse at unit {}", i + 1)));
    }
    let band = |lo: &[f64], hi: &[f64], cap: f64, what: &str| -> Result<()> {
        for i in 0..grid.n {
            if lo[i] > hi[i] {
                return Err(invalid(id, format!("{what} band minimum exceeds its maximum at unit {}", i + 1)));
            }
            if hi[i] > cap + 1e-9 {
                return Err(invalid(id, format!("{what} band exceeds the declared maximum at unit {}", i + 1)));
            }
        }
        Ok(())
    };
    band(&spec.heating_min, &spec.heating_max, spec.max_heating, "heating")?;
    band(&spec.cooling_min, &spec.cooling_max, spec.max_cooling, "cooling")?;

    ledger.add_power(Carrier::Electric, Side::Sink, id, "electricInputPower", constants(&spec.electric))?;
    if spec.hot_water.iter().any(|&v| v != 0.0) {
        ledger.add_power(Carrier::Heat, Side::Sink, id, "hotWaterInputPower", constants(&spec.hot_water))?;
    }
    let mut flexible = |carrier: Carrier, lo: &[f64], hi: &[f64], var: &str| -> Result<()> {
        if hi.iter().all(|&v| v == 0.0) {
            return Ok(());
        }
        let mut series = Vec::with_capacity(grid.n);
        for i in 0..grid.n {
            series.push(if lo[i] == hi[i] {
                LinExpr::constant(lo[i])
            } else {
                model.add_continuous(format!("{id}.{var}.{}", i + 1), lo[i], hi[i])?.into()
            });
        }
        ledger.add_power(carrier, Side::Sink, id, role_in(carrier), series)?;
        Ok(())
    };
    flexible(Carrier::Heat, &spec.heating_min, &spec.heating_max, "heating")?;
    flexible(Carrier::Cold, &spec.cooling_min, &spec.cooling_max, "cooling")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub id: String,
    pub max_feed_in: f64,
    pub max_supply: f64,
    /// ct/kWh per unit.
    pub price: Vec<f64>,
    pub refund: Vec<f64>,
}

pub fn build_grid(model: &mut Model, ledger: &mut BalanceLedger, spec: &GridSpec, grid: &TimeGrid) -> Result<()> {
    let id = spec.id.as_str();
    check_nonneg(id, "maxFeedInPower", spec.max_feed_in)?;
    check_nonneg(id, "maxSupplyPower", spec.max_supply)?;
    check_series(id, "price", &spec.price, grid)?;
    check_series(id, "refund", &spec.refund, grid)?;
    let h = grid.hours_per_unit;
    let mut supply = Vec::new();
    let mut feed = Vec::new();
    for i in 1..=grid.n {
        supply.push(model.add_continuous(format!("{id}.supply.{i}"), 0.0, spec.max_supply)?);
        feed.push(model.add_continuous(format!("{id}.feedIn.{i}"), 0.0, spec.max_feed_in)?);
    }
    ledger.add_power(Carrier::Electric, Side::Source, id, "electricOutputPower", exprs(&supply))?;
    ledger.add_power(Carrier::Electric, Side::Sink, id, "electricInputPower", exprs(&feed))?;
    let cost = supply.iter().zip(&spec.price).map(|(&s, &p)| LinExpr::term(s, p * h)).collect();
    let yield_ = feed.iter().zip(&spec.refund).map(|(&f, &r)| LinExpr::term(f, r * h)).collect();
    ledger.add_financial(Financial::Input, id, cost)?;
    ledger.add_financial(Financial::Output, id, yield_)?;
    Ok(())
}

/// Binary on/off chain with start/stop flags and minimum run/off rows.
/// The pre-horizon state is "on" or "off" since unit `last_change`.
#[derive(Debug, Clone)]
pub struct SwitchChain {
    pub on: Vec<VarId>,
    pub start: Vec<VarId>,
    pub stop: Vec<VarId>,
}

/// Unit index of the last pre-horizon switch from its age in hours.
pub fn last_change_unit(grid: &TimeGrid, hours_ago: f64) -> i64 {
    (1 - grid.units_ceil(hours_ago) as i64).min(0)
}

pub fn build_switch_chain(
    model: &mut Model,
    id: &str,
    grid: &TimeGrid,
    (on_at_begin, last_change): (bool, i64),
    min_run: usize,
    min_off: usize,
) -> Result<SwitchChain> {
    let mut chain = SwitchChain { on: Vec::new(), start: Vec::new(), stop: Vec::new() };
    let hist = |k: i64, starts: bool| k == last_change && starts == on_at_begin;
    let at = |v: &[VarId], k: i64, starts: bool| -> LinExpr {
        if k >= 1 {
            v[(k - 1) as usize].into()
        } else {
            LinExpr::constant(if hist(k, starts) { 1.0 } else { 0.0 })
        }
    };
    for i in 1..=grid.n {
        let x = model.add_binary(format!("{id}.on.{i}"))?;
        let start = model.add_binary(format!("{id}.start.{i}"))?;
        let stop = model.add_binary(format!("{id}.stop.{i}"))?;
        let prev = if i == 1 {
            LinExpr::constant(if on_at_begin { 1.0 } else { 0.0 })
        } else {
            chain.on[i - 2].into()
        };
        let t = |s: &str| format!("{id}.startstop.{s}.i={i}");
        model.add_row(start, Sense::Ge, x - prev.clone(), t("up_ge"))?;
        model.add_row(start, Sense::Le, x, t("up_le_cur"))?;
        model.add_row(start, Sense::Le, 1.0 - prev.clone(), t("up_le_prev"))?;
        model.add_row(stop, Sense::Ge, prev.clone() - x, t("down_ge"))?;
        model.add_row(stop, Sense::Le, prev.clone(), t("down_le_prev"))?;
        model.add_row(stop, Sense::Le, 1.0 - LinExpr::from(x), t("down_le_cur"))?;
        chain.on.push(x);
        chain.start.push(start);
        chain.stop.push(stop);
    }
    for i in 1..=grid.n as i64 {
        let x = chain.on[(i - 1) as usize];
        if min_run > 1 {
            let mut recent = LinExpr::new();
            for k in (i - min_run as i64 + 1)..i {
                recent += at(&chain.start, k, true);
            }
            let recent = recent.normalized();
            if !(recent.is_constant() && recent.constant == 0.0) {
                model.add_row(x, Sense::Ge, recent, format!("{id}.minon.i={i}"))?;
            }
        }
        if min_off > 1 {
            let mut recent = LinExpr::new();
            for k in (i - min_off as i64 + 1)..i {
                recent += at(&chain.stop, k, false);
            }
            let recent = recent.normalized();
            if !(recent.is_constant() && recent.constant == 0.0) {
                model.add_row(x, Sense::Le, 1.0 - recent, format!("{id}.minoff.i={i}"))?;
            }
        }
    }
    Ok(chain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpMode {
    Heating,
    Cooling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatPumpSpec {
    pub id: String,
    pub electric_power: f64,
    pub cop: Vec<f64>,
    pub min_off_hours: f64,
    pub min_run_hours: f64,
    pub on_at_begin: bool,
    pub last_change_hours: f64,
    pub mode: PumpMode,
}

pub fn build_heat_pump(
    model: &mut Model,
    ledger: &mut BalanceLedger,
    spec: &HeatPumpSpec,
    grid: &TimeGrid,
) -> Result<SwitchChain> {
    let id = spec.id.as_str();
    if !(spec.electric_power > 0.0) || !spec.electric_power.is_finite() {
        return Err(invalid(id, "electricPower must be positive"));
    }
    check_series(id, "COP", &spec.cop, grid)?;
    if let Some(i) = spec.cop.iter().position(|&c| c <= 0.0) {
        return Err(invalid(id, format!("COP must be positive (unit {})", i + 1)));
    }
    check_nonneg(id, "minOffTimeInHours", spec.min_off_hours)?;
    check_nonneg(id, "minRunTimeInHours", spec.min_run_hours)?;
    check_nonneg(id, "lastStartStopChangeInHours", spec.last_change_hours)?;
    let history = (spec.on_at_begin, last_change_unit(grid, spec.last_change_hours));
    let chain = build_switch_chain(
        model,
        id,
        grid,
        history,
        grid.units_ceil(spec.min_run_hours),
        grid.units_ceil(spec.min_off_hours),
    )?;
    let p = spec.electric_power;
    let draw = chain.on.iter().map(|&x| LinExpr::term(x, p)).collect();
    let out = chain.on.iter().zip(&spec.cop).map(|(&x, &c)| LinExpr::term(x, p * c)).collect();
    let carrier = match spec.mode {
        PumpMode::Heating => Carrier::Heat,
        PumpMode::Cooling => Carrier::Cold,
    };
    ledger.add_power(Carrier::Electric, Side::Sink, id, "electricInputPower", draw)?;
    ledger.add_power(carrier, Side::Source, id, role_out(carrier), out)?;
    ledger.add_state(id, "isOn", exprs(&chain.on))?;
    Ok(chain)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageSpec {
    pub id: String,
    pub carrier: Carrier,
    pub min_level: f64,
    pub max_level: f64,
    pub loss_per_hour: f64,
    pub max_charge: f64,
    pub max_discharge: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    pub initial_level: f64,
}

#[derive(Debug, Clone)]
pub struct StorageVars {
    pub level: Vec<VarId>,
    pub charge: Vec<VarId>,
    pub discharge: Vec<VarId>,
}

pub fn level_role(carrier: Carrier) -> &'static str {
    match carrier {
        Carrier::Electric => "electricEnergyLevel",
        Carrier::Heat => "thermalEnergyLevel",
        Carrier::Cold => "coolingEnergyLevel",
    }
}

/// `E_i = E_{i-1} (1 - loss h) + (charge_i eta_c - discharge_i / eta_d) h`.
pub fn build_storage(
    model: &mut Model,
    ledger: &mut BalanceLedger,
    spec: &StorageSpec,
    grid: &TimeGrid,
) -> Result<StorageVars> {
    let id = spec.id.as_str();
    let h = grid.hours_per_unit;
    if !(spec.min_level <= spec.initial_level && spec.initial_level <= spec.max_level) {
        return Err(invalid(id, "need minLevel <= initialLevel <= maxLevel"));
    }
    check_nonneg(id, "maxChargePower", spec.max_charge)?;
    check_nonneg(id, "maxDischargePower", spec.max_discharge)?;
    let eff_ok = |e: f64| e > 0.0 && e <= 1.0;
    if !eff_ok(spec.charge_efficiency) || !eff_ok(spec.discharge_efficiency) {
        return Err(invalid(id, "efficiencies must lie in (0, 1]"));
    }
    if !(spec.loss_per_hour >= 0.0) || spec.loss_per_hour * h >= 1.0 {
        return Err(invalid(id, "loss per time unit must lie in [0, 1)"));
    }
    let keep = 1.0 - spec.loss_per_hour * h;
    let mut vars = StorageVars { level: Vec::new(), charge: Vec::new(), discharge: Vec::new() };
    for i in 1..=grid.n {
        let e = model.add_continuous(format!("{id}.level.{i}"), spec.min_level, spec.max_level)?;
        let c = model.add_continuous(format!("{id}.charge.{i}"), 0.0, spec.max_charge)?;
        let d = model.add_continuous(format!("{id}.discharge.{i}"), 0.0, spec.max_discharge)?;
        let prev = if i == 1 { LinExpr::constant(spec.initial_level) } else { vars.level[i - 2].into() };
        let flow = (spec.charge_efficiency * h) * c - LinExpr::term(d, h / spec.discharge_efficiency);
        model.add_row(e, Sense::Eq, prev.scaled(keep) + flow, format!("{id}.level.i={i}"))?;
        vars.level.push(e);
        vars.charge.push(c);
        vars.discharge.push(d);
    }
    ledger.add_power(spec.carrier, Side::Sink, id, role_in(spec.carrier), exprs(&vars.charge))?;
    ledger.add_power(spec.carrier, Side::Source, id, role_out(spec.carrier), exprs(&vars.discharge))?;
    ledger.add_state(id, level_role(spec.carrier), exprs(&vars.level))?;
    Ok(vars)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvSpec {
    pub id: String,
    pub output: Vec<f64>,
    pub curtailable: bool,
}

pub fn build_profile_source(model: &mut Model, ledger: &mut BalanceLedger, spec: &PvSpec, grid: &TimeGrid) -> Result<()> {
    let id = spec.id.as_str();
    check_series(id, "output", &spec.output, grid)?;
    if let Some(i) = spec.output.iter().position(|&v| v < 0.0) {
        return Err(invalid(id, format!("output is negative at unit {}", i + 1)));
    }
    let series = if spec.curtailable {
        let mut s = Vec::new();
        for (i, &v) in spec.output.iter().enumerate() {
            s.push(model.add_continuous(format!("{id}.output.{}", i + 1), 0.0, v)?.into());
        }
        s
    } else {
        constants(&spec.output)
    };
    ledger.add_power(Carrier::Electric, Side::Source, id, "electricOutputPower", series)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputCarrier {
    Electric,
    Heat,
    Primary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConverterSpec {
    pub id: String,
    pub input: InputCarrier,
    pub output: Carrier,
    pub efficiency: f64,
    pub max_input: f64,
    /// Required for primary input (ct/kWh per unit).
    pub input_price: Option<Vec<f64>>,
}

pub fn build_converter(
    model: &mut Model,
    ledger: &mut BalanceLedger,
    spec: &ConverterSpec,
    grid: &TimeGrid,
) -> Result<Vec<VarId>> {
    let id = spec.id.as_str();
    if !(spec.efficiency > 0.0 && spec.efficiency <= 1.0) {
        return Err(invalid(id, "efficiency must lie in (0, 1]"));
    }
    if !(spec.max_input > 0.0) || !spec.max_input.is_finite() {
        return Err(invalid(id, "maxInputPower must be positive"));
    }
    if spec.output == Carrier::Electric {
        return Err(invalid(id, "converters produce heat or cold"));
    }
    let mut input = Vec::new();
    for i in 1..=grid.n {
        input.push(model.add_continuous(format!("{id}.input.{i}"), 0.0, spec.max_input)?);
    }
    let out = input.iter().map(|&v| LinExpr::term(v, spec.efficiency)).collect();
    ledger.add_power(spec.output, Side::Source, id, role_out(spec.output), out)?;
    match spec.input {
        InputCarrier::Electric => ledger.add_power(Carrier::Electric, Side::Sink, id, "electricInputPower", exprs(&input))?,
        InputCarrier::Heat => ledger.add_power(Carrier::Heat, Side::Sink, id, "thermalInputPower", exprs(&input))?,
        InputCarrier::Primary => {
            let price = spec.input_price.as_ref().ok_or_else(|| invalid(id, "primary input needs a price series"))?;
            check_series(id, "input price", price, grid)?;
            let h = grid.hours_per_unit;
            let cost = input.iter().zip(price).map(|(&v, &p)| LinExpr::term(v, p * h)).collect();
            ledger.add_financial(Financial::Input, id, cost)?;
            ledger.add_state(id, "primaryInputPower", exprs(&input))?;
        }
    }
    Ok(input)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechChpSpec {
    pub id: String,
    pub eta_th: f64,
    pub eta_el: f64,
    pub p_th_max: f64,
    pub p_th_min: f64,
    pub boiler_efficiency: f64,
    pub boiler_max: f64,
    pub k_on: f64,
    pub k_off: f64,
    pub min_run_hours: f64,
    pub min_off_hours: f64,
    pub primary_price: Vec<f64>,
    pub on_at_begin: bool,
    pub last_change_hours: f64,
}

#[derive(Debug, Clone)]
pub struct MechChpVars {
    pub chain: SwitchChain,
    pub thermal: Vec<VarId>,
    pub boiler_on: Vec<VarId>,
    pub boiler: Vec<VarId>,
}

pub fn build_mech_chp(
    model: &mut Model,
    ledger: &mut BalanceLedger,
    spec: &MechChpSpec,
    grid: &TimeGrid,
) -> Result<MechChpVars> {
    let id = spec.id.as_str();
    let in_unit = |v: f64| v > 0.0 && v < 1.0;
    if !in_unit(spec.eta_th) || !in_unit(spec.eta_el) || spec.eta_th + spec.eta_el >= 1.0 {
        return Err(invalid(id, "efficiencies must lie in (0, 1) and sum to less than 1"));
    }
    if !(0.0 <= spec.p_th_min && spec.p_th_min <= spec.p_th_max) {
        return Err(invalid(id, "need 0 <= P_th_min <= P_th_max"));
    }
    if !(spec.boiler_efficiency > 0.0 && spec.boiler_efficiency <= 1.0) {
        return Err(invalid(id, "boiler efficiency must lie in (0, 1]"));
    }
    check_nonneg(id, "boiler power", spec.boiler_max)?;
    check_series(id, "primary price", &spec.primary_price, grid)?;
    let history = (spec.on_at_begin, last_change_unit(grid, spec.last_change_hours));
    let chain = build_switch_chain(
        model,
        id,
        grid,
        history,
        grid.units_ceil(spec.min_run_hours),
        grid.units_ceil(spec.min_off_hours),
    )?;
    let h = grid.hours_per_unit;
    let mut v = MechChpVars { chain, thermal: Vec::new(), boiler_on: Vec::new(), boiler: Vec::new() };
    let mut cost = Vec::new();
    let mut primary = Vec::new();
    for i in 1..=grid.n {
        let on = v.chain.on[i - 1];
        let u = model.add_continuous(format!("{id}.thermal.{i}"), 0.0, spec.p_th_max)?;
        model.add_row(spec.p_th_min * on, Sense::Le, u, format!("{id}.band.lo.i={i}"))?;
        model.add_row(u, Sense::Le, spec.p_th_max * on, format!("{id}.band.hi.i={i}"))?;
        let b_on = model.add_binary(format!("{id}.boilerOn.{i}"))?;
        let q = model.add_continuous(format!("{id}.boiler.{i}"), 0.0, spec.boiler_max)?;
        model.add_row(q, Sense::Le, spec.boiler_max * b_on, format!("{id}.boiler.i={i}"))?;
        let pr = (1.0 / spec.eta_th) * u + LinExpr::term(q, 1.0 / spec.boiler_efficiency);
        let mut c = pr.scaled(spec.primary_price[i - 1] * h);
        c.add_term(v.chain.start[i - 1], spec.k_on);
        c.add_term(v.chain.stop[i - 1], spec.k_off);
        cost.push(c.normalized());
        primary.push(pr);
        v.thermal.push(u);
        v.boiler_on.push(b_on);
        v.boiler.push(q);
    }
    let ratio = spec.eta_el / spec.eta_th;
    ledger.add_power(Carrier::Heat, Side::Source, id, "thermalOutputPower", exprs(&v.thermal))?;
    ledger.add_power(Carrier::Heat, Side::Source, id, "boilerThermalOutputPower", exprs(&v.boiler))?;
    let electric = v.thermal.iter().map(|&u| LinExpr::term(u, ratio)).collect();
    ledger.add_power(Carrier::Electric, Side::Source, id, "electricOutputPower", electric)?;
    ledger.add_financial(Financial::Input, id, cost)?;
    ledger.add_state(id, "primaryInputPower", primary)?;
    ledger.add_state(id, "isOn", exprs(&v.chain.on))?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{build_balances, build_objective};
    use crate::solve::{solve_builtin, Solution, SolveOptions, Status};

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(n, 0.25).unwrap()
    }

    fn usage(n: usize, electric: f64) -> UsageSpec {
        UsageSpec {
            id: "Usage".into(),
            electric: vec![electric; n],
            hot_water: vec![0.0; n],
            heating_min: vec![0.0; n],
            heating_max: vec![0.0; n],
            cooling_min: vec![0.0; n],
            cooling_max: vec![0.0; n],
            max_electric: 32.0,
            max_heating: 32.0,
            max_cooling: 0.0,
        }
    }

    fn grid_spec(n: usize, price: f64, refund: f64, feed: f64) -> GridSpec {
        GridSpec { id: "Grid".into(), max_feed_in: feed, max_supply: 32.0, price: vec![price; n], refund: vec![refund; n] }
    }

    fn finish(m: &mut Model, ledger: &BalanceLedger) -> Solution {
        build_balances(m, ledger).unwrap();
        build_objective(m, ledger).unwrap();
        solve_builtin(m, &SolveOptions::default()).unwrap()
    }

    fn series(s: &Solution, ledger: &BalanceLedger, role: &str, comp: &str) -> Vec<f64> {
        let e = ledger
            .power
            .iter()
            .find(|e| e.role == role && e.component == comp)
            .map(|e| &e.series)
            .or_else(|| ledger.states.iter().find(|e| e.role == role && e.component == comp).map(|e| &e.series))
            .unwrap();
        e.iter().map(|x| x.eval(&s.values)).collect()
    }

    #[test]
    fn grid_covers_demand() {
        let g = grid(4);
        let mut m = Model::new();
        let mut l = BalanceLedger::new(4);
        build_usage(&mut m, &mut l, &usage(4, 2.0), &g).unwrap();
        build_grid(&mut m, &mut l, &grid_spec(4, 30.0, 10.0, 0.0), &g).unwrap();
        let s = finish(&mut m, &l);
        assert_eq!(series(&s, &l, "electricOutputPower", "Grid"), vec![2.0; 4]);
        assert!((s.objective - 4.0 * 2.0 * 0.25 * 30.0).abs() < 1e-9);
        assert_eq!(m.constraints_with_prefix("balance.heat").count(), 0);
        assert_eq!(m.constraints_with_prefix("balance.cold").count(), 0);
    }

    #[test]
    fn no_simultaneous_supply_and_feed_in() {
        let g = grid(4);
        let mut m = Model::new();
        let mut l = BalanceLedger::new(4);
        build_usage(&mut m, &mut l, &usage(4, 1.0), &g).unwrap();
        build_grid(&mut m, &mut l, &grid_spec(4, 30.0, 10.0, 5.0), &g).unwrap();
        let pv = PvSpec { id: "PV".into(), output: vec![0.0, 3.0, 0.5, 4.0], curtailable: false };
        build_profile_source(&mut m, &mut l, &pv, &g).unwrap();
        let s = finish(&mut m, &l);
        let sup = series(&s, &l, "electricOutputPower", "Grid");
        let feed = series(&s, &l, "electricInputPower", "Grid");
        for i in 0..4 {
            assert!(sup[i] * feed[i] < 1e-12, "unit {i}: {} {}", sup[i], feed[i]);
        }
        assert!((feed[1] - 2.0).abs() < 1e-9 && (sup[2] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn curtailment_absorbs_surplus() {
        let g = grid(2);
        let mut m = Model::new();
        let mut l = BalanceLedger::new(2);
        build_usage(&mut m, &mut l, &usage(2, 1.0), &g).unwrap();
        build_grid(&mut m, &mut l, &grid_spec(2, 30.0, 10.0, 0.5), &g).unwrap();
        let pv = PvSpec { id: "PV".into(), output: vec![5.0, 5.0], curtailable: true };
        build_profile_source(&mut m, &mut l, &pv, &g).unwrap();
        let s = finish(&mut m, &l);
        assert_eq!(s.status, Status::Optimal);
        let out = series(&s, &l, "electricOutputPower", "PV");
        assert!(out.iter().all(|&v| (v - 1.5).abs() < 1e-9));
    }

    #[test]
    fn heat_pump_output_and_off_state() {
        let g = grid(3);
        let spec = HeatPumpSpec {
            id: "HeatPump".into(),
            electric_power: 1.8,
            cop: vec![3.0; 3],
            min_off_hours: 0.25,
            min_run_hours: 0.25,
            on_at_begin: false,
            last_change_hours: 0.5,
            mode: PumpMode::Heating,
        };
        let mut m = Model::new();
        let mut l = BalanceLedger::new(3);
        let chain = build_heat_pump(&mut m, &mut l, &spec, &g).unwrap();
        assert_eq!(m.constraints_with_prefix("HeatPump.minon").count(), 0);
        m.fix(chain.on[0], 1.0).unwrap();
        m.fix(chain.on[1], 0.0).unwrap();
        m.fix(chain.on[2], 0.0).unwrap();
        let s = solve_builtin(&m, &SolveOptions::default()).unwrap();
        let heat = series(&s, &l, "thermalOutputPower", "HeatPump");
        let el = series(&s, &l, "electricInputPower", "HeatPump");
        assert!((heat[0] - 5.4).abs() < 1e-12);
        assert_eq!((heat[1], heat[2], el[1]), (0.0, 0.0, 0.0));
        assert_eq!(el[0], 1.8);
    }

    #[test]
    fn min_run_with_history() {
        let g = grid(6);
        // Switched on 0.25 h ago with a 1 h minimum run: on through unit 3.
        let mut m = Model::new();
        let chain = build_switch_chain(&mut m, "hp", &g, (true, last_change_unit(&g, 0.25)), 4, 1).unwrap();
        let mut obj = LinExpr::new();
        for &x in &chain.on {
            obj += x;
        }
        m.set_objective(obj).unwrap();
        let s = solve_builtin(&m, &SolveOptions::default()).unwrap();
        let on: Vec<f64> = chain.on.iter().map(|&v| s.value(v)).collect();
        assert_eq!(on, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(last_change_unit(&g, 0.5), -1);
        assert_eq!(last_change_unit(&g, 0.0), 0);
    }

    #[test]
    fn storage_level_replay() {
        let g = grid(6);
        let spec = StorageSpec {
            id: "Buffer".into(),
            carrier: Carrier::Heat,
            min_level: 0.0,
            max_level: 20.82,
            loss_per_hour: 0.02,
            max_charge: 10.0,
            max_discharge: 10.0,
            charge_efficiency: 0.9,
            discharge_efficiency: 0.8,
            initial_level: 1.0,
        };
        let mut m = Model::new();
        let mut l = BalanceLedger::new(6);
        let v = build_storage(&mut m, &mut l, &spec, &g).unwrap();
        let charge = [4.0, 0.0, 10.0, 2.0, 0.0, 0.0];
        let discharge = [0.0, 1.0, 0.0, 0.0, 3.0, 0.5];
        for i in 0..6 {
            m.fix(v.charge[i], charge[i]).unwrap();
            m.fix(v.discharge[i], discharge[i]).unwrap();
        }
        let s = solve_builtin(&m, &SolveOptions::default()).unwrap();
        let mut e = 1.0;
        for i in 0..6 {
            e = e * (1.0 - 0.02 * 0.25) + (charge[i] * 0.9 - discharge[i] / 0.8) * 0.25;
            assert!((s.value(v.level[i]) - e).abs() < 1e-9);
        }
        let lvl = series(&s, &l, "thermalEnergyLevel", "Buffer");
        assert!((lvl[5] - e).abs() < 1e-9);
    }

    #[test]
    fn storage_rejects_total_loss() {
        let g = grid(2);
        let spec = StorageSpec {
            id: "B".into(),
            carrier: Carrier::Electric,
            min_level: 0.0,
            max_level: 1.0,
            loss_per_hour: 4.0,
            max_charge: 1.0,
            max_discharge: 1.0,
            charge_efficiency: 1.0,
            discharge_efficiency: 1.0,
            initial_level: 0.0,
        };
        assert!(build_storage(&mut Model::new(), &mut BalanceLedger::new(2), &spec, &g).is_err());
    }

    #[test]
    fn absorption_chiller_ratio() {
        let g = grid(1);
        let spec = ConverterSpec {
            id: "Chiller".into(),
            input: InputCarrier::Heat,
            output: Carrier::Cold,
            efficiency: 0.7,
            max_input: 20.0,
            input_price: None,
        };
        let mut m = Model::new();
        let mut l = BalanceLedger::new(1);
        let input = build_converter(&mut m, &mut l, &spec, &g).unwrap();
        m.fix(input[0], 10.0).unwrap();
        let s = solve_builtin(&m, &SolveOptions::default()).unwrap();
        assert!((series(&s, &l, "coolingOutputPower", "Chiller")[0] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn usage_band_checks() {
        let g = grid(2);
        let mut u = usage(2, 1.0);
        u.heating_min = vec![1.0, 3.0];
        u.heating_max = vec![3.0, 2.0];
        let err = build_usage(&mut Model::new(), &mut BalanceLedger::new(2), &u, &g).unwrap_err();
        assert!(err.to_string().contains("unit 2"), "{err}");
        // Degenerate band: fixed values, no variables.
        let mut u = usage(2, 1.0);
        u.heating_min = vec![2.0, 2.0];
        u.heating_max = vec![2.0, 2.0];
        let mut m = Model::new();
        build_usage(&mut m, &mut BalanceLedger::new(2), &u, &g).unwrap();
        assert_eq!(m.num_vars(), 0);
    }

    #[test]
    fn heating_band_is_front_loaded_at_cheap_cop() {
        let n = 4;
        let g = grid(n);
        let mut u = usage(n, 0.0);
        u.heating_min = vec![1.0; n];
        u.heating_max = vec![3.0; n];
        let mut m = Model::new();
        let mut l = BalanceLedger::new(n);
        build_usage(&mut m, &mut l, &u, &g).unwrap();
        build_grid(&mut m, &mut l, &grid_spec(n, 30.0, 0.0, 0.0), &g).unwrap();
        let hp = ConverterSpec {
            id: "Rod".into(),
            input: InputCarrier::Electric,
            output: Carrier::Heat,
            efficiency: 1.0,
            max_input: 5.0,
            input_price: None,
        };
        build_converter(&mut m, &mut l, &hp, &g).unwrap();
        let s = finish(&mut m, &l);
        let h = series(&s, &l, "thermalInputPower", "Usage");
        assert!(h.iter().all(|&v| (1.0 - 1e-9..=3.0 + 1e-9).contains(&v)));
        assert!((s.objective - 4.0 * 0.25 * 30.0).abs() < 1e-9);
    }

    #[test]
    fn mech_chp_boiler_covers_spike() {
        let n = 3;
        let g = grid(n);
        let mut u = usage(n, 0.0);
        u.heating_min = vec![2.0, 9.0, 2.0];
        u.heating_max = vec![2.0, 9.0, 2.0];
        let spec = MechChpSpec {
            id: "CHP".into(),
            eta_th: 0.55,
            eta_el: 0.3,
            p_th_max: 6.0,
            p_th_min: 2.0,
            boiler_efficiency: 0.9,
            boiler_max: 10.0,
            k_on: 1.0,
            k_off: 1.0,
            min_run_hours: 0.25,
            min_off_hours: 0.25,
            primary_price: vec![6.0; n],
            on_at_begin: true,
            last_change_hours: 5.0,
        };
        let mut m = Model::new();
        let mut l = BalanceLedger::new(n);
        build_usage(&mut m, &mut l, &u, &g).unwrap();
        build_grid(&mut m, &mut l, &grid_spec(n, 30.0, 8.0, 32.0), &g).unwrap();
        build_mech_chp(&mut m, &mut l, &spec, &g).unwrap();
        let s = finish(&mut m, &l);
        assert_eq!(s.status, Status::Optimal);
        let chp = series(&s, &l, "thermalOutputPower", "CHP");
        let boiler = series(&s, &l, "boilerThermalOutputPower", "CHP");
        assert!((chp[1] + boiler[1] - 9.0).abs() < 1e-9);
        assert!(boiler[1] >= 3.0 - 1e-9);
        let el = series(&s, &l, "electricOutputPower", "CHP");
        for i in 0..n {
            assert!((el[i] - chp[i] * 0.3 / 0.55).abs() < 1e-12);
        }
    }
}
