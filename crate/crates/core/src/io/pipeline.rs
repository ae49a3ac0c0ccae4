//! From parsed descriptions to a model with balances and objective.

use super::config::{BuildingConfiguration, ComponentConfig};
use super::situation::{BuildingSituation, ComponentSituation, SeriesRef};
use super::timeseries::{load_timeseries, SeriesSource};
use super::IoError;
use crate::assembly::{build_balances, build_objective, BalanceLedger, TimeGrid};
use crate::components::{
    build_converter, build_grid, build_heat_pump, build_mech_chp, build_profile_source, build_storage, build_usage,
    last_change_unit, ConverterSpec, GridSpec, HeatPumpSpec, MechChpSpec, PvSpec, StorageSpec, UsageSpec,
};
use crate::fcchp::{build_fcchp, derive_unit_params, FcchpCostParams, FcchpInitialState, FcchpModel, FcchpSpec};
use crate::milp::Model;

pub struct Scenario {
    pub id: String,
    pub grid: TimeGrid,
    pub model: Model,
    pub ledger: BalanceLedger,
    pub fcchps: Vec<FcchpModel>,
}

/// Builds every configured component in configuration order, then the
/// balances and the objective.
pub fn build_scenario(
    config: &BuildingConfiguration,
    situation: &BuildingSituation,
    source: &dyn SeriesSource,
) -> Result<Scenario, IoError> {
    let mut grid = TimeGrid::new(situation.n, situation.hours_per_unit)?;
    if let Some(t) = situation.start {
        grid = grid.with_start(t);
    }
    let n = grid.n;
    let load = |r: &SeriesRef| load_timeseries(source, r, n);
    let load_or_zero = |r: &Option<SeriesRef>| r.as_ref().map_or(Ok(vec![0.0; n]), load);
    let mut model = Model::new();
    let mut ledger = BalanceLedger::new(n);
    let mut fcchps = Vec::new();
    for c in &config.components {
        let s = situation.component(c.id());
        let missing = || IoError::MissingSituation { id: c.id().into() };
        match (c, s) {
            (ComponentConfig::Usage(u), Some(ComponentSituation::Usage(us))) => {
                let spec = UsageSpec {
                    id: u.id.clone(),
                    electric: load_or_zero(&us.electric)?,
                    hot_water: load_or_zero(&us.hot_water)?,
                    heating_min: load_or_zero(&us.min_heating)?,
                    heating_max: load_or_zero(&us.max_heating)?,
                    cooling_min: load_or_zero(&us.min_cooling)?,
                    cooling_max: load_or_zero(&us.max_cooling)?,
                    max_electric: u.max_electric,
                    max_heating: u.max_heating,
                    max_cooling: u.max_cooling,
                };
                build_usage(&mut model, &mut ledger, &spec, &grid)?;
            }
            (ComponentConfig::Grid(g), Some(ComponentSituation::Grid(gs))) => {
                let spec = GridSpec {
                    id: g.id.clone(),
                    max_feed_in: g.max_feed_in,
                    max_supply: g.max_supply,
                    price: load(&gs.price)?,
                    refund: load_or_zero(&gs.refund)?,
                };
                build_grid(&mut model, &mut ledger, &spec, &grid)?;
            }
            (ComponentConfig::Storage(b), Some(ComponentSituation::Storage(bs))) => {
                let spec = StorageSpec {
                    id: b.id.clone(),
                    carrier: b.carrier,
                    min_level: b.min_level,
                    max_level: b.max_level,
                    loss_per_hour: b.loss_per_hour,
                    max_charge: b.max_charge,
                    max_discharge: b.max_discharge,
                    charge_efficiency: b.charge_efficiency,
                    discharge_efficiency: b.discharge_efficiency,
                    initial_level: bs.initial_level,
                };
                build_storage(&mut model, &mut ledger, &spec, &grid)?;
            }
            (ComponentConfig::HeatPump(h), Some(ComponentSituation::HeatPump(hs))) => {
                let spec = HeatPumpSpec {
                    id: h.id.clone(),
                    electric_power: h.electric_power,
                    cop: load(&hs.series)?,
                    min_off_hours: h.min_off_hours,
                    min_run_hours: h.min_run_hours,
                    on_at_begin: hs.on_at_begin,
                    last_change_hours: hs.last_change_hours,
                    mode: h.mode,
                };
                build_heat_pump(&mut model, &mut ledger, &spec, &grid)?;
            }
            (ComponentConfig::Pv(p), Some(ComponentSituation::Pv(ps))) => {
                let spec = PvSpec { id: p.id.clone(), output: load(&ps.output)?, curtailable: p.curtailable };
                build_profile_source(&mut model, &mut ledger, &spec, &grid)?;
            }
            (ComponentConfig::Converter(v), s) => {
                let price = match s {
                    Some(ComponentSituation::Converter(vs)) => vs.price.as_ref().map(load).transpose()?,
                    None => None,
                    Some(_) => return Err(missing()),
                };
                let spec = ConverterSpec {
                    id: v.id.clone(),
                    input: v.input,
                    output: v.output,
                    efficiency: v.efficiency,
                    max_input: v.max_input,
                    input_price: price,
                };
                build_converter(&mut model, &mut ledger, &spec, &grid)?;
            }
            (ComponentConfig::MechChp(m), Some(ComponentSituation::MechChp(ms))) => {
                let spec = MechChpSpec {
                    id: m.id.clone(),
                    eta_th: m.eta_th,
                    eta_el: m.eta_el,
                    p_th_max: m.p_th_max,
                    p_th_min: m.p_th_min,
                    boiler_efficiency: m.boiler_efficiency,
                    boiler_max: m.boiler_max,
                    k_on: m.k_on,
                    k_off: m.k_off,
                    min_run_hours: m.min_run_hours,
                    min_off_hours: m.min_off_hours,
                    primary_price: load(&ms.series)?,
                    on_at_begin: ms.on_at_begin,
                    last_change_hours: ms.last_change_hours,
                };
                build_mech_chp(&mut model, &mut ledger, &spec, &grid)?;
            }
            (ComponentConfig::Fcchp(f), Some(ComponentSituation::Fcchp(fs))) => {
                let unit = derive_unit_params(&f.physical, &grid)?;
                let r0 = last_change_unit(&grid, fs.last_start_hours);
                let l0 = match (fs.on_at_begin, fs.last_stop_hours) {
                    (true, _) => r0,
                    (false, Some(h)) => last_change_unit(&grid, h),
                    (false, None) => return Err(missing()),
                };
                let mut initial =
                    FcchpInitialState::replay(fs.on_at_begin, l0, r0, fs.warm_up_units, fs.cold_start, unit.start_up);
                initial.u0 = fs.initial_thermal_power;
                let k_pr = match &fs.price {
                    Some(r) => load(r)?,
                    None => vec![f.k_pr; n],
                };
                let spec = FcchpSpec {
                    id: f.id.clone(),
                    physical: f.physical.clone(),
                    costs: FcchpCostParams {
                        k_pr,
                        k_on: f.k_on,
                        k_off: f.k_off,
                        k_warm_up: f.k_warm_up,
                        k_cold_start: f.k_cold_start,
                        k_prod: f.k_prod,
                    },
                    initial,
                };
                fcchps.push(build_fcchp(&mut model, &mut ledger, &spec, &grid)?);
            }
            _ => return Err(missing()),
        }
    }
    build_balances(&mut model, &ledger)?;
    build_objective(&mut model, &ledger)?;
    Ok(Scenario { id: config.id.clone(), grid, model, ledger, fcchps })
}
