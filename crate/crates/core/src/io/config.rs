//! `BuildingConfiguration`: the static description of a building's
//! components.

use std::collections::BTreeSet;

use super::xml::{num, parse_document, Attrs, Element, Writer, NAMESPACE};
use super::IoError;
use crate::assembly::Carrier;
use crate::components::{InputCarrier, PumpMode};
use crate::fcchp::FcchpPhysicalParams;

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingConfiguration {
    pub id: String,
    pub components: Vec<ComponentConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentConfig {
    Usage(UsageConfig),
    Grid(GridConfig),
    Storage(StorageConfig),
    HeatPump(HeatPumpConfig),
    Pv(PvConfig),
    Converter(ConverterConfig),
    MechChp(MechChpConfig),
    Fcchp(FcchpConfig),
}

impl ComponentConfig {
    pub fn id(&self) -> &str {
        match self {
            ComponentConfig::Usage(c) => &c.id,
            ComponentConfig::Grid(c) => &c.id,
            ComponentConfig::Storage(c) => &c.id,
            ComponentConfig::HeatPump(c) => &c.id,
            ComponentConfig::Pv(c) => &c.id,
            ComponentConfig::Converter(c) => &c.id,
            ComponentConfig::MechChp(c) => &c.id,
            ComponentConfig::Fcchp(c) => &c.id,
        }
    }

    /// Element name in both description files.
    pub fn element(&self) -> &'static str {
        match self {
            ComponentConfig::Usage(_) => "Usage",
            ComponentConfig::Grid(_) => "Grid",
            ComponentConfig::Storage(c) => storage_element(c.carrier),
            ComponentConfig::HeatPump(_) => "HeatPump",
            ComponentConfig::Pv(_) => "PV",
            ComponentConfig::Converter(_) => "Converter",
            ComponentConfig::MechChp(_) => "MechCHP",
            ComponentConfig::Fcchp(_) => "FcCHP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageConfig {
    pub id: String,
    pub max_electric: f64,
    pub max_heating: f64,
    pub max_cooling: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub id: String,
    pub max_feed_in: f64,
    pub max_supply: f64,
}

/// `HeatBuffer`, `ColdBuffer` or `Battery`.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageConfig {
    pub id: String,
    pub carrier: Carrier,
    pub min_level: f64,
    pub max_level: f64,
    pub loss_per_hour: f64,
    pub max_charge: f64,
    pub max_discharge: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatPumpConfig {
    pub id: String,
    pub electric_power: f64,
    pub min_off_hours: f64,
    pub min_run_hours: f64,
    pub mode: PumpMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvConfig {
    pub id: String,
    pub curtailable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConverterConfig {
    pub id: String,
    pub input: InputCarrier,
    pub output: Carrier,
    pub efficiency: f64,
    pub max_input: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechChpConfig {
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
}

/// Attribute names follow the field names of the model parameters.
/// `kPr` is the primary price used when the situation gives no series.
#[derive(Debug, Clone, PartialEq)]
pub struct FcchpConfig {
    pub id: String,
    pub physical: FcchpPhysicalParams,
    pub k_pr: f64,
    pub k_on: f64,
    pub k_off: f64,
    pub k_warm_up: f64,
    pub k_cold_start: f64,
    pub k_prod: f64,
}

pub(super) fn storage_element(carrier: Carrier) -> &'static str {
    match carrier {
        Carrier::Heat => "HeatBuffer",
        Carrier::Cold => "ColdBuffer",
        Carrier::Electric => "Battery",
    }
}

/// Level, loss and power attribute names of one storage kind:
/// min level, max level, loss factor, max charging, max discharging.
pub(super) fn storage_attrs(carrier: Carrier) -> [&'static str; 5] {
    match carrier {
        Carrier::Heat => [
            "minThermalEnergyLevel",
            "maxThermalEnergyLevel",
            "thermalLossPerHourFactor",
            "maxThermalChargingPower",
            "maxThermalDischargingPower",
        ],
        Carrier::Cold => [
            "minCoolingEnergyLevel",
            "maxCoolingEnergyLevel",
            "coolingLossPerHourFactor",
            "maxCoolingChargingPower",
            "maxCoolingDischargingPower",
        ],
        Carrier::Electric => [
            "minElectricEnergyLevel",
            "maxElectricEnergyLevel",
            "electricLossPerHourFactor",
            "maxElectricChargingPower",
            "maxElectricDischargingPower",
        ],
    }
}

/// Power multiplier into kW. Energy and price units admit only kWh, ct
/// and ct/kWh, so they are checked but carry no factor.
#[derive(Debug, Clone, Copy)]
pub(super) struct Units {
    pub power: f64,
}

pub(super) const POWER_UNITS: &[(&str, f64)] = &[("kW", 1.0), ("W", 1e-3)];
const ENERGY_UNITS: &[(&str, ())] = &[("kWh", ())];
const PRICE_UNITS: &[(&str, ())] = &[("ct", ())];
pub(super) const ENERGY_PRICE_UNITS: &[(&str, ())] = &[("ct/kWh", ())];

impl Units {
    pub(super) fn root(e: &Element) -> Result<Self, IoError> {
        let power = e.opt_choice("powerUnit", POWER_UNITS)?.unwrap_or(1.0);
        e.opt_choice("energyUnit", ENERGY_UNITS)?;
        e.opt_choice("priceUnit", PRICE_UNITS)?;
        e.opt_choice("energyPriceUnit", ENERGY_PRICE_UNITS)?;
        Ok(Units { power })
    }

    /// Element-level unit declarations override the root ones.
    pub(super) fn local(self, e: &Element) -> Result<Self, IoError> {
        let power = e.opt_choice("powerUnit", POWER_UNITS)?.unwrap_or(self.power);
        e.opt_choice("energyUnit", ENERGY_UNITS)?;
        e.opt_choice("priceUnit", PRICE_UNITS)?;
        e.opt_choice("energyPriceUnit", ENERGY_PRICE_UNITS)?;
        Ok(Units { power })
    }
}

const CARRIERS: &[(&str, Carrier)] = &[("electric", Carrier::Electric), ("heat", Carrier::Heat), ("cold", Carrier::Cold)];
const INPUTS: &[(&str, InputCarrier)] =
    &[("electric", InputCarrier::Electric), ("heat", InputCarrier::Heat), ("primary", InputCarrier::Primary)];
const MODES: &[(&str, PumpMode)] = &[("heating", PumpMode::Heating), ("cooling", PumpMode::Cooling)];

fn label<T: PartialEq + Copy>(choices: &[(&'static str, T)], v: T) -> &'static str {
    choices.iter().find(|(_, c)| *c == v).map(|(k, _)| *k).unwrap()
}

pub fn parse_configuration(text: &str) -> Result<BuildingConfiguration, IoError> {
    let doc = parse_document(text)?;
    let root = Element::new(doc.root_element(), "");
    root.check_namespace()?;
    if root.name() != "BuildingConfiguration" {
        return Err(root.error("expected a <BuildingConfiguration> root element"));
    }
    let id = root.req("id")?.to_string();
    let units = Units::root(&root)?;
    root.finish()?;
    let mut components = Vec::new();
    let mut seen = BTreeSet::new();
    for e in root.children() {
        e.check_namespace()?;
        let u = units.local(&e)?;
        let c = match e.name() {
            "Usage" => ComponentConfig::Usage(UsageConfig {
                id: e.req("id")?.into(),
                max_electric: e.req_f64("maxElectricPowerUse")? * u.power,
                max_heating: e.req_f64("maxHeatingPowerUse")? * u.power,
                max_cooling: e.req_f64("maxCoolingPowerUse")? * u.power,
            }),
            "Grid" => ComponentConfig::Grid(GridConfig {
                id: e.req("id")?.into(),
                max_feed_in: e.req_f64("maxFeedInPower")? * u.power,
                max_supply: e.req_f64("maxSupplyPower")? * u.power,
            }),
            "HeatBuffer" => ComponentConfig::Storage(parse_storage(&e, u, Carrier::Heat)?),
            "ColdBuffer" => ComponentConfig::Storage(parse_storage(&e, u, Carrier::Cold)?),
            "Battery" => ComponentConfig::Storage(parse_storage(&e, u, Carrier::Electric)?),
            "HeatPump" => ComponentConfig::HeatPump(HeatPumpConfig {
                id: e.req("id")?.into(),
                electric_power: e.req_f64("electricPower")? * u.power,
                min_off_hours: e.req_f64("minOffTimeInHours")?,
                min_run_hours: e.req_f64("minRunTimeInHours")?,
                mode: e.opt_choice("mode", MODES)?.unwrap_or(PumpMode::Heating),
            }),
            "PV" => ComponentConfig::Pv(PvConfig {
                id: e.req("id")?.into(),
                curtailable: e.opt_bool("curtailable")?.unwrap_or(false),
            }),
            "Converter" => ComponentConfig::Converter(ConverterConfig {
                id: e.req("id")?.into(),
                input: e.opt_choice("inputCarrier", INPUTS)?.ok_or_else(|| e.error("missing required attribute `inputCarrier`"))?,
                output: e.opt_choice("outputCarrier", CARRIERS)?.ok_or_else(|| e.error("missing required attribute `outputCarrier`"))?,
                efficiency: e.req_f64("efficiency")?,
                max_input: e.req_f64("maxInputPower")? * u.power,
            }),
            "MechCHP" => ComponentConfig::MechChp(MechChpConfig {
                id: e.req("id")?.into(),
                eta_th: e.req_f64("thermalEfficiency")?,
                eta_el: e.req_f64("electricEfficiency")?,
                p_th_max: e.req_f64("maxThermalPower")? * u.power,
                p_th_min: e.req_f64("minThermalPower")? * u.power,
                boiler_efficiency: e.req_f64("boilerEfficiency")?,
                boiler_max: e.req_f64("maxBoilerPower")? * u.power,
                k_on: e.opt_f64("switchOnCost")?.unwrap_or(0.0),
                k_off: e.opt_f64("switchOffCost")?.unwrap_or(0.0),
                min_run_hours: e.req_f64("minRunTimeInHours")?,
                min_off_hours: e.req_f64("minOffTimeInHours")?,
            }),
            "FcCHP" => ComponentConfig::Fcchp(parse_fcchp(&e, u)?),
            other => return Err(e.error(format!("unknown element <{other}>"))),
        };
        e.finish()?;
        if let Some(child) = e.children().next() {
            return Err(child.error(format!("unknown element <{}>", child.name())));
        }
        if c.id().is_empty() {
            return Err(e.error("empty id"));
        }
        if !seen.insert(c.id().to_string()) {
            let pos = doc.text_pos_at(e.node.range().start);
            return Err(IoError::DuplicateId { id: c.id().into(), line: pos.row, col: pos.col });
        }
        components.push(c);
    }
    Ok(BuildingConfiguration { id, components })
}

fn parse_storage(e: &Element, u: Units, carrier: Carrier) -> Result<StorageConfig, IoError> {
    let [min, max, loss, charge, discharge] = storage_attrs(carrier);
    Ok(StorageConfig {
        id: e.req("id")?.into(),
        carrier,
        min_level: e.req_f64(min)?,
        max_level: e.req_f64(max)?,
        loss_per_hour: e.opt_f64(loss)?.unwrap_or(0.0),
        max_charge: e.req_f64(charge)? * u.power,
        max_discharge: e.req_f64(discharge)? * u.power,
        charge_efficiency: e.opt_f64("chargingEfficiency")?.unwrap_or(1.0),
        discharge_efficiency: e.opt_f64("dischargingEfficiency")?.unwrap_or(1.0),
    })
}

fn parse_table(e: &Element) -> Result<Vec<usize>, IoError> {
    let raw = e.req("warmUpTable")?;
    let table: Result<Vec<usize>, _> = raw.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).map(str::parse).collect();
    match table {
        Ok(t) if !t.is_empty() => Ok(t),
        _ => Err(e.error(format!("attribute `warmUpTable` must be a list of unit counts, got `{raw}`"))),
    }
}

fn parse_fcchp(e: &Element, u: Units) -> Result<FcchpConfig, IoError> {
    let pw = |name| -> Result<f64, IoError> { Ok(e.req_f64(name)? * u.power) };
    let cost = |name| -> Result<f64, IoError> { Ok(e.opt_f64(name)?.unwrap_or(0.0)) };
    let physical = FcchpPhysicalParams {
        eta_th: e.req_f64("etaTh")?,
        eta_el: e.req_f64("etaEl")?,
        p_th_max: pw("pThMax")?,
        p_th_min: pw("pThMin")?,
        p_th_init: pw("pThInit")?,
        p_th_start_up: pw("pThStartUp")?,
        d_on_min: e.req_f64("dOnMin")?,
        d_on_max: e.req_f64("dOnMax")?,
        d_off_min: e.req_f64("dOffMin")?,
        d_init: e.req_f64("dInit")?,
        d_start_up: e.req_f64("dStartUp")?,
        d_down: e.req_f64("dDown")?,
        warm_up_table: parse_table(e)?,
        p_el_stand_by: pw("pElStandBy")?,
        p_el_warm_up: pw("pElWarmUp")?,
        p_el_cold_start: pw("pElColdStart")?,
        p_el_add_shut_down: pw("pElAddShutDown")?,
        p_pr_warm_up: pw("pPrWarmUp")?,
        p_pr_cold_start: pw("pPrColdStart")?,
        delta_p_th_prod: pw("deltaPThProd")?,
        cold_start_units: e.req_parse("coldStartUnits")?,
    };
    Ok(FcchpConfig {
        id: e.req("id")?.into(),
        physical,
        k_pr: cost("kPr")?,
        k_on: cost("kOn")?,
        k_off: cost("kOff")?,
        k_warm_up: cost("kWarmUp")?,
        k_cold_start: cost("kColdStart")?,
        k_prod: cost("kProd")?,
    })
}

pub fn serialize_configuration(c: &BuildingConfiguration) -> String {
    let mut w = Writer::new();
    let s = |v: &str| v.to_string();
    w.open(
        "BuildingConfiguration",
        &vec![
            ("xmlns", s(NAMESPACE)),
            ("id", c.id.clone()),
            ("powerUnit", s("kW")),
            ("energyUnit", s("kWh")),
            ("priceUnit", s("ct")),
            ("energyPriceUnit", s("ct/kWh")),
        ],
    );
    for comp in &c.components {
        let attrs: Attrs = match comp {
            ComponentConfig::Usage(u) => vec![
                ("id", u.id.clone()),
                ("maxElectricPowerUse", num(u.max_electric)),
                ("maxHeatingPowerUse", num(u.max_heating)),
                ("maxCoolingPowerUse", num(u.max_cooling)),
            ],
            ComponentConfig::Grid(g) => vec![
                ("id", g.id.clone()),
                ("maxFeedInPower", num(g.max_feed_in)),
                ("maxSupplyPower", num(g.max_supply)),
            ],
            ComponentConfig::Storage(b) => {
                let [min, max, loss, charge, discharge] = storage_attrs(b.carrier);
                vec![
                    ("id", b.id.clone()),
                    (min, num(b.min_level)),
                    (max, num(b.max_level)),
                    (loss, num(b.loss_per_hour)),
                    (charge, num(b.max_charge)),
                    (discharge, num(b.max_discharge)),
                    ("chargingEfficiency", num(b.charge_efficiency)),
                    ("dischargingEfficiency", num(b.discharge_efficiency)),
                ]
            }
            ComponentConfig::HeatPump(h) => vec![
                ("id", h.id.clone()),
                ("electricPower", num(h.electric_power)),
                ("minOffTimeInHours", num(h.min_off_hours)),
                ("minRunTimeInHours", num(h.min_run_hours)),
                ("mode", s(label(MODES, h.mode))),
            ],
            ComponentConfig::Pv(p) => vec![("id", p.id.clone()), ("curtailable", p.curtailable.to_string())],
            ComponentConfig::Converter(v) => vec![
                ("id", v.id.clone()),
                ("inputCarrier", s(label(INPUTS, v.input))),
                ("outputCarrier", s(label(CARRIERS, v.output))),
                ("efficiency", num(v.efficiency)),
                ("maxInputPower", num(v.max_input)),
            ],
            ComponentConfig::MechChp(m) => vec![
                ("id", m.id.clone()),
                ("thermalEfficiency", num(m.eta_th)),
                ("electricEfficiency", num(m.eta_el)),
                ("maxThermalPower", num(m.p_th_max)),
                ("minThermalPower", num(m.p_th_min)),
                ("boilerEfficiency", num(m.boiler_efficiency)),
                ("maxBoilerPower", num(m.boiler_max)),
                ("switchOnCost", num(m.k_on)),
                ("switchOffCost", num(m.k_off)),
                ("minRunTimeInHours", num(m.min_run_hours)),
                ("minOffTimeInHours", num(m.min_off_hours)),
            ],
            ComponentConfig::Fcchp(f) => {
                let p = &f.physical;
                let table: Vec<String> = p.warm_up_table.iter().map(|v| v.to_string()).collect();
                vec![
                    ("id", f.id.clone()),
                    ("etaTh", num(p.eta_th)),
                    ("etaEl", num(p.eta_el)),
                    ("pThMax", num(p.p_th_max)),
                    ("pThMin", num(p.p_th_min)),
                    ("pThInit", num(p.p_th_init)),
                    ("pThStartUp", num(p.p_th_start_up)),
                    ("dOnMin", num(p.d_on_min)),
                    ("dOnMax", num(p.d_on_max)),
                    ("dOffMin", num(p.d_off_min)),
                    ("dInit", num(p.d_init)),
                    ("dStartUp", num(p.d_start_up)),
                    ("dDown", num(p.d_down)),
                    ("warmUpTable", table.join(" ")),
                    ("pElStandBy", num(p.p_el_stand_by)),
                    ("pElWarmUp", num(p.p_el_warm_up)),
                    ("pElColdStart", num(p.p_el_cold_start)),
                    ("pElAddShutDown", num(p.p_el_add_shut_down)),
                    ("pPrWarmUp", num(p.p_pr_warm_up)),
                    ("pPrColdStart", num(p.p_pr_cold_start)),
                    ("deltaPThProd", num(p.delta_p_th_prod)),
                    ("coldStartUnits", p.cold_start_units.to_string()),
                    ("kPr", num(f.k_pr)),
                    ("kOn", num(f.k_on)),
                    ("kOff", num(f.k_off)),
                    ("kWarmUp", num(f.k_warm_up)),
                    ("kColdStart", num(f.k_cold_start)),
                    ("kProd", num(f.k_prod)),
                ]
            }
        };
        w.empty(comp.element(), &attrs);
    }
    w.close("BuildingConfiguration");
    w.finish()
}
