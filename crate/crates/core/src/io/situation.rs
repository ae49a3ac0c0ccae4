//! `BuildingSituation`: horizon, initial states and time-series references.

use std::collections::BTreeSet;

use chrono::NaiveDateTime;

use super::config::{storage_element, BuildingConfiguration, ComponentConfig, ENERGY_PRICE_UNITS, POWER_UNITS};
use super::xml::{num, parse_document, Attrs, Element, Writer, NAMESPACE};
use super::IoError;
use crate::assembly::Carrier;
use crate::components::InputCarrier;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesUnit {
    Kilowatt,
    Watt,
    CentPerKwh,
    /// Dimensionless (COP).
    None,
}

impl SeriesUnit {
    pub fn factor(self) -> f64 {
        match self {
            SeriesUnit::Watt => 1e-3,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRef {
    pub file_name: String,
    pub data_set_path: String,
    pub unit: SeriesUnit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingSituation {
    pub id: String,
    pub n: usize,
    pub hours_per_unit: f64,
    pub start: Option<NaiveDateTime>,
    pub file_name_hdf5: Option<String>,
    pub components: Vec<ComponentSituation>,
}

impl BuildingSituation {
    pub fn component(&self, id: &str) -> Option<&ComponentSituation> {
        self.components.iter().find(|c| c.id() == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentSituation {
    Usage(UsageSituation),
    Grid(GridSituation),
    Storage(StorageSituation),
    HeatPump(SwitchedSituation),
    Pv(PvSituation),
    Converter(ConverterSituation),
    MechChp(SwitchedSituation),
    Fcchp(FcchpSituation),
}

impl ComponentSituation {
    pub fn id(&self) -> &str {
        match self {
            ComponentSituation::Usage(c) => &c.id,
            ComponentSituation::Grid(c) => &c.id,
            ComponentSituation::Storage(c) => &c.id,
            ComponentSituation::HeatPump(c) | ComponentSituation::MechChp(c) => &c.id,
            ComponentSituation::Pv(c) => &c.id,
            ComponentSituation::Converter(c) => &c.id,
            ComponentSituation::Fcchp(c) => &c.id,
        }
    }
}

/// Missing series references stand for all-zero series.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageSituation {
    pub id: String,
    pub max_initial_heating: f64,
    pub max_initial_cooling: f64,
    pub electric: Option<SeriesRef>,
    pub hot_water: Option<SeriesRef>,
    pub min_heating: Option<SeriesRef>,
    pub max_heating: Option<SeriesRef>,
    pub min_cooling: Option<SeriesRef>,
    pub max_cooling: Option<SeriesRef>,
}

const USAGE_SERIES: [&str; 6] = [
    "ElectricPowerUsage",
    "HotWaterPowerUsage",
    "MinHeatingPowerUsage",
    "MaxHeatingPowerUsage",
    "MinCoolingPowerUsage",
    "MaxCoolingPowerUsage",
];

impl UsageSituation {
    fn slots(&mut self) -> [&mut Option<SeriesRef>; 6] {
        [
            &mut self.electric,
            &mut self.hot_water,
            &mut self.min_heating,
            &mut self.max_heating,
            &mut self.min_cooling,
            &mut self.max_cooling,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSituation {
    pub id: String,
    pub price: SeriesRef,
    pub refund: Option<SeriesRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageSituation {
    pub id: String,
    pub initial_level: f64,
}

/// Heat pump or mechanical CHP. The CHP carries its primary price series
/// in `series`, the heat pump its COP.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSituation {
    pub id: String,
    pub on_at_begin: bool,
    pub last_change_hours: f64,
    pub series: SeriesRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvSituation {
    pub id: String,
    pub output: SeriesRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConverterSituation {
    pub id: String,
    pub price: Option<SeriesRef>,
}

/// The last start happened `last_start_hours` before the horizon and
/// warmed up for `warm_up_units`; when off, the plant stopped
/// `last_stop_hours` before the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct FcchpSituation {
    pub id: String,
    pub on_at_begin: bool,
    pub last_start_hours: f64,
    pub last_stop_hours: Option<f64>,
    pub warm_up_units: usize,
    pub cold_start: bool,
    pub initial_thermal_power: Option<f64>,
    pub price: Option<SeriesRef>,
}

#[derive(Clone, Copy)]
enum Kind {
    Power,
    Price,
    Ratio,
}

fn series_ref(e: &Element, kind: Kind) -> Result<SeriesRef, IoError> {
    let unit = match kind {
        Kind::Power => match e.opt_choice("powerUnit", POWER_UNITS)? {
            Some(f) if f != 1.0 => SeriesUnit::Watt,
            _ => SeriesUnit::Kilowatt,
        },
        Kind::Price => {
            e.opt_choice("energyPriceUnit", ENERGY_PRICE_UNITS)?;
            SeriesUnit::CentPerKwh
        }
        Kind::Ratio => SeriesUnit::None,
    };
    let r = SeriesRef { file_name: e.req("fileName")?.into(), data_set_path: e.req("dataSetPath")?.into(), unit };
    e.finish()?;
    if let Some(child) = e.children().next() {
        return Err(child.error(format!("unknown element <{}>", child.name())));
    }
    Ok(r)
}

/// Reads the series children of `e`: `slots` maps element names to kinds;
/// each may appear once.
fn series_children(e: &Element, slots: &[(&str, Kind)]) -> Result<Vec<Option<SeriesRef>>, IoError> {
    let mut out = vec![None; slots.len()];
    for c in e.children() {
        c.check_namespace()?;
        let Some(k) = slots.iter().position(|(name, _)| *name == c.name()) else {
            return Err(c.error(format!("unknown element <{}>", c.name())));
        };
        if out[k].is_some() {
            return Err(c.error(format!("<{}> given twice", c.name())));
        }
        out[k] = Some(series_ref(&c, slots[k].1)?);
    }
    Ok(out)
}

fn required(e: &Element, r: Option<SeriesRef>, name: &str) -> Result<SeriesRef, IoError> {
    r.ok_or_else(|| e.error(format!("missing required element <{name}>")))
}

fn location(e: &Element) -> (u32, u32) {
    let pos = e.node.document().text_pos_at(e.node.range().start);
    (pos.row, pos.col)
}

/// Parses a situation and cross-checks it against `config`: the ids must
/// match, every element must name a configured component of the same
/// kind, and components that need runtime data must have an entry.
pub fn parse_situation(text: &str, config: &BuildingConfiguration) -> Result<BuildingSituation, IoError> {
    let doc = parse_document(text)?;
    let root = Element::new(doc.root_element(), "");
    root.check_namespace()?;
    if root.name() != "BuildingSituation" {
        return Err(root.error("expected a <BuildingSituation> root element"));
    }
    let id = root.req("id")?.to_string();
    if id != config.id {
        return Err(IoError::ScenarioMismatch { configuration: config.id.clone(), situation: id });
    }
    let n: usize = root.req_parse("nbsOfTimeUnits")?;
    let hours_per_unit = root.req_f64("hoursPerTimeUnit")?;
    if n == 0 || !(hours_per_unit > 0.0) {
        return Err(root.error("need nbsOfTimeUnits >= 1 and hoursPerTimeUnit > 0"));
    }
    let start = match root.opt("start") {
        Some(raw) => Some(
            NaiveDateTime::parse_from_str(raw, TIMESTAMP_FORMAT)
                .map_err(|_| root.error(format!("attribute `start` is not a timestamp: `{raw}`")))?,
        ),
        None => None,
    };
    let file_name_hdf5 = root.opt("fileNameHDF5").map(String::from);
    root.finish()?;

    let mut components = Vec::new();
    let mut seen = BTreeSet::new();
    for e in root.children() {
        e.check_namespace()?;
        let cid = e.req("id")?;
        let Some(conf) = config.components.iter().find(|c| c.id() == cid) else {
            let (line, col) = location(&e);
            return Err(IoError::UnknownComponent { id: cid.into(), line, col });
        };
        if conf.element() != e.name() {
            return Err(e.error(format!("`{cid}` is configured as <{}>", conf.element())));
        }
        if !seen.insert(cid) {
            let (line, col) = location(&e);
            return Err(IoError::DuplicateId { id: cid.into(), line, col });
        }
        let s = match conf {
            ComponentConfig::Usage(_) => {
                e.opt_choice("energyUnit", &[("kWh", ())])?;
                let mut u = UsageSituation {
                    id: cid.into(),
                    max_initial_heating: e.opt_f64("maxInitialHeatingEnergy")?.unwrap_or(0.0),
                    max_initial_cooling: e.opt_f64("maxInitialCoolingEnergy")?.unwrap_or(0.0),
                    electric: None,
                    hot_water: None,
                    min_heating: None,
                    max_heating: None,
                    min_cooling: None,
                    max_cooling: None,
                };
                if u.max_initial_heating != 0.0 || u.max_initial_cooling != 0.0 {
                    return Err(e.error("maxInitialHeatingEnergy and maxInitialCoolingEnergy must be 0"));
                }
                let kinds: Vec<(&str, Kind)> = USAGE_SERIES.iter().map(|&n| (n, Kind::Power)).collect();
                for (slot, r) in u.slots().into_iter().zip(series_children(&e, &kinds)?) {
                    *slot = r;
                }
                ComponentSituation::Usage(u)
            }
            ComponentConfig::Grid(_) => {
                let mut r = series_children(&e, &[("ElectricEnergyPrice", Kind::Price), ("ElectricEnergyRefund", Kind::Price)])?;
                let refund = r.pop().unwrap();
                let price = required(&e, r.pop().unwrap(), "ElectricEnergyPrice")?;
                ComponentSituation::Grid(GridSituation { id: cid.into(), price, refund })
            }
            ComponentConfig::Storage(b) => {
                e.opt_choice("energyUnit", &[("kWh", ())])?;
                let attr = initial_level_attr(b.carrier);
                let initial_level = e.req_f64(attr)?;
                series_children(&e, &[])?;
                ComponentSituation::Storage(StorageSituation { id: cid.into(), initial_level })
            }
            ComponentConfig::HeatPump(_) | ComponentConfig::MechChp(_) => {
                e.opt_choice("priceUnit", &[("ct", ())])?;
                let (name, kind) = match conf {
                    ComponentConfig::HeatPump(_) => ("CoefficientOfPerformance", Kind::Ratio),
                    _ => ("PrimaryEnergyPrice", Kind::Price),
                };
                let r = series_children(&e, &[(name, kind)])?.pop().unwrap();
                let s = SwitchedSituation {
                    id: cid.into(),
                    on_at_begin: e.req_bool("isOnAtBegin")?,
                    last_change_hours: e.req_f64("lastStartStopChangeInHours")?,
                    series: required(&e, r, name)?,
                };
                match conf {
                    ComponentConfig::HeatPump(_) => ComponentSituation::HeatPump(s),
                    _ => ComponentSituation::MechChp(s),
                }
            }
            ComponentConfig::Pv(_) => {
                let r = series_children(&e, &[("ElectricPowerSupply", Kind::Power)])?.pop().unwrap();
                ComponentSituation::Pv(PvSituation { id: cid.into(), output: required(&e, r, "ElectricPowerSupply")? })
            }
            ComponentConfig::Converter(c) => {
                let price = series_children(&e, &[("PrimaryEnergyPrice", Kind::Price)])?.pop().unwrap();
                let price = match c.input {
                    InputCarrier::Primary => Some(required(&e, price, "PrimaryEnergyPrice")?),
                    _ if price.is_some() => return Err(e.error("<PrimaryEnergyPrice> only applies to primary input")),
                    _ => None,
                };
                ComponentSituation::Converter(ConverterSituation { id: cid.into(), price })
            }
            ComponentConfig::Fcchp(_) => {
                let power = e.opt_choice("powerUnit", POWER_UNITS)?.unwrap_or(1.0);
                let price = series_children(&e, &[("PrimaryEnergyPrice", Kind::Price)])?.pop().unwrap();
                let on_at_begin = e.req_bool("isOnAtBegin")?;
                let last_stop_hours = e.opt_f64("lastStopInHours")?;
                if !on_at_begin && last_stop_hours.is_none() {
                    return Err(e.error("an off plant needs `lastStopInHours`"));
                }
                ComponentSituation::Fcchp(FcchpSituation {
                    id: cid.into(),
                    on_at_begin,
                    last_start_hours: e.req_f64("lastStartInHours")?,
                    last_stop_hours,
                    warm_up_units: e.req_parse("warmUpUnitsOfLastStart")?,
                    cold_start: e.opt_bool("isColdStart")?.unwrap_or(false),
                    initial_thermal_power: e.opt_f64("initialThermalPower")?.map(|v| v * power),
                    price,
                })
            }
        };
        e.finish()?;
        components.push(s);
    }
    for c in &config.components {
        let needs = !matches!(c, ComponentConfig::Converter(v) if v.input != InputCarrier::Primary);
        if needs && !seen.contains(c.id()) {
            return Err(IoError::MissingSituation { id: c.id().into() });
        }
    }
    Ok(BuildingSituation { id, n, hours_per_unit, start, file_name_hdf5, components })
}

fn initial_level_attr(carrier: Carrier) -> &'static str {
    match carrier {
        Carrier::Heat => "initialThermalEnergyLevel",
        Carrier::Cold => "initialCoolingEnergyLevel",
        Carrier::Electric => "initialElectricEnergyLevel",
    }
}

fn ref_attrs(r: &SeriesRef) -> Attrs {
    let mut a = vec![("fileName", r.file_name.clone()), ("dataSetPath", r.data_set_path.clone())];
    match r.unit {
        SeriesUnit::Kilowatt => a.push(("powerUnit", "kW".into())),
        SeriesUnit::Watt => a.push(("powerUnit", "W".into())),
        SeriesUnit::CentPerKwh => a.push(("energyPriceUnit", "ct/kWh".into())),
        SeriesUnit::None => {}
    }
    a
}

pub fn serialize_situation(s: &BuildingSituation, config: &BuildingConfiguration) -> String {
    let mut w = Writer::new();
    let mut root = vec![
        ("xmlns", NAMESPACE.to_string()),
        ("id", s.id.clone()),
        ("nbsOfTimeUnits", s.n.to_string()),
        ("hoursPerTimeUnit", num(s.hours_per_unit)),
    ];
    if let Some(t) = s.start {
        root.push(("start", t.format(TIMESTAMP_FORMAT).to_string()));
    }
    if let Some(f) = &s.file_name_hdf5 {
        root.push(("fileNameHDF5", f.clone()));
    }
    w.open("BuildingSituation", &root);
    let emit = |w: &mut Writer, name: &str, attrs: Attrs, children: Vec<(&str, &SeriesRef)>| {
        if children.is_empty() {
            w.empty(name, &attrs);
        } else {
            w.open(name, &attrs);
            for (child, r) in children {
                w.empty(child, &ref_attrs(r));
            }
            w.close(name);
        }
    };
    for c in &s.components {
        match c {
            ComponentSituation::Usage(u) => {
                let attrs = vec![
                    ("id", u.id.clone()),
                    ("maxInitialHeatingEnergy", num(u.max_initial_heating)),
                    ("maxInitialCoolingEnergy", num(u.max_initial_cooling)),
                ];
                let refs = [&u.electric, &u.hot_water, &u.min_heating, &u.max_heating, &u.min_cooling, &u.max_cooling];
                let children = USAGE_SERIES.iter().zip(refs).filter_map(|(&n, r)| r.as_ref().map(|r| (n, r))).collect();
                emit(&mut w, "Usage", attrs, children);
            }
            ComponentSituation::Grid(g) => {
                let mut children = vec![("ElectricEnergyPrice", &g.price)];
                if let Some(r) = &g.refund {
                    children.push(("ElectricEnergyRefund", r));
                }
                emit(&mut w, "Grid", vec![("id", g.id.clone())], children);
            }
            ComponentSituation::Storage(b) => {
                let carrier = match config.components.iter().find(|k| k.id() == b.id) {
                    Some(ComponentConfig::Storage(k)) => k.carrier,
                    _ => Carrier::Heat,
                };
                let attrs = vec![("id", b.id.clone()), (initial_level_attr(carrier), num(b.initial_level))];
                emit(&mut w, storage_element(carrier), attrs, vec![]);
            }
            ComponentSituation::HeatPump(h) | ComponentSituation::MechChp(h) => {
                let (name, child) = match c {
                    ComponentSituation::HeatPump(_) => ("HeatPump", "CoefficientOfPerformance"),
                    _ => ("MechCHP", "PrimaryEnergyPrice"),
                };
                let attrs = vec![
                    ("id", h.id.clone()),
                    ("isOnAtBegin", h.on_at_begin.to_string()),
                    ("lastStartStopChangeInHours", num(h.last_change_hours)),
                ];
                emit(&mut w, name, attrs, vec![(child, &h.series)]);
            }
            ComponentSituation::Pv(p) => {
                emit(&mut w, "PV", vec![("id", p.id.clone())], vec![("ElectricPowerSupply", &p.output)]);
            }
            ComponentSituation::Converter(v) => {
                let children = v.price.iter().map(|r| ("PrimaryEnergyPrice", r)).collect();
                emit(&mut w, "Converter", vec![("id", v.id.clone())], children);
            }
            ComponentSituation::Fcchp(f) => {
                let mut attrs = vec![
                    ("id", f.id.clone()),
                    ("isOnAtBegin", f.on_at_begin.to_string()),
                    ("lastStartInHours", num(f.last_start_hours)),
                    ("warmUpUnitsOfLastStart", f.warm_up_units.to_string()),
                    ("isColdStart", f.cold_start.to_string()),
                ];
                if let Some(v) = f.last_stop_hours {
                    attrs.push(("lastStopInHours", num(v)));
                }
                if let Some(v) = f.initial_thermal_power {
                    attrs.push(("initialThermalPower", num(v)));
                }
                let children = f.price.iter().map(|r| ("PrimaryEnergyPrice", r)).collect();
                emit(&mut w, "FcCHP", attrs, children);
            }
        }
    }
    w.close("BuildingSituation");
    w.finish()
}
