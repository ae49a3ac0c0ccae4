//! Browser front end: the page pastes a configuration, a situation and the
//! CSV the situation refers to; everything runs in memory.

use mipopt::io::{self, MemorySource, Scenario};
use mipopt::lp::export_lp;
use mipopt::solve::{self, SolveOptions};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Every numeric CSV column becomes a series keyed by its header.
fn columns(csv_text: &str) -> Result<MemorySource, JsValue> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let headers: Vec<String> = r.headers().map_err(err)?.iter().map(str::to_string).collect();
    let mut values = vec![Vec::new(); headers.len()];
    for record in r.records() {
        for (col, field) in record.map_err(err)?.iter().enumerate() {
            values[col].push(field.trim().parse::<f64>().ok());
        }
    }
    let mut source = MemorySource::default();
    for (name, col) in headers.iter().zip(values) {
        if let Some(col) = col.into_iter().collect::<Option<Vec<f64>>>() {
            source.insert(name, col);
        }
    }
    Ok(source)
}

fn scenario(config: &str, situation: &str, csv_text: &str) -> Result<Scenario, JsValue> {
    let config = io::parse_configuration(config).map_err(err)?;
    let situation = io::parse_situation(situation, &config).map_err(err)?;
    io::build_scenario(&config, &situation, &columns(csv_text)?).map_err(err)
}

#[wasm_bindgen]
pub struct Plan {
    status: String,
    objective: f64,
    csv: String,
}

#[wasm_bindgen]
impl Plan {
    #[wasm_bindgen(getter)]
    pub fn status(&self) -> String {
        self.status.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn objective(&self) -> f64 {
        self.objective
    }

    #[wasm_bindgen(getter)]
    pub fn csv(&self) -> String {
        self.csv.clone()
    }
}

/// Solves with the builtin branch-and-bound.
#[wasm_bindgen]
pub fn optimize(config: &str, situation: &str, csv_text: &str) -> Result<Plan, JsValue> {
    let s = scenario(config, situation, csv_text)?;
    let solution = solve::solve(&s.model, &SolveOptions::default()).map_err(err)?;
    let schedule = solve::extract_schedule(&solution, &s.ledger, &s.grid);
    let csv = if schedule.has_solution() { io::schedule_csv(&schedule) } else { String::new() };
    Ok(Plan { status: solution.status.label().to_string(), objective: solution.objective, csv })
}

#[wasm_bindgen]
pub fn lp_file(config: &str, situation: &str, csv_text: &str) -> Result<String, JsValue> {
    Ok(export_lp(&scenario(config, situation, csv_text)?.model).text)
}

/// One line per generated row whose tag starts with `prefix`.
#[wasm_bindgen]
pub fn explain(config: &str, situation: &str, csv_text: &str, prefix: &str) -> Result<String, JsValue> {
    let s = scenario(config, situation, csv_text)?;
    let mut out = String::new();
    for (_, c) in s.model.constraints_with_prefix(prefix) {
        out.push_str(&s.model.render_row(c));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/heat_pump");

    fn read(name: &str) -> String {
        std::fs::read_to_string(format!("{DATA}/{name}")).unwrap()
    }

    #[test]
    fn heat_pump_day_in_memory() {
        let (c, s, d) = (read("configuration.xml"), read("situation.xml"), read("day.csv"));
        let plan = optimize(&c, &s, &d).unwrap_or_else(|_| panic!("optimize failed"));
        assert_eq!(plan.status(), "optimal");
        assert_eq!(plan.csv().lines().count(), 97);
        assert!(lp_file(&c, &s, &d).unwrap_or_default().contains("HeatPump.on.1"));
        assert!(explain(&c, &s, &d, "balance.").unwrap_or_default().lines().count() > 0);
    }

    #[test]
    fn text_columns_are_skipped() {
        let src = columns("timestamp,COP\n2016-08-17T00:00:00,2.5\n").unwrap_or_else(|_| panic!());
        assert_eq!(src.series.len(), 1);
        assert_eq!(src.series["COP"], vec![2.5]);
    }
}
