//! Schedule output: a CSV with one column per series and a JSON sidecar with
//! status, objective and solver statistics.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::situation::TIMESTAMP_FORMAT;
use super::IoError;
use crate::solve::{Schedule, Status};

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Meta<'a> {
    scenario: &'a str,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    nbs_of_time_units: usize,
    hours_per_time_unit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<String>,
    nodes: usize,
    lp_pivots: usize,
    seconds: f64,
    series: Vec<&'a str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrittenSchedule {
    pub csv: Option<PathBuf>,
    pub meta: PathBuf,
}

/// Writes `<stem>.csv` (only when there is a solution) and
/// `<stem>.meta.json` into `dir`. A stale CSV from an earlier run is removed
/// when the new run has no solution.
pub fn write_schedule(schedule: &Schedule, scenario: &str, dir: &Path, stem: &str) -> Result<WrittenSchedule, IoError> {
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |e: std::io::Error| IoError::Io { path: p.clone(), source: e }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let meta_path = dir.join(format!("{stem}.meta.json"));
    let has = schedule.has_solution();
    let csv = if has {
        std::fs::write(&csv_path, schedule_csv(schedule)).map_err(io(&csv_path))?;
        Some(csv_path)
    } else {
        if csv_path.exists() {
            std::fs::remove_file(&csv_path).map_err(io(&csv_path))?;
        }
        None
    };
    let meta = Meta {
        scenario,
        status: schedule.status.label(),
        objective: has.then_some(schedule.objective),
        gap: match schedule.status {
            Status::Feasible { gap } => Some(gap),
            _ => None,
        },
        nbs_of_time_units: schedule.grid.n,
        hours_per_time_unit: schedule.grid.hours_per_unit,
        start: schedule.grid.start.map(|t| t.format(TIMESTAMP_FORMAT).to_string()),
        nodes: schedule.stats.nodes,
        lp_pivots: schedule.stats.lp_pivots,
        seconds: schedule.stats.seconds,
        series: schedule.series.iter().map(|(k, _)| k.as_str()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    std::fs::write(&meta_path, text).map_err(io(&meta_path))?;
    Ok(WrittenSchedule { csv, meta: meta_path })
}

/// First column is the start of each unit (or its offset in hours when the
/// grid has no start timestamp).
pub fn schedule_csv(schedule: &Schedule) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["timestamp"];
    header.extend(schedule.series.iter().map(|(k, _)| k.as_str()));
    w.write_record(&header).expect("in-memory write");
    let g = &schedule.grid;
    for i in 0..g.n {
        let offset = i as f64 * g.hours_per_unit;
        let stamp = match g.start {
            Some(t) => {
                let ms = (offset * 3_600_000.0).round() as i64;
                (t + chrono::Duration::milliseconds(ms)).format(TIMESTAMP_FORMAT).to_string()
            }
            None => format!("{offset}"),
        };
        let mut row = vec![stamp];
        row.extend(schedule.series.iter().map(|(_, v)| format!("{}", v[i])));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::TimeGrid;
    use crate::solve::SolveStats;
    use chrono::NaiveDateTime;

    fn schedule(status: Status) -> Schedule {
        let start = NaiveDateTime::parse_from_str("2016-08-17T00:00:00", TIMESTAMP_FORMAT).unwrap();
        Schedule {
            grid: TimeGrid::new(3, 0.25).unwrap().with_start(start),
            status,
            solved: status == Status::Optimal,
            objective: 12.5,
            stats: SolveStats::default(),
            series: vec![
                ("electricInputPower_HeatPump".into(), vec![1.8, 0.0, 1.8]),
                ("thermalEnergyLevel_HotWaterBuffer".into(), vec![0.5, 0.25, 1.0]),
            ],
        }
    }

    #[test]
    fn csv_layout() {
        let text = schedule_csv(&schedule(Status::Optimal));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "timestamp,electricInputPower_HeatPump,thermalEnergyLevel_HotWaterBuffer");
        assert_eq!(lines[2], "2016-08-17T00:15:00,0,0.25");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn infeasible_writes_metadata_only() {
        let dir = tempfile::tempdir().unwrap();
        let ok = write_schedule(&schedule(Status::Optimal), "S", dir.path(), "out").unwrap();
        assert!(ok.csv.as_ref().unwrap().exists());
        let mut s = schedule(Status::Infeasible);
        s.series.clear();
        let w = write_schedule(&s, "S", dir.path(), "out").unwrap();
        assert!(w.csv.is_none() && !dir.path().join("out.csv").exists());
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(w.meta).unwrap()).unwrap();
        assert_eq!(meta["status"], "infeasible");
        assert!(meta.get("objective").is_none());
    }

    #[test]
    fn repeated_writes_are_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_schedule(&schedule(Status::Optimal), "S", dir.path(), "a").unwrap();
        let b = write_schedule(&schedule(Status::Optimal), "S", dir.path(), "b").unwrap();
        assert_eq!(std::fs::read(a.csv.unwrap()).unwrap(), std::fs::read(b.csv.unwrap()).unwrap());
    }
}
