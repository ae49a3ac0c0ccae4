//! Time-series sources. A reference names a file and a dataset path; the CSV
//! backend reads the column named by the path without its leading `/`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::situation::SeriesRef;
use super::IoError;

pub trait SeriesSource {
    /// Raw values in the unit declared by the reference.
    fn raw(&self, r: &SeriesRef) -> Result<Vec<f64>, IoError>;
}

/// Loads, length-checks and normalizes a referenced series.
pub fn load_timeseries(source: &dyn SeriesSource, r: &SeriesRef, n: usize) -> Result<Vec<f64>, IoError> {
    let raw = source.raw(r)?;
    if raw.len() != n {
        return Err(IoError::LengthMismatch { key: describe(r), found: raw.len(), expected: n });
    }
    let f = r.unit.factor();
    Ok(raw.into_iter().map(|v| v * f).collect())
}

fn describe(r: &SeriesRef) -> String {
    format!("{}:{}", r.file_name, r.data_set_path)
}

pub fn column_name(r: &SeriesRef) -> &str {
    r.data_set_path.trim_start_matches('/')
}

/// CSV files resolved relative to a base directory: one header row, one
/// column per dataset, one row per time unit.
#[derive(Debug, Clone)]
pub struct CsvSource {
    pub base: PathBuf,
}

impl CsvSource {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        CsvSource { base: base.into() }
    }
}

/// Reads one numeric column from a CSV file.
pub fn read_csv_column(path: &Path, column: &str) -> Result<Vec<f64>, IoError> {
    let io = |e: std::io::Error| IoError::Io { path: path.display().to_string(), source: e };
    let bad = |msg: String| IoError::Csv { path: path.display().to_string(), msg };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?;
    let Some(c) = headers.iter().position(|h| h == column) else {
        return Err(IoError::NotFound { file: path.display().to_string(), column: column.into() });
    };
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = &rec[c];
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => return Err(bad(format!("column `{column}` row {}: `{field}` is not a finite number", row + 1))),
        }
    }
    Ok(out)
}

impl SeriesSource for CsvSource {
    fn raw(&self, r: &SeriesRef) -> Result<Vec<f64>, IoError> {
        if r.file_name.ends_with(".h5") || r.file_name.ends_with(".hdf5") {
            return Err(IoError::Unsupported(format!(
                "`{}` is an HDF5 file; only CSV time series are supported",
                r.file_name
            )));
        }
        read_csv_column(&self.base.join(&r.file_name), column_name(r))
    }
}

/// In-memory source keyed by dataset path, for programmatic scenarios.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    pub series: HashMap<String, Vec<f64>>,
}

impl MemorySource {
    pub fn insert(&mut self, path: &str, values: Vec<f64>) {
        self.series.insert(path.trim_start_matches('/').to_string(), values);
    }
}

impl SeriesSource for MemorySource {
    fn raw(&self, r: &SeriesRef) -> Result<Vec<f64>, IoError> {
        self.series
            .get(column_name(r))
            .cloned()
            .ok_or_else(|| IoError::NotFound { file: r.file_name.clone(), column: column_name(r).into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::situation::SeriesUnit;

    fn write(dir: &Path, rows: usize) {
        let mut text = String::from("timestamp,COP,MinHeating\n");
        for i in 0..rows {
            text += &format!("2016-08-17T00:{:02}:00,{},{}\n", i % 60, 3.0 + i as f64 * 0.01, 1500.0);
        }
        std::fs::write(dir.join("day.csv"), text).unwrap();
    }

    fn r(path: &str, unit: SeriesUnit) -> SeriesRef {
        SeriesRef { file_name: "day.csv".into(), data_set_path: path.into(), unit }
    }

    #[test]
    fn cop_column() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), 96);
        let src = CsvSource::new(dir.path());
        let cop = load_timeseries(&src, &r("/COP", SeriesUnit::None), 96).unwrap();
        assert_eq!(cop.len(), 96);
        assert!((cop[10] - 3.1).abs() < 1e-12);
    }

    #[test]
    fn short_file_and_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), 95);
        let src = CsvSource::new(dir.path());
        assert!(matches!(
            load_timeseries(&src, &r("/COP", SeriesUnit::None), 96),
            Err(IoError::LengthMismatch { found: 95, expected: 96, .. })
        ));
        assert!(matches!(load_timeseries(&src, &r("/DHW", SeriesUnit::Kilowatt), 95), Err(IoError::NotFound { .. })));
        assert!(matches!(load_timeseries(&src, &r("/timestamp", SeriesUnit::None), 95), Err(IoError::Csv { .. })));
    }

    #[test]
    fn watts_become_kilowatts() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), 4);
        let v = load_timeseries(&CsvSource::new(dir.path()), &r("/MinHeating", SeriesUnit::Watt), 4).unwrap();
        assert_eq!(v, vec![1.5; 4]);
    }

    #[test]
    fn hdf5_is_reported() {
        let src = CsvSource::new(".");
        let mut h5 = r("/COP", SeriesUnit::None);
        h5.file_name = "UDK Heat Pump Scenario-2017-05.h5".into();
        assert!(matches!(src.raw(&h5), Err(IoError::Unsupported(_))));
    }
}
