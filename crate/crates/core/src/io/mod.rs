//! Building descriptions, time series and schedule output, plus the
//! pipeline that turns them into a model.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod situation;
pub mod timeseries;
mod xml;

use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::components::ComponentError;
use crate::fcchp::FcchpError;
use crate::milp::ModelError;

pub use config::{parse_configuration, serialize_configuration, BuildingConfiguration, ComponentConfig};
pub use output::{schedule_csv, write_schedule, WrittenSchedule};
pub use pipeline::{build_scenario, Scenario};
pub use situation::{parse_situation, serialize_situation, BuildingSituation, ComponentSituation, SeriesRef, SeriesUnit};
pub use timeseries::{load_timeseries, CsvSource, MemorySource, SeriesSource};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed XML at {line}:{col}: {msg}")]
    Xml { line: u32, col: u32, msg: String },
    #[error("{path} (line {line}, column {col}): {msg}")]
    Schema { path: String, line: u32, col: u32, msg: String },
    #[error("duplicate id `{id}` at {line}:{col}")]
    DuplicateId { id: String, line: u32, col: u32 },
    #[error("situation `{situation}` does not belong to configuration `{configuration}`")]
    ScenarioMismatch { configuration: String, situation: String },
    #[error("situation refers to unconfigured component `{id}` at {line}:{col}")]
    UnknownComponent { id: String, line: u32, col: u32 },
    #[error("component `{id}` has no situation entry")]
    MissingSituation { id: String },
    #[error("series `{key}` has {found} values, expected {expected}")]
    LengthMismatch { key: String, found: usize, expected: usize },
    #[error("no column `{column}` in `{file}`")]
    NotFound { file: String, column: String },
    #[error("CSV error in `{path}`: {msg}")]
    Csv { path: String, msg: String },
    #[error("{0}")]
    Unsupported(String),
    #[error("cannot access `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error(transparent)]
    Fcchp(#[from] FcchpError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
