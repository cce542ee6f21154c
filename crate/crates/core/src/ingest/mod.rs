//! Data boundary: telemetry CSV, the simulator, geofence and weather files,
//! and alert sinks.

mod csv_io;
mod geojson;
mod sim;
mod sink;
mod weather;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use csv_io::{
    format_row, replay_csv, replay_reader, row_len, write_csv, CsvSource, DecodeError, HEADER,
};
pub use geojson::{load_geofences, parse_geofences};
pub use sim::{
    simulate, Fault, FaultKind, RouteSpec, SensorNoise, SimBattery, SimScenario, SimTrain,
    Simulation,
};
pub use sink::{alerts_to_geojson, export_geojson, JsonlSink};
pub use weather::FixtureWeather;

use crate::queries::{CurveError, FenceError, FenceKind};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("header is missing column(s): {}", missing.join(", "))]
    HeaderMismatch { missing: Vec<String> },
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error("duplicate geofence id `{0}`")]
    DuplicateId(String),
    #[error("feature {feature}: unknown geofence kind `{kind}`")]
    UnknownKind { feature: usize, kind: String },
    #[error("geofence `{id}` of kind {kind} is missing `{attribute}`")]
    MissingKindAttribute {
        id: String,
        kind: FenceKind,
        attribute: &'static str,
    },
    #[error("feature {feature}: {source}")]
    InvalidFence {
        feature: usize,
        #[source]
        source: FenceError,
    },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

impl IngestError {
    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        IngestError::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

pub(crate) fn open(path: &Path) -> Result<std::fs::File, IngestError> {
    std::fs::File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            IngestError::FileNotFound(path.to_path_buf())
        } else {
            IngestError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IngestError> {
    let mut text = String::new();
    std::io::Read::read_to_string(&mut open(path)?, &mut text).map_err(|source| {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    })?;
    Ok(text)
}
