use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{open, IngestError};
use crate::queries::{Condition, ProviderFailure, WeatherProvider, WeatherReport};
use crate::temporal::Timestamp;

#[derive(Debug, Deserialize)]
struct Row {
    t_start: Timestamp,
    t_end: Timestamp,
    lon_min: f64,
    lon_max: f64,
    lat_min: f64,
    lat_max: f64,
    condition: String,
    intensity: f64,
    visibility: f64,
}

#[derive(Debug, Clone)]
struct Entry {
    t_start: Timestamp,
    t_end: Timestamp,
    lon: (f64, f64),
    lat: (f64, f64),
    report: WeatherReport,
}

/// Weather from a table of boxes. Time spans are half-open `[t_start,
/// t_end)`, boxes inclusive; the first matching row wins and no match reads
/// as clear.
#[derive(Debug, Clone, Default)]
pub struct FixtureWeather {
    entries: Vec<Entry>,
}

impl FixtureWeather {
    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let file = open(path)?;
        FixtureWeather::from_reader(std::io::BufReader::new(file)).map_err(|e| match e {
            IngestError::Parse { context, message } => IngestError::Parse {
                context: format!("{} ({context})", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn from_reader(reader: impl Read) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let context = || format!("weather row {}", i + 1);
            let row = row.map_err(|e| IngestError::parse(context(), e))?;
            let condition: Condition = row
                .condition
                .parse()
                .map_err(|e| IngestError::parse(context(), e))?;
            let report = WeatherReport::new(condition, row.intensity, row.visibility)
                .map_err(|e| IngestError::parse(context(), e))?;
            if row.t_end < row.t_start || row.lon_max < row.lon_min || row.lat_max < row.lat_min {
                return Err(IngestError::parse(context(), "inverted range"));
            }
            entries.push(Entry {
                t_start: row.t_start,
                t_end: row.t_end,
                lon: (row.lon_min, row.lon_max),
                lat: (row.lat_min, row.lat_max),
                report,
            });
        }
        Ok(FixtureWeather { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl WeatherProvider for FixtureWeather {
    fn lookup(&self, lon: f64, lat: f64, ts: Timestamp) -> Result<WeatherReport, ProviderFailure> {
        Ok(self
            .entries
            .iter()
            .find(|e| {
                e.t_start <= ts
                    && ts < e.t_end
                    && (e.lon.0..=e.lon.1).contains(&lon)
                    && (e.lat.0..=e.lat.1).contains(&lat)
            })
            .map_or(WeatherReport::clear(), |e| e.report))
    }
}
