//! Records that flow through pipelines: telemetry in, alerts out.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::temporal::Timestamp;

/// Train identifier. Cheap to clone; events of one train share the allocation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrainId(Arc<str>);

impl TrainId {
    pub fn new(id: &str) -> Self {
        TrainId(Arc::from(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TrainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TrainId {
    fn from(s: &str) -> Self {
        TrainId::new(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventError {
    #[error("{field} is not finite")]
    NonFinite { field: &'static str },
    #[error("{field} = {value} is out of range")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("negative timestamp {0}")]
    NegativeTimestamp(Timestamp),
}

/// One sensor reading from one train.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryEvent {
    pub train_id: TrainId,
    pub ts: Timestamp,
    pub lon: f64,
    pub lat: f64,
    /// Meters per second. When absent, queries derive it from the trajectory.
    pub speed: Option<f64>,
    pub battery_voltage: f64,
    pub battery_temp: f64,
    pub brake_pressure: f64,
    pub emergency_brake: bool,
    pub noise_db: f64,
    pub axle_load: f64,
    pub doors_open: bool,
}

impl TelemetryEvent {
    pub fn validate(&self) -> Result<(), EventError> {
        if self.ts < 0 {
            return Err(EventError::NegativeTimestamp(self.ts));
        }
        let finite = [
            ("lon", self.lon),
            ("lat", self.lat),
            ("speed_mps", self.speed.unwrap_or(0.0)),
            ("battery_v", self.battery_voltage),
            ("battery_temp_c", self.battery_temp),
            ("brake_bar", self.brake_pressure),
            ("noise_db", self.noise_db),
            ("axle_load_kg", self.axle_load),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return Err(EventError::NonFinite { field });
            }
        }
        let ranged = [
            ("lon", self.lon, -180.0, 180.0),
            ("lat", self.lat, -90.0, 90.0),
            ("battery_v", self.battery_voltage, 0.0, f64::MAX),
            ("brake_bar", self.brake_pressure, 0.0, f64::MAX),
            ("axle_load_kg", self.axle_load, 0.0, f64::MAX),
        ];
        for (field, value, lo, hi) in ranged {
            if value < lo || value > hi {
                return Err(EventError::OutOfRange { field, value });
            }
        }
        if let Some(speed) = self.speed {
            if speed < 0.0 {
                return Err(EventError::OutOfRange {
                    field: "speed_mps",
                    value: speed,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertType {
    Speeding,
    Equipment,
    Noise,
    SpeedSuggestion,
    WeatherSpeedSuggestion,
    BatteryDeviation,
    BatteryOverheat,
    ExcessiveDischarge,
    HeavyLoad,
    UnscheduledStop,
    BrakePattern,
    LowBrakePressure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Critical,
}

pub type Payload = serde_json::Map<String, serde_json::Value>;

/// Query output. Position and timestamp always come from a real input event.
///
/// Serialized field order is fixed: type, train_id, ts, lon, lat, severity,
/// payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    #[serde(rename = "type")]
    pub kind: AlertType,
    pub train_id: TrainId,
    pub ts: Timestamp,
    pub lon: f64,
    pub lat: f64,
    pub severity: Severity,
    pub payload: Payload,
}

impl Alert {
    pub fn new(
        kind: AlertType,
        severity: Severity,
        train_id: TrainId,
        ts: Timestamp,
        lon: f64,
        lat: f64,
    ) -> Self {
        Alert {
            kind,
            train_id,
            ts,
            lon,
            lat,
            severity,
            payload: Payload::new(),
        }
    }

    /// An alert located at `ev`.
    pub fn at(kind: AlertType, severity: Severity, ev: &TelemetryEvent) -> Self {
        Alert::new(kind, severity, ev.train_id.clone(), ev.ts, ev.lon, ev.lat)
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.payload.insert(key.to_owned(), value.into());
        self
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// A plausible event at the Brussels reference point.
    pub fn event(train: &str, ts: Timestamp) -> TelemetryEvent {
        TelemetryEvent {
            train_id: TrainId::new(train),
            ts,
            lon: 4.35,
            lat: 50.85,
            speed: Some(20.0),
            battery_voltage: 26.0,
            battery_temp: 30.0,
            brake_pressure: 5.0,
            emergency_brake: false,
            noise_db: 62.0,
            axle_load: 120_000.0,
            doors_open: false,
        }
    }
}
