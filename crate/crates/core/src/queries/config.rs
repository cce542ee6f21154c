use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::battery::{BatteryCurve, CurveError, CycleKind};
use crate::engine::DEFAULT_WINDOW_CAP;
use crate::geo::Projection;
use crate::temporal::Timestamp;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("override `{0}` is not of the form key.path=value")]
    BadOverride(String),
    #[error("override `{key}` conflicts with a non-table value at `{at}`")]
    OverrideConflict { key: String, at: String },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("q5 train `{train}` refers to unknown curve `{curve}`")]
    UnknownCurve { train: String, curve: String },
    #[error("battery curve `{name}`: {source}")]
    Curve {
        name: String,
        #[source]
        source: CurveError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    pub ref_lon: f64,
    pub ref_lat: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        let p = Projection::default();
        ProjectionConfig {
            ref_lon: p.ref_lon(),
            ref_lat: p.ref_lat(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q1Config {
    /// Brake pressure below this (with the emergency brake released) is an
    /// equipment fault.
    pub brake_floor_bar: f64,
    pub default_line_speed_mps: f64,
    pub suppress_in_maintenance: bool,
}

impl Default for Q1Config {
    fn default() -> Self {
        Q1Config {
            brake_floor_bar: 3.0,
            default_line_speed_mps: 44.4,
            suppress_in_maintenance: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q2Config {
    pub window_ms: Timestamp,
    pub slide_ms: Timestamp,
}

impl Default for Q2Config {
    fn default() -> Self {
        Q2Config {
            window_ms: 60_000,
            slide_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q3Config {
    pub default_line_speed_mps: f64,
}

impl Default for Q3Config {
    fn default() -> Self {
        Q3Config {
            default_line_speed_mps: 44.4,
        }
    }
}

/// Maximum advisable speed per condition, m/s. Clear weather never restricts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherSpeedTable {
    pub heavy_rain: f64,
    pub snow: f64,
    pub fog: f64,
}

impl Default for WeatherSpeedTable {
    fn default() -> Self {
        WeatherSpeedTable {
            heavy_rain: 22.2,
            snow: 16.7,
            fog: 13.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q4Config {
    pub grid_deg: f64,
    pub bucket_ms: Timestamp,
    pub max_speed: WeatherSpeedTable,
}

impl Default for Q4Config {
    fn default() -> Self {
        Q4Config {
            grid_deg: 0.1,
            bucket_ms: 3_600_000,
            max_speed: WeatherSpeedTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    /// Relative paths resolve against the config file's directory.
    pub file: PathBuf,
    pub kind: CycleKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryAssignment {
    pub curve: String,
    #[serde(default)]
    pub cycle_start_ms: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q5Config {
    pub tolerance_v: f64,
    pub consecutive: usize,
    pub overheat_c: f64,
    pub discharge_floor_v: f64,
    pub curves: BTreeMap<String, CurveFile>,
    pub trains: BTreeMap<String, BatteryAssignment>,
}

impl Default for Q5Config {
    fn default() -> Self {
        Q5Config {
            tolerance_v: 1.5,
            consecutive: 3,
            overheat_c: 55.0,
            discharge_floor_v: 21.0,
            curves: BTreeMap::new(),
            trains: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainLoad {
    pub tare_kg: f64,
    pub seat_capacity: u32,
    #[serde(default = "default_kg_per_passenger")]
    pub kg_per_passenger: f64,
}

fn default_kg_per_passenger() -> f64 {
    80.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q6Config {
    pub window_ms: Timestamp,
    pub trains: BTreeMap<String, TrainLoad>,
}

impl Default for Q6Config {
    fn default() -> Self {
        Q6Config {
            window_ms: 300_000,
            trains: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q7Config {
    pub speed_epsilon_mps: f64,
    pub min_duration_ms: Timestamp,
    pub buffer_m: f64,
}

impl Default for Q7Config {
    fn default() -> Self {
        Q7Config {
            speed_epsilon_mps: 0.5,
            min_duration_ms: 120_000,
            buffer_m: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q8Config {
    pub window_ms: Timestamp,
    pub slide_ms: Timestamp,
    pub min_count: usize,
    pub low_pressure_bar: f64,
    pub low_pressure_min_ms: Timestamp,
}

impl Default for Q8Config {
    fn default() -> Self {
        Q8Config {
            window_ms: 3_600_000,
            slide_ms: 600_000,
            min_count: 3,
            low_pressure_bar: 3.5,
            low_pressure_min_ms: 60_000,
        }
    }
}

/// Every tunable of the eight queries. Absent keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryConfig {
    pub projection: ProjectionConfig,
    /// Events one open window may hold.
    pub window_cap: usize,
    pub q1: Q1Config,
    pub q2: Q2Config,
    pub q3: Q3Config,
    pub q4: Q4Config,
    pub q5: Q5Config,
    pub q6: Q6Config,
    pub q7: Q7Config,
    pub q8: Q8Config,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            projection: ProjectionConfig::default(),
            window_cap: DEFAULT_WINDOW_CAP,
            q1: Q1Config::default(),
            q2: Q2Config::default(),
            q3: Q3Config::default(),
            q4: Q4Config::default(),
            q5: Q5Config::default(),
            q6: Q6Config::default(),
            q7: Q7Config::default(),
            q8: Q8Config::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Sets `path.to.key=value` in `table`. The value is read as a TOML value,
/// or as a bare string when it does not parse as one.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(assignment.to_owned()))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::BadOverride(assignment.to_owned()));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_owned()));

    let mut node = table;
    for (depth, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::OverrideConflict {
                key: key.to_owned(),
                at: parts[..=depth].join("."),
            })?;
    }
    node.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

impl QueryConfig {
    /// Parses `text`, then applies `key=value` overrides in order.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = toml::from_str(text)?;
        for assignment in overrides {
            apply_override(&mut table, assignment)?;
        }
        let config: QueryConfig = toml::Value::Table(table).try_into()?;
        config.validate()?;
        Ok(config)
    }

    /// Loads `path` (or the defaults when `None`) plus overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return QueryConfig::from_toml_str("", overrides);
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = QueryConfig::from_toml_str(&text, overrides)?;
        config.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(config)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn set_base_dir(&mut self, dir: impl Into<PathBuf>) {
        self.base_dir = dir.into();
    }

    pub fn projection(&self) -> Result<Projection, ConfigError> {
        Projection::new(self.projection.ref_lon, self.projection.ref_lat)
            .map_err(|e| invalid("projection", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.projection()?;
        let positive = |key: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive, got {v}")))
            }
        };
        let window = |key: &'static str, size: Timestamp, slide: Timestamp| {
            if size <= 0 || slide <= 0 || slide > size {
                Err(invalid(key, format!("need 0 < slide ({slide}) <= size ({size})")))
            } else {
                Ok(())
            }
        };
        if self.window_cap == 0 {
            return Err(invalid("window_cap", "must be at least 1"));
        }
        positive("q1.brake_floor_bar", self.q1.brake_floor_bar)?;
        positive("q1.default_line_speed_mps", self.q1.default_line_speed_mps)?;
        window("q2", self.q2.window_ms, self.q2.slide_ms)?;
        positive("q3.default_line_speed_mps", self.q3.default_line_speed_mps)?;
        positive("q4.grid_deg", self.q4.grid_deg)?;
        if self.q4.bucket_ms <= 0 {
            return Err(invalid("q4.bucket_ms", "must be positive"));
        }
        positive("q4.max_speed.heavy_rain", self.q4.max_speed.heavy_rain)?;
        positive("q4.max_speed.snow", self.q4.max_speed.snow)?;
        positive("q4.max_speed.fog", self.q4.max_speed.fog)?;
        positive("q5.tolerance_v", self.q5.tolerance_v)?;
        if self.q5.consecutive == 0 {
            return Err(invalid("q5.consecutive", "must be at least 1"));
        }
        for (train, a) in &self.q5.trains {
            if !self.q5.curves.contains_key(&a.curve) {
                return Err(ConfigError::UnknownCurve {
                    train: train.clone(),
                    curve: a.curve.clone(),
                });
            }
        }
        if self.q6.window_ms <= 0 {
            return Err(invalid("q6.window_ms", "must be positive"));
        }
        for load in self.q6.trains.values() {
            if !(load.tare_kg >= 0.0 && load.tare_kg.is_finite()) {
                return Err(invalid("q6.trains.tare_kg", "must be non-negative"));
            }
            positive("q6.trains.kg_per_passenger", load.kg_per_passenger)?;
        }
        if !(self.q7.speed_epsilon_mps > 0.0) {
            return Err(invalid("q7.speed_epsilon_mps", "must be positive"));
        }
        if self.q7.min_duration_ms < 0 || !(self.q7.buffer_m >= 0.0) {
            return Err(invalid("q7", "duration and buffer must be non-negative"));
        }
        window("q8", self.q8.window_ms, self.q8.slide_ms)?;
        if self.q8.min_count == 0 {
            return Err(invalid("q8.min_count", "must be at least 1"));
        }
        positive("q8.low_pressure_bar", self.q8.low_pressure_bar)?;
        Ok(())
    }

    /// Reads every curve named under `q5.curves`.
    pub fn load_curves(&self) -> Result<BTreeMap<String, BatteryCurve>, ConfigError> {
        self.q5
            .curves
            .iter()
            .map(|(name, cf)| {
                let path = self.base_dir.join(&cf.file);
                BatteryCurve::from_path(&path, self.q5.tolerance_v, cf.kind)
                    .map(|c| (name.clone(), c))
                    .map_err(|source| ConfigError::Curve {
                        name: name.clone(),
                        source,
                    })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        let c = QueryConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c, QueryConfig::default());
        assert_eq!(c.q7.buffer_m, 200.0);
        assert_eq!((c.q8.window_ms, c.q8.slide_ms, c.q8.min_count), (3_600_000, 600_000, 3));
    }

    #[test]
    fn overrides_apply_in_order() {
        let text = "[q7]\nbuffer_m = 250.0\n";
        let c = QueryConfig::from_toml_str(
            text,
            &[
                "q7.buffer_m=300.0".into(),
                "q2.window_ms=30000".into(),
                "q1.suppress_in_maintenance=false".into(),
                "q6.trains.T1.tare_kg=1.0".into(),
                "q6.trains.T1.seat_capacity=2".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.q7.buffer_m, 300.0);
        assert_eq!(c.q2.window_ms, 30_000);
        assert!(!c.q1.suppress_in_maintenance);
        assert_eq!(c.q6.trains["T1"].kg_per_passenger, 80.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            QueryConfig::from_toml_str("[q9]\nx = 1\n", &[]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            QueryConfig::from_toml_str("", &["q7.buffer_m".into()]),
            Err(ConfigError::BadOverride(_))
        ));
        assert!(matches!(
            QueryConfig::from_toml_str("", &["q2.slide_ms=120000".into()]),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            QueryConfig::from_toml_str("[q7]\nbuffer_m = 200.0\n", &["q7.buffer_m.x=1".into()]),
            Err(ConfigError::OverrideConflict { .. })
        ));
        assert!(matches!(
            QueryConfig::from_toml_str("[q5.trains.T1]\ncurve = \"nope\"\n", &[]),
            Err(ConfigError::UnknownCurve { .. })
        ));
    }
}
