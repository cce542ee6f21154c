use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::temporal::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Clear,
    HeavyRain,
    Snow,
    Fog,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Clear => "clear",
            Condition::HeavyRain => "heavy_rain",
            Condition::Snow => "snow",
            Condition::Fog => "fog",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = WeatherError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Condition::Clear,
            Condition::HeavyRain,
            Condition::Snow,
            Condition::Fog,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| WeatherError::UnknownCondition(s.to_owned()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeatherError {
    #[error("unknown weather condition `{0}`")]
    UnknownCondition(String),
    #[error("intensity {0} is outside [0, 1]")]
    Intensity(f64),
    #[error("visibility {0} must be non-negative")]
    Visibility(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherReport {
    condition: Condition,
    intensity: f64,
    visibility_m: f64,
}

impl WeatherReport {
    pub fn new(condition: Condition, intensity: f64, visibility_m: f64) -> Result<Self, WeatherError> {
        if !(0.0..=1.0).contains(&intensity) {
            return Err(WeatherError::Intensity(intensity));
        }
        if !(visibility_m >= 0.0) {
            return Err(WeatherError::Visibility(visibility_m));
        }
        Ok(WeatherReport {
            condition,
            intensity,
            visibility_m,
        })
    }

    /// The report used when nothing better is known.
    pub const fn clear() -> Self {
        WeatherReport {
            condition: Condition::Clear,
            intensity: 0.0,
            visibility_m: 10_000.0,
        }
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn visibility_m(&self) -> f64 {
        self.visibility_m
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("weather provider failed: {0}")]
pub struct ProviderFailure(pub String);

/// Source of weather at a place and time.
pub trait WeatherProvider: Send + Sync {
    fn lookup(&self, lon: f64, lat: f64, ts: Timestamp) -> Result<WeatherReport, ProviderFailure>;
}

/// Always clear.
#[derive(Debug, Default, Clone, Copy)]
pub struct ClearSky;

impl WeatherProvider for ClearSky {
    fn lookup(&self, _: f64, _: f64, _: Timestamp) -> Result<WeatherReport, ProviderFailure> {
        Ok(WeatherReport::clear())
    }
}

/// Memoizes a provider per grid cell and time bucket.
///
/// The inner provider is asked about the cell's south-west corner at the
/// bucket start, so the cached value does not depend on which event happened
/// to hit the cell first. Failures are not cached; they read as clear and
/// are counted.
pub struct CachedWeather {
    inner: Arc<dyn WeatherProvider>,
    grid_deg: f64,
    bucket_ms: Timestamp,
    cache: HashMap<(i64, i64, i64), WeatherReport>,
    misses: u64,
    fallbacks: u64,
}

impl CachedWeather {
    pub fn new(inner: Arc<dyn WeatherProvider>, grid_deg: f64, bucket_ms: Timestamp) -> Self {
        assert!(grid_deg > 0.0 && bucket_ms > 0);
        CachedWeather {
            inner,
            grid_deg,
            bucket_ms,
            cache: HashMap::new(),
            misses: 0,
            fallbacks: 0,
        }
    }

    pub fn lookup(&mut self, lon: f64, lat: f64, ts: Timestamp) -> WeatherReport {
        let cx = (lon / self.grid_deg).floor() as i64;
        let cy = (lat / self.grid_deg).floor() as i64;
        let bucket = ts.div_euclid(self.bucket_ms);
        if let Some(report) = self.cache.get(&(cx, cy, bucket)) {
            return *report;
        }
        self.misses += 1;
        // a hair inside the cell so the corner is not claimed by its neighbours
        let eps = self.grid_deg * 1e-9;
        let (qlon, qlat) = (
            cx as f64 * self.grid_deg + eps,
            cy as f64 * self.grid_deg + eps,
        );
        match self.inner.lookup(qlon, qlat, bucket * self.bucket_ms) {
            Ok(report) => {
                self.cache.insert((cx, cy, bucket), report);
                report
            }
            Err(_) => {
                self.fallbacks += 1;
                WeatherReport::clear()
            }
        }
    }

    /// Provider calls made so far.
    pub fn misses(&self) -> u64 {
        self.misses
    }

    /// Lookups answered with the clear fallback after a provider failure.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }
}
