//! The eight railway queries.
//!
//! Q1–Q4 are geofencing queries evaluated per event: alert filtering inside
//! maintenance areas, noise per zone, zone speed limits and weather speed
//! advice. Q5–Q8 detect composite patterns: battery curve deviations,
//! passenger load, unscheduled stops and emergency-brake clusters.
//!
//! Every alert is positioned and timestamped at a real input event, never at
//! a synthesized point.

mod battery;
mod cep;
mod config;
mod fencing;
mod geofence;
mod weather;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

pub use battery::{BatteryCurve, CurveError, CycleKind};
pub use cep::{BatteryMonitor, BrakeMonitor, PassengerLoad, UnscheduledStops};
pub use config::{
    BatteryAssignment, ConfigError, CurveFile, ProjectionConfig, Q1Config, Q2Config, Q3Config,
    Q4Config, Q5Config, Q6Config, Q7Config, Q8Config, QueryConfig, TrainLoad, WeatherSpeedTable,
};
pub use fencing::{AlertFilter, DynamicSpeed, NoiseByZone, WeatherSpeed};
pub use geofence::{FenceError, FenceKind, Geofence, GeofenceRegistry, UnknownKind};
pub use weather::{
    CachedWeather, ClearSky, Condition, ProviderFailure, WeatherError, WeatherProvider,
    WeatherReport,
};

use crate::engine::{Operator, OperatorError};
use crate::geo::{PlanarPoint, Projection};
use crate::model::{TelemetryEvent, TrainId};
use crate::temporal::{TInstant, TrajectoryBuffer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QueryId {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    Q7,
    Q8,
}

impl QueryId {
    pub const ALL: [QueryId; 8] = [
        QueryId::Q1,
        QueryId::Q2,
        QueryId::Q3,
        QueryId::Q4,
        QueryId::Q5,
        QueryId::Q6,
        QueryId::Q7,
        QueryId::Q8,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryId::Q1 => "q1",
            QueryId::Q2 => "q2",
            QueryId::Q3 => "q3",
            QueryId::Q4 => "q4",
            QueryId::Q5 => "q5",
            QueryId::Q6 => "q6",
            QueryId::Q7 => "q7",
            QueryId::Q8 => "q8",
        }
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryId {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QueryId::ALL
            .into_iter()
            .find(|q| q.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| QueryError::UnknownQuery(s.to_owned()))
    }
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("unknown query `{0}` (expected q1..q8)")]
    UnknownQuery(String),
    #[error("no battery curve configured for train `{0}`")]
    NoCurveConfigured(TrainId),
    #[error("no load configuration for train `{0}`")]
    NoTrainConfig(TrainId),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Window(#[from] crate::engine::WindowError),
}

impl From<QueryError> for OperatorError {
    fn from(e: QueryError) -> Self {
        OperatorError::new(e)
    }
}

/// Everything a query needs besides its input stream.
#[derive(Clone)]
pub struct QueryContext {
    pub registry: Arc<GeofenceRegistry>,
    pub config: QueryConfig,
    /// Battery curves by the names used in `config.q5`.
    pub curves: BTreeMap<String, BatteryCurve>,
    pub weather: Arc<dyn WeatherProvider>,
}

impl QueryContext {
    /// Loads the curves the configuration names; weather defaults to clear.
    pub fn from_config(
        registry: Arc<GeofenceRegistry>,
        config: QueryConfig,
    ) -> Result<Self, QueryError> {
        let curves = config.load_curves()?;
        Ok(QueryContext {
            registry,
            config,
            curves,
            weather: Arc::new(ClearSky),
        })
    }

    pub fn with_weather(mut self, weather: Arc<dyn WeatherProvider>) -> Self {
        self.weather = weather;
        self
    }
}

/// The operator chain for `id`.
pub fn build_query(id: QueryId, ctx: &QueryContext) -> Result<Vec<Box<dyn Operator>>, QueryError> {
    let reg = ctx.registry.clone();
    let cfg = &ctx.config;
    let op: Box<dyn Operator> = match id {
        QueryId::Q1 => Box::new(AlertFilter::new(reg, cfg.q1.clone())),
        QueryId::Q2 => Box::new(NoiseByZone::new(reg, cfg.q2.clone(), cfg.window_cap)?),
        QueryId::Q3 => Box::new(DynamicSpeed::new(reg, cfg.q3.clone())),
        QueryId::Q4 => Box::new(WeatherSpeed::new(reg, cfg.q4.clone(), ctx.weather.clone())),
        QueryId::Q5 => Box::new(BatteryMonitor::new(reg, cfg.q5.clone(), &ctx.curves)),
        QueryId::Q6 => Box::new(PassengerLoad::new(cfg.q6.clone(), cfg.window_cap)?),
        QueryId::Q7 => Box::new(UnscheduledStops::new(reg, cfg.q7.clone(), cfg.window_cap)?),
        QueryId::Q8 => Box::new(BrakeMonitor::new(reg, cfg.q8.clone(), cfg.window_cap)?),
    };
    Ok(vec![op])
}

/// Projects events and fills in speed where the event lacks it, from the
/// train's last two fixes.
#[derive(Debug)]
pub(crate) struct Tracker {
    projection: Projection,
    trains: HashMap<TrainId, TrajectoryBuffer>,
}

impl Tracker {
    pub(crate) fn new(projection: Projection) -> Self {
        Tracker {
            projection,
            trains: HashMap::new(),
        }
    }

    pub(crate) fn position(&self, ev: &TelemetryEvent) -> Result<PlanarPoint, OperatorError> {
        Ok(self.projection.project(ev.lon, ev.lat)?)
    }

    /// Position and speed (reported, else derived; `None` for a train's
    /// first fix without a reported speed).
    pub(crate) fn observe(
        &mut self,
        ev: &TelemetryEvent,
    ) -> Result<(PlanarPoint, Option<f64>), OperatorError> {
        let pos = self.position(ev)?;
        let buf = match self.trains.get_mut(&ev.train_id) {
            Some(buf) => buf,
            None => self
                .trains
                .entry(ev.train_id.clone())
                .or_insert_with(|| TrajectoryBuffer::new(ev.train_id.as_str(), i64::MAX, 2)),
        };
        let inst = TInstant::new(ev.ts, pos).map_err(OperatorError::new)?;
        // the pipeline entrance already dropped stale events
        let _ = buf.append(inst);
        Ok((pos, ev.speed.or_else(|| buf.last_speed())))
    }
}
