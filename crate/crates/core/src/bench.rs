//! Throughput harness: replays simulated telemetry through one query and
//! reports events and megabytes per second.

use std::convert::Infallible;
use std::io::Cursor;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{EngineError, NullSink, Pipeline};
use crate::ingest::{parse_geofences, row_len, simulate, FixtureWeather, IngestError, SimScenario};
use crate::model::TelemetryEvent;
use crate::queries::{
    build_query, BatteryCurve, ConfigError, CycleKind, QueryConfig, QueryContext, QueryError, QueryId,
};

pub const SCENARIO: &str = include_str!("../fixtures/scenario.toml");
pub const FENCES: &str = include_str!("../fixtures/fences.geojson");
pub const WEATHER: &str = include_str!("../fixtures/weather.csv");
pub const CONFIG: &str = include_str!("../fixtures/config.toml");
const CURVES: [(&str, &str); 2] = [
    ("curves/discharge.csv", include_str!("../fixtures/curves/discharge.csv")),
    ("curves/charge.csv", include_str!("../fixtures/curves/charge.csv")),
];

pub const WARMUP_EVENTS: usize = 10_000;
pub const BYTES_PER_MB: f64 = 1_048_576.0;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("event count must be at least 1")]
    NoEvents,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub query_id: String,
    pub events_processed: u64,
    pub bytes_processed: u64,
    pub wall_time_ms: f64,
    pub events_per_second: f64,
    pub megabytes_per_second: f64,
    pub dropped_stale: u64,
    pub alerts_out: u64,
}

impl BenchReport {
    fn new(id: QueryId, events: u64, bytes: u64, wall_time_ms: f64, dropped: u64, alerts: u64) -> Self {
        // guard against a zero reading on very small runs
        let wall_time_ms = wall_time_ms.max(1e-6);
        let secs = wall_time_ms / 1_000.0;
        BenchReport {
            query_id: id.as_str().to_owned(),
            events_processed: events,
            bytes_processed: bytes,
            wall_time_ms,
            events_per_second: events as f64 / secs,
            megabytes_per_second: (bytes as f64 / BYTES_PER_MB) / secs,
            dropped_stale: dropped,
            alerts_out: alerts,
        }
    }

    pub fn bytes_per_event(&self) -> f64 {
        self.bytes_processed as f64 / self.events_processed as f64
    }
}

/// The bundled scenario with a new seed, every train running long enough to
/// produce `n` events between them. Trains never stop before their scheduled
/// end, so the injected faults stay inside the span.
pub fn bench_scenario(n: usize, seed: u64) -> Result<SimScenario, IngestError> {
    let mut scenario = SimScenario::from_toml_str(SCENARIO)?;
    scenario.seed = seed;
    let per_train = n.div_ceil(scenario.trains.len()) as i64 + 1;
    for train in &mut scenario.trains {
        train.seed = None;
        let end = train.start_ts + per_train * scenario.tick_ms;
        train.end_ts = Some(train.end_ts.map_or(end, |e| e.max(end)));
    }
    for (path, text) in CURVES {
        let curve = BatteryCurve::from_reader(text.as_bytes(), 1.0, CycleKind::Discharge)?;
        scenario = scenario.with_curve(path, curve);
    }
    Ok(scenario)
}

/// Query context over the bundled fences, weather and config.
pub fn bench_context() -> Result<QueryContext, BenchError> {
    let config = QueryConfig::from_toml_str(CONFIG, &[])?;
    let registry = parse_geofences(FENCES, config.projection()?)?;
    let mut curves = std::collections::BTreeMap::new();
    for (name, cf) in &config.q5.curves {
        let text = CURVES
            .iter()
            .find(|(path, _)| cf.file.as_os_str() == *path)
            .map(|(_, text)| *text)
            .ok_or_else(|| ConfigError::Invalid {
                key: "q5.curves",
                reason: format!("{} is not bundled", cf.file.display()),
            })?;
        let curve = BatteryCurve::from_reader(text.as_bytes(), config.q5.tolerance_v, cf.kind)
            .map_err(|source| ConfigError::Curve {
                name: name.clone(),
                source,
            })?;
        curves.insert(name.clone(), curve);
    }
    let weather = FixtureWeather::from_reader(Cursor::new(WEATHER))?;
    Ok(QueryContext {
        registry: Arc::new(registry),
        config,
        curves,
        weather: Arc::new(weather),
    })
}

/// Generates `n` events up front.
pub fn bench_events(n: usize, seed: u64) -> Result<Vec<TelemetryEvent>, BenchError> {
    let scenario = bench_scenario(n, seed)?;
    Ok(simulate(&scenario)?.take(n).collect())
}

/// Runs `query` over `n` simulated events. Only the pipeline pass is timed;
/// generation and a warm-up over the first events are not.
pub fn run_bench(query: QueryId, n: usize, seed: u64) -> Result<BenchReport, BenchError> {
    if n == 0 {
        return Err(BenchError::NoEvents);
    }
    let ctx = bench_context()?;
    let events = bench_events(n, seed)?;
    let bytes: u64 = events.iter().map(|e| row_len(e) as u64).sum();

    let warm: Vec<_> = events.iter().take(WARMUP_EVENTS).cloned().collect();
    Pipeline::new(build_query(query, &ctx)?)?
        .run(warm.into_iter().map(Ok::<_, Infallible>), &mut NullSink::default())?;

    let pipeline = Pipeline::new(build_query(query, &ctx)?)?;
    let mut sink = NullSink::default();
    let count = events.len() as u64;
    let start = Instant::now();
    let stats = pipeline.run(events.into_iter().map(Ok::<_, Infallible>), &mut sink)?;
    let wall = start.elapsed().as_secs_f64() * 1_000.0;

    Ok(BenchReport::new(
        query,
        count,
        bytes,
        wall,
        stats.events_dropped_stale,
        stats.alerts_out,
    ))
}
