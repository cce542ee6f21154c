//! Push-based, per-event pipeline.
//!
//! A pipeline is an ordered chain of [`Operator`]s that every accepted
//! telemetry event traverses synchronously. Operators may emit any number of
//! [`Record`]s downstream; whatever leaves the last operator goes to the
//! [`Sink`]. Event time is taken from the events themselves: per train, an
//! event whose timestamp does not advance past the last accepted one is
//! dropped at the entrance and counted, so operators can rely on in-order
//! input per train.
//!
//! Windows close when an event for the same key arrives at or past the window
//! end, or when the stream ends. End-of-stream flushing visits operators in
//! chain order, and each operator emits its open windows in key order, then
//! window-start order.

mod aggregate;
mod pipeline;
mod window;

use std::collections::BTreeMap;
use std::error::Error as StdError;
use std::io;

use serde::Serialize;
use thiserror::Error;

pub use aggregate::{aggregate, AggFn};
pub use pipeline::{bounded_source, run_pipeline, BoundedSource, Pipeline};
pub use window::{
    assign_sliding, assign_tumbling, SlidingWindows, ThresholdWindows, TumblingWindows,
    WindowBounds, WindowResult, WindowSpec, DEFAULT_WINDOW_CAP,
};

pub use crate::model::{Alert, TelemetryEvent};

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Event(TelemetryEvent),
    Alert(Alert),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindowError {
    #[error("invalid window specification: {0}")]
    InvalidSpec(&'static str),
    #[error("open window exceeded its capacity of {cap} events")]
    CapacityExceeded { cap: usize },
    #[error("aggregate requires at least one event")]
    EmptyWindow,
}

/// Failure raised inside an operator; aborts the run.
#[derive(Debug, Error)]
#[error(transparent)]
pub struct OperatorError(Box<dyn StdError + Send + Sync>);

impl OperatorError {
    pub fn new(err: impl Into<Box<dyn StdError + Send + Sync>>) -> Self {
        OperatorError(err.into())
    }

    pub fn inner(&self) -> &(dyn StdError + Send + Sync + 'static) {
        &*self.0
    }
}

impl From<WindowError> for OperatorError {
    fn from(e: WindowError) -> Self {
        OperatorError::new(e)
    }
}

impl From<crate::geo::GeoError> for OperatorError {
    fn from(e: crate::geo::GeoError) -> Self {
        OperatorError::new(e)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("a pipeline needs at least one operator")]
    EmptyPipeline,
    #[error("operator `{operator}` failed: {source}")]
    OperatorFailure {
        operator: String,
        #[source]
        source: OperatorError,
    },
    #[error("sink failed: {0}")]
    Sink(#[from] io::Error),
}

pub trait Operator: Send {
    fn name(&self) -> &str;

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError>;

    /// Called once at end-of-stream to flush open state.
    fn finish(&mut self, _out: &mut Vec<Record>) -> Result<(), OperatorError> {
        Ok(())
    }

    /// Named counters reported in [`PipelineStats::counters`].
    fn counters(&self) -> Vec<(&'static str, u64)> {
        Vec::new()
    }
}

pub trait Sink {
    fn accept(&mut self, rec: Record) -> io::Result<()>;

    fn finish(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineStats {
    pub events_in: u64,
    pub events_accepted: u64,
    pub events_dropped_stale: u64,
    pub decode_errors: u64,
    pub records_out: u64,
    pub alerts_out: u64,
    pub wall_time_ms: f64,
    pub counters: BTreeMap<String, u64>,
}

/// Passes every record through unchanged.
#[derive(Debug, Default)]
pub struct Identity;

impl Operator for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        out.push(rec);
        Ok(())
    }
}

/// Keeps events matching a predicate; other records pass through.
pub struct Filter<F> {
    name: String,
    predicate: F,
}

impl<F> Filter<F>
where
    F: FnMut(&TelemetryEvent) -> bool + Send,
{
    pub fn new(name: impl Into<String>, predicate: F) -> Self {
        Filter {
            name: name.into(),
            predicate,
        }
    }
}

impl<F> Operator for Filter<F>
where
    F: FnMut(&TelemetryEvent) -> bool + Send,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        match &rec {
            Record::Event(ev) if !(self.predicate)(ev) => {}
            _ => out.push(rec),
        }
        Ok(())
    }
}

/// Discards records, counting alerts.
#[derive(Debug, Default)]
pub struct NullSink {
    pub records: u64,
    pub alerts: u64,
}

impl Sink for NullSink {
    fn accept(&mut self, rec: Record) -> io::Result<()> {
        self.records += 1;
        if matches!(rec, Record::Alert(_)) {
            self.alerts += 1;
        }
        Ok(())
    }
}

/// Keeps every record in memory.
#[derive(Debug, Default)]
pub struct CollectSink {
    pub records: Vec<Record>,
}

impl CollectSink {
    pub fn alerts(&self) -> impl Iterator<Item = &Alert> + '_ {
        self.records.iter().filter_map(|r| match r {
            Record::Alert(a) => Some(a),
            Record::Event(_) => None,
        })
    }
}

impl Sink for CollectSink {
    fn accept(&mut self, rec: Record) -> io::Result<()> {
        self.records.push(rec);
        Ok(())
    }
}
