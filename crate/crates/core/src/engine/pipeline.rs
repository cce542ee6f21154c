use std::collections::HashMap;
use std::fmt::Display;
use std::sync::mpsc::{sync_channel, IntoIter};
use std::thread::{self, JoinHandle};
use std::time::Instant;

use super::{EngineError, Operator, PipelineStats, Record, Sink};
use crate::model::{TelemetryEvent, TrainId};
use crate::temporal::Timestamp;

pub struct Pipeline {
    operators: Vec<Box<dyn Operator>>,
    last_ts: HashMap<TrainId, Timestamp>,
    stats: PipelineStats,
    current: Vec<Record>,
    next: Vec<Record>,
}

impl Pipeline {
    pub fn new(operators: Vec<Box<dyn Operator>>) -> Result<Self, EngineError> {
        if operators.is_empty() {
            return Err(EngineError::EmptyPipeline);
        }
        Ok(Pipeline {
            operators,
            last_ts: HashMap::new(),
            stats: PipelineStats::default(),
            current: Vec::with_capacity(8),
            next: Vec::with_capacity(8),
        })
    }

    pub fn stats(&self) -> &PipelineStats {
        &self.stats
    }

    pub fn record_decode_error(&mut self) {
        self.stats.decode_errors += 1;
    }

    /// Feeds one event. Stale events (per-train timestamp not advancing) are
    /// dropped and counted.
    pub fn push(&mut self, ev: TelemetryEvent, sink: &mut dyn Sink) -> Result<(), EngineError> {
        self.stats.events_in += 1;
        match self.last_ts.get_mut(&ev.train_id) {
            Some(last) if ev.ts <= *last => {
                self.stats.events_dropped_stale += 1;
                return Ok(());
            }
            Some(last) => *last = ev.ts,
            None => {
                self.last_ts.insert(ev.train_id.clone(), ev.ts);
            }
        }
        self.stats.events_accepted += 1;
        self.current.clear();
        self.current.push(Record::Event(ev));
        self.propagate(0, sink)
    }

    /// Runs `self.current` through operators `from..` and into the sink.
    fn propagate(&mut self, from: usize, sink: &mut dyn Sink) -> Result<(), EngineError> {
        let Pipeline {
            operators,
            current,
            next,
            stats,
            ..
        } = self;
        for op in operators.iter_mut().skip(from) {
            if current.is_empty() {
                return Ok(());
            }
            next.clear();
            for rec in current.drain(..) {
                op.process(rec, next)
                    .map_err(|source| EngineError::OperatorFailure {
                        operator: op.name().to_owned(),
                        source,
                    })?;
            }
            std::mem::swap(current, next);
        }
        for rec in current.drain(..) {
            stats.records_out += 1;
            if matches!(rec, Record::Alert(_)) {
                stats.alerts_out += 1;
            }
            sink.accept(rec)?;
        }
        Ok(())
    }

    /// Flushes every operator in chain order and closes the sink.
    pub fn finish(mut self, sink: &mut dyn Sink) -> Result<PipelineStats, EngineError> {
        for i in 0..self.operators.len() {
            self.current.clear();
            let op = &mut self.operators[i];
            op.finish(&mut self.current)
                .map_err(|source| EngineError::OperatorFailure {
                    operator: op.name().to_owned(),
                    source,
                })?;
            self.propagate(i + 1, sink)?;
        }
        sink.finish()?;
        for op in &self.operators {
            for (name, value) in op.counters() {
                *self
                    .stats
                    .counters
                    .entry(format!("{}.{}", op.name(), name))
                    .or_default() += value;
            }
        }
        Ok(self.stats)
    }

    /// Drains `source` through the pipeline. Source errors are counted and
    /// skipped.
    pub fn run<I, E>(mut self, source: I, sink: &mut dyn Sink) -> Result<PipelineStats, EngineError>
    where
        I: IntoIterator<Item = Result<TelemetryEvent, E>>,
        E: Display,
    {
        let started = Instant::now();
        for item in source {
            match item {
                Ok(ev) => self.push(ev, sink)?,
                Err(_) => self.record_decode_error(),
            }
        }
        let mut stats = self.finish(sink)?;
        stats.wall_time_ms = started.elapsed().as_secs_f64() * 1000.0;
        Ok(stats)
    }
}

/// Runs `source` through `operators` into `sink`.
pub fn run_pipeline<I, E>(
    source: I,
    operators: Vec<Box<dyn Operator>>,
    sink: &mut dyn Sink,
) -> Result<PipelineStats, EngineError>
where
    I: IntoIterator<Item = Result<TelemetryEvent, E>>,
    E: Display,
{
    Pipeline::new(operators)?.run(source, sink)
}

/// A source produced on another thread and handed over through a bounded
/// FIFO. The producer blocks while the queue is full.
pub struct BoundedSource<T> {
    rx: IntoIter<T>,
    producer: Option<JoinHandle<()>>,
}

pub fn bounded_source<I>(source: I, capacity: usize) -> BoundedSource<I::Item>
where
    I: IntoIterator + Send + 'static,
    I::Item: Send + 'static,
{
    let (tx, rx) = sync_channel(capacity);
    let producer = thread::spawn(move || {
        for item in source {
            if tx.send(item).is_err() {
                break;
            }
        }
    });
    BoundedSource {
        rx: rx.into_iter(),
        producer: Some(producer),
    }
}

impl<T> Iterator for BoundedSource<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        let item = self.rx.next();
        if item.is_none() {
            if let Some(handle) = self.producer.take() {
                handle.join().expect("source producer panicked");
            }
        }
        item
    }
}
