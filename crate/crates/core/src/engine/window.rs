use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use super::WindowError;
use crate::temporal::Timestamp;

/// Events a single open window may buffer before the run fails.
pub const DEFAULT_WINDOW_CAP: usize = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSpec {
    Tumbling { size: Timestamp },
    Sliding { size: Timestamp, slide: Timestamp },
    /// The predicate is supplied per event when pushing.
    Threshold { min_count: usize },
}

impl WindowSpec {
    pub fn tumbling(size: Timestamp) -> Result<Self, WindowError> {
        if size <= 0 {
            return Err(WindowError::InvalidSpec("size must be positive"));
        }
        Ok(WindowSpec::Tumbling { size })
    }

    pub fn sliding(size: Timestamp, slide: Timestamp) -> Result<Self, WindowError> {
        if size <= 0 {
            return Err(WindowError::InvalidSpec("size must be positive"));
        }
        if slide <= 0 || slide > size {
            return Err(WindowError::InvalidSpec("slide must be in (0, size]"));
        }
        Ok(WindowSpec::Sliding { size, slide })
    }

    pub fn threshold(min_count: usize) -> Result<Self, WindowError> {
        if min_count == 0 {
            return Err(WindowError::InvalidSpec("min_count must be at least 1"));
        }
        Ok(WindowSpec::Threshold { min_count })
    }
}

/// Half-open window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowBounds {
    pub start: Timestamp,
    pub end: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult<K, V> {
    pub key: K,
    pub window_start: Timestamp,
    pub window_end: Timestamp,
    pub events: Vec<V>,
    pub count: usize,
}

impl<K, V> WindowResult<K, V> {
    fn new(key: K, window_start: Timestamp, window_end: Timestamp, events: Vec<V>) -> Self {
        let count = events.len();
        WindowResult {
            key,
            window_start,
            window_end,
            events,
            count,
        }
    }
}

pub fn assign_tumbling(ts: Timestamp, size: Timestamp) -> WindowBounds {
    debug_assert!(size > 0);
    let start = ts.div_euclid(size) * size;
    WindowBounds {
        start,
        end: start + size,
    }
}

/// Every window `[k·slide, k·slide + size)` with `k ≥ 0` that contains `ts`,
/// in start order.
pub fn assign_sliding(ts: Timestamp, size: Timestamp, slide: Timestamp) -> Vec<WindowBounds> {
    debug_assert!(0 < slide && slide <= size);
    let last = ts.div_euclid(slide);
    let first = ((ts - size).div_euclid(slide) + 1).max(0);
    (first..=last)
        .map(|k| WindowBounds {
            start: k * slide,
            end: k * slide + size,
        })
        .collect()
}

fn sorted_by_key<K: Ord, V>(mut out: Vec<WindowResult<K, V>>) -> Vec<WindowResult<K, V>> {
    // stable: windows of one key keep their start order
    out.sort_by(|a, b| a.key.cmp(&b.key));
    out
}

/// Keyed tumbling windows. A key's window closes when an event for that key
/// falls into a later window.
#[derive(Debug)]
pub struct TumblingWindows<K, V> {
    size: Timestamp,
    cap: usize,
    open: HashMap<K, (Timestamp, Vec<V>)>,
    late: u64,
}

impl<K: Hash + Eq + Ord + Clone, V> TumblingWindows<K, V> {
    pub fn new(size: Timestamp, cap: usize) -> Result<Self, WindowError> {
        WindowSpec::tumbling(size)?;
        Ok(TumblingWindows {
            size,
            cap,
            open: HashMap::new(),
            late: 0,
        })
    }

    /// Events that arrived for an already-closed window and were dropped.
    pub fn late(&self) -> u64 {
        self.late
    }

    pub fn insert(
        &mut self,
        key: &K,
        ts: Timestamp,
        value: V,
    ) -> Result<Option<WindowResult<K, V>>, WindowError> {
        let bounds = assign_tumbling(ts, self.size);
        let Some((start, events)) = self.open.get_mut(key) else {
            self.open.insert(key.clone(), (bounds.start, vec![value]));
            return Ok(None);
        };
        if bounds.start == *start {
            if events.len() >= self.cap {
                return Err(WindowError::CapacityExceeded { cap: self.cap });
            }
            events.push(value);
            return Ok(None);
        }
        if bounds.start < *start {
            self.late += 1;
            return Ok(None);
        }
        let closed_start = std::mem::replace(start, bounds.start);
        let closed = std::mem::replace(events, vec![value]);
        Ok(Some(WindowResult::new(
            key.clone(),
            closed_start,
            closed_start + self.size,
            closed,
        )))
    }

    pub fn flush(&mut self) -> Vec<WindowResult<K, V>> {
        let size = self.size;
        sorted_by_key(
            self.open
                .drain()
                .map(|(k, (start, events))| WindowResult::new(k, start, start + size, events))
                .collect(),
        )
    }
}

#[derive(Debug)]
struct SlidingState<V> {
    /// Open windows by ascending start.
    windows: VecDeque<(Timestamp, Vec<V>)>,
    /// Windows ending at or before this have been emitted.
    closed_until: Timestamp,
}

/// Keyed sliding windows. A key's windows close once an event for that key
/// reaches their end (see [`SlidingWindows::advance`]).
#[derive(Debug)]
pub struct SlidingWindows<K, V> {
    size: Timestamp,
    slide: Timestamp,
    cap: usize,
    open: HashMap<K, SlidingState<V>>,
    late: u64,
}

impl<K: Hash + Eq + Ord + Clone, V: Clone> SlidingWindows<K, V> {
    pub fn new(size: Timestamp, slide: Timestamp, cap: usize) -> Result<Self, WindowError> {
        WindowSpec::sliding(size, slide)?;
        Ok(SlidingWindows {
            size,
            slide,
            cap,
            open: HashMap::new(),
            late: 0,
        })
    }

    pub fn late(&self) -> u64 {
        self.late
    }

    /// Emits the key's windows that end at or before `ts`.
    pub fn advance(&mut self, key: &K, ts: Timestamp) -> Vec<WindowResult<K, V>> {
        let size = self.size;
        let Some(state) = self.open.get_mut(key) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        while state.windows.front().is_some_and(|(s, _)| s + size <= ts) {
            let (start, events) = state.windows.pop_front().expect("front exists");
            out.push(WindowResult::new(key.clone(), start, start + size, events));
        }
        state.closed_until = state.closed_until.max(ts);
        out
    }

    /// Advances the key to `ts`, then adds `value` to every window containing
    /// `ts`. Returns the windows closed by the advance.
    pub fn insert(
        &mut self,
        key: &K,
        ts: Timestamp,
        value: V,
    ) -> Result<Vec<WindowResult<K, V>>, WindowError> {
        let closed = self.advance(key, ts);
        let state = self
            .open
            .entry(key.clone())
            .or_insert_with(|| SlidingState {
                windows: VecDeque::new(),
                closed_until: Timestamp::MIN,
            });
        state.closed_until = state.closed_until.max(ts);
        let mut dropped = false;
        for w in assign_sliding(ts, self.size, self.slide) {
            if w.end <= state.closed_until {
                dropped = true;
                continue;
            }
            let at = state.windows.partition_point(|(s, _)| *s < w.start);
            if state.windows.get(at).is_none_or(|(s, _)| *s != w.start) {
                state.windows.insert(at, (w.start, Vec::new()));
            }
            let events = &mut state.windows[at].1;
            if events.len() >= self.cap {
                return Err(WindowError::CapacityExceeded { cap: self.cap });
            }
            events.push(value.clone());
        }
        if dropped {
            self.late += 1;
        }
        Ok(closed)
    }

    pub fn flush(&mut self) -> Vec<WindowResult<K, V>> {
        let size = self.size;
        let mut keys: Vec<K> = self.open.keys().cloned().collect();
        keys.sort();
        let mut out = Vec::new();
        for key in keys {
            let state = self.open.remove(&key).expect("key present");
            for (start, events) in state.windows {
                out.push(WindowResult::new(key.clone(), start, start + size, events));
            }
        }
        out
    }
}

#[derive(Debug)]
struct Run<V> {
    first: Timestamp,
    last: Timestamp,
    events: Vec<V>,
}

/// Keyed threshold windows: a window is a maximal contiguous run of events
/// satisfying the caller's predicate. It closes on the first non-satisfying
/// event (which is not part of it) and is emitted only if it holds at least
/// `min_count` events. Its bounds are the first and last member timestamps.
#[derive(Debug)]
pub struct ThresholdWindows<K, V> {
    min_count: usize,
    cap: usize,
    runs: HashMap<K, Run<V>>,
}

impl<K: Hash + Eq + Ord + Clone, V> ThresholdWindows<K, V> {
    pub fn new(min_count: usize, cap: usize) -> Result<Self, WindowError> {
        WindowSpec::threshold(min_count)?;
        Ok(ThresholdWindows {
            min_count,
            cap,
            runs: HashMap::new(),
        })
    }

    /// Length of the key's current run, if one is open.
    pub fn open_len(&self, key: &K) -> Option<usize> {
        self.runs.get(key).map(|r| r.events.len())
    }

    pub fn push(
        &mut self,
        key: &K,
        ts: Timestamp,
        satisfied: bool,
        value: V,
    ) -> Result<Option<WindowResult<K, V>>, WindowError> {
        if !satisfied {
            return Ok(self
                .runs
                .remove(key)
                .and_then(|run| self.emit(key.clone(), run)));
        }
        match self.runs.get_mut(key) {
            Some(run) => {
                if run.events.len() >= self.cap {
                    return Err(WindowError::CapacityExceeded { cap: self.cap });
                }
                run.last = ts;
                run.events.push(value);
            }
            None => {
                self.runs.insert(
                    key.clone(),
                    Run {
                        first: ts,
                        last: ts,
                        events: vec![value],
                    },
                );
            }
        }
        Ok(None)
    }

    fn emit(&self, key: K, run: Run<V>) -> Option<WindowResult<K, V>> {
        (run.events.len() >= self.min_count)
            .then(|| WindowResult::new(key, run.first, run.last, run.events))
    }

    pub fn flush(&mut self) -> Vec<WindowResult<K, V>> {
        let runs: Vec<_> = self.runs.drain().collect();
        sorted_by_key(
            runs.into_iter()
                .filter_map(|(k, run)| self.emit(k, run))
                .collect(),
        )
    }
}
