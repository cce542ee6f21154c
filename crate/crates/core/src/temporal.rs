//! Temporal points: timestamped planar positions with linear interpolation
//! between consecutive instants, their spatiotemporal bounding boxes, and a
//! bounded per-train accumulator.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{PlanarPoint, Rect};

/// Milliseconds since the Unix epoch.
pub type Timestamp = i64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemporalError {
    #[error("a sequence needs at least one instant")]
    EmptyInput,
    #[error("timestamps must be strictly increasing (offending index {index})")]
    NonMonotonicTimestamps { index: usize },
    #[error("negative timestamp {0}")]
    NegativeTimestamp(Timestamp),
    #[error("a single-instant sequence must have inclusive bounds")]
    ExclusiveSingleton,
    #[error("stale timestamp {ts} (last accepted {last})")]
    StaleTimestamp { ts: Timestamp, last: Timestamp },
    #[error("speed needs at least two instants")]
    FewerThanTwoInstants,
    #[error("invalid box: {0}")]
    InvalidBox(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TInstant {
    ts: Timestamp,
    pos: PlanarPoint,
}

impl TInstant {
    pub fn new(ts: Timestamp, pos: PlanarPoint) -> Result<Self, TemporalError> {
        if ts < 0 {
            return Err(TemporalError::NegativeTimestamp(ts));
        }
        Ok(Self { ts, pos })
    }

    pub(crate) fn raw(ts: Timestamp, pos: PlanarPoint) -> Self {
        Self { ts, pos }
    }

    #[inline]
    pub fn ts(&self) -> Timestamp {
        self.ts
    }

    #[inline]
    pub fn pos(&self) -> PlanarPoint {
        self.pos
    }
}

/// A closed or half-open span of (possibly fractional) milliseconds.
///
/// Fractional endpoints arise from exact crossing times; a degenerate
/// interval (`start == end`) always has both bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeInterval {
    pub start: f64,
    pub end: f64,
    pub start_inc: bool,
    pub end_inc: bool,
}

impl TimeInterval {
    pub fn closed(start: f64, end: f64) -> Self {
        debug_assert!(start <= end);
        Self {
            start,
            end,
            start_inc: true,
            end_inc: true,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        (t > self.start || (self.start_inc && t == self.start))
            && (t < self.end || (self.end_inc && t == self.end))
    }
}

/// A moving point: strictly time-ordered instants, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TSequence {
    instants: Vec<TInstant>,
    lower_inc: bool,
    upper_inc: bool,
}

impl TSequence {
    /// Builds a sequence with both bounds inclusive.
    pub fn new(instants: Vec<TInstant>) -> Result<Self, TemporalError> {
        Self::with_bounds(instants, true, true)
    }

    pub fn with_bounds(
        instants: Vec<TInstant>,
        lower_inc: bool,
        upper_inc: bool,
    ) -> Result<Self, TemporalError> {
        if instants.is_empty() {
            return Err(TemporalError::EmptyInput);
        }
        if let Some(index) = instants
            .windows(2)
            .position(|w| w[1].ts <= w[0].ts)
            .map(|i| i + 1)
        {
            return Err(TemporalError::NonMonotonicTimestamps { index });
        }
        if instants.len() == 1 && !(lower_inc && upper_inc) {
            return Err(TemporalError::ExclusiveSingleton);
        }
        Ok(Self {
            instants,
            lower_inc,
            upper_inc,
        })
    }

    /// Caller guarantees non-empty, strictly increasing instants.
    pub(crate) fn from_sorted(instants: Vec<TInstant>) -> Self {
        debug_assert!(!instants.is_empty());
        debug_assert!(instants.windows(2).all(|w| w[0].ts < w[1].ts));
        Self {
            instants,
            lower_inc: true,
            upper_inc: true,
        }
    }

    pub fn instants(&self) -> &[TInstant] {
        &self.instants
    }

    pub fn lower_inc(&self) -> bool {
        self.lower_inc
    }

    pub fn upper_inc(&self) -> bool {
        self.upper_inc
    }

    pub fn start(&self) -> &TInstant {
        &self.instants[0]
    }

    pub fn end(&self) -> &TInstant {
        &self.instants[self.instants.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Consecutive instant pairs.
    pub fn segments(&self) -> impl Iterator<Item = (&TInstant, &TInstant)> + '_ {
        self.instants.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Position at `t`, or `None` outside the sequence's time span.
    pub fn value_at(&self, t: Timestamp) -> Option<PlanarPoint> {
        self.value_at_f64(t as f64)
    }

    /// Same as [`TSequence::value_at`] for a fractional timestamp.
    pub fn value_at_f64(&self, t: f64) -> Option<PlanarPoint> {
        let first = self.start().ts as f64;
        let last = self.end().ts as f64;
        if t < first || t > last {
            return None;
        }
        if (t == first && !self.lower_inc) || (t == last && !self.upper_inc) {
            return None;
        }
        // first instant with ts >= t
        let idx = self.instants.partition_point(|i| (i.ts as f64) < t);
        let hi = &self.instants[idx];
        if hi.ts as f64 == t {
            return Some(hi.pos);
        }
        let lo = &self.instants[idx - 1];
        let u = (t - lo.ts as f64) / (hi.ts - lo.ts) as f64;
        Some(lo.pos.lerp(&hi.pos, u))
    }

    /// Tight box over all instants. Linear interpolation stays within the
    /// per-axis hull of its endpoints, so the instants suffice.
    pub fn stbox(&self) -> STBox {
        let mut b = STBox {
            xmin: f64::INFINITY,
            xmax: f64::NEG_INFINITY,
            ymin: f64::INFINITY,
            ymax: f64::NEG_INFINITY,
            tmin: self.start().ts,
            tmax: self.end().ts,
        };
        for i in &self.instants {
            b.xmin = b.xmin.min(i.pos.x());
            b.xmax = b.xmax.max(i.pos.x());
            b.ymin = b.ymin.min(i.pos.y());
            b.ymax = b.ymax.max(i.pos.y());
        }
        b
    }

    /// Per-leg average speed in meters per second, in order.
    pub fn segment_speed(&self) -> Result<Vec<(TimeInterval, f64)>, TemporalError> {
        if self.instants.len() < 2 {
            return Err(TemporalError::FewerThanTwoInstants);
        }
        Ok(self
            .segments()
            .map(|(a, b)| {
                let dt_s = (b.ts - a.ts) as f64 / 1000.0;
                (
                    TimeInterval::closed(a.ts as f64, b.ts as f64),
                    a.pos.distance(&b.pos) / dt_s,
                )
            })
            .collect())
    }
}

/// Builds a sequence from instants; alias kept for symmetry with the other
/// free-standing operators.
pub fn make_sequence(instants: Vec<TInstant>) -> Result<TSequence, TemporalError> {
    TSequence::new(instants)
}

/// Spatiotemporal bounding box. All bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct STBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub tmin: Timestamp,
    pub tmax: Timestamp,
}

impl STBox {
    pub fn new(
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
        tmin: Timestamp,
        tmax: Timestamp,
    ) -> Result<Self, TemporalError> {
        if ![xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite()) {
            return Err(TemporalError::InvalidBox("non-finite bound"));
        }
        if xmin > xmax || ymin > ymax || tmin > tmax {
            return Err(TemporalError::InvalidBox("min exceeds max"));
        }
        Ok(Self {
            xmin,
            xmax,
            ymin,
            ymax,
            tmin,
            tmax,
        })
    }

    pub fn contains_point(&self, p: &PlanarPoint, t: f64) -> bool {
        p.x() >= self.xmin
            && p.x() <= self.xmax
            && p.y() >= self.ymin
            && p.y() <= self.ymax
            && t >= self.tmin as f64
            && t <= self.tmax as f64
    }

    pub fn contains_box(&self, other: &STBox) -> bool {
        self.xmin <= other.xmin
            && self.xmax >= other.xmax
            && self.ymin <= other.ymin
            && self.ymax >= other.ymax
            && self.tmin <= other.tmin
            && self.tmax >= other.tmax
    }

    pub fn intersects(&self, other: &STBox) -> bool {
        self.xmin <= other.xmax
            && other.xmin <= self.xmax
            && self.ymin <= other.ymax
            && other.ymin <= self.ymax
            && self.tmin <= other.tmax
            && other.tmin <= self.tmax
    }

    /// Spatial extent grown by `d` meters on every side.
    pub fn expand_space(&self, d: f64) -> STBox {
        STBox {
            xmin: self.xmin - d,
            xmax: self.xmax + d,
            ymin: self.ymin - d,
            ymax: self.ymax + d,
            ..*self
        }
    }

    pub fn spatial(&self) -> Rect {
        Rect {
            xmin: self.xmin,
            xmax: self.xmax,
            ymin: self.ymin,
            ymax: self.ymax,
        }
    }
}

pub fn stbox_of(seq: &TSequence) -> STBox {
    seq.stbox()
}

pub const DEFAULT_HORIZON_MS: Timestamp = 600_000;
pub const DEFAULT_MAX_INSTANTS: usize = 4_096;

/// Sliding trajectory of one train, bounded in time span and instant count.
#[derive(Debug, Clone)]
pub struct TrajectoryBuffer {
    train_id: String,
    instants: VecDeque<TInstant>,
    horizon: Timestamp,
    max_instants: usize,
    stale_rejections: u64,
}

impl TrajectoryBuffer {
    pub fn new(train_id: impl Into<String>, horizon: Timestamp, max_instants: usize) -> Self {
        assert!(horizon >= 0 && max_instants >= 1);
        Self {
            train_id: train_id.into(),
            instants: VecDeque::new(),
            horizon,
            max_instants,
            stale_rejections: 0,
        }
    }

    pub fn with_defaults(train_id: impl Into<String>) -> Self {
        Self::new(train_id, DEFAULT_HORIZON_MS, DEFAULT_MAX_INSTANTS)
    }

    pub fn train_id(&self) -> &str {
        &self.train_id
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn stale_rejections(&self) -> u64 {
        self.stale_rejections
    }

    pub fn last(&self) -> Option<&TInstant> {
        self.instants.back()
    }

    pub fn instants(&self) -> impl Iterator<Item = &TInstant> + '_ {
        self.instants.iter()
    }

    /// Appends `inst`, then evicts instants older than `inst.ts - horizon`
    /// and finally the oldest ones beyond `max_instants`.
    pub fn append(&mut self, inst: TInstant) -> Result<(), TemporalError> {
        if let Some(last) = self.instants.back() {
            if inst.ts <= last.ts {
                self.stale_rejections += 1;
                return Err(TemporalError::StaleTimestamp {
                    ts: inst.ts,
                    last: last.ts,
                });
            }
        }
        self.instants.push_back(inst);
        let cutoff = inst.ts - self.horizon;
        while self.instants.front().is_some_and(|i| i.ts < cutoff) {
            self.instants.pop_front();
        }
        while self.instants.len() > self.max_instants {
            self.instants.pop_front();
        }
        Ok(())
    }

    /// Snapshot of the buffered trajectory, if any.
    pub fn sequence(&self) -> Option<TSequence> {
        if self.instants.is_empty() {
            None
        } else {
            Some(TSequence::from_sorted(self.instants.iter().copied().collect()))
        }
    }

    /// Speed over the most recent leg, in meters per second.
    pub fn last_speed(&self) -> Option<f64> {
        let n = self.instants.len();
        if n < 2 {
            return None;
        }
        let (a, b) = (&self.instants[n - 2], &self.instants[n - 1]);
        Some(a.pos.distance(&b.pos) / ((b.ts - a.ts) as f64 / 1000.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(ts: Timestamp, x: f64, y: f64) -> TInstant {
        TInstant::new(ts, PlanarPoint::new(x, y).unwrap()).unwrap()
    }

    #[test]
    fn make_sequence_examples() {
        let single = make_sequence(vec![inst(0, 0.0, 0.0)]).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.lower_inc() && single.upper_inc());
        let two = make_sequence(vec![inst(0, 0.0, 0.0), inst(10, 10.0, 0.0)]).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(
            make_sequence(vec![inst(10, 0.0, 0.0), inst(5, 1.0, 1.0)]),
            Err(TemporalError::NonMonotonicTimestamps { index: 1 })
        );
        assert_eq!(make_sequence(vec![]), Err(TemporalError::EmptyInput));
        assert_eq!(
            TSequence::with_bounds(vec![inst(0, 0.0, 0.0)], true, false),
            Err(TemporalError::ExclusiveSingleton)
        );
        assert!(TInstant::new(-1, PlanarPoint::new(0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn value_at_examples() {
        let s = make_sequence(vec![inst(0, 0.0, 0.0), inst(10, 10.0, 0.0)]).unwrap();
        assert_eq!(s.value_at(5), Some(PlanarPoint::new(5.0, 0.0).unwrap()));
        assert_eq!(s.value_at(0), Some(PlanarPoint::new(0.0, 0.0).unwrap()));
        assert_eq!(s.value_at(11), None);
        assert_eq!(s.value_at(-1), None);
    }

    #[test]
    fn value_at_respects_exclusive_bounds() {
        let s = TSequence::with_bounds(vec![inst(0, 0.0, 0.0), inst(10, 10.0, 0.0)], false, false)
            .unwrap();
        assert_eq!(s.value_at(0), None);
        assert_eq!(s.value_at(10), None);
        assert!(s.value_at(1).is_some());
    }

    #[test]
    fn stbox_examples() {
        let b = make_sequence(vec![inst(7, 3.0, 4.0)]).unwrap().stbox();
        assert_eq!((b.xmin, b.xmax, b.ymin, b.ymax, b.tmin, b.tmax), (3.0, 3.0, 4.0, 4.0, 7, 7));
        let b = make_sequence(vec![inst(0, 0.0, 0.0), inst(10, 10.0, -2.0)])
            .unwrap()
            .stbox();
        assert_eq!((b.xmin, b.xmax, b.ymin, b.ymax, b.tmin, b.tmax), (0.0, 10.0, -2.0, 0.0, 0, 10));
        let b = make_sequence(vec![inst(0, 0.0, 0.0), inst(1, 5.0, 9.0), inst(2, 2.0, 1.0)])
            .unwrap()
            .stbox();
        assert_eq!((b.xmin, b.xmax, b.ymin, b.ymax, b.tmin, b.tmax), (0.0, 5.0, 0.0, 9.0, 0, 2));
    }

    #[test]
    fn append_examples() {
        let mut buf = TrajectoryBuffer::new("t", 10_000, 16);
        buf.append(inst(0, 0.0, 0.0)).unwrap();
        assert_eq!(buf.sequence().unwrap().len(), 1);

        buf.append(inst(5_000, 1.0, 0.0)).unwrap();
        buf.append(inst(12_000, 2.0, 0.0)).unwrap();
        let ts: Vec<_> = buf.instants().map(|i| i.ts()).collect();
        assert_eq!(ts, vec![5_000, 12_000]);

        let before: Vec<_> = buf.instants().copied().collect();
        assert!(matches!(
            buf.append(inst(12_000, 9.0, 9.0)),
            Err(TemporalError::StaleTimestamp { .. })
        ));
        assert_eq!(buf.instants().copied().collect::<Vec<_>>(), before);
        assert_eq!(buf.stale_rejections(), 1);
    }

    #[test]
    fn append_caps_instant_count() {
        let mut buf = TrajectoryBuffer::new("t", 1_000_000, 3);
        for k in 0..10 {
            buf.append(inst(k, k as f64, 0.0)).unwrap();
        }
        let ts: Vec<_> = buf.instants().map(|i| i.ts()).collect();
        assert_eq!(ts, vec![7, 8, 9]);
    }

    #[test]
    fn segment_speed_examples() {
        let s = make_sequence(vec![inst(0, 0.0, 0.0), inst(10_000, 100.0, 0.0)]).unwrap();
        assert_eq!(s.segment_speed().unwrap()[0].1, 10.0);
        let s = make_sequence(vec![inst(0, 3.0, 3.0), inst(1_000, 3.0, 3.0)]).unwrap();
        assert_eq!(s.segment_speed().unwrap()[0].1, 0.0);
        let s = make_sequence(vec![inst(0, 0.0, 0.0), inst(5_000, 30.0, 40.0)]).unwrap();
        let speeds = s.segment_speed().unwrap();
        assert_eq!(speeds[0].1, 10.0);
        assert_eq!(speeds[0].0, TimeInterval::closed(0.0, 5_000.0));
        let single = make_sequence(vec![inst(0, 0.0, 0.0)]).unwrap();
        assert_eq!(single.segment_speed(), Err(TemporalError::FewerThanTwoInstants));
    }

    fn arb_sequence() -> impl Strategy<Value = TSequence> {
        prop::collection::vec((1i64..5_000, -1e4..1e4f64, -1e4..1e4f64), 1..20).prop_map(|steps| {
            let mut t = 0;
            let instants = steps
                .into_iter()
                .map(|(dt, x, y)| {
                    t += dt;
                    inst(t, x, y)
                })
                .collect();
            TSequence::new(instants).unwrap()
        })
    }

    proptest! {
        #[test]
        fn value_at_stored_instant_is_exact(seq in arb_sequence()) {
            for i in seq.instants() {
                prop_assert_eq!(seq.value_at(i.ts()), Some(i.pos()));
            }
        }

        #[test]
        fn interpolation_is_collinear(seq in arb_sequence(), frac in 0.0..1.0f64) {
            for (a, b) in seq.segments() {
                let t = a.ts() + ((b.ts() - a.ts()) as f64 * frac) as i64;
                let p = seq.value_at(t).unwrap();
                let c = crate::geo::cross(&a.pos(), &b.pos(), &p);
                let scale = a.pos().distance(&b.pos()).powi(2).max(1.0);
                prop_assert!(c.abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn stbox_contains_interpolated_samples(seq in arb_sequence(), fracs in prop::collection::vec(0.0..=1.0f64, 50)) {
            let b = seq.stbox();
            let (t0, t1) = (seq.start().ts(), seq.end().ts());
            for f in fracs {
                let t = t0 + ((t1 - t0) as f64 * f).round() as i64;
                let p = seq.value_at(t).unwrap();
                prop_assert!(p.x() >= b.xmin - 1e-9 && p.x() <= b.xmax + 1e-9);
                prop_assert!(p.y() >= b.ymin - 1e-9 && p.y() <= b.ymax + 1e-9);
                prop_assert!(t >= b.tmin && t <= b.tmax);
            }
        }

        #[test]
        fn buffer_bounds_hold(
            steps in prop::collection::vec(-50i64..2_000, 1..300),
            horizon in 0i64..20_000,
            cap in 1usize..40,
        ) {
            let mut buf = TrajectoryBuffer::new("p", horizon, cap);
            let mut t = 0i64;
            for dt in steps {
                t = (t + dt).max(0);
                let _ = buf.append(inst(t, 0.0, 0.0));
                prop_assert!(buf.len() <= cap);
                let first = buf.instants().next().unwrap().ts();
                prop_assert!(buf.last().unwrap().ts() - first <= horizon);
            }
        }

        #[test]
        fn segment_speed_is_translation_invariant(seq in arb_sequence(), shift in 0i64..1_000_000) {
            prop_assume!(seq.len() >= 2);
            let moved = TSequence::new(
                seq.instants().iter().map(|i| inst(i.ts() + shift, i.pos().x(), i.pos().y())).collect(),
            ).unwrap();
            let a = seq.segment_speed().unwrap();
            let b = moved.segment_speed().unwrap();
            for ((_, va), (_, vb)) in a.iter().zip(&b) {
                prop_assert!(*va >= 0.0);
                prop_assert_eq!(va, vb);
            }
        }
    }
}
