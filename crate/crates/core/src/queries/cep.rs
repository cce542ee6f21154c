use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde_json::Value;

use super::battery::BatteryCurve;
use super::config::{Q5Config, Q6Config, Q7Config, Q8Config, TrainLoad};
use super::geofence::{FenceKind, GeofenceRegistry};
use super::{QueryError, Tracker};
use crate::engine::{
    Operator, OperatorError, Record, SlidingWindows, ThresholdWindows, TumblingWindows,
    WindowResult,
};
use crate::geo::PlanarPoint;
use crate::model::{Alert, AlertType, Severity, TelemetryEvent, TrainId};
use crate::temporal::Timestamp;

/// A located reading kept in window state instead of the whole event.
#[derive(Debug, Clone)]
struct Fix {
    ts: Timestamp,
    lon: f64,
    lat: f64,
    value: f64,
}

impl Fix {
    fn of(ev: &TelemetryEvent, value: f64) -> Self {
        Fix {
            ts: ev.ts,
            lon: ev.lon,
            lat: ev.lat,
            value,
        }
    }

    fn alert(&self, kind: AlertType, severity: Severity, train: &TrainId) -> Alert {
        Alert::new(kind, severity, train.clone(), self.ts, self.lon, self.lat)
    }
}

fn pass_through(rec: Record, out: &mut Vec<Record>) -> Option<TelemetryEvent> {
    match rec {
        Record::Event(ev) => Some(ev),
        other => {
            out.push(other);
            None
        }
    }
}

#[derive(Debug)]
struct BatteryState {
    curve: String,
    cycle_start: Timestamp,
    /// Consecutive out-of-tolerance readings.
    run: usize,
    overheated: bool,
    discharged: bool,
}

/// Q5: battery voltage against the train's cycle curve, plus overheating and
/// deep discharge. Deviation fires once per run of `consecutive` readings;
/// overheat and discharge fire when the condition starts.
pub struct BatteryMonitor {
    registry: Arc<GeofenceRegistry>,
    cfg: Q5Config,
    curves: BTreeMap<String, BatteryCurve>,
    tracker: Tracker,
    trains: HashMap<TrainId, BatteryState>,
}

impl BatteryMonitor {
    pub fn new(
        registry: Arc<GeofenceRegistry>,
        cfg: Q5Config,
        curves: &BTreeMap<String, BatteryCurve>,
    ) -> Self {
        BatteryMonitor {
            tracker: Tracker::new(*registry.projection()),
            registry,
            curves: curves.clone(),
            cfg,
            trains: HashMap::new(),
        }
    }

    fn with_workshop(&self, alert: Alert, pos: &PlanarPoint) -> Alert {
        match self.registry.nearest(&[FenceKind::Workshop], pos) {
            Some((w, d)) => alert.with("workshop", w.id()).with("workshop_distance_m", d),
            None => alert
                .with("workshop", Value::Null)
                .with("workshop_distance_m", Value::Null),
        }
    }
}

impl Operator for BatteryMonitor {
    fn name(&self) -> &str {
        "q5_battery_monitor"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        let Some(ev) = pass_through(rec, out) else {
            return Ok(());
        };
        let (k, overheat_c, floor_v) = (
            self.cfg.consecutive,
            self.cfg.overheat_c,
            self.cfg.discharge_floor_v,
        );
        if !self.trains.contains_key(&ev.train_id) {
            let assignment = self
                .cfg
                .trains
                .get(ev.train_id.as_str())
                .filter(|a| self.curves.contains_key(&a.curve))
                .ok_or_else(|| QueryError::NoCurveConfigured(ev.train_id.clone()))?;
            let state = BatteryState {
                curve: assignment.curve.clone(),
                cycle_start: assignment.cycle_start_ms,
                run: 0,
                overheated: false,
                discharged: false,
            };
            self.trains.insert(ev.train_id.clone(), state);
        }
        let state = self.trains.get_mut(&ev.train_id).expect("inserted above");
        let curve = &self.curves[&state.curve];
        let elapsed = curve.elapsed(state.cycle_start, ev.ts);
        let expected = curve.expected_at(elapsed);
        let deviation = ev.battery_voltage - expected;
        let mut alerts = Vec::new();
        if deviation.abs() > curve.tolerance() {
            state.run += 1;
            if state.run == k {
                alerts.push(
                    Alert::at(AlertType::BatteryDeviation, Severity::Warning, &ev)
                        .with("curve", state.curve.as_str())
                        .with("elapsed_ms", elapsed)
                        .with("expected_v", expected)
                        .with("observed_v", ev.battery_voltage)
                        .with("tolerance_v", curve.tolerance())
                        .with("consecutive", k),
                );
            }
        } else {
            state.run = 0;
        }
        let hot = ev.battery_temp > overheat_c;
        let raise_hot = hot && !state.overheated;
        state.overheated = hot;
        let low = ev.battery_voltage < floor_v;
        let raise_low = low && !state.discharged;
        state.discharged = low;

        if raise_hot || raise_low {
            let pos = self.tracker.position(&ev)?;
            if raise_hot {
                let a = Alert::at(AlertType::BatteryOverheat, Severity::Critical, &ev)
                    .with("temp_c", ev.battery_temp)
                    .with("threshold_c", overheat_c);
                alerts.push(self.with_workshop(a, &pos));
            }
            if raise_low {
                let a = Alert::at(AlertType::ExcessiveDischarge, Severity::Critical, &ev)
                    .with("observed_v", ev.battery_voltage)
                    .with("floor_v", floor_v);
                alerts.push(self.with_workshop(a, &pos));
            }
        }
        out.extend(alerts.into_iter().map(Record::Alert));
        Ok(())
    }
}

/// Q6: passenger estimate from axle load; a tumbling window per train
/// reports when its peak estimate reaches seat capacity.
pub struct PassengerLoad {
    cfg: Q6Config,
    loads: HashMap<TrainId, TrainLoad>,
    windows: TumblingWindows<TrainId, Fix>,
}

/// `max(0, round((axle_load - tare) / kg_per_passenger))`.
pub fn estimate_passengers(axle_load: f64, load: &TrainLoad) -> u64 {
    ((axle_load - load.tare_kg) / load.kg_per_passenger).round().max(0.0) as u64
}

impl PassengerLoad {
    pub fn new(cfg: Q6Config, cap: usize) -> Result<Self, QueryError> {
        Ok(PassengerLoad {
            windows: TumblingWindows::new(cfg.window_ms, cap)?,
            cfg,
            loads: HashMap::new(),
        })
    }

    fn load(&mut self, train: &TrainId) -> Result<&TrainLoad, QueryError> {
        if !self.loads.contains_key(train) {
            let load = self
                .cfg
                .trains
                .get(train.as_str())
                .ok_or_else(|| QueryError::NoTrainConfig(train.clone()))?;
            self.loads.insert(train.clone(), load.clone());
        }
        Ok(&self.loads[train])
    }

    fn judge(&self, w: WindowResult<TrainId, Fix>, out: &mut Vec<Record>) {
        let capacity = self.loads[&w.key].seat_capacity;
        // first reading with the peak estimate
        let Some(peak) = w
            .events
            .iter()
            .reduce(|best, f| if f.value > best.value { f } else { best })
        else {
            return;
        };
        if peak.value >= capacity as f64 {
            let alert = peak
                .alert(AlertType::HeavyLoad, Severity::Info, &w.key)
                .with("estimate", peak.value as u64)
                .with("capacity", capacity)
                .with("window_start", w.window_start)
                .with("window_end", w.window_end);
            out.push(Record::Alert(alert));
        }
    }
}

impl Operator for PassengerLoad {
    fn name(&self) -> &str {
        "q6_passenger_load"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        let Some(ev) = pass_through(rec, out) else {
            return Ok(());
        };
        let estimate = estimate_passengers(ev.axle_load, self.load(&ev.train_id)?);
        if let Some(w) = self
            .windows
            .insert(&ev.train_id, ev.ts, Fix::of(&ev, estimate as f64))?
        {
            self.judge(w, out);
        }
        Ok(())
    }

    fn finish(&mut self, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        for w in self.windows.flush() {
            self.judge(w, out);
        }
        Ok(())
    }

    fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![("late", self.windows.late())]
    }
}

/// Q7: a run of near-zero speed lasting at least the minimum duration,
/// started farther than the buffer from every station and workshop.
pub struct UnscheduledStops {
    registry: Arc<GeofenceRegistry>,
    cfg: Q7Config,
    tracker: Tracker,
    runs: ThresholdWindows<TrainId, (Fix, PlanarPoint)>,
}

impl UnscheduledStops {
    pub fn new(
        registry: Arc<GeofenceRegistry>,
        cfg: Q7Config,
        cap: usize,
    ) -> Result<Self, QueryError> {
        Ok(UnscheduledStops {
            tracker: Tracker::new(*registry.projection()),
            registry,
            cfg,
            runs: ThresholdWindows::new(1, cap)?,
        })
    }

    fn judge(&self, w: WindowResult<TrainId, (Fix, PlanarPoint)>, out: &mut Vec<Record>) {
        let duration = w.window_end - w.window_start;
        if duration < self.cfg.min_duration_ms {
            return;
        }
        let (first, pos) = &w.events[0];
        let nearest = self
            .registry
            .nearest(&[FenceKind::Station, FenceKind::Workshop], pos);
        if nearest.is_some_and(|(_, d)| d <= self.cfg.buffer_m) {
            return;
        }
        let (zone, distance) = match nearest {
            Some((f, d)) => (Value::from(f.id()), Value::from(d)),
            None => (Value::Null, Value::Null),
        };
        let alert = first
            .alert(AlertType::UnscheduledStop, Severity::Warning, &w.key)
            .with("duration_ms", duration)
            .with("nearest_zone", zone)
            .with("distance_m", distance);
        out.push(Record::Alert(alert));
    }
}

impl Operator for UnscheduledStops {
    fn name(&self) -> &str {
        "q7_unscheduled_stops"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        let Some(ev) = pass_through(rec, out) else {
            return Ok(());
        };
        let (pos, speed) = self.tracker.observe(&ev)?;
        let stopped = speed.is_some_and(|v| v < self.cfg.speed_epsilon_mps);
        let item = (Fix::of(&ev, speed.unwrap_or(f64::NAN)), pos);
        if let Some(w) = self.runs.push(&ev.train_id, ev.ts, stopped, item)? {
            self.judge(w, out);
        }
        Ok(())
    }

    fn finish(&mut self, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        for w in self.runs.flush() {
            self.judge(w, out);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Occurrence {
    train: TrainId,
    fix: Fix,
}

/// Q8: clusters of emergency-brake applications per track segment (across
/// all trains), and sustained low brake pressure per train.
///
/// An application is a false-to-true transition of the emergency flag; a
/// train's first event counts as one when the flag is already set. A segment
/// alerts once per newest application: overlapping windows that end on the
/// same application do not repeat it.
pub struct BrakeMonitor {
    registry: Arc<GeofenceRegistry>,
    cfg: Q8Config,
    tracker: Tracker,
    flags: HashMap<TrainId, bool>,
    applications: SlidingWindows<usize, Occurrence>,
    last_alerted: HashMap<usize, Timestamp>,
    low: ThresholdWindows<TrainId, Fix>,
    occurrences: u64,
}

impl BrakeMonitor {
    pub fn new(
        registry: Arc<GeofenceRegistry>,
        cfg: Q8Config,
        cap: usize,
    ) -> Result<Self, QueryError> {
        Ok(BrakeMonitor {
            tracker: Tracker::new(*registry.projection()),
            registry,
            applications: SlidingWindows::new(cfg.window_ms, cfg.slide_ms, cap)?,
            low: ThresholdWindows::new(1, cap)?,
            cfg,
            flags: HashMap::new(),
            last_alerted: HashMap::new(),
            occurrences: 0,
        })
    }

    fn judge_segment(&mut self, w: WindowResult<usize, Occurrence>, out: &mut Vec<Record>) {
        if w.count < self.cfg.min_count {
            return;
        }
        let newest = w.events.last().expect("non-empty window");
        if self
            .last_alerted
            .get(&w.key)
            .is_some_and(|&t| newest.fix.ts <= t)
        {
            return;
        }
        self.last_alerted.insert(w.key, newest.fix.ts);
        let segment = self.registry.fences()[w.key].id();
        let alert = newest
            .fix
            .alert(AlertType::BrakePattern, Severity::Critical, &newest.train)
            .with("segment", segment)
            .with("count", w.count)
            .with("window_start", w.window_start)
            .with("window_end", w.window_end);
        out.push(Record::Alert(alert));
    }

    fn judge_pressure(&self, w: WindowResult<TrainId, Fix>, out: &mut Vec<Record>) {
        let duration = w.window_end - w.window_start;
        if duration < self.cfg.low_pressure_min_ms {
            return;
        }
        let min = w.events.iter().map(|f| f.value).fold(f64::INFINITY, f64::min);
        let last = w.events.last().expect("non-empty run");
        let alert = last
            .alert(AlertType::LowBrakePressure, Severity::Critical, &w.key)
            .with("min_pressure_bar", min)
            .with("threshold_bar", self.cfg.low_pressure_bar)
            .with("duration_ms", duration);
        out.push(Record::Alert(alert));
    }
}

impl Operator for BrakeMonitor {
    fn name(&self) -> &str {
        "q8_brake_monitor"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        let Some(ev) = pass_through(rec, out) else {
            return Ok(());
        };
        let prev = match self.flags.get_mut(&ev.train_id) {
            Some(flag) => std::mem::replace(flag, ev.emergency_brake),
            None => {
                self.flags.insert(ev.train_id.clone(), ev.emergency_brake);
                false
            }
        };
        if ev.emergency_brake && !prev {
            self.occurrences += 1;
            let pos = self.tracker.position(&ev)?;
            let segments: Vec<usize> = self
                .registry
                .covering(FenceKind::TrackSegment, &pos)
                .map(|(i, _)| i)
                .collect();
            for seg in segments {
                let occ = Occurrence {
                    train: ev.train_id.clone(),
                    fix: Fix::of(&ev, 1.0),
                };
                for w in self.applications.insert(&seg, ev.ts, occ)? {
                    self.judge_segment(w, out);
                }
            }
        }
        let low = ev.brake_pressure < self.cfg.low_pressure_bar;
        let fix = Fix::of(&ev, ev.brake_pressure);
        if let Some(w) = self.low.push(&ev.train_id, ev.ts, low, fix)? {
            self.judge_pressure(w, out);
        }
        Ok(())
    }

    fn finish(&mut self, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        for w in self.applications.flush() {
            self.judge_segment(w, out);
        }
        for w in self.low.flush() {
            self.judge_pressure(w, out);
        }
        Ok(())
    }

    fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("applications", self.occurrences),
            ("late", self.applications.late()),
        ]
    }
}
