use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{read_to_string, IngestError};
use crate::geo::{PlanarPoint, Projection};
use crate::model::{TelemetryEvent, TrainId};
use crate::queries::{BatteryCurve, CycleKind, ProjectionConfig};
use crate::temporal::Timestamp;

/// A route as `[lon, lat]` waypoints with one speed per leg. Trains dwell
/// for `dwell_ms` at the waypoints listed in `stops`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub waypoints: Vec<[f64; 2]>,
    pub leg_speeds: Vec<f64>,
    #[serde(default)]
    pub stops: Vec<usize>,
    #[serde(default)]
    pub dwell_ms: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBattery {
    /// Curve CSV; relative paths resolve against the scenario's directory.
    pub curve: PathBuf,
    #[serde(default)]
    pub cycle_start_ms: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTrain {
    pub id: String,
    pub start_ts: Timestamp,
    /// Without an end the train runs its route once. With one it shuttles
    /// back and forth until then.
    #[serde(default)]
    pub end_ts: Option<Timestamp>,
    /// Sensor noise seed; derived from the scenario seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    pub route: RouteSpec,
    #[serde(default)]
    pub battery: Option<SimBattery>,
    #[serde(default = "default_tare")]
    pub tare_kg: f64,
    #[serde(default)]
    pub passengers: u32,
}

fn default_tare() -> f64 {
    120_000.0
}

/// Standard deviations of the Gaussian sensor noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorNoise {
    pub battery_v: f64,
    pub battery_temp_c: f64,
    pub brake_bar: f64,
    pub noise_db: f64,
    pub axle_load_kg: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        SensorNoise {
            battery_v: 0.05,
            battery_temp_c: 0.2,
            brake_bar: 0.02,
            noise_db: 1.0,
            axle_load_kg: 150.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// Battery voltage at least `magnitude` volts below the curve.
    BatterySag,
    /// Emergency flag set, brake pressure lowered by `magnitude` bar.
    EmergencyBrake,
    /// The train halts where it is; its schedule resumes afterwards.
    UnscheduledStop,
    /// Noise raised by `magnitude` dBA.
    NoiseBurst,
}

/// A fault active during `[from_ts, to_ts)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fault {
    pub kind: FaultKind,
    pub train: String,
    pub from_ts: Timestamp,
    pub to_ts: Timestamp,
    #[serde(default)]
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub seed: u64,
    #[serde(default = "default_tick")]
    pub tick_ms: Timestamp,
    #[serde(default)]
    pub projection: ProjectionConfig,
    #[serde(default)]
    pub noise: SensorNoise,
    pub trains: Vec<SimTrain>,
    #[serde(default)]
    pub faults: Vec<Fault>,
    #[serde(skip)]
    base_dir: PathBuf,
    #[serde(skip)]
    curves: BTreeMap<PathBuf, BatteryCurve>,
}

fn default_tick() -> Timestamp {
    1_000
}

fn invalid(msg: impl Into<String>) -> IngestError {
    IngestError::InvalidScenario(msg.into())
}

/// One stretch of a route: moving from `from` to `to`, or dwelling when they
/// coincide. Times are ms of route time.
#[derive(Debug, Clone, Copy)]
struct Phase {
    t0: f64,
    t1: f64,
    from: PlanarPoint,
    to: PlanarPoint,
    speed: f64,
}

struct Itinerary {
    phases: Vec<Phase>,
    /// Route time of the first arrival at the last waypoint.
    arrival: f64,
    period: f64,
}

impl Itinerary {
    fn new(route: &RouteSpec, proj: &Projection) -> Result<Self, IngestError> {
        let pts = route
            .waypoints
            .iter()
            .map(|[lon, lat]| proj.project(*lon, *lat))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("waypoint: {e}")))?;
        let stops: HashSet<usize> = route.stops.iter().copied().collect();
        let n = pts.len();
        let dwell = route.dwell_ms as f64;
        let mut phases = Vec::with_capacity(4 * n);
        let mut t = 0.0;
        let mut push = |phases: &mut Vec<Phase>, from: PlanarPoint, to: PlanarPoint, speed: f64| {
            let dt = if speed > 0.0 {
                from.distance(&to) / speed * 1_000.0
            } else {
                dwell
            };
            if dt > 0.0 {
                phases.push(Phase {
                    t0: t,
                    t1: t + dt,
                    from,
                    to,
                    speed,
                });
                t += dt;
            }
        };
        for i in 0..n - 1 {
            push(&mut phases, pts[i], pts[i + 1], route.leg_speeds[i]);
            if i + 1 < n - 1 && stops.contains(&(i + 1)) {
                push(&mut phases, pts[i + 1], pts[i + 1], 0.0);
            }
        }
        let arrival = phases.last().map_or(0.0, |p: &Phase| p.t1);
        if stops.contains(&(n - 1)) {
            push(&mut phases, pts[n - 1], pts[n - 1], 0.0);
        }
        for i in (0..n - 1).rev() {
            push(&mut phases, pts[i + 1], pts[i], route.leg_speeds[i]);
            if stops.contains(&i) {
                push(&mut phases, pts[i], pts[i], 0.0);
            }
        }
        let period = phases.last().map_or(0.0, |p: &Phase| p.t1);
        Ok(Itinerary {
            phases,
            arrival,
            period,
        })
    }

    /// Position and speed at route time `tau`. A time on a phase boundary
    /// belongs to the phase that ends there.
    fn at(&self, tau: f64) -> (PlanarPoint, f64) {
        let wrapped = tau % self.period;
        let tau = if wrapped == 0.0 && tau > 0.0 {
            self.period
        } else {
            wrapped
        };
        let i = self
            .phases
            .partition_point(|p| p.t1 < tau)
            .min(self.phases.len() - 1);
        let ph = &self.phases[i];
        let frac = ((tau - ph.t0) / (ph.t1 - ph.t0)).clamp(0.0, 1.0);
        let pos = if frac == 1.0 {
            ph.to
        } else {
            ph.from.lerp(&ph.to, frac)
        };
        (pos, ph.speed)
    }
}

impl SimScenario {
    pub fn from_toml_str(text: &str) -> Result<Self, IngestError> {
        let scenario: SimScenario =
            toml::from_str(text).map_err(|e| IngestError::parse("scenario", e))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let mut scenario = SimScenario::from_toml_str(&read_to_string(path)?).map_err(|e| {
            match e {
                IngestError::Parse { message, .. } => {
                    IngestError::parse(path.display().to_string(), message)
                }
                other => other,
            }
        })?;
        scenario.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(scenario)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Supplies the curve for a battery `curve` path instead of reading it.
    pub fn with_curve(mut self, path: impl Into<PathBuf>, curve: BatteryCurve) -> Self {
        self.curves.insert(path.into(), curve);
        self
    }

    pub fn projection(&self) -> Result<Projection, IngestError> {
        Projection::new(self.projection.ref_lon, self.projection.ref_lat)
            .map_err(|e| invalid(format!("projection: {e}")))
    }

    /// Last timestamp of `train`, scheduled stops included.
    fn end_of(&self, train: &SimTrain, it: &Itinerary) -> Timestamp {
        if let Some(end) = train.end_ts {
            return end;
        }
        let stopped: Timestamp = self
            .faults
            .iter()
            .filter(|f| f.train == train.id && f.kind == FaultKind::UnscheduledStop)
            .map(|f| f.to_ts - f.from_ts)
            .sum();
        train.start_ts + (it.arrival - 1e-6).ceil() as Timestamp + stopped
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.tick_ms <= 0 {
            return Err(invalid("tick_ms must be positive"));
        }
        let proj = self.projection()?;
        let noise = &self.noise;
        for (name, sigma) in [
            ("noise.battery_v", noise.battery_v),
            ("noise.battery_temp_c", noise.battery_temp_c),
            ("noise.brake_bar", noise.brake_bar),
            ("noise.noise_db", noise.noise_db),
            ("noise.axle_load_kg", noise.axle_load_kg),
        ] {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(invalid(format!("{name} must be a non-negative number")));
            }
        }
        if self.trains.is_empty() {
            return Err(invalid("at least one train is required"));
        }
        let mut ids = HashSet::new();
        let mut spans = BTreeMap::new();
        for train in &self.trains {
            let id = &train.id;
            if id.is_empty() || !ids.insert(id.as_str()) {
                return Err(invalid(format!("train id `{id}` is empty or repeated")));
            }
            let r = &train.route;
            if r.waypoints.len() < 2 {
                return Err(invalid(format!("train {id}: a route needs at least 2 waypoints")));
            }
            if r.leg_speeds.len() != r.waypoints.len() - 1 {
                return Err(invalid(format!(
                    "train {id}: {} leg speeds for {} waypoints",
                    r.leg_speeds.len(),
                    r.waypoints.len()
                )));
            }
            if let Some(v) = r.leg_speeds.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(invalid(format!("train {id}: leg speed {v} must be positive")));
            }
            if let Some(s) = r.stops.iter().find(|s| **s >= r.waypoints.len()) {
                return Err(invalid(format!("train {id}: stop index {s} out of range")));
            }
            if r.dwell_ms < 0 {
                return Err(invalid(format!("train {id}: dwell_ms must be non-negative")));
            }
            if train.start_ts < 0 {
                return Err(invalid(format!("train {id}: start_ts must be non-negative")));
            }
            if !(train.tare_kg >= 0.0 && train.tare_kg.is_finite()) {
                return Err(invalid(format!("train {id}: tare_kg must be non-negative")));
            }
            let it = Itinerary::new(r, &proj)?;
            if it.arrival <= 0.0 {
                return Err(invalid(format!("train {id}: route has zero length")));
            }
            let end = self.end_of(train, &it);
            if end <= train.start_ts {
                return Err(invalid(format!("train {id}: end_ts must follow start_ts")));
            }
            spans.insert(id.as_str(), (train.start_ts, end));
        }
        let mut stops: BTreeMap<&str, Vec<(Timestamp, Timestamp)>> = BTreeMap::new();
        for (i, f) in self.faults.iter().enumerate() {
            let Some(&(start, end)) = spans.get(f.train.as_str()) else {
                return Err(invalid(format!("fault {i}: unknown train `{}`", f.train)));
            };
            if f.from_ts >= f.to_ts {
                return Err(invalid(format!("fault {i}: empty time window")));
            }
            if f.from_ts < start || f.to_ts > end {
                return Err(invalid(format!(
                    "fault {i}: window [{}, {}) lies outside the scenario span [{start}, {end}]",
                    f.from_ts, f.to_ts
                )));
            }
            if !(f.magnitude >= 0.0 && f.magnitude.is_finite()) {
                return Err(invalid(format!("fault {i}: magnitude must be non-negative")));
            }
            if f.kind == FaultKind::UnscheduledStop {
                stops.entry(&f.train).or_default().push((f.from_ts, f.to_ts));
            }
        }
        for (train, mut windows) in stops {
            windows.sort_unstable();
            if windows.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(invalid(format!("train {train}: overlapping unscheduled stops")));
            }
        }
        Ok(())
    }

    fn curve(&self, path: &Path) -> Result<BatteryCurve, IngestError> {
        if let Some(c) = self.curves.get(path) {
            return Ok(c.clone());
        }
        // generation ignores the tolerance; any positive value will do
        Ok(BatteryCurve::from_path(
            &self.base_dir.join(path),
            1.0,
            CycleKind::Discharge,
        )?)
    }
}

/// Per-train generator state.
struct TrainGen {
    id: TrainId,
    start: Timestamp,
    end: Timestamp,
    k: i64,
    rng: ChaCha8Rng,
    itinerary: Itinerary,
    /// Unscheduled stops, sorted.
    halts: Vec<(Timestamp, Timestamp)>,
    faults: Vec<Fault>,
    battery: Option<(Arc<BatteryCurve>, Timestamp)>,
    base_load: f64,
    /// Single traversals stop at the terminal instead of turning back.
    single: bool,
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).round() / s
}

impl TrainGen {
    /// Route time at `t`, frozen during unscheduled stops.
    fn route_time(&self, t: Timestamp) -> (f64, bool) {
        let mut lost = 0;
        for &(a, b) in &self.halts {
            if t < a {
                break;
            }
            if t < b {
                return ((a - self.start - lost) as f64, true);
            }
            lost += b - a;
        }
        ((t - self.start - lost) as f64, false)
    }

    fn active(&self, kind: FaultKind, t: Timestamp) -> Option<f64> {
        self.faults
            .iter()
            .filter(|f| f.kind == kind && f.from_ts <= t && t < f.to_ts)
            .map(|f| f.magnitude)
            .reduce(f64::max)
    }

    fn next_event(
        &mut self,
        tick: Timestamp,
        proj: &Projection,
        noise: &[Normal<f64>; 5],
    ) -> Option<TelemetryEvent> {
        let t = self.start + self.k * tick;
        if t > self.end {
            return None;
        }
        self.k += 1;
        let (mut tau, halted) = self.route_time(t);
        if self.single {
            tau = tau.min(self.itinerary.arrival);
        }
        let (pos, leg_speed) = self.itinerary.at(tau);
        let speed = if halted { 0.0 } else { leg_speed };
        let dwelling = !halted && leg_speed == 0.0;
        let (lon, lat) = proj.unproject(&pos);

        // fixed draw order keeps streams aligned whatever the faults
        let [n_batt, n_temp, n_brake, n_noise, n_load] =
            noise.each_ref().map(|d| d.sample(&mut self.rng));

        let baseline_v = match &self.battery {
            Some((curve, start)) => curve.expected_at(curve.elapsed(*start, t)),
            None => 26.0,
        };
        let battery_voltage = match self.active(FaultKind::BatterySag, t) {
            Some(m) => ((baseline_v - m - n_batt.abs()) * 1_000.0).floor() / 1_000.0,
            None => round_to(baseline_v + n_batt, 3),
        };
        let emergency = self.active(FaultKind::EmergencyBrake, t);
        let brake_pressure = match emergency {
            Some(m) => round_to((5.0 - m).max(0.0), 3),
            None => round_to((5.0 + n_brake).max(0.0), 3),
        };
        let burst = self.active(FaultKind::NoiseBurst, t).unwrap_or(0.0);
        Some(TelemetryEvent {
            train_id: self.id.clone(),
            ts: t,
            lon,
            lat,
            speed: Some(speed),
            battery_voltage: battery_voltage.max(0.0),
            battery_temp: round_to(28.0 + 0.15 * speed + n_temp, 2),
            brake_pressure,
            emergency_brake: emergency.is_some(),
            noise_db: round_to(60.0 + 0.4 * speed + burst + n_noise, 2),
            axle_load: round_to(self.base_load + n_load, 1).max(0.0),
            doors_open: dwelling,
        })
    }
}

/// Merged event stream of all trains, ordered by timestamp and then by the
/// train's position in the scenario.
pub struct Simulation {
    gens: Vec<TrainGen>,
    pending: Vec<Option<TelemetryEvent>>,
    heap: BinaryHeap<Reverse<(Timestamp, usize)>>,
    tick: Timestamp,
    proj: Projection,
    noise: [Normal<f64>; 5],
}

pub fn simulate(scenario: &SimScenario) -> Result<Simulation, IngestError> {
    scenario.validate()?;
    let proj = scenario.projection()?;
    let n = &scenario.noise;
    let normal = |sigma: f64| Normal::new(0.0, sigma).expect("validated sigma");
    let noise = [
        normal(n.battery_v),
        normal(n.battery_temp_c),
        normal(n.brake_bar),
        normal(n.noise_db),
        normal(n.axle_load_kg),
    ];
    let mut gens = Vec::with_capacity(scenario.trains.len());
    for (i, train) in scenario.trains.iter().enumerate() {
        let itinerary = Itinerary::new(&train.route, &proj)?;
        let end = scenario.end_of(train, &itinerary);
        let faults: Vec<Fault> = scenario
            .faults
            .iter()
            .filter(|f| f.train == train.id)
            .cloned()
            .collect();
        let mut halts: Vec<_> = faults
            .iter()
            .filter(|f| f.kind == FaultKind::UnscheduledStop)
            .map(|f| (f.from_ts, f.to_ts))
            .collect();
        halts.sort_unstable();
        let battery = match &train.battery {
            Some(b) => Some((Arc::new(scenario.curve(&b.curve)?), b.cycle_start_ms)),
            None => None,
        };
        let seed = train
            .seed
            .unwrap_or_else(|| scenario.seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        gens.push(TrainGen {
            id: TrainId::new(&train.id),
            start: train.start_ts,
            end,
            k: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            itinerary,
            halts,
            faults,
            battery,
            base_load: train.tare_kg + 80.0 * train.passengers as f64,
            single: train.end_ts.is_none(),
        });
    }
    let mut sim = Simulation {
        pending: (0..gens.len()).map(|_| None).collect(),
        gens,
        heap: BinaryHeap::new(),
        tick: scenario.tick_ms,
        proj,
        noise,
    };
    for i in 0..sim.gens.len() {
        sim.refill(i);
    }
    Ok(sim)
}

impl Simulation {
    fn refill(&mut self, i: usize) {
        if let Some(ev) = self.gens[i].next_event(self.tick, &self.proj, &self.noise) {
            self.heap.push(Reverse((ev.ts, i)));
            self.pending[i] = Some(ev);
        }
    }
}

impl Iterator for Simulation {
    type Item = TelemetryEvent;

    fn next(&mut self) -> Option<TelemetryEvent> {
        let Reverse((_, i)) = self.heap.pop()?;
        let ev = self.pending[i].take().expect("pending event for heap entry");
        self.refill(i);
        Some(ev)
    }
}
