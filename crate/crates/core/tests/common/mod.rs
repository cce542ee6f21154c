//! Random instance generators and brute-force oracles shared by the property
//! tests and the acceptance report.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use railstream::engine::{Pipeline, WindowResult};
use railstream::ingest::{load_geofences, replay_csv, FixtureWeather, JsonlSink};
use railstream::queries::{build_query, QueryConfig, QueryContext, QueryId};
use railstream::geo::{
    dist_point_geometry, dist_point_segment, Circle, Geometry, PlanarPoint, Polygon, Segment,
};
use railstream::temporal::{STBox, TInstant, TSequence, TimeInterval, Timestamp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pt(x: f64, y: f64) -> PlanarPoint {
    PlanarPoint::new(x, y).unwrap()
}

/// Top speed of generated trajectories, m/s. Train-like, so that 1 ms
/// sampling resolves distances to a few centimetres.
pub const MAX_SPEED: f64 = 50.0;

/// A random walk of 2 to 6 instants near the origin.
pub fn random_sequence(rng: &mut ChaCha8Rng) -> TSequence {
    let n = rng.random_range(2..=6);
    let mut t: Timestamp = rng.random_range(0..5_000);
    let mut p = pt(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0));
    let mut instants = vec![TInstant::new(t, p).unwrap()];
    for _ in 1..n {
        let dt = rng.random_range(200..3_000);
        let heading = rng.random_range(0.0..TAU);
        let dist = rng.random_range(0.0..MAX_SPEED) * dt as f64 / 1_000.0;
        t += dt;
        p = pt(p.x() + dist * heading.cos(), p.y() + dist * heading.sin());
        instants.push(TInstant::new(t, p).unwrap());
    }
    TSequence::new(instants).unwrap()
}

/// Star-shaped polygon around a random centre, sometimes with a hole.
pub fn random_polygon(rng: &mut ChaCha8Rng) -> Polygon {
    let (cx, cy) = (rng.random_range(-150.0..150.0), rng.random_range(-150.0..150.0));
    let k = rng.random_range(4..10);
    let mut rmin = f64::INFINITY;
    let ring: Vec<_> = (0..k)
        .map(|i| {
            // angular gaps stay below π, so the centre sees every edge
            let a = (i as f64 + rng.random_range(0.0..0.8)) * TAU / k as f64;
            let r = rng.random_range(40.0..250.0);
            rmin = rmin.min(r);
            pt(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    let holes = if rng.random_bool(0.3) {
        let r = rmin * 0.12;
        vec![(0..5)
            .map(|i| {
                let a = i as f64 * TAU / 5.0;
                pt(cx + r * a.cos(), cy + r * a.sin())
            })
            .collect()]
    } else {
        Vec::new()
    };
    Polygon::new(ring, holes).unwrap()
}

pub fn random_circle(rng: &mut ChaCha8Rng) -> Circle {
    Circle::new(
        pt(rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0)),
        rng.random_range(20.0..200.0),
    )
    .unwrap()
}

pub fn random_region(rng: &mut ChaCha8Rng) -> Geometry {
    if rng.random_bool(0.6) {
        random_polygon(rng).into()
    } else {
        random_circle(rng).into()
    }
}

pub fn random_geometry(rng: &mut ChaCha8Rng) -> Geometry {
    if rng.random_bool(0.2) {
        pt(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)).into()
    } else {
        random_region(rng)
    }
}

/// A box overlapping the sequence's time span.
pub fn random_box(rng: &mut ChaCha8Rng, seq: &TSequence) -> STBox {
    let (t0, t1) = (seq.start().ts(), seq.end().ts());
    let mut ts = [rng.random_range(t0 - 500..=t1), rng.random_range(t0..=t1 + 500)];
    ts.sort_unstable();
    let mut xs = [rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0)];
    let mut ys = [rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0)];
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    STBox::new(xs[0], xs[1], ys[0], ys[1], ts[0], ts[1]).unwrap()
}

/// Distance from `p` to the boundary of `g`.
pub fn boundary_distance(g: &Geometry, p: &PlanarPoint) -> f64 {
    match g {
        Geometry::Point(q) => p.distance(q),
        Geometry::Circle(c) => (p.distance(&c.center()) - c.radius()).abs(),
        Geometry::Polygon(poly) => poly
            .edges()
            .map(|e| dist_point_segment(p, &e))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Every millisecond of the sequence's span with its position.
pub fn ms_samples(seq: &TSequence) -> impl Iterator<Item = (Timestamp, PlanarPoint)> + '_ {
    (seq.start().ts()..=seq.end().ts()).map(|t| (t, seq.value_at(t).unwrap()))
}

fn top_speed(seq: &TSequence) -> f64 {
    seq.segments()
        .map(|(a, b)| a.pos().distance(&b.pos()) / (b.ts() - a.ts()) as f64 * 1_000.0)
        .fold(0.0, f64::max)
}

/// Outcome of comparing an operator with its oracle on one instance.
#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub instances: u64,
    pub agree: u64,
    pub skipped: u64,
    pub checked_samples: u64,
}

impl Tally {
    pub fn add(&mut self, other: Tally) {
        self.instances += other.instances;
        self.agree += other.agree;
        self.skipped += other.skipped;
        self.checked_samples += other.checked_samples;
    }

    pub fn all_agree(&self) -> bool {
        self.agree + self.skipped == self.instances
    }
}

/// `edwithin` against the minimum distance over 1 ms samples. Instances
/// whose sampled minimum lies within sampling resolution of `d` are skipped.
pub fn check_edwithin(seq: &TSequence, g: &Geometry, d: f64) -> Result<Tally, String> {
    let got = railstream::st_ops::edwithin(seq, g, d).map_err(|e| e.to_string())?;
    let sampled = ms_samples(seq)
        .map(|(_, p)| dist_point_geometry(&p, g))
        .fold(f64::INFINITY, f64::min);
    // the true minimum lies within half a millisecond of travel of a sample
    let slack = top_speed(seq) * 0.5e-3 + 1e-6;
    let mut tally = Tally {
        instances: 1,
        ..Tally::default()
    };
    let expected = if sampled <= d - 1e-6 {
        true
    } else if sampled - slack > d {
        false
    } else {
        tally.skipped = 1;
        return Ok(tally);
    };
    if got != expected {
        return Err(format!(
            "edwithin={got}, sampled minimum {sampled} vs d={d} for {seq:?} / {g:?}"
        ));
    }
    tally.agree = 1;
    Ok(tally)
}

/// `tpoint_at_stbox` against per-millisecond box membership. Samples within
/// 1e-6 m of a box face, or within 1 ms of a fragment end (crossing times
/// are rounded to whole milliseconds), are not judged.
pub fn check_at_stbox(seq: &TSequence, bx: &STBox) -> Result<Tally, String> {
    let frags = railstream::st_ops::tpoint_at_stbox(seq, bx);
    for w in frags.windows(2) {
        if w[0].end().ts() >= w[1].start().ts() {
            return Err(format!("fragments overlap or touch: {frags:?}"));
        }
    }
    let ends: Vec<Timestamp> = frags
        .iter()
        .flat_map(|f| [f.start().ts(), f.end().ts()])
        .collect();
    let slack = top_speed(seq) * 1e-3 + 1e-6;
    let mut checked = 0;
    for (t, p) in ms_samples(seq) {
        if ends.iter().any(|e| (t - e).abs() <= 1) {
            continue;
        }
        let face = [
            p.x() - bx.xmin,
            bx.xmax - p.x(),
            p.y() - bx.ymin,
            bx.ymax - p.y(),
        ]
        .into_iter()
        .map(f64::abs)
        .fold(f64::INFINITY, f64::min);
        if face < 1e-6 || t == bx.tmin || t == bx.tmax {
            continue;
        }
        let expected = bx.contains_point(&p, t as f64);
        let hit = frags
            .iter()
            .find(|f| f.start().ts() <= t && t <= f.end().ts());
        if hit.is_some() != expected {
            return Err(format!(
                "t={t}: inside={expected} but fragment={hit:?}; box {bx:?}, seq {seq:?}"
            ));
        }
        if let Some(f) = hit {
            let q = f.value_at(t).unwrap();
            if q.distance(&p) > slack {
                return Err(format!("t={t}: fragment at {q:?}, trajectory at {p:?}"));
            }
        }
        checked += 1;
    }
    Ok(Tally {
        instances: 1,
        agree: 1,
        skipped: 0,
        checked_samples: checked,
    })
}

/// `at_geometry_intervals` against per-millisecond membership, skipping
/// samples within 1e-6 m of the region boundary.
pub fn check_intervals(seq: &TSequence, g: &Geometry) -> Result<Tally, String> {
    let intervals =
        railstream::st_ops::at_geometry_intervals(seq, g).map_err(|e| e.to_string())?;
    for w in intervals.windows(2) {
        if !(w[0].end < w[1].start) {
            return Err(format!("intervals not disjoint and ordered: {intervals:?}"));
        }
    }
    let mut checked = 0;
    for (t, p) in ms_samples(seq) {
        if boundary_distance(g, &p) < 1e-6 {
            continue;
        }
        let expected = g.contains(&p);
        let got = intervals.iter().any(|i: &TimeInterval| i.contains(t as f64));
        if got != expected {
            return Err(format!(
                "t={t}: inside={expected}, intervals {intervals:?}; {g:?}; {seq:?}"
            ));
        }
        checked += 1;
    }
    Ok(Tally {
        instances: 1,
        agree: 1,
        skipped: 0,
        checked_samples: checked,
    })
}

/// Minimum distance by 0.1 ms sampling, refined by ternary search around the
/// best sample (the distance from a linearly moving point to a segment is
/// convex in time).
pub fn sampled_min_dist(from: PlanarPoint, to: PlanarPoint, t0: f64, t1: f64, seg: &Segment) -> f64 {
    let at = |t: f64| dist_point_segment(&lerp(&from, &to, (t - t0) / (t1 - t0)), seg);
    let step = 0.1;
    let n = ((t1 - t0) / step).ceil() as u64;
    let (mut best_t, mut best) = (t0, at(t0));
    for i in 1..=n {
        let t = (t0 + i as f64 * step).min(t1);
        let d = at(t);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = ((best_t - step).max(t0), (best_t + step).min(t1));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if at(m1) <= at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(at(0.5 * (lo + hi)))
}

pub fn lerp(a: &PlanarPoint, b: &PlanarPoint, u: f64) -> PlanarPoint {
    pt(a.x() + u * (b.x() - a.x()), a.y() + u * (b.y() - a.y()))
}

/// One kernel instance: a point moving for 1 to 5 s against a segment that
/// is degenerate one time in ten.
pub fn random_kernel_instance(
    rng: &mut ChaCha8Rng,
) -> (PlanarPoint, PlanarPoint, f64, f64, Segment) {
    let from = pt(rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0));
    let t0 = rng.random_range(0.0..10_000.0);
    let t1 = t0 + rng.random_range(1_000.0..5_000.0);
    let heading = rng.random_range(0.0..TAU);
    let dist = rng.random_range(0.0..MAX_SPEED) * (t1 - t0) / 1_000.0;
    let to = pt(from.x() + dist * heading.cos(), from.y() + dist * heading.sin());
    let a = pt(rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0));
    let b = if rng.random_bool(0.1) {
        a
    } else {
        pt(rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0))
    };
    (from, to, t0, t1, Segment::new(a, b))
}

pub fn check_kernel(from: PlanarPoint, to: PlanarPoint, t0: f64, t1: f64, seg: &Segment) -> Result<f64, String> {
    let (d, t) = railstream::st_ops::min_dist_moving_point_segment(from, to, t0, t1, seg)
        .map_err(|e| e.to_string())?;
    let oracle = sampled_min_dist(from, to, t0, t1, seg);
    let err = (d - oracle).abs();
    if err > 1e-6 {
        return Err(format!("kernel {d} vs oracle {oracle}"));
    }
    if !(t0..=t1).contains(&t) {
        return Err(format!("argmin {t} outside [{t0}, {t1}]"));
    }
    let at_t = dist_point_segment(&lerp(&from, &to, (t - t0) / (t1 - t0)), seg);
    if (at_t - d).abs() > 1e-6 {
        return Err(format!("distance at reported time {at_t} differs from {d}"));
    }
    Ok(err)
}

// ---- windows ----

/// A random keyed stream in timestamp order: `(key, ts, flag)`.
pub fn random_stream(rng: &mut ChaCha8Rng, n: usize, keys: u32) -> Vec<(u32, Timestamp, bool)> {
    let mut ts: Timestamp = rng.random_range(0..5_000);
    (0..n)
        .map(|_| {
            ts += rng.random_range(0..1_500);
            (rng.random_range(0..keys), ts, rng.random_bool(0.7))
        })
        .collect()
}

pub type Groups = BTreeMap<(u32, Timestamp, Timestamp), Vec<usize>>;

pub fn group_results(results: impl IntoIterator<Item = WindowResult<u32, usize>>) -> Result<Groups, String> {
    let mut out = Groups::new();
    for r in results {
        if r.count != r.events.len() {
            return Err(format!("count {} for {} events", r.count, r.events.len()));
        }
        if out.insert((r.key, r.window_start, r.window_end), r.events).is_some() {
            return Err(format!("window ({}, {}) emitted twice", r.key, r.window_start));
        }
    }
    Ok(out)
}

/// Tumbling assignment by scanning window starts.
pub fn tumbling_oracle(stream: &[(u32, Timestamp, bool)], size: Timestamp) -> Groups {
    let mut out = Groups::new();
    for (i, &(k, ts, _)) in stream.iter().enumerate() {
        let mut start = 0;
        while start + size <= ts {
            start += size;
        }
        out.entry((k, start, start + size)).or_default().push(i);
    }
    out
}

/// Sliding assignment by testing every candidate window near `ts`.
pub fn sliding_oracle(stream: &[(u32, Timestamp, bool)], size: Timestamp, slide: Timestamp) -> Groups {
    let mut out = Groups::new();
    for (i, &(k, ts, _)) in stream.iter().enumerate() {
        let top = ts / slide + 1;
        let bottom = (top - size / slide - 2).max(0);
        for j in bottom..=top {
            let (s, e) = (j * slide, j * slide + size);
            if s <= ts && ts < e {
                out.entry((k, s, e)).or_default().push(i);
            }
        }
    }
    out
}

/// Maximal per-key runs of flagged events holding at least `min_count`.
pub fn threshold_oracle(stream: &[(u32, Timestamp, bool)], min_count: usize) -> Groups {
    let mut runs: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut out = Groups::new();
    let close = |out: &mut Groups, k: u32, run: Vec<usize>| {
        if run.len() >= min_count {
            let (first, last) = (stream[run[0]].1, stream[*run.last().unwrap()].1);
            out.insert((k, first, last), run);
        }
    };
    for (i, &(k, _, flag)) in stream.iter().enumerate() {
        if flag {
            runs.entry(k).or_default().push(i);
        } else if let Some(run) = runs.remove(&k) {
            close(&mut out, k, run);
        }
    }
    for (k, run) in runs {
        close(&mut out, k, run);
    }
    out
}

// ---- geometry ----

/// Winding number of the closed ring around `p`; nonzero means inside.
pub fn winding_number(ring: &[PlanarPoint], p: &PlanarPoint) -> i32 {
    let mut wn = 0;
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let cross = (b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y());
        if a.y() <= p.y() {
            if b.y() > p.y() && cross > 0.0 {
                wn += 1;
            }
        } else if b.y() <= p.y() && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Convex polygon from sorted random angles on a circle.
pub fn random_convex(rng: &mut ChaCha8Rng) -> Vec<PlanarPoint> {
    let (cx, cy, r) = (
        rng.random_range(-100.0..100.0),
        rng.random_range(-100.0..100.0),
        rng.random_range(10.0..200.0),
    );
    let mut angles: Vec<f64> = (0..rng.random_range(3..12))
        .map(|_| rng.random_range(0.0..TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    angles
        .into_iter()
        .map(|a| pt(cx + r * a.cos(), cy + r * a.sin()))
        .collect()
}

// ---- bundled fixtures ----

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Alert JSONL produced by `id` over the bundled telemetry.
pub fn run_fixture_query(id: QueryId) -> Vec<u8> {
    let config = QueryConfig::load(Some(&fixture("config.toml")), &[]).unwrap();
    let registry = load_geofences(&fixture("fences.geojson"), config.projection().unwrap()).unwrap();
    let ctx = QueryContext::from_config(Arc::new(registry), config)
        .unwrap()
        .with_weather(Arc::new(FixtureWeather::from_path(&fixture("weather.csv")).unwrap()));
    let mut sink = JsonlSink::new(Vec::new());
    let stats = Pipeline::new(build_query(id, &ctx).unwrap())
        .unwrap()
        .run(replay_csv(&fixture("telemetry.csv")).unwrap(), &mut sink)
        .unwrap();
    assert_eq!(stats.decode_errors, 0);
    sink.into_inner()
}

pub fn alert_types(jsonl: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(jsonl)
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["type"].as_str().unwrap().to_owned()
        })
        .collect()
}
