use std::sync::Arc;

use serde_json::Value;

use super::config::{Q1Config, Q2Config, Q3Config, Q4Config};
use super::geofence::{FenceKind, GeofenceRegistry};
use super::weather::{CachedWeather, Condition, WeatherProvider};
use super::{QueryError, Tracker};
use crate::engine::{Operator, OperatorError, Record, SlidingWindows, WindowResult};
use crate::geo::PlanarPoint;
use crate::model::{Alert, AlertType, Severity, TrainId};
use crate::temporal::Timestamp;

/// The lowest limit among speed zones covering `p` and the zone imposing
/// it, or `default` with no zone.
fn applicable_limit<'a>(
    reg: &'a GeofenceRegistry,
    p: &'a PlanarPoint,
    default: f64,
) -> (f64, Option<&'a str>) {
    let mut best = (default, None);
    for (_, zone) in reg.covering(FenceKind::SpeedZone, p) {
        let limit = zone.speed_limit().expect("speed zones carry a limit");
        if best.1.is_none() || limit < best.0 {
            best = (limit, Some(zone.id()));
        }
    }
    best
}

fn zone_value(zone: Option<&str>) -> Value {
    zone.map_or(Value::Null, Value::from)
}

/// Q1: speeding and equipment alerts, with speeding suppressed inside
/// maintenance areas. Equipment alerts always pass.
pub struct AlertFilter {
    registry: Arc<GeofenceRegistry>,
    cfg: Q1Config,
    tracker: Tracker,
    suppressed: u64,
}

impl AlertFilter {
    pub fn new(registry: Arc<GeofenceRegistry>, cfg: Q1Config) -> Self {
        let tracker = Tracker::new(*registry.projection());
        AlertFilter {
            registry,
            cfg,
            tracker,
            suppressed: 0,
        }
    }
}

impl Operator for AlertFilter {
    fn name(&self) -> &str {
        "q1_alert_filter"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        let ev = match rec {
            Record::Event(ev) => ev,
            other => {
                out.push(other);
                return Ok(());
            }
        };
        let (pos, speed) = self.tracker.observe(&ev)?;
        if let Some(observed) = speed {
            let (limit, zone) =
                applicable_limit(&self.registry, &pos, self.cfg.default_line_speed_mps);
            if observed > limit {
                let in_maintenance = self.cfg.suppress_in_maintenance
                    && self
                        .registry
                        .covering(FenceKind::Maintenance, &pos)
                        .next()
                        .is_some();
                if in_maintenance {
                    self.suppressed += 1;
                } else {
                    let alert = Alert::at(AlertType::Speeding, Severity::Warning, &ev)
                        .with("limit", limit)
                        .with("observed", observed)
                        .with("zone", zone_value(zone));
                    out.push(Record::Alert(alert));
                }
            }
        }
        if ev.brake_pressure < self.cfg.brake_floor_bar && !ev.emergency_brake {
            let alert = Alert::at(AlertType::Equipment, Severity::Critical, &ev)
                .with("brake_pressure", ev.brake_pressure)
                .with("floor", self.cfg.brake_floor_bar);
            out.push(Record::Alert(alert));
        }
        Ok(())
    }

    fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![("suppressed", self.suppressed)]
    }
}

#[derive(Debug, Clone)]
struct NoiseSample {
    ts: Timestamp,
    lon: f64,
    lat: f64,
    noise_db: f64,
}

/// Q2: sliding-window average noise per (train, noise zone) over the events
/// inside the zone. A train's windows advance on each of its events, inside
/// the zone or not.
pub struct NoiseByZone {
    tracker: Tracker,
    /// (zone id, limit, geometry index into the registry)
    zones: Vec<(String, f64, usize)>,
    registry: Arc<GeofenceRegistry>,
    windows: SlidingWindows<(TrainId, usize), NoiseSample>,
}

impl NoiseByZone {
    pub fn new(
        registry: Arc<GeofenceRegistry>,
        cfg: Q2Config,
        cap: usize,
    ) -> Result<Self, QueryError> {
        let zones = registry
            .of_kind(FenceKind::NoiseZone)
            .map(|(i, z)| (z.id().to_owned(), z.noise_limit().expect("noise limit"), i))
            .collect();
        Ok(NoiseByZone {
            tracker: Tracker::new(*registry.projection()),
            zones,
            registry,
            windows: SlidingWindows::new(cfg.window_ms, cfg.slide_ms, cap)?,
        })
    }

    fn judge(&self, w: WindowResult<(TrainId, usize), NoiseSample>, out: &mut Vec<Record>) {
        let Some(last) = w.events.last() else {
            return;
        };
        let (id, limit, _) = &self.zones[w.key.1];
        let avg = w.events.iter().map(|s| s.noise_db).sum::<f64>() / w.count as f64;
        if avg > *limit {
            let alert = Alert::new(
                AlertType::Noise,
                Severity::Warning,
                w.key.0.clone(),
                last.ts,
                last.lon,
                last.lat,
            )
            .with("zone", id.as_str())
            .with("avg_db", avg)
            .with("limit_db", *limit)
            .with("count", w.count)
            .with("window_start", w.window_start)
            .with("window_end", w.window_end);
            out.push(Record::Alert(alert));
        }
    }
}

impl Operator for NoiseByZone {
    fn name(&self) -> &str {
        "q2_noise_by_zone"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        let ev = match rec {
            Record::Event(ev) => ev,
            other => {
                out.push(other);
                return Ok(());
            }
        };
        let pos = self.tracker.position(&ev)?;
        for zi in 0..self.zones.len() {
            let key = (ev.train_id.clone(), zi);
            for w in self.windows.advance(&key, ev.ts) {
                self.judge(w, out);
            }
            if self.registry.fences()[self.zones[zi].2].contains(&pos) {
                let sample = NoiseSample {
                    ts: ev.ts,
                    lon: ev.lon,
                    lat: ev.lat,
                    noise_db: ev.noise_db,
                };
                self.windows.insert(&key, ev.ts, sample)?;
            }
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

/// Q3: speed advice against the tightest covering speed zone, or the line
/// speed outside all zones.
pub struct DynamicSpeed {
    registry: Arc<GeofenceRegistry>,
    cfg: Q3Config,
    tracker: Tracker,
}

impl DynamicSpeed {
    pub fn new(registry: Arc<GeofenceRegistry>, cfg: Q3Config) -> Self {
        let tracker = Tracker::new(*registry.projection());
        DynamicSpeed {
            registry,
            cfg,
            tracker,
        }
    }
}

impl Operator for DynamicSpeed {
    fn name(&self) -> &str {
        "q3_dynamic_speed"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        let ev = match rec {
            Record::Event(ev) => ev,
            other => {
                out.push(other);
                return Ok(());
            }
        };
        let (pos, speed) = self.tracker.observe(&ev)?;
        let Some(observed) = speed else {
            return Ok(());
        };
        let (limit, zone) = applicable_limit(&self.registry, &pos, self.cfg.default_line_speed_mps);
        if observed > limit {
            let alert = Alert::at(AlertType::SpeedSuggestion, Severity::Info, &ev)
                .with("limit", limit)
                .with("observed", observed)
                .with("zone", zone_value(zone));
            out.push(Record::Alert(alert));
        }
        Ok(())
    }
}

/// Q4: speed advice from the weather at the event's place and time.
pub struct WeatherSpeed {
    cfg: Q4Config,
    tracker: Tracker,
    weather: CachedWeather,
}

impl WeatherSpeed {
    pub fn new(
        registry: Arc<GeofenceRegistry>,
        cfg: Q4Config,
        provider: Arc<dyn WeatherProvider>,
    ) -> Self {
        WeatherSpeed {
            tracker: Tracker::new(*registry.projection()),
            weather: CachedWeather::new(provider, cfg.grid_deg, cfg.bucket_ms),
            cfg,
        }
    }

    fn max_speed(&self, c: Condition) -> Option<f64> {
        let table = &self.cfg.max_speed;
        match c {
            Condition::Clear => None,
            Condition::HeavyRain => Some(table.heavy_rain),
            Condition::Snow => Some(table.snow),
            Condition::Fog => Some(table.fog),
        }
    }
}

impl Operator for WeatherSpeed {
    fn name(&self) -> &str {
        "q4_weather_speed"
    }

    fn process(&mut self, rec: Record, out: &mut Vec<Record>) -> Result<(), OperatorError> {
        let ev = match rec {
            Record::Event(ev) => ev,
            other => {
                out.push(other);
                return Ok(());
            }
        };
        let (_, speed) = self.tracker.observe(&ev)?;
        let Some(observed) = speed else {
            return Ok(());
        };
        let report = self.weather.lookup(ev.lon, ev.lat, ev.ts);
        if let Some(suggested) = self.max_speed(report.condition()) {
            if suggested < observed {
                let alert = Alert::at(AlertType::WeatherSpeedSuggestion, Severity::Info, &ev)
                    .with("condition", report.condition().as_str())
                    .with("intensity", report.intensity())
                    .with("visibility_m", report.visibility_m())
                    .with("suggested", suggested)
                    .with("observed", observed);
                out.push(Record::Alert(alert));
            }
        }
        Ok(())
    }

    fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("provider_calls", self.weather.misses()),
            ("provider_fallbacks", self.weather.fallbacks()),
        ]
    }
}
