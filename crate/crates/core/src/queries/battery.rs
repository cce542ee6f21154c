use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::temporal::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Charge,
    Discharge,
}

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("a battery curve needs at least two points")]
    TooFewPoints,
    #[error("elapsed times must be strictly increasing from 0 (row {row})")]
    NotIncreasing { row: usize },
    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("cannot read battery curve {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed battery curve: {0}")]
    Csv(#[from] csv::Error),
}

/// Expected pack voltage over one charge or discharge cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryCurve {
    points: Vec<(Timestamp, f64)>,
    tolerance: f64,
    kind: CycleKind,
}

#[derive(Deserialize)]
struct CurveRow {
    elapsed_ms: Timestamp,
    expected_voltage: f64,
}

impl BatteryCurve {
    /// `points` are `(elapsed ms, volts)`, starting at elapsed 0.
    pub fn new(
        points: Vec<(Timestamp, f64)>,
        tolerance: f64,
        kind: CycleKind,
    ) -> Result<Self, CurveError> {
        if points.len() < 2 {
            return Err(CurveError::TooFewPoints);
        }
        if points[0].0 != 0 {
            return Err(CurveError::NotIncreasing { row: 0 });
        }
        for (row, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(CurveError::NotIncreasing { row: row + 1 });
            }
        }
        if let Some(row) = points.iter().position(|(_, v)| !v.is_finite()) {
            return Err(CurveError::NonFinite { row });
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(CurveError::InvalidTolerance(tolerance));
        }
        Ok(BatteryCurve {
            points,
            tolerance,
            kind,
        })
    }

    /// Reads a CSV with header `elapsed_ms,expected_voltage`.
    pub fn from_reader(
        reader: impl Read,
        tolerance: f64,
        kind: CycleKind,
    ) -> Result<Self, CurveError> {
        let mut points = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize::<CurveRow>() {
            let row = row?;
            points.push((row.elapsed_ms, row.expected_voltage));
        }
        BatteryCurve::new(points, tolerance, kind)
    }

    pub fn from_path(path: &Path, tolerance: f64, kind: CycleKind) -> Result<Self, CurveError> {
        let file = std::fs::File::open(path).map_err(|source| CurveError::Io {
            path: path.display().to_string(),
            source,
        })?;
        BatteryCurve::from_reader(std::io::BufReader::new(file), tolerance, kind)
    }

    pub fn points(&self) -> &[(Timestamp, f64)] {
        &self.points
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn kind(&self) -> CycleKind {
        self.kind
    }

    /// Length of one cycle in ms.
    pub fn span(&self) -> Timestamp {
        self.points[self.points.len() - 1].0
    }

    /// Position within the repeating cycle that started at `cycle_start`.
    pub fn elapsed(&self, cycle_start: Timestamp, ts: Timestamp) -> Timestamp {
        (ts - cycle_start).rem_euclid(self.span())
    }

    /// Linear interpolation, clamped to the end points outside the curve.
    pub fn expected_at(&self, elapsed: Timestamp) -> f64 {
        let i = self.points.partition_point(|(t, _)| *t <= elapsed);
        if i == 0 {
            return self.points[0].1;
        }
        if i == self.points.len() {
            return self.points[i - 1].1;
        }
        let (t0, v0) = self.points[i - 1];
        let (t1, v1) = self.points[i];
        let frac = (elapsed - t0) as f64 / (t1 - t0) as f64;
        v0 + frac * (v1 - v0)
    }
}
