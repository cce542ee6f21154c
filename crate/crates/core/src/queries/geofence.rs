use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{dist_point_geometry, GeoError, Geometry, PlanarPoint, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FenceKind {
    Maintenance,
    NoiseZone,
    SpeedZone,
    Station,
    Workshop,
    TrackSegment,
}

impl FenceKind {
    pub const ALL: [FenceKind; 6] = [
        FenceKind::Maintenance,
        FenceKind::NoiseZone,
        FenceKind::SpeedZone,
        FenceKind::Station,
        FenceKind::Workshop,
        FenceKind::TrackSegment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FenceKind::Maintenance => "maintenance",
            FenceKind::NoiseZone => "noise_zone",
            FenceKind::SpeedZone => "speed_zone",
            FenceKind::Station => "station",
            FenceKind::Workshop => "workshop",
            FenceKind::TrackSegment => "track_segment",
        }
    }

    /// The kind-specific property this kind requires, if any.
    pub fn required_attribute(self) -> Option<&'static str> {
        match self {
            FenceKind::SpeedZone => Some("speed_limit"),
            FenceKind::NoiseZone => Some("noise_limit"),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown geofence kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for FenceKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FenceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FenceError {
    #[error("fence `{id}` of kind {kind} is missing `{attribute}`")]
    MissingKindAttribute {
        id: String,
        kind: FenceKind,
        attribute: &'static str,
    },
    #[error("fence `{id}` of kind {kind} must not carry `{attribute}`")]
    UnexpectedAttribute {
        id: String,
        kind: FenceKind,
        attribute: &'static str,
    },
    #[error("fence `{id}`: `{attribute}` = {value} is not a valid limit")]
    InvalidLimit {
        id: String,
        attribute: &'static str,
        value: f64,
    },
    #[error("fence `{id}` must be a polygon or a circle")]
    UnsupportedGeometry { id: String },
    #[error("duplicate fence id `{0}`")]
    DuplicateId(String),
    #[error(transparent)]
    Geometry(#[from] GeoError),
}

/// A named static boundary with operational attributes. Geometry is planar.
#[derive(Debug, Clone, PartialEq)]
pub struct Geofence {
    id: String,
    name: String,
    kind: FenceKind,
    geometry: Geometry,
    speed_limit: Option<f64>,
    noise_limit: Option<f64>,
}

impl Geofence {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        kind: FenceKind,
        geometry: Geometry,
        speed_limit: Option<f64>,
        noise_limit: Option<f64>,
    ) -> Result<Self, FenceError> {
        let id = id.into();
        if matches!(geometry, Geometry::Point(_)) {
            return Err(FenceError::UnsupportedGeometry { id });
        }
        for (attribute, value) in [("speed_limit", speed_limit), ("noise_limit", noise_limit)] {
            let required = kind.required_attribute() == Some(attribute);
            match value {
                None if required => {
                    return Err(FenceError::MissingKindAttribute { id, kind, attribute })
                }
                Some(_) if !required => {
                    return Err(FenceError::UnexpectedAttribute { id, kind, attribute })
                }
                Some(v) if !v.is_finite() || (attribute == "speed_limit" && v <= 0.0) => {
                    return Err(FenceError::InvalidLimit {
                        id,
                        attribute,
                        value: v,
                    })
                }
                _ => {}
            }
        }
        Ok(Geofence {
            id,
            name: name.into(),
            kind,
            geometry,
            speed_limit,
            noise_limit,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FenceKind {
        self.kind
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Meters per second; present exactly for speed zones.
    pub fn speed_limit(&self) -> Option<f64> {
        self.speed_limit
    }

    /// dBA; present exactly for noise zones.
    pub fn noise_limit(&self) -> Option<f64> {
        self.noise_limit
    }

    pub fn contains(&self, p: &PlanarPoint) -> bool {
        self.geometry.bbox().contains(p) && self.geometry.contains(p)
    }

    pub fn distance(&self, p: &PlanarPoint) -> f64 {
        dist_point_geometry(p, &self.geometry)
    }
}

/// Validated fences in one planar frame, indexed by kind.
#[derive(Debug, Clone)]
pub struct GeofenceRegistry {
    projection: Projection,
    fences: Vec<Geofence>,
    by_kind: [Vec<usize>; 6],
}

impl GeofenceRegistry {
    pub fn new(projection: Projection, fences: Vec<Geofence>) -> Result<Self, FenceError> {
        let mut seen = HashSet::new();
        let mut by_kind: [Vec<usize>; 6] = Default::default();
        for (i, fence) in fences.iter().enumerate() {
            if !seen.insert(fence.id.as_str()) {
                return Err(FenceError::DuplicateId(fence.id.clone()));
            }
            by_kind[fence.kind.index()].push(i);
        }
        Ok(GeofenceRegistry {
            projection,
            fences,
            by_kind,
        })
    }

    pub fn empty(projection: Projection) -> Self {
        GeofenceRegistry::new(projection, Vec::new()).expect("no duplicates")
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn len(&self) -> usize {
        self.fences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fences.is_empty()
    }

    pub fn fences(&self) -> &[Geofence] {
        &self.fences
    }

    pub fn get(&self, id: &str) -> Option<&Geofence> {
        self.fences.iter().find(|f| f.id == id)
    }

    /// Fences of `kind` with their registry index, in load order.
    pub fn of_kind(&self, kind: FenceKind) -> impl Iterator<Item = (usize, &Geofence)> + '_ {
        self.by_kind[kind.index()].iter().map(|&i| (i, &self.fences[i]))
    }

    /// Fences of `kind` containing `p`, in load order.
    pub fn covering<'a>(
        &'a self,
        kind: FenceKind,
        p: &'a PlanarPoint,
    ) -> impl Iterator<Item = (usize, &'a Geofence)> + 'a {
        self.of_kind(kind).filter(move |(_, f)| f.contains(p))
    }

    /// The closest fence among `kinds`; ties go to the earlier fence.
    pub fn nearest(&self, kinds: &[FenceKind], p: &PlanarPoint) -> Option<(&Geofence, f64)> {
        let mut indices: Vec<usize> = kinds
            .iter()
            .flat_map(|k| self.by_kind[k.index()].iter().copied())
            .collect();
        indices.sort_unstable();
        let mut best: Option<(&Geofence, f64)> = None;
        for i in indices {
            let fence = &self.fences[i];
            let d = fence.distance(p);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((fence, d));
            }
        }
        best
    }
}
