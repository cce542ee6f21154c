//! Planar geometry kernel.
//!
//! Geodetic coordinates are mapped onto a local plane with an equirectangular
//! projection about a reference point. Everything above this module works in
//! meters on that plane.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean earth radius used by the projection and by [`haversine`].
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("ring needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("ring {ring} self-intersects between edges {first} and {second}")]
    SelfIntersecting {
        ring: usize,
        first: usize,
        second: usize,
    },
    #[error("hole {0} is not inside the exterior ring")]
    HoleOutsideExterior(usize),
    #[error("circle radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
}

/// A position in meters east (`x`) and north (`y`) of the projection origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarPoint {
    x: f64,
    y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, GeoError> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(GeoError::NonFinite(x, y))
        }
    }

    /// Callers guarantee finiteness (results of arithmetic on finite points).
    #[inline]
    pub(crate) const fn raw(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    #[inline]
    pub(crate) fn lerp(&self, other: &PlanarPoint, u: f64) -> PlanarPoint {
        PlanarPoint::raw(
            self.x + (other.x - self.x) * u,
            self.y + (other.y - self.y) * u,
        )
    }
}

impl<'de> Deserialize<'de> for PlanarPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (x, y) = <(f64, f64)>::deserialize(d)?;
        PlanarPoint::new(x, y).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<(f64, f64)> for PlanarPoint {
    type Error = GeoError;

    fn try_from((x, y): (f64, f64)) -> Result<Self, GeoError> {
        PlanarPoint::new(x, y)
    }
}

/// Sign of the turn a→b→c: positive for counter-clockwise.
#[inline]
pub(crate) fn cross(a: &PlanarPoint, b: &PlanarPoint, c: &PlanarPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// A closed line segment. `a == b` is allowed and behaves like a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: PlanarPoint,
    pub b: PlanarPoint,
}

impl Segment {
    pub fn new(a: PlanarPoint, b: PlanarPoint) -> Self {
        Self { a, b }
    }

    /// Closest point of the segment to `pt` (clamped orthogonal projection).
    pub fn closest_point(&self, pt: &PlanarPoint) -> PlanarPoint {
        let dx = self.b.x - self.a.x;
        let dy = self.b.y - self.a.y;
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return self.a;
        }
        let u = ((pt.x - self.a.x) * dx + (pt.y - self.a.y) * dy) / len2;
        if u <= 0.0 {
            self.a
        } else if u >= 1.0 {
            self.b
        } else {
            self.a.lerp(&self.b, u)
        }
    }

    /// Exact test for `pt` lying on the closed segment.
    fn contains_point(&self, pt: &PlanarPoint) -> bool {
        cross(&self.a, &self.b, pt) == 0.0
            && pt.x >= self.a.x.min(self.b.x)
            && pt.x <= self.a.x.max(self.b.x)
            && pt.y >= self.a.y.min(self.b.y)
            && pt.y <= self.a.y.max(self.b.y)
    }

    /// True when the two closed segments share at least one point.
    pub fn intersects(&self, other: &Segment) -> bool {
        let d1 = cross(&other.a, &other.b, &self.a);
        let d2 = cross(&other.a, &other.b, &self.b);
        let d3 = cross(&self.a, &self.b, &other.a);
        let d4 = cross(&self.a, &self.b, &other.b);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && other.contains_point(&self.a))
            || (d2 == 0.0 && other.contains_point(&self.b))
            || (d3 == 0.0 && self.contains_point(&other.a))
            || (d4 == 0.0 && self.contains_point(&other.b))
    }
}

/// Axis-aligned planar rectangle, used for cheap rejection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    fn around(points: &[PlanarPoint]) -> Rect {
        let mut r = Rect {
            xmin: f64::INFINITY,
            xmax: f64::NEG_INFINITY,
            ymin: f64::INFINITY,
            ymax: f64::NEG_INFINITY,
        };
        for p in points {
            r.xmin = r.xmin.min(p.x);
            r.xmax = r.xmax.max(p.x);
            r.ymin = r.ymin.min(p.y);
            r.ymax = r.ymax.max(p.y);
        }
        r
    }

    #[inline]
    pub fn contains(&self, p: &PlanarPoint) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn expanded(&self, by: f64) -> Rect {
        Rect {
            xmin: self.xmin - by,
            xmax: self.xmax + by,
            ymin: self.ymin - by,
            ymax: self.ymax + by,
        }
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.xmin <= other.xmax
            && other.xmin <= self.xmax
            && self.ymin <= other.ymax
            && other.ymin <= self.ymax
    }
}

/// A polygon with an exterior ring and optional holes.
///
/// Rings are stored open: the closing vertex of a GeoJSON-style ring is dropped
/// on construction and the last vertex implicitly connects to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Vec<PlanarPoint>,
    holes: Vec<Vec<PlanarPoint>>,
    bbox: Rect,
}

fn normalize_ring(mut ring: Vec<PlanarPoint>) -> Vec<PlanarPoint> {
    ring.dedup();
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

fn ring_edges(ring: &[PlanarPoint]) -> impl Iterator<Item = Segment> + '_ {
    let n = ring.len();
    (0..n).map(move |i| Segment::new(ring[i], ring[(i + 1) % n]))
}

fn check_simple(ring: &[PlanarPoint], ring_idx: usize) -> Result<(), GeoError> {
    let n = ring.len();
    let edges: Vec<Segment> = ring_edges(ring).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if edges[i].intersects(&edges[j]) {
                return Err(GeoError::SelfIntersecting {
                    ring: ring_idx,
                    first: i,
                    second: j,
                });
            }
        }
    }
    Ok(())
}

/// Even-odd ray cast towards +x. Vertices on the ray count as lying above it.
fn ring_crossings_odd(ring: &[PlanarPoint], p: &PlanarPoint) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (&ring[i], &ring[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x_at = pi.x + (p.y - pi.y) * (pj.x - pi.x) / (pj.y - pi.y);
            if p.x < x_at {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

impl Polygon {
    pub fn new(
        exterior: Vec<PlanarPoint>,
        holes: Vec<Vec<PlanarPoint>>,
    ) -> Result<Self, GeoError> {
        let exterior = normalize_ring(exterior);
        if exterior.len() < 3 {
            return Err(GeoError::TooFewVertices(exterior.len()));
        }
        check_simple(&exterior, 0)?;
        let mut normalized = Vec::with_capacity(holes.len());
        for (i, hole) in holes.into_iter().enumerate() {
            let hole = normalize_ring(hole);
            if hole.len() < 3 {
                return Err(GeoError::TooFewVertices(hole.len()));
            }
            check_simple(&hole, i + 1)?;
            let outer_edges: Vec<Segment> = ring_edges(&exterior).collect();
            let inside = hole.iter().all(|v| {
                ring_crossings_odd(&exterior, v) || outer_edges.iter().any(|e| e.contains_point(v))
            });
            if !inside {
                return Err(GeoError::HoleOutsideExterior(i));
            }
            normalized.push(hole);
        }
        let bbox = Rect::around(&exterior);
        Ok(Self {
            exterior,
            holes: normalized,
            bbox,
        })
    }

    /// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]` as a polygon.
    pub fn rectangle(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, GeoError> {
        Polygon::new(
            vec![
                PlanarPoint::new(xmin, ymin)?,
                PlanarPoint::new(xmax, ymin)?,
                PlanarPoint::new(xmax, ymax)?,
                PlanarPoint::new(xmin, ymax)?,
            ],
            Vec::new(),
        )
    }

    pub fn exterior(&self) -> &[PlanarPoint] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<PlanarPoint>] {
        &self.holes
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    /// Every boundary edge of every ring.
    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        std::iter::once(self.exterior.as_slice())
            .chain(self.holes.iter().map(Vec::as_slice))
            .flat_map(ring_edges)
    }

    pub fn on_boundary(&self, p: &PlanarPoint) -> bool {
        self.edges().any(|e| e.contains_point(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    center: PlanarPoint,
    radius: f64,
}

impl Circle {
    pub fn new(center: PlanarPoint, radius: f64) -> Result<Self, GeoError> {
        if radius.is_finite() && radius > 0.0 {
            Ok(Self { center, radius })
        } else {
            Err(GeoError::InvalidRadius(radius))
        }
    }

    pub fn center(&self) -> PlanarPoint {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn bbox(&self) -> Rect {
        Rect {
            xmin: self.center.x - self.radius,
            xmax: self.center.x + self.radius,
            ymin: self.center.y - self.radius,
            ymax: self.center.y + self.radius,
        }
    }

    pub fn contains(&self, p: &PlanarPoint) -> bool {
        self.center.distance(p) <= self.radius
    }
}

/// Static geometry a moving point can be tested against.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(PlanarPoint),
    Polygon(Polygon),
    Circle(Circle),
}

impl Geometry {
    pub fn bbox(&self) -> Rect {
        match self {
            Geometry::Point(p) => Rect {
                xmin: p.x,
                xmax: p.x,
                ymin: p.y,
                ymax: p.y,
            },
            Geometry::Polygon(poly) => poly.bbox(),
            Geometry::Circle(c) => c.bbox(),
        }
    }

    /// Membership with boundary points counted as inside.
    pub fn contains(&self, p: &PlanarPoint) -> bool {
        match self {
            Geometry::Point(q) => q == p,
            Geometry::Polygon(poly) => point_in_polygon(p, poly),
            Geometry::Circle(c) => c.contains(p),
        }
    }
}

impl From<Polygon> for Geometry {
    fn from(p: Polygon) -> Self {
        Geometry::Polygon(p)
    }
}

impl From<Circle> for Geometry {
    fn from(c: Circle) -> Self {
        Geometry::Circle(c)
    }
}

impl From<PlanarPoint> for Geometry {
    fn from(p: PlanarPoint) -> Self {
        Geometry::Point(p)
    }
}

fn check_lon_lat(lon: f64, lat: f64) -> Result<(), GeoError> {
    if !lon.is_finite() || !lat.is_finite() {
        return Err(GeoError::NonFinite(lon, lat));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(GeoError::LongitudeOutOfRange(lon));
    }
    if !(-90.0..=90.0).contains(&lat) {
        return Err(GeoError::LatitudeOutOfRange(lat));
    }
    Ok(())
}

/// Equirectangular projection about a reference longitude/latitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    ref_lon: f64,
    ref_lat: f64,
    cos_ref_lat: f64,
}

impl Default for Projection {
    /// Brussels.
    fn default() -> Self {
        Projection::new(4.35, 50.85).expect("valid reference")
    }
}

impl Projection {
    pub fn new(ref_lon: f64, ref_lat: f64) -> Result<Self, GeoError> {
        check_lon_lat(ref_lon, ref_lat)?;
        Ok(Self {
            ref_lon,
            ref_lat,
            cos_ref_lat: (ref_lat * PI / 180.0).cos(),
        })
    }

    pub fn ref_lon(&self) -> f64 {
        self.ref_lon
    }

    pub fn ref_lat(&self) -> f64 {
        self.ref_lat
    }

    pub fn project(&self, lon: f64, lat: f64) -> Result<PlanarPoint, GeoError> {
        check_lon_lat(lon, lat)?;
        let x = EARTH_RADIUS_M * (lon - self.ref_lon) * (PI / 180.0) * self.cos_ref_lat;
        let y = EARTH_RADIUS_M * (lat - self.ref_lat) * (PI / 180.0);
        Ok(PlanarPoint::raw(x, y))
    }

    /// Inverse of [`Projection::project`], returning `(lon, lat)` in degrees.
    pub fn unproject(&self, p: &PlanarPoint) -> (f64, f64) {
        let lon = self.ref_lon + p.x / (EARTH_RADIUS_M * (PI / 180.0) * self.cos_ref_lat);
        let lat = self.ref_lat + p.y / (EARTH_RADIUS_M * (PI / 180.0));
        (lon, lat)
    }
}

/// Great-circle distance in meters.
pub fn haversine(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> Result<f64, GeoError> {
    check_lon_lat(lon1, lat1)?;
    check_lon_lat(lon2, lat2)?;
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    Ok(2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin())
}

/// Even-odd containment. Points on any ring boundary are inside; points
/// strictly inside a hole are outside.
pub fn point_in_polygon(p: &PlanarPoint, poly: &Polygon) -> bool {
    if !poly.bbox.contains(p) {
        return false;
    }
    if poly.on_boundary(p) {
        return true;
    }
    ring_crossings_odd(&poly.exterior, p) && !poly.holes.iter().any(|h| ring_crossings_odd(h, p))
}

pub fn dist_point_segment(p: &PlanarPoint, s: &Segment) -> f64 {
    p.distance(&s.closest_point(p))
}

/// Zero inside or on the geometry, otherwise the distance to its boundary.
pub fn dist_point_geometry(p: &PlanarPoint, g: &Geometry) -> f64 {
    match g {
        Geometry::Point(q) => p.distance(q),
        Geometry::Circle(c) => (c.center.distance(p) - c.radius).max(0.0),
        Geometry::Polygon(poly) => {
            if point_in_polygon(p, poly) {
                0.0
            } else {
                poly.edges()
                    .map(|e| dist_point_segment(p, &e))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> PlanarPoint {
        PlanarPoint::new(x, y).unwrap()
    }

    fn unit_square() -> Polygon {
        Polygon::rectangle(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn planar_point_rejects_nan() {
        assert!(PlanarPoint::new(f64::NAN, 0.0).is_err());
        assert!(PlanarPoint::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn project_examples() {
        let brussels = Projection::new(4.35, 50.85).unwrap();
        let o = brussels.project(4.35, 50.85).unwrap();
        assert_eq!((o.x(), o.y()), (0.0, 0.0));

        // R * 0.01° * cos(50.85°), evaluated offline
        let p = brussels.project(4.36, 50.85).unwrap();
        assert!((p.x() - 702.032_277_768_306_5).abs() < 1e-6, "{}", p.x());
        assert!(p.y().abs() < 1e-9);

        let equator = Projection::new(0.0, 0.0).unwrap();
        let q = equator.project(0.0, 0.01).unwrap();
        assert!(q.x().abs() < 1e-12);
        assert!((q.y() - 1_111.949_266_445_587_5).abs() < 1e-6, "{}", q.y());
    }

    #[test]
    fn project_rejects_bad_input() {
        let p = Projection::default();
        assert!(matches!(
            p.project(181.0, 0.0),
            Err(GeoError::LongitudeOutOfRange(_))
        ));
        assert!(matches!(
            p.project(0.0, -91.0),
            Err(GeoError::LatitudeOutOfRange(_))
        ));
        assert!(matches!(p.project(f64::NAN, 0.0), Err(GeoError::NonFinite(..))));
        assert!(Projection::new(0.0, 95.0).is_err());
    }

    #[test]
    fn haversine_examples() {
        assert_eq!(haversine(4.0, 50.0, 4.0, 50.0).unwrap(), 0.0);
        let east = haversine(0.0, 0.0, 1.0, 0.0).unwrap();
        let north = haversine(0.0, 0.0, 0.0, 1.0).unwrap();
        assert!((east - 111_194.926_644_558_73).abs() < 1e-6);
        assert!((north - 111_194.926_644_558_73).abs() < 1e-6);
        assert!(haversine(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn point_in_polygon_examples() {
        let sq = unit_square();
        assert!(point_in_polygon(&pt(0.5, 0.5), &sq));
        assert!(!point_in_polygon(&pt(2.0, 0.5), &sq));
        assert!(point_in_polygon(&pt(1.0, 0.5), &sq));
        assert!(point_in_polygon(&pt(0.0, 0.0), &sq));
    }

    #[test]
    fn ray_through_vertex_counts_once() {
        // diamond: the +x ray from the center passes exactly through vertex (2, 0)
        let diamond = Polygon::new(
            vec![pt(0.0, -2.0), pt(2.0, 0.0), pt(0.0, 2.0), pt(-2.0, 0.0)],
            vec![],
        )
        .unwrap();
        assert!(point_in_polygon(&pt(0.0, 0.0), &diamond));
        assert!(!point_in_polygon(&pt(-3.0, 0.0), &diamond));
    }

    #[test]
    fn holes_are_outside_but_their_boundary_is_not() {
        let poly = Polygon::new(
            vec![pt(0.0, 0.0), pt(10.0, 0.0), pt(10.0, 10.0), pt(0.0, 10.0)],
            vec![vec![pt(4.0, 4.0), pt(6.0, 4.0), pt(6.0, 6.0), pt(4.0, 6.0)]],
        )
        .unwrap();
        assert!(!point_in_polygon(&pt(5.0, 5.0), &poly));
        assert!(point_in_polygon(&pt(4.0, 5.0), &poly));
        assert!(point_in_polygon(&pt(2.0, 2.0), &poly));
        assert_eq!(dist_point_geometry(&pt(5.0, 5.0), &poly.into()), 1.0);
    }

    #[test]
    fn polygon_validation() {
        assert!(matches!(
            Polygon::new(vec![pt(0.0, 0.0), pt(1.0, 0.0)], vec![]),
            Err(GeoError::TooFewVertices(2))
        ));
        // closing vertex is dropped
        let closed = Polygon::new(
            vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 0.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(closed.exterior().len(), 3);
        // bow tie
        let bowtie = Polygon::new(
            vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(1.0, 0.0), pt(0.0, 1.0)],
            vec![],
        );
        assert!(matches!(bowtie, Err(GeoError::SelfIntersecting { .. })));
        let stray_hole = Polygon::new(
            vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)],
            vec![vec![pt(5.0, 5.0), pt(6.0, 5.0), pt(6.0, 6.0)]],
        );
        assert!(matches!(stray_hole, Err(GeoError::HoleOutsideExterior(0))));
    }

    #[test]
    fn dist_point_segment_examples() {
        let s = Segment::new(pt(-1.0, 0.0), pt(1.0, 0.0));
        assert_eq!(dist_point_segment(&pt(0.0, 1.0), &s), 1.0);
        let s = Segment::new(pt(0.0, 0.0), pt(1.0, 0.0));
        assert_eq!(dist_point_segment(&pt(3.0, 0.0), &s), 2.0);
        let z = Segment::new(pt(0.0, 0.0), pt(0.0, 0.0));
        assert_eq!(dist_point_segment(&pt(0.0, 0.0), &z), 0.0);
    }

    #[test]
    fn dist_point_geometry_examples() {
        let sq: Geometry = unit_square().into();
        assert_eq!(dist_point_geometry(&pt(0.5, 0.5), &sq), 0.0);
        // dense boundary sampling gives 1.0
        assert_eq!(dist_point_geometry(&pt(2.0, 0.0), &sq), 1.0);
        let c: Geometry = Circle::new(pt(0.0, 0.0), 1.0).unwrap().into();
        assert_eq!(dist_point_geometry(&pt(3.0, 0.0), &c), 2.0);
        assert_eq!(dist_point_geometry(&pt(1.0, 0.0), &c), 0.0);
        assert_eq!(dist_point_geometry(&pt(0.2, 0.0), &c), 0.0);
        let p: Geometry = pt(3.0, 4.0).into();
        assert_eq!(dist_point_geometry(&pt(0.0, 0.0), &p), 5.0);
    }

    #[test]
    fn circle_rejects_bad_radius() {
        assert!(Circle::new(pt(0.0, 0.0), 0.0).is_err());
        assert!(Circle::new(pt(0.0, 0.0), -1.0).is_err());
        assert!(Circle::new(pt(0.0, 0.0), f64::NAN).is_err());
    }

    #[test]
    fn segment_intersection() {
        let s = Segment::new(pt(0.0, 0.0), pt(2.0, 2.0));
        assert!(s.intersects(&Segment::new(pt(0.0, 2.0), pt(2.0, 0.0))));
        assert!(s.intersects(&Segment::new(pt(2.0, 2.0), pt(3.0, 0.0))));
        assert!(!s.intersects(&Segment::new(pt(3.0, 3.0), pt(4.0, 4.0))));
        assert!(s.intersects(&Segment::new(pt(1.0, 1.0), pt(4.0, 4.0))));
    }
}
