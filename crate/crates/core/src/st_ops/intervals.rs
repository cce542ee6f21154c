use super::StOpsError;
use crate::geo::{cross, Circle, Geometry, PlanarPoint, Polygon, Rect};
use crate::temporal::{TSequence, TimeInterval};

/// Leg parameters in `[0, 1]` where `from → to` touches the polygon boundary.
fn polygon_crossings(from: &PlanarPoint, to: &PlanarPoint, poly: &Polygon, out: &mut Vec<f64>) {
    let (vx, vy) = (to.x() - from.x(), to.y() - from.y());
    let vv = vx * vx + vy * vy;
    for edge in poly.edges() {
        let (ex, ey) = (edge.b.x() - edge.a.x(), edge.b.y() - edge.a.y());
        let (qx, qy) = (edge.a.x() - from.x(), edge.a.y() - from.y());
        let denom = vx * ey - vy * ex;
        if denom == 0.0 {
            // parallel: only a collinear overlap touches
            if vv == 0.0 || cross(&edge.a, &edge.b, from) != 0.0 {
                continue;
            }
            for end in [edge.a, edge.b] {
                let tau = ((end.x() - from.x()) * vx + (end.y() - from.y()) * vy) / vv;
                if (0.0..=1.0).contains(&tau) {
                    out.push(tau);
                }
            }
            continue;
        }
        let tau = (qx * ey - qy * ex) / denom;
        let sigma = (qx * vy - qy * vx) / denom;
        if (0.0..=1.0).contains(&tau) && (0.0..=1.0).contains(&sigma) {
            out.push(tau);
        }
    }
}

fn circle_crossings(from: &PlanarPoint, to: &PlanarPoint, c: &Circle, out: &mut Vec<f64>) {
    let (vx, vy) = (to.x() - from.x(), to.y() - from.y());
    let (wx, wy) = (from.x() - c.center().x(), from.y() - c.center().y());
    let qa = vx * vx + vy * vy;
    if qa == 0.0 {
        return;
    }
    let qb = 2.0 * (wx * vx + wy * vy);
    let qc = wx * wx + wy * wy - c.radius() * c.radius();
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return;
    }
    let root = disc.sqrt();
    for tau in [(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)] {
        if (0.0..=1.0).contains(&tau) {
            out.push(tau);
        }
    }
}

enum Piece {
    /// A single time; boundary contacts count as inside.
    At { t: f64, inside: bool },
    /// The open stretch between two consecutive breakpoints.
    Between { from: f64, to: f64, inside: bool },
}

/// Maximal time intervals during which the moving point is inside `region`
/// (boundary inclusive). Tangential contact produces a degenerate interval.
pub fn at_geometry_intervals(
    seq: &TSequence,
    region: &Geometry,
) -> Result<Vec<TimeInterval>, StOpsError> {
    if matches!(region, Geometry::Point(_)) {
        return Err(StOpsError::UnsupportedGeometry);
    }
    let bbox = region.bbox();
    let first = seq.start();
    let mut pieces = vec![Piece::At {
        t: first.ts() as f64,
        inside: region.contains(&first.pos()),
    }];

    let mut taus = Vec::new();
    for (a, b) in seq.segments() {
        let (pa, pb) = (a.pos(), b.pos());
        let (ta, dt) = (a.ts() as f64, (b.ts() - a.ts()) as f64);
        let leg_box = Rect {
            xmin: pa.x().min(pb.x()),
            xmax: pa.x().max(pb.x()),
            ymin: pa.y().min(pb.y()),
            ymax: pa.y().max(pb.y()),
        };
        taus.clear();
        if leg_box.intersects(&bbox) {
            match region {
                Geometry::Polygon(poly) => polygon_crossings(&pa, &pb, poly, &mut taus),
                Geometry::Circle(c) => circle_crossings(&pa, &pb, c, &mut taus),
                Geometry::Point(_) => unreachable!(),
            }
        }
        taus.sort_by(f64::total_cmp);
        taus.dedup();

        // a crossing at an end parameter is boundary contact of that instant
        let touches_start = taus.first() == Some(&0.0);
        let touches_end = taus.last() == Some(&1.0);
        if touches_start {
            if let Some(Piece::At { inside, .. }) = pieces.last_mut() {
                *inside = true;
            }
        }
        let mut prev = 0.0;
        let inner = taus.iter().copied().filter(|&t| t > 0.0 && t < 1.0);
        for tau in inner.chain(std::iter::once(1.0)) {
            let mid = pa.lerp(&pb, 0.5 * (prev + tau));
            pieces.push(Piece::Between {
                from: ta + prev * dt,
                to: ta + tau * dt,
                inside: region.contains(&mid),
            });
            let inside = if tau == 1.0 {
                touches_end || region.contains(&pb)
            } else {
                true
            };
            let t = if tau == 1.0 { b.ts() as f64 } else { ta + tau * dt };
            pieces.push(Piece::At { t, inside });
            prev = tau;
        }
    }

    let mut out = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for piece in pieces {
        let (inside, start, end) = match piece {
            Piece::At { t, inside } => (inside, t, t),
            Piece::Between { from, to, inside } => (inside, from, to),
        };
        match (&mut open, inside) {
            (Some((_, until)), true) => *until = end,
            (None, true) => open = Some((start, end)),
            (Some(_), false) => {
                let (s, e) = open.take().expect("open interval");
                out.push(TimeInterval::closed(s, e));
            }
            (None, false) => {}
        }
    }
    if let Some((s, e)) = open {
        out.push(TimeInterval::closed(s, e));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::TInstant;

    fn seq(points: &[(i64, f64, f64)]) -> TSequence {
        TSequence::new(
            points
                .iter()
                .map(|&(t, x, y)| TInstant::new(t, PlanarPoint::new(x, y).unwrap()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn square(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Geometry {
        Polygon::rectangle(xmin, ymin, xmax, ymax).unwrap().into()
    }

    #[test]
    fn entirely_inside() {
        let s = seq(&[(0, 1.0, 1.0), (10, 2.0, 2.0), (20, 3.0, 1.0)]);
        let out = at_geometry_intervals(&s, &square(0.0, 0.0, 5.0, 5.0)).unwrap();
        assert_eq!(out, vec![TimeInterval::closed(0.0, 20.0)]);
    }

    #[test]
    fn crossing_a_square() {
        let s = seq(&[(0, 0.0, 5.0), (10, 10.0, 5.0)]);
        let g = square(2.0, 0.0, 6.0, 10.0);
        let out = at_geometry_intervals(&s, &g).unwrap();
        assert_eq!(out, vec![TimeInterval::closed(2.0, 6.0)]);
        // Δt = 1 ms membership oracle away from the crossings
        for t in 0..=10 {
            if t == 2 || t == 6 {
                continue;
            }
            let inside = g.contains(&s.value_at(t).unwrap());
            assert_eq!(inside, out.iter().any(|i| i.contains(t as f64)), "t = {t}");
        }
    }

    #[test]
    fn entirely_outside() {
        let s = seq(&[(0, 20.0, 20.0), (10, 30.0, 20.0)]);
        assert!(at_geometry_intervals(&s, &square(0.0, 0.0, 5.0, 5.0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn grazing_a_vertex_is_degenerate() {
        let s = seq(&[(0, 3.0, 7.0), (10, 7.0, 3.0)]);
        let out = at_geometry_intervals(&s, &square(0.0, 0.0, 5.0, 5.0)).unwrap();
        assert_eq!(out, vec![TimeInterval::closed(5.0, 5.0)]);
    }

    #[test]
    fn in_and_out_across_legs() {
        let s = seq(&[(0, -2.0, 1.0), (10, 2.0, 1.0), (20, 6.0, 1.0), (30, 2.0, 1.0)]);
        let out = at_geometry_intervals(&s, &square(0.0, 0.0, 4.0, 4.0)).unwrap();
        assert_eq!(
            out,
            vec![TimeInterval::closed(5.0, 15.0), TimeInterval::closed(25.0, 30.0)]
        );
        let s = seq(&[(0, -2.0, 1.0), (10, 6.0, 1.0), (20, 6.0, 9.0), (30, 2.0, 1.0)]);
        let out = at_geometry_intervals(&s, &square(0.0, 0.0, 4.0, 4.0)).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], TimeInterval::closed(2.5, 7.5));
        assert_eq!(out[1], TimeInterval::closed(26.25, 30.0));
    }

    #[test]
    fn circle_crossing() {
        let c: Geometry = Circle::new(PlanarPoint::new(0.0, 0.0).unwrap(), 5.0)
            .unwrap()
            .into();
        let s = seq(&[(0, -10.0, 3.0), (20, 10.0, 3.0)]);
        let out = at_geometry_intervals(&s, &c).unwrap();
        assert_eq!(out, vec![TimeInterval::closed(6.0, 14.0)]);
    }

    #[test]
    fn point_geometry_unsupported() {
        let s = seq(&[(0, 0.0, 0.0)]);
        let g: Geometry = PlanarPoint::new(0.0, 0.0).unwrap().into();
        assert_eq!(at_geometry_intervals(&s, &g), Err(StOpsError::UnsupportedGeometry));
    }
}
