use super::StOpsError;
use crate::geo::{dist_point_geometry, dist_point_segment, Geometry, PlanarPoint, Segment};
use crate::temporal::TSequence;

#[inline]
fn dot(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * bx + ay * by
}

#[inline]
fn perp(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Minimum of `|w + τ v|²` over all τ (unclamped), or `None` for `v = 0`.
fn point_stationary(wx: f64, wy: f64, vx: f64, vy: f64) -> Option<f64> {
    let vv = dot(vx, vy, vx, vy);
    (vv > 0.0).then(|| -dot(wx, wy, vx, vy) / vv)
}

/// Exact minimum distance between a point moving linearly from `from` (at
/// `t0`) to `to` (at `t1`) and a static segment, with one time achieving it.
///
/// The closest point of `seg` follows the segment's Voronoi regions (near
/// endpoint `a`, near endpoint `b`, interior). Region changes happen where the
/// projection parameter hits 0 or 1, which is linear in time. Inside a region
/// the squared distance is quadratic in time, so every piece has a closed-form
/// minimiser. The answer is the best of those candidates and the interval ends.
pub fn min_dist_moving_point_segment(
    from: PlanarPoint,
    to: PlanarPoint,
    t0: f64,
    t1: f64,
    seg: &Segment,
) -> Result<(f64, f64), StOpsError> {
    if !(t0 < t1) {
        return Err(StOpsError::DegenerateMotion { t0, t1 });
    }
    let (vx, vy) = (to.x() - from.x(), to.y() - from.y());
    let (ex, ey) = (seg.b.x() - seg.a.x(), seg.b.y() - seg.a.y());
    let (wax, way) = (from.x() - seg.a.x(), from.y() - seg.a.y());
    let (wbx, wby) = (from.x() - seg.b.x(), from.y() - seg.b.y());

    let mut candidates = [f64::NAN; 8];
    let mut n = 0;
    let mut push = |tau: f64| {
        if tau.is_finite() {
            candidates[n] = tau.clamp(0.0, 1.0);
            n += 1;
        }
    };
    push(0.0);
    push(1.0);
    if let Some(tau) = point_stationary(wax, way, vx, vy) {
        push(tau);
    }
    let ee = dot(ex, ey, ex, ey);
    if ee > 0.0 {
        if let Some(tau) = point_stationary(wbx, wby, vx, vy) {
            push(tau);
        }
        // projection parameter λ(τ) = λ0 + λ1 τ; regions switch at λ = 0, 1
        let lambda0 = dot(wax, way, ex, ey) / ee;
        let lambda1 = dot(vx, vy, ex, ey) / ee;
        if lambda1 != 0.0 {
            push(-lambda0 / lambda1);
            push((1.0 - lambda0) / lambda1);
        }
        // signed distance to the supporting line is linear in τ
        let c0 = perp(ex, ey, wax, way);
        let c1 = perp(ex, ey, vx, vy);
        if c1 != 0.0 {
            push(-c0 / c1);
        }
    }

    let mut best = (f64::INFINITY, 0.0);
    let mut taus = candidates[..n].to_vec();
    taus.sort_by(f64::total_cmp);
    for tau in taus {
        let d = dist_point_segment(&from.lerp(&to, tau), seg);
        if d < best.0 {
            best = (d, tau);
        }
    }
    Ok((best.0, t0 + best.1 * (t1 - t0)))
}

/// True iff the moving point ever comes within `d` meters (inclusive) of `g`.
pub fn edwithin(seq: &TSequence, g: &Geometry, d: f64) -> Result<bool, StOpsError> {
    if !(d >= 0.0) {
        return Err(StOpsError::NegativeDistance(d));
    }
    let hull = seq.stbox().spatial().expanded(d);
    if !hull.intersects(&g.bbox()) {
        return Ok(false);
    }
    if seq.len() == 1 {
        return Ok(dist_point_geometry(&seq.start().pos(), g) <= d);
    }
    let legs = || seq.segments().map(|(a, b)| Segment::new(a.pos(), b.pos()));
    match g {
        // the moving point sweeps the leg itself, so the closest approach to a
        // fixed point is its distance to the leg
        Geometry::Point(q) => Ok(legs().any(|leg| dist_point_segment(q, &leg) <= d)),
        Geometry::Circle(c) => {
            let reach = d + c.radius();
            Ok(legs().any(|leg| dist_point_segment(&c.center(), &leg) <= reach))
        }
        Geometry::Polygon(poly) => {
            if seq.instants().iter().any(|i| g.contains(&i.pos())) {
                return Ok(true);
            }
            let near = poly.bbox().expanded(d);
            for (a, b) in seq.segments() {
                let leg = Segment::new(a.pos(), b.pos());
                let leg_box = crate::geo::Rect {
                    xmin: leg.a.x().min(leg.b.x()),
                    xmax: leg.a.x().max(leg.b.x()),
                    ymin: leg.a.y().min(leg.b.y()),
                    ymax: leg.a.y().max(leg.b.y()),
                };
                if !leg_box.intersects(&near) {
                    continue;
                }
                if g.contains(&leg.a.lerp(&leg.b, 0.5)) || poly.edges().any(|e| e.intersects(&leg))
                {
                    return Ok(true);
                }
                for edge in poly.edges() {
                    let (dist, _) = min_dist_moving_point_segment(
                        a.pos(),
                        b.pos(),
                        a.ts() as f64,
                        b.ts() as f64,
                        &edge,
                    )?;
                    if dist <= d {
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        }
    }
}
