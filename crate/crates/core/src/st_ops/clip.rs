use crate::temporal::{STBox, TInstant, TSequence};

/// Parametric clip of one leg against the six box half-spaces.
///
/// The leg is `p(u) = a + u (b - a)` for `u ∈ [0, 1]` in x, y and t at once.
/// Returns the surviving parameter range, which may be a single point.
fn clip_leg(a: &TInstant, b: &TInstant, bx: &STBox) -> Option<(f64, f64)> {
    let (pa, pb) = (a.pos(), b.pos());
    let axes = [
        (pa.x(), pb.x() - pa.x(), bx.xmin, bx.xmax),
        (pa.y(), pb.y() - pa.y(), bx.ymin, bx.ymax),
        (
            a.ts() as f64,
            (b.ts() - a.ts()) as f64,
            bx.tmin as f64,
            bx.tmax as f64,
        ),
    ];
    let (mut u0, mut u1) = (0.0f64, 1.0f64);
    for (origin, delta, lo, hi) in axes {
        if delta == 0.0 {
            if origin < lo || origin > hi {
                return None;
            }
            continue;
        }
        let (mut enter, mut exit) = ((lo - origin) / delta, (hi - origin) / delta);
        if delta < 0.0 {
            std::mem::swap(&mut enter, &mut exit);
        }
        u0 = u0.max(enter);
        u1 = u1.min(exit);
        if u0 > u1 {
            return None;
        }
    }
    Some((u0, u1))
}

/// Instant at leg parameter `u`. Crossing times are rounded to the nearest
/// millisecond; a rounded time that lands on a stored instant yields that
/// stored instant instead.
fn instant_at(a: &TInstant, b: &TInstant, u: f64, bx: &STBox) -> TInstant {
    if u <= 0.0 {
        return *a;
    }
    if u >= 1.0 {
        return *b;
    }
    let t = (a.ts() as f64 + u * (b.ts() - a.ts()) as f64).round() as i64;
    if t <= a.ts() {
        return *a;
    }
    if t >= b.ts() {
        return *b;
    }
    let p = a.pos().lerp(&b.pos(), u);
    // the crossing lies on a box face; clamp away the interpolation round-off
    let p = crate::geo::PlanarPoint::raw(
        p.x().clamp(bx.xmin, bx.xmax),
        p.y().clamp(bx.ymin, bx.ymax),
    );
    TInstant::raw(t, p)
}

/// Restricts `seq` to the parts that lie inside `bx` (all bounds inclusive).
///
/// Returns the maximal sub-sequences in time order. Legs are clipped
/// independently and fragments sharing an endpoint are stitched together.
pub fn tpoint_at_stbox(seq: &TSequence, bx: &STBox) -> Vec<TSequence> {
    let hull = seq.stbox();
    if !bx.intersects(&hull) {
        return Vec::new();
    }
    if bx.contains_box(&hull) {
        return vec![seq.clone()];
    }

    let mut runs: Vec<Vec<TInstant>> = Vec::new();
    // whether the current run ends on the stored instant that opens the next leg
    let mut ends_on_shared = false;
    for (a, b) in seq.segments() {
        let Some((u0, u1)) = clip_leg(a, b, bx) else {
            ends_on_shared = false;
            continue;
        };
        let first = instant_at(a, b, u0, bx);
        let last = instant_at(a, b, u1, bx);

        let extend = match runs.last() {
            Some(run) => {
                let tail = run[run.len() - 1].ts();
                (ends_on_shared && u0 == 0.0) || first.ts() <= tail
            }
            None => false,
        };
        if !extend {
            runs.push(Vec::new());
        }
        let run = runs.last_mut().expect("run exists");
        for inst in [first, last] {
            if run.last().is_none_or(|l| inst.ts() > l.ts()) {
                run.push(inst);
            }
        }
        ends_on_shared = u1 == 1.0;
    }
    runs.into_iter().map(TSequence::from_sorted).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::PlanarPoint;

    fn inst(ts: i64, x: f64, y: f64) -> TInstant {
        TInstant::new(ts, PlanarPoint::new(x, y).unwrap()).unwrap()
    }

    fn boxed(xmin: f64, xmax: f64, ymin: f64, ymax: f64, tmin: i64, tmax: i64) -> STBox {
        STBox::new(xmin, xmax, ymin, ymax, tmin, tmax).unwrap()
    }

    #[test]
    fn fully_inside_is_identity() {
        let seq = TSequence::new(vec![inst(0, 1.0, 1.0), inst(5, 2.0, 3.0), inst(9, 4.0, 1.0)])
            .unwrap();
        let out = tpoint_at_stbox(&seq, &boxed(0.0, 10.0, 0.0, 10.0, 0, 10));
        assert_eq!(out, vec![seq.clone()]);
        // exactly the hull is also identity
        assert_eq!(tpoint_at_stbox(&seq, &seq.stbox()), vec![seq]);
    }

    #[test]
    fn diagonal_clip() {
        let seq = TSequence::new(vec![inst(0, 0.0, 0.0), inst(10, 10.0, 10.0)]).unwrap();
        let bx = boxed(2.0, 5.0, 2.0, 5.0, 0, 10);
        let out = tpoint_at_stbox(&seq, &bx);
        assert_eq!(out.len(), 1);
        let inst = out[0].instants();
        assert_eq!(inst.len(), 2);
        assert_eq!((inst[0].ts(), inst[0].pos().x(), inst[0].pos().y()), (2, 2.0, 2.0));
        assert_eq!((inst[1].ts(), inst[1].pos().x(), inst[1].pos().y()), (5, 5.0, 5.0));

        // dense sampling: membership matches coverage at every millisecond
        for t in 0..=10 {
            let p = seq.value_at(t).unwrap();
            let inside = bx.contains_point(&p, t as f64);
            let covered = out.iter().any(|s| s.start().ts() <= t && t <= s.end().ts());
            assert_eq!(inside, covered, "t = {t}");
        }
    }

    #[test]
    fn disjoint_in_time() {
        let seq = TSequence::new(vec![inst(100, 0.0, 0.0), inst(200, 10.0, 10.0)]).unwrap();
        assert!(tpoint_at_stbox(&seq, &boxed(-1e3, 1e3, -1e3, 1e3, 0, 50)).is_empty());
    }

    #[test]
    fn leaving_and_reentering_yields_two_pieces() {
        // out along +x, back along -x; the box covers only x ≤ 2
        let seq = TSequence::new(vec![inst(0, 0.0, 0.0), inst(10, 10.0, 0.0), inst(20, 0.0, 0.0)])
            .unwrap();
        let out = tpoint_at_stbox(&seq, &boxed(-1.0, 2.0, -1.0, 1.0, 0, 20));
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].start().ts(), out[0].end().ts()), (0, 2));
        assert_eq!((out[1].start().ts(), out[1].end().ts()), (18, 20));
    }

    #[test]
    fn stitches_across_stored_instants() {
        let seq = TSequence::new(vec![
            inst(0, -5.0, 0.0),
            inst(10, 0.0, 0.0),
            inst(20, 1.0, 1.0),
            inst(30, 8.0, 0.0),
        ])
        .unwrap();
        let out = tpoint_at_stbox(&seq, &boxed(-1.0, 2.0, -2.0, 2.0, 0, 30));
        assert_eq!(out.len(), 1);
        let ts: Vec<_> = out[0].instants().iter().map(|i| i.ts()).collect();
        assert_eq!(ts, vec![8, 10, 20, 21]);
    }

    #[test]
    fn time_bounds_clip() {
        let seq = TSequence::new(vec![inst(0, 0.0, 0.0), inst(100, 100.0, 0.0)]).unwrap();
        let out = tpoint_at_stbox(&seq, &boxed(-1e3, 1e3, -1e3, 1e3, 25, 60));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].start().ts(), 25);
        assert_eq!(out[0].start().pos().x(), 25.0);
        assert_eq!(out[0].end().ts(), 60);
    }

    #[test]
    fn touching_a_corner_gives_one_instant() {
        let seq = TSequence::new(vec![inst(0, 0.0, 2.0), inst(10, 10.0, -8.0)]).unwrap();
        // the leg passes exactly through (2, 0), the box corner
        let out = tpoint_at_stbox(&seq, &boxed(2.0, 5.0, 0.0, 5.0, 0, 10));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].len(), 1);
        assert_eq!(out[0].start().ts(), 2);
    }
}
