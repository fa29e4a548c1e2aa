use nalgebra::{Point2, Vector2};
use std::f64::consts::FRAC_PI_2;

use super::convex_hull_2d;
use crate::error::Result;

/// Rectangle with arbitrary orientation. `half_extents.x` is measured along
/// the direction `yaw`, `half_extents.y` along `yaw + pi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Point2<f64>,
    pub half_extents: Vector2<f64>,
    pub yaw: f64,
}

impl OrientedRect {
    pub fn area(&self) -> f64 {
        4.0 * self.half_extents.x * self.half_extents.y
    }

    pub fn axes(&self) -> (Vector2<f64>, Vector2<f64>) {
        let (s, c) = self.yaw.sin_cos();
        (Vector2::new(c, s), Vector2::new(-s, c))
    }

    pub fn contains(&self, p: &Point2<f64>, tol: f64) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center;
        d.dot(&u).abs() <= self.half_extents.x + tol && d.dot(&v).abs() <= self.half_extents.y + tol
    }
}

/// Minimum-area enclosing rectangle by rotating calipers: the optimum has one
/// side collinear with a hull edge, so only hull edge directions are tried.
///
/// `yaw` is reported in `[0, pi/2)`.
pub fn min_area_rect_2d(points: &[Point2<f64>]) -> Result<OrientedRect> {
    let hull = convex_hull_2d(points)?;
    let verts = &hull.vertices;
    let n = verts.len();

    let mut best: Option<(f64, OrientedRect)> = None;
    for i in 0..n {
        let edge = verts[(i + 1) % n] - verts[i];
        let len = edge.norm();
        if len == 0.0 {
            continue;
        }
        let u = edge / len;
        let v = Vector2::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in verts {
            let pu = p.coords.dot(&u);
            let pv = p.coords.dot(&v);
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let area = (umax - umin) * (vmax - vmin);
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let cu = 0.5 * (umin + umax);
            let cv = 0.5 * (vmin + vmax);
            let rect = OrientedRect {
                center: Point2::from(u * cu + v * cv),
                half_extents: Vector2::new(0.5 * (umax - umin), 0.5 * (vmax - vmin)),
                yaw: u.y.atan2(u.x),
            };
            best = Some((area, rect));
        }
    }
    let (_, rect) = best.expect("hull has at least three edges");
    Ok(canonical_yaw(rect))
}

/// Rotates the rectangle's labelling by multiples of 90 degrees until
/// `yaw` lands in `[0, pi/2)`.
fn canonical_yaw(mut rect: OrientedRect) -> OrientedRect {
    while rect.yaw < 0.0 {
        rect.yaw += FRAC_PI_2;
        rect.half_extents = Vector2::new(rect.half_extents.y, rect.half_extents.x);
    }
    while rect.yaw >= FRAC_PI_2 {
        rect.yaw -= FRAC_PI_2;
        rect.half_extents = Vector2::new(rect.half_extents.y, rect.half_extents.x);
    }
    rect
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rotate(p: &Point2<f64>, angle: f64) -> Point2<f64> {
        let (s, c) = angle.sin_cos();
        Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
    }

    fn square() -> Vec<Point2<f64>> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    fn yaw_mod_quarter(yaw: f64) -> f64 {
        yaw.rem_euclid(FRAC_PI_2)
    }

    fn quarter_distance(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(FRAC_PI_2);
        d.min(FRAC_PI_2 - d)
    }

    #[test]
    fn axis_aligned_square() {
        let r = min_area_rect_2d(&square()).unwrap();
        assert!((r.area() - 1.0).abs() < 1e-12);
        assert!(quarter_distance(r.yaw, 0.0) < 1e-12);
        assert!((r.center - Point2::new(0.5, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn rotated_square() {
        let angle = 30f64.to_radians();
        let pts: Vec<_> = square().iter().map(|p| rotate(p, angle)).collect();
        let r = min_area_rect_2d(&pts).unwrap();
        assert!((r.area() - 1.0).abs() < 1e-12);
        assert!(quarter_distance(yaw_mod_quarter(r.yaw), angle) < 1e-12);
        for p in &pts {
            assert!(r.contains(p, 1e-12));
        }
    }

    #[test]
    fn collinear_is_degenerate() {
        let pts: Vec<_> = (0..5).map(|i| Point2::new(i as f64, 1.0)).collect();
        assert!(matches!(min_area_rect_2d(&pts), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn beats_exhaustive_orientation_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<_> = (0..200)
            .map(|_| Point2::new(rng.random_range(-1.0..2.0), rng.random_range(-0.5..0.5)))
            .map(|p| rotate(&p, 0.4))
            .collect();
        let r = min_area_rect_2d(&pts).unwrap();
        for p in &pts {
            assert!(r.contains(p, 1e-12));
        }
        let mut sweep_best = f64::MAX;
        for step in 0..900 {
            let theta = (step as f64 * 0.1).to_radians();
            let (s, c) = theta.sin_cos();
            let (mut a0, mut a1, mut b0, mut b1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in &pts {
                let a = c * p.x + s * p.y;
                let b = -s * p.x + c * p.y;
                a0 = a0.min(a);
                a1 = a1.max(a);
                b0 = b0.min(b);
                b1 = b1.max(b);
            }
            let area = (a1 - a0) * (b1 - b0);
            sweep_best = sweep_best.min(area);
            assert!(r.area() <= area + 1e-12);
        }
        // the sweep approaches the optimum from above
        assert!(sweep_best - r.area() < 1e-3 * r.area());
    }

    proptest! {
        #[test]
        fn area_is_rotation_invariant(
            pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..40),
            angle in -3.1..3.1f64,
        ) {
            let pts: Vec<_> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
            if let Ok(r) = min_area_rect_2d(&pts) {
                prop_assume!(r.area() > 1e-6);
                let rotated: Vec<_> = pts.iter().map(|p| rotate(p, angle)).collect();
                let r2 = min_area_rect_2d(&rotated).unwrap();
                prop_assert!((r.area() - r2.area()).abs() <= 1e-9 * r.area());
                prop_assert!(r.yaw >= 0.0 && r.yaw < FRAC_PI_2);
            }
        }
    }
}
