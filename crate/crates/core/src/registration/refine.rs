use nalgebra::{Matrix3, Point2, Rotation3, Vector3};

use crate::geometry::{PointCloud, RigidTransform};

use super::RackModel;

/// Edge softness schedule (meters), coarse to fine.
const SOFTNESS: [f64; 3] = [2e-4, 1e-4, 5e-5];
/// Points deeper than this many softness widths inside the solid region
/// contribute less than `exp(-BAND)` each and are skipped.
const BAND: f64 = 12.0;
const MAX_STEPS: usize = 50;

/// Sharpens the in-plane part of a rack pose (x, y and yaw in the rack
/// frame) using the slot-opening edges.
///
/// Nearest-neighbour ICP against a sampled template pins the plane well but
/// leaves the in-plane pose loose: inside the solid region any small slide
/// looks equally good. Here every observed point near the top plane pays a
/// soft penalty `tau * softplus(d / tau)` on its signed distance `d` into the
/// open region, and the pose minimising the total is found by damped Newton
/// steps while `tau` shrinks. Points further than `gate` from the plane or
/// deeper than `gate` into an opening are ignored, as are points far enough
/// inside the solid region to contribute nothing.
pub fn refine_in_plane(
    cloud: &PointCloud,
    model: &RackModel,
    pose: &RigidTransform,
    gate: f64,
) -> RigidTransform {
    let inv = pose.inverse();
    let top = model.top_height();
    let local: Vec<Point2<f64>> = cloud
        .points
        .iter()
        .map(|p| inv.apply(p))
        .filter(|q| (q.z - top).abs() <= gate)
        .map(|q| Point2::new(q.x, q.y))
        .collect();
    if local.len() < 3 {
        return *pose;
    }

    let mut x = Vector3::zeros();
    for tau in SOFTNESS {
        let active = active_points(model, &local, &x, -BAND * tau, gate);
        if active.len() < 3 {
            break;
        }
        let mut damping = 1e-3;
        let (mut f, mut g, mut h) = objective(model, &active, &x, tau);
        for _ in 0..MAX_STEPS {
            let mut a = h;
            for i in 0..3 {
                a[(i, i)] += damping * h[(i, i)].max(f64::MIN_POSITIVE);
            }
            let Some(step) = a.try_inverse().map(|ai| -(ai * g)) else {
                break;
            };
            let candidate = x + step;
            let (fc, gc, hc) = objective(model, &active, &candidate, tau);
            if fc < f {
                x = candidate;
                (f, g, h) = (fc, gc, hc);
                damping = (damping / 3.0).max(1e-9);
                if step.xy().norm() < 1e-9 && step.z.abs() < 1e-8 {
                    break;
                }
            } else {
                damping *= 4.0;
                if damping > 1e6 {
                    break;
                }
            }
        }
    }
    let correction = RigidTransform::new(
        Rotation3::from_axis_angle(&Vector3::z_axis(), x.z),
        Vector3::new(x.x, x.y, 0.0),
    );
    pose.compose(&correction.inverse())
}

fn moved(u: &Point2<f64>, x: &Vector3<f64>) -> Point2<f64> {
    let (s, c) = x.z.sin_cos();
    Point2::new(c * u.x - s * u.y + x.x, s * u.x + c * u.y + x.y)
}

/// Points whose signed distance at the current correction lies in `[lo, hi]`.
fn active_points(model: &RackModel, local: &[Point2<f64>], x: &Vector3<f64>, lo: f64, hi: f64) -> Vec<Point2<f64>> {
    local
        .iter()
        .filter(|u| (lo..=hi).contains(&model.void_distance(&moved(u, x)).0))
        .copied()
        .collect()
}

/// Total penalty with its gradient and Gauss-Newton Hessian.
fn objective(
    model: &RackModel,
    points: &[Point2<f64>],
    x: &Vector3<f64>,
    tau: f64,
) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let mut f = 0.0;
    let mut g = Vector3::zeros();
    let mut h = Matrix3::zeros();
    for u in points {
        let v = moved(u, x);
        let (d, n) = model.void_distance(&v);
        let z = d / tau;
        let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        let sigma = 1.0 / (1.0 + (-z).exp());
        // d(v)/d(yaw) is the moved point rotated a quarter turn about the correction origin
        let j = Vector3::new(n.x, n.y, n.y * (v.x - x.x) - n.x * (v.y - x.y));
        f += tau * softplus;
        g += j * sigma;
        h += j * j.transpose() * (sigma * (1.0 - sigma) / tau);
    }
    (f, g, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registration::RackParams;

    #[test]
    fn recovers_small_in_plane_offset_on_template() {
        let m = RackModel::new(RackParams::default()).unwrap();
        let truth = RigidTransform::from_rpy(Vector3::new(0.01, -0.02, 0.3), 0.01, -0.02, 0.7);
        let cloud = m.template.transformed(&truth);
        let start = truth.compose(&RigidTransform::from_rpy(Vector3::new(0.0003, -0.0002, 0.0), 0.0, 0.0, 0.002));
        let out = refine_in_plane(&cloud, &m, &start, 0.005);
        assert!(out.translation_distance_to(&truth) < 1e-5, "{}", out.translation_distance_to(&truth));
        assert!(out.rotation_angle_to(&truth).to_degrees() < 1e-3);
    }

    /// Template without the points sitting exactly on an opening corner:
    /// moving such a point in any outward direction lowers its distance, so
    /// they make the exact pose a (tiny) local maximum.
    fn template_without_corners(m: &RackModel) -> PointCloud {
        let (hx, hy) = (m.half_length(), m.half_width());
        m.template
            .points
            .iter()
            .filter(|p| {
                !m.slot_centers.iter().any(|c| {
                    ((p.x - c.x).abs() - hx).abs() < 1e-9 && ((p.y - c.y).abs() - hy).abs() < 1e-9
                })
            })
            .copied()
            .collect()
    }

    #[test]
    fn exact_pose_is_a_fixed_point() {
        let m = RackModel::new(RackParams::default()).unwrap();
        let truth = RigidTransform::from_rpy(Vector3::new(0.1, 0.0, 0.5), 0.0, 0.0, -1.0);
        let cloud = template_without_corners(&m).transformed(&truth);
        let out = refine_in_plane(&cloud, &m, &truth, 0.005);
        assert!(out.translation_distance_to(&truth) < 1e-9, "{} {}", out.translation_distance_to(&truth), out.rotation_angle_to(&truth));
        assert!(out.rotation_angle_to(&truth) < 1e-9);
    }

    #[test]
    fn too_few_points_leave_pose_unchanged() {
        let m = RackModel::new(RackParams::default()).unwrap();
        let pose = RigidTransform::from_rpy(Vector3::new(0.0, 0.0, 1.0), 0.0, 0.0, 0.0);
        assert_eq!(refine_in_plane(&PointCloud::default(), &m, &pose, 0.005), pose);
    }
}
