//! Tube pose estimation against the rack: slot assignment by hull overlap,
//! then a tilt fit about the slot's bottom centre, gated by slot containment
//! and residual size.

mod feasibility;
mod fit;
mod slot;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

pub use feasibility::{boundary_angle, containment_extent, feasibility_check};
pub use fit::{fit_tube_tilt, radial_objective, FitOptions, RadialObjective, ResidualMode, TiltFit};
pub use slot::{assign_slot, project_hull_to_rack_top, rank_slots, slot_origin, SlotAssignment};

use crate::error::{Error, Result};
use crate::geometry::{
    orthonormality_error, rotation_from_tilt, tilt_from_axis, PointCloud, RigidTransform, TiltAngles,
};
use crate::registration::{RackModel, RackPoseEstimate};

/// A tube class: radius and physical length in meters. Capped classes carry
/// an opaque cap disc on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeSpec {
    pub class_id: String,
    pub radius: f64,
    pub length: f64,
    #[serde(default)]
    pub capped: bool,
}

impl TubeSpec {
    pub fn new(class_id: impl Into<String>, radius: f64, length: f64, capped: bool) -> Self {
        Self {
            class_id: class_id.into(),
            radius,
            length,
            capped,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) || !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid(format!(
                "tube class `{}` needs positive radius and length",
                self.class_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TubeDetection {
    pub spec: TubeSpec,
    /// World-frame points of this tube only.
    pub cloud: PointCloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TubeStatus {
    Ok,
    RejectedInfeasible,
    RejectedDegenerate,
}

impl TubeStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TubeStatus::Ok => "OK",
            TubeStatus::RejectedInfeasible => "REJECTED_INFEASIBLE",
            TubeStatus::RejectedDegenerate => "REJECTED_DEGENERATE",
        }
    }
}

/// Result of the tilt fit for one tube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeFit {
    /// World-frame tilt.
    pub angles: TiltAngles,
    /// Slot bottom centre, world frame.
    pub origin: Point3<f64>,
    /// `[R(angles) | origin]`.
    pub pose: RigidTransform,
    /// Mean absolute radial deviation, m.
    pub residual: f64,
    /// Tilt relative to the rack, as checked for feasibility.
    pub rack_angles: TiltAngles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubePoseEstimate {
    pub slot: Option<SlotAssignment>,
    /// Present whenever a slot was found and the fit ran, including rejected
    /// tubes (kept for diagnostics).
    pub fit: Option<TubeFit>,
    pub feasible: bool,
    pub status: TubeStatus,
    pub message: Option<String>,
}

impl TubePoseEstimate {
    fn degenerate(slot: Option<SlotAssignment>, message: String) -> Self {
        Self {
            slot,
            fit: None,
            feasible: false,
            status: TubeStatus::RejectedDegenerate,
            message: Some(message),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == TubeStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeEstimateOptions {
    pub fit: FitOptions,
    /// Fits whose mean absolute residual exceeds this are rejected, m.
    pub max_residual: f64,
    /// Number of slots, by hull overlap, in which the tilt is fitted. A tall
    /// tilted tube can project more area over a neighbouring opening than
    /// over its own, so the accepted fit with the lowest residual wins. With
    /// 1 the largest overlap decides alone.
    pub slot_candidates: usize,
}

impl Default for TubeEstimateOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            max_residual: 0.002,
            slot_candidates: 2,
        }
    }
}

/// Homogeneous tube pose: rotation from the tilt, translation at the origin.
pub fn assemble_pose(angles: TiltAngles, origin: &Point3<f64>) -> RigidTransform {
    RigidTransform::new(rotation_from_tilt(angles), origin.coords)
}

/// Inverse of [`assemble_pose`] for `|alpha| < pi/2`; any rotation about the
/// tube axis is ignored.
pub fn decompose_pose(pose: &RigidTransform) -> (TiltAngles, Point3<f64>) {
    let axis = pose.rotation * Vector3::z();
    (tilt_from_axis(&axis), Point3::from(pose.translation))
}

/// Re-expresses a world-frame tilt in the rack frame.
pub fn rack_relative_tilt(angles: TiltAngles, rack_pose: &RigidTransform) -> TiltAngles {
    let world_axis = crate::geometry::axis_direction(angles);
    tilt_from_axis(&(rack_pose.rotation.inverse() * world_axis))
}

/// Estimates one tube. Never fails: problems become a rejected status.
pub fn estimate_tube(
    detection: &TubeDetection,
    rack_pose: &RigidTransform,
    model: &RackModel,
    options: &TubeEstimateOptions,
) -> TubePoseEstimate {
    let cloud = detection.cloud.finite();
    if cloud.len() < options.fit.min_points.max(3) {
        return TubePoseEstimate::degenerate(
            None,
            format!("tube cloud has {} points, need at least {}", cloud.len(), options.fit.min_points),
        );
    }
    let slots = match project_hull_to_rack_top(&cloud, rack_pose)
        .and_then(|hull| rank_slots(&hull, model, options.slot_candidates.max(1)))
    {
        Ok(slots) if !slots.is_empty() => slots,
        Ok(_) => return TubePoseEstimate::degenerate(None, Error::NoOverlap.to_string()),
        Err(e) => return TubePoseEstimate::degenerate(None, e.to_string()),
    };
    let mut estimates = slots
        .into_iter()
        .map(|slot| fit_in_slot(&cloud, &detection.spec, slot, rack_pose, model, options));
    let first = estimates.next().expect("at least one candidate slot");
    let residual = |e: &TubePoseEstimate| e.fit.map_or(f64::INFINITY, |f| f.residual);
    estimates
        .filter(TubePoseEstimate::is_ok)
        .fold(first, |best, e| {
            if !best.is_ok() || residual(&e) < residual(&best) {
                e
            } else {
                best
            }
        })
}

fn fit_in_slot(
    cloud: &PointCloud,
    spec: &TubeSpec,
    slot: SlotAssignment,
    rack_pose: &RigidTransform,
    model: &RackModel,
    options: &TubeEstimateOptions,
) -> TubePoseEstimate {
    let origin = match slot_origin(model, rack_pose, slot.slot_index) {
        Ok(o) => o,
        Err(e) => return TubePoseEstimate::degenerate(Some(slot), e.to_string()),
    };

    let mut fit_options = options.fit;
    // search around the rack normal so a tilted rack keeps its tubes inside the grid
    fit_options.grid_center = tilt_from_axis(&(rack_pose.rotation * Vector3::z()));
    let tilt = match fit_tube_tilt(cloud, &origin, spec.radius, &fit_options) {
        Ok(t) => t,
        Err(e) => return TubePoseEstimate::degenerate(Some(slot), e.to_string()),
    };

    let rack_angles = rack_relative_tilt(tilt.angles, rack_pose);
    let fit = TubeFit {
        angles: tilt.angles,
        origin,
        pose: assemble_pose(tilt.angles, &origin),
        residual: tilt.residual,
        rack_angles,
    };
    let feasible = match feasibility_check(rack_angles, spec.radius, model) {
        Ok(f) => f,
        Err(e) => {
            return TubePoseEstimate {
                fit: Some(fit),
                ..TubePoseEstimate::degenerate(Some(slot), e.to_string())
            }
        }
    };
    let (status, message) = if !feasible {
        (
            TubeStatus::RejectedInfeasible,
            Some("fitted tilt does not fit inside the slot".to_string()),
        )
    } else if tilt.residual > options.max_residual {
        (
            TubeStatus::RejectedDegenerate,
            Some(format!(
                "residual {:.3} mm exceeds {:.3} mm",
                tilt.residual * 1e3,
                options.max_residual * 1e3
            )),
        )
    } else {
        (TubeStatus::Ok, None)
    };
    TubePoseEstimate {
        slot: Some(slot),
        fit: Some(fit),
        feasible,
        status,
        message,
    }
}

/// Estimates every detection against the rack. Output order matches input
/// order; per-tube failures are reported in the status and never abort the
/// batch.
pub fn estimate_tubes(
    detections: &[TubeDetection],
    rack: &RackPoseEstimate,
    model: &RackModel,
    options: &TubeEstimateOptions,
) -> Result<Vec<TubePoseEstimate>> {
    let pose = &rack.pose;
    let finite = pose.translation.iter().chain(pose.rotation.matrix().iter()).all(|v| v.is_finite());
    let (ortho, det) = orthonormality_error(pose.rotation.matrix());
    if !finite || ortho > 1e-6 || det > 1e-6 {
        return Err(Error::invalid("rack pose is not a valid rigid transform"));
    }
    Ok(detections
        .iter()
        .map(|d| estimate_tube(d, pose, model, options))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{axis_direction, Polygon2, Rect2};
    use crate::registration::RackParams;
    use nalgebra::Point2;
    use proptest::prelude::*;

    fn model() -> RackModel {
        RackModel::new(RackParams::default()).unwrap()
    }

    fn model_with(l: f64, w: f64, h: f64) -> RackModel {
        let p = RackParams {
            half_length: l,
            half_width: w,
            slot_depth: h,
            rows: 2,
            cols: 2,
            pitch_x: 2.0 * l + 0.004,
            pitch_y: 2.0 * w + 0.004,
            grid_offset: [0.0, 0.0],
            outer_half_extents: [2.0 * l + 0.01, 2.0 * w + 0.01],
            top_height: h,
            template_spacing: 0.002,
        };
        RackModel::new(p).unwrap()
    }

    #[test]
    fn upright_is_feasible() {
        let m = model_with(0.0085, 0.0085, 0.05);
        assert!(feasibility_check(TiltAngles::upright(), 0.007, &m).unwrap());
    }

    #[test]
    fn steep_tilt_is_infeasible() {
        let m = model_with(0.0085, 0.0085, 0.05);
        // 50 * tan 45 + 7 / cos 45 = 59.9 mm against 8.5 mm
        let extent = containment_extent(45f64.to_radians(), 0.007, 0.05);
        assert!((extent - (0.05 + 0.007 * 2f64.sqrt())).abs() < 1e-12);
        assert!(!feasibility_check(TiltAngles::from_degrees(45.0, 0.0), 0.007, &m).unwrap());
        assert!(!feasibility_check(TiltAngles::from_degrees(0.0, -45.0), 0.007, &m).unwrap());
    }

    #[test]
    fn boundary_angle_switches_feasibility() {
        let m = model_with(0.0085, 0.0085, 0.05);
        let (r, w, h) = (0.007, 0.0085, 0.05);
        // independent root: Newton on g(a) = h tan a + r / cos a - w
        let mut a: f64 = 0.01;
        for _ in 0..50 {
            let g = h * a.tan() + r / a.cos() - w;
            let dg = h / a.cos().powi(2) + r * a.sin() / a.cos().powi(2);
            a -= g / dg;
        }
        let eps = 1e-7;
        assert!(feasibility_check(TiltAngles::new(a - eps, 0.0), r, &m).unwrap());
        assert!(!feasibility_check(TiltAngles::new(a + eps, 0.0), r, &m).unwrap());
        assert!(feasibility_check(TiltAngles::new(0.0, -(a - eps)), r, &m).unwrap());
        assert!(!feasibility_check(TiltAngles::new(0.0, -(a + eps)), r, &m).unwrap());
        assert!((boundary_angle(r, w, h).unwrap() - a).abs() < 1e-9);
    }

    #[test]
    fn oversized_tube_is_invalid() {
        let m = model_with(0.0085, 0.0085, 0.05);
        assert!(matches!(
            feasibility_check(TiltAngles::upright(), 0.0085, &m),
            Err(Error::InvalidParameter(_))
        ));
    }

    proptest! {
        #[test]
        fn feasibility_is_monotone(
            a in 0.0..1.5f64, b in 0.0..1.5f64, da in 0.0..0.5f64, db in 0.0..0.5f64,
            sa in prop::bool::ANY, sb in prop::bool::ANY,
        ) {
            let m = model();
            let r = 0.006;
            let sign = |s: bool| if s { 1.0 } else { -1.0 };
            let inner = feasibility_check(TiltAngles::new(a, b), r, &m).unwrap();
            let (a2, b2) = ((a + da).min(1.5707), (b + db).min(1.5707));
            let outer = feasibility_check(TiltAngles::new(sign(sa) * a2, sign(sb) * b2), r, &m).unwrap();
            if !inner {
                prop_assert!(!outer);
            }
        }
    }

    #[test]
    fn hull_inside_one_slot() {
        let m = model();
        let c = m.slot_centers[3];
        let hull = Rect2::from_center(c, 0.004, 0.004).to_polygon();
        let a = assign_slot(&hull, &m).unwrap();
        assert_eq!(a.slot_index, 3);
        assert!((a.overlap_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn straddling_hull_goes_to_larger_share() {
        let m = model();
        let (c3, c4) = (m.slot_centers[3], m.slot_centers[4]);
        // slot 3 spans x in [c3 - 10, c3 + 10] mm, slot 4 starts 4 mm later
        let gap_lo = c3.x + 0.010;
        let gap_hi = c4.x - 0.010;
        // 6 mm inside slot 3, 4 mm inside slot 4: a 60 / 40 split of the covered area
        let hull = Rect2::new(Point2::new(gap_lo - 0.006, c3.y - 0.003), Point2::new(gap_hi + 0.004, c3.y + 0.003))
            .to_polygon();
        let a = assign_slot(&hull, &m).unwrap();
        assert_eq!(a.slot_index, 3);
        assert!((a.overlap_area - 0.006 * 0.006).abs() < 1e-15);
        let mirrored = Rect2::new(Point2::new(gap_lo - 0.004, c3.y - 0.003), Point2::new(gap_hi + 0.006, c3.y + 0.003))
            .to_polygon();
        assert_eq!(assign_slot(&mirrored, &m).unwrap().slot_index, 4);
    }

    #[test]
    fn ranking_lists_slots_by_overlap() {
        let m = model();
        let (c3, c4) = (m.slot_centers[3], m.slot_centers[4]);
        let hull = Rect2::new(
            Point2::new(c3.x + 0.004, c3.y - 0.003),
            Point2::new(c4.x - 0.006, c3.y + 0.003),
        )
        .to_polygon();
        let ranked = rank_slots(&hull, &m, 5).unwrap();
        assert_eq!(ranked.iter().map(|a| a.slot_index).collect::<Vec<_>>(), vec![3, 4]);
        assert_eq!(ranked[0], assign_slot(&hull, &m).unwrap());
        assert!(ranked[0].overlap_area > ranked[1].overlap_area);
        assert_eq!(rank_slots(&hull, &m, 1).unwrap().len(), 1);
    }

    #[test]
    fn exact_tie_goes_to_lower_index() {
        let m = model();
        let (c3, c4) = (m.slot_centers[3], m.slot_centers[4]);
        let mid = 0.5 * (c3.x + c4.x);
        let hull = Rect2::new(Point2::new(mid - 0.005, c3.y - 0.002), Point2::new(mid + 0.005, c3.y + 0.002))
            .to_polygon();
        assert_eq!(assign_slot(&hull, &m).unwrap().slot_index, 3);
    }

    #[test]
    fn far_hull_has_no_overlap() {
        let m = model();
        let hull = Rect2::from_center(Point2::new(1.0, 1.0), 0.005, 0.005).to_polygon();
        assert_eq!(assign_slot(&hull, &m).unwrap_err(), Error::NoOverlap);
    }

    proptest! {
        #[test]
        fn assignment_is_translation_consistent(
            slot in 0usize..96, dx in -0.012..0.012f64, dy in -0.012..0.012f64,
            sx in -0.5..0.5f64, sy in -0.5..0.5f64,
        ) {
            let m = model();
            let c = m.slot_centers[slot];
            let hull: Polygon2 = Rect2::from_center(Point2::new(c.x + dx, c.y + dy), 0.006, 0.005).to_polygon();
            let mut shifted = RackParams::default();
            shifted.grid_offset = [shifted.grid_offset[0] + sx, shifted.grid_offset[1] + sy];
            shifted.outer_half_extents = [10.0, 10.0];
            shifted.template_spacing = 0.5;
            let ms = RackModel::new(shifted.clone()).unwrap();
            let mut base = shifted;
            base.grid_offset = RackParams::default().grid_offset;
            let mb = RackModel::new(base).unwrap();
            let a = assign_slot(&hull, &mb);
            let b = assign_slot(&hull.translated(sx, sy), &ms);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.slot_index, b.slot_index);
                    prop_assert!((a.overlap_area - b.overlap_area).abs() < 1e-12);
                }
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }

    #[test]
    fn slot_origin_examples() {
        let mut p = RackParams::default();
        p.top_height = p.slot_depth;
        let m = RackModel::new(p).unwrap();
        let c = m.slot_centers[5];
        let o = slot_origin(&m, &RigidTransform::identity(), 5).unwrap();
        assert!((o - Point3::new(c.x, c.y, 0.0)).norm() < 1e-15);

        let t = Vector3::new(0.1, -0.2, 0.3);
        let o2 = slot_origin(&m, &RigidTransform::from_translation(t), 5).unwrap();
        assert!((o2 - (o + t)).norm() < 1e-15);

        let yaw = RigidTransform::from_rpy(Vector3::zeros(), 0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let o3 = slot_origin(&m, &yaw, 5).unwrap();
        // a quarter turn about z maps (x, y) to (-y, x)
        assert!((o3 - Point3::new(-c.y, c.x, 0.0)).norm() < 1e-15);
        assert!(matches!(slot_origin(&m, &yaw, 96), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn assemble_examples() {
        let id = assemble_pose(TiltAngles::upright(), &Point3::origin());
        assert_eq!(id, RigidTransform::identity());
        let angles = TiltAngles::new(0.2, -0.1);
        let o = Point3::new(0.1, 0.2, 0.3);
        let pose = assemble_pose(angles, &o);
        let top = pose.apply(&Point3::new(0.0, 0.0, 1.0));
        assert!((top - (o + axis_direction(angles))).norm() < 1e-15);
        assert_eq!(pose.rotation, rotation_from_tilt(angles));
    }

    proptest! {
        #[test]
        fn decompose_inverts_assemble(
            a in -1.5..1.5f64, b in -1.5..1.5f64, o in prop::array::uniform3(-1.0..1.0f64),
        ) {
            let angles = TiltAngles::new(a, b);
            let o = Point3::new(o[0], o[1], o[2]);
            let (back, origin) = decompose_pose(&assemble_pose(angles, &o));
            prop_assert!((back.alpha() - a).abs() < 1e-12);
            prop_assert!((back.beta() - b).abs() < 1e-12);
            prop_assert_eq!(origin, o);
        }
    }

    #[test]
    fn vertical_line_is_degenerate() {
        let line: PointCloud = (0..50).map(|i| Point3::new(0.01, 0.02, i as f64 * 0.001)).collect();
        let err = project_hull_to_rack_top(&line, &RigidTransform::identity()).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
    }

    #[test]
    fn empty_batch() {
        let m = model();
        let rack = RackPoseEstimate {
            pose: RigidTransform::identity(),
            rmse: 0.0,
            inlier_rmse: 0.0,
            inlier_fraction: 1.0,
            hypothesis_index: 0,
            hypothesis_rmse: vec![0.0],
        };
        let out = estimate_tubes(&[], &rack, &m, &TubeEstimateOptions::default()).unwrap();
        assert!(out.is_empty());
        let mut bad = rack.clone();
        bad.pose.translation.x = f64::NAN;
        assert!(estimate_tubes(&[], &bad, &m, &TubeEstimateOptions::default()).is_err());
    }
}
