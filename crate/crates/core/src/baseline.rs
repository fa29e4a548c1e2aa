//! Unconstrained ICP fit of a full cylinder template: the comparison method
//! that ignores the slot prior.

use nalgebra::{Point3, Vector3};

use crate::error::Result;
use crate::geometry::{tilt_from_axis, PointCloud, RigidTransform, TiltAngles};
use crate::registration::{icp, IcpParams};
use crate::tube::TubeSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineFit {
    /// Template frame (axis along +z from the bottom centre) to world.
    pub pose: RigidTransform,
    pub angles: TiltAngles,
    pub rmse: f64,
}

/// Deterministic template: rings every `spacing` along the axis, plus the
/// cap disc for capped classes.
pub fn cylinder_template(spec: &TubeSpec, spacing: f64) -> PointCloud {
    let r = spec.radius;
    let n_ring = ((std::f64::consts::TAU * r / spacing).ceil() as usize).max(8);
    let n_axial = ((spec.length / spacing).ceil() as usize).max(1);
    let mut points = Vec::with_capacity(n_ring * (n_axial + 1));
    for k in 0..=n_axial {
        let z = spec.length * k as f64 / n_axial as f64;
        for i in 0..n_ring {
            let t = std::f64::consts::TAU * i as f64 / n_ring as f64;
            points.push(Point3::new(r * t.cos(), r * t.sin(), z));
        }
    }
    if spec.capped {
        let rings = (r / spacing).ceil() as usize;
        points.push(Point3::new(0.0, 0.0, spec.length));
        for j in 1..rings {
            let rho = r * j as f64 / rings as f64;
            let n = ((std::f64::consts::TAU * rho / spacing).ceil() as usize).max(6);
            for i in 0..n {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                points.push(Point3::new(rho * t.cos(), rho * t.sin(), spec.length));
            }
        }
    }
    PointCloud::new(points)
}

/// Registers the observed tube cloud onto a full cylinder template by ICP,
/// starting upright in `up_frame` with the template centred on the cloud
/// centroid.
pub fn icp_baseline(
    cloud: &PointCloud,
    spec: &TubeSpec,
    up_frame: &RigidTransform,
    params: &IcpParams,
) -> Result<BaselineFit> {
    spec.validate()?;
    let template = cylinder_template(spec, 0.001);
    let centroid = cloud.centroid().ok_or(crate::Error::EmptyCloud)?;
    let rotation = up_frame.rotation;
    let mid = Vector3::new(0.0, 0.0, 0.5 * spec.length);
    // template -> world at the start
    let init = RigidTransform::new(rotation, centroid.coords - rotation * mid);
    // ICP moves the observation onto the template, so start from the inverse
    let res = icp(cloud, &template, &init.inverse(), params)?;
    let pose = res.pose.inverse();
    Ok(BaselineFit {
        pose,
        angles: tilt_from_axis(&(pose.rotation * Vector3::z())),
        rmse: res.rmse,
    })
}
