//! Rack pose estimation: oriented-bounding-box seeds refined by ICP against
//! the analytic top-surface template, then an in-plane edge refinement.

mod icp;
mod rack;
mod refine;

use nalgebra::{Matrix3, Point2, Rotation3, SymmetricEigen, Vector3};

pub use icp::{best_fit_transform, icp, icp_with_tree, IcpParams, IcpResult};
pub use rack::{RackModel, RackParams};
pub use refine::refine_in_plane;

use crate::error::{Error, Result};
use crate::geometry::{min_area_rect_2d, PointCloud, RigidTransform};
use crate::kdtree::KdTree;

pub use crate::kdtree::nearest_neighbor_index;

#[derive(Debug, Clone)]
pub struct RackPoseEstimate {
    /// Rack frame to world.
    pub pose: RigidTransform,
    /// Truncated RMSE of the winning ICP run (see [`IcpResult::rmse`]).
    pub rmse: f64,
    pub inlier_rmse: f64,
    pub inlier_fraction: f64,
    pub hypothesis_index: usize,
    /// Final truncated RMSE of every hypothesis, `INFINITY` where ICP failed.
    pub hypothesis_rmse: Vec<f64>,
}

/// Least-squares plane through the cloud: centroid and unit normal, with the
/// normal oriented towards world +z (the sensor looks down on the rack).
pub fn fit_plane(cloud: &PointCloud) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let c = cloud
        .centroid()
        .ok_or(Error::EmptyCloud)?
        .coords;
    let mut cov = Matrix3::zeros();
    for p in cloud.iter() {
        let d = p.coords - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / cloud.len() as f64);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let mut n: Vector3<f64> = eig.eigenvectors.column(imin).into_owned().normalize();
    if n.z < 0.0 {
        n = -n;
    }
    Ok((c, n))
}

/// Four seed poses for the template: the minimum-area rectangle of the cloud
/// projected onto its dominant plane, at yaw offsets of 0, 90, 180 and 270
/// degrees.
pub fn obb_init_hypotheses(rack_cloud: &PointCloud, model: &RackModel) -> Result<Vec<RigidTransform>> {
    if rack_cloud.len() < 3 {
        return Err(Error::degenerate("rack cloud needs at least 3 points"));
    }
    let (c, n) = fit_plane(rack_cloud)?;
    // in-plane basis anchored to world x (world y if x is nearly normal)
    let seed = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = (seed - n * n.dot(&seed)).normalize();
    let v = n.cross(&u);

    let projected: Vec<Point2<f64>> = rack_cloud
        .iter()
        .map(|p| {
            let d = p.coords - c;
            Point2::new(d.dot(&u), d.dot(&v))
        })
        .collect();
    let rect = min_area_rect_2d(&projected)?;
    let (a1, _) = rect.axes();
    let e1 = u * a1.x + v * a1.y;
    let center = c + u * rect.center.x + v * rect.center.y;
    let top = Vector3::new(0.0, 0.0, model.top_height());

    Ok((0..4)
        .map(|k| {
            let x_axis = Rotation3::from_axis_angle(
                &nalgebra::Unit::new_unchecked(n),
                k as f64 * std::f64::consts::FRAC_PI_2,
            ) * e1;
            let y_axis = n.cross(&x_axis);
            let r = Matrix3::from_columns(&[x_axis, y_axis, n]);
            let rotation = Rotation3::from_matrix_unchecked(r);
            RigidTransform::new(rotation, center - rotation * top)
        })
        .collect())
}

/// Truncated RMSE, m, below which the ICP winner is taken as exact.
const EXACT_FIT: f64 = 1e-9;

/// Refines every OBB hypothesis with ICP, keeps the lowest truncated RMSE
/// (ties go to the lower hypothesis index) and sharpens the winner with
/// [`refine_in_plane`] unless it already fits exactly. The reported
/// residuals are those of the ICP run.
pub fn estimate_rack_pose(
    rack_cloud: &PointCloud,
    model: &RackModel,
    params: &IcpParams,
) -> Result<RackPoseEstimate> {
    if rack_cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    params.validate()?;
    let hypotheses = obb_init_hypotheses(rack_cloud, model)?;
    let tree = KdTree::build(rack_cloud)?;

    let results: Vec<Result<IcpResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = hypotheses
            .iter()
            .map(|init| {
                let tree = &tree;
                s.spawn(move || icp_with_tree(&model.template, tree, init, params))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ICP worker panicked"))
            .collect()
    });

    let hypothesis_rmse: Vec<f64> = results
        .iter()
        .map(|r| r.as_ref().map_or(f64::INFINITY, |r| r.rmse))
        .collect();
    let mut best: Option<(usize, &IcpResult)> = None;
    for (i, r) in results.iter().enumerate() {
        if let Ok(r) = r {
            if best.is_none_or(|(_, b)| r.rmse < b.rmse) {
                best = Some((i, r));
            }
        }
    }
    let Some((hypothesis_index, winner)) = best else {
        // every hypothesis failed; surface the first error
        return Err(results.into_iter().find_map(|r| r.err()).unwrap());
    };
    // An exact match needs no sharpening, and points lying exactly on opening
    // corners would only pull the refinement off it.
    let pose = if winner.rmse <= EXACT_FIT {
        winner.pose
    } else {
        refine_in_plane(rack_cloud, model, &winner.pose, params.max_correspondence_distance)
    };
    Ok(RackPoseEstimate {
        pose,
        rmse: winner.rmse,
        inlier_rmse: winner.inlier_rmse,
        inlier_fraction: winner.inlier_fraction,
        hypothesis_index,
        hypothesis_rmse,
    })
}
