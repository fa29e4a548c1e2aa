use nalgebra::{Matrix3, Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, RigidTransform};
use crate::kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop once the relative drop of the truncated RMSE falls below this.
    pub convergence_epsilon: f64,
    pub max_correspondence_distance: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_epsilon: 1e-6,
            max_correspondence_distance: 0.005,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        if !(self.convergence_epsilon > 0.0) || !(self.max_correspondence_distance > 0.0) {
            return Err(Error::invalid(
                "convergence_epsilon and max_correspondence_distance must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IcpResult {
    pub pose: RigidTransform,
    /// Truncated RMSE: every source point contributes `min(d, gate)^2`.
    /// This is the quantity ICP decreases monotonically.
    pub rmse: f64,
    /// RMSE over the correspondences inside the gate only.
    pub inlier_rmse: f64,
    pub inlier_fraction: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Truncated RMSE at the initial pose and after every accepted iteration.
    pub history: Vec<f64>,
}

struct Matching {
    /// (source index, target index) pairs inside the gate.
    pairs: Vec<(usize, usize)>,
    inlier_sq_sum: f64,
    truncated_mse: f64,
}

fn match_points(
    source: &PointCloud,
    tree: &KdTree,
    pose: &RigidTransform,
    gate: f64,
) -> Matching {
    let gate_sq = gate * gate;
    let mut pairs = Vec::with_capacity(source.len());
    let mut inlier_sq_sum = 0.0;
    let mut total = 0.0;
    for (i, p) in source.iter().enumerate() {
        match tree.nearest_within(&pose.apply(p), gate_sq) {
            Some(hit) => {
                pairs.push((i, hit.index));
                inlier_sq_sum += hit.dist_sq;
                total += hit.dist_sq;
            }
            None => total += gate_sq,
        }
    }
    Matching {
        pairs,
        inlier_sq_sum,
        truncated_mse: total / source.len() as f64,
    }
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]`
/// (cross-covariance SVD with reflection correction).
pub fn best_fit_transform(src: &[Point3<f64>], dst: &[Point3<f64>]) -> Option<RigidTransform> {
    if src.len() != dst.len() || src.is_empty() {
        return None;
    }
    let n = src.len() as f64;
    let cs = src.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let cd = dst.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s.coords - cs) * (d.coords - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let v = v_t.transpose();
    let sign = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign));
    let r = v * correction * u.transpose();
    let rotation = Rotation3::from_matrix_unchecked(r);
    let translation = cd - rotation * cs;
    Some(RigidTransform::new(rotation, translation))
}

/// Point-to-point ICP aligning `source` onto `target`, starting at `init`.
pub fn icp(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult> {
    let tree = KdTree::build(target)?;
    icp_with_tree(source, &tree, init, params)
}

/// [`icp`] against a prebuilt target tree.
pub fn icp_with_tree(
    source: &PointCloud,
    tree: &KdTree,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult> {
    params.validate()?;
    if source.is_empty() || tree.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let gate = params.max_correspondence_distance;
    let target = tree.points();

    let mut pose = *init;
    let mut matching = match_points(source, tree, &pose, gate);
    if matching.pairs.is_empty() {
        return Err(Error::NoCorrespondences { max_distance: gate });
    }
    let mut history = vec![matching.truncated_mse.sqrt()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iterations {
        if matching.pairs.len() < 3 {
            break;
        }
        let src: Vec<_> = matching.pairs.iter().map(|&(i, _)| source.points[i]).collect();
        let dst: Vec<_> = matching.pairs.iter().map(|&(_, j)| target[j]).collect();
        let Some(candidate) = best_fit_transform(&src, &dst) else {
            break;
        };
        let next = match_points(source, tree, &candidate, gate);
        iterations += 1;
        let prev = matching.truncated_mse;
        if next.truncated_mse > prev {
            // only reachable through rounding; keep the better pose
            converged = true;
            break;
        }
        pose = candidate;
        matching = next;
        history.push(matching.truncated_mse.sqrt());
        let (prev_rmse, cur_rmse) = (prev.sqrt(), matching.truncated_mse.sqrt());
        if cur_rmse == 0.0 || (prev_rmse - cur_rmse) / prev_rmse < params.convergence_epsilon {
            converged = true;
            break;
        }
    }

    let n_in = matching.pairs.len();
    Ok(IcpResult {
        pose,
        rmse: matching.truncated_mse.sqrt(),
        inlier_rmse: if n_in > 0 {
            (matching.inlier_sq_sum / n_in as f64).sqrt()
        } else {
            0.0
        },
        inlier_fraction: n_in as f64 / source.len() as f64,
        iterations,
        converged,
        history,
    })
}
