//! Cloud preprocessing: voxel-grid downsampling and statistical outlier removal.

use nalgebra::{Point3, Vector3};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::kdtree::KdTree;

/// Replaces the points of every occupied voxel with their centroid.
///
/// Non-finite points are dropped. Output is ordered by voxel key, so the
/// result does not depend on input order.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> Result<PointCloud> {
    if !(voxel > 0.0 && voxel.is_finite()) {
        return Err(Error::invalid(format!("voxel size must be positive, got {voxel}")));
    }
    let mut cells: BTreeMap<[i64; 3], (Vector3<f64>, usize)> = BTreeMap::new();
    for p in cloud.finite().iter() {
        let key = [
            (p.x / voxel).floor() as i64,
            (p.y / voxel).floor() as i64,
            (p.z / voxel).floor() as i64,
        ];
        let cell = cells.entry(key).or_insert((Vector3::zeros(), 0));
        cell.0 += p.coords;
        cell.1 += 1;
    }
    Ok(cells
        .into_values()
        .map(|(sum, n)| Point3::from(sum / n as f64))
        .collect())
}

/// Per-point mean distance to the `k` nearest other points.
fn mean_neighbor_distances(cloud: &PointCloud, k: usize) -> Result<Vec<f64>> {
    let tree = KdTree::build(cloud)?;
    Ok(cloud
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let hits = tree.k_nearest(p, k + 1);
            let sum: f64 = hits
                .iter()
                .filter(|n| n.index != i)
                .take(k)
                .map(|n| n.distance())
                .sum();
            sum / k as f64
        })
        .collect())
}

/// Statistical outlier filter: drops points whose mean distance to their `k`
/// nearest neighbours exceeds `mean + std_ratio * std` over the cloud.
/// Surviving points keep their relative order.
pub fn remove_outliers(cloud: &PointCloud, k: usize, std_ratio: f64) -> Result<PointCloud> {
    Ok(cloud.select(&inlier_indices(cloud, k, std_ratio)?))
}

/// Indices kept by [`remove_outliers`].
pub fn inlier_indices(cloud: &PointCloud, k: usize, std_ratio: f64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(std_ratio >= 0.0 && std_ratio.is_finite()) {
        return Err(Error::invalid(format!("std_ratio must be non-negative, got {std_ratio}")));
    }
    if cloud.len() <= k {
        return Err(Error::invalid(format!(
            "outlier removal needs more than k = {k} points, got {}",
            cloud.len()
        )));
    }
    let dists = mean_neighbor_distances(cloud, k)?;
    let n = dists.len() as f64;
    let mean = dists.iter().sum::<f64>() / n;
    let var = dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let threshold = mean + std_ratio * var.sqrt();
    Ok(dists
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= threshold)
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_voxel_collapses_to_centroid() {
        let pts: PointCloud = (0..8)
            .map(|i| Point3::new((i & 1) as f64 * 0.1, ((i >> 1) & 1) as f64 * 0.1, (i >> 2) as f64 * 0.1))
            .collect();
        let out = voxel_downsample(&pts, 1.0).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out.points[0] - Point3::new(0.05, 0.05, 0.05)).norm() < 1e-15);
    }

    #[test]
    fn sparse_points_survive() {
        let pts: PointCloud = (0..5).map(|i| Point3::new(i as f64 + 0.5, 0.5, 0.5)).collect();
        let out = voxel_downsample(&pts, 1.0).unwrap();
        let mut got = out.points.clone();
        let mut want = pts.points.clone();
        got.sort_by(|a, b| a.x.total_cmp(&b.x));
        want.sort_by(|a, b| a.x.total_cmp(&b.x));
        assert_eq!(got, want);
    }

    #[test]
    fn cube_cell_count_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cloud: PointCloud = (0..10_000)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let out = voxel_downsample(&cloud, 0.1).unwrap();
        assert!(out.len() <= 1000);
        assert!(out.len() > 900);
    }

    #[test]
    fn bad_voxel_size() {
        let cloud = PointCloud::new(vec![Point3::origin()]);
        assert!(matches!(voxel_downsample(&cloud, 0.0), Err(Error::InvalidParameter(_))));
        assert!(voxel_downsample(&cloud, -1.0).is_err());
        assert!(voxel_downsample(&cloud, f64::NAN).is_err());
    }

    #[test]
    fn far_point_is_removed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pts: Vec<_> = (0..200)
            .map(|_| Point3::new(rng.random::<f64>() * 0.01, rng.random::<f64>() * 0.01, 0.0))
            .collect();
        pts.push(Point3::new(1.0, 1.0, 1.0));
        let out = remove_outliers(&PointCloud::new(pts), 10, 1.0).unwrap();
        assert!(out.iter().all(|p| p.x < 0.5));
        assert!(out.len() >= 150);
    }

    #[test]
    fn uniform_ring_is_untouched() {
        // equally spaced points on a closed ring: every point sees the same neighbourhood
        let n = 360;
        let cloud: PointCloud = (0..n)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / n as f64;
                Point3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        let out = remove_outliers(&cloud, 6, 2.0).unwrap();
        assert_eq!(out.len(), n);
    }

    #[test]
    fn injected_outliers_are_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let spacing = 0.001;
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                pts.push(Point3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
                labels.push(false);
            }
        }
        let n_out = pts.len() / 20;
        for _ in 0..n_out {
            // scattered well away from the cluster, about 10x the lattice spacing apart
            let p = Point3::new(
                rng.random_range(-0.6..0.6),
                rng.random_range(-0.6..0.6),
                rng.random_range(0.05..0.6),
            );
            pts.push(p);
            labels.push(true);
        }
        let cloud = PointCloud::new(pts);
        let kept = inlier_indices(&cloud, 20, 2.0).unwrap();
        let kept_outliers = kept.iter().filter(|&&i| labels[i]).count();
        assert!((n_out - kept_outliers) as f64 >= 0.9 * n_out as f64, "kept {kept_outliers} of {n_out}");
    }

    #[test]
    fn outlier_parameter_errors() {
        let cloud: PointCloud = (0..5).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(remove_outliers(&cloud, 0, 1.0).is_err());
        assert!(remove_outliers(&cloud, 5, 1.0).is_err());
        assert!(remove_outliers(&cloud, 2, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn voxel_output_is_cell_centroids(
            pts in prop::collection::vec(prop::array::uniform3(-1.0..1.0f64), 1..200),
            voxel in 0.05..0.5f64,
        ) {
            let cloud: PointCloud = pts.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect();
            let out = voxel_downsample(&cloud, voxel).unwrap();
            prop_assert!(out.len() <= cloud.len());
            for c in out.iter() {
                let key = |p: &Point3<f64>| [(p.x / voxel).floor(), (p.y / voxel).floor(), (p.z / voxel).floor()];
                let members: Vec<_> = cloud.iter().filter(|p| key(p) == key(c)).collect();
                prop_assert!(!members.is_empty());
                let mean = members.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / members.len() as f64;
                prop_assert!((mean - c.coords).norm() < 1e-12);
            }
        }

        #[test]
        fn outlier_output_is_subset(
            pts in prop::collection::vec(prop::array::uniform3(-1.0..1.0f64), 12..120),
        ) {
            let cloud: PointCloud = pts.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect();
            let idx = inlier_indices(&cloud, 5, 1.0).unwrap();
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            let out = remove_outliers(&cloud, 5, 1.0).unwrap();
            for (i, p) in idx.iter().zip(out.iter()) {
                prop_assert_eq!(cloud.points[*i], *p);
            }
        }
    }
}
