//! End-to-end estimation: preprocessing, rack registration, tube fitting.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::PointCloud;
use crate::preprocess::{remove_outliers, voxel_downsample};
use crate::registration::{estimate_rack_pose, IcpParams, RackModel, RackPoseEstimate};
use crate::tube::{estimate_tubes, TubeDetection, TubeEstimateOptions, TubePoseEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessOptions {
    /// Voxel edge for downsampling, m. Off by default.
    pub voxel: Option<f64>,
    /// Neighbour count of the statistical outlier filter; 0 disables it.
    pub outlier_k: usize,
    pub outlier_std_ratio: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            voxel: None,
            outlier_k: 20,
            outlier_std_ratio: 2.0,
        }
    }
}

/// Drops non-finite points, then downsamples and filters outliers as
/// configured. Clouds too small for the outlier filter pass through it
/// unchanged.
pub fn preprocess_cloud(cloud: &PointCloud, options: &PreprocessOptions) -> Result<PointCloud> {
    let mut out = cloud.finite();
    if let Some(voxel) = options.voxel {
        out = voxel_downsample(&out, voxel)?;
    }
    if options.outlier_k > 0 && out.len() > options.outlier_k {
        out = remove_outliers(&out, options.outlier_k, options.outlier_std_ratio)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PipelineOptions {
    pub preprocess: PreprocessOptions,
    pub icp: IcpParams,
    pub tubes: TubeEstimateOptions,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub preprocess: Duration,
    pub rack: Duration,
    pub tubes: Duration,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub rack: RackPoseEstimate,
    /// One entry per detection, in input order.
    pub tubes: Vec<TubePoseEstimate>,
    pub timings: StageTimings,
}

/// Runs the whole estimate on a rack crop and per-tube detections.
pub fn run_pipeline(
    rack_cloud: &PointCloud,
    detections: &[TubeDetection],
    model: &RackModel,
    options: &PipelineOptions,
) -> Result<PipelineOutput> {
    let t0 = Instant::now();
    let rack_cloud = preprocess_cloud(rack_cloud, &options.preprocess)?;
    let detections = detections
        .iter()
        .map(|d| {
            Ok(TubeDetection {
                spec: d.spec.clone(),
                cloud: preprocess_cloud(&d.cloud, &options.preprocess)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t1 = Instant::now();
    let rack = estimate_rack_pose(&rack_cloud, model, &options.icp)?;
    let t2 = Instant::now();
    let tubes = estimate_tubes(&detections, &rack, model, &options.tubes)?;
    let t3 = Instant::now();
    Ok(PipelineOutput {
        rack,
        tubes,
        timings: StageTimings {
            preprocess: t1 - t0,
            rack: t2 - t1,
            tubes: t3 - t2,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    #[test]
    fn preprocessing_drops_non_finite_points() {
        let cloud = PointCloud::new(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(f64::NAN, 0.0, 0.0),
            Point3::new(0.0, f64::INFINITY, 0.0),
        ]);
        let out = preprocess_cloud(&cloud, &PreprocessOptions::default()).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn bad_voxel_is_an_error() {
        let cloud = PointCloud::new(vec![Point3::origin()]);
        let opts = PreprocessOptions {
            voxel: Some(0.0),
            ..PreprocessOptions::default()
        };
        assert!(preprocess_cloud(&cloud, &opts).is_err());
    }
}
