//! JSON file contracts exchanged by the command-line tools.
//!
//! Poses are 4x4 row-major homogeneous matrices in meters; angles are radians.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::PoseRecord;
use crate::geometry::{PointCloud, RigidTransform};
use crate::pipeline::PipelineOutput;
use crate::registration::RackParams;
use crate::synthetic::SyntheticScene;
use crate::tube::{TubeDetection, TubeSpec, TubeStatus};

pub type MatrixRows = [[f64; 4]; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RackDetection {
    pub point_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeDetectionEntry {
    pub class_id: String,
    pub point_indices: Vec<usize>,
}

/// Detector output: which scene points belong to the rack and to each tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionsFile {
    pub rack: RackDetection,
    pub tubes: Vec<TubeDetectionEntry>,
}

impl DetectionsFile {
    pub fn from_scene(scene: &SyntheticScene) -> Self {
        Self {
            rack: RackDetection {
                point_indices: scene.rack_indices.clone().collect(),
            },
            tubes: scene
                .tubes
                .iter()
                .zip(&scene.tube_indices)
                .map(|(t, r)| TubeDetectionEntry {
                    class_id: t.class_id.clone(),
                    point_indices: r.clone().collect(),
                })
                .collect(),
        }
    }

    /// Fails with `IndexOutOfRange` on the first index past `point_count`.
    pub fn validate(&self, point_count: usize) -> Result<()> {
        let all = self
            .rack
            .point_indices
            .iter()
            .chain(self.tubes.iter().flat_map(|t| &t.point_indices));
        for &index in all {
            if index >= point_count {
                return Err(Error::IndexOutOfRange {
                    index,
                    count: point_count,
                });
            }
        }
        Ok(())
    }

    /// Crops the scene into the rack cloud and per-tube detections.
    pub fn resolve(&self, scene: &PointCloud, model: &RackModelFile) -> Result<(PointCloud, Vec<TubeDetection>)> {
        self.validate(scene.len())?;
        let tubes = self
            .tubes
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let spec = model.class(&t.class_id).ok_or_else(|| {
                    Error::invalid(format!("detection {i}: unknown tube class `{}`", t.class_id))
                })?;
                Ok(TubeDetection {
                    spec: spec.clone(),
                    cloud: scene.select(&t.point_indices),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((scene.select(&self.rack.point_indices), tubes))
    }
}

/// Rack geometry plus the tube classes the detector can report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RackModelFile {
    pub rack: RackParams,
    pub tube_classes: Vec<TubeSpec>,
}

impl RackModelFile {
    pub fn class(&self, class_id: &str) -> Option<&TubeSpec> {
        self.tube_classes.iter().find(|c| c.class_id == class_id)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.tube_classes.iter().enumerate() {
            c.validate()?;
            if self.tube_classes[..i].iter().any(|o| o.class_id == c.class_id) {
                return Err(Error::invalid(format!("tube class `{}` listed twice", c.class_id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RackResult {
    pub pose: MatrixRows,
    pub rmse: f64,
    pub inlier_rmse: f64,
    pub inlier_fraction: f64,
    pub hypothesis_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeResult {
    pub detection_index: usize,
    pub class_id: String,
    pub slot_index: Option<usize>,
    pub overlap_fraction: Option<f64>,
    /// World-frame tilt of the fitted axis.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub pose: Option<MatrixRows>,
    /// Mean absolute radial deviation, m.
    pub residual: Option<f64>,
    pub feasible: bool,
    pub status: TubeStatus,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingsMs {
    pub preprocess: f64,
    pub rack: f64,
    pub tubes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub rack: RackResult,
    pub tubes: Vec<TubeResult>,
    /// Wall-clock stage times; excluded from any determinism comparison.
    #[serde(default)]
    pub timings_ms: Option<TimingsMs>,
}

impl ResultsFile {
    pub fn from_output(output: &PipelineOutput, detections: &[TubeDetection]) -> Self {
        let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
        Self {
            rack: RackResult {
                pose: output.rack.pose.to_rows(),
                rmse: output.rack.rmse,
                inlier_rmse: output.rack.inlier_rmse,
                inlier_fraction: output.rack.inlier_fraction,
                hypothesis_index: output.rack.hypothesis_index,
            },
            tubes: output
                .tubes
                .iter()
                .zip(detections)
                .enumerate()
                .map(|(i, (e, d))| TubeResult {
                    detection_index: i,
                    class_id: d.spec.class_id.clone(),
                    slot_index: e.slot.map(|s| s.slot_index),
                    overlap_fraction: e.slot.map(|s| s.overlap_fraction),
                    alpha: e.fit.map(|f| f.angles.alpha()),
                    beta: e.fit.map(|f| f.angles.beta()),
                    pose: e.fit.map(|f| f.pose.to_rows()),
                    residual: e.fit.map(|f| f.residual),
                    feasible: e.feasible,
                    status: e.status,
                    message: e.message.clone(),
                })
                .collect(),
            timings_ms: Some(TimingsMs {
                preprocess: ms(output.timings.preprocess),
                rack: ms(output.timings.rack),
                tubes: ms(output.timings.tubes),
            }),
        }
    }

    /// Every fitted tube (rejected ones included) as an evaluation record.
    pub fn pose_records(&self) -> Result<Vec<PoseRecord>> {
        self.tubes
            .iter()
            .filter_map(|t| t.pose.as_ref().map(|p| (t, p)))
            .map(|(t, p)| {
                Ok(PoseRecord {
                    slot_index: t.slot_index,
                    class_id: t.class_id.clone(),
                    pose: RigidTransform::from_rows(p)?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeTruthEntry {
    pub slot_index: usize,
    pub class_id: String,
    /// World-frame tilt.
    pub alpha: f64,
    pub beta: f64,
    /// Tilt relative to the rack.
    pub rack_alpha: f64,
    pub rack_beta: f64,
    pub pose: MatrixRows,
    pub point_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthFile {
    pub seed: u64,
    /// Total points in the scene cloud.
    pub point_count: usize,
    pub rack_point_count: usize,
    pub rack_pose: MatrixRows,
    pub tubes: Vec<TubeTruthEntry>,
}

impl GroundTruthFile {
    pub fn from_scene(scene: &SyntheticScene, seed: u64) -> Self {
        Self {
            seed,
            point_count: scene.cloud.len(),
            rack_point_count: scene.rack_indices.len(),
            rack_pose: scene.rack_pose.to_rows(),
            tubes: scene
                .tubes
                .iter()
                .zip(&scene.tube_indices)
                .map(|(t, r)| TubeTruthEntry {
                    slot_index: t.slot_index,
                    class_id: t.class_id.clone(),
                    alpha: t.angles.alpha(),
                    beta: t.angles.beta(),
                    rack_alpha: t.rack_angles.alpha(),
                    rack_beta: t.rack_angles.beta(),
                    pose: t.pose.to_rows(),
                    point_count: r.len(),
                })
                .collect(),
        }
    }

    pub fn pose_records(&self) -> Result<Vec<PoseRecord>> {
        self.tubes
            .iter()
            .map(|t| {
                Ok(PoseRecord {
                    slot_index: Some(t.slot_index),
                    class_id: t.class_id.clone(),
                    pose: RigidTransform::from_rows(&t.pose)?,
                })
            })
            .collect()
    }
}

/// Reads and deserialises a JSON file; syntax and schema problems become
/// `Parse` errors naming the file, line and column.
pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        location: format!("{}:{}:{}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Pretty-printed JSON with a trailing newline. Floats use the shortest
/// representation that round-trips exactly.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_string(value)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
