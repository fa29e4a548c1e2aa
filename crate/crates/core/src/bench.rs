//! Wall-clock timing of the two estimation stages over a set of scenes.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::pipeline::{preprocess_cloud, PipelineOptions};
use crate::registration::{estimate_rack_pose, RackModel};
use crate::tube::{estimate_tubes, TubeDetection};

pub const DETECTION_NOTE: &str =
    "2D object detection is not part of this tool and is not timed; times include preprocessing.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub name: String,
    pub mean_s: f64,
    /// Sample standard deviation; zero for a single sample.
    pub std_s: f64,
    pub samples: usize,
}

impl TimingRow {
    fn from_samples(name: &str, samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n.max(1) as f64;
        let std = if n > 1 {
            (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            name: name.to_string(),
            mean_s: mean,
            std_s: std,
            samples: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub note: String,
    pub scenes: usize,
    pub repetitions: usize,
    /// Set when there are too few samples for the means to be trusted.
    pub low_confidence: bool,
    /// Rack estimation per scene, then tube estimation per tube.
    pub rows: Vec<TimingRow>,
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.note);
        let _ = writeln!(s, "# scenes: {}, repetitions: {}", self.scenes, self.repetitions);
        if self.low_confidence {
            let _ = writeln!(s, "# LOW CONFIDENCE: fewer than 10 samples or a single repetition");
        }
        let _ = writeln!(s, "{:<28} {:>12} {:>12} {:>8}", "stage", "mean (s)", "std (s)", "n");
        for r in &self.rows {
            let _ = writeln!(s, "{:<28} {:>12.6} {:>12.6} {:>8}", r.name, r.mean_s, r.std_s, r.samples);
        }
        s
    }
}

pub struct BenchScene {
    pub rack_cloud: PointCloud,
    pub detections: Vec<TubeDetection>,
}

/// Times every scene `repetitions` times. Tube times are divided by the
/// scene's tube count to give a per-tube figure.
pub fn run_bench(
    scenes: &[BenchScene],
    model: &RackModel,
    options: &PipelineOptions,
    repetitions: usize,
) -> Result<BenchReport> {
    if scenes.is_empty() || repetitions == 0 {
        return Err(Error::invalid("bench needs at least one scene and one repetition"));
    }
    let mut rack_times = Vec::new();
    let mut tube_times = Vec::new();
    for _ in 0..repetitions {
        for scene in scenes {
            let t0 = Instant::now();
            let rack_cloud = preprocess_cloud(&scene.rack_cloud, &options.preprocess)?;
            let rack = estimate_rack_pose(&rack_cloud, model, &options.icp)?;
            rack_times.push(t0.elapsed().as_secs_f64());

            if scene.detections.is_empty() {
                continue;
            }
            let t1 = Instant::now();
            let detections = scene
                .detections
                .iter()
                .map(|d| {
                    Ok(TubeDetection {
                        spec: d.spec.clone(),
                        cloud: preprocess_cloud(&d.cloud, &options.preprocess)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            std::hint::black_box(estimate_tubes(&detections, &rack, model, &options.tubes)?);
            tube_times.push(t1.elapsed().as_secs_f64() / detections.len() as f64);
        }
    }
    let rows = vec![
        TimingRow::from_samples("Rack Pose Estimation", &rack_times),
        TimingRow::from_samples("Tube Pose Estimation", &tube_times),
    ];
    let low_confidence = repetitions < 2 || rows.iter().any(|r| r.samples < 10);
    Ok(BenchReport {
        note: DETECTION_NOTE.to_string(),
        scenes: scenes.len(),
        repetitions,
        low_confidence,
        rows,
    })
}
