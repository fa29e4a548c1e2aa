//! Synthetic rack-and-tube scenes with exact ground truth.
//!
//! Tubes are sampled as cylinder surfaces standing in their slots, the rack as
//! its top surface minus the slot openings. Transparency is modelled as the
//! removal of a contiguous angular sector and axial band of each tube; points
//! below the rack top are hidden by the rack and dropped.

use std::ops::Range;

use nalgebra::{Point3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{axis_direction, tilt_from_axis, PointCloud, RigidTransform, TiltAngles};
use crate::registration::{RackModel, RackParams};
use crate::tube::{assemble_pose, feasibility_check, TubeDetection, TubeSpec};

/// Structured point loss on a tube.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dropout {
    /// Fraction of the full turn removed as one contiguous sector.
    pub sector_fraction: f64,
    /// Fraction of the tube length removed as one contiguous band.
    pub axial_fraction: f64,
}

impl Dropout {
    pub fn new(sector_fraction: f64, axial_fraction: f64) -> Self {
        Self {
            sector_fraction,
            axial_fraction,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |f: f64| (0.0..1.0).contains(&f);
        if !ok(self.sector_fraction) || !ok(self.axial_fraction) {
            return Err(Error::invalid(format!(
                "dropout fractions must lie in [0, 1), got sector {} axial {}",
                self.sector_fraction, self.axial_fraction
            )));
        }
        Ok(())
    }
}

/// A tube class together with its transparency behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeClass {
    pub spec: TubeSpec,
    pub dropout: Dropout,
}

impl TubeClass {
    /// Built-in classes: `tube1` is semi-transparent and uncapped, `tube2`
    /// and `tube3` have opaque caps.
    pub fn preset(class_id: &str) -> Option<TubeClass> {
        match class_id {
            "tube1" => Some(TubeClass {
                spec: TubeSpec::new("tube1", 0.006, 0.075, false),
                dropout: Dropout::new(0.6, 0.3),
            }),
            "tube2" => Some(TubeClass {
                spec: TubeSpec::new("tube2", 0.006, 0.075, true),
                dropout: Dropout::new(0.2, 0.0),
            }),
            "tube3" => Some(TubeClass {
                spec: TubeSpec::new("tube3", 0.0055, 0.1, true),
                dropout: Dropout::new(0.2, 0.0),
            }),
            _ => None,
        }
    }

    pub fn presets() -> Vec<TubeClass> {
        ["tube1", "tube2", "tube3"]
            .iter()
            .filter_map(|id| Self::preset(id))
            .collect()
    }
}

/// Pose given as a translation plus roll/pitch/yaw, radians.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseConfig {
    pub translation: [f64; 3],
    pub rpy: [f64; 3],
}

impl PoseConfig {
    pub fn to_transform(&self) -> RigidTransform {
        let [x, y, z] = self.translation;
        let [r, p, yaw] = self.rpy;
        RigidTransform::from_rpy(Vector3::new(x, y, z), r, p, yaw)
    }
}

/// One tube in the scene; tilt is relative to the rack frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubePlacement {
    pub slot: usize,
    pub class_id: String,
    pub alpha: f64,
    pub beta: f64,
}

fn default_noise() -> f64 {
    0.0003
}

fn default_density() -> f64 {
    2.0e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub rack: RackParams,
    #[serde(default)]
    pub rack_pose: PoseConfig,
    #[serde(default = "TubeClass::presets")]
    pub tube_classes: Vec<TubeClass>,
    #[serde(default)]
    pub tubes: Vec<TubePlacement>,
    /// Isotropic Gaussian noise, m.
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    /// Overrides every class's own dropout when set.
    #[serde(default)]
    pub dropout: Option<Dropout>,
    /// Surface sampling densities, points per m^2.
    #[serde(default = "default_density")]
    pub rack_density: f64,
    #[serde(default = "default_density")]
    pub tube_density: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            rack: RackParams::default(),
            rack_pose: PoseConfig::default(),
            tube_classes: TubeClass::presets(),
            tubes: Vec::new(),
            noise_sigma: default_noise(),
            dropout: None,
            rack_density: default_density(),
            tube_density: default_density(),
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn class(&self, class_id: &str) -> Option<&TubeClass> {
        self.tube_classes.iter().find(|c| c.spec.class_id == class_id)
    }
}

/// Exact pose of one generated tube.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeTruth {
    pub slot_index: usize,
    pub class_id: String,
    /// Tilt relative to the rack (as configured).
    pub rack_angles: TiltAngles,
    /// World-frame tilt.
    pub angles: TiltAngles,
    /// `[R(angles) | slot bottom centre]` in world.
    pub pose: RigidTransform,
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub cloud: PointCloud,
    pub rack_indices: Range<usize>,
    pub tube_indices: Vec<Range<usize>>,
    pub rack_pose: RigidTransform,
    pub tubes: Vec<TubeTruth>,
    pub specs: Vec<TubeSpec>,
    pub model: RackModel,
}

impl SyntheticScene {
    pub fn rack_cloud(&self) -> PointCloud {
        PointCloud::new(self.cloud.points[self.rack_indices.clone()].to_vec())
    }

    pub fn tube_cloud(&self, i: usize) -> PointCloud {
        PointCloud::new(self.cloud.points[self.tube_indices[i].clone()].to_vec())
    }

    /// Per-tube crops, as a perfect 2D detector would deliver them.
    pub fn detections(&self) -> Vec<TubeDetection> {
        (0..self.tubes.len())
            .map(|i| TubeDetection {
                spec: self.specs[i].clone(),
                cloud: self.tube_cloud(i),
            })
            .collect()
    }
}

fn check_density(density: f64) -> Result<()> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::invalid(format!("sampling density must be positive, got {density}")));
    }
    Ok(())
}

fn check_noise(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("noise sigma must be non-negative, got {sigma}")));
    }
    Ok(())
}

fn add_noise(points: &mut [Point3<f64>], sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked");
    for p in points {
        p.x += normal.sample(rng);
        p.y += normal.sample(rng);
        p.z += normal.sample(rng);
    }
}

/// Uniform samples on the lateral surface of the tube (and its cap disc for
/// capped classes), placed by `pose` and perturbed by Gaussian noise.
///
/// The local frame has the axis along +z from the bottom centre.
pub fn sample_cylinder(
    spec: &TubeSpec,
    pose: &RigidTransform,
    density: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<PointCloud> {
    spec.validate()?;
    check_density(density)?;
    check_noise(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = spec.radius;
    let lateral = (density * TAU * r * spec.length).round() as usize;
    let cap = if spec.capped {
        (density * PI * r * r).round() as usize
    } else {
        0
    };
    let mut points = Vec::with_capacity(lateral + cap);
    for _ in 0..lateral {
        let t = rng.random::<f64>() * TAU;
        let h = rng.random::<f64>() * spec.length;
        points.push(pose.apply(&Point3::new(r * t.cos(), r * t.sin(), h)));
    }
    for _ in 0..cap {
        let rho = r * rng.random::<f64>().sqrt();
        let t = rng.random::<f64>() * TAU;
        points.push(pose.apply(&Point3::new(rho * t.cos(), rho * t.sin(), spec.length)));
    }
    add_noise(&mut points, noise_sigma, &mut rng);
    Ok(PointCloud::new(points))
}

/// Removes one contiguous angular sector of `sector_fraction * 2 pi` around the
/// tube axis, then one contiguous axial band of `axial_fraction * length`.
/// `axis_pose` is the tube frame (axis along local +z from the bottom).
pub fn apply_transparency_dropout(
    cloud: &PointCloud,
    axis_pose: &RigidTransform,
    length: f64,
    dropout: Dropout,
    seed: u64,
) -> Result<PointCloud> {
    dropout.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random::<f64>() * TAU;
    let width = dropout.sector_fraction * TAU;
    let band = dropout.axial_fraction * length;
    let band_start = rng.random::<f64>() * (length - band);
    let to_local = axis_pose.inverse();
    Ok(cloud
        .iter()
        .filter(|p| {
            let q = to_local.apply(p);
            let angle = q.y.atan2(q.x);
            let in_sector = (angle - start).rem_euclid(TAU) < width;
            let in_band = q.z >= band_start && q.z < band_start + band;
            !in_sector && !in_band
        })
        .copied()
        .collect())
}

/// Uniform samples on the rack top rectangle outside the slot openings.
pub fn sample_rack_top(
    model: &RackModel,
    pose: &RigidTransform,
    density: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<PointCloud> {
    check_density(density)?;
    check_noise(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [ax, ay] = model.params.outer_half_extents;
    let draws = (density * 4.0 * ax * ay).round() as usize;
    let mut points = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x = rng.random_range(-ax..=ax);
        let y = rng.random_range(-ay..=ay);
        if model.slot_containing(&nalgebra::Point2::new(x, y)).is_none() {
            points.push(pose.apply(&Point3::new(x, y, model.top_height())));
        }
    }
    add_noise(&mut points, noise_sigma, &mut rng);
    Ok(PointCloud::new(points))
}

/// Builds the scene cloud: rack points first, then each tube's points in
/// configuration order.
pub fn generate_scene(config: &SceneConfig) -> Result<SyntheticScene> {
    let model = RackModel::new(config.rack.clone())?;
    check_noise(config.noise_sigma)?;
    check_density(config.rack_density)?;
    check_density(config.tube_density)?;
    if let Some(d) = config.dropout {
        d.validate()?;
    }
    let mut used = vec![false; model.slot_count()];
    for (i, t) in config.tubes.iter().enumerate() {
        if t.slot >= model.slot_count() {
            return Err(Error::invalid(format!(
                "tube {i}: slot {} out of range (rack has {} slots)",
                t.slot,
                model.slot_count()
            )));
        }
        if std::mem::replace(&mut used[t.slot], true) {
            return Err(Error::invalid(format!("tube {i}: slot {} is already occupied", t.slot)));
        }
        let class = config
            .class(&t.class_id)
            .ok_or_else(|| Error::invalid(format!("tube {i}: unknown class `{}`", t.class_id)))?;
        class.spec.validate()?;
        class.dropout.validate()?;
        let angles = TiltAngles::new(t.alpha, t.beta);
        let feasible = feasibility_check(angles, class.spec.radius, &model)
            .map_err(|e| Error::InfeasibleConfig(format!("tube {i} (slot {}): {e}", t.slot)))?;
        if !feasible {
            return Err(Error::InfeasibleConfig(format!(
                "tube {i} (slot {}): tilt ({:.3} deg, {:.3} deg) does not fit the slot",
                t.slot,
                t.alpha.to_degrees(),
                t.beta.to_degrees()
            )));
        }
    }

    let rack_pose = config.rack_pose.to_transform();
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let rack_points = sample_rack_top(&model, &rack_pose, config.rack_density, config.noise_sigma, master.next_u64())?;

    let mut cloud = rack_points;
    let rack_indices = 0..cloud.len();
    let mut tube_indices = Vec::with_capacity(config.tubes.len());
    let mut tubes = Vec::with_capacity(config.tubes.len());
    let mut specs = Vec::with_capacity(config.tubes.len());
    let to_rack = rack_pose.inverse();

    for t in &config.tubes {
        let class = config.class(&t.class_id).expect("validated above");
        let rack_angles = TiltAngles::new(t.alpha, t.beta);
        let c = model.slot_center(t.slot)?;
        let bottom = Point3::new(c.x, c.y, model.top_height() - model.slot_depth());
        let physical = rack_pose.compose(&assemble_pose(rack_angles, &bottom));

        let sample_seed = master.next_u64();
        let dropout_seed = master.next_u64();
        let surface = sample_cylinder(&class.spec, &physical, config.tube_density, config.noise_sigma, sample_seed)?;
        let dropout = config.dropout.unwrap_or(class.dropout);
        let visible = apply_transparency_dropout(&surface, &physical, class.spec.length, dropout, dropout_seed)?;
        let start = cloud.len();
        cloud.points.extend(
            visible
                .iter()
                .filter(|p| to_rack.apply(p).z > model.top_height()),
        );
        tube_indices.push(start..cloud.len());

        let world_axis = rack_pose.rotation * axis_direction(rack_angles);
        let angles = tilt_from_axis(&world_axis);
        let origin = rack_pose.apply(&bottom);
        tubes.push(TubeTruth {
            slot_index: t.slot,
            class_id: t.class_id.clone(),
            rack_angles,
            angles,
            pose: assemble_pose(angles, &origin),
        });
        specs.push(class.spec.clone());
    }

    Ok(SyntheticScene {
        cloud,
        rack_indices,
        tube_indices,
        rack_pose,
        tubes,
        specs,
        model,
    })
}

/// Knobs for drawing random feasible scenes.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSceneSpec {
    pub n_tubes: usize,
    /// Per-axis tilt bound relative to the rack, radians.
    pub max_tilt: f64,
    pub class_ids: Vec<String>,
    pub noise_sigma: f64,
    pub dropout: Option<Dropout>,
    /// Bound on rack roll and pitch, radians. Yaw is unrestricted.
    pub max_rack_tilt: f64,
    pub seed: u64,
}

impl Default for RandomSceneSpec {
    fn default() -> Self {
        Self {
            n_tubes: 4,
            max_tilt: 8f64.to_radians(),
            class_ids: vec!["tube1".into(), "tube2".into(), "tube3".into()],
            noise_sigma: default_noise(),
            dropout: None,
            max_rack_tilt: 5f64.to_radians(),
            seed: 0,
        }
    }
}

/// Draws a scene config with distinct random slots and feasible random tilts.
pub fn random_scene_config(spec: &RandomSceneSpec) -> Result<SceneConfig> {
    let mut config = SceneConfig {
        noise_sigma: spec.noise_sigma,
        dropout: spec.dropout,
        seed: spec.seed,
        ..SceneConfig::default()
    };
    let model = RackModel::new(config.rack.clone())?;
    if spec.n_tubes > model.slot_count() {
        return Err(Error::invalid(format!(
            "{} tubes do not fit a {}-slot rack",
            spec.n_tubes,
            model.slot_count()
        )));
    }
    if spec.class_ids.is_empty() {
        return Err(Error::invalid("no tube classes to draw from"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_5eed_5eed_5eed);
    let t = spec.max_rack_tilt;
    config.rack_pose = PoseConfig {
        translation: [
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
            rng.random_range(0.0..0.05),
        ],
        rpy: [
            rng.random_range(-t..=t),
            rng.random_range(-t..=t),
            rng.random_range(-PI..PI),
        ],
    };
    let mut slots: Vec<usize> = (0..model.slot_count()).collect();
    slots.shuffle(&mut rng);
    for &slot in &slots[..spec.n_tubes] {
        let class_id = spec.class_ids[rng.random_range(0..spec.class_ids.len())].clone();
        let class = config
            .class(&class_id)
            .ok_or_else(|| Error::invalid(format!("unknown class `{class_id}`")))?;
        let radius = class.spec.radius;
        let m = spec.max_tilt;
        let (alpha, beta) = loop {
            let a = rng.random_range(-m..=m);
            let b = rng.random_range(-m..=m);
            if feasibility_check(TiltAngles::new(a, b), radius, &model)? {
                break (a, b);
            }
        };
        config.tubes.push(TubePlacement {
            slot,
            class_id,
            alpha,
            beta,
        });
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point_axis_distance;

    fn spec() -> TubeSpec {
        TubeSpec::new("t", 0.006, 0.075, false)
    }

    #[test]
    fn noiseless_cylinder_lies_on_surface() {
        let c = sample_cylinder(&spec(), &RigidTransform::identity(), 2e6, 0.0, 1).unwrap();
        assert!(!c.is_empty());
        for p in c.iter() {
            let d = point_axis_distance(TiltAngles::upright(), p, &Point3::origin());
            assert!((d - 0.006).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_density_doubles_count() {
        let a = sample_cylinder(&spec(), &RigidTransform::identity(), 1e6, 0.0, 1).unwrap();
        let b = sample_cylinder(&spec(), &RigidTransform::identity(), 2e6, 0.0, 1).unwrap();
        let ratio = b.len() as f64 / a.len() as f64;
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
        let capped = TubeSpec { capped: true, ..spec() };
        let c = sample_cylinder(&capped, &RigidTransform::identity(), 1e6, 0.0, 1).unwrap();
        assert!(c.len() > a.len());
    }

    #[test]
    fn same_seed_same_cloud() {
        let pose = RigidTransform::from_rpy(Vector3::new(0.1, 0.2, 0.3), 0.1, 0.0, 0.4);
        let a = sample_cylinder(&spec(), &pose, 1e6, 3e-4, 77).unwrap();
        let b = sample_cylinder(&spec(), &pose, 1e6, 3e-4, 77).unwrap();
        assert_eq!(a, b);
        let c = sample_cylinder(&spec(), &pose, 1e6, 3e-4, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_rejects_bad_parameters() {
        let id = RigidTransform::identity();
        assert!(sample_cylinder(&spec(), &id, 0.0, 0.0, 1).is_err());
        assert!(sample_cylinder(&spec(), &id, 1e6, -1.0, 1).is_err());
        assert!(sample_cylinder(&TubeSpec::new("bad", 0.0, 0.1, false), &id, 1e6, 0.0, 1).is_err());
    }

    #[test]
    fn zero_dropout_is_identity() {
        let pose = RigidTransform::identity();
        let c = sample_cylinder(&spec(), &pose, 1e6, 0.0, 1).unwrap();
        let d = apply_transparency_dropout(&c, &pose, 0.075, Dropout::default(), 9).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn half_sector_keeps_half() {
        let pose = RigidTransform::from_rpy(Vector3::new(0.3, 0.0, 0.1), 0.1, -0.05, 1.0);
        let c = sample_cylinder(&spec(), &pose, 4e6, 0.0, 2).unwrap();
        let d = apply_transparency_dropout(&c, &pose, 0.075, Dropout::new(0.5, 0.0), 5).unwrap();
        let frac = d.len() as f64 / c.len() as f64;
        assert!((frac - 0.5).abs() < 0.03, "{frac}");

        // the dropped sector is empty: re-draw the sector start from the same seed
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = rng.random::<f64>() * TAU;
        let to_local = pose.inverse();
        for p in d.iter() {
            let q = to_local.apply(p);
            assert!((q.y.atan2(q.x) - start).rem_euclid(TAU) >= 0.5 * TAU);
        }
    }

    #[test]
    fn axial_band_is_removed() {
        let pose = RigidTransform::identity();
        let c = sample_cylinder(&spec(), &pose, 4e6, 0.0, 2).unwrap();
        let d = apply_transparency_dropout(&c, &pose, 0.075, Dropout::new(0.0, 0.3), 5).unwrap();
        let frac = d.len() as f64 / c.len() as f64;
        assert!((frac - 0.7).abs() < 0.03, "{frac}");
        assert!(apply_transparency_dropout(&c, &pose, 0.075, Dropout::new(1.0, 0.0), 5).is_err());
    }

    #[test]
    fn rack_top_points_avoid_holes() {
        let m = RackModel::new(RackParams::default()).unwrap();
        let c = sample_rack_top(&m, &RigidTransform::identity(), 1e6, 0.0, 4).unwrap();
        assert!(c.iter().all(|p| (p.z - m.top_height()).abs() < 1e-12));
        assert!(c
            .iter()
            .all(|p| m.slot_containing(&nalgebra::Point2::new(p.x, p.y)).is_none()));
        let [ax, ay] = m.params.outer_half_extents;
        let expected = 1e6 * 4.0 * ax * ay * (1.0 - m.hole_fraction());
        assert!((c.len() as f64 - expected).abs() < 0.05 * expected);
        let again = sample_rack_top(&m, &RigidTransform::identity(), 1e6, 0.0, 4).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn infeasible_tilt_is_rejected() {
        let config = SceneConfig {
            tubes: vec![TubePlacement {
                slot: 0,
                class_id: "tube2".into(),
                alpha: 45f64.to_radians(),
                beta: 0.0,
            }],
            ..SceneConfig::default()
        };
        assert!(matches!(generate_scene(&config), Err(Error::InfeasibleConfig(_))));
    }

    #[test]
    fn duplicate_and_bad_slots() {
        let tube = |slot| TubePlacement {
            slot,
            class_id: "tube2".into(),
            alpha: 0.0,
            beta: 0.0,
        };
        let dup = SceneConfig {
            tubes: vec![tube(3), tube(3)],
            ..SceneConfig::default()
        };
        assert!(matches!(generate_scene(&dup), Err(Error::InvalidParameter(_))));
        let bad = SceneConfig {
            tubes: vec![tube(96)],
            ..SceneConfig::default()
        };
        assert!(generate_scene(&bad).is_err());
    }

    #[test]
    fn empty_scene_is_rack_only() {
        let scene = generate_scene(&SceneConfig::default()).unwrap();
        assert!(scene.tubes.is_empty());
        assert!(scene.detections().is_empty());
        assert_eq!(scene.rack_indices, 0..scene.cloud.len());
    }

    #[test]
    fn scene_is_deterministic_and_partitioned() {
        let config = random_scene_config(&RandomSceneSpec {
            n_tubes: 5,
            seed: 3,
            ..RandomSceneSpec::default()
        })
        .unwrap();
        let a = generate_scene(&config).unwrap();
        let b = generate_scene(&config).unwrap();
        assert_eq!(a.cloud, b.cloud);
        let mut covered = a.rack_indices.len();
        let mut next = a.rack_indices.end;
        for r in &a.tube_indices {
            assert_eq!(r.start, next);
            next = r.end;
            covered += r.len();
        }
        assert_eq!(covered, a.cloud.len());
        for t in &a.tubes {
            let radius = config.class(&t.class_id).unwrap().spec.radius;
            assert!(feasibility_check(t.rack_angles, radius, &a.model).unwrap());
        }
    }

    #[test]
    fn noise_does_not_change_counts() {
        let mut config = random_scene_config(&RandomSceneSpec {
            n_tubes: 3,
            dropout: Some(Dropout::default()),
            seed: 8,
            ..RandomSceneSpec::default()
        })
        .unwrap();
        config.noise_sigma = 0.0;
        let a = generate_scene(&config).unwrap();
        config.noise_sigma = 0.0006;
        let b = generate_scene(&config).unwrap();
        assert_eq!(a.rack_indices.len(), b.rack_indices.len());
        for (ra, rb) in a.tube_indices.iter().zip(&b.tube_indices) {
            let (la, lb) = (ra.len() as f64, rb.len() as f64);
            assert!((la - lb).abs() < 0.05 * la, "{la} {lb}");
        }
    }
}
