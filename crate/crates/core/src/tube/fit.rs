use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axis_direction, PointCloud, TiltAngles};
use crate::optim::{nelder_mead_2d, NelderMeadOptions};

/// Per-point penalty on the radial deviation `D - r`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMode {
    /// Mean of `|D - r|`.
    #[default]
    L1,
    /// Mean of `(D - r)^2`.
    L2,
}

impl std::str::FromStr for ResidualMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            other => Err(format!("unknown residual mode `{other}` (expected l1 or l2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub residual_mode: ResidualMode,
    /// Coarse grid covers `grid_center +/- grid_half_range` in both angles.
    pub grid_half_range: f64,
    pub grid_step: f64,
    pub grid_center: TiltAngles,
    /// Convergence tolerance of the local refinement, radians.
    pub tolerance: f64,
    pub max_evaluations: usize,
    pub min_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            residual_mode: ResidualMode::L1,
            grid_half_range: 20f64.to_radians(),
            grid_step: 2f64.to_radians(),
            grid_center: TiltAngles::upright(),
            tolerance: 1e-8,
            max_evaluations: 400,
            min_points: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltFit {
    pub angles: TiltAngles,
    /// Mean absolute radial deviation at `angles`, whatever the residual mode.
    pub residual: f64,
    /// Objective value at `angles` in the configured residual mode.
    pub objective: f64,
    pub evaluations: usize,
}

/// Cylinder-surface residual of a cloud about the axis through a fixed pivot.
///
/// The cloud is stored as offsets from the pivot so every evaluation is a
/// single pass of cross products.
pub struct RadialObjective {
    offsets: Vec<Vector3<f64>>,
    radius: f64,
    mode: ResidualMode,
}

impl RadialObjective {
    pub fn new(cloud: &PointCloud, origin: &Point3<f64>, radius: f64, mode: ResidualMode) -> Self {
        Self {
            offsets: cloud.iter().map(|p| p - origin).collect(),
            radius,
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn eval(&self, angles: TiltAngles) -> f64 {
        self.eval_mode(angles, self.mode)
    }

    pub fn eval_mode(&self, angles: TiltAngles, mode: ResidualMode) -> f64 {
        let d = axis_direction(angles);
        let r = self.radius;
        let sum: f64 = match mode {
            ResidualMode::L1 => self.offsets.iter().map(|q| (q.cross(&d).norm() - r).abs()).sum(),
            ResidualMode::L2 => self.offsets.iter().map(|q| (q.cross(&d).norm() - r).powi(2)).sum(),
        };
        sum / self.offsets.len() as f64
    }

    /// Mean `|D - r|`.
    pub fn mean_abs_residual(&self, angles: TiltAngles) -> f64 {
        self.eval_mode(angles, ResidualMode::L1)
    }
}

/// Mean radial residual of `cloud` about the axis `(angles, origin)`.
pub fn radial_objective(
    cloud: &PointCloud,
    origin: &Point3<f64>,
    radius: f64,
    angles: TiltAngles,
    mode: ResidualMode,
) -> f64 {
    RadialObjective::new(cloud, origin, radius, mode).eval(angles)
}

/// Finds the tilt minimising the radial residual of `cloud` about an axis
/// pivoting at `origin`: a coarse grid followed by Nelder-Mead refinement
/// from the best grid node, restarted with a smaller simplex until it stops
/// improving.
pub fn fit_tube_tilt(
    cloud: &PointCloud,
    origin: &Point3<f64>,
    radius: f64,
    options: &FitOptions,
) -> Result<TiltFit> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("tube radius must be positive, got {radius}")));
    }
    if !(options.grid_step > 0.0) || !(options.grid_half_range >= 0.0) || !(options.tolerance > 0.0) {
        return Err(Error::invalid("fit grid step, range and tolerance must be positive"));
    }
    if cloud.len() < options.min_points.max(1) {
        return Err(Error::degenerate(format!(
            "tube cloud has {} points, need at least {}",
            cloud.len(),
            options.min_points
        )));
    }
    let objective = RadialObjective::new(cloud, origin, radius, options.residual_mode);
    let f = |x: [f64; 2]| objective.eval(TiltAngles::new(x[0], x[1]));

    let c = options.grid_center;
    let n = (options.grid_half_range / options.grid_step).round() as i64;
    let mut best = ([c.alpha(), c.beta()], f64::INFINITY);
    let mut evaluations = 0;
    for i in -n..=n {
        for j in -n..=n {
            let x = [
                c.alpha() + i as f64 * options.grid_step,
                c.beta() + j as f64 * options.grid_step,
            ];
            let v = f(x);
            evaluations += 1;
            if v < best.1 {
                best = (x, v);
            }
        }
    }

    let mut step = options.grid_step;
    for _ in 0..4 {
        let nm = nelder_mead_2d(
            f,
            best.0,
            &NelderMeadOptions {
                initial_step: step,
                x_tolerance: options.tolerance,
                max_evaluations: options.max_evaluations,
            },
        );
        evaluations += nm.evaluations;
        let improved = nm.value < best.1;
        let moved = (nm.x[0] - best.0[0]).abs().max((nm.x[1] - best.0[1]).abs());
        if improved {
            best = (nm.x, nm.value);
        }
        if !improved || moved < options.tolerance {
            break;
        }
        step = (step * 0.25).max(4.0 * options.tolerance);
    }

    let angles = TiltAngles::new(best.0[0], best.0[1]);
    Ok(TiltFit {
        angles,
        residual: objective.mean_abs_residual(angles),
        objective: best.1,
        evaluations,
    })
}
