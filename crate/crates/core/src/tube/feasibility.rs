use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::TiltAngles;
use crate::registration::RackModel;

/// Half-extent, at the slot-top plane, of a cylinder of radius `radius`
/// pivoting at the slot bottom centre and tilted by `tilt` in one axis:
/// axis offset `depth * tan|tilt|` plus the widened cross-section
/// `radius / cos(tilt)`. Infinite at or past a right angle.
pub fn containment_extent(tilt: f64, radius: f64, depth: f64) -> f64 {
    let t = tilt.abs();
    if t >= FRAC_PI_2 {
        return f64::INFINITY;
    }
    depth * t.tan() + radius / t.cos()
}

/// Whether a tube tilted by `angles` (relative to the rack) stays inside its
/// slot over the slot depth: the `alpha` tilt against the half-width and the
/// `beta` tilt against the half-length.
pub fn feasibility_check(angles: TiltAngles, radius: f64, model: &RackModel) -> Result<bool> {
    let (l, w, h) = (model.half_length(), model.half_width(), model.slot_depth());
    if !(radius > 0.0) || radius >= l.min(w) {
        return Err(Error::invalid(format!(
            "tube radius {radius} must be positive and below the slot half-size {}",
            l.min(w)
        )));
    }
    Ok(containment_extent(angles.alpha(), radius, h) <= w
        && containment_extent(angles.beta(), radius, h) <= l)
}

/// Largest single-axis tilt that still fits a slot half-size `half`, found
/// by bisection on the monotone containment extent.
pub fn boundary_angle(radius: f64, half: f64, depth: f64) -> Option<f64> {
    if !(radius > 0.0) || radius >= half {
        return None;
    }
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if containment_extent(mid, radius, depth) <= half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}
