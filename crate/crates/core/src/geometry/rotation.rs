use nalgebra::{Matrix3, Point3, Rotation3, Vector3};

use super::TiltAngles;

/// Tube orientation `Ry(beta) * Rx(alpha)`, written out in expanded form.
pub fn rotation_from_tilt(angles: TiltAngles) -> Rotation3<f64> {
    let (sa, ca) = angles.alpha().sin_cos();
    let (sb, cb) = angles.beta().sin_cos();
    #[rustfmt::skip]
    let m = Matrix3::new(
        cb,  sb * sa, sb * ca,
        0.0, ca,      -sa,
        -sb, cb * sa, cb * ca,
    );
    Rotation3::from_matrix_unchecked(m)
}

/// Unit direction of the tube axis: the third column of [`rotation_from_tilt`].
#[inline]
pub fn axis_direction(angles: TiltAngles) -> Vector3<f64> {
    let (sa, ca) = angles.alpha().sin_cos();
    let (sb, cb) = angles.beta().sin_cos();
    Vector3::new(sb * ca, -sa, cb * ca)
}

/// Distance from `p` to the infinite line through `o` along the tube axis.
#[inline]
pub fn point_axis_distance(angles: TiltAngles, p: &Point3<f64>, o: &Point3<f64>) -> f64 {
    distance_to_line(p, o, &axis_direction(angles))
}

/// `|(o - p) x d|` for a unit direction `d`.
#[inline]
pub(crate) fn distance_to_line(p: &Point3<f64>, o: &Point3<f64>, d: &Vector3<f64>) -> f64 {
    (o - p).cross(d).norm()
}

/// Recovers the tilt angles whose axis direction is `d` (need not be unit).
///
/// Exact inverse of [`axis_direction`] for `|alpha| < pi/2`. Rotation about
/// the axis itself does not enter, so this also extracts the tilt of a
/// general rotation's third column.
pub fn tilt_from_axis(d: &Vector3<f64>) -> TiltAngles {
    let alpha = (-d.y).atan2((d.x * d.x + d.z * d.z).sqrt());
    let beta = d.x.atan2(d.z);
    TiltAngles::new(alpha, beta)
}
