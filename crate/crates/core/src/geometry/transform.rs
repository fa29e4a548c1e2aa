use nalgebra::{Matrix3, Matrix4, Point3, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Rotation followed by translation: `x -> R x + t`.
///
/// Composition follows the usual operator order, so `a.compose(&b)` applies
/// `b` first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(Rotation3::identity(), t)
    }

    /// Builds a transform from roll/pitch/yaw (radians, applied x then y then z).
    pub fn from_rpy(translation: Vector3<f64>, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(Rotation3::from_euler_angles(roll, pitch, yaw), translation)
    }

    #[inline]
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let r_inv = self.rotation.inverse();
        RigidTransform::new(r_inv, -(r_inv * self.translation))
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let m = self.to_homogeneous();
        let mut rows = [[0.0; 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[(i, j)];
            }
        }
        rows
    }

    /// Parses a row-major 4x4 homogeneous matrix, rejecting anything whose
    /// rotation block is not orthonormal with determinant +1 (tolerance 1e-6).
    pub fn from_rows(rows: &[[f64; 4]; 4]) -> Result<Self> {
        let r = Matrix3::from_fn(|i, j| rows[i][j]);
        let t = Vector3::new(rows[0][3], rows[1][3], rows[2][3]);
        let bottom = rows[3];
        if !rows.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::invalid("transform contains non-finite values"));
        }
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::invalid("bottom row of transform must be [0, 0, 0, 1]"));
        }
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        if ortho > 1e-6 || (r.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("rotation block is not a proper rotation"));
        }
        Ok(Self::new(Rotation3::from_matrix_unchecked(r), t))
    }

    /// Geodesic angle between the two rotations, in radians.
    /// Geodesic angle between the two rotations, accurate near zero.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        let m = (self.rotation.inverse() * other.rotation).into_inner();
        let s = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]).norm();
        s.atan2(m.trace() - 1.0)
    }

    pub fn translation_distance_to(&self, other: &RigidTransform) -> f64 {
        (self.translation - other.translation).norm()
    }
}

/// Max deviation of `R^T R` from identity, and `|det R - 1|`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> (f64, f64) {
    (
        (r.transpose() * r - Matrix3::identity()).abs().max(),
        (r.determinant() - 1.0).abs(),
    )
}
