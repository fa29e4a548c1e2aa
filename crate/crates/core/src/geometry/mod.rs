//! Foundational geometric types and pure operations: tilt rotations, point to
//! axis distance, 2D convex hulls, polygon clipping and minimum-area rectangles.

mod clip;
mod hull;
mod rect;
mod rotation;
mod transform;

use nalgebra::{Point2, Point3, Vector3};
use std::f64::consts::PI;

pub use clip::{polygon_clip, Rect2};
pub use hull::convex_hull_2d;
pub use rect::{min_area_rect_2d, OrientedRect};
pub use rotation::{axis_direction, point_axis_distance, rotation_from_tilt, tilt_from_axis};
pub use transform::{orthonormality_error, RigidTransform};

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Tube orientation as Euler angles about the x axis (`alpha`) and the y axis
/// (`beta`). Both are kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TiltAngles {
    alpha: f64,
    beta: f64,
}

impl TiltAngles {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self {
            alpha: normalize_angle(alpha),
            beta: normalize_angle(beta),
        }
    }

    pub fn from_degrees(alpha_deg: f64, beta_deg: f64) -> Self {
        Self::new(alpha_deg.to_radians(), beta_deg.to_radians())
    }

    pub fn upright() -> Self {
        Self::default()
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite()
    }
}

/// An ordered list of 3D points, in meters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Self {
        Self { points }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3<f64>> {
        self.points.iter()
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }

    pub fn transformed(&self, transform: &RigidTransform) -> PointCloud {
        PointCloud::new(self.points.iter().map(|p| transform.apply(p)).collect())
    }

    /// Drops every point with a non-finite coordinate.
    pub fn finite(&self) -> PointCloud {
        PointCloud::new(
            self.points
                .iter()
                .filter(|p| p.coords.iter().all(|c| c.is_finite()))
                .copied()
                .collect(),
        )
    }

    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud::new(indices.iter().map(|&i| self.points[i]).collect())
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
    }
}

impl From<Vec<Point3<f64>>> for PointCloud {
    fn from(points: Vec<Point3<f64>>) -> Self {
        Self::new(points)
    }
}

impl FromIterator<Point3<f64>> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point3<f64>>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Counter-clockwise simple polygon in the plane.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polygon2 {
    pub vertices: Vec<Point2<f64>>,
}

impl Polygon2 {
    pub fn new(vertices: Vec<Point2<f64>>) -> Self {
        Self { vertices }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Shoelace area, positive for counter-clockwise winding.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        0.5 * acc
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area centroid. Falls back to the vertex mean for zero-area polygons.
    pub fn centroid(&self) -> Option<Point2<f64>> {
        let n = self.vertices.len();
        if n == 0 {
            return None;
        }
        let a = self.signed_area();
        if a.abs() < 1e-300 {
            let sum = self
                .vertices
                .iter()
                .fold(nalgebra::Vector2::zeros(), |acc, p| acc + p.coords);
            return Some(Point2::from(sum / n as f64));
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let cross = p.x * q.y - q.x * p.y;
            cx += (p.x + q.x) * cross;
            cy += (p.y + q.y) * cross;
        }
        Some(Point2::new(cx / (6.0 * a), cy / (6.0 * a)))
    }

    /// Containment test for convex counter-clockwise polygons, with a
    /// tolerance on the edge half-plane tests.
    pub fn contains_convex(&self, p: &Point2<f64>, tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            cross2(&a, &b, p) >= -tol
        })
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Polygon2 {
        Polygon2::new(
            self.vertices
                .iter()
                .map(|v| Point2::new(v.x + dx, v.y + dy))
                .collect(),
        )
    }
}

/// z component of `(b - a) x (p - a)`.
#[inline]
pub(crate) fn cross2(a: &Point2<f64>, b: &Point2<f64>, p: &Point2<f64>) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}
