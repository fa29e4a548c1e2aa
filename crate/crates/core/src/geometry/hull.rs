use nalgebra::Point2;

use super::{cross2, Polygon2};
use crate::error::{Error, Result};

/// Convex hull by Andrew's monotone chain. Collinear boundary points are
/// dropped, so the result has only strict corners, in counter-clockwise order.
pub fn convex_hull_2d(points: &[Point2<f64>]) -> Result<Polygon2> {
    let mut pts: Vec<Point2<f64>> = points
        .iter()
        .filter(|p| p.x.is_finite() && p.y.is_finite())
        .copied()
        .collect();
    if pts.len() < 3 {
        return Err(Error::degenerate(format!(
            "convex hull needs at least 3 points, got {}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();

    let mut hull: Vec<Point2<f64>> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && cross2(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross2(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();

    let polygon = Polygon2::new(hull);
    if polygon.vertices.len() < 3 || polygon.area() <= 0.0 {
        return Err(Error::degenerate("points are collinear"));
    }
    Ok(polygon)
}
