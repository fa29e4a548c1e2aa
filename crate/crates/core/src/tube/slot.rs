use nalgebra::{Point2, Point3};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull_2d, polygon_clip, PointCloud, Polygon2, RigidTransform};
use crate::registration::RackModel;

const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotAssignment {
    pub slot_index: usize,
    /// Area of the hull inside the winning slot opening, m^2.
    pub overlap_area: f64,
    /// `overlap_area` over the hull area.
    pub overlap_fraction: f64,
}

/// Convex hull of the tube cloud projected onto the rack top plane, in rack
/// coordinates.
pub fn project_hull_to_rack_top(cloud: &PointCloud, rack_pose: &RigidTransform) -> Result<Polygon2> {
    let to_rack = rack_pose.inverse();
    let projected: Vec<Point2<f64>> = cloud
        .iter()
        .map(|p| {
            let q = to_rack.apply(p);
            Point2::new(q.x, q.y)
        })
        .collect();
    convex_hull_2d(&projected)
}

/// The slot whose opening holds the largest share of the hull. Ties (equal
/// up to rounding) go to the lowest slot index.
pub fn assign_slot(hull: &Polygon2, model: &RackModel) -> Result<SlotAssignment> {
    rank_slots(hull, model, 1)?.into_iter().next().ok_or(Error::NoOverlap)
}

/// Up to `k` slots overlapping the hull, best first, ranked as in
/// [`assign_slot`].
pub fn rank_slots(hull: &Polygon2, model: &RackModel, k: usize) -> Result<Vec<SlotAssignment>> {
    let hull_area = hull.area();
    let mut overlaps = Vec::new();
    for index in 0..model.slot_count() {
        let area = polygon_clip(hull, &model.slot_rect(index)?).area();
        if area > 0.0 {
            overlaps.push((index, area));
        }
    }
    let mut ranked = Vec::with_capacity(k.min(overlaps.len()));
    while ranked.len() < k && !overlaps.is_empty() {
        let mut best = 0;
        for (i, &(_, area)) in overlaps.iter().enumerate().skip(1) {
            if area > overlaps[best].1 * (1.0 + TIE_TOLERANCE) {
                best = i;
            }
        }
        let (slot_index, overlap_area) = overlaps.remove(best);
        ranked.push(SlotAssignment {
            slot_index,
            overlap_area,
            overlap_fraction: if hull_area > 0.0 {
                (overlap_area / hull_area).min(1.0)
            } else {
                0.0
            },
        });
    }
    Ok(ranked)
}

/// World position of the slot's bottom centre.
pub fn slot_origin(model: &RackModel, rack_pose: &RigidTransform, slot_index: usize) -> Result<Point3<f64>> {
    let c = model.slot_center(slot_index)?;
    let bottom = Point3::new(c.x, c.y, model.top_height() - model.slot_depth());
    Ok(rack_pose.apply(&bottom))
}
