use nalgebra::{Point2, Point3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Rect2};

/// Dimensions of a slotted rack, in meters. This is the serialized form; the
/// derived slot grid and template live in [`RackModel`].
///
/// Slots are `2 * half_length` along the rack x axis and `2 * half_width`
/// along y, `slot_depth` deep from the top surface down to the bottom
/// indentation. The rack frame has its origin below the centre of the top
/// rectangle, with the top surface at `z = top_height`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RackParams {
    pub half_length: f64,
    pub half_width: f64,
    pub slot_depth: f64,
    pub rows: usize,
    pub cols: usize,
    pub pitch_x: f64,
    pub pitch_y: f64,
    /// Shift of the slot grid centre from the top-rectangle centre. A non-zero
    /// offset breaks the rectangle's 180 degree symmetry for registration.
    pub grid_offset: [f64; 2],
    pub outer_half_extents: [f64; 2],
    pub top_height: f64,
    /// Spacing of the analytic template lattice.
    pub template_spacing: f64,
}

impl Default for RackParams {
    /// 8 x 12 rack, 20 mm square slots at 24 mm pitch, 20 mm deep.
    fn default() -> Self {
        Self {
            half_length: 0.010,
            half_width: 0.010,
            slot_depth: 0.020,
            rows: 8,
            cols: 12,
            pitch_x: 0.024,
            pitch_y: 0.024,
            grid_offset: [0.004, 0.0],
            outer_half_extents: [0.152, 0.100],
            top_height: 0.020,
            template_spacing: 0.002,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RackModel {
    pub params: RackParams,
    /// Slot centres in the rack frame, row-major (`index = row * cols + col`).
    pub slot_centers: Vec<Point2<f64>>,
    /// Top-surface template in the rack frame.
    pub template: PointCloud,
}

impl RackModel {
    pub fn new(params: RackParams) -> Result<Self> {
        let p = &params;
        let positive = [
            ("half_length", p.half_length),
            ("half_width", p.half_width),
            ("slot_depth", p.slot_depth),
            ("pitch_x", p.pitch_x),
            ("pitch_y", p.pitch_y),
            ("outer_half_extents[0]", p.outer_half_extents[0]),
            ("outer_half_extents[1]", p.outer_half_extents[1]),
            ("template_spacing", p.template_spacing),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("rack {name} must be positive, got {v}")));
            }
        }
        if !p.top_height.is_finite() || !p.grid_offset.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("rack top_height and grid_offset must be finite"));
        }
        if p.rows == 0 || p.cols == 0 {
            return Err(Error::invalid("rack needs at least one row and one column"));
        }
        if p.pitch_x < 2.0 * p.half_length || p.pitch_y < 2.0 * p.half_width {
            return Err(Error::invalid("slot pitch is smaller than the slot size"));
        }
        let gx = 0.5 * (p.cols - 1) as f64 * p.pitch_x + p.half_length;
        let gy = 0.5 * (p.rows - 1) as f64 * p.pitch_y + p.half_width;
        if gx + p.grid_offset[0].abs() >= p.outer_half_extents[0]
            || gy + p.grid_offset[1].abs() >= p.outer_half_extents[1]
        {
            return Err(Error::invalid("slot grid does not fit inside the rack top"));
        }

        let slot_centers = (0..p.rows)
            .flat_map(|row| (0..p.cols).map(move |col| (row, col)))
            .map(|(row, col)| {
                Point2::new(
                    p.grid_offset[0] + (col as f64 - 0.5 * (p.cols - 1) as f64) * p.pitch_x,
                    p.grid_offset[1] + (row as f64 - 0.5 * (p.rows - 1) as f64) * p.pitch_y,
                )
            })
            .collect();

        let mut model = RackModel {
            params,
            slot_centers,
            template: PointCloud::default(),
        };
        model.template = model.build_template();
        if model.template.is_empty() {
            return Err(Error::invalid("rack template is empty"));
        }
        Ok(model)
    }

    /// Regular lattice over the top rectangle, edges included, minus the
    /// slot openings.
    fn build_template(&self) -> PointCloud {
        let p = &self.params;
        let [ax, ay] = p.outer_half_extents;
        let nx = (2.0 * ax / p.template_spacing).ceil() as usize;
        let ny = (2.0 * ay / p.template_spacing).ceil() as usize;
        let mut points = Vec::new();
        for j in 0..=ny {
            let y = -ay + 2.0 * ay * j as f64 / ny as f64;
            for i in 0..=nx {
                let x = -ax + 2.0 * ax * i as f64 / nx as f64;
                let q = Point2::new(x, y);
                // the margin keeps lattice points that sit on an edge up to rounding
                if self.slot_containing_shrunk(&q, 1e-9).is_none() {
                    points.push(Point3::new(x, y, p.top_height));
                }
            }
        }
        PointCloud::new(points)
    }

    pub fn slot_count(&self) -> usize {
        self.slot_centers.len()
    }

    pub fn half_length(&self) -> f64 {
        self.params.half_length
    }

    pub fn half_width(&self) -> f64 {
        self.params.half_width
    }

    pub fn slot_depth(&self) -> f64 {
        self.params.slot_depth
    }

    pub fn top_height(&self) -> f64 {
        self.params.top_height
    }

    pub fn outer_half_extents(&self) -> Vector2<f64> {
        Vector2::from(self.params.outer_half_extents)
    }

    pub fn slot_rect(&self, index: usize) -> Result<Rect2> {
        let c = self.slot_center(index)?;
        Ok(Rect2::from_center(c, self.params.half_length, self.params.half_width))
    }

    pub fn slot_center(&self, index: usize) -> Result<Point2<f64>> {
        self.slot_centers
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                count: self.slot_count(),
            })
    }

    /// The slot whose open interior contains `q` (rack frame).
    pub fn slot_containing(&self, q: &Point2<f64>) -> Option<usize> {
        self.slot_containing_shrunk(q, 0.0)
    }

    /// As [`Self::slot_containing`] with every opening shrunk by `margin`.
    fn slot_containing_shrunk(&self, q: &Point2<f64>, margin: f64) -> Option<usize> {
        let p = &self.params;
        let fx = (q.x - p.grid_offset[0]) / p.pitch_x + 0.5 * (p.cols - 1) as f64;
        let fy = (q.y - p.grid_offset[1]) / p.pitch_y + 0.5 * (p.rows - 1) as f64;
        let col = fx.round();
        let row = fy.round();
        if col < 0.0 || row < 0.0 || col >= p.cols as f64 || row >= p.rows as f64 {
            return None;
        }
        let index = row as usize * p.cols + col as usize;
        let c = self.slot_centers[index];
        ((q.x - c.x).abs() < p.half_length - margin && (q.y - c.y).abs() < p.half_width - margin).then_some(index)
    }

    /// Signed distance from `q` (rack frame, top plane) to the open region:
    /// the slot openings plus everything outside the top rectangle. Positive
    /// inside the open region, negative on the solid top surface. Also returns
    /// the unit gradient of the distance.
    pub fn void_distance(&self, q: &Point2<f64>) -> (f64, Vector2<f64>) {
        let p = &self.params;
        let fx = (q.x - p.grid_offset[0]) / p.pitch_x + 0.5 * (p.cols - 1) as f64;
        let fy = (q.y - p.grid_offset[1]) / p.pitch_y + 0.5 * (p.rows - 1) as f64;
        let col = fx.round().clamp(0.0, (p.cols - 1) as f64) as usize;
        let row = fy.round().clamp(0.0, (p.rows - 1) as f64) as usize;

        let [ax, ay] = p.outer_half_extents;
        let (ox, oy) = (q.x.abs() - ax, q.y.abs() - ay);
        let mut best = if ox > oy {
            (ox, Vector2::new(q.x.signum(), 0.0))
        } else {
            (oy, Vector2::new(0.0, q.y.signum()))
        };
        // with pitch >= slot size the nearest opening is in the 3x3 block
        for r in row.saturating_sub(1)..=(row + 1).min(p.rows - 1) {
            for c in col.saturating_sub(1)..=(col + 1).min(p.cols - 1) {
                let center = self.slot_centers[r * p.cols + c];
                let cand = rect_void_distance(q - center, p.half_length, p.half_width);
                if cand.0 > best.0 {
                    best = cand;
                }
            }
        }
        best
    }

    /// Fraction of the top rectangle taken by slot openings.
    pub fn hole_fraction(&self) -> f64 {
        let p = &self.params;
        let holes = self.slot_count() as f64 * 4.0 * p.half_length * p.half_width;
        holes / (4.0 * p.outer_half_extents[0] * p.outer_half_extents[1])
    }
}

/// Signed distance into an axis-aligned opening centred at the origin.
fn rect_void_distance(d: Vector2<f64>, hx: f64, hy: f64) -> (f64, Vector2<f64>) {
    // lattice points on an edge or corner must not flip branch on rounding
    let snap = |e: f64| if e.abs() < 1e-12 { 0.0 } else { e };
    let (ex, ey) = (snap(hx - d.x.abs()), snap(hy - d.y.abs()));
    let x_edge = (ex, Vector2::new(-d.x.signum(), 0.0));
    let y_edge = (ey, Vector2::new(0.0, -d.y.signum()));
    match (ex > 0.0, ey > 0.0) {
        (true, true) => if ex < ey { x_edge } else { y_edge },
        // beside an edge, on the edge line included
        (false, true) => x_edge,
        (true, false) => y_edge,
        (false, false) => {
            let q = Vector2::new(-ex * d.x.signum(), -ey * d.y.signum());
            let n = q.norm();
            (-n, if n > 0.0 { -q / n } else { Vector2::zeros() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn void_distance_signs() {
        let m = RackModel::new(RackParams::default()).unwrap();
        let c = m.slot_center(0).unwrap();
        // 3 mm inside an opening, nearest edge on -x
        let (d, g) = m.void_distance(&(c + Vector2::new(-0.007, 0.0)));
        assert!((d - 0.003).abs() < 1e-12);
        assert_eq!(g, Vector2::new(1.0, 0.0));
        // 1 mm into the web to the right of slot 0
        let (d, g) = m.void_distance(&(c + Vector2::new(0.011, 0.0)));
        assert!((d + 0.001).abs() < 1e-12);
        assert_eq!(g, Vector2::new(-1.0, 0.0));
        // beyond the outer edge
        let [ax, _] = m.params.outer_half_extents;
        let (d, g) = m.void_distance(&Point2::new(ax + 0.002, 0.0));
        assert!((d - 0.002).abs() < 1e-12);
        assert_eq!(g, Vector2::new(1.0, 0.0));
    }

    #[test]
    fn void_distance_matches_finite_differences() {
        let m = RackModel::new(RackParams::default()).unwrap();
        let h = 1e-7;
        for &(x, y) in &[(0.0123, -0.0311), (-0.141, 0.097), (0.0455, 0.0015), (0.149, -0.099), (0.0521, 0.0951)] {
            let q = Point2::new(x, y);
            let (_, g) = m.void_distance(&q);
            let fd = Vector2::new(
                m.void_distance(&Point2::new(x + h, y)).0 - m.void_distance(&Point2::new(x - h, y)).0,
                m.void_distance(&Point2::new(x, y + h)).0 - m.void_distance(&Point2::new(x, y - h)).0,
            ) / (2.0 * h);
            assert!((g - fd).norm() < 1e-6, "{q:?}: {g:?} vs {fd:?}");
        }
    }

    #[test]
    fn default_rack_layout() {
        let m = RackModel::new(RackParams::default()).unwrap();
        assert_eq!(m.slot_count(), 96);
        // row-major indexing
        let c0 = m.slot_center(0).unwrap();
        let c1 = m.slot_center(1).unwrap();
        let c12 = m.slot_center(12).unwrap();
        assert!((c1.x - c0.x - 0.024).abs() < 1e-12 && (c1.y - c0.y).abs() < 1e-12);
        assert!((c12.y - c0.y - 0.024).abs() < 1e-12);
        assert!(m.template.iter().all(|p| p.z == m.top_height()));
        assert!(m
            .template
            .iter()
            .all(|p| m.slot_containing_shrunk(&Point2::new(p.x, p.y), 1e-9).is_none()));
        assert!(m.template.len() > 1000);
        // both edges of every opening are present: the template is symmetric
        // about each slot centre along x
        let c = m.slot_center(0).unwrap();
        let on_edge = |x: f64| m.template.iter().filter(|p| (p.x - x).abs() < 1e-9).count();
        assert_eq!(on_edge(c.x - m.half_length()), on_edge(c.x + m.half_length()));
    }

    #[test]
    fn slot_lookup() {
        let m = RackModel::new(RackParams::default()).unwrap();
        for i in 0..m.slot_count() {
            assert_eq!(m.slot_containing(&m.slot_centers[i]), Some(i));
        }
        assert_eq!(m.slot_containing(&Point2::new(0.3, 0.0)), None);
        assert!(matches!(m.slot_center(96), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = RackParams::default();
        p.half_width = 0.0;
        assert!(RackModel::new(p).is_err());
        let mut p = RackParams::default();
        p.pitch_x = 0.015;
        assert!(RackModel::new(p).is_err());
        let mut p = RackParams::default();
        p.outer_half_extents = [0.1, 0.1];
        assert!(RackModel::new(p).is_err());
        let mut p = RackParams::default();
        p.rows = 0;
        assert!(RackModel::new(p).is_err());
    }
}
