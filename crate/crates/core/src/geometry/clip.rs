use nalgebra::Point2;

use super::Polygon2;

/// Axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect2 {
    pub min: Point2<f64>,
    pub max: Point2<f64>,
}

impl Rect2 {
    pub fn new(min: Point2<f64>, max: Point2<f64>) -> Self {
        Self { min, max }
    }

    pub fn from_center(center: Point2<f64>, half_x: f64, half_y: f64) -> Self {
        Self::new(
            Point2::new(center.x - half_x, center.y - half_y),
            Point2::new(center.x + half_x, center.y + half_y),
        )
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x).max(0.0) * (self.max.y - self.min.y).max(0.0)
    }

    pub fn contains(&self, p: &Point2<f64>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn to_polygon(&self) -> Polygon2 {
        Polygon2::new(vec![
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ])
    }
}

#[derive(Clone, Copy)]
enum Edge {
    Left(f64),
    Right(f64),
    Bottom(f64),
    Top(f64),
}

impl Edge {
    #[inline]
    fn inside(self, p: &Point2<f64>) -> bool {
        match self {
            Edge::Left(x) => p.x >= x,
            Edge::Right(x) => p.x <= x,
            Edge::Bottom(y) => p.y >= y,
            Edge::Top(y) => p.y <= y,
        }
    }

    #[inline]
    fn intersect(self, a: &Point2<f64>, b: &Point2<f64>) -> Point2<f64> {
        match self {
            Edge::Left(x) | Edge::Right(x) => {
                let t = (x - a.x) / (b.x - a.x);
                Point2::new(x, a.y + t * (b.y - a.y))
            }
            Edge::Bottom(y) | Edge::Top(y) => {
                let t = (y - a.y) / (b.y - a.y);
                Point2::new(a.x + t * (b.x - a.x), y)
            }
        }
    }
}

/// Sutherland-Hodgman clip of a convex CCW polygon against an axis-aligned
/// rectangle. Disjoint inputs give an empty polygon.
pub fn polygon_clip(subject: &Polygon2, rect: &Rect2) -> Polygon2 {
    let edges = [
        Edge::Left(rect.min.x),
        Edge::Right(rect.max.x),
        Edge::Bottom(rect.min.y),
        Edge::Top(rect.max.y),
    ];
    let mut output = subject.vertices.clone();
    for edge in edges {
        if output.is_empty() {
            break;
        }
        let input = std::mem::take(&mut output);
        let mut prev = *input.last().unwrap();
        for cur in input {
            let cur_in = edge.inside(&cur);
            let prev_in = edge.inside(&prev);
            if cur_in {
                if !prev_in {
                    output.push(edge.intersect(&prev, &cur));
                }
                output.push(cur);
            } else if prev_in {
                output.push(edge.intersect(&prev, &cur));
            }
            prev = cur;
        }
    }
    let clipped = Polygon2::new(output);
    if clipped.vertices.len() < 3 || clipped.area() == 0.0 {
        Polygon2::default()
    } else {
        clipped
    }
}
