//! Bird's-eye-view rotated rectangles and their overlap measures.

use alloc::vec::Vec;

use crate::math::{cos, sin};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

/// A rotated rectangle on the ground plane. `length` runs along the heading,
/// `width` across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BevBox {
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub length: f64,
    pub yaw: f64,
}

impl BevBox {
    pub fn new(cx: f64, cy: f64, width: f64, length: f64, yaw: f64) -> Self {
        BevBox {
            cx,
            cy,
            width,
            length,
            yaw,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.length
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Point; 4] {
        let (c, s) = (cos(self.yaw), sin(self.yaw));
        let (hl, hw) = (0.5 * self.length, 0.5 * self.width);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
            .map(|(dx, dy)| Point::new(self.cx + dx * c - dy * s, self.cy + dx * s + dy * c))
    }
}

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * acc
}

/// Sutherland-Hodgman clip of `subject` by the convex counter-clockwise
/// polygon `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output: Vec<Point> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let edge = b.sub(a);
        let inside = |p: Point| edge.cross(p.sub(a)) >= 0.0;
        let input = core::mem::take(&mut output);
        let m = input.len();
        for k in 0..m {
            let cur = input[k];
            let prev = input[(k + m - 1) % m];
            let (cin, pin) = (inside(cur), inside(prev));
            if cin {
                if !pin {
                    output.push(segment_line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if pin {
                output.push(segment_line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

fn segment_line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let edge = b.sub(a);
    let dp = edge.cross(p.sub(a));
    let dq = edge.cross(q.sub(a));
    let t = dp / (dp - dq);
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Convex hull by Andrew's monotone chain, counter-clockwise.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: &mut dyn Iterator<Item = &Point> = if pass == 0 {
            &mut pts.iter()
        } else {
            &mut pts.iter().rev()
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if a.sub(o).cross(p.sub(o)) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

pub fn intersection_area(a: &BevBox, b: &BevBox) -> f64 {
    polygon_area(&clip_convex(&a.corners(), &b.corners())).max(0.0)
}

pub fn iou(a: &BevBox, b: &BevBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Generalized IoU with the convex hull of both boxes as the enclosing
/// region; lies in (-1, 1].
pub fn giou(a: &BevBox, b: &BevBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    let mut pts: Vec<Point> = a.corners().to_vec();
    pts.extend_from_slice(&b.corners());
    let hull = polygon_area(&convex_hull(&pts));
    let iou = inter / union;
    if hull <= 0.0 {
        return iou;
    }
    iou - (hull - union) / hull
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_boxes() {
        let b = BevBox::new(1.0, 2.0, 1.8, 4.5, 0.7);
        assert!((iou(&b, &b) - 1.0).abs() < 1e-12);
        assert!((giou(&b, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_aligned_overlap() {
        let a = BevBox::new(0.0, 0.0, 2.0, 2.0, 0.0);
        let b = BevBox::new(1.0, 0.0, 2.0, 2.0, 0.0);
        assert!((intersection_area(&a, &b) - 2.0).abs() < 1e-12);
        assert!((iou(&a, &b) - 2.0 / 6.0).abs() < 1e-12);
        // Hull is the 3x2 rectangle, equal to the union: GIoU = IoU.
        assert!((giou(&a, &b) - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_boxes_have_negative_giou() {
        let a = BevBox::new(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = BevBox::new(10.0, 0.0, 1.0, 1.0, 0.3);
        assert_eq!(iou(&a, &b), 0.0);
        assert!(giou(&a, &b) < 0.0);
    }

    #[test]
    fn rotated_square_octagon() {
        // Unit square and its 45° rotation about the same center overlap in
        // a regular octagon of area 2(√2 − 1).
        let a = BevBox::new(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = BevBox::new(0.0, 0.0, 1.0, 1.0, core::f64::consts::FRAC_PI_4);
        let expect = 2.0 * (2f64.sqrt() - 1.0);
        assert!((intersection_area(&a, &b) - expect).abs() < 1e-12);
    }
}
