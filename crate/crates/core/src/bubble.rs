//! Room adjacency ("bubble") graph extraction.
//!
//! Nodes are the plan's non-door loops, identified by their loop index.
//! Edges come from doors: two rooms are adjacent when a door loop's bounding
//! box, inflated by `eps`, intersects both. Plans with no door loops at all
//! fall back to boundary proximity (rooms whose loop boundaries come within
//! `eps` of each other).

use crate::types::{Floorplan, Loop, RoomType};
use std::collections::BTreeSet;

/// Adjacency graph over a plan's rooms. `nodes` holds (loop index, type)
/// in plan order; `edges` holds unordered loop-index pairs (a < b).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BubbleGraph {
    pub nodes: Vec<(usize, RoomType)>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl BubbleGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// True when the two loop indices are connected by an edge.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.contains(&key)
    }
}

/// Axis-aligned box in continuous coordinates.
#[derive(Debug, Clone, Copy)]
struct Rect {
    min: (f64, f64),
    max: (f64, f64),
}

impl Rect {
    fn of_loop_inflated(lp: &Loop, eps: f64) -> Rect {
        let ((x0, y0), (x1, y1)) = lp.bbox();
        Rect {
            min: (f64::from(x0) - eps, f64::from(y0) - eps),
            max: (f64::from(x1) + eps, f64::from(y1) + eps),
        }
    }

    fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.min.0 && p.0 <= self.max.0 && p.1 >= self.min.1 && p.1 <= self.max.1
    }

    fn corners(&self) -> [(f64, f64); 4] {
        [
            self.min,
            (self.max.0, self.min.1),
            self.max,
            (self.min.0, self.max.1),
        ]
    }

    fn edges(&self) -> [((f64, f64), (f64, f64)); 4] {
        let c = self.corners();
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }
}

/// Even-odd point-in-polygon test (half-open on horizontal crossings).
fn point_in_polygon(p: (f64, f64), poly: &Loop) -> bool {
    let n = poly.corners.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    for i in 0..n {
        let (ax, ay) = poly.corners[i].as_f64();
        let (bx, by) = poly.corners[(i + 1) % n].as_f64();
        if (ay > p.1) != (by > p.1) {
            let x_cross = ax + (p.1 - ay) * (bx - ax) / (by - ay);
            if p.0 < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Proper or touching intersection of two closed segments.
fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    }
    fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
        p.0 >= a.0.min(b.0) - 1e-12
            && p.0 <= a.0.max(b.0) + 1e-12
            && p.1 >= a.1.min(b.1) - 1e-12
            && p.1 <= a.1.max(b.1) + 1e-12
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1.abs() < 1e-12 && on_segment(q1, q2, p1))
        || (d2.abs() < 1e-12 && on_segment(q1, q2, p2))
        || (d3.abs() < 1e-12 && on_segment(p1, p2, q1))
        || (d4.abs() < 1e-12 && on_segment(p1, p2, q2))
}

/// Does an axis-aligned box touch or overlap a polygonal loop (boundary or
/// interior)?
fn rect_intersects_loop(rect: &Rect, lp: &Loop) -> bool {
    // Any polygon corner inside the box.
    if lp.corners.iter().any(|c| rect.contains(c.as_f64())) {
        return true;
    }
    // Any box corner inside the polygon.
    if rect.corners().iter().any(|&p| point_in_polygon(p, lp)) {
        return true;
    }
    // Any edge crossing.
    let n = lp.corners.len();
    for i in 0..n {
        let a = lp.corners[i].as_f64();
        let b = lp.corners[(i + 1) % n].as_f64();
        for (r1, r2) in rect.edges() {
            if segments_intersect(a, b, r1, r2) {
                return true;
            }
        }
    }
    false
}

/// Minimum distance between a point and a segment.
fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 <= 1e-24 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Minimum distance between the boundaries of two loops.
fn boundary_distance(a: &Loop, b: &Loop) -> f64 {
    let na = a.corners.len();
    let nb = b.corners.len();
    let mut best = f64::INFINITY;
    for i in 0..na {
        let a1 = a.corners[i].as_f64();
        let a2 = a.corners[(i + 1) % na].as_f64();
        for j in 0..nb {
            let b1 = b.corners[j].as_f64();
            let b2 = b.corners[(j + 1) % nb].as_f64();
            if segments_intersect(a1, a2, b1, b2) {
                return 0.0;
            }
            best = best
                .min(point_segment_distance(a1, b1, b2))
                .min(point_segment_distance(a2, b1, b2))
                .min(point_segment_distance(b1, a1, a2))
                .min(point_segment_distance(b2, a1, a2));
        }
    }
    best
}

/// Extracts the room adjacency graph of `plan`. `eps` is the geometric slack
/// (in grid units) for door-to-room and room-to-room contact tests; 2.0 is a
/// sensible default for integer-grid plans.
pub fn extract_bubble_graph(plan: &Floorplan, eps: f64) -> BubbleGraph {
    let rooms: Vec<(usize, &Loop)> = plan.room_loops().collect();
    let nodes: Vec<(usize, RoomType)> = rooms.iter().map(|(i, lp)| (*i, lp.room_type)).collect();
    let mut edges = BTreeSet::new();

    let doors: Vec<&Loop> = plan.door_loops().map(|(_, lp)| lp).collect();
    if doors.is_empty() {
        // Fallback: boundary proximity.
        for i in 0..rooms.len() {
            for j in (i + 1)..rooms.len() {
                if boundary_distance(rooms[i].1, rooms[j].1) <= eps {
                    edges.insert((rooms[i].0, rooms[j].0));
                }
            }
        }
    } else {
        for door in doors {
            let zone = Rect::of_loop_inflated(door, eps);
            let touched: Vec<usize> = rooms
                .iter()
                .filter(|(_, lp)| rect_intersects_loop(&zone, lp))
                .map(|(i, _)| *i)
                .collect();
            for i in 0..touched.len() {
                for j in (i + 1)..touched.len() {
                    edges.insert((touched[i], touched[j]));
                }
            }
        }
    }

    BubbleGraph { nodes, edges }
}
