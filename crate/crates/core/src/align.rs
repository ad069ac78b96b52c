//! Condition alignment: resampling a coarse layout onto the loop structure
//! of a target plan so the two can be compared corner-by-corner.
//!
//! The output plan always has exactly the target's loop count, per-loop
//! corner counts, and loop types; only the coordinates come from the coarse
//! layout. Room loops are matched to layout rooms by exact minimum-cost
//! assignment (type mismatch carries a large penalty, ties resolved by
//! center distance); matched rooms contribute a perimeter resampling of
//! their rectangle, unmatched rooms fall back to their own centroid. Door
//! loops are matched to the layout's synthesized door segments by center
//! distance, with the same centroid fallback.

use crate::assign::min_cost_matching;
use crate::init::{door_segment, map_room_name, InitRoom, LayoutInit};
use crate::types::{Corner, Floorplan, Loop, RoomType};
use crate::{CoreError, Result};

/// Cost penalty for pairing a room with a layout entry of a different type.
/// Far larger than any grid distance, far smaller than the assignment
/// solver's dummy cost, so wrong-type pairings beat leaving a room
/// unmatched but never beat a type-correct pairing.
pub const TYPE_MISMATCH_PENALTY: f64 = 1e6;

/// Matching cost between a typed point and another typed point: Euclidean
/// distance plus the mismatch penalty when types differ.
pub fn type_centroid_cost(
    a_type: RoomType,
    a_center: (f64, f64),
    b_type: RoomType,
    b_center: (f64, f64),
) -> f64 {
    let d = ((a_center.0 - b_center.0).powi(2) + (a_center.1 - b_center.1).powi(2)).sqrt();
    if a_type == b_type {
        d
    } else {
        TYPE_MISMATCH_PENALTY + d
    }
}

fn clamp_round(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// `n` evenly spaced points along the segment a..b, endpoints included.
fn resample_segment(a: (f64, f64), b: (f64, f64), n: usize) -> Vec<Corner> {
    if n == 1 {
        return vec![Corner::new(
            clamp_round((a.0 + b.0) / 2.0),
            clamp_round((a.1 + b.1) / 2.0),
        )];
    }
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            Corner::new(
                clamp_round(a.0 + (b.0 - a.0) * t),
                clamp_round(a.1 + (b.1 - a.1) * t),
            )
        })
        .collect()
}

/// Maps an arc-length position along a rectangle's perimeter (clockwise from
/// the top-left corner in screen coordinates) to a point.
fn rect_point_at(room: &InitRoom, s: f64) -> (f64, f64) {
    let (x, y) = (f64::from(room.x()), f64::from(room.y()));
    let (w, h) = (f64::from(room.w()), f64::from(room.h()));
    let s = s.rem_euclid(2.0 * (w + h));
    if s < w {
        (x + s, y)
    } else if s < w + h {
        (x + w, y + (s - w))
    } else if s < 2.0 * w + h {
        (x + w - (s - w - h), y + h)
    } else {
        (x, y + h - (s - 2.0 * w - h))
    }
}

/// Resamples a room rectangle's perimeter to exactly `n` corners, starting at
/// the top-left corner and walking clockwise. For `n >= 4` the rectangle's
/// own corners are always included (so `n == 4` reproduces the rectangle
/// exactly) and extra points bisect the longest remaining perimeter interval,
/// earliest first on ties. For `n < 4` the perimeter is sampled uniformly.
fn resample_rect_perimeter(room: &InitRoom, n: usize) -> Vec<Corner> {
    let (w, h) = (f64::from(room.w()), f64::from(room.h()));
    let perimeter = 2.0 * (w + h);
    let mut positions: Vec<f64> = if n >= 4 {
        vec![0.0, w, w + h, 2.0 * w + h]
    } else {
        (0..n).map(|k| perimeter * k as f64 / n as f64).collect()
    };
    while positions.len() < n {
        // Longest cyclic gap, earliest on ties.
        let m = positions.len();
        let (mut best_i, mut best_gap) = (0usize, -1.0f64);
        for i in 0..m {
            let a = positions[i];
            let b = if i + 1 < m { positions[i + 1] } else { positions[0] + perimeter };
            let gap = b - a;
            if gap > best_gap + 1e-9 {
                best_gap = gap;
                best_i = i;
            }
        }
        let a = positions[best_i];
        positions.push((a + best_gap / 2.0).rem_euclid(perimeter));
        positions.sort_by(|p, q| p.partial_cmp(q).unwrap());
    }
    positions
        .into_iter()
        .map(|s| {
            let (px, py) = rect_point_at(room, s);
            Corner::new(clamp_round(px), clamp_round(py))
        })
        .collect()
}

fn centroid_fallback(lp: &Loop) -> Vec<Corner> {
    let (cx, cy) = lp.centroid();
    vec![Corner::new(clamp_round(cx), clamp_round(cy)); lp.corners.len()]
}

/// Aligns a coarse layout onto `target`'s loop structure. See the module
/// docs for the matching and resampling rules.
pub fn align_condition(target: &Floorplan, init: &LayoutInit) -> Result<Floorplan> {
    target.validate()?;
    init.validate()?;
    if init.rooms.is_empty() {
        return Err(CoreError::EmptyCondition);
    }

    let room_loops: Vec<(usize, &Loop)> = target.room_loops().collect();
    let door_loops: Vec<(usize, &Loop)> = target.door_loops().collect();

    // Match target rooms (rows) to layout rooms (columns).
    let room_cost: Vec<Vec<f64>> = room_loops
        .iter()
        .map(|(_, lp)| {
            init.rooms
                .iter()
                .map(|r| {
                    let init_type = map_room_name(&r.name);
                    let mismatch = init_type != Some(lp.room_type);
                    let base = type_centroid_cost(lp.room_type, lp.centroid(), lp.room_type, r.center());
                    if mismatch {
                        base + TYPE_MISMATCH_PENALTY
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect();
    let (room_assign, _) = min_cost_matching(&room_cost);

    // Match target doors (rows) to the layout's door segments (columns).
    let door_segments: Vec<((f64, f64), (f64, f64))> =
        init.rooms.iter().map(door_segment).collect();
    let door_cost: Vec<Vec<f64>> = door_loops
        .iter()
        .map(|(_, lp)| {
            let c = lp.centroid();
            door_segments
                .iter()
                .map(|(a, b)| {
                    let mid = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
                    ((c.0 - mid.0).powi(2) + (c.1 - mid.1).powi(2)).sqrt()
                })
                .collect()
        })
        .collect();
    let (door_assign, _) = min_cost_matching(&door_cost);

    // Assemble output loops in target order.
    let mut out: Vec<Option<Loop>> = vec![None; target.rooms.len()];
    for (row, (loop_idx, lp)) in room_loops.iter().enumerate() {
        let corners = match room_assign[row] {
            Some(col) => resample_rect_perimeter(&init.rooms[col], lp.corners.len()),
            None => centroid_fallback(lp),
        };
        out[*loop_idx] = Some(Loop::new(lp.room_type, corners));
    }
    for (row, (loop_idx, lp)) in door_loops.iter().enumerate() {
        let corners = match door_assign[row] {
            Some(col) => {
                let (a, b) = door_segments[col];
                resample_segment(a, b, lp.corners.len())
            }
            None => centroid_fallback(lp),
        };
        out[*loop_idx] = Some(Loop::new(lp.room_type, corners));
    }

    Ok(Floorplan {
        rooms: out.into_iter().map(|lp| lp.expect("every loop assembled")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{init_to_floorplan, Direction};

    fn room(name: &str, x: u8, y: u8, w: u8, h: u8) -> InitRoom {
        InitRoom {
            name: name.into(),
            style: "modern".into(),
            position: [x, y],
            size: [w, h],
            door: Direction::Up,
        }
    }

    #[test]
    fn identical_rectangle_aligns_to_identity() {
        let init = LayoutInit::new(vec![room("LivingRoom", 10, 10, 50, 40)]).unwrap();
        let target = init_to_floorplan(&init).unwrap();
        let cond = align_condition(&target, &init).unwrap();
        // Room loop reproduced corner-for-corner, same order.
        assert_eq!(cond.rooms[0].corners, target.rooms[0].corners);
        // Door segment reproduced too.
        assert_eq!(cond.rooms[1].corners, target.rooms[1].corners);
    }

    #[test]
    fn six_corner_target_gets_six_points_on_the_rectangle_perimeter() {
        let init = LayoutInit::new(vec![room("Kitchen", 20, 20, 60, 40)]).unwrap();
        let target = Floorplan::new(vec![Loop::new(
            RoomType::Kitchen,
            vec![
                Corner::new(20, 20),
                Corner::new(50, 20),
                Corner::new(80, 20),
                Corner::new(80, 60),
                Corner::new(50, 60),
                Corner::new(20, 60),
            ],
        )])
        .unwrap();
        let cond = align_condition(&target, &init).unwrap();
        assert_eq!(cond.rooms[0].corners.len(), 6);
        for c in &cond.rooms[0].corners {
            let on_perimeter = (c.x == 20 || c.x == 80) && (20..=60).contains(&c.y)
                || (c.y == 20 || c.y == 60) && (20..=80).contains(&c.x);
            assert!(on_perimeter, "corner [{}, {}] off the rectangle", c.x, c.y);
        }
        // The four rectangle corners are among the resampled points.
        for expect in [(20, 20), (80, 20), (80, 60), (20, 60)] {
            assert!(cond.rooms[0]
                .corners
                .iter()
                .any(|c| (c.x, c.y) == expect));
        }
    }

    #[test]
    fn matching_is_input_order_invariant() {
        let a = room("Kitchen", 10, 10, 40, 40);
        let b = room("Bathroom", 100, 100, 30, 30);
        let target = init_to_floorplan(&LayoutInit::new(vec![a.clone(), b.clone()]).unwrap()).unwrap();
        let fwd = align_condition(&target, &LayoutInit::new(vec![a.clone(), b.clone()]).unwrap()).unwrap();
        let rev = align_condition(&target, &LayoutInit::new(vec![b, a]).unwrap()).unwrap();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn unmatched_rooms_fall_back_to_their_centroid() {
        // Two target rooms, single layout room: the type-matching room wins
        // the assignment, the other repeats its own centroid.
        let init = LayoutInit::new(vec![room("Kitchen", 10, 10, 40, 40)]).unwrap();
        let target = Floorplan::new(vec![
            Loop::new(
                RoomType::Kitchen,
                vec![
                    Corner::new(10, 10),
                    Corner::new(50, 10),
                    Corner::new(50, 50),
                    Corner::new(10, 50),
                ],
            ),
            Loop::new(
                RoomType::Balcony,
                vec![
                    Corner::new(100, 100),
                    Corner::new(140, 100),
                    Corner::new(140, 120),
                    Corner::new(100, 120),
                ],
            ),
        ])
        .unwrap();
        let cond = align_condition(&target, &init).unwrap();
        assert_eq!(cond.rooms[0].corners[0], Corner::new(10, 10));
        let c = Corner::new(120, 110);
        assert_eq!(cond.rooms[1].corners, vec![c; 4]);
    }

    #[test]
    fn structure_always_mirrors_the_target() {
        let init = LayoutInit::new(vec![
            room("LivingRoom", 10, 10, 80, 60),
            room("Kitchen", 90, 10, 60, 60),
            room("Bathroom", 150, 10, 40, 60),
        ])
        .unwrap();
        let target = init_to_floorplan(&init).unwrap();
        let cond = align_condition(&target, &init).unwrap();
        assert_eq!(cond.rooms.len(), target.rooms.len());
        for (c, t) in cond.rooms.iter().zip(&target.rooms) {
            assert_eq!(c.corners.len(), t.corners.len());
            assert_eq!(c.room_type, t.room_type);
        }
    }

    #[test]
    fn empty_condition_is_an_error() {
        let init = LayoutInit { rooms: vec![] };
        let target =
            init_to_floorplan(&LayoutInit::new(vec![room("Kitchen", 10, 10, 40, 40)]).unwrap())
                .unwrap();
        assert!(align_condition(&target, &init).is_err());
    }
}
