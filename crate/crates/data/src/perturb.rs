//! Coarse layout conditions derived from finished plans.
//!
//! [`perturb_to_init`] replaces each room with its axis-aligned bounding box,
//! jitters position and size by independent uniform integer offsets in
//! `[-jitter, +jitter]`, and clamps the result to the grid. The clamps are
//! chosen so every emitted coordinate still sits within Chebyshev distance
//! `jitter` of its source value: width/height clamp to `[1, 255]` first, then
//! x/y clamp to `[0, 255 - w]` so the rectangle stays on the grid.
//!
//! Draw order is part of the contract: rooms in plan order, and per room
//! `dx, dy, dw, dh`. The order (and the draws themselves) is identical for
//! every jitter value — `jitter = 0` draws zeros rather than skipping draws —
//! so two calls differing only in `jitter` perturb "in the same direction".
//!
//! Each room's door faces the nearest connected room (by centroid distance
//! over the plan's adjacency graph, larger axis offset wins); rooms with no
//! neighbor face up. Names come from the room-type labels, deduplicated with
//! numeric suffixes, so converting the init back to a plan preserves types.

use crate::Result;
use floorgen_core::bubble::{extract_bubble_graph, BubbleGraph};
use floorgen_core::init::{dedup_names, Direction, InitRoom, LayoutInit};
use floorgen_core::types::Floorplan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Geometric slack (grid units) when reading adjacency off the plan.
const ADJACENCY_EPS: f64 = 2.0;

/// Door direction for the room at `loop_index`: toward the nearest adjacent
/// room's centroid, with the larger axis offset deciding; `Up` when isolated.
fn door_direction(plan: &Floorplan, graph: &BubbleGraph, loop_index: usize) -> Direction {
    let (cx, cy) = plan.rooms[loop_index].centroid();
    let nearest = graph
        .edges
        .iter()
        .filter_map(|&(a, b)| match (a == loop_index, b == loop_index) {
            (true, _) => Some(b),
            (_, true) => Some(a),
            _ => None,
        })
        .map(|other| {
            let (nx, ny) = plan.rooms[other].centroid();
            ((nx - cx).powi(2) + (ny - cy).powi(2), other)
        })
        .min_by(|a, b| a.partial_cmp(b).expect("finite centroid distances"));
    match nearest {
        None => Direction::Up,
        Some((_, other)) => {
            let (nx, ny) = plan.rooms[other].centroid();
            let (dx, dy) = (nx - cx, ny - cy);
            if dy.abs() > dx.abs() {
                if dy < 0.0 {
                    Direction::Up
                } else {
                    Direction::Down
                }
            } else if dx < 0.0 {
                Direction::Left
            } else {
                Direction::Right
            }
        }
    }
}

/// Derives a coarse layout condition from `plan` (see module docs).
///
/// Deterministic per `(plan, jitter, seed)`. The result always passes layout
/// validation and aligns back onto `plan`.
pub fn perturb_to_init(plan: &Floorplan, jitter: u8, seed: u64) -> Result<LayoutInit> {
    plan.validate()?;
    let graph = extract_bubble_graph(plan, ADJACENCY_EPS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = i32::from(jitter);
    let mut rooms = Vec::new();
    for (loop_index, lp) in plan.room_loops() {
        let ((x0, y0), (x1, y1)) = lp.bbox();
        let (dx, dy, dw, dh) = (
            rng.gen_range(-j..=j),
            rng.gen_range(-j..=j),
            rng.gen_range(-j..=j),
            rng.gen_range(-j..=j),
        );
        let w = (i32::from(x1) - i32::from(x0) + dw).clamp(1, 255);
        let h = (i32::from(y1) - i32::from(y0) + dh).clamp(1, 255);
        let x = (i32::from(x0) + dx).clamp(0, 255 - w);
        let y = (i32::from(y0) + dy).clamp(0, 255 - h);
        rooms.push(InitRoom {
            name: lp.room_type.label().to_string(),
            style: "modern".to_string(),
            position: [x as u8, y as u8],
            size: [w as u8, h as u8],
            door: door_direction(plan, &graph, loop_index),
        });
    }
    dedup_names(&mut rooms);
    Ok(LayoutInit::new(rooms)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synth_generate;
    use floorgen_core::init::{init_to_floorplan, map_room_name};
    use floorgen_core::types::{Corner, Loop, RoomType};

    fn rect_loop(room_type: RoomType, x: u8, y: u8, w: u8, h: u8) -> Loop {
        Loop::new(
            room_type,
            vec![
                Corner::new(x, y),
                Corner::new(x + w, y),
                Corner::new(x + w, y + h),
                Corner::new(x, y + h),
            ],
        )
    }

    fn door(a: (u8, u8), b: (u8, u8)) -> Loop {
        Loop::new(
            RoomType::InteriorDoor,
            vec![Corner::new(a.0, a.1), Corner::new(b.0, b.1)],
        )
    }

    #[test]
    fn zero_jitter_reproduces_bounding_boxes() {
        let plan = synth_generate(1, 5, 21).unwrap().remove(0);
        let init = perturb_to_init(&plan, 0, 3).unwrap();
        for ((_, lp), room) in plan.room_loops().zip(&init.rooms) {
            let ((x0, y0), (x1, y1)) = lp.bbox();
            assert_eq!(room.position, [x0, y0]);
            assert_eq!(room.size, [x1 - x0, y1 - y0]);
        }

        // Converting the init back to a plan restores the exact rectangles.
        let round = init_to_floorplan(&init).unwrap();
        for ((_, orig), (_, back)) in plan.room_loops().zip(round.room_loops()) {
            assert_eq!(orig.bbox(), back.bbox());
            assert_eq!(orig.room_type, back.room_type);
        }
    }

    #[test]
    fn jitter_stays_within_the_chebyshev_bound() {
        let plan = synth_generate(1, 7, 40).unwrap().remove(0);
        for seed in 0..20u64 {
            let init = perturb_to_init(&plan, 8, seed).unwrap();
            for ((_, lp), room) in plan.room_loops().zip(&init.rooms) {
                let ((x0, y0), (x1, y1)) = lp.bbox();
                let diffs = [
                    i32::from(room.position[0]) - i32::from(x0),
                    i32::from(room.position[1]) - i32::from(y0),
                    i32::from(room.size[0]) - i32::from(x1 - x0),
                    i32::from(room.size[1]) - i32::from(y1 - y0),
                ];
                assert!(diffs.iter().all(|d| d.abs() <= 8), "seed {seed}: {diffs:?}");
            }
        }
    }

    #[test]
    fn non_rectangular_room_becomes_its_bounding_box() {
        // 6-corner L-shape occupying [20,120]x[20,120] minus its lower-right
        // quadrant, next to a plain room, with a connecting door.
        let l_room = Loop::new(
            RoomType::LivingRoom,
            vec![
                Corner::new(20, 20),
                Corner::new(120, 20),
                Corner::new(120, 70),
                Corner::new(70, 70),
                Corner::new(70, 120),
                Corner::new(20, 120),
            ],
        );
        let plan = Floorplan::new(vec![
            l_room,
            rect_loop(RoomType::Bedroom, 120, 20, 60, 50),
            door((120, 35), (120, 47)),
        ])
        .unwrap();
        let init = perturb_to_init(&plan, 0, 0).unwrap();
        assert_eq!(init.rooms[0].position, [20, 20]);
        assert_eq!(init.rooms[0].size, [100, 100], "L-shape coarsens to its bbox");
    }

    #[test]
    fn names_dedup_and_map_back_to_their_types() {
        let plan = Floorplan::new(vec![
            rect_loop(RoomType::Bedroom, 8, 8, 100, 100),
            rect_loop(RoomType::Bedroom, 108, 8, 100, 100),
            rect_loop(RoomType::WalkInCloset, 8, 108, 100, 80),
            door((108, 40), (108, 52)),
            door((40, 108), (52, 108)),
        ])
        .unwrap();
        let init = perturb_to_init(&plan, 0, 0).unwrap();
        let names: Vec<&str> = init.rooms.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["Bedroom", "Bedroom 2", "WalkInCloset"]);
        for (room, (_, lp)) in init.rooms.iter().zip(plan.room_loops()) {
            assert_eq!(map_room_name(&room.name), Some(lp.room_type), "{}", room.name);
        }

        // The label/name mapping round-trips for every non-door type.
        for t in RoomType::ALL.iter().copied().filter(|t| !t.is_door()) {
            assert_eq!(map_room_name(t.label()), Some(t), "{}", t.label());
        }
    }

    #[test]
    fn doors_face_the_nearest_connected_room() {
        let side_by_side = Floorplan::new(vec![
            rect_loop(RoomType::LivingRoom, 8, 8, 100, 100),
            rect_loop(RoomType::Kitchen, 108, 8, 80, 100),
            door((108, 50), (108, 62)),
        ])
        .unwrap();
        let init = perturb_to_init(&side_by_side, 0, 0).unwrap();
        assert_eq!(init.rooms[0].door, Direction::Right);
        assert_eq!(init.rooms[1].door, Direction::Left);

        let stacked = Floorplan::new(vec![
            rect_loop(RoomType::LivingRoom, 8, 8, 100, 100),
            rect_loop(RoomType::Kitchen, 8, 108, 100, 80),
            door((50, 108), (62, 108)),
        ])
        .unwrap();
        let init = perturb_to_init(&stacked, 0, 0).unwrap();
        assert_eq!(init.rooms[0].door, Direction::Down);
        assert_eq!(init.rooms[1].door, Direction::Up);

        let lone = Floorplan::new(vec![rect_loop(RoomType::LivingRoom, 8, 8, 100, 100)]).unwrap();
        let init = perturb_to_init(&lone, 0, 0).unwrap();
        assert_eq!(init.rooms[0].door, Direction::Up, "no neighbor defaults up");
    }

    #[test]
    fn perturbation_is_deterministic_per_seed() {
        let plan = synth_generate(1, 6, 2).unwrap().remove(0);
        let a = perturb_to_init(&plan, 8, 9).unwrap();
        let b = perturb_to_init(&plan, 8, 9).unwrap();
        assert_eq!(a, b);
        let c = perturb_to_init(&plan, 8, 10).unwrap();
        assert_ne!(a, c, "different seed, different jitter");
    }
}
