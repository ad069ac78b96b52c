//! Synthetic floorplan generation by recursive guillotine splits.
//!
//! Each sample tiles the fixed `[8, 247]²` region into `room_count`
//! axis-aligned rectangles with every side at least [`MIN_SIDE`] units, using
//! randomized axis-aligned cuts. A cut of a rectangle that still owes `k`
//! rooms assigns `k1` rooms to one child and `k − k1` to the other, and is
//! only considered when both children can still fit their quota (a child
//! spanning `w × h` units fits at most `⌊w/24⌋·⌊h/24⌋` rooms). At least one
//! such cut always exists while the quota fits, so splitting never dead-ends.
//!
//! Room types follow a fixed policy over the area ranking (largest first,
//! ties broken by position):
//!
//! | rank          | type                      |
//! |---------------|---------------------------|
//! | 0 (largest)   | LivingRoom                |
//! | 1             | Kitchen                   |
//! | 2             | Bathroom                  |
//! | last (smallest) | Balcony, when 5+ rooms  |
//! | all others    | Bedroom                   |
//!
//! Doors: rooms sharing a wall segment of at least [`DOOR_MIN_OVERLAP`] units
//! are adjacent; one interior door is placed per edge of a breadth-first
//! spanning tree of that adjacency graph, centered on the shared segment. In
//! rare layouts the thresholded adjacency graph is disconnected; the sample
//! is then regenerated (bounded retries).
//!
//! Determinism: sample `i` uses its own RNG seeded from `seed` and `i`, so a
//! sample's content depends only on `(room_count, seed, i)`, never on how
//! many samples are requested.

use crate::{DataError, Result};
use floorgen_core::types::{Corner, Floorplan, Loop, RoomType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Smallest allowed room side, in grid units.
pub const MIN_SIDE: i32 = 24;
/// Minimum shared-wall overlap (units) for two rooms to count as adjacent.
pub const DOOR_MIN_OVERLAP: i32 = 8;
/// Longest door segment placed on a shared wall.
const DOOR_MAX_LEN: i32 = 12;
/// Layout attempts per sample before giving up.
const MAX_ATTEMPTS: usize = 32;
/// Odd 64-bit mix for per-sample seed derivation.
const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Inclusive corner coordinates of the generated region.
const REGION: Rect = Rect { x0: 8, y0: 8, x1: 247, y1: 247 };

/// Axis-aligned rectangle with inclusive integer corner coordinates; spans
/// `x1 - x0` units horizontally and `y1 - y0` vertically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Rect {
    fn width(self) -> i32 {
        self.x1 - self.x0
    }

    fn height(self) -> i32 {
        self.y1 - self.y0
    }

    fn area(self) -> i64 {
        i64::from(self.width()) * i64::from(self.height())
    }
}

fn ceil_div(a: i32, b: i32) -> i32 {
    (a + b - 1) / b
}

/// One feasible cut of a rectangle that owes `k` rooms.
#[derive(Debug, Clone, Copy)]
enum Cut {
    /// Split along x; the left child owes `k1` rooms.
    Vertical { k1: i32, lo: i32, hi: i32 },
    /// Split along y; the top child owes `k1` rooms.
    Horizontal { k1: i32, lo: i32, hi: i32 },
}

/// All cuts of `rect` into quotas `(k1, k - k1)` whose children can still
/// fit their quota at [`MIN_SIDE`]. `lo..=hi` is the legal coordinate range
/// for the cut line.
fn feasible_cuts(rect: Rect, k: i32) -> Vec<Cut> {
    let rows = rect.height() / MIN_SIDE;
    let cols = rect.width() / MIN_SIDE;
    let mut cuts = Vec::new();
    for k1 in 1..k {
        let k2 = k - k1;
        if rows > 0 {
            let lo = rect.x0 + MIN_SIDE * ceil_div(k1, rows);
            let hi = rect.x1 - MIN_SIDE * ceil_div(k2, rows);
            if lo <= hi {
                cuts.push(Cut::Vertical { k1, lo, hi });
            }
        }
        if cols > 0 {
            let lo = rect.y0 + MIN_SIDE * ceil_div(k1, cols);
            let hi = rect.y1 - MIN_SIDE * ceil_div(k2, cols);
            if lo <= hi {
                cuts.push(Cut::Horizontal { k1, lo, hi });
            }
        }
    }
    cuts
}

/// Recursively splits `region` into exactly `k` rectangles. Never fails
/// while `⌊w/24⌋·⌊h/24⌋ ≥ k` holds for the root, which the caller ensures.
fn split_region(region: Rect, k: i32, rng: &mut ChaCha8Rng) -> Vec<Rect> {
    let mut stack = vec![(region, k)];
    let mut out = Vec::with_capacity(k as usize);
    while let Some((rect, owed)) = stack.pop() {
        if owed == 1 {
            out.push(rect);
            continue;
        }
        let cuts = feasible_cuts(rect, owed);
        assert!(!cuts.is_empty(), "guillotine split dead-ended on {rect:?} owing {owed}");
        match cuts[rng.gen_range(0..cuts.len())] {
            Cut::Vertical { k1, lo, hi } => {
                let x = rng.gen_range(lo..=hi);
                stack.push((Rect { x0: x, ..rect }, owed - k1));
                stack.push((Rect { x1: x, ..rect }, k1));
            }
            Cut::Horizontal { k1, lo, hi } => {
                let y = rng.gen_range(lo..=hi);
                stack.push((Rect { y0: y, ..rect }, owed - k1));
                stack.push((Rect { y1: y, ..rect }, k1));
            }
        }
    }
    out
}

/// Applies the documented type table to area-ranked rooms (see module docs).
fn assign_types(n: usize) -> Vec<RoomType> {
    (0..n)
        .map(|rank| match rank {
            0 => RoomType::LivingRoom,
            1 => RoomType::Kitchen,
            2 => RoomType::Bathroom,
            r if r == n - 1 && n >= 5 => RoomType::Balcony,
            _ => RoomType::Bedroom,
        })
        .collect()
}

/// Overlap span `(lo, hi)` of two inclusive 1-D ranges, or `None` when the
/// shared span is shorter than [`DOOR_MIN_OVERLAP`].
fn overlap(a0: i32, a1: i32, b0: i32, b1: i32) -> Option<(i32, i32)> {
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    (hi - lo >= DOOR_MIN_OVERLAP).then_some((lo, hi))
}

/// A shared wall between two ranked rooms: the fixed coordinate, the overlap
/// span along the wall, and whether the wall is vertical.
#[derive(Debug, Clone, Copy)]
struct SharedWall {
    at: i32,
    lo: i32,
    hi: i32,
    vertical: bool,
}

/// Shared walls with enough overlap for a door, keyed by room-index pair
/// `(i, j)` with `i < j`, in lexicographic order.
fn shared_walls(rects: &[Rect]) -> Vec<((usize, usize), SharedWall)> {
    let mut walls = Vec::new();
    for i in 0..rects.len() {
        for j in (i + 1)..rects.len() {
            let (a, b) = (rects[i], rects[j]);
            let vertical = if a.x1 == b.x0 {
                Some(a.x1)
            } else if b.x1 == a.x0 {
                Some(b.x1)
            } else {
                None
            };
            if let Some(at) = vertical {
                if let Some((lo, hi)) = overlap(a.y0, a.y1, b.y0, b.y1) {
                    walls.push(((i, j), SharedWall { at, lo, hi, vertical: true }));
                    continue;
                }
            }
            let horizontal = if a.y1 == b.y0 {
                Some(a.y1)
            } else if b.y1 == a.y0 {
                Some(b.y1)
            } else {
                None
            };
            if let Some(at) = horizontal {
                if let Some((lo, hi)) = overlap(a.x0, a.x1, b.x0, b.x1) {
                    walls.push(((i, j), SharedWall { at, lo, hi, vertical: false }));
                }
            }
        }
    }
    walls
}

/// Breadth-first spanning tree over the shared-wall graph starting at room 0.
/// Returns the tree's wall list, or `None` when some room is unreachable.
fn spanning_tree(n: usize, walls: &[((usize, usize), SharedWall)]) -> Option<Vec<SharedWall>> {
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    let mut queue = VecDeque::from([0usize]);
    while let Some(room) = queue.pop_front() {
        for &((i, j), wall) in walls {
            let other = match (i == room, j == room) {
                (true, _) => j,
                (_, true) => i,
                _ => continue,
            };
            if !visited[other] {
                visited[other] = true;
                tree.push(wall);
                queue.push_back(other);
            }
        }
    }
    visited.iter().all(|&v| v).then_some(tree)
}

/// Two-corner interior-door loop centered on a shared wall segment.
fn door_loop(wall: SharedWall) -> Loop {
    let span = wall.hi - wall.lo;
    let len = DOOR_MAX_LEN.min(span - 2).max(2);
    let start = wall.lo + (span - len) / 2;
    let (a, b) = if wall.vertical {
        ((wall.at, start), (wall.at, start + len))
    } else {
        ((start, wall.at), (start + len, wall.at))
    };
    Loop::new(
        RoomType::InteriorDoor,
        vec![Corner::new(a.0 as u8, a.1 as u8), Corner::new(b.0 as u8, b.1 as u8)],
    )
}

fn room_loop(room_type: RoomType, r: Rect) -> Loop {
    let (x0, y0, x1, y1) = (r.x0 as u8, r.y0 as u8, r.x1 as u8, r.y1 as u8);
    Loop::new(
        room_type,
        vec![
            Corner::new(x0, y0),
            Corner::new(x1, y0),
            Corner::new(x1, y1),
            Corner::new(x0, y1),
        ],
    )
}

/// One generation attempt; `None` when the door graph left a room unreachable.
fn try_sample(room_count: usize, rng: &mut ChaCha8Rng) -> Option<Result<Floorplan>> {
    let mut rects = split_region(REGION, room_count as i32, rng);
    // Area rank, largest first; ties broken by position for determinism.
    rects.sort_by_key(|r| (std::cmp::Reverse(r.area()), r.x0, r.y0));
    let types = assign_types(room_count);

    let walls = shared_walls(&rects);
    let tree = spanning_tree(room_count, &walls)?;

    let mut loops: Vec<Loop> =
        types.into_iter().zip(&rects).map(|(t, &r)| room_loop(t, r)).collect();
    loops.extend(tree.into_iter().map(door_loop));
    Some(Floorplan::new(loops).map_err(DataError::Core))
}

/// Generates `n_samples` synthetic plans of exactly `room_count` rooms.
///
/// `room_count` must be in `2..=10`. Output is deterministic per
/// `(room_count, seed)` and per sample index (see module docs).
pub fn synth_generate(n_samples: usize, room_count: usize, seed: u64) -> Result<Vec<Floorplan>> {
    if !(2..=10).contains(&room_count) {
        return Err(DataError::Config(format!(
            "room_count must be in 2..=10, got {room_count}"
        )));
    }
    let mut plans = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(SEED_MIX));
        let mut produced = None;
        for _ in 0..MAX_ATTEMPTS {
            if let Some(plan) = try_sample(room_count, &mut rng) {
                produced = Some(plan?);
                break;
            }
        }
        match produced {
            Some(plan) => plans.push(plan),
            None => {
                return Err(DataError::Gen(format!(
                    "sample {i}: no connected door graph in {MAX_ATTEMPTS} attempts"
                )))
            }
        }
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use floorgen_core::bubble::extract_bubble_graph;
    use floorgen_core::raster::rasterize;

    /// Pixels of the 256-grid whose centers fall inside the region: centers
    /// `(i + 0.5)·255/256` lie in `(8, 247)` exactly for `i` in `8..=247`,
    /// i.e. 240 columns and rows.
    const REGION_PIXELS: usize = 240 * 240;

    #[test]
    fn two_rooms_share_a_full_edge_with_one_door() {
        let plans = synth_generate(4, 2, 11).unwrap();
        for plan in &plans {
            let rooms: Vec<&Loop> = plan.room_loops().map(|(_, lp)| lp).collect();
            assert_eq!(rooms.len(), 2);
            assert_eq!(plan.door_loops().count(), 1);

            // A single cut leaves the two rooms sharing one full region-spanning edge.
            let (a, b) = (rooms[0].bbox(), rooms[1].bbox());
            let vertical_cut = a.1 .0 == b.0 .0 || b.1 .0 == a.0 .0;
            if vertical_cut {
                assert_eq!((a.0 .1, a.1 .1), (8, 247), "full-height left/right rooms");
                assert_eq!((b.0 .1, b.1 .1), (8, 247));
            } else {
                assert!(a.1 .1 == b.0 .1 || b.1 .1 == a.0 .1, "rooms must abut");
                assert_eq!((a.0 .0, a.1 .0), (8, 247), "full-width top/bottom rooms");
                assert_eq!((b.0 .0, b.1 .0), (8, 247));
            }
        }
    }

    #[test]
    fn outputs_tile_the_region_exactly() {
        for &count in &[2usize, 5, 10] {
            let plan = synth_generate(1, count, 99).unwrap().remove(0);
            let grid = rasterize(&plan, 256).unwrap();
            let covered = grid.labels.iter().filter(|&&l| l >= 0).count();
            assert_eq!(covered, REGION_PIXELS, "{count} rooms must cover the region");

            // Pairwise disjoint: isolated per-room pixel counts must sum to the
            // union's count, which only holds when no pixel is claimed twice.
            let isolated: usize = plan
                .room_loops()
                .map(|(_, lp)| {
                    let solo = Floorplan::new(vec![lp.clone()]).unwrap();
                    let g = rasterize(&solo, 256).unwrap();
                    g.labels.iter().filter(|&&l| l >= 0).count()
                })
                .sum();
            assert_eq!(isolated, covered, "{count} rooms must not overlap");
        }
    }

    #[test]
    fn seeds_are_deterministic_and_samples_index_stable() {
        let a = synth_generate(3, 6, 7).unwrap();
        let b = synth_generate(3, 6, 7).unwrap();
        let lines = |plans: &[Floorplan]| -> Vec<String> {
            plans.iter().map(Floorplan::to_json_line).collect()
        };
        assert_eq!(lines(&a), lines(&b), "same seed, same output");

        let prefix = synth_generate(2, 6, 7).unwrap();
        assert_eq!(lines(&prefix), lines(&a[..2]), "sample i depends only on its index");

        let other = synth_generate(3, 6, 8).unwrap();
        assert_ne!(lines(&a), lines(&other), "different seed, different plans");
    }

    #[test]
    fn type_policy_matches_the_documented_table() {
        for count in 2..=10usize {
            let plan = synth_generate(1, count, 31).unwrap().remove(0);
            let rooms: Vec<&Loop> = plan.room_loops().map(|(_, lp)| lp).collect();
            assert_eq!(rooms.len(), count);
            assert_eq!(plan.door_loops().count(), count - 1, "one door per tree edge");

            let of = |t: RoomType| rooms.iter().filter(|lp| lp.room_type == t).count();
            assert_eq!(of(RoomType::LivingRoom), 1);
            assert_eq!(of(RoomType::Kitchen), 1);
            assert_eq!(of(RoomType::Bathroom), usize::from(count >= 3));
            assert_eq!(of(RoomType::Balcony), usize::from(count >= 5));
            let named = 2 + usize::from(count >= 3) + usize::from(count >= 5);
            assert_eq!(of(RoomType::Bedroom), count - named);

            let areas: Vec<f64> = rooms.iter().map(|lp| lp.area()).collect();
            let living = rooms.iter().position(|lp| lp.room_type == RoomType::LivingRoom);
            assert_eq!(living, Some(0), "largest room leads the loop order");
            assert!(areas.windows(2).all(|w| w[0] >= w[1]), "rooms ranked by area");
        }
    }

    #[test]
    fn rooms_respect_min_side_and_region_bounds() {
        for &count in &[3usize, 7, 10] {
            for plan in synth_generate(3, count, 5).unwrap() {
                for (_, lp) in plan.room_loops() {
                    let ((x0, y0), (x1, y1)) = lp.bbox();
                    assert!(x0 >= 8 && y0 >= 8 && x1 <= 247 && y1 <= 247);
                    assert!(i32::from(x1) - i32::from(x0) >= MIN_SIDE);
                    assert!(i32::from(y1) - i32::from(y0) >= MIN_SIDE);
                    assert_eq!(lp.corners.len(), 4, "synthetic rooms are rectangles");
                }
                for (_, lp) in plan.door_loops() {
                    assert_eq!(lp.corners.len(), 2, "doors are wall segments");
                }
            }
        }
    }

    #[test]
    fn door_graph_connects_every_room() {
        for &count in &[2usize, 6, 10] {
            for plan in synth_generate(4, count, 13).unwrap() {
                let graph = extract_bubble_graph(&plan, 2.0);
                assert_eq!(graph.node_count(), count);
                let mut seen = vec![false; count];
                let mut queue = VecDeque::from([0usize]);
                seen[0] = true;
                while let Some(node) = queue.pop_front() {
                    for &(a, b) in &graph.edges {
                        let other = match (a == node, b == node) {
                            (true, _) => b,
                            (_, true) => a,
                            _ => continue,
                        };
                        if !seen[other] {
                            seen[other] = true;
                            queue.push_back(other);
                        }
                    }
                }
                assert!(seen.iter().all(|&v| v), "{count}-room plan must be connected");
            }
        }
    }

    #[test]
    fn out_of_range_room_count_is_rejected() {
        for bad in [0usize, 1, 11] {
            let err = synth_generate(1, bad, 0).unwrap_err();
            assert!(matches!(err, DataError::Config(_)), "{bad} rooms: got {err:?}");
        }
    }
}
