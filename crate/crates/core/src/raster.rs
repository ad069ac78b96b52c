//! Loop rasterization onto a square label grid.
//!
//! The fixed 256x256 coordinate space is sampled at pixel centers
//! `(i + 0.5) * 255 / resolution`, so a loop spanning the full coordinate
//! extent covers every pixel at any resolution. Centers never land exactly on
//! integer grid lines (the numerator `(2i + 1) * 255` is odd times 255, never
//! divisible by the even denominator `2 * resolution`), which keeps the
//! even-odd test away from boundary ties.
//!
//! Loops are painted in plan order; later loops overwrite earlier ones.
//! Loops with fewer than three corners (points, wall segments such as doors)
//! have zero area and paint nothing.

use crate::types::{Floorplan, Loop};
use crate::{CoreError, Result};

/// Largest accepted grid resolution.
pub const MAX_RESOLUTION: usize = 4096;

/// Square grid of loop labels; `-1` marks background, any other value is the
/// index of the loop covering that pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    pub resolution: usize,
    /// Row-major, `resolution * resolution` entries.
    pub labels: Vec<i16>,
}

impl LabelGrid {
    /// Loop index covering the pixel, or `None` for background.
    pub fn label(&self, col: usize, row: usize) -> Option<usize> {
        let v = self.labels[row * self.resolution + col];
        (v >= 0).then_some(v as usize)
    }

    /// Number of pixels labeled with `loop_index`.
    pub fn count(&self, loop_index: usize) -> usize {
        let v = loop_index as i16;
        self.labels.iter().filter(|&&l| l == v).count()
    }
}

/// Continuous coordinate of a pixel center along one axis.
fn pixel_center(i: usize, resolution: usize) -> f64 {
    (i as f64 + 0.5) * 255.0 / resolution as f64
}

/// Even-odd test against the loop polygon; `p` is assumed off all grid lines.
fn covers(lp: &Loop, p: (f64, f64)) -> bool {
    let n = lp.corners.len();
    let mut inside = false;
    for j in 0..n {
        let (ax, ay) = lp.corners[j].as_f64();
        let (bx, by) = lp.corners[(j + 1) % n].as_f64();
        if (ay > p.1) != (by > p.1) {
            let x_cross = ax + (p.1 - ay) * (bx - ax) / (by - ay);
            if p.0 < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Rasterizes every loop of `plan` onto a `resolution`-square label grid.
pub fn rasterize(plan: &Floorplan, resolution: usize) -> Result<LabelGrid> {
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(CoreError::Resolution(resolution));
    }
    let mut labels = vec![-1i16; resolution * resolution];
    for (index, lp) in plan.rooms.iter().enumerate() {
        if lp.corners.len() < 3 {
            continue;
        }
        // Restrict scanning to the loop's bounding box.
        let ((x0, y0), (x1, y1)) = lp.bbox();
        let to_pixel = |v: u8| ((f64::from(v) * resolution as f64 / 255.0) as usize).min(resolution - 1);
        let (c0, c1) = (to_pixel(x0), to_pixel(x1));
        let (r0, r1) = (to_pixel(y0), to_pixel(y1));
        for row in r0..=r1 {
            let py = pixel_center(row, resolution);
            for col in c0..=c1 {
                let px = pixel_center(col, resolution);
                if covers(lp, (px, py)) {
                    labels[row * resolution + col] = index as i16;
                }
            }
        }
    }
    Ok(LabelGrid { resolution, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Corner, Floorplan, Loop, RoomType};

    fn rect_loop(t: RoomType, x0: u8, y0: u8, x1: u8, y1: u8) -> Loop {
        Loop::new(
            t,
            vec![
                Corner::new(x0, y0),
                Corner::new(x1, y0),
                Corner::new(x1, y1),
                Corner::new(x0, y1),
            ],
        )
    }

    #[test]
    fn full_extent_room_covers_every_pixel() {
        let plan =
            Floorplan::new(vec![rect_loop(RoomType::LivingRoom, 0, 0, 255, 255)]).unwrap();
        for resolution in [1usize, 16, 33, 256] {
            let g = rasterize(&plan, resolution).unwrap();
            assert_eq!(g.count(0), resolution * resolution, "resolution {resolution}");
        }
    }

    #[test]
    fn half_plane_split_covers_half_each() {
        // x in [0,127] vs x in [127,255]: every pixel center is strictly on
        // one side of x = 127.5-ish boundary; at even resolutions exactly half
        // the columns fall below 127.
        let plan = Floorplan::new(vec![
            rect_loop(RoomType::LivingRoom, 0, 0, 127, 255),
            rect_loop(RoomType::Kitchen, 127, 0, 255, 255),
        ])
        .unwrap();
        for resolution in [16usize, 32] {
            let g = rasterize(&plan, resolution).unwrap();
            let half = resolution * resolution / 2;
            // Columns with center < 127 belong to room 0; center > 127 to room 1.
            let left: usize = (0..resolution)
                .filter(|&c| pixel_center(c, resolution) < 127.0)
                .count();
            assert_eq!(g.count(0), left * resolution, "resolution {resolution}");
            assert_eq!(g.count(0) + g.count(1), resolution * resolution);
            // The split is within one column of an exact half.
            assert!(g.count(0).abs_diff(half) <= resolution);
        }
    }

    #[test]
    fn segment_loops_paint_nothing() {
        let plan = Floorplan::new(vec![
            rect_loop(RoomType::LivingRoom, 0, 0, 100, 100),
            Loop::new(
                RoomType::InteriorDoor,
                vec![Corner::new(100, 40), Corner::new(100, 60)],
            ),
        ])
        .unwrap();
        let g = rasterize(&plan, 64).unwrap();
        assert_eq!(g.count(1), 0);
        assert!(g.count(0) > 0);
    }

    #[test]
    fn later_loops_overwrite_earlier_ones() {
        let plan = Floorplan::new(vec![
            rect_loop(RoomType::LivingRoom, 0, 0, 255, 255),
            rect_loop(RoomType::Kitchen, 0, 0, 255, 255),
        ])
        .unwrap();
        let g = rasterize(&plan, 8).unwrap();
        assert_eq!(g.count(0), 0);
        assert_eq!(g.count(1), 64);
    }

    #[test]
    fn label_accessor_distinguishes_background() {
        let plan = Floorplan::new(vec![rect_loop(RoomType::LivingRoom, 0, 0, 100, 100)]).unwrap();
        let g = rasterize(&plan, 16).unwrap();
        assert_eq!(g.label(0, 0), Some(0));
        assert_eq!(g.label(15, 15), None);
    }

    #[test]
    fn resolution_bounds_are_enforced() {
        let plan = Floorplan::new(vec![rect_loop(RoomType::LivingRoom, 0, 0, 10, 10)]).unwrap();
        assert!(matches!(rasterize(&plan, 0), Err(CoreError::Resolution(0))));
        assert!(rasterize(&plan, MAX_RESOLUTION).is_ok());
        assert!(matches!(
            rasterize(&plan, MAX_RESOLUTION + 1),
            Err(CoreError::Resolution(_))
        ));
    }
}
