//! Raster overlap scores between two floorplans.
//!
//! Both scores rasterize door-free copies of the plans onto a shared square
//! grid and compare pixel sets:
//!
//! * **micro IoU** pairs up rooms across the two plans with a minimum-cost
//!   assignment (type agreement plus centroid distance, the same costing used
//!   for condition alignment) and returns the ratio of summed pairwise
//!   intersections to summed pairwise unions. Rooms left without a partner
//!   contribute their full pixel area to the union term, so a plan with extra
//!   or missing rooms is penalized.
//! * **macro IoU** ignores room identity: for every room type present in
//!   either plan it compares the pixel union of that type on both sides, then
//!   averages the per-type IoUs without weighting.
//!
//! Both scores live in [0, 1], equal 1 only for pixel-identical room
//! coverage, and are symmetric in their two arguments.

use floorgen_core::align::type_centroid_cost;
use floorgen_core::assign::min_cost_matching;
use floorgen_core::raster::rasterize;
use floorgen_core::types::{Floorplan, Loop, RoomType};

use crate::{MetricsError, Result};

/// Grid edge length used by [`micro_iou`] and [`macro_iou`].
pub const IOU_RESOLUTION: usize = 256;

/// Pixel-count ingredients of one plan pair comparison, so a caller can both
/// form per-pair ratios and pool numerators/denominators across many pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IouComponents {
    /// Summed pixel intersection over matched room pairs.
    pub intersection: u64,
    /// Summed pixel union over matched pairs plus full areas of unmatched rooms.
    pub union: u64,
    /// Unweighted mean of per-room-type pixel-union IoUs.
    pub macro_mean: f64,
}

impl IouComponents {
    /// Matched-pair IoU ratio for this single comparison.
    pub fn micro(&self) -> Result<f64> {
        if self.union == 0 {
            return Err(MetricsError::Empty(
                "no rasterized room area in either plan".into(),
            ));
        }
        Ok(self.intersection as f64 / self.union as f64)
    }
}

/// Room-overlap IoU with min-cost room matching, at [`IOU_RESOLUTION`].
pub fn micro_iou(a: &Floorplan, b: &Floorplan) -> Result<f64> {
    iou_components(a, b, IOU_RESOLUTION)?.micro()
}

/// Per-type pixel-union IoU averaged over types, at [`IOU_RESOLUTION`].
pub fn macro_iou(a: &Floorplan, b: &Floorplan) -> Result<f64> {
    Ok(iou_components(a, b, IOU_RESOLUTION)?.macro_mean)
}

/// Strips door loops so only room geometry reaches the raster.
fn doorless(plan: &Floorplan) -> Result<Floorplan> {
    let rooms: Vec<Loop> = plan.room_loops().map(|(_, lp)| lp.clone()).collect();
    if rooms.is_empty() {
        return Err(MetricsError::Empty("plan has no room loops".into()));
    }
    Ok(Floorplan::new(rooms)?)
}

/// Computes both overlap scores for one plan pair in a single raster pass.
///
/// The result is exactly symmetric: the pair is put into a canonical order
/// before matching so that assignment tie-breaking cannot depend on argument
/// order.
pub fn iou_components(a: &Floorplan, b: &Floorplan, resolution: usize) -> Result<IouComponents> {
    // Canonical orientation; every quantity below is symmetric in (a, b)
    // except for assignment tie-breaks, which this makes order-independent.
    let (a, b) = if a.to_json_line() <= b.to_json_line() {
        (a, b)
    } else {
        (b, a)
    };

    let pa = doorless(a)?;
    let pb = doorless(b)?;
    let ga = rasterize(&pa, resolution)?;
    let gb = rasterize(&pb, resolution)?;

    let na = pa.rooms.len();
    let nb = pb.rooms.len();

    // Joint pixel counts: slot 0 is background, slot i+1 is room loop i.
    let mut joint = vec![vec![0u64; nb + 1]; na + 1];
    for (la, lb) in ga.labels.iter().zip(gb.labels.iter()) {
        joint[(la + 1) as usize][(lb + 1) as usize] += 1;
    }
    let area_a: Vec<u64> = (0..na).map(|i| joint[i + 1].iter().sum()).collect();
    let area_b: Vec<u64> = (0..nb)
        .map(|j| (0..na + 1).map(|s| joint[s][j + 1]).sum())
        .collect();

    // Min-cost room assignment on type + centroid, rows = plan `a`.
    let cost: Vec<Vec<f64>> = pa
        .rooms
        .iter()
        .map(|ra| {
            let ca = ra.centroid();
            pb.rooms
                .iter()
                .map(|rb| type_centroid_cost(ra.room_type, ca, rb.room_type, rb.centroid()))
                .collect()
        })
        .collect();
    let (assignment, _) = min_cost_matching(&cost);

    let mut intersection = 0u64;
    let mut union = 0u64;
    let mut matched_b = vec![false; nb];
    for i in 0..na {
        match assignment[i] {
            Some(j) => {
                matched_b[j] = true;
                let inter = joint[i + 1][j + 1];
                intersection += inter;
                union += area_a[i] + area_b[j] - inter;
            }
            None => union += area_a[i],
        }
    }
    for j in 0..nb {
        if !matched_b[j] {
            union += area_b[j];
        }
    }

    // Per-type pixel unions. A type counts once if present in either plan;
    // types whose loops raster to zero pixels on both sides are skipped
    // because their overlap is undefined rather than zero.
    let mut types: Vec<RoomType> = pa
        .rooms
        .iter()
        .chain(pb.rooms.iter())
        .map(|lp| lp.room_type)
        .collect();
    types.sort_by_key(|t| t.id());
    types.dedup();

    let mut per_type = Vec::new();
    for t in types {
        let rows_a: Vec<usize> = (0..na).filter(|&i| pa.rooms[i].room_type == t).collect();
        let cols_b: Vec<usize> = (0..nb).filter(|&j| pb.rooms[j].room_type == t).collect();
        let mut inter = 0u64;
        for &i in &rows_a {
            for &j in &cols_b {
                inter += joint[i + 1][j + 1];
            }
        }
        let total_a: u64 = rows_a.iter().map(|&i| area_a[i]).sum();
        let total_b: u64 = cols_b.iter().map(|&j| area_b[j]).sum();
        let uni = total_a + total_b - inter;
        if uni > 0 {
            per_type.push(inter as f64 / uni as f64);
        }
    }
    if per_type.is_empty() {
        return Err(MetricsError::Empty(
            "no rasterized room area in either plan".into(),
        ));
    }
    let macro_mean = per_type.iter().sum::<f64>() / per_type.len() as f64;

    Ok(IouComponents {
        intersection,
        union,
        macro_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use floorgen_core::types::Corner;

    fn rect(t: RoomType, x0: u8, y0: u8, x1: u8, y1: u8) -> Loop {
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

    fn plan(rooms: Vec<Loop>) -> Floorplan {
        Floorplan::new(rooms).unwrap()
    }

    #[test]
    fn identical_plans_score_one_on_both_metrics() {
        let p = plan(vec![
            rect(RoomType::LivingRoom, 16, 16, 80, 80),
            rect(RoomType::Kitchen, 120, 16, 200, 80),
        ]);
        assert!((micro_iou(&p, &p).unwrap() - 1.0).abs() < 1e-12);
        assert!((macro_iou(&p, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_plans_score_zero_micro() {
        let a = plan(vec![rect(RoomType::Bedroom, 16, 16, 80, 80)]);
        let b = plan(vec![rect(RoomType::Bedroom, 120, 120, 200, 200)]);
        assert_eq!(micro_iou(&a, &b).unwrap(), 0.0);
        assert_eq!(macro_iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn equal_squares_with_half_overlap_score_one_third() {
        // Column coverage at resolution 256: [16,80] and [48,112] each cover
        // exactly 64 pixel-center columns and share exactly 32, so the
        // analytic 1/3 is reproduced with no raster slack.
        let a = plan(vec![rect(RoomType::Bedroom, 16, 16, 80, 80)]);
        let b = plan(vec![rect(RoomType::Bedroom, 48, 16, 112, 80)]);
        let v = micro_iou(&a, &b).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn macro_is_the_unweighted_mean_over_types() {
        // Kitchen identical (IoU 1.0); the two bedrooms each cover exactly
        // 96 pixel-center columns of which 64 are shared, so the type's
        // pixel-union IoU is exactly 64 / (96 + 96 - 64) = 0.5. Mean = 0.75.
        let a = plan(vec![
            rect(RoomType::Kitchen, 16, 16, 80, 80),
            rect(RoomType::Bedroom, 16, 120, 112, 184),
        ]);
        let b = plan(vec![
            rect(RoomType::Kitchen, 16, 16, 80, 80),
            rect(RoomType::Bedroom, 48, 120, 143, 184),
        ]);
        let v = macro_iou(&a, &b).unwrap();
        assert!((v - 0.75).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn type_present_on_one_side_only_drags_the_macro_mean() {
        let a = plan(vec![
            rect(RoomType::Kitchen, 16, 16, 80, 80),
            rect(RoomType::Bedroom, 16, 120, 80, 184),
        ]);
        let b = plan(vec![rect(RoomType::Kitchen, 16, 16, 80, 80)]);
        let v = macro_iou(&a, &b).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn unmatched_rooms_enlarge_the_union() {
        // Same kitchen on both sides; `a` has an extra disjoint bedroom of
        // equal pixel area (64x64 pixel centers each), so micro = A / (A + A).
        let a = plan(vec![
            rect(RoomType::Kitchen, 16, 16, 80, 80),
            rect(RoomType::Bedroom, 16, 120, 80, 183),
        ]);
        let b = plan(vec![rect(RoomType::Kitchen, 16, 16, 80, 80)]);
        let v = micro_iou(&a, &b).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn doors_are_excluded_from_overlap() {
        let mut a = plan(vec![rect(RoomType::Kitchen, 16, 16, 80, 80)]);
        let b = a.clone();
        a.rooms.push(rect(RoomType::InteriorDoor, 100, 100, 110, 104));
        assert!((micro_iou(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!((macro_iou(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn both_scores_are_symmetric() {
        let a = plan(vec![
            rect(RoomType::LivingRoom, 10, 10, 90, 70),
            rect(RoomType::Bedroom, 95, 10, 160, 70),
            rect(RoomType::Kitchen, 10, 80, 90, 140),
        ]);
        let b = plan(vec![
            rect(RoomType::LivingRoom, 20, 14, 98, 76),
            rect(RoomType::Bathroom, 95, 10, 150, 60),
        ]);
        assert_eq!(
            micro_iou(&a, &b).unwrap().to_bits(),
            micro_iou(&b, &a).unwrap().to_bits()
        );
        assert_eq!(
            macro_iou(&a, &b).unwrap().to_bits(),
            macro_iou(&b, &a).unwrap().to_bits()
        );
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let a = plan(vec![
            rect(RoomType::LivingRoom, 0, 0, 255, 255),
            rect(RoomType::Bedroom, 10, 10, 40, 40),
        ]);
        let b = plan(vec![rect(RoomType::Bedroom, 30, 30, 60, 60)]);
        for v in [
            micro_iou(&a, &b).unwrap(),
            macro_iou(&a, &b).unwrap(),
            micro_iou(&b, &a).unwrap(),
            macro_iou(&b, &a).unwrap(),
        ] {
            assert!((0.0..=1.0).contains(&v), "out of range: {v}");
        }
    }
}
