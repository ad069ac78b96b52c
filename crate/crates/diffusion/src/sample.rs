//! Reverse-process sampling: coarse layout in, refined floorplan out.
//!
//! The sampler owns the full inference path: it aligns the coarse layout
//! onto the requested loop structure, tokenizes, runs the reverse diffusion
//! chain under the trained denoiser, and decodes integer coordinates — from
//! the discrete corner branch when it ran (its final, most-denoised decode
//! wins), from the continuous estimate otherwise. The output always carries
//! the structure's loop order, corner counts, and room types.
//!
//! Sampling is deterministic given `(network, layout, structure, config,
//! seed)`. The `stochastic_sampling` flag redraws the reverse-step residual
//! noise instead of reusing the model's own noise estimate; runs stay
//! reproducible because those draws come from the same seeded stream.

use floorgen_core::align::align_condition;
use floorgen_core::bubble::extract_bubble_graph;
use floorgen_core::codec::{bit2int, denormalize};
use floorgen_core::init::LayoutInit;
use floorgen_core::token::{tokenize, TokenSequence};
use floorgen_core::types::{Corner, Floorplan, Loop};
use floorgen_model::{build_masks, Denoiser};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ops::{
    condition_offset, predict_x0, reverse_from_estimate, DiffusionConfig, DEFAULT_ADJACENCY_EPS,
};
use crate::{DiffusionError, Result};

fn coords_array(v: &[[f64; 2]]) -> Array2<f64> {
    Array2::from_shape_fn((v.len(), 2), |(i, j)| v[i][j])
}

fn coord_rows(a: &Array2<f64>) -> Vec<[f64; 2]> {
    (0..a.nrows()).map(|i| [a[[i, 0]], a[[i, 1]]]).collect()
}

/// Gaussian noise on real token rows, exact zeros on padding.
fn masked_noise(seq: &TokenSequence, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut noise = Array2::zeros((seq.len(), 2));
    for i in 0..seq.len() {
        if !seq.pad[i] {
            noise[[i, 0]] = StandardNormal.sample(rng);
            noise[[i, 1]] = StandardNormal.sample(rng);
        }
    }
    noise
}

/// Decodes a thresholded bit plane into per-token integer coordinates.
fn decode_bits(seq: &TokenSequence, logits: &Array2<f64>) -> Result<Vec<Option<[u8; 2]>>> {
    let mut out = vec![None; seq.len()];
    for i in 0..seq.len() {
        if seq.pad[i] {
            continue;
        }
        let mut xy = [0u8; 2];
        for axis in 0..2 {
            let bits: Vec<u8> = (0..8)
                .map(|b| u8::from(logits[[i, axis * 8 + b]] > 0.0))
                .collect();
            xy[axis] = bit2int(&bits)?;
        }
        out[i] = Some(xy);
    }
    Ok(out)
}

/// Makes every cyclically-consecutive corner pair distinct by nudging the
/// second corner of an offending pair onto the nearest free grid point.
/// Loops with a single corner have no adjacency constraint. One pass
/// suffices: a nudged corner is chosen to differ from both of its cyclic
/// neighbours, and the first corner is never moved.
fn repair_duplicate_corners(corners: &mut [Corner]) -> Result<()> {
    let n = corners.len();
    if n < 2 {
        return Ok(());
    }
    const CANDIDATES: [(i16, i16); 8] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (-1, -1),
        (2, 0),
        (0, 2),
    ];
    for i in 0..n {
        let here = i;
        let next = (i + 1) % n;
        if next == 0 && n == 2 {
            break; // the pair (1, 0) is the pair (0, 1) again
        }
        if corners[here] != corners[next] {
            continue;
        }
        let after = (next + 1) % n;
        let base = corners[next];
        let mut fixed = false;
        for (dx, dy) in CANDIDATES {
            let x = i16::from(base.x) + dx;
            let y = i16::from(base.y) + dy;
            if !(0..=255).contains(&x) || !(0..=255).contains(&y) {
                continue;
            }
            let candidate = Corner::new(x as u8, y as u8);
            if candidate != corners[here] && (after == next || candidate != corners[after]) {
                corners[next] = candidate;
                fixed = true;
                break;
            }
        }
        if !fixed {
            return Err(DiffusionError::Numeric(
                "could not separate duplicate corners".into(),
            ));
        }
    }
    Ok(())
}

/// Runs the reverse diffusion chain and returns a refined floorplan with
/// `structure`'s loop structure and room types, conditioned on `init`.
///
/// The chain starts from `x_T = ε + e(y)`, walks `t = T, T-stride, …, 1`,
/// and at each step replaces the state with the reverse-step update built
/// from the denoiser's noise prediction. Whenever `t < t_discrete` the
/// discrete corner branch decodes integer coordinates from thresholded bit
/// logits; the last such decode (the most denoised one) becomes the output.
/// If the branch never ran, coordinates come from the clamped continuous
/// estimate instead.
pub fn sample(
    net: &Denoiser,
    structure: &Floorplan,
    init: &LayoutInit,
    cfg: &DiffusionConfig,
    seed: u64,
) -> Result<Floorplan> {
    cfg.validate()?;
    let aligned = align_condition(structure, init)?;
    let base_seq = tokenize(structure, &aligned)?;
    if base_seq.real_count() == 0 {
        return Err(DiffusionError::Empty("structure has no tokens".into()));
    }
    let graph = extract_bubble_graph(&aligned, DEFAULT_ADJACENCY_EPS);
    let masks = build_masks(&base_seq, &graph);
    let cond = coords_array(&base_seq.cond_coords);
    let e_y = condition_offset(&cond, cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_max = cfg.schedule.t_max;
    let mut x = masked_noise(&base_seq, &mut rng) + &e_y;
    let mut last_decode: Option<Vec<Option<[u8; 2]>>> = None;

    let mut t = t_max;
    while t >= 1 {
        let seq_t = base_seq.with_coords(coord_rows(&x))?;
        let t_frac = t as f64 / t_max as f64;
        let eps_hat = net.predict_noise(&seq_t, t_frac, &masks, cfg.reverse_cond)?;
        let x0_hat = predict_x0(&cfg.schedule, &x, &eps_hat, t, &e_y)?;

        if t < cfg.t_discrete {
            let logits = net.predict_bits(&seq_t, &x0_hat, t_frac, &masks, cfg.reverse_cond)?;
            last_decode = Some(decode_bits(&base_seq, &logits)?);
        }

        let t_next = t.saturating_sub(cfg.sample_stride);
        let residual = if cfg.stochastic_sampling && t_next >= 1 {
            masked_noise(&base_seq, &mut rng)
        } else {
            eps_hat
        };
        x = reverse_from_estimate(&cfg.schedule, &x0_hat, t_next, &residual, &e_y)?;
        t = t_next;
    }

    // Integer coordinates per token: discrete decode when available, the
    // final continuous estimate otherwise.
    let ints: Vec<Option<[u8; 2]>> = match last_decode {
        Some(decoded) => decoded,
        None => (0..base_seq.len())
            .map(|i| {
                if base_seq.pad[i] {
                    None
                } else {
                    Some([denormalize(x[[i, 0]]), denormalize(x[[i, 1]])])
                }
            })
            .collect(),
    };

    // Reassemble loops in the structure's order.
    let mut loops: Vec<Vec<Corner>> = structure
        .rooms
        .iter()
        .map(|lp| Vec::with_capacity(lp.corners.len()))
        .collect();
    for i in 0..base_seq.len() {
        if base_seq.pad[i] {
            continue;
        }
        let xy = ints[i].expect("real tokens always decode");
        loops[usize::from(base_seq.room_index[i])].push(Corner::new(xy[0], xy[1]));
    }
    let mut rooms = Vec::with_capacity(loops.len());
    for (lp, corners) in structure.rooms.iter().zip(loops) {
        let mut corners = corners;
        if corners.len() != lp.corners.len() {
            return Err(DiffusionError::Shape(format!(
                "loop reassembly produced {} corners, structure has {}",
                corners.len(),
                lp.corners.len()
            )));
        }
        repair_duplicate_corners(&mut corners)?;
        rooms.push(Loop::new(lp.room_type, corners));
    }
    Ok(Floorplan::new(rooms)?)
}
