//! Per-token input features and attention masks.
//!
//! Every token contributes one feature row.  The continuous branch consumes
//! 98-wide rows: angle-augmented noisy coordinates (4), angle-augmented
//! condition coordinates (4), room-type one-hot (25), loop-index one-hot
//! (32), corner-index one-hot (32) and the fractional timestep (1).  The
//! discrete branch inserts the 16 coordinate bits of the rounded coordinate
//! estimate after the two angle blocks, giving 114-wide rows.
//!
//! Padding tokens always produce all-zero rows, so the values stored in their
//! coordinate slots can never influence the network.

use crate::{ModelError, Result};
use floorgen_core::angular::edge_direction;
use floorgen_core::bubble::BubbleGraph;
use floorgen_core::codec::{denormalize, int2bit};
use floorgen_core::token::TokenSequence;
use floorgen_core::types::{MAX_CORNERS, MAX_LOOPS, ROOM_TYPE_COUNT};
use ndarray::Array2;

/// Feature width of the continuous (noise prediction) branch.
pub const NOISE_FEATURE_WIDTH: usize = 4 + 4 + ROOM_TYPE_COUNT + MAX_LOOPS + MAX_CORNERS + 1;

/// Feature width of the discrete (bit prediction) branch.
pub const BIT_FEATURE_WIDTH: usize = NOISE_FEATURE_WIDTH + 16;

const _: () = assert!(NOISE_FEATURE_WIDTH == 98);
const _: () = assert!(BIT_FEATURE_WIDTH == 114);

/// Boolean attention masks shared by all blocks of a branch.
///
/// `csa` restricts attention to tokens of the same loop, `gsa` connects all
/// real tokens, and `rca` grants each real token access to the condition
/// tokens of its own loop and of loops adjacent in the condition's bubble
/// graph.  Padding tokens are excluded everywhere, as queries and as keys.
#[derive(Debug, Clone)]
pub struct MaskSet {
    pub csa: Array2<bool>,
    pub gsa: Array2<bool>,
    pub rca: Array2<bool>,
}

/// Builds the three attention masks for `seq` given the condition's bubble
/// graph (whose node ids are loop indices in the same plan order).
pub fn build_masks(seq: &TokenSequence, cond_graph: &BubbleGraph) -> MaskSet {
    let n = seq.len();
    let mut csa = Array2::from_elem((n, n), false);
    let mut gsa = Array2::from_elem((n, n), false);
    let mut rca = Array2::from_elem((n, n), false);
    for a in 0..n {
        if seq.pad[a] {
            continue;
        }
        let la = usize::from(seq.room_index[a]);
        for b in 0..n {
            if seq.pad[b] {
                continue;
            }
            let lb = usize::from(seq.room_index[b]);
            gsa[[a, b]] = true;
            if la == lb {
                csa[[a, b]] = true;
                rca[[a, b]] = true;
            } else if cond_graph.adjacent(la, lb) {
                rca[[a, b]] = true;
            }
        }
    }
    MaskSet { csa, gsa, rca }
}

/// Angle augmentation of one coordinate row: `[x, y, cos, sin]` where the
/// direction points at the token's cyclic successor.  Degenerate (zero
/// length) edges contribute `(0, 0)` for the direction.
fn angle_row(coords: &[[f64; 2]], seq: &TokenSequence, token: usize) -> [f64; 4] {
    let [x, y] = coords[token];
    let nxt = seq.next[token] as usize;
    let (dx, dy) = (coords[nxt][0] - x, coords[nxt][1] - y);
    let (cos, sin) = edge_direction(dx, dy).unwrap_or((0.0, 0.0));
    [x, y, cos, sin]
}

fn one_hot_checks(seq: &TokenSequence, token: usize) -> Result<(usize, usize, usize)> {
    let room = usize::from(seq.room_index[token]);
    let corner = usize::from(seq.corner_index[token]);
    let ty = seq.room_type[token].id();
    if room >= MAX_LOOPS {
        return Err(ModelError::Capacity(format!(
            "loop index {room} exceeds one-hot table of {MAX_LOOPS}"
        )));
    }
    if corner >= MAX_CORNERS {
        return Err(ModelError::Capacity(format!(
            "corner index {corner} exceeds one-hot table of {MAX_CORNERS}"
        )));
    }
    if ty >= ROOM_TYPE_COUNT {
        return Err(ModelError::Capacity(format!(
            "room type id {ty} exceeds one-hot table of {ROOM_TYPE_COUNT}"
        )));
    }
    Ok((room, corner, ty))
}

fn write_shared_tail(
    row: &mut ndarray::ArrayViewMut1<'_, f64>,
    offset: usize,
    seq: &TokenSequence,
    token: usize,
    t_frac: f64,
) -> Result<()> {
    let (room, corner, ty) = one_hot_checks(seq, token)?;
    row[offset + ty] = 1.0;
    row[offset + ROOM_TYPE_COUNT + room] = 1.0;
    row[offset + ROOM_TYPE_COUNT + MAX_LOOPS + corner] = 1.0;
    row[offset + ROOM_TYPE_COUNT + MAX_LOOPS + MAX_CORNERS] = t_frac;
    Ok(())
}

/// Features of the continuous branch for the noisy stream.
///
/// `t_frac` is the timestep divided by the schedule length.  With
/// `cond_enabled = false` the condition-coordinate slots are zeroed, which is
/// how reverse-process conditioning is switched off.
pub fn noise_features(
    seq: &TokenSequence,
    t_frac: f64,
    cond_enabled: bool,
) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((seq.len(), NOISE_FEATURE_WIDTH));
    for token in 0..seq.len() {
        if seq.pad[token] {
            continue;
        }
        let mut row = out.row_mut(token);
        let g = angle_row(&seq.coords, seq, token);
        row[0] = g[0];
        row[1] = g[1];
        row[2] = g[2];
        row[3] = g[3];
        if cond_enabled {
            let c = angle_row(&seq.cond_coords, seq, token);
            row[4] = c[0];
            row[5] = c[1];
            row[6] = c[2];
            row[7] = c[3];
        }
        write_shared_tail(&mut row, 8, seq, token, t_frac)?;
    }
    Ok(out)
}

/// Features of the continuous branch for the condition stream consumed by
/// reverse cross attention: the noisy-coordinate slots stay zero and the
/// condition slots carry the aligned condition geometry.
pub fn cond_noise_features(
    seq: &TokenSequence,
    t_frac: f64,
    cond_enabled: bool,
) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((seq.len(), NOISE_FEATURE_WIDTH));
    for token in 0..seq.len() {
        if seq.pad[token] {
            continue;
        }
        let mut row = out.row_mut(token);
        if cond_enabled {
            let c = angle_row(&seq.cond_coords, seq, token);
            row[4] = c[0];
            row[5] = c[1];
            row[6] = c[2];
            row[7] = c[3];
        }
        write_shared_tail(&mut row, 8, seq, token, t_frac)?;
    }
    Ok(out)
}

/// Features of the discrete branch for the noisy stream.
///
/// `x0_est` holds the per-token continuous coordinate estimate (shape
/// `(token_count, 2)`); its rounded integer form supplies the 16 bit slots.
pub fn discrete_features(
    seq: &TokenSequence,
    x0_est: &Array2<f64>,
    t_frac: f64,
    cond_enabled: bool,
) -> Result<Array2<f64>> {
    if x0_est.dim() != (seq.len(), 2) {
        return Err(ModelError::Config(format!(
            "coordinate estimate shape {:?} does not match token count {}",
            x0_est.dim(),
            seq.len()
        )));
    }
    let est: Vec<[f64; 2]> = (0..seq.len())
        .map(|i| [x0_est[[i, 0]], x0_est[[i, 1]]])
        .collect();
    let mut out = Array2::zeros((seq.len(), BIT_FEATURE_WIDTH));
    for token in 0..seq.len() {
        if seq.pad[token] {
            continue;
        }
        let mut row = out.row_mut(token);
        let g = angle_row(&est, seq, token);
        row[0] = g[0];
        row[1] = g[1];
        row[2] = g[2];
        row[3] = g[3];
        if cond_enabled {
            let c = angle_row(&seq.cond_coords, seq, token);
            row[4] = c[0];
            row[5] = c[1];
            row[6] = c[2];
            row[7] = c[3];
        }
        for (axis, value) in est[token].iter().enumerate() {
            let bits = int2bit(i64::from(denormalize(*value)))?;
            for (b, bit) in bits.iter().enumerate() {
                row[8 + axis * 8 + b] = f64::from(*bit);
            }
        }
        write_shared_tail(&mut row, 24, seq, token, t_frac)?;
    }
    Ok(out)
}

/// Features of the discrete branch for the condition stream: the estimate
/// slots (angles and bits) stay zero; the condition slots carry geometry.
pub fn cond_bit_features(
    seq: &TokenSequence,
    t_frac: f64,
    cond_enabled: bool,
) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((seq.len(), BIT_FEATURE_WIDTH));
    for token in 0..seq.len() {
        if seq.pad[token] {
            continue;
        }
        let mut row = out.row_mut(token);
        if cond_enabled {
            let c = angle_row(&seq.cond_coords, seq, token);
            row[4] = c[0];
            row[5] = c[1];
            row[6] = c[2];
            row[7] = c[3];
        }
        write_shared_tail(&mut row, 24, seq, token, t_frac)?;
    }
    Ok(out)
}
