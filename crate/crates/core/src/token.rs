//! Flattening a floorplan (plus its aligned condition) into the padded token
//! sequence consumed by the denoiser.
//!
//! Each corner becomes one token. Loops are padded to the smallest of
//! {4, 8, 16, 32} that fits their corner count so sequence shapes stay
//! bucketed. The sequence is stored struct-of-arrays; `next` holds each real
//! token's cyclic successor within its own loop (padding tokens point at
//! themselves), which is what the angle augmentation walks at every
//! denoising step.

use crate::codec::normalize;
use crate::types::{Floorplan, RoomType, MAX_CORNERS, MAX_LOOPS};
use crate::{CoreError, Result};

/// Padded length for a loop of `n` corners: the smallest of {4, 8, 16, 32}
/// that holds it.
pub fn pad_len(n: usize) -> usize {
    for cap in [4usize, 8, 16, 32] {
        if n <= cap {
            return cap;
        }
    }
    // Unreachable for validated loops; callers check capacity first.
    MAX_CORNERS
}

/// A tokenized floorplan with its aligned condition coordinates.
///
/// All vectors share one length (the token count). `coords` holds the
/// current continuous coordinates — ground truth after [`tokenize`], noisy
/// states during refinement (see [`TokenSequence::with_coords`]).
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    /// Continuous [-1, 1] coordinates per token.
    pub coords: Vec<[f64; 2]>,
    /// Aligned condition coordinates per token, same space.
    pub cond_coords: Vec<[f64; 2]>,
    /// Loop index of the token's loop (0-based, in plan order).
    pub room_index: Vec<u8>,
    /// Position of the token within its padded loop.
    pub corner_index: Vec<u8>,
    /// Category of the token's loop.
    pub room_type: Vec<RoomType>,
    /// True for padding tokens.
    pub pad: Vec<bool>,
    /// Global index of the cyclic successor among the loop's real corners;
    /// padding tokens point at themselves.
    pub next: Vec<u32>,
}

impl TokenSequence {
    /// Total token count (real + padding).
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Number of non-padding tokens.
    pub fn real_count(&self) -> usize {
        self.pad.iter().filter(|p| !**p).count()
    }

    /// Copy of the sequence with replaced continuous coordinates.
    pub fn with_coords(&self, coords: Vec<[f64; 2]>) -> Result<TokenSequence> {
        if coords.len() != self.len() {
            return Err(CoreError::Shape(format!(
                "coordinate count {} does not match token count {}",
                coords.len(),
                self.len()
            )));
        }
        let mut out = self.clone();
        out.coords = coords;
        Ok(out)
    }

    /// Copy of the sequence with all condition coordinates zeroed (used when
    /// reverse-process conditioning is disabled).
    pub fn with_zeroed_cond(&self) -> TokenSequence {
        let mut out = self.clone();
        for c in &mut out.cond_coords {
            *c = [0.0, 0.0];
        }
        out
    }

    /// Number of loops in the underlying plan.
    pub fn loop_count(&self) -> usize {
        self.room_index.last().map_or(0, |&r| usize::from(r) + 1)
    }
}

/// Tokenizes `plan` against its aligned condition `cond`. The two must have
/// identical loop structure (same loop count and per-loop corner counts), as
/// produced by condition alignment.
pub fn tokenize(plan: &Floorplan, cond: &Floorplan) -> Result<TokenSequence> {
    if plan.rooms.len() > MAX_LOOPS {
        return Err(CoreError::Capacity {
            what: "loop",
            got: plan.rooms.len(),
            max: MAX_LOOPS,
        });
    }
    if cond.rooms.len() != plan.rooms.len() {
        return Err(CoreError::Shape(format!(
            "condition has {} loops, plan has {}",
            cond.rooms.len(),
            plan.rooms.len()
        )));
    }

    let mut seq = TokenSequence {
        coords: Vec::new(),
        cond_coords: Vec::new(),
        room_index: Vec::new(),
        corner_index: Vec::new(),
        room_type: Vec::new(),
        pad: Vec::new(),
        next: Vec::new(),
    };

    for (i, (lp, cl)) in plan.rooms.iter().zip(&cond.rooms).enumerate() {
        let n = lp.corners.len();
        if n > MAX_CORNERS {
            return Err(CoreError::Capacity {
                what: "corner",
                got: n,
                max: MAX_CORNERS,
            });
        }
        if cl.corners.len() != n {
            return Err(CoreError::Shape(format!(
                "loop {i}: condition has {} corners, plan has {n}",
                cl.corners.len()
            )));
        }
        let padded = pad_len(n);
        let base = seq.len() as u32;
        for j in 0..padded {
            let real = j < n;
            seq.coords.push(if real {
                let c = lp.corners[j];
                [normalize(c.x), normalize(c.y)]
            } else {
                [0.0, 0.0]
            });
            seq.cond_coords.push(if real {
                let c = cl.corners[j];
                [normalize(c.x), normalize(c.y)]
            } else {
                [0.0, 0.0]
            });
            seq.room_index.push(i as u8);
            seq.corner_index.push(j as u8);
            seq.room_type.push(lp.room_type);
            seq.pad.push(!real);
            seq.next.push(if real {
                base + ((j + 1) % n) as u32
            } else {
                base + j as u32
            });
        }
    }
    Ok(seq)
}
