//! Angle-augmented corner representation.
//!
//! Each corner is described by its normalized position plus the direction of
//! the outgoing loop edge (toward the cyclically next corner), expressed as
//! the unit pair (cos, sin). Around any closed loop the outgoing directions
//! sum to a net rotation, so the cos and sin components of an axis-aligned
//! rectangle cancel pairwise — a convenient invariant the tests pin down.

use crate::codec::normalize;
use crate::types::Loop;
use crate::{CoreError, Result};

/// Unit direction of the segment (dx, dy), or `None` for a zero-length edge.
pub fn edge_direction(dx: f64, dy: f64) -> Option<(f64, f64)> {
    let len = (dx * dx + dy * dy).sqrt();
    if len <= 1e-12 {
        None
    } else {
        Some((dx / len, dy / len))
    }
}

/// Angle-augmented encoding `[x, y, cos, sin]` of corner `j`, where (x, y) is
/// the normalized corner position and (cos, sin) the direction of the edge
/// from corner `j` to the cyclically next corner.
pub fn angular_augment(lp: &Loop, j: usize) -> Result<[f64; 4]> {
    let n = lp.corners.len();
    if j >= n {
        return Err(CoreError::Index {
            what: "loop corners",
            index: j,
            len: n,
        });
    }
    let a = lp.corners[j];
    let b = lp.corners[(j + 1) % n];
    let (dx, dy) = (f64::from(b.x) - f64::from(a.x), f64::from(b.y) - f64::from(a.y));
    let (cos, sin) = edge_direction(dx, dy).ok_or(CoreError::DegenerateEdge {
        corner: j,
        room: lp.room_type,
    })?;
    Ok([normalize(a.x), normalize(a.y), cos, sin])
}
