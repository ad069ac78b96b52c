//! Core floorplan geometry and encodings.
//!
//! A floorplan is a "loop soup": an ordered list of closed corner loops on a
//! 256x256 integer grid, where each loop is either a room polygon or a door
//! marker. Everything downstream (the diffusion refiner, metrics, rendering)
//! consumes the types and operations defined here:
//!
//! * [`types`] — [`RoomType`], [`Corner`], [`Loop`], [`Floorplan`] and the
//!   JSONL interchange format,
//! * [`codec`] — integer/bit and integer/unit-interval coordinate codecs,
//! * [`angular`] — the angle-augmented corner representation,
//! * [`token`] — flattening a plan into a padded token sequence,
//! * [`init`] — the coarse rectangle-per-room layout emitted by the language
//!   frontend, and its expansion into a full floorplan,
//! * [`align`] — resampling a coarse layout onto a target loop structure so
//!   the two can be compared corner-by-corner,
//! * [`bubble`] — room adjacency ("bubble") graph extraction,
//! * [`raster`] — label-grid rasterization used by the pixel metrics,
//! * [`assign`] — exact minimum-cost assignment shared by alignment and the
//!   pixel metrics.

pub mod align;
pub mod angular;
pub mod assign;
pub mod bubble;
pub mod codec;
pub mod init;
pub mod raster;
pub mod token;
pub mod types;

use thiserror::Error;

/// Errors raised by core geometry operations.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A coordinate or codec input fell outside [0, 255].
    #[error("value {0} is outside the coordinate range [0, 255]")]
    Range(i64),
    /// A bit vector had the wrong length (exactly 8 bits are expected).
    #[error("bit vector has length {0}, expected 8")]
    BitLength(usize),
    /// A bit vector contained a value other than 0 or 1.
    #[error("bit vector contains non-binary value {0}")]
    BitValue(u8),
    /// A loop or plan exceeded a hard capacity limit.
    #[error("{what} count {got} exceeds capacity {max}")]
    Capacity {
        what: &'static str,
        got: usize,
        max: usize,
    },
    /// A loop edge had zero length, so no direction can be derived.
    #[error("degenerate zero-length edge at corner {corner} of a {room:?} loop")]
    DegenerateEdge {
        corner: usize,
        room: types::RoomType,
    },
    /// An index was out of bounds for the structure it addresses.
    #[error("index {index} out of bounds for {what} of length {len}")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },
    /// Two structures that must agree in shape did not.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Structural validation of a plan or layout failed.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
    /// A condition layout had no rooms to align against.
    #[error("condition layout has no rooms")]
    EmptyCondition,
    /// A room name could not be mapped to any known room type.
    #[error("unknown room type for name {0:?}")]
    UnknownType(String),
    /// A raster resolution was zero or unreasonably large.
    #[error("unsupported raster resolution {0} (must be in [1, 4096])")]
    Resolution(usize),
}

pub type Result<T> = std::result::Result<T, CoreError>;
