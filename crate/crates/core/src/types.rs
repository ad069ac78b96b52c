//! Floorplan data model and the JSONL interchange format.
//!
//! Coordinates live on a fixed 256x256 grid (u8 per axis, y grows downward).
//! A [`Floorplan`] is an ordered list of [`Loop`]s; door loops are ordinary
//! loops whose [`RoomType`] is one of the two door types, conventionally a
//! two-corner segment lying on the wall they pierce.
//!
//! Interchange records are one JSON object per line:
//! `{"rooms":[{"type":"LivingRoom","loop":[[x,y],...]}, ...]}`.

use crate::{CoreError, Result};
use serde::de::{SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Hard capacity limits: at most 32 loops per plan and 32 corners per loop.
pub const MAX_LOOPS: usize = 32;
/// Maximum corner count per loop.
pub const MAX_CORNERS: usize = 32;

/// Room (and door) categories, 25 slots wide to match the type one-hot fed to
/// the denoiser. Slots 23 and 24 are reserved for the two door kinds.
///
/// The enumeration is modeled on the common residential dataset categories;
/// the exact table is part of the project contract and must stay stable, as
/// the discriminants index the type one-hot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum RoomType {
    LivingRoom = 0,
    Bedroom = 1,
    Kitchen = 2,
    Bathroom = 3,
    DiningRoom = 4,
    StudyRoom = 5,
    Balcony = 6,
    Entrance = 7,
    Storage = 8,
    MasterRoom = 9,
    ChildRoom = 10,
    SecondRoom = 11,
    GuestRoom = 12,
    WalkInCloset = 13,
    Corridor = 14,
    LaundryRoom = 15,
    Office = 16,
    Garage = 17,
    Terrace = 18,
    Pantry = 19,
    Utility = 20,
    Sunroom = 21,
    Porch = 22,
    InteriorDoor = 23,
    FrontDoor = 24,
}

/// Number of type slots (width of the type one-hot).
pub const ROOM_TYPE_COUNT: usize = 25;

impl RoomType {
    /// All variants in discriminant order.
    pub const ALL: [RoomType; ROOM_TYPE_COUNT] = [
        RoomType::LivingRoom,
        RoomType::Bedroom,
        RoomType::Kitchen,
        RoomType::Bathroom,
        RoomType::DiningRoom,
        RoomType::StudyRoom,
        RoomType::Balcony,
        RoomType::Entrance,
        RoomType::Storage,
        RoomType::MasterRoom,
        RoomType::ChildRoom,
        RoomType::SecondRoom,
        RoomType::GuestRoom,
        RoomType::WalkInCloset,
        RoomType::Corridor,
        RoomType::LaundryRoom,
        RoomType::Office,
        RoomType::Garage,
        RoomType::Terrace,
        RoomType::Pantry,
        RoomType::Utility,
        RoomType::Sunroom,
        RoomType::Porch,
        RoomType::InteriorDoor,
        RoomType::FrontDoor,
    ];

    /// Slot index of this type in the one-hot encoding.
    pub fn id(self) -> usize {
        self as usize
    }

    /// Inverse of [`RoomType::id`].
    pub fn from_id(id: usize) -> Option<RoomType> {
        RoomType::ALL.get(id).copied()
    }

    /// True for the two door categories.
    pub fn is_door(self) -> bool {
        matches!(self, RoomType::InteriorDoor | RoomType::FrontDoor)
    }

    /// Canonical label used in interchange files and rendering.
    pub fn label(self) -> &'static str {
        match self {
            RoomType::LivingRoom => "LivingRoom",
            RoomType::Bedroom => "Bedroom",
            RoomType::Kitchen => "Kitchen",
            RoomType::Bathroom => "Bathroom",
            RoomType::DiningRoom => "DiningRoom",
            RoomType::StudyRoom => "StudyRoom",
            RoomType::Balcony => "Balcony",
            RoomType::Entrance => "Entrance",
            RoomType::Storage => "Storage",
            RoomType::MasterRoom => "MasterRoom",
            RoomType::ChildRoom => "ChildRoom",
            RoomType::SecondRoom => "SecondRoom",
            RoomType::GuestRoom => "GuestRoom",
            RoomType::WalkInCloset => "WalkInCloset",
            RoomType::Corridor => "Corridor",
            RoomType::LaundryRoom => "LaundryRoom",
            RoomType::Office => "Office",
            RoomType::Garage => "Garage",
            RoomType::Terrace => "Terrace",
            RoomType::Pantry => "Pantry",
            RoomType::Utility => "Utility",
            RoomType::Sunroom => "Sunroom",
            RoomType::Porch => "Porch",
            RoomType::InteriorDoor => "InteriorDoor",
            RoomType::FrontDoor => "FrontDoor",
        }
    }

    /// Inverse of [`RoomType::label`], exact match only.
    pub fn from_label(label: &str) -> Option<RoomType> {
        RoomType::ALL.iter().copied().find(|t| t.label() == label)
    }

    /// Human-readable lowercase phrase, e.g. `LivingRoom` -> "living room".
    pub fn phrase(self) -> String {
        let label = self.label();
        let mut out = String::with_capacity(label.len() + 4);
        for (i, ch) in label.chars().enumerate() {
            if ch.is_ascii_uppercase() {
                if i > 0 {
                    out.push(' ');
                }
                out.push(ch.to_ascii_lowercase());
            } else {
                out.push(ch);
            }
        }
        out
    }
}

impl fmt::Display for RoomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for RoomType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for RoomType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        RoomType::from_label(&label)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown room type label {label:?}")))
    }
}

/// One loop corner on the integer grid. Serialized as a `[x, y]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Corner {
    pub x: u8,
    pub y: u8,
}

impl Corner {
    pub fn new(x: u8, y: u8) -> Corner {
        Corner { x, y }
    }

    pub fn as_f64(self) -> (f64, f64) {
        (f64::from(self.x), f64::from(self.y))
    }
}

impl Serialize for Corner {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.x, self.y).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Corner {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct CornerVisitor;
        impl<'de> Visitor<'de> for CornerVisitor {
            type Value = Corner;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a [x, y] pair with both values in [0, 255]")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Corner, A::Error> {
                let x: u8 = seq
                    .next_element()?
                    .ok_or_else(|| serde::de::Error::invalid_length(0, &self))?;
                let y: u8 = seq
                    .next_element()?
                    .ok_or_else(|| serde::de::Error::invalid_length(1, &self))?;
                if seq.next_element::<serde_json::Value>()?.is_some() {
                    return Err(serde::de::Error::invalid_length(3, &self));
                }
                Ok(Corner { x, y })
            }
        }
        d.deserialize_seq(CornerVisitor)
    }
}

/// One closed corner loop with its category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loop {
    #[serde(rename = "type")]
    pub room_type: RoomType,
    #[serde(rename = "loop")]
    pub corners: Vec<Corner>,
}

impl Loop {
    pub fn new(room_type: RoomType, corners: Vec<Corner>) -> Loop {
        Loop { room_type, corners }
    }

    /// Structural checks: corner count in [1, 32] and no two cyclically
    /// consecutive corners coincide (checked only for loops of 2+ corners).
    pub fn validate(&self) -> Result<()> {
        let n = self.corners.len();
        if n == 0 {
            return Err(CoreError::Invalid {
                what: "loop",
                reason: "loop has no corners".into(),
            });
        }
        if n > MAX_CORNERS {
            return Err(CoreError::Capacity {
                what: "corner",
                got: n,
                max: MAX_CORNERS,
            });
        }
        if n >= 2 {
            for j in 0..n {
                let a = self.corners[j];
                let b = self.corners[(j + 1) % n];
                if a == b {
                    return Err(CoreError::Invalid {
                        what: "loop",
                        reason: format!("consecutive corners {j} and {} coincide at [{}, {}]", (j + 1) % n, a.x, a.y),
                    });
                }
            }
        }
        Ok(())
    }

    /// Mean of the corner coordinates. Used for matching and door placement;
    /// cheap and exact for rectangles, adequate for the rest.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.corners.len() as f64;
        let (sx, sy) = self
            .corners
            .iter()
            .fold((0.0, 0.0), |(sx, sy), c| (sx + f64::from(c.x), sy + f64::from(c.y)));
        (sx / n, sy / n)
    }

    /// Axis-aligned bounding box as ((min_x, min_y), (max_x, max_y)).
    pub fn bbox(&self) -> ((u8, u8), (u8, u8)) {
        let mut min = (u8::MAX, u8::MAX);
        let mut max = (0u8, 0u8);
        for c in &self.corners {
            min.0 = min.0.min(c.x);
            min.1 = min.1.min(c.y);
            max.0 = max.0.max(c.x);
            max.1 = max.1.max(c.y);
        }
        (min, max)
    }

    /// Signed shoelace area; positive when the corners wind clockwise in
    /// screen coordinates (y down).
    pub fn signed_area(&self) -> f64 {
        let n = self.corners.len();
        if n < 3 {
            return 0.0;
        }
        let mut sum = 0.0;
        for j in 0..n {
            let (ax, ay) = self.corners[j].as_f64();
            let (bx, by) = self.corners[(j + 1) % n].as_f64();
            sum += ax * by - bx * ay;
        }
        sum / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }
}

/// An ordered list of loops; the unit every pipeline stage passes around.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Floorplan {
    pub rooms: Vec<Loop>,
}

impl Floorplan {
    /// Builds and validates a plan in one step.
    pub fn new(rooms: Vec<Loop>) -> Result<Floorplan> {
        let plan = Floorplan { rooms };
        plan.validate()?;
        Ok(plan)
    }

    /// Structural checks: loop count in [1, 32], each loop valid, and at
    /// least one non-door loop present.
    pub fn validate(&self) -> Result<()> {
        if self.rooms.is_empty() {
            return Err(CoreError::Invalid {
                what: "floorplan",
                reason: "plan has no loops".into(),
            });
        }
        if self.rooms.len() > MAX_LOOPS {
            return Err(CoreError::Capacity {
                what: "loop",
                got: self.rooms.len(),
                max: MAX_LOOPS,
            });
        }
        for lp in &self.rooms {
            lp.validate()?;
        }
        if !self.rooms.iter().any(|lp| !lp.room_type.is_door()) {
            return Err(CoreError::Invalid {
                what: "floorplan",
                reason: "plan contains only door loops".into(),
            });
        }
        Ok(())
    }

    /// Non-door loops with their original loop indices.
    pub fn room_loops(&self) -> impl Iterator<Item = (usize, &Loop)> {
        self.rooms
            .iter()
            .enumerate()
            .filter(|(_, lp)| !lp.room_type.is_door())
    }

    /// Door loops with their original loop indices.
    pub fn door_loops(&self) -> impl Iterator<Item = (usize, &Loop)> {
        self.rooms
            .iter()
            .enumerate()
            .filter(|(_, lp)| lp.room_type.is_door())
    }

    /// Serializes to one interchange JSON line (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("floorplan serialization cannot fail")
    }

    /// Parses and validates one interchange JSON line.
    pub fn from_json_line(line: &str) -> Result<Floorplan> {
        let plan: Floorplan = serde_json::from_str(line).map_err(|e| CoreError::Invalid {
            what: "floorplan record",
            reason: e.to_string(),
        })?;
        plan.validate()?;
        Ok(plan)
    }
}
