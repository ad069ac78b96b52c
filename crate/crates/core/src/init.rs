//! The coarse layout produced by the language frontend: one axis-aligned
//! rectangle per room plus a door wall, and its expansion into a full
//! [`Floorplan`] with synthesized door segments.
//!
//! Serialized form (field names are a wire contract):
//!
//! ```json
//! {"rooms": [{"name": "LivingRoom", "style": "modern",
//!             "position": [10, 10], "size": [50, 40], "door": "up"}]}
//! ```
//!
//! `position` is the rectangle's top-left corner; `size` is [width, height];
//! `door` names the wall that carries the room's door.

use crate::types::{Corner, Floorplan, Loop, RoomType};
use crate::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Wall of a room rectangle, in screen coordinates (y grows downward, so
/// `Up` is the wall with the smallest y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Direction> {
        match s.to_ascii_lowercase().as_str() {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            other => Err(CoreError::Invalid {
                what: "door direction",
                reason: format!("{other:?} is not one of up/down/left/right"),
            }),
        }
    }
}

/// One room of a coarse layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitRoom {
    pub name: String,
    pub style: String,
    /// Top-left corner [x, y].
    pub position: [u8; 2],
    /// [width, height], both at least 1.
    pub size: [u8; 2],
    pub door: Direction,
}

impl InitRoom {
    pub fn x(&self) -> u8 {
        self.position[0]
    }
    pub fn y(&self) -> u8 {
        self.position[1]
    }
    pub fn w(&self) -> u8 {
        self.size[0]
    }
    pub fn h(&self) -> u8 {
        self.size[1]
    }

    /// Center of the rectangle.
    pub fn center(&self) -> (f64, f64) {
        (
            f64::from(self.x()) + f64::from(self.w()) / 2.0,
            f64::from(self.y()) + f64::from(self.h()) / 2.0,
        )
    }

    fn validate(&self, index: usize) -> Result<()> {
        let fail = |reason: String| CoreError::Invalid {
            what: "init room",
            reason: format!("room[{index}] ({:?}): {reason}", self.name),
        };
        if self.name.trim().is_empty() {
            return Err(fail("name is empty".into()));
        }
        if self.w() == 0 || self.h() == 0 {
            return Err(fail(format!("size [{}, {}] must be positive", self.w(), self.h())));
        }
        if u16::from(self.x()) + u16::from(self.w()) > 255 {
            return Err(fail(format!(
                "x + width = {} exceeds the grid",
                u16::from(self.x()) + u16::from(self.w())
            )));
        }
        if u16::from(self.y()) + u16::from(self.h()) > 255 {
            return Err(fail(format!(
                "y + height = {} exceeds the grid",
                u16::from(self.y()) + u16::from(self.h())
            )));
        }
        Ok(())
    }
}

/// Coarse layout: the handoff artifact between the language frontend and the
/// diffusion refiner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutInit {
    pub rooms: Vec<InitRoom>,
}

impl LayoutInit {
    /// Builds and validates in one step.
    pub fn new(rooms: Vec<InitRoom>) -> Result<LayoutInit> {
        let layout = LayoutInit { rooms };
        layout.validate()?;
        Ok(layout)
    }

    /// Checks room presence, geometry ranges, and name uniqueness.
    pub fn validate(&self) -> Result<()> {
        if self.rooms.is_empty() {
            return Err(CoreError::Invalid {
                what: "layout",
                reason: "layout has no rooms".into(),
            });
        }
        let mut seen = BTreeSet::new();
        for (i, room) in self.rooms.iter().enumerate() {
            room.validate(i)?;
            if !seen.insert(room.name.clone()) {
                return Err(CoreError::Invalid {
                    what: "layout",
                    reason: format!("duplicate room name {:?}", room.name),
                });
            }
        }
        Ok(())
    }

    /// Pretty JSON with the wire field order.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serialization cannot fail")
    }
}

/// Renames duplicate room names in place by suffixing " 2", " 3", ... and
/// returns one note per rename. Shared by the reply parser and the dataset
/// perturbation path.
pub fn dedup_names(rooms: &mut [InitRoom]) -> Vec<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut notes = Vec::new();
    for (i, room) in rooms.iter_mut().enumerate() {
        if seen.insert(room.name.clone()) {
            continue;
        }
        let base = room.name.clone();
        let mut k = 2usize;
        loop {
            let candidate = format!("{base} {k}");
            if seen.insert(candidate.clone()) {
                notes.push(format!("room[{i}]: renamed duplicate {base:?} to {candidate:?}"));
                room.name = candidate;
                break;
            }
            k += 1;
        }
    }
    notes
}

/// Maps a free-form room name onto a [`RoomType`]. Matching is insensitive
/// to case, spacing, punctuation, and trailing numbering ("Bedroom 2").
pub fn map_room_name(name: &str) -> Option<RoomType> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    let t = match key.as_str() {
        "livingroom" | "living" | "lounge" | "sittingroom" | "familyroom" => RoomType::LivingRoom,
        "bedroom" | "bed" => RoomType::Bedroom,
        "masterroom" | "masterbedroom" | "master" => RoomType::MasterRoom,
        "childroom" | "childrensroom" | "kidsroom" | "nursery" | "childbedroom" => {
            RoomType::ChildRoom
        }
        "secondroom" | "secondbedroom" => RoomType::SecondRoom,
        "guestroom" | "guestbedroom" => RoomType::GuestRoom,
        "kitchen" | "kitchenette" => RoomType::Kitchen,
        "bathroom" | "bath" | "washroom" | "toilet" | "wc" | "restroom" | "ensuite"
        | "showerroom" => RoomType::Bathroom,
        "diningroom" | "dining" | "diningarea" => RoomType::DiningRoom,
        "studyroom" | "study" | "library" | "readingroom" => RoomType::StudyRoom,
        "balcony" => RoomType::Balcony,
        "entrance" | "entry" | "entryway" | "hall" | "hallway" | "foyer" | "vestibule" => {
            RoomType::Entrance
        }
        "storage" | "storageroom" | "storeroom" | "closet" | "boxroom" => RoomType::Storage,
        "walkincloset" | "walkinwardrobe" | "wardrobe" | "dressingroom" => RoomType::WalkInCloset,
        "corridor" | "passage" | "passageway" => RoomType::Corridor,
        "laundryroom" | "laundry" => RoomType::LaundryRoom,
        "office" | "homeoffice" | "workroom" | "workspace" => RoomType::Office,
        "garage" | "carport" => RoomType::Garage,
        "terrace" | "patio" | "deck" | "veranda" => RoomType::Terrace,
        "pantry" | "larder" => RoomType::Pantry,
        "utility" | "utilityroom" => RoomType::Utility,
        "sunroom" | "conservatory" | "solarium" => RoomType::Sunroom,
        "porch" | "stoop" => RoomType::Porch,
        "interiordoor" | "door" => RoomType::InteriorDoor,
        "frontdoor" | "maindoor" | "entrydoor" => RoomType::FrontDoor,
        _ => {
            // Compound names like "primary bedroom" fall back on their head noun.
            return if key.ends_with("bedroom") {
                Some(RoomType::Bedroom)
            } else if key.ends_with("bathroom") {
                Some(RoomType::Bathroom)
            } else if key.ends_with("balcony") {
                Some(RoomType::Balcony)
            } else {
                None
            };
        }
    };
    Some(t)
}

/// Endpoints (as exact reals) of a room's door segment: the centered middle
/// fifth of the declared door wall.
pub fn door_segment(room: &InitRoom) -> ((f64, f64), (f64, f64)) {
    let (x, y) = (f64::from(room.x()), f64::from(room.y()));
    let (w, h) = (f64::from(room.w()), f64::from(room.h()));
    match room.door {
        Direction::Up => ((x + 0.4 * w, y), (x + 0.6 * w, y)),
        Direction::Down => ((x + 0.4 * w, y + h), (x + 0.6 * w, y + h)),
        Direction::Left => ((x, y + 0.4 * h), (x, y + 0.6 * h)),
        Direction::Right => ((x + w, y + 0.4 * h), (x + w, y + 0.6 * h)),
    }
}

/// Integer door segment with a one-unit nudge when rounding collapses the
/// endpoints (possible for walls shorter than 3 units).
fn door_segment_int(room: &InitRoom) -> (Corner, Corner) {
    let ((ax, ay), (bx, by)) = door_segment(room);
    let mut a = Corner::new(ax.round() as u8, ay.round() as u8);
    let mut b = Corner::new(bx.round() as u8, by.round() as u8);
    if a == b {
        let horizontal = matches!(room.door, Direction::Up | Direction::Down);
        if horizontal {
            if b.x < room.x().saturating_add(room.w()) {
                b.x += 1;
            } else {
                a.x -= 1;
            }
        } else if b.y < room.y().saturating_add(room.h()) {
            b.y += 1;
        } else {
            a.y -= 1;
        }
    }
    (a, b)
}

/// Rectangle corners of a room, top-left first, clockwise in screen
/// coordinates.
pub fn room_rect_corners(room: &InitRoom) -> [Corner; 4] {
    let (x, y, w, h) = (room.x(), room.y(), room.w(), room.h());
    [
        Corner::new(x, y),
        Corner::new(x + w, y),
        Corner::new(x + w, y + h),
        Corner::new(x, y + h),
    ]
}

/// Expands a coarse layout into a full floorplan: one rectangular loop per
/// room (in layout order), then one two-corner interior door segment per
/// room (same order). Room names map to types via [`map_room_name`].
pub fn init_to_floorplan(init: &LayoutInit) -> Result<Floorplan> {
    init.validate()?;
    let mut rooms = Vec::with_capacity(init.rooms.len() * 2);
    for room in &init.rooms {
        let room_type =
            map_room_name(&room.name).ok_or_else(|| CoreError::UnknownType(room.name.clone()))?;
        rooms.push(Loop::new(room_type, room_rect_corners(room).to_vec()));
    }
    for room in &init.rooms {
        let (a, b) = door_segment_int(room);
        rooms.push(Loop::new(RoomType::InteriorDoor, vec![a, b]));
    }
    Floorplan::new(rooms)
}
