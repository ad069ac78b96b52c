//! Reply parsing with bounded, logged repair.
//!
//! [`parse_layout_init`] pulls the first balanced JSON object out of a reply
//! (which usually wraps it in prose), validates it against the layout schema,
//! and applies exactly four repairs, each recorded in the returned repair
//! log: clamp coordinates into the grid, shrink sizes to fit, default a
//! missing style to "modern", and drop unknown fields. Everything else —
//! unmappable room names, bad door directions, missing required fields — is
//! a hard schema error. Repairs are never silent.

use crate::{LlmError, Result};
use floorgen_core::init::{dedup_names, map_room_name, Direction, InitRoom, LayoutInit};
use serde_json::Value;
use std::str::FromStr;

/// Grid coordinate clamp: integers land in [0, 255].
fn clamp_coord(v: i64) -> i64 {
    v.clamp(0, 255)
}

/// Index of the byte closing the balanced object that opens at `start`
/// (which must hold `{`), honoring JSON string and escape rules.
fn balanced_end(raw: &str, start: usize) -> Option<usize> {
    let bytes = raw.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// First span of `raw` that parses as a JSON object, scanning every opening
/// brace so an object nested in non-JSON brace garbage is still found.
/// Prefers the first object that carries a "rooms" key — step-by-step replies
/// may emit smaller JSON fragments before the layout — and otherwise falls
/// back to the first object at all (yielding a precise schema error later).
fn first_json_object(raw: &str) -> Option<Value> {
    let mut fallback = None;
    for (i, &b) in raw.as_bytes().iter().enumerate() {
        if b != b'{' {
            continue;
        }
        if let Some(end) = balanced_end(raw, i) {
            if let Ok(v) = serde_json::from_str::<Value>(&raw[i..=end]) {
                if v.get("rooms").is_some() {
                    return Some(v);
                }
                if v.is_object() && fallback.is_none() {
                    fallback = Some(v);
                }
            }
        }
    }
    fallback
}

/// Reads a JSON number as an integer, reporting whether it was integral.
fn as_int(v: &Value) -> Option<(i64, bool)> {
    if let Some(i) = v.as_i64() {
        return Some((i, true));
    }
    let f = v.as_f64()?;
    if !f.is_finite() {
        return None;
    }
    Some((f.round() as i64, false))
}

/// Reads a `[a, b]` pair of numbers, reporting whether both were integral.
fn as_pair(v: &Value) -> Option<([i64; 2], bool)> {
    let arr = v.as_array()?;
    if arr.len() != 2 {
        return None;
    }
    let (a, ia) = as_int(&arr[0])?;
    let (b, ib) = as_int(&arr[1])?;
    Some(([a, b], ia && ib))
}

fn schema(msg: String) -> LlmError {
    LlmError::Schema(msg)
}

/// Parses one reply into a validated [`LayoutInit`] plus the repair log (one
/// entry per applied repair, empty for clean input).
pub fn parse_layout_init(raw: &str) -> Result<(LayoutInit, Vec<String>)> {
    let value = first_json_object(raw).ok_or(LlmError::NoJson)?;
    let object = value.as_object().expect("first_json_object returns objects");
    let mut repairs: Vec<String> = Vec::new();

    let unknown_top: Vec<&str> = object
        .keys()
        .filter(|k| k.as_str() != "rooms")
        .map(String::as_str)
        .collect();
    if !unknown_top.is_empty() {
        repairs.push(format!(
            "dropped unknown top-level field(s) {}",
            unknown_top.join(", ")
        ));
    }

    let room_values = object
        .get("rooms")
        .ok_or_else(|| schema("object has no \"rooms\" array".to_string()))?
        .as_array()
        .ok_or_else(|| schema("\"rooms\" is not an array".to_string()))?;
    if room_values.is_empty() {
        return Err(schema("\"rooms\" is empty".to_string()));
    }

    let mut rooms: Vec<InitRoom> = Vec::with_capacity(room_values.len());
    for (i, rv) in room_values.iter().enumerate() {
        let room = rv
            .as_object()
            .ok_or_else(|| schema(format!("room[{i}] is not an object")))?;

        const KNOWN: [&str; 5] = ["name", "style", "position", "size", "door"];
        let unknown: Vec<&str> = room
            .keys()
            .filter(|k| !KNOWN.contains(&k.as_str()))
            .map(String::as_str)
            .collect();
        if !unknown.is_empty() {
            repairs.push(format!(
                "room[{i}]: dropped unknown field(s) {}",
                unknown.join(", ")
            ));
        }

        let name = room
            .get("name")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| schema(format!("room[{i}] has no usable name")))?
            .to_string();
        if map_room_name(&name).is_none() {
            return Err(schema(format!(
                "room[{i}] name {name:?} does not map to a known room type"
            )));
        }

        let style = match room.get("style").and_then(Value::as_str) {
            Some(s) => s.to_string(),
            None => {
                repairs.push(format!("room[{i}] ({name:?}): style defaulted to \"modern\""));
                "modern".to_string()
            }
        };

        let pos_value = room
            .get("position")
            .ok_or_else(|| schema(format!("room[{i}] ({name:?}) has no position")))?;
        let (pos_raw, pos_integral) = as_pair(pos_value)
            .ok_or_else(|| schema(format!("room[{i}] ({name:?}) position must be [x, y]")))?;
        let mut pos = [clamp_coord(pos_raw[0]), clamp_coord(pos_raw[1])];
        if pos != pos_raw || !pos_integral {
            repairs.push(format!(
                "room[{i}] ({name:?}): position clamped from {pos_value} to [{}, {}]",
                pos[0], pos[1]
            ));
        }

        let size_value = room
            .get("size")
            .ok_or_else(|| schema(format!("room[{i}] ({name:?}) has no size")))?;
        let (size_raw, size_integral) = as_pair(size_value).ok_or_else(|| {
            schema(format!("room[{i}] ({name:?}) size must be [width, height]"))
        })?;
        if size_raw[0] < 1 || size_raw[1] < 1 {
            return Err(schema(format!(
                "room[{i}] ({name:?}) size {size_value} must be positive"
            )));
        }
        // Fit: the far corner position + size must stay within [0, 255]. In
        // the extreme where the position sits on the far edge, pull it back
        // one unit so a unit-sized room still fits.
        let mut size = size_raw;
        let mut pulled = false;
        for axis in 0..2 {
            if pos[axis] + size[axis] > 255 {
                if pos[axis] > 254 {
                    pos[axis] = 254;
                    pulled = true;
                }
                size[axis] = size[axis].min(255 - pos[axis]);
            }
        }
        if size != size_raw || !size_integral || pulled {
            let mut entry = format!(
                "room[{i}] ({name:?}): size fitted from {size_value} to [{}, {}]",
                size[0], size[1]
            );
            if pulled {
                entry.push_str(&format!(" (position pulled to [{}, {}])", pos[0], pos[1]));
            }
            repairs.push(entry);
        }

        let door_raw = room
            .get("door")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(format!("room[{i}] ({name:?}) has no door direction")))?;
        let door_lower = door_raw.to_lowercase();
        let door = Direction::from_str(&door_lower).map_err(|_| {
            schema(format!(
                "room[{i}] ({name:?}) door direction {door_raw:?} is not one of up/down/left/right"
            ))
        })?;
        if door_lower != door_raw {
            repairs.push(format!(
                "room[{i}] ({name:?}): door lowercased from {door_raw:?}"
            ));
        }

        rooms.push(InitRoom {
            name,
            style,
            position: [pos[0] as u8, pos[1] as u8],
            size: [size[0] as u8, size[1] as u8],
            door,
        });
    }

    repairs.extend(dedup_names(&mut rooms));
    for entry in &repairs {
        log::info!("layout repair: {entry}");
    }

    let layout = LayoutInit::new(rooms).map_err(|e| schema(e.to_string()))?;
    Ok((layout, repairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLEAN: &str = r#"{"rooms": [
        {"name": "Living Room", "style": "modern", "position": [10, 10], "size": [120, 100], "door": "right"},
        {"name": "Kitchen", "style": "modern", "position": [130, 10], "size": [60, 60], "door": "left"}
    ]}"#;

    #[test]
    fn well_formed_reply_parses_with_empty_log() {
        let (layout, repairs) = parse_layout_init(CLEAN).unwrap();
        assert!(repairs.is_empty(), "unexpected repairs: {repairs:?}");
        assert_eq!(layout.rooms.len(), 2);
        assert_eq!(layout.rooms[0].name, "Living Room");
        assert_eq!(layout.rooms[0].position, [10, 10]);
        assert_eq!(layout.rooms[1].size, [60, 60]);
        assert_eq!(layout.rooms[1].door, Direction::Left);
    }

    #[test]
    fn json_is_extracted_from_surrounding_prose() {
        let wrapped = format!("Here is your layout: {CLEAN} Enjoy!");
        let (layout, repairs) = parse_layout_init(&wrapped).unwrap();
        assert!(repairs.is_empty());
        assert_eq!(layout.rooms.len(), 2);
    }

    #[test]
    fn object_is_found_even_after_brace_garbage() {
        let raw = format!("{{this is not json}} but {CLEAN} is");
        let (layout, _) = parse_layout_init(&raw).unwrap();
        assert_eq!(layout.rooms.len(), 2);
        // Braces inside strings do not confuse the scanner, and an earlier
        // layout-less object does not shadow the layout.
        let tricky = format!("{{\"note\": \"unclosed {{ inside\"}} then {CLEAN}");
        let (layout, _) = parse_layout_init(&tricky).unwrap();
        assert_eq!(layout.rooms.len(), 2);
        // A reply whose only object lacks "rooms" is a schema error, not a
        // missing-JSON error.
        assert!(matches!(
            parse_layout_init(r#"{"note": "hi"}"#),
            Err(LlmError::Schema(_))
        ));
    }

    #[test]
    fn out_of_range_position_is_clamped_and_logged() {
        // Clamp definition: 300 -> 255 and -5 -> 0, one log entry for the
        // position field.
        let raw = r#"{"rooms": [{"name": "Kitchen", "style": "modern",
            "position": [300, -5], "size": [50, 40], "door": "up"}]}"#;
        let (layout, repairs) = parse_layout_init(raw).unwrap();
        assert!(repairs[0].contains("position clamped"));
        assert!(repairs[0].contains("[255, 0]"), "clamp target: {}", repairs[0]);
        // A clamped-to-the-far-edge room cannot carry its width, so a second
        // (size-fit) repair pulls it back into the grid.
        assert_eq!(repairs.len(), 2);
        assert!(repairs[1].contains("size fitted"));
        assert_eq!(layout.rooms[0].position, [254, 0]);
        assert_eq!(layout.rooms[0].size, [1, 40]);
        layout.validate().unwrap();
    }

    #[test]
    fn position_only_repair_is_a_single_log_entry() {
        let raw = r#"{"rooms": [{"name": "Kitchen", "style": "modern",
            "position": [-3, 7], "size": [50, 40], "door": "up"}]}"#;
        let (layout, repairs) = parse_layout_init(raw).unwrap();
        assert_eq!(repairs.len(), 1);
        assert!(repairs[0].contains("position clamped"));
        assert_eq!(layout.rooms[0].position, [0, 7]);
        assert_eq!(layout.rooms[0].size, [50, 40]);
    }

    #[test]
    fn oversized_rooms_shrink_to_fit() {
        let raw = r#"{"rooms": [{"name": "Garage", "style": "modern",
            "position": [200, 10], "size": [90, 400], "door": "up"}]}"#;
        let (layout, repairs) = parse_layout_init(raw).unwrap();
        assert_eq!(repairs.len(), 1);
        assert!(repairs[0].contains("size fitted"));
        assert_eq!(layout.rooms[0].position, [200, 10]);
        assert_eq!(layout.rooms[0].size, [55, 245]);
    }

    #[test]
    fn missing_style_defaults_with_log() {
        let raw = r#"{"rooms": [{"name": "Bedroom",
            "position": [10, 10], "size": [40, 40], "door": "down"}]}"#;
        let (layout, repairs) = parse_layout_init(raw).unwrap();
        assert_eq!(layout.rooms[0].style, "modern");
        assert_eq!(repairs.len(), 1);
        assert!(repairs[0].contains("style defaulted"));
    }

    #[test]
    fn unknown_fields_are_dropped_and_logged() {
        let raw = r#"{"reasoning": "steps...", "rooms": [{"name": "Bedroom",
            "style": "modern", "position": [10, 10], "size": [40, 40],
            "door": "down", "color": "blue", "floor": 2}]}"#;
        let (layout, repairs) = parse_layout_init(raw).unwrap();
        assert_eq!(layout.rooms.len(), 1);
        assert_eq!(repairs.len(), 2);
        assert!(repairs[0].contains("top-level"));
        assert!(repairs[0].contains("reasoning"));
        assert!(repairs[1].contains("color"));
        assert!(repairs[1].contains("floor"));
    }

    #[test]
    fn fractional_coordinates_are_rounded_via_the_clamp_repair() {
        let raw = r#"{"rooms": [{"name": "Study", "style": "modern",
            "position": [10.6, 19.2], "size": [40, 40], "door": "down"}]}"#;
        let (layout, repairs) = parse_layout_init(raw).unwrap();
        assert_eq!(layout.rooms[0].position, [11, 19]);
        assert_eq!(repairs.len(), 1);
        assert!(repairs[0].contains("position clamped"));
    }

    #[test]
    fn door_case_is_repaired_but_bad_directions_are_schema_errors() {
        let raw = r#"{"rooms": [{"name": "Bedroom", "style": "modern",
            "position": [10, 10], "size": [40, 40], "door": "UP"}]}"#;
        let (layout, repairs) = parse_layout_init(raw).unwrap();
        assert_eq!(layout.rooms[0].door, Direction::Up);
        assert_eq!(repairs.len(), 1);
        assert!(repairs[0].contains("door lowercased"));

        let bad = raw.replace("UP", "diagonal");
        assert!(matches!(parse_layout_init(&bad), Err(LlmError::Schema(_))));
    }

    #[test]
    fn hard_schema_errors_are_not_repaired() {
        // Unmappable name.
        let raw = r#"{"rooms": [{"name": "Holodeck", "style": "modern",
            "position": [10, 10], "size": [40, 40], "door": "up"}]}"#;
        assert!(matches!(parse_layout_init(raw), Err(LlmError::Schema(_))));
        // Missing position.
        let raw = r#"{"rooms": [{"name": "Kitchen", "style": "modern",
            "size": [40, 40], "door": "up"}]}"#;
        assert!(matches!(parse_layout_init(raw), Err(LlmError::Schema(_))));
        // Missing door.
        let raw = r#"{"rooms": [{"name": "Kitchen", "style": "modern",
            "position": [10, 10], "size": [40, 40]}]}"#;
        assert!(matches!(parse_layout_init(raw), Err(LlmError::Schema(_))));
        // Non-positive size.
        let raw = r#"{"rooms": [{"name": "Kitchen", "style": "modern",
            "position": [10, 10], "size": [0, 40], "door": "up"}]}"#;
        assert!(matches!(parse_layout_init(raw), Err(LlmError::Schema(_))));
        // Empty rooms.
        assert!(matches!(
            parse_layout_init(r#"{"rooms": []}"#),
            Err(LlmError::Schema(_))
        ));
    }

    #[test]
    fn replies_without_json_are_no_json_errors() {
        assert!(matches!(
            parse_layout_init("I cannot design a house."),
            Err(LlmError::NoJson)
        ));
        assert!(matches!(
            parse_layout_init("an unclosed { brace"),
            Err(LlmError::NoJson)
        ));
        assert!(matches!(parse_layout_init(""), Err(LlmError::NoJson)));
    }

    #[test]
    fn duplicate_names_are_suffixed_and_logged() {
        let raw = r#"{"rooms": [
            {"name": "Bedroom", "style": "modern", "position": [10, 10], "size": [40, 40], "door": "right"},
            {"name": "Bedroom", "style": "modern", "position": [60, 10], "size": [40, 40], "door": "left"}
        ]}"#;
        let (layout, repairs) = parse_layout_init(raw).unwrap();
        assert_eq!(layout.rooms[0].name, "Bedroom");
        assert_eq!(layout.rooms[1].name, "Bedroom 2");
        assert_eq!(repairs.len(), 1);
        assert!(repairs[0].contains("renamed duplicate"));
    }

    #[test]
    fn parse_is_idempotent_after_repair() {
        let messy = r#"Sure thing! {"rooms": [
            {"name": "Living Room", "position": [-20, 10], "size": [500, 100], "door": "UP", "windows": 3},
            {"name": "Bedroom", "style": "rustic", "position": [10, 120], "size": [80, 80], "door": "right"},
            {"name": "Bedroom", "style": "modern", "position": [90, 120], "size": [80, 80], "door": "left"}
        ]} hope that helps"#;
        let (layout, repairs) = parse_layout_init(messy).unwrap();
        assert!(!repairs.is_empty());
        let (again, repairs_again) = parse_layout_init(&layout.to_json_pretty()).unwrap();
        assert_eq!(again, layout);
        assert!(repairs_again.is_empty(), "second pass repaired: {repairs_again:?}");
    }
}
