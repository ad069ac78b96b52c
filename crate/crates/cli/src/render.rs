//! Deterministic floorplan rendering.
//!
//! The SVG renderer is the canonical output: fixed attribute order, all
//! numbers formatted with two decimals, no timestamps — equal inputs produce
//! byte-equal documents, which the golden-file tests rely on. Rooms are
//! filled polygons in their type's palette color with a centroid label;
//! doors (two-corner loops) are thick line segments.
//!
//! PNG output is an optional raster of the same plan: pixels take the
//! palette color of the loop covering them (label text and outlines are a
//! vector-only nicety).

use crate::config::RenderSection;
use crate::{CliError, Result};
use floorgen_core::raster::rasterize;
use floorgen_core::types::{Floorplan, RoomType, ROOM_TYPE_COUNT};
use std::fmt::Write as _;

/// Fill colors per room type, in type-id order.
pub const DEFAULT_PALETTE: [&str; ROOM_TYPE_COUNT] = [
    "#e8c547", // LivingRoom
    "#7fb069", // Bedroom
    "#e07a5f", // Kitchen
    "#7ec4cf", // Bathroom
    "#f2a65a", // DiningRoom
    "#9d8189", // StudyRoom
    "#b5e48c", // Balcony
    "#c9ada7", // Entrance
    "#a79f8e", // Storage
    "#52b69a", // MasterRoom
    "#f4acb7", // ChildRoom
    "#ffd6a5", // SecondRoom
    "#bdb2ff", // GuestRoom
    "#90e0ef", // WalkInCloset
    "#d4a373", // Corridor
    "#a8dadc", // LaundryRoom
    "#ffafcc", // Office
    "#cdb4db", // Garage
    "#b08968", // Terrace
    "#98c1d9", // Pantry
    "#e9edc9", // Utility
    "#f9c74f", // Sunroom
    "#c77dff", // Porch
    "#6d6875", // InteriorDoor
    "#8d99ae", // FrontDoor
];

const BACKGROUND: &str = "#ffffff";
const OUTLINE: &str = "#333333";
const LABEL_COLOR: &str = "#1a1a1a";

/// Resolved rendering style: canvas edge, stroke width, label size, and one
/// fill color per room type.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    pub canvas: u32,
    pub stroke_width: f64,
    pub font_size: f64,
    pub palette: [(u8, u8, u8); ROOM_TYPE_COUNT],
}

impl Default for RenderStyle {
    fn default() -> RenderStyle {
        RenderStyle::from_section(&RenderSection::default()).expect("defaults are valid")
    }
}

impl RenderStyle {
    pub fn from_section(section: &RenderSection) -> Result<RenderStyle> {
        if section.palette.len() != ROOM_TYPE_COUNT {
            return Err(CliError::Usage(format!(
                "palette must list {ROOM_TYPE_COUNT} colors, got {}",
                section.palette.len()
            )));
        }
        let mut palette = [(0u8, 0u8, 0u8); ROOM_TYPE_COUNT];
        for (slot, color) in palette.iter_mut().zip(&section.palette) {
            *slot = parse_color(color)
                .ok_or_else(|| CliError::Usage(format!("bad palette color {color:?}")))?;
        }
        Ok(RenderStyle {
            canvas: section.canvas,
            stroke_width: section.stroke_width,
            font_size: section.font_size,
            palette,
        })
    }

    fn hex(&self, room_type: RoomType) -> String {
        let (r, g, b) = self.palette[room_type.id()];
        format!("#{r:02x}{g:02x}{b:02x}")
    }
}

/// Parses `#rrggbb` (case-insensitive) into an RGB triple.
pub fn parse_color(color: &str) -> Option<(u8, u8, u8)> {
    let hex = color.strip_prefix('#')?;
    if hex.len() != 6 {
        return None;
    }
    let r = u8::from_str_radix(&hex[0..2], 16).ok()?;
    let g = u8::from_str_radix(&hex[2..4], 16).ok()?;
    let b = u8::from_str_radix(&hex[4..6], 16).ok()?;
    Some((r, g, b))
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders `plan` as a self-contained SVG document (see module docs).
pub fn render_svg(plan: &Floorplan, style: &RenderStyle) -> String {
    let canvas = f64::from(style.canvas);
    // Grid coordinates span [0, 255]; scale them onto the canvas.
    let scale = canvas / 255.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {c} {c}\" width=\"{c}\" height=\"{c}\">",
        c = style.canvas
    );
    let _ = writeln!(svg, "<rect width=\"{c}\" height=\"{c}\" fill=\"{BACKGROUND}\"/>", c = style.canvas);

    // Rooms first (paint order = plan order), then doors on top, then labels.
    for (_, lp) in plan.room_loops() {
        let points: Vec<String> = lp
            .corners
            .iter()
            .map(|corner| {
                let (x, y) = corner.as_f64();
                format!("{},{}", fmt2(x * scale), fmt2(y * scale))
            })
            .collect();
        let _ = writeln!(
            svg,
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"{OUTLINE}\" stroke-width=\"{}\"/>",
            points.join(" "),
            style.hex(lp.room_type),
            fmt2(style.stroke_width),
        );
    }
    for (_, lp) in plan.door_loops() {
        let (ax, ay) = lp.corners[0].as_f64();
        let (bx, by) = lp.corners[lp.corners.len() - 1].as_f64();
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\" stroke-linecap=\"round\"/>",
            fmt2(ax * scale),
            fmt2(ay * scale),
            fmt2(bx * scale),
            fmt2(by * scale),
            style.hex(lp.room_type),
            fmt2(style.stroke_width * 2.0),
        );
    }
    for (_, lp) in plan.room_loops() {
        let (cx, cy) = lp.centroid();
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" font-family=\"sans-serif\" text-anchor=\"middle\" fill=\"{LABEL_COLOR}\">{}</text>",
            fmt2(cx * scale),
            fmt2(cy * scale),
            fmt2(style.font_size),
            lp.room_type.label(),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Rasterizes `plan` at the style's canvas resolution, filling each pixel
/// with its covering loop's palette color.
pub fn render_png(plan: &Floorplan, style: &RenderStyle) -> Result<image::RgbImage> {
    let resolution = style.canvas as usize;
    let grid = rasterize(plan, resolution)?;
    let background = parse_color(BACKGROUND).expect("background constant is valid");
    let image = image::RgbImage::from_fn(style.canvas, style.canvas, |x, y| {
        let rgb = match grid.label(x as usize, y as usize) {
            Some(loop_index) => style.palette[plan.rooms[loop_index].room_type.id()],
            None => background,
        };
        image::Rgb([rgb.0, rgb.1, rgb.2])
    });
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use floorgen_core::types::{Corner, Loop};

    fn rect_loop(room_type: RoomType, x: u8, y: u8, w: u8, h: u8) -> Loop {
        Loop::new(
            room_type,
            vec![
                Corner::new(x, y),
                Corner::new(x + w, y),
                Corner::new(x + w, y + h),
                Corner::new(x, y + h),
            ],
        )
    }

    fn two_room_plan() -> Floorplan {
        Floorplan::new(vec![
            rect_loop(RoomType::LivingRoom, 8, 8, 120, 100),
            rect_loop(RoomType::Kitchen, 128, 8, 80, 100),
            Loop::new(
                RoomType::InteriorDoor,
                vec![Corner::new(128, 50), Corner::new(128, 62)],
            ),
        ])
        .unwrap()
    }

    #[test]
    fn svg_is_byte_deterministic_and_well_formed() {
        let style = RenderStyle::default();
        let a = render_svg(&two_room_plan(), &style);
        let b = render_svg(&two_room_plan(), &style);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg "));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<polygon").count(), 2, "one polygon per room");
        assert_eq!(a.matches("<line").count(), 1, "one segment per door");
        assert_eq!(a.matches("<text").count(), 2, "one label per room");
        assert!(a.contains("viewBox=\"0 0 512 512\""));
        assert!(a.contains(">LivingRoom</text>"));
    }

    #[test]
    fn every_room_type_renders_with_its_palette_color() {
        let style = RenderStyle::default();
        for t in RoomType::ALL {
            let plan = if t.is_door() {
                Floorplan::new(vec![
                    rect_loop(RoomType::LivingRoom, 8, 8, 100, 100),
                    Loop::new(t, vec![Corner::new(108, 40), Corner::new(108, 52)]),
                ])
                .unwrap()
            } else {
                Floorplan::new(vec![rect_loop(t, 8, 8, 100, 100)]).unwrap()
            };
            let svg = render_svg(&plan, &style);
            assert!(
                svg.contains(&style.hex(t)),
                "{} must appear with color {}",
                t.label(),
                style.hex(t)
            );
        }
    }

    #[test]
    fn png_pixels_take_room_colors() {
        let style = RenderStyle::default();
        let image = render_png(&two_room_plan(), &style).unwrap();
        assert_eq!(image.dimensions(), (512, 512));
        // Center of the living room (grid ~ (68, 58)) scaled to the canvas.
        let px = image.get_pixel(68 * 512 / 255, 58 * 512 / 255);
        let (r, g, b) = style.palette[RoomType::LivingRoom.id()];
        assert_eq!(px.0, [r, g, b]);
        // A corner outside the plan region stays background.
        assert_eq!(image.get_pixel(1, 1).0, [0xff, 0xff, 0xff]);
    }

    #[test]
    fn color_parsing_accepts_hex_and_rejects_junk() {
        assert_eq!(parse_color("#aabbcc"), Some((0xaa, 0xbb, 0xcc)));
        assert_eq!(parse_color("#AABBCC"), Some((0xaa, 0xbb, 0xcc)));
        assert_eq!(parse_color("aabbcc"), None);
        assert_eq!(parse_color("#abc"), None);
        assert_eq!(parse_color("#aabbcg"), None);
    }
}
