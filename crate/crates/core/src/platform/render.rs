//! Synthetic screenshots: windows painted back to front as solid rectangles
//! with their application name stamped in the upper-left corner.

use std::fmt;
use std::str::FromStr;

use super::font;
use super::scenario::Scenario;
use super::PlatformError;
use crate::visibility::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    fn luma(&self) -> u32 {
        (299 * self.0 as u32 + 587 * self.1 as u32 + 114 * self.2 as u32) / 1000
    }
}

impl FromStr for Rgb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s
            .strip_prefix('#')
            .filter(|h| h.len() == 6 && h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| format!("color {s:?} is not #rrggbb"))?;
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).expect("validated hex");
        Ok(Rgb(channel(0), channel(2), channel(4)))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

pub const DESKTOP_COLOR: Rgb = Rgb(0x30, 0x30, 0x38);
pub const LABEL_DARK: Rgb = Rgb(0x10, 0x10, 0x10);
pub const LABEL_LIGHT: Rgb = Rgb(0xf4, 0xf4, 0xf4);

const PALETTE: [Rgb; 10] = [
    Rgb(0x4e, 0x79, 0xa7),
    Rgb(0xf2, 0x8e, 0x2b),
    Rgb(0xe1, 0x57, 0x59),
    Rgb(0x76, 0xb7, 0xb2),
    Rgb(0x59, 0xa1, 0x4f),
    Rgb(0xed, 0xc9, 0x48),
    Rgb(0xb0, 0x7a, 0xa1),
    Rgb(0xff, 0x9d, 0xa7),
    Rgb(0x9c, 0x75, 0x5f),
    Rgb(0xba, 0xb0, 0xac),
];

/// Fill color of the window at `index` when the scenario gives none.
pub fn default_color(index: usize) -> Rgb {
    let base = PALETTE[index % PALETTE.len()];
    let shift = ((index / PALETTE.len()) * 17 % 256) as u8;
    Rgb(base.0.wrapping_add(shift), base.1, base.2.wrapping_sub(shift))
}

fn label_color(fill: Rgb) -> Rgb {
    if fill.luma() > 128 {
        LABEL_DARK
    } else {
        LABEL_LIGHT
    }
}

const NO_WINDOW: usize = usize::MAX;
const LABEL_INSET: i64 = 3;

/// Renders the scenario cropped to `crop` (already clipped to the screen)
/// and returns RGB8 PNG bytes.
///
/// A label pixel is only drawn where its window is topmost, and a label is
/// skipped entirely if it would cover every pixel its window owns in the
/// crop, so each window with a visible pixel keeps at least one pixel of
/// its fill color.
pub fn render_scenario(scenario: &Scenario, crop: Rect) -> Result<Vec<u8>, PlatformError> {
    if crop.is_empty() {
        return Err(PlatformError::InvalidRegion(format!("empty crop {crop}")));
    }
    let (cw, chh) = (crop.w as usize, crop.h as usize);
    let mut owner = vec![NO_WINDOW; cw * chh];
    for (k, win) in scenario.windows.iter().enumerate().rev() {
        let r = win.snapshot.bounds.intersect(&crop);
        if r.is_empty() {
            continue;
        }
        let x0 = (r.left() - crop.left()) as usize;
        let y0 = (r.top() - crop.top()) as usize;
        for y in y0..y0 + r.h as usize {
            owner[y * cw + x0..y * cw + x0 + r.w as usize].fill(k);
        }
    }

    let mut owned = vec![0usize; scenario.windows.len()];
    for &o in &owner {
        if o != NO_WINDOW {
            owned[o] += 1;
        }
    }

    let mut label = vec![false; cw * chh];
    for (k, win) in scenario.windows.iter().enumerate() {
        if owned[k] == 0 {
            continue;
        }
        let b = win.snapshot.bounds;
        let origin = (b.left() + LABEL_INSET, b.top() + LABEL_INSET);
        let max_chars = ((b.w as i64 - 2 * LABEL_INSET + 1) / font::ADVANCE).max(0) as usize;
        let text: String = win.snapshot.app_name.chars().take(max_chars).collect();
        let pixels: Vec<usize> = font::text_pixels(&text)
            .map(|(dx, dy)| (origin.0 + dx, origin.1 + dy))
            .filter(|&(px, py)| b.contains_point(px, py) && crop.contains_point(px, py))
            .map(|(px, py)| ((py - crop.top()) as usize) * cw + (px - crop.left()) as usize)
            .filter(|&i| owner[i] == k)
            .collect();
        if pixels.len() < owned[k] {
            for i in pixels {
                label[i] = true;
            }
        }
    }

    let fills: Vec<Rgb> = scenario
        .windows
        .iter()
        .enumerate()
        .map(|(k, w)| w.color.unwrap_or_else(|| default_color(k)))
        .collect();
    let mut rgb = Vec::with_capacity(cw * chh * 3);
    for (i, &o) in owner.iter().enumerate() {
        let c = match o {
            NO_WINDOW => DESKTOP_COLOR,
            k if label[i] => label_color(fills[k]),
            k => fills[k],
        };
        rgb.extend_from_slice(&[c.0, c.1, c.2]);
    }
    encode_png(crop.w, crop.h, &rgb)
}

fn encode_png(w: u32, h: u32, rgb: &[u8]) -> Result<Vec<u8>, PlatformError> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, w, h);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc
        .write_header()
        .map_err(|e| PlatformError::Encode(e.to_string()))?;
    writer
        .write_image_data(rgb)
        .map_err(|e| PlatformError::Encode(e.to_string()))?;
    writer
        .finish()
        .map_err(|e| PlatformError::Encode(e.to_string()))?;
    Ok(out)
}
