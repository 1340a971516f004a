//! Visible-window identification over a downsampled occupancy grid.
//!
//! A capture region is rasterized into an [`AreaMask`] whose cells are
//! `cfg.downsample_px` pixels on a side. Windows are then walked front to
//! back: each window's mask is intersected with the remaining area of
//! interest, the window is declared visible when the overlap exceeds the
//! threshold, and the window's cells are removed from the area of interest
//! whether or not it was visible. The walk stops as soon as the remaining
//! area is at or below the threshold.
//!
//! A cell belongs to a rectangle iff the cell's center pixel lies inside
//! the rectangle clipped to the screen. The center pixel of column `j` is
//! `j * d + d / 2` (integer division), likewise for rows.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cell side length in pixels.
pub const DEFAULT_DOWNSAMPLE_PX: u32 = 10;
/// Default minimum overlap (exclusive) for a window to count as visible.
pub const DEFAULT_THRESHOLD_CELLS: u32 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("screen dimensions must be positive, got {width}x{height}")]
    EmptyScreen { width: u32, height: u32 },
    #[error("downsample ratio must be at least 1 pixel")]
    ZeroDownsample,
}

/// Size of the (virtual) screen in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScreenDims {
    pub width_px: u32,
    pub height_px: u32,
}

impl ScreenDims {
    pub fn new(width_px: u32, height_px: u32) -> Result<Self, GeometryError> {
        let dims = ScreenDims {
            width_px,
            height_px,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(GeometryError::EmptyScreen {
                width: self.width_px,
                height: self.height_px,
            });
        }
        Ok(())
    }

    /// The whole screen as a rectangle anchored at the origin.
    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width_px, self.height_px)
    }
}

/// Axis-aligned pixel rectangle. `x`/`y` is the upper-left corner and may be
/// negative for windows hanging off-screen; the right and bottom edges are
/// exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn left(&self) -> i64 {
        self.x as i64
    }

    pub fn top(&self) -> i64 {
        self.y as i64
    }

    pub fn right(&self) -> i64 {
        self.x as i64 + self.w as i64
    }

    pub fn bottom(&self) -> i64 {
        self.y as i64 + self.h as i64
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn contains_point(&self, px: i64, py: i64) -> bool {
        px >= self.left() && px < self.right() && py >= self.top() && py < self.bottom()
    }

    /// Intersection of two rectangles; disjoint inputs yield an empty rect
    /// positioned at the clamped corner.
    pub fn intersect(&self, other: &Rect) -> Rect {
        let left = self.left().max(other.left());
        let top = self.top().max(other.top());
        let right = self.right().min(other.right());
        let bottom = self.bottom().min(other.bottom());
        let w = (right - left).max(0);
        let h = (bottom - top).max(0);
        Rect {
            x: left as i32,
            y: top as i32,
            w: w as u32,
            h: h as u32,
        }
    }

    pub fn clip_to(&self, screen: ScreenDims) -> Rect {
        self.intersect(&screen.bounds())
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VisibilityConfig {
    /// Side length of one grid cell in pixels.
    pub downsample_px: u32,
    /// A window is visible when its overlap is strictly greater than this.
    pub threshold_cells: u32,
}

impl VisibilityConfig {
    pub fn new(downsample_px: u32, threshold_cells: u32) -> Result<Self, GeometryError> {
        if downsample_px == 0 {
            return Err(GeometryError::ZeroDownsample);
        }
        Ok(VisibilityConfig {
            downsample_px,
            threshold_cells,
        })
    }

    /// Grid size `(cols, rows)` for a screen under this config.
    pub fn grid_size(&self, screen: ScreenDims) -> (usize, usize) {
        let d = self.downsample_px.max(1);
        (
            screen.width_px.div_ceil(d) as usize,
            screen.height_px.div_ceil(d) as usize,
        )
    }
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        VisibilityConfig {
            downsample_px: DEFAULT_DOWNSAMPLE_PX,
            threshold_cells: DEFAULT_THRESHOLD_CELLS,
        }
    }
}

/// Anything with a pixel bounding box that can take part in the walk.
pub trait Bounded {
    fn bounds(&self) -> Rect;
}

impl Bounded for Rect {
    fn bounds(&self) -> Rect {
        *self
    }
}

impl<T: Bounded + ?Sized> Bounded for &T {
    fn bounds(&self) -> Rect {
        (**self).bounds()
    }
}

const WORD_BITS: usize = 64;

/// Row-major bitset over the downsampled screen grid.
#[derive(Clone, PartialEq, Eq)]
pub struct AreaMask {
    cols: usize,
    rows: usize,
    words: Vec<u64>,
}

impl fmt::Debug for AreaMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AreaMask")
            .field("cols", &self.cols)
            .field("rows", &self.rows)
            .field("count", &self.count())
            .finish()
    }
}

impl AreaMask {
    /// An all-false mask sized for `screen` under `cfg`.
    pub fn empty(screen: ScreenDims, cfg: VisibilityConfig) -> Self {
        let (cols, rows) = cfg.grid_size(screen);
        let bits = cols * rows;
        AreaMask {
            cols,
            rows,
            words: vec![0; bits.div_ceil(WORD_BITS)],
        }
    }

    /// Cells whose center pixel lies inside `rect` clipped to the screen.
    pub fn from_rect(rect: Rect, screen: ScreenDims, cfg: VisibilityConfig) -> Self {
        let mut mask = AreaMask::empty(screen, cfg);
        let clipped = rect.clip_to(screen);
        if clipped.is_empty() {
            return mask;
        }
        let d = cfg.downsample_px.max(1) as i64;
        let cols = cell_span(clipped.left(), clipped.right(), d, mask.cols);
        let rows = cell_span(clipped.top(), clipped.bottom(), d, mask.rows);
        if cols.is_empty() {
            return mask;
        }
        for row in rows {
            let base = row * mask.cols;
            mask.set_range(base + cols.start..base + cols.end);
        }
        mask
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "cell out of range");
        let bit = row * self.cols + col;
        self.words[bit / WORD_BITS] & (1u64 << (bit % WORD_BITS)) != 0
    }

    /// Number of true cells (the element sum of the matrix).
    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Element sum of `self & other` without materializing it.
    pub fn intersection_count(&self, other: &AreaMask) -> u64 {
        self.check_shape(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn intersect_with(&mut self, other: &AreaMask) {
        self.check_shape(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    /// `self <- self & !other`
    pub fn subtract(&mut self, other: &AreaMask) {
        self.check_shape(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
    }

    /// Iterates `(row, col)` of every true cell in row-major order.
    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.words
            .iter()
            .enumerate()
            .flat_map(move |(wi, &word)| {
                let mut w = word;
                std::iter::from_fn(move || {
                    if w == 0 {
                        return None;
                    }
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + tz)
                })
            })
            .map(move |bit| (bit / cols, bit % cols))
    }

    fn check_shape(&self, other: &AreaMask) {
        assert!(
            self.cols == other.cols && self.rows == other.rows,
            "mask shapes differ: {}x{} vs {}x{}",
            self.cols,
            self.rows,
            other.cols,
            other.rows
        );
    }

    fn set_range(&mut self, bits: Range<usize>) {
        let (start, end) = (bits.start, bits.end);
        if start >= end {
            return;
        }
        let first = start / WORD_BITS;
        let last = (end - 1) / WORD_BITS;
        let lo_mask = !0u64 << (start % WORD_BITS);
        let hi_mask = !0u64 >> (WORD_BITS - 1 - (end - 1) % WORD_BITS);
        if first == last {
            self.words[first] |= lo_mask & hi_mask;
            return;
        }
        self.words[first] |= lo_mask;
        for w in &mut self.words[first + 1..last] {
            *w = !0;
        }
        self.words[last] |= hi_mask;
    }
}

/// Cells `j` in `0..n` whose center `j*d + d/2` falls in `[lo, hi)`.
fn cell_span(lo: i64, hi: i64, d: i64, n: usize) -> Range<usize> {
    let half = d / 2;
    let first = ceil_div(lo - half, d).clamp(0, n as i64);
    let end = ceil_div(hi - half, d).clamp(0, n as i64);
    first as usize..end.max(first) as usize
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Area-of-interest matrix for a capture region.
pub fn make_region_mask(region: Rect, screen: ScreenDims, cfg: VisibilityConfig) -> AreaMask {
    AreaMask::from_rect(region, screen, cfg)
}

/// Window matrix for one window's bounds.
pub fn window_mask(bounds: Rect, screen: ScreenDims, cfg: VisibilityConfig) -> AreaMask {
    AreaMask::from_rect(bounds, screen, cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VisibilityReport {
    /// Indices into the input list, in front-to-back order.
    pub visible_ids: Vec<usize>,
    /// Overlap with the remaining area of interest, for every examined window.
    pub overlap_cells: BTreeMap<usize, u64>,
    /// Whether the walk stopped because the area of interest ran out.
    pub terminated_early: bool,
}

impl VisibilityReport {
    pub fn is_visible(&self, index: usize) -> bool {
        self.visible_ids.contains(&index)
    }
}

/// Walks `windows` (front to back) and reports which are visible inside
/// `region`.
pub fn identify_visible_windows<W: Bounded>(
    region: Rect,
    windows: &[W],
    screen: ScreenDims,
    cfg: VisibilityConfig,
) -> VisibilityReport {
    let mut report = VisibilityReport::default();
    if windows.is_empty() {
        return report;
    }
    let threshold = cfg.threshold_cells as u64;
    let mut area = make_region_mask(region, screen, cfg);

    for (k, window) in windows.iter().enumerate() {
        let wmask = window_mask(window.bounds(), screen, cfg);
        let overlap = wmask.intersection_count(&area);
        report.overlap_cells.insert(k, overlap);
        if overlap > threshold {
            report.visible_ids.push(k);
        }
        area.subtract(&wmask);
        if area.count() <= threshold {
            report.terminated_early = true;
            break;
        }
    }
    report
}

/// Reference painter: paints windows back to front onto the cell grid and
/// counts, per window, the region cells where it ends up on top.
///
/// Shares no code with the masking walk beyond the geometry types.
pub fn rasterize_oracle<W: Bounded>(
    region: Rect,
    windows: &[W],
    screen: ScreenDims,
    cfg: VisibilityConfig,
) -> BTreeMap<usize, u64> {
    let d = cfg.downsample_px.max(1) as i64;
    let cols = (screen.width_px as i64 + d - 1) / d;
    let rows = (screen.height_px as i64 + d - 1) / d;
    let on_screen = |px: i64, py: i64| {
        px >= 0 && py >= 0 && px < screen.width_px as i64 && py < screen.height_px as i64
    };
    let center = |i: i64| i * d + d / 2;

    let mut top: Vec<Option<usize>> = vec![None; (cols * rows) as usize];
    for (k, window) in windows.iter().enumerate().rev() {
        let b = window.bounds();
        if b.w == 0 || b.h == 0 {
            continue;
        }
        // Candidate rows/cols padded by one cell; the exact test is per cell.
        let r0 = (b.top().div_euclid(d) - 1).max(0);
        let r1 = (b.bottom().div_euclid(d) + 1).min(rows - 1);
        let c0 = (b.left().div_euclid(d) - 1).max(0);
        let c1 = (b.right().div_euclid(d) + 1).min(cols - 1);
        for r in r0..=r1 {
            for c in c0..=c1 {
                let (px, py) = (center(c), center(r));
                if on_screen(px, py) && b.contains_point(px, py) {
                    top[(r * cols + c) as usize] = Some(k);
                }
            }
        }
    }

    let mut counts: BTreeMap<usize, u64> = (0..windows.len()).map(|k| (k, 0)).collect();
    for r in 0..rows {
        for c in 0..cols {
            let (px, py) = (center(c), center(r));
            if !(on_screen(px, py) && region.contains_point(px, py)) {
                continue;
            }
            if let Some(k) = top[(r * cols + c) as usize] {
                *counts.get_mut(&k).expect("index in range") += 1;
            }
        }
    }
    counts
}

/// Ground-truth visible set from [`rasterize_oracle`], front-to-back order.
pub fn oracle_visible_ids<W: Bounded>(
    region: Rect,
    windows: &[W],
    screen: ScreenDims,
    cfg: VisibilityConfig,
) -> Vec<usize> {
    rasterize_oracle(region, windows, screen, cfg)
        .into_iter()
        .filter(|&(_, n)| n > cfg.threshold_cells as u64)
        .map(|(k, _)| k)
        .collect()
}
