//! Boundary strips and single-window SSIM for tile adjacency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tile::{luminance, TileImage, Tileset};

pub const DEFAULT_STRIP_WIDTH: u32 = 4;
pub const DEFAULT_ADJACENCY_THRESHOLD: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// Grid offset (d_row, d_col) of the neighbor across this side.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Side::Top => (-1, 0),
            Side::Bottom => (1, 0),
            Side::Left => (0, -1),
            Side::Right => (0, 1),
        }
    }
}

/// Grayscale pixels along one side of a tile.
///
/// Laid out as `depth` rows of `length` values: row 0 is the outermost line
/// of pixels, deeper rows move inward. Position along the edge runs left to
/// right for top/bottom strips and top to bottom for left/right strips, so
/// two facing strips line up pixel for pixel, mirrored across the seam.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryStrip {
    pub side: Side,
    pub depth: usize,
    pub length: usize,
    pub values: Vec<f64>,
}

impl BoundaryStrip {
    pub fn get(&self, depth: usize, along: usize) -> f64 {
        self.values[depth * self.length + along]
    }
}

/// Maps (depth, position-along-edge) to pixel (x, y) for a side.
fn side_pixel(tile: &TileImage, side: Side, depth: u32, along: u32) -> (u32, u32) {
    match side {
        Side::Top => (along, depth),
        Side::Bottom => (along, tile.height() - 1 - depth),
        Side::Left => (depth, along),
        Side::Right => (tile.width() - 1 - depth, along),
    }
}

fn side_length(tile: &TileImage, side: Side) -> u32 {
    match side {
        Side::Top | Side::Bottom => tile.width(),
        Side::Left | Side::Right => tile.height(),
    }
}

fn side_depth_limit(tile: &TileImage, side: Side) -> u32 {
    match side {
        Side::Top | Side::Bottom => tile.height(),
        Side::Left | Side::Right => tile.width(),
    }
}

/// Extracts `strip_width` lines of grayscale pixels from one side.
pub fn extract_boundary(tile: &TileImage, side: Side, strip_width: u32) -> Result<BoundaryStrip> {
    let len = side_length(tile, side);
    extract_boundary_span(tile, side, strip_width, 0, len)
}

/// Like [`extract_boundary`], restricted to `len` pixels along the edge
/// starting at `start`.
pub fn extract_boundary_span(
    tile: &TileImage,
    side: Side,
    strip_width: u32,
    start: u32,
    len: u32,
) -> Result<BoundaryStrip> {
    let limit = side_depth_limit(tile, side);
    if strip_width == 0 || strip_width > limit {
        return Err(Error::Argument(format!(
            "strip width {strip_width} outside 1..={limit}"
        )));
    }
    if len == 0 || start + len > side_length(tile, side) {
        return Err(Error::Argument(format!(
            "edge span {start}+{len} exceeds side length {}",
            side_length(tile, side)
        )));
    }
    let mut values = Vec::with_capacity((strip_width * len) as usize);
    for d in 0..strip_width {
        for a in start..start + len {
            let (x, y) = side_pixel(tile, side, d, a);
            values.push(luminance(tile.get(x, y)) as f64);
        }
    }
    Ok(BoundaryStrip {
        side,
        depth: strip_width as usize,
        length: len as usize,
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub c1: f64,
    pub c2: f64,
    pub dynamic_range: f64,
}

impl SsimParams {
    /// Standard constants C1 = (0.01 L)^2, C2 = (0.03 L)^2.
    pub fn for_range(dynamic_range: f64) -> Self {
        Self {
            c1: (0.01 * dynamic_range).powi(2),
            c2: (0.03 * dynamic_range).powi(2),
            dynamic_range,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::Argument(format!(
                "SSIM constants must be positive (c1={}, c2={})",
                self.c1, self.c2
            )));
        }
        Ok(())
    }
}

impl Default for SsimParams {
    fn default() -> Self {
        Self::for_range(255.0)
    }
}

/// Global SSIM over raw sample vectors, population-normalized.
pub fn ssim_values(a: &[f64], b: &[f64], params: &SsimParams) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Argument(format!(
            "SSIM inputs must be equal-length and non-empty ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    params.validate()?;
    let n = a.len() as f64;
    let mu_a = a.iter().sum::<f64>() / n;
    let mu_b = b.iter().sum::<f64>() / n;
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mu_a;
        let dy = y - mu_b;
        var_a += dx * dx;
        var_b += dy * dy;
        cov += dx * dy;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    let num = (2.0 * mu_a * mu_b + params.c1) * (2.0 * cov + params.c2);
    let den = (mu_a * mu_a + mu_b * mu_b + params.c1) * (var_a + var_b + params.c2);
    Ok(num / den)
}

pub fn ssim(b1: &BoundaryStrip, b2: &BoundaryStrip, params: &SsimParams) -> Result<f64> {
    if (b1.depth, b1.length) != (b2.depth, b2.length) {
        return Err(Error::Argument(format!(
            "strip shapes differ: {}x{} vs {}x{}",
            b1.depth, b1.length, b2.depth, b2.length
        )));
    }
    ssim_values(&b1.values, &b2.values, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `first` is left of `second`.
    Horizontal,
    /// `first` is above `second`.
    Vertical,
}

impl Orientation {
    fn facing_sides(self) -> (Side, Side) {
        match self {
            Orientation::Horizontal => (Side::Right, Side::Left),
            Orientation::Vertical => (Side::Bottom, Side::Top),
        }
    }
}

/// SSIM of the facing boundary strips of two neighboring tiles.
pub fn adjacency_score(
    first: &TileImage,
    second: &TileImage,
    orientation: Orientation,
    strip_width: u32,
    params: &SsimParams,
) -> Result<f64> {
    if (first.width(), first.height()) != (second.width(), second.height()) {
        return Err(Error::Argument(format!(
            "tile sizes differ: {}x{} vs {}x{}",
            first.width(),
            first.height(),
            second.width(),
            second.height()
        )));
    }
    let (s1, s2) = orientation.facing_sides();
    let b1 = extract_boundary(first, s1, strip_width)?;
    let b2 = extract_boundary(second, s2, strip_width)?;
    ssim(&b1, &b2, params)
}

/// Inclusive threshold test: a score equal to the threshold passes.
#[inline]
pub fn is_adjacent(score: f64, threshold: f64) -> bool {
    score >= threshold
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyRecord {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub orientation: Orientation,
    pub score: f64,
    pub adjacent: bool,
}

/// Scores every horizontally and vertically neighboring tile pair in raster order.
pub fn adjacency_pairs(
    tileset: &Tileset,
    strip_width: u32,
    params: &SsimParams,
    threshold: f64,
) -> Result<Vec<AdjacencyRecord>> {
    let mut out = Vec::new();
    for r in 0..tileset.rows() {
        for c in 0..tileset.cols() {
            let here = tileset.tile(r, c);
            let mut push = |b: (usize, usize), orientation| -> Result<()> {
                let score =
                    adjacency_score(here, tileset.tile(b.0, b.1), orientation, strip_width, params)?;
                out.push(AdjacencyRecord {
                    a: (r, c),
                    b,
                    orientation,
                    score,
                    adjacent: is_adjacent(score, threshold),
                });
                Ok(())
            };
            if c + 1 < tileset.cols() {
                push((r, c + 1), Orientation::Horizontal)?;
            }
            if r + 1 < tileset.rows() {
                push((r + 1, c), Orientation::Vertical)?;
            }
        }
    }
    Ok(out)
}
