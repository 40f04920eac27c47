//! Region growing over the tile grid, completeness classification and the
//! usable-rate report.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::similarity::{adjacency_score, is_adjacent, Orientation, SsimParams};
use crate::tile::{opacity_stats, TileImage, Tileset};

pub type GridPos = (usize, usize);

/// Minimum opaque fraction for every member tile of a texture segment.
pub const TEXTURE_OPACITY: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentClass {
    Complete,
    Partial,
    Texture,
    CompleteTexture,
    PartialTexture,
}

impl SegmentClass {
    pub const ALL: [SegmentClass; 5] = [
        SegmentClass::Complete,
        SegmentClass::Partial,
        SegmentClass::Texture,
        SegmentClass::CompleteTexture,
        SegmentClass::PartialTexture,
    ];

    pub fn is_usable(self) -> bool {
        matches!(self, SegmentClass::Complete | SegmentClass::CompleteTexture)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
}

impl BoundingBox {
    fn of(members: &[GridPos]) -> Self {
        let mut b = BoundingBox {
            min_row: usize::MAX,
            min_col: usize::MAX,
            max_row: 0,
            max_col: 0,
        };
        for &(r, c) in members {
            b.min_row = b.min_row.min(r);
            b.min_col = b.min_col.min(c);
            b.max_row = b.max_row.max(r);
            b.max_col = b.max_col.max(c);
        }
        b
    }

    pub fn rows(&self) -> usize {
        self.max_row - self.min_row + 1
    }

    pub fn cols(&self) -> usize {
        self.max_col - self.min_col + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    /// First tile reached by the raster scan.
    pub parent: GridPos,
    /// Member tiles in raster order.
    pub members: Vec<GridPos>,
    pub bbox: BoundingBox,
    pub class: Option<SegmentClass>,
}

impl SegmentRecord {
    pub fn contains(&self, pos: GridPos) -> bool {
        self.members.binary_search(&pos).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub similarity_threshold: f64,
    pub transparency_threshold: f64,
    pub strip_width: u32,
    pub ssim: SsimParams,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            similarity_threshold: crate::similarity::DEFAULT_ADJACENCY_THRESHOLD,
            transparency_threshold: crate::tile::DEFAULT_TRANSPARENCY_THRESHOLD,
            strip_width: crate::similarity::DEFAULT_STRIP_WIDTH,
            ssim: SsimParams::default(),
        }
    }
}

/// Exploration order from a tile: right, left, down, up.
const NEIGHBORS: [(isize, isize); 4] = [(0, 1), (0, -1), (1, 0), (-1, 0)];

fn facing_score(
    tileset: &Tileset,
    from: GridPos,
    to: GridPos,
    params: &SegmentParams,
) -> Result<f64> {
    let a = tileset.tile(from.0, from.1);
    let b = tileset.tile(to.0, to.1);
    let (first, second, orientation) = match (to.0 as isize - from.0 as isize, to.1 as isize - from.1 as isize) {
        (0, 1) => (a, b, Orientation::Horizontal),
        (0, -1) => (b, a, Orientation::Horizontal),
        (1, 0) => (a, b, Orientation::Vertical),
        _ => (b, a, Orientation::Vertical),
    };
    adjacency_score(first, second, orientation, params.strip_width, &params.ssim)
}

/// Groups non-transparent tiles into 4-connected segments. A neighbor joins
/// the segment when it is not primarily transparent and the SSIM of the
/// shared boundary passes the similarity threshold.
pub fn grow_segments(tileset: &Tileset, params: &SegmentParams) -> Result<Vec<SegmentRecord>> {
    let (rows, cols) = (tileset.rows(), tileset.cols());
    let solid: Vec<bool> = tileset
        .iter()
        .map(|(_, t)| !opacity_stats(t).is_primarily_transparent(params.transparency_threshold))
        .collect();
    let mut visited = vec![false; rows * cols];
    let mut segments = Vec::new();
    let mut stack = Vec::new();

    for start in 0..rows * cols {
        if visited[start] || !solid[start] {
            continue;
        }
        let parent = (start / cols, start % cols);
        visited[start] = true;
        stack.push(parent);
        let mut members = Vec::new();
        while let Some(cur) = stack.pop() {
            members.push(cur);
            for (dr, dc) in NEIGHBORS {
                let (nr, nc) = (cur.0 as isize + dr, cur.1 as isize + dc);
                if nr < 0 || nc < 0 || nr as usize >= rows || nc as usize >= cols {
                    continue;
                }
                let next = (nr as usize, nc as usize);
                let idx = next.0 * cols + next.1;
                if visited[idx] || !solid[idx] {
                    continue;
                }
                if is_adjacent(facing_score(tileset, cur, next, params)?, params.similarity_threshold) {
                    visited[idx] = true;
                    stack.push(next);
                }
            }
        }
        members.sort_unstable();
        segments.push(SegmentRecord {
            parent,
            bbox: BoundingBox::of(&members),
            members,
            class: None,
        });
    }
    Ok(segments)
}

/// The segment's bounding box as one image; bbox cells outside the segment
/// stay transparent.
pub fn merged_image(segment: &SegmentRecord, tileset: &Tileset) -> TileImage {
    let ts = tileset.tile_size();
    let b = segment.bbox;
    let mut out = TileImage::transparent(b.cols() as u32 * ts, b.rows() as u32 * ts);
    for &(r, c) in &segment.members {
        out.paste(
            tileset.tile(r, c),
            (c - b.min_col) as u32 * ts,
            (r - b.min_row) as u32 * ts,
        );
    }
    out
}

fn line_is_clear(tile: &TileImage, horizontal: bool, at: u32) -> bool {
    if horizontal {
        (0..tile.width()).all(|x| tile.get(x, at)[3] == 0)
    } else {
        (0..tile.height()).all(|y| tile.get(at, y)[3] == 0)
    }
}

/// Checks that, for every tile just outside the bounding box, the pixel line
/// facing the segment is fully transparent. Only meaningful when the box does
/// not touch the grid boundary.
fn surroundings_clear(b: &BoundingBox, tileset: &Tileset) -> bool {
    let last = tileset.tile_size() - 1;
    let above = (b.min_col..=b.max_col).all(|c| line_is_clear(tileset.tile(b.min_row - 1, c), true, last));
    let below = (b.min_col..=b.max_col).all(|c| line_is_clear(tileset.tile(b.max_row + 1, c), true, 0));
    let left = (b.min_row..=b.max_row).all(|r| line_is_clear(tileset.tile(r, b.min_col - 1), false, last));
    let right = (b.min_row..=b.max_row).all(|r| line_is_clear(tileset.tile(r, b.max_col + 1), false, 0));
    above && below && left && right
}

/// Heuristic completeness class: texture when every member is (nearly) fully
/// opaque; complete when nothing opaque touches the merged border, or when the
/// segment sits inside the grid with transparent surroundings.
pub fn classify_segment(segment: &SegmentRecord, tileset: &Tileset) -> SegmentClass {
    let texture = segment
        .members
        .iter()
        .all(|&(r, c)| opacity_stats(tileset.tile(r, c)).opaque_fraction >= TEXTURE_OPACITY);

    let b = &segment.bbox;
    let enclosed = !opacity_stats(&merged_image(segment, tileset)).border_opaque;
    let interior = b.min_row > 0
        && b.min_col > 0
        && b.max_row + 1 < tileset.rows()
        && b.max_col + 1 < tileset.cols();
    let complete = enclosed || (interior && surroundings_clear(b, tileset));

    match (texture, complete) {
        (true, true) => SegmentClass::CompleteTexture,
        (true, false) => SegmentClass::PartialTexture,
        (false, true) => SegmentClass::Complete,
        (false, false) => SegmentClass::Partial,
    }
}

/// Classifies every segment in place. Manual overrides, keyed by parent, win.
pub fn classify_all(
    segments: &mut [SegmentRecord],
    tileset: &Tileset,
    overrides: &HashMap<GridPos, SegmentClass>,
) {
    for seg in segments.iter_mut() {
        seg.class = Some(
            overrides
                .get(&seg.parent)
                .copied()
                .unwrap_or_else(|| classify_segment(seg, tileset)),
        );
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub total_segments: usize,
    pub counts: BTreeMap<SegmentClass, usize>,
    pub unclassified: usize,
    /// (complete + complete_texture) / total, 0 for an empty input.
    pub usable_rate: f64,
}

impl SegmentationReport {
    pub fn count(&self, class: SegmentClass) -> usize {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn from_counts(counts: BTreeMap<SegmentClass, usize>, unclassified: usize) -> Self {
        let mut full: BTreeMap<SegmentClass, usize> =
            SegmentClass::ALL.iter().map(|&c| (c, 0)).collect();
        full.extend(counts);
        let total = full.values().sum::<usize>() + unclassified;
        let usable: usize = full
            .iter()
            .filter(|(c, _)| c.is_usable())
            .map(|(_, n)| n)
            .sum();
        Self {
            total_segments: total,
            counts: full,
            unclassified,
            usable_rate: if total == 0 {
                0.0
            } else {
                usable as f64 / total as f64
            },
        }
    }
}

pub fn segmentation_report(segments: &[SegmentRecord]) -> SegmentationReport {
    let mut counts = BTreeMap::new();
    let mut unclassified = 0;
    for s in segments {
        match s.class {
            Some(c) => *counts.entry(c).or_insert(0) += 1,
            None => unclassified += 1,
        }
    }
    SegmentationReport::from_counts(counts, unclassified)
}
