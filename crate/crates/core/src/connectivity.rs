//! Directional connectivity over eight half-edge segments, and its
//! evaluation against reference labels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::{GridPos, SegmentRecord};
use crate::similarity::{extract_boundary_span, ssim, BoundaryStrip, Side, SsimParams};
use crate::tile::{opacity_stats, TileImage, Tileset};

pub const DEFAULT_ALPHA_FRACTION_MIN: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction8 {
    TopLeft,
    TopRight,
    RightUp,
    RightDown,
    BottomRight,
    BottomLeft,
    LeftDown,
    LeftUp,
}

/// Which half of a side: `First` covers the lesser pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    First,
    Second,
}

impl Direction8 {
    pub const ALL: [Direction8; 8] = [
        Direction8::TopLeft,
        Direction8::TopRight,
        Direction8::RightUp,
        Direction8::RightDown,
        Direction8::BottomRight,
        Direction8::BottomLeft,
        Direction8::LeftDown,
        Direction8::LeftUp,
    ];

    pub fn side(self) -> Side {
        match self {
            Direction8::TopLeft | Direction8::TopRight => Side::Top,
            Direction8::RightUp | Direction8::RightDown => Side::Right,
            Direction8::BottomRight | Direction8::BottomLeft => Side::Bottom,
            Direction8::LeftDown | Direction8::LeftUp => Side::Left,
        }
    }

    pub fn half(self) -> Half {
        match self {
            Direction8::TopLeft
            | Direction8::RightUp
            | Direction8::BottomLeft
            | Direction8::LeftUp => Half::First,
            _ => Half::Second,
        }
    }

    pub fn from_parts(side: Side, half: Half) -> Direction8 {
        *Direction8::ALL
            .iter()
            .find(|d| d.side() == side && d.half() == half)
            .expect("every (side, half) pair names a direction")
    }

    /// The direction on the neighbor that faces this one across the seam.
    pub fn facing(self) -> Direction8 {
        Direction8::from_parts(self.side().opposite(), self.half())
    }
}

fn half_span(tile: &TileImage, dir: Direction8) -> Result<(u32, u32)> {
    if tile.width() != tile.height() {
        return Err(Error::Argument(format!(
            "edge segments need a square tile, got {}x{}",
            tile.width(),
            tile.height()
        )));
    }
    let size = tile.width();
    if size % 2 != 0 {
        return Err(Error::Argument(format!(
            "tile size {size} is odd and cannot be halved"
        )));
    }
    let half = size / 2;
    Ok(match dir.half() {
        Half::First => (0, half),
        Half::Second => (half, half),
    })
}

/// Grayscale strip for one half-edge, `strip_width` deep.
pub fn edge_segment(tile: &TileImage, dir: Direction8, strip_width: u32) -> Result<BoundaryStrip> {
    let (start, len) = half_span(tile, dir)?;
    extract_boundary_span(tile, dir.side(), strip_width, start, len)
}

/// Fraction of pixels with alpha > 0 inside one half-edge region.
pub fn edge_opaque_fraction(tile: &TileImage, dir: Direction8, strip_width: u32) -> Result<f64> {
    let (start, len) = half_span(tile, dir)?;
    let size = tile.width();
    if strip_width == 0 || strip_width > size {
        return Err(Error::Argument(format!(
            "strip width {strip_width} outside 1..={size}"
        )));
    }
    let mut opaque = 0u32;
    for d in 0..strip_width {
        for a in start..start + len {
            let (x, y) = match dir.side() {
                Side::Top => (a, d),
                Side::Bottom => (a, size - 1 - d),
                Side::Left => (d, a),
                Side::Right => (size - 1 - d, a),
            };
            if tile.get(x, y)[3] > 0 {
                opaque += 1;
            }
        }
    }
    Ok(opaque as f64 / (strip_width * len) as f64)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivitySet {
    pub tile: GridPos,
    pub connected: BTreeSet<Direction8>,
    /// Connected directions that had no neighbor to check against; they rest
    /// on transparency evidence alone.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub no_neighbor: BTreeSet<Direction8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityParams {
    pub ssim_threshold: f64,
    pub alpha_fraction_min: f64,
    pub strip_width: u32,
    /// Neighbors below this opaque fraction count as absent.
    pub transparency_threshold: f64,
    pub ssim: SsimParams,
}

impl Default for ConnectivityParams {
    fn default() -> Self {
        Self {
            ssim_threshold: crate::similarity::DEFAULT_ADJACENCY_THRESHOLD,
            alpha_fraction_min: DEFAULT_ALPHA_FRACTION_MIN,
            strip_width: crate::similarity::DEFAULT_STRIP_WIDTH,
            transparency_threshold: crate::tile::DEFAULT_TRANSPARENCY_THRESHOLD,
            ssim: SsimParams::default(),
        }
    }
}

/// Per-tile connected directions.
///
/// A direction is a candidate when its half-edge is opaque enough. If a
/// neighbor exists across that side, the facing half-edges must also pass the
/// SSIM threshold; otherwise the candidate stands and is flagged
/// `no_neighbor`.
///
/// Without segments every tile is reported and a neighbor exists when it is in
/// the grid and not primarily transparent. With segments only member tiles are
/// reported and a neighbor exists when it belongs to some segment.
pub fn infer_connectivity(
    tileset: &Tileset,
    segments: Option<&[SegmentRecord]>,
    params: &ConnectivityParams,
) -> Result<Vec<ConnectivitySet>> {
    let (rows, cols) = (tileset.rows(), tileset.cols());
    let present: Vec<bool> = match segments {
        Some(segs) => {
            let mut mask = vec![false; rows * cols];
            for s in segs {
                for &(r, c) in &s.members {
                    mask[r * cols + c] = true;
                }
            }
            mask
        }
        None => tileset
            .iter()
            .map(|(_, t)| !opacity_stats(t).is_primarily_transparent(params.transparency_threshold))
            .collect(),
    };

    let mut out = Vec::new();
    for ((r, c), tile) in tileset.iter() {
        if segments.is_some() && !present[r * cols + c] {
            continue;
        }
        let mut set = ConnectivitySet {
            tile: (r, c),
            ..Default::default()
        };
        for dir in Direction8::ALL {
            if edge_opaque_fraction(tile, dir, params.strip_width)? < params.alpha_fraction_min {
                continue;
            }
            let (dr, dc) = dir.side().offset();
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            let neighbor = tileset
                .get(nr, nc)
                .filter(|_| present[nr as usize * cols + nc as usize]);
            match neighbor {
                Some(other) => {
                    let mine = edge_segment(tile, dir, params.strip_width)?;
                    let theirs = edge_segment(other, dir.facing(), params.strip_width)?;
                    if ssim(&mine, &theirs, &params.ssim)? >= params.ssim_threshold {
                        set.connected.insert(dir);
                    }
                }
                None => {
                    set.connected.insert(dir);
                    set.no_neighbor.insert(dir);
                }
            }
        }
        out.push(set);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityEval {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match_rate: f64,
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Micro-averaged precision/recall/F1 over (tile, direction) pairs plus the
/// share of tiles whose direction sets match exactly.
pub fn evaluate_connectivity(
    predicted: &[ConnectivitySet],
    truth: &[ConnectivitySet],
) -> Result<ConnectivityEval> {
    let pred: BTreeMap<GridPos, &BTreeSet<Direction8>> =
        predicted.iter().map(|s| (s.tile, &s.connected)).collect();
    let gold: BTreeMap<GridPos, &BTreeSet<Direction8>> =
        truth.iter().map(|s| (s.tile, &s.connected)).collect();
    if pred.len() != predicted.len() || gold.len() != truth.len() {
        return Err(Error::Argument("duplicate tile keys in connectivity labels".into()));
    }
    if !pred.keys().eq(gold.keys()) {
        let missing: Vec<_> = pred
            .keys()
            .filter(|k| !gold.contains_key(k))
            .chain(gold.keys().filter(|k| !pred.contains_key(k)))
            .collect();
        return Err(Error::Argument(format!(
            "predicted and reference tiles differ: {missing:?}"
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let mut exact = 0;
    for (tile, p) in &pred {
        let g = gold[tile];
        tp += p.intersection(g).count();
        fp += p.difference(g).count();
        fn_ += g.difference(p).count();
        if *p == g {
            exact += 1;
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(ConnectivityEval {
        precision,
        recall,
        f1: f1_score(precision, recall),
        exact_match_rate: ratio(exact, pred.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tile::split_tileset;
    use Direction8::*;

    const RED: [u8; 4] = [255, 0, 0, 255];

    fn set(tile: GridPos, dirs: &[Direction8]) -> ConnectivitySet {
        ConnectivitySet {
            tile,
            connected: dirs.iter().copied().collect(),
            no_neighbor: BTreeSet::new(),
        }
    }

    #[test]
    fn direction_geometry() {
        let t = TileImage::from_fn(32, 32, |x, y| [x as u8, y as u8, 0, 255]);
        let tl = edge_segment(&t, TopLeft, 4).unwrap();
        assert_eq!((tl.depth, tl.length), (4, 16));
        // row d, col a -> green = row, red = col
        let g = |x: u32, y: u32| crate::tile::luminance([x as u8, y as u8, 0, 255]) as f64;
        assert_eq!(tl.get(3, 15), g(15, 3));

        let rd = edge_segment(&t, RightDown, 4).unwrap();
        assert_eq!((rd.depth, rd.length), (4, 16));
        assert_eq!(rd.get(0, 0), g(31, 16));
        assert_eq!(rd.get(3, 15), g(28, 31));
    }

    #[test]
    fn bottom_right_of_red_bottom_row() {
        let t = TileImage::from_fn(32, 32, |_, y| if y == 31 { RED } else { [0, 0, 0, 0] });
        let s = edge_segment(&t, BottomRight, 4).unwrap();
        assert!((0..16).all(|a| s.get(0, a) == 76.0));
        assert!((0..16).all(|a| s.get(1, a) == 0.0));
        assert_eq!(edge_opaque_fraction(&t, BottomRight, 4).unwrap(), 0.25);
    }

    #[test]
    fn odd_tile_rejected() {
        let t = TileImage::transparent(31, 31);
        assert!(matches!(edge_segment(&t, TopLeft, 4), Err(Error::Argument(_))));
    }

    #[test]
    fn facing_pairs() {
        assert_eq!(RightUp.facing(), LeftUp);
        assert_eq!(BottomRight.facing(), TopRight);
        for d in Direction8::ALL {
            assert_eq!(d.facing().facing(), d);
        }
    }

    #[test]
    fn transparent_tile_has_no_connections() {
        let ts = split_tileset(TileImage::transparent(32, 32), 32).unwrap();
        let got = infer_connectivity(&ts, None, &ConnectivityParams::default()).unwrap();
        assert!(got[0].connected.is_empty());
    }

    #[test]
    fn identical_solid_neighbors_connect() {
        let ts = split_tileset(TileImage::filled(64, 32, [90, 140, 60, 255]), 32).unwrap();
        let got = infer_connectivity(&ts, None, &ConnectivityParams::default()).unwrap();
        assert!(got[0].connected.contains(&RightUp) && got[0].connected.contains(&RightDown));
        assert!(got[1].connected.contains(&LeftUp) && got[1].connected.contains(&LeftDown));
        assert!(!got[0].no_neighbor.contains(&RightUp));
        // Grid border sides have no neighbor, so they stand on opacity alone.
        assert!(got[0].no_neighbor.contains(&LeftUp));
    }

    #[test]
    fn lone_top_left_half_edge() {
        let t = TileImage::from_fn(32, 32, |x, y| if y < 4 && x < 16 { RED } else { [0, 0, 0, 0] });
        let ts = split_tileset(t, 32).unwrap();
        let got = infer_connectivity(&ts, None, &ConnectivityParams::default()).unwrap();
        assert_eq!(got[0].connected, BTreeSet::from([TopLeft]));
        assert_eq!(got[0].no_neighbor, BTreeSet::from([TopLeft]));
    }

    #[test]
    fn segments_limit_reported_tiles() {
        let img = TileImage::from_fn(64, 32, |x, _| if x < 32 { RED } else { [0, 0, 0, 0] });
        let ts = split_tileset(img, 32).unwrap();
        let segs = crate::segmentation::grow_segments(&ts, &Default::default()).unwrap();
        let got = infer_connectivity(&ts, Some(&segs), &ConnectivityParams::default()).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].tile, (0, 0));
    }

    #[test]
    fn eval_identity() {
        let x = vec![set((0, 0), &[TopLeft, RightUp]), set((0, 1), &[])];
        let e = evaluate_connectivity(&x, &x).unwrap();
        assert_eq!((e.precision, e.recall, e.f1, e.exact_match_rate), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn eval_half_overlap() {
        let truth = vec![set((0, 0), &[TopLeft, RightUp])];
        let pred = vec![set((0, 0), &[RightUp, BottomLeft])];
        let e = evaluate_connectivity(&pred, &truth).unwrap();
        assert_eq!((e.precision, e.recall, e.f1, e.exact_match_rate), (0.5, 0.5, 0.5, 0.0));
    }

    #[test]
    fn eval_empty_predictions() {
        let truth = vec![
            set((0, 0), &[TopLeft]),
            set((0, 1), &[]),
            set((1, 0), &[LeftUp]),
            set((1, 1), &[]),
        ];
        let pred: Vec<_> = truth.iter().map(|s| set(s.tile, &[])).collect();
        let e = evaluate_connectivity(&pred, &truth).unwrap();
        assert_eq!((e.precision, e.recall, e.f1), (0.0, 0.0, 0.0));
        assert_eq!(e.exact_match_rate, 0.5);
    }

    #[test]
    fn eval_key_mismatch() {
        let a = vec![set((0, 0), &[TopLeft])];
        let b = vec![set((0, 1), &[TopLeft])];
        assert!(matches!(evaluate_connectivity(&a, &b), Err(Error::Argument(_))));
    }
}
