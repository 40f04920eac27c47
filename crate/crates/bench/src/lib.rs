//! Benchmark fixtures.

use pixtile_core::scenegen::{SceneEdge, SceneGraph, SceneNode, SpatialRelation};
use pixtile_core::{split_tileset, TileImage, Tileset};

/// Deterministic blocky tileset: `side`x`side` tiles of `tile` pixels, with
/// some tiles left transparent.
pub fn blocky_tileset(side: u32, tile: u32) -> Tileset {
    let img = TileImage::from_fn(side * tile, side * tile, |x, y| {
        let (r, c) = (y / tile, x / tile);
        let h = (r.wrapping_mul(73) ^ c.wrapping_mul(151)) % 7;
        match h {
            0 => [0, 0, 0, 0],
            1 | 2 => [30, 120, 40, 255],
            _ => [((x * 7 + y * 3) % 256) as u8, 90, (h * 30) as u8, 255],
        }
    });
    split_tileset(img, tile).expect("dimensions are multiples of the tile size")
}

/// Chain of `n` nodes, each `near` the next.
pub fn chain_graph(n: usize) -> SceneGraph {
    let name = |i: usize| format!("n{i:03}");
    SceneGraph {
        frame: 0,
        nodes: (0..n)
            .map(|i| SceneNode {
                name: name(i),
                affordance_hint: None,
                matched_tile: Some(format!("{}.png", name(i))),
                placement_confidence: 1.0,
                unmatched: false,
                suggested_terrain: None,
            })
            .collect(),
        edges: (1..n)
            .map(|i| SceneEdge {
                from: name(i - 1),
                to: name(i),
                relation: SpatialRelation::Near,
                raw_relation: "near".into(),
            })
            .collect(),
    }
}
