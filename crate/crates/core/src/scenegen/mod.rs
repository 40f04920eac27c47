//! Narrative predicates to scene graphs, cellular-automaton terrain, rule
//! based placement and rendering.
//!
//! Frames are independent: precedes edges in a [`MergedGraph`] record
//! narrative order but do not constrain placement across frames.

mod graph;
mod placement;
mod predicate;
mod render;
mod terrain;

pub use graph::{
    build_scene_graph, merge_graphs, AffordanceHints, MergedGraph, PrecedesEdge, SceneEdge,
    SceneGraph, SceneNode,
};
pub use placement::{place_objects, PlacedObject, SceneMatrix, PLACEHOLDER_PREFIX};
pub use predicate::{
    canonicalize_relation, parse_predicates, parse_predicates_json, Predicate, RelationLexicon,
    SpatialRelation,
};
pub use render::{alpha_over, render_scene, upscale_nearest, TileAssets};
pub use terrain::{
    components, generate_terrain, run_automaton, TerrainMap, TerrainParams, BLOCKED_ID,
    MIN_TERRAIN_SIDE, WALKABLE_ID,
};

/// Predicates grouped by frame, in ascending frame order.
pub fn group_by_frame(predicates: &[Predicate]) -> Vec<(usize, Vec<Predicate>)> {
    let mut frames: std::collections::BTreeMap<usize, Vec<Predicate>> = Default::default();
    for p in predicates {
        frames.entry(p.frame).or_default().push(p.clone());
    }
    frames.into_iter().collect()
}
