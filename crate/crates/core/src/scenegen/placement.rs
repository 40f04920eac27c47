use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::graph::{SceneEdge, SceneGraph};
use super::terrain::TerrainMap;

pub const PLACEHOLDER_PREFIX: &str = "placeholder:";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub entity: String,
    pub tile_id: String,
    pub anchor: (usize, usize),
    pub footprint: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMatrix {
    pub frame: usize,
    pub rows: usize,
    pub cols: usize,
    pub terrain: Vec<Vec<u32>>,
    pub objects: Vec<PlacedObject>,
    /// Relations that hold in this layout.
    pub relations: Vec<SceneEdge>,
    /// Relations given up during placement.
    pub dropped: Vec<SceneEdge>,
    pub warnings: Vec<String>,
}

impl SceneMatrix {
    pub fn object(&self, entity: &str) -> Option<&PlacedObject> {
        self.objects.iter().find(|o| o.entity == entity)
    }

    /// Terrain layer as CSV, one grid row per line.
    pub fn terrain_csv(&self) -> String {
        let mut s = String::new();
        for row in &self.terrain {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

fn sq_dist(cell: (usize, usize), p: (f64, f64)) -> f64 {
    let dr = cell.0 as f64 - p.0;
    let dc = cell.1 as f64 - p.1;
    dr * dr + dc * dc
}

/// Cell a relation would ideally put `node` in, given the other endpoint at
/// `other`. `node_is_subject` says which side of the edge the node is on.
fn ideal_cell(edge: &SceneEdge, node_is_subject: bool, other: (usize, usize)) -> (f64, f64) {
    use super::predicate::SpatialRelation::*;
    let (r, c) = (other.0 as f64, other.1 as f64);
    let sign = if node_is_subject { 1.0 } else { -1.0 };
    match edge.relation {
        Above => (r - sign, c),
        Below => (r + sign, c),
        LeftOf => (r, c - sign),
        RightOf => (r, c + sign),
        OnTopOf | Contains | Near => (r, c),
    }
}

struct Constraint {
    edge: usize,
    node_is_subject: bool,
    other: (usize, usize),
    other_name: String,
}

/// Rule-based placement of graph nodes on walkable cells. Nodes go in order
/// of descending degree, then name. Each node takes the walkable cell
/// closest to the mean of its constraint-ideal cells that satisfies every
/// relation to already placed nodes; when none exists, the lowest-confidence
/// relation involved is dropped (earliest edge on ties) and the search
/// repeats.
pub fn place_objects(graph: &SceneGraph, terrain: &TerrainMap) -> Result<SceneMatrix> {
    let walkable: Vec<(usize, usize)> = (0..terrain.rows)
        .flat_map(|r| (0..terrain.cols).map(move |c| (r, c)))
        .filter(|&(r, c)| terrain.is_walkable(r, c))
        .collect();
    if walkable.is_empty() {
        return Err(Error::Placement("terrain has no walkable cell".into()));
    }
    let n = walkable.len() as f64;
    let centroid = (
        walkable.iter().map(|c| c.0 as f64).sum::<f64>() / n,
        walkable.iter().map(|c| c.1 as f64).sum::<f64>() / n,
    );

    let confidence = |name: &str| graph.node(name).map_or(0.0, |n| n.placement_confidence);
    let edge_conf: Vec<f64> = graph
        .edges
        .iter()
        .map(|e| confidence(&e.from).min(confidence(&e.to)))
        .collect();
    let mut active = vec![true; graph.edges.len()];
    let mut warnings = Vec::new();
    for (i, e) in graph.edges.iter().enumerate() {
        if e.from == e.to {
            active[i] = false;
            warnings.push(format!("dropped self-relation `{} {} {}`", e.from, e.relation, e.to));
        }
    }

    let mut order: Vec<&str> = graph.nodes.iter().map(|n| n.name.as_str()).collect();
    order.sort_by(|a, b| graph.degree(b).cmp(&graph.degree(a)).then(a.cmp(b)));

    let mut objects: Vec<PlacedObject> = Vec::new();
    for name in order {
        let node = graph.node(name).expect("ordered names come from the node list");
        let anchor = loop {
            let constraints: Vec<Constraint> = graph
                .edges
                .iter()
                .enumerate()
                .filter(|(i, _)| active[*i])
                .filter_map(|(i, e)| {
                    let (other_name, node_is_subject) = if e.from == name {
                        (&e.to, true)
                    } else if e.to == name {
                        (&e.from, false)
                    } else {
                        return None;
                    };
                    let other = objects.iter().find(|o| &o.entity == other_name)?;
                    Some(Constraint {
                        edge: i,
                        node_is_subject,
                        other: other.anchor,
                        other_name: other_name.clone(),
                    })
                })
                .collect();

            let target = if constraints.is_empty() {
                centroid
            } else {
                let k = constraints.len() as f64;
                let (sr, sc) = constraints.iter().fold((0.0, 0.0), |acc, c| {
                    let p = ideal_cell(&graph.edges[c.edge], c.node_is_subject, c.other);
                    (acc.0 + p.0, acc.1 + p.1)
                });
                (sr / k, sc / k)
            };

            let mut candidates = walkable.clone();
            candidates.sort_by(|a, b| sq_dist(*a, target).total_cmp(&sq_dist(*b, target)).then(a.cmp(b)));
            let found = candidates.into_iter().find(|&cell| {
                let satisfied = constraints.iter().all(|c| {
                    let e = &graph.edges[c.edge];
                    if c.node_is_subject {
                        e.relation.holds(cell, c.other)
                    } else {
                        e.relation.holds(c.other, cell)
                    }
                });
                let sharing_ok = objects.iter().filter(|o| o.anchor == cell).all(|o| {
                    constraints
                        .iter()
                        .any(|c| c.other_name == o.entity && graph.edges[c.edge].relation.shares_cell())
                });
                satisfied && sharing_ok
            });
            match found {
                Some(cell) => break cell,
                None if constraints.is_empty() => {
                    return Err(Error::Placement(format!("no walkable cell left for `{name}`")));
                }
                None => {
                    let drop = constraints
                        .iter()
                        .map(|c| c.edge)
                        .min_by(|&a, &b| edge_conf[a].total_cmp(&edge_conf[b]).then(a.cmp(&b)))
                        .expect("constraints are non-empty");
                    active[drop] = false;
                    let e = &graph.edges[drop];
                    warnings.push(format!(
                        "dropped unsatisfiable relation `{} {} {}`",
                        e.from, e.relation, e.to
                    ));
                }
            }
        };
        objects.push(PlacedObject {
            entity: name.to_string(),
            tile_id: node
                .matched_tile
                .clone()
                .unwrap_or_else(|| format!("{PLACEHOLDER_PREFIX}{name}")),
            anchor,
            footprint: (1, 1),
        });
    }

    let (relations, dropped) = graph
        .edges
        .iter()
        .zip(&active)
        .fold((Vec::new(), Vec::new()), |(mut keep, mut drop), (e, &a)| {
            if a { keep.push(e.clone()) } else { drop.push(e.clone()) }
            (keep, drop)
        });
    Ok(SceneMatrix {
        frame: graph.frame,
        rows: terrain.rows,
        cols: terrain.cols,
        terrain: terrain.ids(),
        objects,
        relations,
        dropped,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegen::graph::SceneNode;
    use crate::scenegen::predicate::SpatialRelation;

    fn open(rows: usize, cols: usize) -> TerrainMap {
        TerrainMap { rows, cols, walkable: vec![true; rows * cols], seed: 0, attempts: 1 }
    }

    fn node(name: &str, conf: f64) -> SceneNode {
        SceneNode {
            name: name.into(),
            affordance_hint: None,
            matched_tile: Some(format!("{name}.png")),
            placement_confidence: conf,
            unmatched: false,
            suggested_terrain: None,
        }
    }

    fn edge(from: &str, rel: SpatialRelation, to: &str) -> SceneEdge {
        SceneEdge { from: from.into(), to: to.into(), relation: rel, raw_relation: rel.name().into() }
    }

    #[test]
    fn above_is_vertical_adjacency() {
        let g = SceneGraph {
            frame: 0,
            nodes: vec![node("a", 1.0), node("b", 1.0)],
            edges: vec![edge("a", SpatialRelation::Above, "b")],
        };
        let m = place_objects(&g, &open(9, 9)).unwrap();
        let (a, b) = (m.object("a").unwrap().anchor, m.object("b").unwrap().anchor);
        assert_eq!(a.1, b.1);
        assert!(a.0 < b.0);
        assert!(m.dropped.is_empty());
    }

    #[test]
    fn single_node_at_centroid() {
        let g = SceneGraph { frame: 0, nodes: vec![node("a", 1.0)], edges: vec![] };
        let m = place_objects(&g, &open(9, 9)).unwrap();
        assert_eq!(m.objects[0].anchor, (4, 4));
        let mut t = open(8, 8);
        // Walkable only in the left half; centroid (3.5, 1.5).
        for r in 0..8 {
            for c in 4..8 {
                t.walkable[r * 8 + c] = false;
            }
        }
        let m = place_objects(&g, &t).unwrap();
        assert_eq!(m.objects[0].anchor, (3, 1));
    }

    #[test]
    fn conflict_drops_lowest_confidence() {
        // a above b and b above a cannot both hold.
        let g = SceneGraph {
            frame: 0,
            nodes: vec![node("a", 0.9), node("b", 0.4)],
            edges: vec![edge("a", SpatialRelation::Above, "b"), edge("b", SpatialRelation::Above, "a")],
        };
        let m = place_objects(&g, &open(8, 8)).unwrap();
        assert_eq!(m.dropped.len(), 1);
        assert_eq!(m.warnings.len(), 1);
        for e in &m.relations {
            let s = m.object(&e.from).unwrap().anchor;
            let o = m.object(&e.to).unwrap().anchor;
            assert!(e.relation.holds(s, o));
        }
    }

    #[test]
    fn no_room_is_a_placement_error() {
        let mut t = open(8, 8);
        t.walkable = vec![false; 64];
        t.walkable[0] = true;
        let g = SceneGraph { frame: 0, nodes: vec![node("a", 1.0), node("b", 1.0)], edges: vec![] };
        assert!(matches!(place_objects(&g, &t), Err(Error::Placement(_))));
    }

    #[test]
    fn on_top_of_shares_a_cell() {
        let g = SceneGraph {
            frame: 0,
            nodes: vec![node("dragon", 1.0), node("throne", 1.0)],
            edges: vec![edge("dragon", SpatialRelation::OnTopOf, "throne")],
        };
        let m = place_objects(&g, &open(8, 8)).unwrap();
        assert_eq!(m.object("dragon").unwrap().anchor, m.object("throne").unwrap().anchor);
    }

    #[test]
    fn unmatched_gets_placeholder() {
        let mut n = node("ghost", 0.0);
        n.matched_tile = None;
        n.unmatched = true;
        let g = SceneGraph { frame: 0, nodes: vec![n], edges: vec![] };
        let m = place_objects(&g, &open(8, 8)).unwrap();
        assert_eq!(m.objects[0].tile_id, "placeholder:ghost");
    }
}
