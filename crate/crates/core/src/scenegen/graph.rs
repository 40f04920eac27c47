use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semantics::{Affordance, EmbeddingProvider, SemanticIndex};

use super::predicate::{Predicate, RelationLexicon, SpatialRelation};

const DEFAULT_HINTS: &str = include_str!("../../data/affordance_hints.json");

/// Entity-name keyword → affordance lexicon.
#[derive(Clone, Debug)]
pub struct AffordanceHints {
    keywords: HashMap<String, Affordance>,
}

impl Default for AffordanceHints {
    fn default() -> Self {
        let raw: BTreeMap<Affordance, Vec<String>> =
            serde_json::from_str(DEFAULT_HINTS).expect("bundled hint lexicon is valid");
        Self::from_map(raw)
    }
}

impl AffordanceHints {
    pub fn empty() -> Self {
        Self { keywords: HashMap::new() }
    }

    pub fn from_map(raw: BTreeMap<Affordance, Vec<String>>) -> Self {
        let mut keywords = HashMap::new();
        for (aff, words) in raw {
            for w in words {
                keywords.insert(w.trim().to_lowercase(), aff);
            }
        }
        Self { keywords }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw = serde_json::from_str(&text)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        Ok(Self::from_map(raw))
    }

    /// Hint for a normalized entity name. Words are tried from the last (the
    /// head noun in English noun phrases) to the first. Failing that, an index
    /// record whose group label equals the name and is tagged Characters
    /// yields Characters.
    pub fn hint(&self, name: &str, index: &SemanticIndex) -> Option<Affordance> {
        name.split(' ')
            .rev()
            .find_map(|w| self.keywords.get(w).copied())
            .or_else(|| {
                index
                    .entries()
                    .iter()
                    .any(|e| {
                        e.record.group_label == name
                            && e.record.affordances.contains(&Affordance::Characters)
                    })
                    .then_some(Affordance::Characters)
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneNode {
    pub name: String,
    pub affordance_hint: Option<Affordance>,
    pub matched_tile: Option<String>,
    pub placement_confidence: f64,
    pub unmatched: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_terrain: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneEdge {
    pub from: String,
    pub to: String,
    pub relation: SpatialRelation,
    pub raw_relation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub frame: usize,
    pub nodes: Vec<SceneNode>,
    pub edges: Vec<SceneEdge>,
}

impl SceneGraph {
    pub fn node(&self, name: &str) -> Option<&SceneNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn degree(&self, name: &str) -> usize {
        self.edges
            .iter()
            .filter(|e| e.from == name || e.to == name)
            .count()
    }
}

/// Scene graph for one frame. Nodes keep first-appearance order; edges are
/// deduplicated on (from, to, canonical relation).
pub fn build_scene_graph(
    frame: usize,
    predicates: &[Predicate],
    index: &SemanticIndex,
    embedder: &dyn EmbeddingProvider,
    lexicon: &RelationLexicon,
    hints: &AffordanceHints,
) -> Result<SceneGraph> {
    if index.is_empty() {
        return Err(Error::Argument("semantic index is empty".into()));
    }
    let mut names: Vec<&str> = Vec::new();
    let mut terrain: HashMap<&str, &str> = HashMap::new();
    let mut edges: Vec<SceneEdge> = Vec::new();
    let mut seen = BTreeSet::new();
    for p in predicates {
        for n in [p.subject.as_str(), p.object.as_str()] {
            if !names.contains(&n) {
                names.push(n);
            }
        }
        if let Some(t) = &p.terrain {
            terrain.entry(&p.subject).or_insert(t);
        }
        let relation = lexicon.canonicalize(&p.relation)?;
        if seen.insert((p.subject.clone(), p.object.clone(), relation)) {
            edges.push(SceneEdge {
                from: p.subject.clone(),
                to: p.object.clone(),
                relation,
                raw_relation: p.relation.clone(),
            });
        }
    }

    let mut nodes = Vec::with_capacity(names.len());
    for name in names {
        let affordance_hint = hints.hint(name, index);
        let filter = affordance_hint.map(|a| BTreeSet::from([a]));
        let hit = match embedder.embed(name) {
            Some(q) if q.dimension() == index.dimension() => index
                .query(&q, 1, filter.as_ref())?
                .first()
                .map(|(r, s)| (r.tile_ref.clone(), *s)),
            _ => None,
        };
        nodes.push(SceneNode {
            name: name.to_string(),
            affordance_hint,
            unmatched: hit.is_none(),
            placement_confidence: hit.as_ref().map_or(0.0, |h| h.1),
            matched_tile: hit.map(|h| h.0),
            suggested_terrain: terrain.get(name).map(|t| t.to_string()),
        });
    }
    Ok(SceneGraph { frame, nodes, edges })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecedesEdge {
    pub entity: String,
    pub from_frame: usize,
    pub to_frame: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergedGraph {
    pub frames: Vec<SceneGraph>,
    pub precedes: Vec<PrecedesEdge>,
}

/// Links entities that appear in consecutive frames. Frames stay untouched;
/// precedes edges do not feed back into placement.
pub fn merge_graphs(frames: Vec<SceneGraph>) -> MergedGraph {
    let mut precedes = Vec::new();
    for pair in frames.windows(2) {
        for n in &pair[0].nodes {
            if pair[1].node(&n.name).is_some() {
                precedes.push(PrecedesEdge {
                    entity: n.name.clone(),
                    from_frame: pair[0].frame,
                    to_frame: pair[1].frame,
                });
            }
        }
    }
    MergedGraph { frames, precedes }
}
