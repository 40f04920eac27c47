//! Three-level caption/label agreement: direct word overlap, synonym-expanded
//! overlap and embedding similarity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::embedding::{cosine_similarity, EmbeddingProvider};
use super::label::{normalize_label, singularize, SemanticRecord};

pub const DEFAULT_SEMANTIC_THRESHOLD: f64 = 0.3;

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "of", "on", "in", "at", "to", "with", "for", "by", "is", "are",
];

/// Lowercase alphanumeric words, singularized, stopwords removed.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| singularize(&w.to_lowercase()))
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// User-supplied `{term: [synonyms]}` map. Keys are normalized on load.
#[derive(Clone, Debug, Default)]
pub struct SynonymLexicon {
    entries: HashMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new(raw: HashMap<String, Vec<String>>) -> Self {
        let mut entries: HashMap<String, Vec<String>> = HashMap::new();
        for (k, v) in raw {
            let key = normalize_label(&k).unwrap_or(k);
            entries.entry(key).or_default().extend(v);
        }
        Self { entries }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw = serde_json::from_str(&text)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        Ok(Self::new(raw))
    }

    /// Token sequences a caption may contain to count as naming `label`: each
    /// label word on its own, the full label, and every listed synonym of the
    /// label or of any of its words.
    pub fn expand(&self, label: &str) -> BTreeSet<Vec<String>> {
        let tokens = tokenize(label);
        let mut out: BTreeSet<Vec<String>> = tokens.iter().map(|t| vec![t.clone()]).collect();
        if !tokens.is_empty() {
            out.insert(tokens.clone());
        }
        let mut keys: Vec<String> = tokens.clone();
        if let Ok(full) = normalize_label(label) {
            keys.push(full);
        }
        for key in keys {
            for syn in self.entries.get(&key).into_iter().flatten() {
                let t = tokenize(syn);
                if !t.is_empty() {
                    out.insert(t);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelType {
    Group,
    Supercategory,
    Affordance,
}

impl LabelType {
    pub const ALL: [LabelType; 3] = [LabelType::Group, LabelType::Supercategory, LabelType::Affordance];

    fn texts(self, record: &SemanticRecord) -> Vec<String> {
        match self {
            LabelType::Group => vec![record.group_label.clone()],
            LabelType::Supercategory => vec![record.supercategory.clone()],
            LabelType::Affordance => record.affordances.iter().map(|a| a.name().to_string()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelResult {
    pub direct: bool,
    pub synonym: bool,
    /// `None` when an embedding was unavailable.
    pub semantic: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptionMatch {
    pub tile_ref: String,
    pub levels: BTreeMap<LabelType, LevelResult>,
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

pub struct CaptionMatcher<'a> {
    pub synonyms: &'a SynonymLexicon,
    pub embedder: &'a dyn EmbeddingProvider,
    pub threshold: f64,
}

impl CaptionMatcher<'_> {
    pub fn match_caption(&self, caption: &str, record: &SemanticRecord) -> CaptionMatch {
        let words = tokenize(caption);
        let caption_vec = self.embedder.embed(caption);
        let levels = LabelType::ALL
            .iter()
            .map(|&ty| {
                let texts = ty.texts(record);
                let direct = texts
                    .iter()
                    .flat_map(|t| tokenize(t))
                    .any(|t| words.contains(&t));
                let synonym = texts
                    .iter()
                    .flat_map(|t| self.synonyms.expand(t))
                    .any(|run| contains_run(&words, &run));
                let semantic = caption_vec.as_ref().and_then(|cv| {
                    let mut any = false;
                    for t in &texts {
                        let lv = self.embedder.embed(t)?;
                        any |= cosine_similarity(cv, &lv).ok()? >= self.threshold;
                    }
                    Some(any)
                });
                (ty, LevelResult { direct, synonym, semantic })
            })
            .collect();
        CaptionMatch {
            tile_ref: record.tile_ref.clone(),
            levels,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub direct: usize,
    pub synonym: usize,
    pub semantic: usize,
    pub semantic_unavailable: usize,
    pub direct_pct: f64,
    pub synonym_pct: f64,
    pub semantic_pct: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchTable {
    pub total: usize,
    pub by_label: BTreeMap<LabelType, LevelCounts>,
}

fn pct(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * n as f64 / total as f64
    }
}

/// Match counts per (label type, level) with percentages of the corpus size.
pub fn aggregate_matches(results: &[CaptionMatch]) -> MatchTable {
    let total = results.len();
    let by_label = LabelType::ALL
        .iter()
        .map(|&ty| {
            let mut c = LevelCounts::default();
            for r in results {
                let l = r.levels.get(&ty).copied().unwrap_or_default();
                c.direct += l.direct as usize;
                c.synonym += l.synonym as usize;
                match l.semantic {
                    Some(true) => c.semantic += 1,
                    Some(false) => {}
                    None => c.semantic_unavailable += 1,
                }
            }
            c.direct_pct = pct(c.direct, total);
            c.synonym_pct = pct(c.synonym, total);
            c.semantic_pct = pct(c.semantic, total);
            (ty, c)
        })
        .collect();
    MatchTable { total, by_label }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::embedding::{EmbeddingLine, FileEmbeddings, HashingEmbedder};
    use crate::semantics::label::{Affordance, Provenance};

    fn record(group: &str, sup: &str, aff: &[Affordance]) -> SemanticRecord {
        SemanticRecord {
            tile_ref: format!("{group}.png"),
            detailed_name: group.into(),
            group_label: group.into(),
            supercategory: sup.into(),
            affordances: aff.iter().copied().collect(),
            provenance: Provenance::Annotator,
        }
    }

    fn matcher<'a>(syn: &'a SynonymLexicon, emb: &'a dyn EmbeddingProvider) -> CaptionMatcher<'a> {
        CaptionMatcher {
            synonyms: syn,
            embedder: emb,
            threshold: DEFAULT_SEMANTIC_THRESHOLD,
        }
    }

    #[test]
    fn tokenization_is_whole_word() {
        assert_eq!(tokenize("A Catapult, two cats!"), vec!["catapult", "two", "cat"]);
        assert!(!tokenize("a catapult").contains(&"cat".to_string()));
    }

    #[test]
    fn direct_word_match() {
        let syn = SynonymLexicon::default();
        let emb = HashingEmbedder::new(32);
        let r = record("barrel", "container", &[Affordance::InteractiveObject]);
        let m = matcher(&syn, &emb).match_caption("a wooden barrel on grass", &r);
        assert!(m.levels[&LabelType::Group].direct);
        assert!(m.levels[&LabelType::Group].synonym);
    }

    #[test]
    fn synonym_only_match() {
        let syn = SynonymLexicon::new(HashMap::from([(
            "barrel".to_string(),
            vec!["cask".to_string(), "keg".to_string()],
        )]));
        let emb = HashingEmbedder::new(32);
        let r = record("barrel", "container", &[Affordance::InteractiveObject]);
        let m = matcher(&syn, &emb).match_caption("a cask", &r);
        let g = m.levels[&LabelType::Group];
        assert!(!g.direct);
        assert!(g.synonym);
    }

    /// Two unit vectors with cosine exactly `c`.
    fn pair_at(c: f64) -> FileEmbeddings {
        FileEmbeddings::from_lines(vec![
            EmbeddingLine { key: "caption".into(), vector: vec![1.0, 0.0] },
            EmbeddingLine { key: "barrel".into(), vector: vec![c, (1.0 - c * c).sqrt()] },
        ])
        .unwrap()
    }

    #[test]
    fn semantic_threshold_flip() {
        let syn = SynonymLexicon::default();
        let r = record("barrel", "container", &[Affordance::InteractiveObject]);
        let above = pair_at(0.31);
        let m = matcher(&syn, &above).match_caption("caption", &r);
        assert_eq!(m.levels[&LabelType::Group].semantic, Some(true));
        let below = pair_at(0.29);
        let m = matcher(&syn, &below).match_caption("caption", &r);
        assert_eq!(m.levels[&LabelType::Group].semantic, Some(false));
        // No vector for the supercategory text.
        assert_eq!(m.levels[&LabelType::Supercategory].semantic, None);
    }

    #[test]
    fn aggregate_empty_and_small() {
        let t = aggregate_matches(&[]);
        assert_eq!(t.total, 0);
        assert!(t.by_label.values().all(|c| c.direct == 0 && c.direct_pct == 0.0));

        let syn = SynonymLexicon::default();
        let emb = HashingEmbedder::new(32);
        let m = matcher(&syn, &emb);
        let results = vec![
            m.match_caption("a barrel", &record("barrel", "container", &[Affordance::Terrain])),
            m.match_caption("a dog", &record("tree", "plant", &[Affordance::Terrain])),
        ];
        let t = aggregate_matches(&results);
        assert_eq!(t.by_label[&LabelType::Group].direct, 1);
        assert_eq!(t.by_label[&LabelType::Group].direct_pct, 50.0);
    }
}
