use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semantics::normalize_label;

const DEFAULT_RELATIONS: &str = include_str!("../../data/relations.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRelation {
    Above,
    Below,
    LeftOf,
    RightOf,
    OnTopOf,
    Contains,
    Near,
}

impl SpatialRelation {
    pub const ALL: [SpatialRelation; 7] = [
        SpatialRelation::Above,
        SpatialRelation::Below,
        SpatialRelation::LeftOf,
        SpatialRelation::RightOf,
        SpatialRelation::OnTopOf,
        SpatialRelation::Contains,
        SpatialRelation::Near,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpatialRelation::Above => "above",
            SpatialRelation::Below => "below",
            SpatialRelation::LeftOf => "left_of",
            SpatialRelation::RightOf => "right_of",
            SpatialRelation::OnTopOf => "on_top_of",
            SpatialRelation::Contains => "contains",
            SpatialRelation::Near => "near",
        }
    }

    /// True when `subject` at `s` and `object` at `o` satisfy the relation.
    /// Positions are (row, col) anchors of single-cell footprints.
    pub fn holds(self, s: (usize, usize), o: (usize, usize)) -> bool {
        match self {
            SpatialRelation::Above => s.1 == o.1 && s.0 < o.0,
            SpatialRelation::Below => s.1 == o.1 && s.0 > o.0,
            SpatialRelation::LeftOf => s.0 == o.0 && s.1 < o.1,
            SpatialRelation::RightOf => s.0 == o.0 && s.1 > o.1,
            SpatialRelation::OnTopOf | SpatialRelation::Contains => s == o,
            SpatialRelation::Near => s.0.abs_diff(o.0).max(s.1.abs_diff(o.1)) <= 2,
        }
    }

    /// Relations that put both entities on the same cell.
    pub fn shares_cell(self) -> bool {
        matches!(self, SpatialRelation::OnTopOf | SpatialRelation::Contains)
    }
}

impl fmt::Display for SpatialRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpatialRelation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpatialRelation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::UnknownRelation(s.to_string()))
    }
}

fn alias_key(raw: &str) -> String {
    relation_words(raw).join(" ")
}

fn relation_words(raw: &str) -> Vec<String> {
    raw.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Maps relation phrases to canonical spatial relations.
#[derive(Clone, Debug)]
pub struct RelationLexicon {
    aliases: BTreeMap<String, SpatialRelation>,
}

impl Default for RelationLexicon {
    fn default() -> Self {
        let raw: BTreeMap<String, String> =
            serde_json::from_str(DEFAULT_RELATIONS).expect("bundled relation lexicon is valid");
        let mut lex = RelationLexicon { aliases: BTreeMap::new() };
        lex.extend_raw(raw).expect("bundled relation lexicon is valid");
        lex
    }
}

impl RelationLexicon {
    pub fn empty() -> Self {
        RelationLexicon { aliases: BTreeMap::new() }
    }

    pub fn insert(&mut self, alias: &str, relation: SpatialRelation) {
        let key = alias_key(alias);
        if !key.is_empty() {
            self.aliases.insert(key, relation);
        }
    }

    fn extend_raw(&mut self, raw: BTreeMap<String, String>) -> Result<()> {
        for (alias, rel) in raw {
            self.insert(&alias, rel.parse()?);
        }
        Ok(())
    }

    /// Default aliases plus those in a `{alias: canonical}` JSON file; file
    /// entries win.
    pub fn with_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: BTreeMap<String, String> =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        let mut lex = Self::default();
        lex.extend_raw(raw)?;
        Ok(lex)
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, SpatialRelation)> {
        self.aliases.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn canonicalize(&self, raw: &str) -> Result<SpatialRelation> {
        self.aliases
            .get(&alias_key(raw))
            .copied()
            .ok_or_else(|| Error::UnknownRelation(raw.to_string()))
    }
}

pub fn canonicalize_relation(raw: &str, lexicon: &RelationLexicon) -> Result<SpatialRelation> {
    lexicon.canonicalize(raw)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub subject: String,
    /// Relation phrase as written, lowercased.
    pub relation: String,
    pub object: String,
    #[serde(default)]
    pub frame: usize,
    /// Optional terrain tag for the subject; carried through, not used for
    /// placement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terrain: Option<String>,
}

fn frame_header(line: &str) -> Option<Option<usize>> {
    let rest = line.strip_prefix('#')?.trim();
    let mut parts = rest.split_whitespace();
    match parts.next() {
        Some(w) if w.eq_ignore_ascii_case("frame") => {
            Some(parts.next().and_then(|n| n.parse().ok()))
        }
        _ => None,
    }
}

fn parse_line(line: &str, lineno: usize, frame: usize, lex: &RelationLexicon) -> Result<Predicate> {
    let raw_words: Vec<&str> = line.split_whitespace().collect();
    let words = relation_words(line);
    // relation_words drops pure-punctuation tokens; keep the raw list aligned.
    let raw_words: Vec<&str> = raw_words
        .into_iter()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .collect();
    debug_assert_eq!(raw_words.len(), words.len());

    // Longest alias wins; among equal lengths, the leftmost with a non-empty
    // subject and object.
    let mut best: Option<(usize, usize, SpatialRelation)> = None;
    let mut edge_hit = false;
    for (alias, rel) in lex.aliases() {
        let needle: Vec<&str> = alias.split(' ').collect();
        let n = needle.len();
        if n > words.len() {
            continue;
        }
        for start in 0..=words.len() - n {
            if words[start..start + n].iter().zip(&needle).all(|(a, b)| a == b) {
                if start == 0 || start + n == words.len() {
                    edge_hit = true;
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bs, bn, _)) => n > bn || (n == bn && start < bs),
                };
                if better {
                    best = Some((start, n, rel));
                }
            }
        }
    }
    let Some((start, n, _)) = best else {
        let message = if edge_hit {
            "predicate has an empty subject or object".to_string()
        } else {
            format!("no known relation in `{line}`")
        };
        return Err(Error::Parse { line: lineno, message });
    };
    let entity = |ws: &[&str]| {
        normalize_label(&ws.join(" ")).map_err(|_| Error::Parse {
            line: lineno,
            message: "predicate has an empty subject or object".into(),
        })
    };
    Ok(Predicate {
        subject: entity(&raw_words[..start])?,
        relation: words[start..start + n].join(" "),
        object: entity(&raw_words[start + n..])?,
        frame,
        terrain: None,
    })
}

/// Parses `subject relation object` lines. `# frame N` headers set the frame
/// for following lines (frame 0 before any header); other `#` lines and
/// blank lines are skipped. Line numbers in errors are 1-based.
pub fn parse_predicates(text: &str, lexicon: &RelationLexicon) -> Result<Vec<Predicate>> {
    let mut frame = 0;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            match frame_header(line) {
                Some(Some(n)) => frame = n,
                Some(None) => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "frame header without a number".into(),
                    })
                }
                None => {}
            }
            continue;
        }
        out.push(parse_line(line, i + 1, frame, lexicon)?);
    }
    Ok(out)
}

/// JSON form: `[{subject, relation, object, frame, terrain?}]`. Entity names
/// are normalized and relations checked against the lexicon.
pub fn parse_predicates_json(text: &str, lexicon: &RelationLexicon) -> Result<Vec<Predicate>> {
    let raw: Vec<Predicate> =
        serde_json::from_str(text).map_err(|e| Error::json("predicates", e))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, p)| {
            let bad = |message: String| Error::Parse { line: i + 1, message };
            lexicon.canonicalize(&p.relation)?;
            Ok(Predicate {
                subject: normalize_label(&p.subject)
                    .map_err(|_| bad("empty subject".into()))?,
                relation: alias_key(&p.relation),
                object: normalize_label(&p.object).map_err(|_| bad("empty object".into()))?,
                frame: p.frame,
                terrain: p.terrain,
            })
        })
        .collect()
}
