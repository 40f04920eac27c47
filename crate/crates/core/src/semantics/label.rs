use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gameplay role of a tile. Declaration order is the canonical label order
/// used by the affordance classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Affordance {
    Characters,
    #[serde(rename = "Environmental Object")]
    EnvironmentalObject,
    #[serde(rename = "Interactive Object")]
    InteractiveObject,
    #[serde(rename = "Items and Collectibles")]
    ItemsAndCollectibles,
    Terrain,
}

impl Affordance {
    pub const ALL: [Affordance; 5] = [
        Affordance::Characters,
        Affordance::EnvironmentalObject,
        Affordance::InteractiveObject,
        Affordance::ItemsAndCollectibles,
        Affordance::Terrain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Affordance::Characters => "Characters",
            Affordance::EnvironmentalObject => "Environmental Object",
            Affordance::InteractiveObject => "Interactive Object",
            Affordance::ItemsAndCollectibles => "Items and Collectibles",
            Affordance::Terrain => "Terrain",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Affordance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Affordance {
    type Err = Error;

    /// Accepts the canonical names and a few short forms ("character",
    /// "environmental", "interactive", "item", "collectible", "terrain").
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .to_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        Ok(match key.as_str() {
            "characters" | "character" => Affordance::Characters,
            "environmentalobject" | "environmental" => Affordance::EnvironmentalObject,
            "interactiveobject" | "interactive" => Affordance::InteractiveObject,
            "itemsandcollectibles" | "items" | "item" | "collectible" | "collectibles" => {
                Affordance::ItemsAndCollectibles
            }
            "terrain" => Affordance::Terrain,
            _ => return Err(Error::Argument(format!("unknown affordance `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Author,
    Annotator,
    Model,
}

/// Four-level semantic label of one tile or segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticRecord {
    /// Either an image path or `<tileset>#<row>,<col>` naming a segment parent.
    pub tile_ref: String,
    pub detailed_name: String,
    pub group_label: String,
    pub supercategory: String,
    pub affordances: BTreeSet<Affordance>,
    pub provenance: Provenance,
}

impl SemanticRecord {
    pub fn validate(&self) -> Result<()> {
        if self.tile_ref.trim().is_empty() {
            return Err(Error::Argument("record has an empty tile_ref".into()));
        }
        if self.affordances.is_empty() {
            return Err(Error::Argument(format!(
                "record `{}` has no affordance labels",
                self.tile_ref
            )));
        }
        let canonical = normalize_label(&self.group_label)?;
        if canonical != self.group_label {
            return Err(Error::Argument(format!(
                "record `{}` group label `{}` is not normalized (expected `{canonical}`)",
                self.tile_ref, self.group_label
            )));
        }
        Ok(())
    }

    /// Text used when the embedding provider has no vector keyed by tile_ref.
    pub fn embedding_text(&self) -> &str {
        &self.group_label
    }
}

const IRREGULAR: &[(&str, &str)] = &[
    ("children", "child"),
    ("people", "person"),
    ("men", "man"),
    ("women", "woman"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("leaves", "leaf"),
    ("wolves", "wolf"),
    ("knives", "knife"),
    ("lives", "life"),
    ("shelves", "shelf"),
    ("loaves", "loaf"),
    ("halves", "half"),
    ("elves", "elf"),
    ("dwarves", "dwarf"),
    ("thieves", "thief"),
    ("potatoes", "potato"),
    ("tomatoes", "tomato"),
    ("heroes", "hero"),
    ("cacti", "cactus"),
    ("fungi", "fungus"),
];

const UNINFLECTED: &[&str] = &["sheep", "fish", "deer", "series", "species", "news"];

fn singularize_once(word: &str) -> String {
    if let Some(&(_, s)) = IRREGULAR.iter().find(|(p, _)| *p == word) {
        return s.to_string();
    }
    if UNINFLECTED.contains(&word) {
        return word.to_string();
    }
    let n = word.len();
    if n > 4 && word.ends_with("ies") {
        return format!("{}y", &word[..n - 3]);
    }
    if n > 4 && ["sses", "shes", "ches", "xes", "zzes"].iter().any(|e| word.ends_with(e)) {
        return word[..n - 2].to_string();
    }
    if ["ss", "us", "is"].iter().any(|e| word.ends_with(e)) {
        return word.to_string();
    }
    if n > 3 && word.ends_with('s') {
        return word[..n - 1].to_string();
    }
    word.to_string()
}

/// Rule-based singular form of one lowercase word.
pub fn singularize(word: &str) -> String {
    let mut cur = word.to_string();
    loop {
        let next = singularize_once(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Lowercases, strips punctuation (separators become spaces), collapses
/// whitespace and singularizes the last word.
pub fn normalize_label(raw: &str) -> Result<String> {
    let cleaned: String = raw
        .chars()
        .filter(|c| !matches!(c, '\'' | '\u{2019}'))
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { ' ' })
        .flat_map(char::to_lowercase)
        .collect();
    let mut words: Vec<String> = cleaned.split_whitespace().map(str::to_string).collect();
    match words.last_mut() {
        Some(last) => *last = singularize(last),
        None => return Err(Error::Normalization(raw.to_string())),
    }
    Ok(words.join(" "))
}
