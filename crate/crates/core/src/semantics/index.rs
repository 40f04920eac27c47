use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

use super::embedding::{
    cosine_similarity, read_embedding_lines, EmbeddingLine, EmbeddingProvider, EmbeddingVector,
};
use super::label::{Affordance, SemanticRecord};

#[derive(Clone, Debug)]
pub struct IndexEntry {
    pub record: SemanticRecord,
    pub vector: EmbeddingVector,
}

/// Immutable embedding index over labeled tiles, kept in tile_ref order.
#[derive(Clone, Debug, Default)]
pub struct SemanticIndex {
    dimension: usize,
    entries: Vec<IndexEntry>,
}

pub const RECORDS_FILE: &str = "records.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";

impl SemanticIndex {
    pub fn from_entries(mut entries: Vec<IndexEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut dimension = 0;
        for (i, e) in entries.iter().enumerate() {
            e.record.validate()?;
            if !seen.insert(e.record.tile_ref.clone()) {
                return Err(Error::Argument(format!(
                    "duplicate tile_ref `{}`",
                    e.record.tile_ref
                )));
            }
            if i == 0 {
                dimension = e.vector.dimension();
            } else if e.vector.dimension() != dimension {
                return Err(Error::Dimension(format!(
                    "embedding for `{}` has dimension {}, expected {dimension}",
                    e.record.tile_ref,
                    e.vector.dimension()
                )));
            }
            if e.vector.norm() == 0.0 {
                return Err(Error::Argument(format!(
                    "embedding for `{}` is the zero vector",
                    e.record.tile_ref
                )));
            }
        }
        entries.sort_by(|a, b| a.record.tile_ref.cmp(&b.record.tile_ref));
        Ok(Self { dimension, entries })
    }

    /// Embeds every record with [`EmbeddingProvider::embed_record`].
    pub fn build(records: Vec<SemanticRecord>, provider: &dyn EmbeddingProvider) -> Result<Self> {
        let mut entries = Vec::with_capacity(records.len());
        for record in records {
            let vector = provider
                .embed_record(&record)
                .ok_or_else(|| {
                    Error::Argument(format!("no embedding available for `{}`", record.tile_ref))
                })?;
            entries.push(IndexEntry { record, vector });
        }
        Self::from_entries(entries)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// Top-`k` entries by cosine score, restricted to entries sharing at least
    /// one affordance with `filter` when given. Ties keep tile_ref order.
    pub fn query(
        &self,
        query: &EmbeddingVector,
        k: usize,
        filter: Option<&BTreeSet<Affordance>>,
    ) -> Result<Vec<(&SemanticRecord, f64)>> {
        if k == 0 {
            return Err(Error::Argument("k must be at least 1".into()));
        }
        let mut hits = Vec::new();
        for e in &self.entries {
            if let Some(f) = filter {
                if e.record.affordances.is_disjoint(f) {
                    continue;
                }
            }
            hits.push((&e.record, cosine_similarity(query, &e.vector)?));
        }
        // Stable sort keeps tile_ref order among equal scores.
        hits.sort_by(|a, b| b.1.total_cmp(&a.1));
        hits.truncate(k);
        Ok(hits)
    }

    /// Contents of the records and embeddings files.
    pub fn to_files(&self) -> Result<(String, String)> {
        let records: Vec<&SemanticRecord> = self.entries.iter().map(|e| &e.record).collect();
        let json = serde_json::to_string_pretty(&records)
            .map_err(|e| Error::json("serializing records", e))?;
        let mut lines = String::new();
        for e in &self.entries {
            let line = EmbeddingLine {
                key: e.record.tile_ref.clone(),
                vector: e.vector.values().to_vec(),
            };
            lines.push_str(
                &serde_json::to_string(&line).map_err(|e| Error::json("serializing embedding", e))?,
            );
            lines.push('\n');
        }
        Ok((json + "\n", lines))
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (records, embeddings) = self.to_files()?;
        for (name, text) in [(RECORDS_FILE, records), (EMBEDDINGS_FILE, embeddings)] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let records = load_records(dir.join(RECORDS_FILE))?;
        let mut vectors: std::collections::HashMap<String, EmbeddingVector> =
            read_embedding_lines(dir.join(EMBEDDINGS_FILE))?
                .into_iter()
                .map(|l| (l.key, EmbeddingVector::new(l.vector)))
                .collect();
        let entries = records
            .into_iter()
            .map(|record| {
                let vector = vectors.remove(&record.tile_ref).ok_or_else(|| {
                    Error::Argument(format!("no stored embedding for `{}`", record.tile_ref))
                })?;
                Ok(IndexEntry { record, vector })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(entries)
    }
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<SemanticRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}
