use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::label::SemanticRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm_sq: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm_sq = values.iter().map(|v| v * v).sum::<f64>();
        Self { values, norm_sq }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::Argument(format!(
            "embedding dimensions differ: {} vs {}",
            a.dimension(),
            b.dimension()
        )));
    }
    if a.norm_sq == 0.0 || b.norm_sq == 0.0 {
        return Err(Error::Argument("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    // sqrt of the squared-norm product is exact for identical vectors, so a
    // self-comparison yields exactly 1.
    Ok((dot / (a.norm_sq * b.norm_sq).sqrt()).clamp(-1.0, 1.0))
}

/// Source of text embeddings.
pub trait EmbeddingProvider {
    /// Vector for `text`, or `None` when the provider has nothing for it.
    fn embed(&self, text: &str) -> Option<EmbeddingVector>;

    /// Vector for a labeled tile: keyed by tile_ref when the provider has
    /// one, else by the record's label text.
    fn embed_record(&self, record: &SemanticRecord) -> Option<EmbeddingVector> {
        self.embed(&record.tile_ref)
            .or_else(|| self.embed(record.embedding_text()))
    }
}

/// One line of an embeddings JSONL file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingLine {
    pub key: String,
    pub vector: Vec<f64>,
}

/// Precomputed vectors looked up by key. Keys are matched exactly first,
/// then lowercased and trimmed.
#[derive(Clone, Debug, Default)]
pub struct FileEmbeddings {
    dimension: usize,
    vectors: HashMap<String, EmbeddingVector>,
}

impl FileEmbeddings {
    pub fn from_lines(lines: impl IntoIterator<Item = EmbeddingLine>) -> Result<Self> {
        let mut out = FileEmbeddings::default();
        for line in lines {
            if out.vectors.is_empty() {
                out.dimension = line.vector.len();
            } else if line.vector.len() != out.dimension {
                return Err(Error::Dimension(format!(
                    "embedding `{}` has dimension {}, expected {}",
                    line.key,
                    line.vector.len(),
                    out.dimension
                )));
            }
            out.vectors.insert(line.key, EmbeddingVector::new(line.vector));
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_lines(read_embedding_lines(path)?)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for FileEmbeddings {
    fn embed(&self, text: &str) -> Option<EmbeddingVector> {
        self.vectors
            .get(text)
            .or_else(|| self.vectors.get(&text.trim().to_lowercase()))
            .cloned()
    }
}

pub fn read_embedding_lines(path: impl AsRef<Path>) -> Result<Vec<EmbeddingLine>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: EmbeddingLine = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e))?;
        out.push(parsed);
    }
    Ok(out)
}

/// Deterministic feature-hashing embedder over character trigrams and whole
/// words. It captures spelling overlap only and carries no semantics; it
/// exists for tests and offline demos.
#[derive(Clone, Copy, Debug)]
pub struct HashingEmbedder {
    pub dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    fn bump(&self, acc: &mut [f64], feature: &[u8]) {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in feature {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        let slot = (h % self.dimension as u64) as usize;
        acc[slot] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
}

impl EmbeddingProvider for HashingEmbedder {
    /// Tile refs are file names, not text; only the label is embedded.
    fn embed_record(&self, record: &SemanticRecord) -> Option<EmbeddingVector> {
        self.embed(record.embedding_text())
    }

    fn embed(&self, text: &str) -> Option<EmbeddingVector> {
        let mut acc = vec![0.0; self.dimension];
        let lowered = text.to_lowercase();
        for word in lowered.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            self.bump(&mut acc, format!("w:{word}").as_bytes());
            let padded: Vec<u8> = format!(" {word} ").into_bytes();
            for tri in padded.windows(3) {
                self.bump(&mut acc, tri);
            }
        }
        let v = EmbeddingVector::new(acc);
        (v.norm() > 0.0).then_some(v)
    }
}
