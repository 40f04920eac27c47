//! Hierarchical semantic labels, the embedding index over labeled tiles and
//! caption/label matching.

mod embedding;
mod index;
mod label;
mod matcher;

pub use embedding::{
    cosine_similarity, read_embedding_lines, EmbeddingLine, EmbeddingProvider, EmbeddingVector,
    FileEmbeddings, HashingEmbedder,
};
pub use index::{load_records, IndexEntry, SemanticIndex, EMBEDDINGS_FILE, RECORDS_FILE};
pub use label::{normalize_label, singularize, Affordance, Provenance, SemanticRecord};
pub use matcher::{
    aggregate_matches, tokenize, CaptionMatch, CaptionMatcher, LabelType, LevelCounts,
    LevelResult, MatchTable, SynonymLexicon, DEFAULT_SEMANTIC_THRESHOLD,
};
