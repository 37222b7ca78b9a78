//! Document store for user rule documents: character chunking, a BM25
//! inverted index, an exact cosine vector table, and reciprocal-rank fusion
//! of the two.

mod chunk;
mod embed;
mod store;

pub use chunk::{chunk_document, ChunkError, ChunkSpan};
pub use embed::{cosine, EmbedError, Embedder, HashingEmbedder, RemoteEmbedder, RemoteEmbedderConfig};
pub use store::{
    rrf_score, Chunk, ChunkId, DocumentStore, RetrievalResult, StoreError, StoreParams, BM25_B, BM25_K1, DEFAULT_K,
    RRF_K, SNAPSHOT_VERSION,
};

/// Lowercased alphanumeric tokens, in order. Shared by BM25 and the hashing
/// embedder so both see the same words.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}
