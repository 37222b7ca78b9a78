use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chunk::{chunk_document, ChunkError};
use crate::embed::{cosine, EmbedError, Embedder};
use crate::tokenize;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
/// Reciprocal-rank fusion constant.
pub const RRF_K: f64 = 60.0;
pub const DEFAULT_K: usize = 5;
pub const SNAPSHOT_VERSION: u32 = 1;

/// Dense chunk identifier, assigned in ingestion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChunkId(pub u32);

impl fmt::Display for ChunkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: ChunkId,
    pub doc_id: String,
    pub char_offset: usize,
    pub text: String,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreParams {
    pub chunk_size: usize,
    pub overlap: usize,
}

impl Default for StoreParams {
    fn default() -> Self {
        Self { chunk_size: 800, overlap: 100 }
    }
}

/// One search hit. Single-method searches leave the other method's score at
/// zero and its rank absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub chunk_id: ChunkId,
    pub lexical_score: f64,
    pub semantic_score: f64,
    pub fused_score: f64,
    pub lexical_rank: Option<u32>,
    pub semantic_rank: Option<u32>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no documents to ingest")]
    NoDocuments,
    #[error("duplicate document `{0}`")]
    DuplicateDoc(String),
    #[error("document `{doc_id}`: {source}")]
    Chunk {
        doc_id: String,
        #[source]
        source: ChunkError,
    },
    #[error("document `{doc_id}`: {source}")]
    Embed {
        doc_id: String,
        #[source]
        source: EmbedError,
    },
    #[error(transparent)]
    Query(#[from] EmbedError),
    #[error("k must be at least 1")]
    BadK,
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("store invariant violated: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy)]
struct Posting {
    chunk: ChunkId,
    tf: u32,
}

/// Chunks of every ingested document, indexed twice: a BM25 inverted index
/// and an exact-scan vector table. Read-only once built.
#[derive(Clone)]
pub struct DocumentStore {
    params: StoreParams,
    embedder: Arc<dyn Embedder>,
    chunks: Vec<Chunk>,
    postings: HashMap<String, Vec<Posting>>,
    chunk_len: Vec<usize>,
    avg_len: f64,
}

impl fmt::Debug for DocumentStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DocumentStore")
            .field("params", &self.params)
            .field("embedder", &self.embedder.id())
            .field("chunks", &self.chunks.len())
            .field("terms", &self.postings.len())
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    embedder: String,
    dimension: usize,
    params: StoreParams,
    chunks: Vec<Chunk>,
}

impl DocumentStore {
    /// Chunks, embeds and indexes `docs`. Chunk ids follow the iteration order.
    pub fn ingest<I, K, V>(docs: I, params: StoreParams, embedder: Arc<dyn Embedder>) -> Result<Self, StoreError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        let mut chunks = Vec::new();
        for (doc_id, text) in docs {
            let doc_id = doc_id.into();
            if !seen.insert(doc_id.clone()) {
                return Err(StoreError::DuplicateDoc(doc_id));
            }
            let spans = chunk_document(text.as_ref(), params.chunk_size, params.overlap)
                .map_err(|source| StoreError::Chunk { doc_id: doc_id.clone(), source })?;
            let texts: Vec<&str> = spans.iter().map(|s| s.text.as_str()).collect();
            let embeddings =
                embedder.embed_batch(&texts).map_err(|source| StoreError::Embed { doc_id: doc_id.clone(), source })?;
            for (span, embedding) in spans.into_iter().zip(embeddings) {
                chunks.push(Chunk {
                    chunk_id: ChunkId(chunks.len() as u32),
                    doc_id: doc_id.clone(),
                    char_offset: span.char_offset,
                    text: span.text,
                    embedding,
                });
            }
        }
        if chunks.is_empty() {
            return Err(StoreError::NoDocuments);
        }
        Ok(Self::build(params, embedder, chunks))
    }

    fn build(params: StoreParams, embedder: Arc<dyn Embedder>, chunks: Vec<Chunk>) -> Self {
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut chunk_len = Vec::with_capacity(chunks.len());
        for c in &chunks {
            let tokens = tokenize(&c.text);
            chunk_len.push(tokens.len());
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, tf) in tf {
                postings.entry(term).or_default().push(Posting { chunk: c.chunk_id, tf });
            }
        }
        for list in postings.values_mut() {
            list.sort_by_key(|p| p.chunk);
        }
        let avg_len = chunk_len.iter().sum::<usize>() as f64 / chunks.len().max(1) as f64;
        Self { params, embedder, chunks, postings, chunk_len, avg_len }
    }

    pub fn params(&self) -> StoreParams {
        self.params
    }

    pub fn dimension(&self) -> usize {
        self.embedder.dimension()
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn chunk(&self, id: ChunkId) -> Option<&Chunk> {
        self.chunks.get(id.0 as usize)
    }

    /// Document ids in ingestion order.
    pub fn doc_ids(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.chunks {
            if out.last() != Some(&c.doc_id.as_str()) {
                out.push(&c.doc_id);
            }
        }
        out
    }

    pub fn average_chunk_length(&self) -> f64 {
        self.avg_len
    }

    /// Number of chunks containing `term` (already tokenized).
    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.document_frequency(term) as f64;
        let total = self.chunks.len() as f64;
        (1.0 + (total - n + 0.5) / (n + 0.5)).ln()
    }

    /// BM25 score of every chunk with positive score.
    fn bm25_scores(&self, query: &str) -> HashMap<ChunkId, f64> {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        let mut scores: HashMap<ChunkId, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(term);
            for p in list {
                let len = self.chunk_len[p.chunk.0 as usize] as f64;
                let tf = f64::from(p.tf);
                let norm = BM25_K1 * (1.0 - BM25_B + BM25_B * len / self.avg_len);
                *scores.entry(p.chunk).or_default() += idf * tf * (BM25_K1 + 1.0) / (tf + norm);
            }
        }
        scores
    }

    fn in_scope(&self, id: ChunkId, scope: Option<&str>) -> bool {
        scope.is_none_or(|d| self.chunks[id.0 as usize].doc_id == d)
    }

    fn lexical_ranking(&self, query: &str, scope: Option<&str>) -> Vec<(ChunkId, f64)> {
        let mut ranked: Vec<_> =
            self.bm25_scores(query).into_iter().filter(|&(id, s)| s > 0.0 && self.in_scope(id, scope)).collect();
        ranked.sort_by(by_score_then_id);
        ranked
    }

    fn semantic_ranking(&self, query: &str, scope: Option<&str>) -> Result<Vec<(ChunkId, f64)>, StoreError> {
        let q = self.embedder.embed(query)?;
        let mut ranked: Vec<_> = self
            .chunks
            .iter()
            .filter(|c| self.in_scope(c.chunk_id, scope))
            .map(|c| (c.chunk_id, cosine(&q, &c.embedding)))
            .collect();
        ranked.sort_by(by_score_then_id);
        Ok(ranked)
    }

    /// Top-k chunks by BM25, optionally restricted to one document.
    pub fn lexical_search_in(
        &self,
        query: &str,
        k: usize,
        scope: Option<&str>,
    ) -> Result<Vec<RetrievalResult>, StoreError> {
        check_k(k)?;
        Ok(self
            .lexical_ranking(query, scope)
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (id, s))| RetrievalResult {
                chunk_id: id,
                lexical_score: s,
                semantic_score: 0.0,
                fused_score: rrf(i + 1),
                lexical_rank: Some(i as u32 + 1),
                semantic_rank: None,
            })
            .collect())
    }

    /// Top-k chunks by exact cosine similarity, optionally restricted to one document.
    pub fn semantic_search_in(
        &self,
        query: &str,
        k: usize,
        scope: Option<&str>,
    ) -> Result<Vec<RetrievalResult>, StoreError> {
        check_k(k)?;
        Ok(self
            .semantic_ranking(query, scope)?
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (id, s))| RetrievalResult {
                chunk_id: id,
                lexical_score: 0.0,
                semantic_score: s,
                fused_score: rrf(i + 1),
                lexical_rank: None,
                semantic_rank: Some(i as u32 + 1),
            })
            .collect())
    }

    /// Reciprocal-rank fusion of each method's top-2k, cut to the top k.
    pub fn hybrid_retrieve_in(
        &self,
        query: &str,
        k: usize,
        scope: Option<&str>,
    ) -> Result<Vec<RetrievalResult>, StoreError> {
        check_k(k)?;
        let depth = k.saturating_mul(2);
        let lexical = self.lexical_ranking(query, scope);
        let semantic = self.semantic_ranking(query, scope)?;
        let lex_scores: HashMap<ChunkId, f64> = lexical.iter().copied().collect();
        let sem_scores: HashMap<ChunkId, f64> = semantic.iter().copied().collect();

        let mut fused: HashMap<ChunkId, RetrievalResult> = HashMap::new();

        for (i, (id, _)) in lexical.iter().take(depth).enumerate() {
            let r = fused.entry(*id).or_insert_with(|| blank(*id, &lex_scores, &sem_scores));
            r.lexical_rank = Some(i as u32 + 1);
        }
        for (i, (id, _)) in semantic.iter().take(depth).enumerate() {
            let r = fused.entry(*id).or_insert_with(|| blank(*id, &lex_scores, &sem_scores));
            r.semantic_rank = Some(i as u32 + 1);
        }
        let mut out: Vec<_> = fused.into_values().collect();
        for r in &mut out {
            r.fused_score = rrf_score(r.lexical_rank, r.semantic_rank);
        }
        out.sort_by(|a, b| b.fused_score.total_cmp(&a.fused_score).then(a.chunk_id.cmp(&b.chunk_id)));
        out.truncate(k);
        Ok(out)
    }

    pub fn lexical_search(&self, query: &str, k: usize) -> Result<Vec<RetrievalResult>, StoreError> {
        self.lexical_search_in(query, k, None)
    }

    pub fn semantic_search(&self, query: &str, k: usize) -> Result<Vec<RetrievalResult>, StoreError> {
        self.semantic_search_in(query, k, None)
    }

    pub fn hybrid_retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievalResult>, StoreError> {
        self.hybrid_retrieve_in(query, k, None)
    }

    /// Checks that both indexes agree with the chunk list.
    pub fn validate(&self) -> Result<(), StoreError> {
        let bad = |m: String| Err(StoreError::Inconsistent(m));
        let dim = self.dimension();
        let mut expected_postings = 0;
        let mut last_offset: HashMap<&str, usize> = HashMap::new();
        for (i, c) in self.chunks.iter().enumerate() {
            if c.chunk_id.0 as usize != i {
                return bad(format!("chunk at position {i} has id {}", c.chunk_id));
            }
            if c.text.chars().count() > self.params.chunk_size {
                return bad(format!("{} is longer than chunk_size", c.chunk_id));
            }
            if let Some(prev) = last_offset.insert(&c.doc_id, c.char_offset) {
                if c.char_offset <= prev {
                    return bad(format!("{} offset does not increase within `{}`", c.chunk_id, c.doc_id));
                }
            }
            if c.embedding.len() != dim {
                return bad(format!("{} has dimension {}, store has {dim}", c.chunk_id, c.embedding.len()));
            }
            let norm: f64 = c.embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return bad(format!("{} embedding has norm {norm}", c.chunk_id));
            }
            let tokens = tokenize(&c.text);
            if self.chunk_len.get(i) != Some(&tokens.len()) {
                return bad(format!("{} length is stale", c.chunk_id));
            }
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in &tokens {
                *tf.entry(t).or_default() += 1;
            }
            expected_postings += tf.len();
            for (term, n) in tf {
                let found = self.postings.get(term).and_then(|l| l.iter().find(|p| p.chunk == c.chunk_id));
                if found.map(|p| p.tf) != Some(n) {
                    return bad(format!("{} missing from postings of `{term}`", c.chunk_id));
                }
            }
        }
        let total: usize = self.postings.values().map(Vec::len).sum();
        if total != expected_postings {
            return bad(format!("{total} postings, expected {expected_postings}"));
        }
        let avg = self.chunk_len.iter().sum::<usize>() as f64 / self.chunks.len().max(1) as f64;
        if (avg - self.avg_len).abs() > 1e-9 {
            return bad("average chunk length is stale".into());
        }
        Ok(())
    }

    pub fn to_snapshot_json(&self) -> String {
        serde_json::to_string(&Snapshot {
            version: SNAPSHOT_VERSION,
            embedder: self.embedder.id(),
            dimension: self.dimension(),
            params: self.params,
            chunks: self.chunks.clone(),
        })
        .expect("snapshot serializes")
    }

    /// Restores a store from a snapshot written with the same embedder.
    /// Indexes are rebuilt and validated.
    pub fn from_snapshot_json(json: &str, embedder: Arc<dyn Embedder>) -> Result<Self, StoreError> {
        let snap: Snapshot = serde_json::from_str(json).map_err(|e| StoreError::Snapshot(e.to_string()))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(StoreError::Snapshot(format!(
                "unsupported version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        if snap.embedder != embedder.id() || snap.dimension != embedder.dimension() {
            return Err(StoreError::Snapshot(format!(
                "written by embedder {} (dimension {}), loading with {} (dimension {})",
                snap.embedder,
                snap.dimension,
                embedder.id(),
                embedder.dimension()
            )));
        }
        if snap.chunks.is_empty() {
            return Err(StoreError::NoDocuments);
        }
        let store = Self::build(snap.params, embedder, snap.chunks);
        store.validate()?;
        Ok(store)
    }

    pub fn save_snapshot(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        std::fs::write(path, self.to_snapshot_json()).map_err(|e| StoreError::Snapshot(e.to_string()))
    }

    pub fn load_snapshot(path: impl AsRef<Path>, embedder: Arc<dyn Embedder>) -> Result<Self, StoreError> {
        let json = std::fs::read_to_string(path).map_err(|e| StoreError::Snapshot(e.to_string()))?;
        Self::from_snapshot_json(&json, embedder)
    }
}

fn blank(id: ChunkId, lex: &HashMap<ChunkId, f64>, sem: &HashMap<ChunkId, f64>) -> RetrievalResult {
    RetrievalResult {
        chunk_id: id,
        lexical_score: lex.get(&id).copied().unwrap_or(0.0),
        semantic_score: sem.get(&id).copied().unwrap_or(0.0),
        fused_score: 0.0,
        lexical_rank: None,
        semantic_rank: None,
    }
}

fn rrf(rank: usize) -> f64 {
    1.0 / (RRF_K + rank as f64)
}

/// Fused score of a chunk given its (1-based) rank in each list it made.
pub fn rrf_score(lexical_rank: Option<u32>, semantic_rank: Option<u32>) -> f64 {
    [lexical_rank, semantic_rank].into_iter().flatten().map(|r| rrf(r as usize)).sum()
}

fn check_k(k: usize) -> Result<(), StoreError> {
    if k == 0 {
        Err(StoreError::BadK)
    } else {
        Ok(())
    }
}

fn by_score_then_id(a: &(ChunkId, f64), b: &(ChunkId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}
