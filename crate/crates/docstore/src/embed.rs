use std::time::Duration;

use serde::Deserialize;

use crate::tokenize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("embedding backend returned a malformed response: {0}")]
    BadResponse(String),
    #[error("embedding has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Maps text to a unit-norm vector of fixed dimension. Implementations must
/// be deterministic: the same text always yields the same vector.
pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// Stable identifier recorded in snapshots, e.g. `hashing-256`.
    fn id(&self) -> String;

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Offline bag-of-words embedder: each token is hashed (FNV-1a) into one of
/// `dimension` buckets, counts are L2-normalized. Word order is irrelevant.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { dimension }
    }

    fn bucket(&self, token: &str) -> usize {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in token.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        (h % self.dimension as u64) as usize
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIMENSION)
    }
}

impl Embedder for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn id(&self) -> String {
        format!("hashing-{}", self.dimension)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut tokens = tokenize(trimmed);
        if tokens.is_empty() {
            // punctuation-only text still gets a deterministic non-zero vector
            tokens.push(trimmed.to_string());
        }
        let mut v = vec![0.0; self.dimension];
        for t in &tokens {
            v[self.bucket(t)] += 1.0;
        }
        Ok(normalize(v))
    }
}

/// Connection settings for an OpenAI-compatible `/embeddings` endpoint.
#[derive(Debug, Clone)]
pub struct RemoteEmbedderConfig {
    /// Base URL, e.g. `http://localhost:8080/v1`.
    pub endpoint: String,
    pub model: String,
    pub dimension: usize,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl RemoteEmbedderConfig {
    /// Reads `MUP_EMBED_URL`, `MUP_EMBED_MODEL`, `MUP_EMBED_DIM` and
    /// `MUP_EMBED_API_KEY`. Returns `None` when no URL is set.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var("MUP_EMBED_URL").ok()?;
        Some(Self {
            endpoint,
            model: std::env::var("MUP_EMBED_MODEL").unwrap_or_else(|_| "BAAI/bge-large-en-v1.5".into()),
            dimension: std::env::var("MUP_EMBED_DIM").ok().and_then(|d| d.parse().ok()).unwrap_or(1024),
            api_key: std::env::var("MUP_EMBED_API_KEY").ok(),
            timeout: Duration::from_secs(30),
        })
    }
}

/// Embedder backed by a remote service. Vectors are re-normalized locally.
pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    index: Option<usize>,
    embedding: Vec<f64>,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteEmbedderConfig) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| EmbedError::BackendUnavailable(e.to_string()))?;
        Ok(Self { config, client })
    }
}

impl Embedder for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn id(&self) -> String {
        format!("remote-{}-{}", self.config.model, self.config.dimension)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        let url = format!("{}/embeddings", self.config.endpoint.trim_end_matches('/'));
        let mut req = self.client.post(url).json(&serde_json::json!({ "model": self.config.model, "input": texts }));
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| EmbedError::BackendUnavailable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(EmbedError::BackendUnavailable(format!("HTTP {status}")));
        }
        let mut body: EmbeddingResponse = resp.json().map_err(|e| EmbedError::BadResponse(e.to_string()))?;
        if body.data.len() != texts.len() {
            return Err(EmbedError::BadResponse(format!("{} embeddings for {} inputs", body.data.len(), texts.len())));
        }
        body.data.sort_by_key(|d| d.index.unwrap_or(0));
        body.data
            .into_iter()
            .map(|d| {
                if d.embedding.len() != self.config.dimension {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.config.dimension,
                        got: d.embedding.len(),
                    });
                }
                Ok(normalize(d.embedding))
            })
            .collect()
    }
}
