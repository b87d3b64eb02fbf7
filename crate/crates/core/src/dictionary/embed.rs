//! Embedding providers.
//!
//! The hashed character-trigram provider is deterministic and offline; the
//! HTTP provider talks to an external dense multilingual embedder.

use std::time::Duration;

use serde::Deserialize;

use super::DictionaryError;
use crate::hash::fnv1a64;

/// An L2-normalized dense vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Normalizes `raw`. A zero vector cannot be normalized and is rejected.
    pub fn normalized(raw: Vec<f64>) -> Result<Self, DictionaryError> {
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(DictionaryError::DegenerateVector);
        }
        Ok(Self {
            values: raw.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Cosine similarity; both sides are unit vectors so this is the dot product.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        dot(&self.values, &other.values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub trait Embedder: Send + Sync {
    /// Recorded in index files; a loaded index only accepts queries from the
    /// provider that built it.
    fn provider_id(&self) -> String;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, DictionaryError>;
}

/// Counts of hashed character 3-grams in `dim` buckets. Text shorter than
/// three characters contributes itself as a single gram.
#[derive(Debug, Clone)]
pub struct HashedTrigramEmbedder {
    dim: usize,
}

impl HashedTrigramEmbedder {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn bucket(&self, gram: &str) -> usize {
        (fnv1a64(gram.as_bytes()) % self.dim as u64) as usize
    }

    pub fn grams(text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        if chars.len() < 3 {
            return vec![text.to_string()];
        }
        chars.windows(3).map(|w| w.iter().collect()).collect()
    }

    pub fn counts(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for g in Self::grams(text) {
            v[self.bucket(&g)] += 1.0;
        }
        v
    }
}

impl Default for HashedTrigramEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl Embedder for HashedTrigramEmbedder {
    fn provider_id(&self) -> String {
        format!("hashed-trigram-{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, DictionaryError> {
        if text.is_empty() {
            return Err(DictionaryError::EmptyText);
        }
        EmbeddingVector::normalized(self.counts(text))
    }
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct InfoResponse {
    dim: usize,
    #[serde(default)]
    model_id: String,
}

/// Client for an embedding service exposing `POST /embed {text}` →
/// `{vector}` and `GET /info` → `{dim, model_id}`.
pub struct HttpEmbedder {
    base_url: String,
    agent: ureq::Agent,
    dim: usize,
    model_id: String,
}

impl HttpEmbedder {
    /// Queries `/info` once to learn the dimension.
    pub fn connect(base_url: &str, timeout: Duration) -> Result<Self, DictionaryError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        let base_url = base_url.trim_end_matches('/').to_string();
        let info: InfoResponse = agent
            .get(&format!("{base_url}/info"))
            .call()
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| DictionaryError::ProviderUnavailable(e.to_string()))?;
        if info.dim == 0 {
            return Err(DictionaryError::ProviderUnavailable(
                "embedder reported dim 0".into(),
            ));
        }
        Ok(Self {
            base_url,
            agent,
            dim: info.dim,
            model_id: info.model_id,
        })
    }
}

impl Embedder for HttpEmbedder {
    fn provider_id(&self) -> String {
        format!("http:{}", self.model_id)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, DictionaryError> {
        if text.is_empty() {
            return Err(DictionaryError::EmptyText);
        }
        let resp: EmbedResponse = self
            .agent
            .post(&format!("{}/embed", self.base_url))
            .send_json(serde_json::json!({ "text": text }))
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| DictionaryError::ProviderUnavailable(e.to_string()))?;
        if resp.vector.len() != self.dim {
            return Err(DictionaryError::DimensionMismatch {
                expected: self.dim,
                found: resp.vector.len(),
            });
        }
        EmbeddingVector::normalized(resp.vector)
    }
}
