//! Dictionary compilation and dense retrieval.

mod cache;
mod doc;
mod embed;
mod index;

use std::sync::Arc;

pub use cache::{CacheKey, RetrievalCache};
pub use doc::{compile_dictionary, format_doc, render_information_block, DictionaryDoc, DocStore};
pub use embed::{Embedder, EmbeddingVector, HashedTrigramEmbedder, HttpEmbedder};
pub use index::{rank_order, FlatIndex, SearchHit};

#[derive(Debug, thiserror::Error)]
pub enum DictionaryError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding has zero norm")]
    DegenerateVector,
    #[error("dimension mismatch: index has {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index was built by provider {index:?}, not {provider:?}")]
    ProviderMismatch { index: String, provider: String },
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that can turn a search query into a rendered information block.
pub trait Retriever: Send + Sync {
    fn retrieve(&self, query: &str, k: usize, max_chars: usize) -> Result<String, DictionaryError>;
}

/// Index + documents + embedder, with an optional shared cache.
#[derive(Clone)]
pub struct DictionarySearcher {
    index: Arc<FlatIndex>,
    docs: Arc<DocStore>,
    embedder: Arc<dyn Embedder>,
    cache: Option<Arc<RetrievalCache>>,
}

impl DictionarySearcher {
    pub fn new(
        index: Arc<FlatIndex>,
        docs: Arc<DocStore>,
        embedder: Arc<dyn Embedder>,
    ) -> Result<Self, DictionaryError> {
        index.check_provider(embedder.as_ref())?;
        Ok(Self {
            index,
            docs,
            embedder,
            cache: None,
        })
    }

    pub fn with_cache(mut self, cache: Arc<RetrievalCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn index(&self) -> &FlatIndex {
        &self.index
    }

    pub fn docs(&self) -> &DocStore {
        &self.docs
    }

    pub fn cache(&self) -> Option<&RetrievalCache> {
        self.cache.as_deref()
    }

    pub fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, DictionaryError> {
        self.index.search(self.embedder.as_ref(), query, k)
    }

    fn render_fresh(
        &self,
        query: &str,
        k: usize,
        max_chars: usize,
    ) -> Result<String, DictionaryError> {
        let hits = self.search(query, k)?;
        Ok(render_information_block(&hits, &self.docs, max_chars))
    }
}

impl Retriever for DictionarySearcher {
    fn retrieve(&self, query: &str, k: usize, max_chars: usize) -> Result<String, DictionaryError> {
        let Some(cache) = &self.cache else {
            return self.render_fresh(query, k, max_chars);
        };
        let key = CacheKey {
            query: query.to_string(),
            k,
            max_chars,
        };
        if let Some(block) = cache.get(&key) {
            return Ok(block);
        }
        let block = self.render_fresh(query, k, max_chars)?;
        cache.put(key, block.clone());
        Ok(block)
    }
}
