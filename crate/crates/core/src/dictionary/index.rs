//! Exact flat-scan cosine index with a small versioned binary format.
//!
//! Layout (little endian):
//! `magic[8] version:u32 dim:u32 provider_len:u32 provider[provider_len]
//! doc_count:u64 vectors[doc_count*dim]:f64 doc_ids[doc_count]:u64`.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::{dot, Embedder, EmbeddingVector};
use super::{DictionaryDoc, DictionaryError};

const MAGIC: &[u8; 8] = b"NLXFLAT\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: u64,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatIndex {
    provider_id: String,
    dim: usize,
    doc_ids: Vec<u64>,
    // row-major, one unit vector per doc
    vectors: Vec<f64>,
}

/// Descending score, ties by ascending doc id.
pub fn rank_order(a: &(u64, f64), b: &(u64, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

impl FlatIndex {
    pub fn build(docs: &[DictionaryDoc], embedder: &dyn Embedder) -> Result<Self, DictionaryError> {
        if docs.is_empty() {
            return Err(DictionaryError::EmptyIndex);
        }
        let dim = embedder.dim();
        let rows: Vec<EmbeddingVector> = docs
            .par_iter()
            .map(|d| embedder.embed(&d.body))
            .collect::<Result<_, _>>()?;
        let mut vectors = Vec::with_capacity(docs.len() * dim);
        for row in &rows {
            if row.dim() != dim {
                return Err(DictionaryError::DimensionMismatch {
                    expected: dim,
                    found: row.dim(),
                });
            }
            vectors.extend_from_slice(row.values());
        }
        Ok(Self {
            provider_id: embedder.provider_id(),
            dim,
            doc_ids: docs.iter().map(|d| d.doc_id).collect(),
            vectors,
        })
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[u64] {
        &self.doc_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Top `k` rows by cosine with `query`.
    pub fn search_vector(
        &self,
        query: &EmbeddingVector,
        k: usize,
    ) -> Result<Vec<SearchHit>, DictionaryError> {
        if self.is_empty() {
            return Err(DictionaryError::EmptyIndex);
        }
        if k == 0 {
            return Err(DictionaryError::InvalidK);
        }
        if query.dim() != self.dim {
            return Err(DictionaryError::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let mut scored: Vec<(u64, f64)> = (0..self.len())
            .map(|i| (self.doc_ids[i], dot(self.row(i), query.values())))
            .collect();
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, rank_order);
            scored.truncate(k);
        }
        scored.sort_by(rank_order);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| SearchHit {
                doc_id,
                score,
                rank: i + 1,
            })
            .collect())
    }

    pub fn search(
        &self,
        embedder: &dyn Embedder,
        query: &str,
        k: usize,
    ) -> Result<Vec<SearchHit>, DictionaryError> {
        self.check_provider(embedder)?;
        let q = embedder.embed(query)?;
        self.search_vector(&q, k)
    }

    pub fn check_provider(&self, embedder: &dyn Embedder) -> Result<(), DictionaryError> {
        if embedder.dim() != self.dim {
            return Err(DictionaryError::DimensionMismatch {
                expected: self.dim,
                found: embedder.dim(),
            });
        }
        if embedder.provider_id() != self.provider_id {
            return Err(DictionaryError::ProviderMismatch {
                index: self.provider_id.clone(),
                provider: embedder.provider_id(),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DictionaryError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        let pid = self.provider_id.as_bytes();
        w.write_all(&(pid.len() as u32).to_le_bytes())?;
        w.write_all(pid)?;
        w.write_all(&(self.doc_ids.len() as u64).to_le_bytes())?;
        for v in &self.vectors {
            w.write_all(&v.to_le_bytes())?;
        }
        for id in &self.doc_ids {
            w.write_all(&id.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DictionaryError> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        let mut cur = Cursor {
            bytes: &bytes,
            pos: 0,
        };
        if cur.take(8)? != MAGIC {
            return Err(DictionaryError::Corrupt("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(DictionaryError::Corrupt(format!(
                "unsupported version {version}"
            )));
        }
        let dim = cur.u32()? as usize;
        if dim == 0 {
            return Err(DictionaryError::Corrupt("zero dimension".into()));
        }
        let plen = cur.u32()? as usize;
        let provider_id = String::from_utf8(cur.take(plen)?.to_vec())
            .map_err(|_| DictionaryError::Corrupt("provider id is not utf-8".into()))?;
        let n = cur.u64()? as usize;
        let expected = n
            .checked_mul(dim)
            .and_then(|c| c.checked_mul(8))
            .and_then(|c| c.checked_add(n * 8))
            .ok_or_else(|| DictionaryError::Corrupt("size overflow".into()))?;
        if bytes.len() - cur.pos != expected {
            return Err(DictionaryError::Corrupt(format!(
                "expected {expected} payload bytes, found {}",
                bytes.len() - cur.pos
            )));
        }
        let mut vectors = Vec::with_capacity(n * dim);
        for _ in 0..n * dim {
            vectors.push(f64::from_le_bytes(
                cur.take(8)?.try_into().expect("8 bytes"),
            ));
        }
        let mut doc_ids = Vec::with_capacity(n);
        for _ in 0..n {
            doc_ids.push(cur.u64()?);
        }
        Ok(Self {
            provider_id,
            dim,
            doc_ids,
            vectors,
        })
    }

    /// Load and verify the file was built by `embedder`.
    pub fn load_for(path: &Path, embedder: &dyn Embedder) -> Result<Self, DictionaryError> {
        let idx = Self::load(path)?;
        idx.check_provider(embedder)?;
        Ok(idx)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DictionaryError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| DictionaryError::Corrupt("truncated index file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DictionaryError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, DictionaryError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}
