use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{existing, write_pairs, PipelineError, Stage};
use crate::agent::{GenerationRequest, LlmBackend};
use crate::config::HarnessConfig;
use crate::dictionary::{
    format_doc, DictionarySearcher, DocStore, Embedder, FlatIndex, RetrievalCache,
};
use crate::wiktionary::{
    build_splits, ingest_dump, parse_aligned_span, render_alignment_prompt, ExamplePair,
    IngestStats, SplitName,
};

pub const DICTIONARY_FILE: &str = "dictionary.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub stats: IngestStats,
    pub docs: usize,
    /// Pair counts per split.
    pub splits: BTreeMap<String, usize>,
}

/// Stream `dump` into `out_dir`: every cleaned entry becomes a dictionary
/// document, neologism entries feed the splits, one JSONL file per split.
pub fn run_ingest(
    dump: &Path,
    cfg: &HarnessConfig,
    out_dir: &Path,
) -> Result<IngestSummary, PipelineError> {
    existing("dump", dump)?;
    let io = |e: std::io::Error| PipelineError::invariant(Stage::Ingest, e);
    fs::create_dir_all(out_dir).map_err(io)?;
    let reader = BufReader::new(File::open(dump).map_err(io)?);
    let mut docs_out = BufWriter::new(File::create(out_dir.join(DICTIONARY_FILE)).map_err(io)?);
    let mut next_id = 0u64;
    let outcome = ingest_dump(reader, &cfg.ingest.filter, |entry, _| {
        let doc = format_doc(entry, next_id);
        next_id += 1;
        serde_json::to_writer(&mut docs_out, &doc)?;
        docs_out.write_all(b"\n")
    })
    .map_err(|e| PipelineError::invariant(Stage::Ingest, e))?;
    docs_out.flush().map_err(io)?;

    let s = &outcome.stats;
    if s.kept != s.type1 + s.type2 + s.type3
        || s.lines != s.malformed + s.missing_word + s.filtered + s.kept
    {
        return Err(PipelineError::invariant(
            Stage::Invariants,
            format!("entry partition does not add up: {s:?}"),
        ));
    }

    let splits = build_splits(&outcome.neologisms, &cfg.ingest.plan())
        .map_err(|e| PipelineError::invariant(Stage::Ingest, e))?;
    let mut counts = BTreeMap::new();
    for name in SplitName::ALL {
        let pairs = &splits.get(name).pairs;
        write_pairs(&out_dir.join(format!("{name}.jsonl")), pairs).map_err(io)?;
        counts.insert(name.to_string(), pairs.len());
    }
    Ok(IngestSummary {
        stats: outcome.stats,
        docs: next_id as usize,
        splits: counts,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignSummary {
    pub aligned: usize,
    /// `(pair index, reason)` for pairs left without spans.
    pub failed: Vec<(usize, String)>,
}

/// Fill `spans` for every pair that has a reference translation. Pairs the
/// aligner cannot serve keep their spans empty and are reported.
pub fn align_pairs(pairs: &mut [ExamplePair], aligner: &dyn LlmBackend) -> AlignSummary {
    let mut summary = AlignSummary::default();
    for (i, pair) in pairs.iter_mut().enumerate() {
        let result = render_alignment_prompt(pair)
            .map_err(|e| e.to_string())
            .and_then(|prompt| {
                aligner
                    .generate(&GenerationRequest {
                        prompt,
                        partial_response: String::new(),
                        stop: vec![],
                        max_tokens: 256,
                    })
                    .map_err(|e| e.to_string())
            })
            .and_then(|g| parse_aligned_span(&g.text).map_err(|e| e.to_string()));
        match result {
            Ok(span) if !span.is_empty() => {
                pair.spans = vec![span];
                summary.aligned += 1;
            }
            Ok(_) => summary.failed.push((i, "empty aligned span".into())),
            Err(e) => summary.failed.push((i, e)),
        }
    }
    summary
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub docs: usize,
    pub dim: usize,
    pub provider: String,
}

pub fn build_index(
    docs_path: &Path,
    embedder: &dyn Embedder,
    out: &Path,
) -> Result<IndexSummary, PipelineError> {
    existing("dictionary", docs_path)?;
    let store =
        DocStore::read_jsonl(docs_path).map_err(|e| PipelineError::invariant(Stage::Index, e))?;
    let docs: Vec<_> = store.sorted().into_iter().cloned().collect();
    let index =
        FlatIndex::build(&docs, embedder).map_err(|e| PipelineError::invariant(Stage::Index, e))?;
    index
        .save(out)
        .map_err(|e| PipelineError::invariant(Stage::Index, e))?;
    Ok(IndexSummary {
        docs: index.len(),
        dim: index.dim(),
        provider: index.provider_id().to_string(),
    })
}

/// Load documents and an index built by the same provider, with a cache.
pub fn open_searcher(
    cfg: &HarnessConfig,
    docs_path: &Path,
    index_path: &Path,
    embedder: Arc<dyn Embedder>,
) -> Result<DictionarySearcher, PipelineError> {
    existing("dictionary", docs_path)?;
    existing("index", index_path)?;
    let err = |e| PipelineError::invariant(Stage::Index, e);
    let docs = DocStore::read_jsonl(docs_path).map_err(err)?;
    let index = FlatIndex::load_for(index_path, embedder.as_ref()).map_err(err)?;
    let cache = Arc::new(RetrievalCache::new(cfg.retrieval.cache_capacity));
    Ok(
        DictionarySearcher::new(Arc::new(index), Arc::new(docs), embedder)
            .map_err(err)?
            .with_cache(cache),
    )
}
