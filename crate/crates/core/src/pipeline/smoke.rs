use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ingest::DICTIONARY_FILE;
use super::{
    align_pairs, build_index, evaluate_pairs, make_aligner, make_embedder, make_judge, make_llm,
    make_scorer, open_searcher, read_pairs, require_path, run_ingest, AlignSummary, EvalContext,
    EvalReport, IndexSummary, IngestSummary, PipelineError, Stage,
};
use crate::config::HarnessConfig;
use crate::wiktionary::SplitName;

pub const SMOKE_EXAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmokeReport {
    pub stages: Vec<String>,
    pub ingest: IngestSummary,
    pub align: AlignSummary,
    pub index: IndexSummary,
    pub evaluation: EvalReport,
}

fn check(ok: bool, what: &str) -> Result<(), PipelineError> {
    if ok {
        Ok(())
    } else {
        Err(PipelineError::invariant(Stage::Invariants, what))
    }
}

/// ingest → align → index → evaluate on at most ten test pairs, then the
/// report invariants. Intermediate files go to `work_dir`. The first
/// failing stage is named in the error.
pub fn run_smoke(
    cfg: &HarnessConfig,
    overrides: Vec<String>,
    work_dir: &Path,
) -> Result<SmokeReport, PipelineError> {
    cfg.validate()?;
    let dump = require_path("dump", cfg.paths.dump.as_ref())?;
    require_path("llm_script", cfg.paths.llm_script.as_ref())?;
    let mut stages = Vec::new();

    let data = work_dir.join("data");
    let ingest = run_ingest(dump, cfg, &data)?;
    stages.push(Stage::Ingest.to_string());

    let mut pairs = read_pairs(&data.join(format!("{}.jsonl", SplitName::Test)))?;
    pairs.truncate(SMOKE_EXAMPLES);
    let aligner = make_aligner(cfg)?;
    let align = align_pairs(&mut pairs, aligner.as_ref());
    if align.aligned == 0 {
        return Err(PipelineError::invariant(
            Stage::Align,
            "no pair could be aligned",
        ));
    }
    stages.push(Stage::Align.to_string());

    let embedder = make_embedder(cfg)?;
    let docs_path = data.join(DICTIONARY_FILE);
    let index_path = match &cfg.paths.index {
        Some(p) => p.clone(),
        None => work_dir.join("index.json"),
    };
    let index = if cfg.paths.index.is_some() {
        let s = open_searcher(cfg, &docs_path, &index_path, embedder.clone())?;
        IndexSummary {
            docs: s.index().len(),
            dim: s.index().dim(),
            provider: s.index().provider_id().to_string(),
        }
    } else {
        fs::create_dir_all(work_dir).map_err(|e| PipelineError::invariant(Stage::Index, e))?;
        build_index(&docs_path, embedder.as_ref(), &index_path)?
    };
    let searcher = open_searcher(cfg, &docs_path, &index_path, embedder)?;
    stages.push(Stage::Index.to_string());

    let scorer = make_scorer(cfg)?;
    stages.push(Stage::Scorer.to_string());
    let llm = make_llm(cfg)?;
    stages.push(Stage::Llm.to_string());
    let judge = make_judge(cfg)?;

    let ctx = EvalContext {
        config: cfg,
        overrides,
        llm: llm.as_ref(),
        retriever: &searcher,
        scorer: scorer.as_ref(),
        judge: judge.as_deref(),
    };
    let evaluation = evaluate_pairs(&ctx, SplitName::Test.as_str(), &pairs)?;
    stages.push(Stage::Evaluate.to_string());

    let (agg, hist) =
        evaluation.recompute(cfg.metrics.fuzzy_threshold, cfg.limits.max_search_turns);
    check(
        evaluation.rows.len() == pairs.len(),
        "row count differs from example count",
    )?;
    check(
        agg == evaluation.aggregates,
        "aggregates differ from recomputation",
    )?;
    check(
        hist == evaluation.turn_histogram,
        "turn histogram differs from recomputation",
    )?;
    let completed = evaluation
        .rows
        .iter()
        .filter(|r| r.search_turns.is_some())
        .count();
    check(
        hist.values().sum::<usize>() == completed,
        "turn histogram does not sum to completed runs",
    )?;
    for r in &evaluation.rows {
        if let Some(e) = r.errors.first() {
            return Err(PipelineError::backend(
                Stage::Evaluate,
                format!("row {}: {e}", r.index),
            ));
        }
        let b = r.rewards.ok_or_else(|| {
            PipelineError::invariant(Stage::Invariants, format!("row {} has no rewards", r.index))
        })?;
        check(
            (0.0..=1.0).contains(&b.total),
            "total reward outside [0, 1]",
        )?;
        check(
            b.format == r.format,
            "reward format differs from row format",
        )?;
        check(
            r.format == 1 || b.total == 0.0,
            "ungated reward for a transcript without translation",
        )?;
    }
    stages.push(Stage::Invariants.to_string());

    Ok(SmokeReport {
        stages,
        ingest,
        align,
        index,
        evaluation,
    })
}
