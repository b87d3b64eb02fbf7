//! End-to-end commands: ingest, align, index, evaluate, rollout planning,
//! GRPO objective evaluation and the offline smoke run.

mod evaluate;
mod ingest;
mod plan;
mod smoke;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;

pub use evaluate::{evaluate_pairs, Aggregates, EvalContext, EvalReport, EvalRow, JudgeScores};
pub use ingest::{
    align_pairs, build_index, open_searcher, run_ingest, AlignSummary, IndexSummary, IngestSummary,
};
pub use plan::{grpo_eval, read_batch, rollout_plan, BatchItem, GrpoReport, PlanRow, RolloutPlan};
pub use smoke::{run_smoke, SmokeReport};

use crate::agent::{ChatBackendConfig, HttpChatBackend, LlmBackend, ScriptedBackend};
use crate::config::{Endpoint, HarnessConfig};
use crate::dictionary::{Embedder, HashedTrigramEmbedder, HttpEmbedder};
use crate::scorer::{HttpScorer, QeScorer, ScoreRequest, StubScorer};
use crate::wiktionary::ExamplePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Align,
    Index,
    Llm,
    Scorer,
    Judge,
    Evaluate,
    Plan,
    Grpo,
    Invariants,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Align => "align",
            Stage::Index => "index",
            Stage::Llm => "llm",
            Stage::Scorer => "scorer",
            Stage::Judge => "judge",
            Stage::Evaluate => "evaluate",
            Stage::Plan => "plan",
            Stage::Grpo => "grpo",
            Stage::Invariants => "invariants",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad input data or a violated invariant.
    Invariant,
    /// An external service or script could not serve the request.
    Backend,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage {stage} failed: {message}")]
    Stage {
        stage: Stage,
        kind: FailureKind,
        message: String,
    },
}

impl PipelineError {
    pub fn invariant(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            kind: FailureKind::Invariant,
            message: e.to_string(),
        }
    }

    pub fn backend(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            kind: FailureKind::Backend,
            message: e.to_string(),
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Config(_) => Stage::Config,
            PipelineError::Stage { stage, .. } => *stage,
        }
    }

    /// 1 invariant failure, 2 config error, 3 backend error.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage {
                kind: FailureKind::Invariant,
                ..
            } => 1,
            PipelineError::Stage {
                kind: FailureKind::Backend,
                ..
            } => 3,
        }
    }
}

impl From<crate::config::ConfigError> for PipelineError {
    fn from(e: crate::config::ConfigError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

/// The path must be configured and exist.
pub fn require_path<'a>(name: &str, path: Option<&'a PathBuf>) -> Result<&'a Path, PipelineError> {
    let p = path.ok_or_else(|| PipelineError::Config(format!("paths.{name} is not set")))?;
    if !p.exists() {
        return Err(PipelineError::Config(format!(
            "paths.{name} = {} does not exist",
            p.display()
        )));
    }
    Ok(p)
}

pub fn existing(name: &str, path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::Config(format!(
            "{name} {} does not exist",
            path.display()
        )))
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<ExamplePair>, PipelineError> {
    existing("split file", path)?;
    let file = File::open(path).map_err(|e| PipelineError::invariant(Stage::Evaluate, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::invariant(Stage::Evaluate, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: ExamplePair = serde_json::from_str(&line).map_err(|e| {
            PipelineError::invariant(
                Stage::Evaluate,
                format!("{} line {}: {e}", path.display(), i + 1),
            )
        })?;
        out.push(pair);
    }
    Ok(out)
}

pub fn write_pairs(path: &Path, pairs: &[ExamplePair]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn make_embedder(cfg: &HarnessConfig) -> Result<Arc<dyn Embedder>, PipelineError> {
    match cfg.retrieval.provider.as_str() {
        "http" => {
            let ep = &cfg.backends.embedder;
            if !ep.is_set() {
                return Err(PipelineError::backend(
                    Stage::Index,
                    "embedder endpoint not configured",
                ));
            }
            let e = HttpEmbedder::connect(&ep.url, Duration::from_millis(ep.timeout_ms))
                .map_err(|e| PipelineError::backend(Stage::Index, e))?;
            Ok(Arc::new(e))
        }
        _ => Ok(Arc::new(HashedTrigramEmbedder::new(cfg.retrieval.dim))),
    }
}

/// The embedded stub, or the scorer endpoint after a probe request.
pub fn make_scorer(cfg: &HarnessConfig) -> Result<Arc<dyn QeScorer>, PipelineError> {
    if cfg.backends.stub_scorer {
        return Ok(Arc::new(StubScorer));
    }
    let ep = &cfg.backends.scorer;
    if !ep.is_set() {
        return Err(PipelineError::backend(
            Stage::Scorer,
            "stub scorer disabled and no scorer endpoint configured",
        ));
    }
    let s = HttpScorer::new(&ep.url, Duration::from_millis(ep.timeout_ms), ep.retries);
    s.score(&ScoreRequest::reference_free("a", "a"))
        .map_err(|e| PipelineError::backend(Stage::Scorer, e))?;
    Ok(Arc::new(s))
}

fn chat(cfg: &HarnessConfig, ep: &Endpoint) -> HttpChatBackend {
    HttpChatBackend::new(ChatBackendConfig {
        url: ep.url.clone(),
        model: cfg.generation.model.clone(),
        temperature: cfg.generation.temperature,
        top_p: cfg.generation.top_p,
        timeout_ms: ep.timeout_ms,
        retries: ep.retries,
    })
}

fn scripted_or_http(
    cfg: &HarnessConfig,
    stage: Stage,
    script: Option<&PathBuf>,
    ep: &Endpoint,
) -> Result<Arc<dyn LlmBackend>, PipelineError> {
    if let Some(path) = script {
        existing("script", path)?;
        let s =
            ScriptedBackend::from_jsonl(path).map_err(|e| PipelineError::invariant(stage, e))?;
        return Ok(Arc::new(s));
    }
    if ep.is_set() {
        return Ok(Arc::new(chat(cfg, ep)));
    }
    Err(PipelineError::backend(
        stage,
        "no script and no endpoint configured",
    ))
}

/// Translation model: `paths.llm_script` if set, else the LLM endpoint.
pub fn make_llm(cfg: &HarnessConfig) -> Result<Arc<dyn LlmBackend>, PipelineError> {
    scripted_or_http(
        cfg,
        Stage::Llm,
        cfg.paths.llm_script.as_ref(),
        &cfg.backends.llm,
    )
}

/// Span aligner: `paths.align_script` if set, else the LLM endpoint.
pub fn make_aligner(cfg: &HarnessConfig) -> Result<Arc<dyn LlmBackend>, PipelineError> {
    scripted_or_http(
        cfg,
        Stage::Align,
        cfg.paths.align_script.as_ref(),
        &cfg.backends.llm,
    )
}

/// `None` unless the judge is enabled.
pub fn make_judge(cfg: &HarnessConfig) -> Result<Option<Arc<dyn LlmBackend>>, PipelineError> {
    if !cfg.backends.judge_enabled {
        return Ok(None);
    }
    scripted_or_http(
        cfg,
        Stage::Judge,
        cfg.paths.judge_script.as_ref(),
        &cfg.backends.judge,
    )
    .map(Some)
}
