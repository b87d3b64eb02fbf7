use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Stage};
use crate::config::HarnessConfig;
use crate::grpo::{evaluate_group, read_groups, GroupEvaluation};
use crate::rqe::{allocate_batch, difficulty, DifficultyScore};

/// One batch line: either a precomputed `v` or the two quality scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchItem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_hyp: Option<f64>,
}

impl BatchItem {
    fn difficulty(&self, line: usize) -> Result<DifficultyScore, PipelineError> {
        let err = |e| PipelineError::invariant(Stage::Plan, format!("item {line}: {e}"));
        match (self.v, self.phi_ref, self.phi_hyp) {
            (Some(v), None, None) => DifficultyScore::new(v).map_err(err),
            (None, Some(r), Some(h)) => difficulty(r, h).map_err(err),
            _ => Err(PipelineError::invariant(
                Stage::Plan,
                format!("item {line}: give either v or both phi_ref and phi_hyp"),
            )),
        }
    }
}

/// JSON array or JSONL.
pub fn read_batch<R: BufRead>(mut reader: R) -> Result<Vec<BatchItem>, PipelineError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| PipelineError::invariant(Stage::Plan, e))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| PipelineError::invariant(Stage::Plan, e));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| PipelineError::invariant(Stage::Plan, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub v: f64,
    pub g_base: u32,
    pub g: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutPlan {
    pub config_fingerprint: String,
    pub examples: usize,
    pub budget: u64,
    pub base_total: u64,
    pub leftover: u64,
    pub leftover_assigned: u64,
    pub total: u64,
    pub rows: Vec<PlanRow>,
}

/// Difficulty and group sizes for a batch. The budget defaults to `N = B·G`.
pub fn rollout_plan(
    items: &[BatchItem],
    cfg: &HarnessConfig,
    budget: Option<u64>,
) -> Result<RolloutPlan, PipelineError> {
    let vs = items
        .iter()
        .enumerate()
        .map(|(i, it)| it.difficulty(i + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let budget = budget.unwrap_or_else(|| cfg.budget.default_budget(items.len()));
    let alloc = allocate_batch(&vs, &cfg.budget, budget)
        .map_err(|e| PipelineError::invariant(Stage::Plan, e))?;
    let rows = items
        .iter()
        .enumerate()
        .map(|(i, it)| PlanRow {
            index: i,
            id: it.id.clone(),
            v: vs[i].value(),
            g_base: alloc.base[i],
            g: alloc.g[i],
        })
        .collect();
    Ok(RolloutPlan {
        config_fingerprint: cfg.fingerprint(),
        examples: items.len(),
        budget: alloc.budget,
        base_total: alloc.base.iter().map(|&b| b as u64).sum(),
        leftover: alloc.leftover,
        leftover_assigned: alloc.leftover_assigned,
        total: alloc.total(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoReport {
    pub config_fingerprint: String,
    pub assumed: Vec<String>,
    pub groups: Vec<GroupEvaluation>,
    pub mean_objective: f64,
}

/// Evaluate every rollout group in a JSONL file.
pub fn grpo_eval<R: BufRead>(reader: R, cfg: &HarnessConfig) -> Result<GrpoReport, PipelineError> {
    let groups = read_groups(reader).map_err(|e| PipelineError::invariant(Stage::Grpo, e))?;
    if groups.is_empty() {
        return Err(PipelineError::invariant(Stage::Grpo, "no rollout groups"));
    }
    let evals = groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            evaluate_group(g, &cfg.grpo)
                .map_err(|e| PipelineError::invariant(Stage::Grpo, format!("group {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean_objective = evals.iter().map(|e| e.objective).sum::<f64>() / evals.len() as f64;
    Ok(GrpoReport {
        config_fingerprint: cfg.fingerprint(),
        assumed: cfg.assumed_defaults(),
        groups: evals,
        mean_objective,
    })
}
