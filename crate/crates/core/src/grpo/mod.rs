//! Group-relative advantages and the masked, clipped policy objective.
//!
//! Only tokens with mask 1 contribute. Values at mask-0 positions are never
//! read, so the objective is bit-for-bit invariant to them.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

pub const ADVANTAGE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrpoError {
    #[error("advantages need at least 2 rollouts, got {0}")]
    GroupTooSmall(usize),
    #[error("rollout {rollout}: {field} has length {found}, expected {expected}")]
    LengthMismatch {
        rollout: usize,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("rollout {0} has no unmasked tokens")]
    AllTokensMasked(usize),
    #[error("rollout {rollout}: mask value {value} is not 0 or 1")]
    InvalidMask { rollout: usize, value: u8 },
    #[error("invalid objective config: {0}")]
    InvalidConfig(String),
    #[error("groups line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlEstimator {
    ExactPerToken,
    #[default]
    K3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub epsilon: f64,
    pub beta: f64,
    #[serde(default)]
    pub kl_estimator: KlEstimator,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            beta: 0.01,
            kl_estimator: KlEstimator::K3,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(GrpoError::InvalidConfig("epsilon must be positive".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(GrpoError::InvalidConfig("beta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub reward: f64,
    pub mask: Vec<u8>,
    pub logp_old: Vec<f64>,
    pub logp_cur: Vec<f64>,
    pub logp_ref: Vec<f64>,
}

impl Rollout {
    pub fn validate(&self, idx: usize) -> Result<(), GrpoError> {
        let n = self.mask.len();
        for (field, len) in [
            ("logp_old", self.logp_old.len()),
            ("logp_cur", self.logp_cur.len()),
            ("logp_ref", self.logp_ref.len()),
        ] {
            if len != n {
                return Err(GrpoError::LengthMismatch {
                    rollout: idx,
                    field,
                    expected: n,
                    found: len,
                });
            }
        }
        if let Some(&value) = self.mask.iter().find(|&&m| m > 1) {
            return Err(GrpoError::InvalidMask {
                rollout: idx,
                value,
            });
        }
        if !self.mask.contains(&1) {
            return Err(GrpoError::AllTokensMasked(idx));
        }
        Ok(())
    }

    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == 1)
            .map(|(t, _)| t)
    }

    pub fn active_tokens(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1).count()
    }
}

/// One line of the JSONL interchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub rollouts: Vec<Rollout>,
    /// Computed from rewards when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advantages: Option<Vec<f64>>,
}

impl RolloutGroup {
    pub fn new(rollouts: Vec<Rollout>) -> Self {
        Self {
            rollouts,
            advantages: None,
        }
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.rollouts.iter().map(|r| r.reward).collect()
    }

    pub fn resolved_advantages(&self) -> Result<Vec<f64>, GrpoError> {
        match &self.advantages {
            Some(a) if a.len() != self.rollouts.len() => Err(GrpoError::LengthMismatch {
                rollout: 0,
                field: "advantages",
                expected: self.rollouts.len(),
                found: a.len(),
            }),
            Some(a) => Ok(a.clone()),
            None => group_advantages(&self.rewards()),
        }
    }
}

/// Standardize rewards with the population std; identical rewards give zeros.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(rewards
        .iter()
        .map(|r| (r - mean) / (std + ADVANTAGE_EPS))
        .collect())
}

/// Masked mean of the per-token KL estimate for one rollout.
pub fn kl_penalty(
    logp_cur: &[f64],
    logp_ref: &[f64],
    mask: &[u8],
    estimator: KlEstimator,
) -> Result<f64, GrpoError> {
    if logp_cur.len() != mask.len() || logp_ref.len() != mask.len() {
        return Err(GrpoError::LengthMismatch {
            rollout: 0,
            field: "logp",
            expected: mask.len(),
            found: logp_cur.len().min(logp_ref.len()),
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in (0..mask.len()).filter(|&t| mask[t] == 1) {
        sum += match estimator {
            KlEstimator::ExactPerToken => logp_cur[t] - logp_ref[t],
            KlEstimator::K3 => {
                let d = logp_ref[t] - logp_cur[t];
                d.exp() - d - 1.0
            }
        };
        count += 1;
    }
    if count == 0 {
        return Err(GrpoError::AllTokensMasked(0));
    }
    Ok(sum / count as f64)
}

pub fn clipped_term(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEvaluation {
    pub advantages: Vec<f64>,
    /// Mean over rollouts of the per-rollout clipped surrogate.
    pub surrogate: f64,
    /// Mean over rollouts of the per-rollout KL estimate.
    pub kl: f64,
    /// `surrogate - beta * kl`.
    pub objective: f64,
}

pub fn evaluate_group(
    group: &RolloutGroup,
    cfg: &ObjectiveConfig,
) -> Result<GroupEvaluation, GrpoError> {
    cfg.validate()?;
    for (i, r) in group.rollouts.iter().enumerate() {
        r.validate(i)?;
    }
    let advantages = group.resolved_advantages()?;
    let mut surrogate = 0.0;
    let mut kl = 0.0;
    for (i, r) in group.rollouts.iter().enumerate() {
        let a = advantages[i];
        let mut sum = 0.0;
        for t in r.active() {
            let ratio = (r.logp_cur[t] - r.logp_old[t]).exp();
            sum += clipped_term(ratio, a, cfg.epsilon);
        }
        surrogate += sum / r.active_tokens() as f64;
        kl += kl_penalty(&r.logp_cur, &r.logp_ref, &r.mask, cfg.kl_estimator)
            .map_err(|_| GrpoError::AllTokensMasked(i))?;
    }
    let n = group.rollouts.len() as f64;
    let surrogate = surrogate / n;
    let kl = kl / n;
    Ok(GroupEvaluation {
        advantages,
        surrogate,
        kl,
        objective: surrogate - cfg.beta * kl,
    })
}

pub fn masked_objective(group: &RolloutGroup, cfg: &ObjectiveConfig) -> Result<f64, GrpoError> {
    evaluate_group(group, cfg).map(|e| e.objective)
}

pub fn read_groups<R: BufRead>(reader: R) -> Result<Vec<RolloutGroup>, GrpoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| GrpoError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let g: RolloutGroup = serde_json::from_str(&line).map_err(|e| GrpoError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(g);
    }
    Ok(out)
}
