//! Rollout rewards and evaluation metrics.

mod fuzzy;
mod judge;
mod lemma;
mod metrics;

use serde::{Deserialize, Serialize};

pub use fuzzy::{
    indel_ratio, lcs_len, partial_ratio, ratio, FuzzyMatcher, FuzzyVariant, IndelMatcher,
};
pub use judge::{
    parse_judge_score, render_judge_prompt, JudgeFields, JudgeKind, GEMBA_TEMPLATE,
    NEOLOGISM_JUDGE_TEMPLATE,
};
pub use lemma::{english_lemma, lemma_contains, tokenize, Lemmatizer, SuffixLemmatizer};
pub use metrics::{
    metric_exact, metric_fuzzy, metric_lem_exact, metric_lem_fuzzy, neologism_reward,
    score_example, MetricReport, MetricScores, SpanSet,
};

use crate::agent::{extract_translation, Segment, Transcript};
use crate::template::TemplateError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("{name} = {value} is outside [0, 1]")]
    ScoreOutOfRange { name: &'static str, value: f64 },
    #[error("invalid reward weights: {0}")]
    WeightsInvalid(String),
    #[error("could not parse a judge score from {0:?}")]
    UnparsableScore(String),
    #[error("judge prompt field {0} is empty")]
    MissingJudgeField(&'static str),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub lambda: f64,
    pub delta: f64,
    pub sigma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            delta: 0.5,
            sigma: 0.1,
        }
    }
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), RewardError> {
        if !in_unit(self.lambda) || !in_unit(self.delta) || !(0.0..1.0).contains(&self.sigma) {
            return Err(RewardError::WeightsInvalid(format!(
                "need lambda, delta in [0,1] and sigma in [0,1), got {self:?}"
            )));
        }
        if self.lambda + self.sigma > 1.0 {
            return Err(RewardError::WeightsInvalid(format!(
                "lambda + sigma = {} exceeds 1",
                self.lambda + self.sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    Outcome,
    Process,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardInputs {
    pub r_neo: f64,
    pub r_neural: f64,
    pub r_q: f64,
    pub format: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_neo: f64,
    pub r_neural: f64,
    pub r_q: f64,
    pub format: u8,
    pub total: f64,
}

fn check(name: &'static str, value: f64) -> Result<f64, RewardError> {
    if in_unit(value) {
        Ok(value)
    } else {
        Err(RewardError::ScoreOutOfRange { name, value })
    }
}

/// 1 iff the transcript ends in a non-blank translation block.
pub fn format_indicator(transcript: &Transcript) -> u8 {
    format_indicator_segments(&transcript.segments)
}

pub fn format_indicator_segments(segments: &[Segment]) -> u8 {
    u8::from(extract_translation(segments).is_some())
}

/// `delta * s_ref_based + (1 - delta) * s_ref_free`.
pub fn neural_reward(s_xcomet: f64, s_cometkiwi: f64, delta: f64) -> Result<f64, RewardError> {
    let a = check("s_xcomet", s_xcomet)?;
    let b = check("s_cometkiwi", s_cometkiwi)?;
    if !in_unit(delta) {
        return Err(RewardError::WeightsInvalid(format!("delta = {delta}")));
    }
    Ok(delta * a + (1.0 - delta) * b)
}

/// Outcome: `format * (lambda r_neo + (1 - lambda) r_neural)`.
/// Process: `format * (lambda r_neo + sigma r_q + (1 - lambda - sigma) r_neural)`.
pub fn total_reward(
    inputs: &RewardInputs,
    weights: &RewardWeights,
    mode: RewardMode,
) -> Result<RewardBreakdown, RewardError> {
    weights.validate()?;
    let r_neo = check("r_neo", inputs.r_neo)?;
    let r_neural = check("r_neural", inputs.r_neural)?;
    let r_q = check("r_q", inputs.r_q)?;
    if inputs.format > 1 {
        return Err(RewardError::ScoreOutOfRange {
            name: "format",
            value: inputs.format as f64,
        });
    }
    let RewardWeights { lambda, sigma, .. } = *weights;
    let mixed = match mode {
        RewardMode::Outcome => lambda * r_neo + (1.0 - lambda) * r_neural,
        RewardMode::Process => lambda * r_neo + sigma * r_q + (1.0 - lambda - sigma) * r_neural,
    };
    let total = if inputs.format == 0 {
        0.0
    } else {
        // weights sum to one; absorb rounding just above 1
        mixed.clamp(0.0, 1.0)
    };
    Ok(RewardBreakdown {
        r_neo,
        r_neural,
        r_q,
        format: inputs.format,
        total,
    })
}

/// Share of queries that mention the neologism, either verbatim or above
/// the matcher's threshold. No queries scores 0.
pub fn query_relatedness(queries: &[String], neologism: &str, matcher: &dyn FuzzyMatcher) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let related = queries
        .iter()
        .filter(|q| q.contains(neologism) || matcher.matches(neologism, q))
        .count();
    related as f64 / queries.len() as f64
}
