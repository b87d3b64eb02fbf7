//! Quality-estimation scorer clients.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::hash::fnv1a64;
use crate::reward::{neural_reward, RewardError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
    #[error("reference-based scoring needs a reference")]
    MissingReference,
    #[error("scorer returned {0}, outside [0, 1]")]
    OutOfRange(f64),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    ReferenceBased,
    ReferenceFree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub src: String,
    pub hyp: String,
    #[serde(rename = "ref", skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub mode: ScoreMode,
}

impl ScoreRequest {
    pub fn reference_based(src: &str, hyp: &str, reference: &str) -> Self {
        Self {
            src: src.into(),
            hyp: hyp.into(),
            reference: Some(reference.into()),
            mode: ScoreMode::ReferenceBased,
        }
    }

    pub fn reference_free(src: &str, hyp: &str) -> Self {
        Self {
            src: src.into(),
            hyp: hyp.into(),
            reference: None,
            mode: ScoreMode::ReferenceFree,
        }
    }

    fn check(&self) -> Result<(), ScorerError> {
        if self.mode == ScoreMode::ReferenceBased && self.reference.is_none() {
            return Err(ScorerError::MissingReference);
        }
        Ok(())
    }
}

pub trait QeScorer: Send + Sync {
    fn model_id(&self) -> String;
    /// A score in [0, 1]; anything else is rejected.
    fn score(&self, request: &ScoreRequest) -> Result<f64, ScorerError>;
}

/// Offline deterministic scorer: `fnv1a64(src ‖ hyp) mod 10^6 / 10^6`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubScorer;

impl StubScorer {
    pub fn stub_score(src: &str, hyp: &str) -> f64 {
        let mut bytes = Vec::with_capacity(src.len() + hyp.len());
        bytes.extend_from_slice(src.as_bytes());
        bytes.extend_from_slice(hyp.as_bytes());
        (fnv1a64(&bytes) % 1_000_000) as f64 / 1_000_000.0
    }
}

impl QeScorer for StubScorer {
    fn model_id(&self) -> String {
        "stub".into()
    }

    fn score(&self, request: &ScoreRequest) -> Result<f64, ScorerError> {
        request.check()?;
        Ok(Self::stub_score(&request.src, &request.hyp))
    }
}

#[derive(Debug, Deserialize)]
struct ScoreResponse {
    score: f64,
}

/// Client for `POST /score`.
pub struct HttpScorer {
    url: String,
    agent: ureq::Agent,
    retries: u32,
}

impl HttpScorer {
    pub fn new(base_url: &str, timeout: Duration, retries: u32) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            url: format!("{}/score", base_url.trim_end_matches('/')),
            agent,
            retries,
        }
    }

    fn call(&self, request: &ScoreRequest) -> Result<ScoreResponse, ScorerError> {
        self.agent
            .post(&self.url)
            .send_json(request)
            .and_then(|mut r| r.body_mut().read_json::<ScoreResponse>())
            .map_err(|e| ScorerError::Unavailable(e.to_string()))
    }
}

impl QeScorer for HttpScorer {
    fn model_id(&self) -> String {
        format!("http:{}", self.url)
    }

    fn score(&self, request: &ScoreRequest) -> Result<f64, ScorerError> {
        request.check()?;
        let mut last = ScorerError::Unavailable("no attempt made".into());
        for attempt in 0..=self.retries {
            match self.call(request) {
                Ok(r) if (0.0..=1.0).contains(&r.score) => return Ok(r.score),
                Ok(r) => return Err(ScorerError::OutOfRange(r.score)),
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "scorer call failed");
                    last = e;
                }
            }
        }
        Err(last)
    }
}

/// Neural reward for one hypothesis: the mixed score when a reference is
/// available, the reference-free score alone otherwise.
pub fn neural_reward_for(
    scorer: &dyn QeScorer,
    src: &str,
    hyp: &str,
    reference: Option<&str>,
    delta: f64,
) -> Result<f64, ScorerError> {
    let free = scorer.score(&ScoreRequest::reference_free(src, hyp))?;
    match reference {
        Some(r) if !r.trim().is_empty() => {
            let based = scorer.score(&ScoreRequest::reference_based(src, hyp, r))?;
            Ok(neural_reward(based, free, delta)?)
        }
        _ => Ok(free),
    }
}
