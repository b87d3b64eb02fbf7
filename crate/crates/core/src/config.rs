//! Harness configuration: a TOML file layered over built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::TurnLimits;
use crate::grpo::ObjectiveConfig;
use crate::lang::Lang;
use crate::reward::{FuzzyVariant, IndelMatcher, RewardMode, RewardWeights};
use crate::rqe::BudgetConfig;
use crate::wiktionary::{CleanConfig, SplitPlan, SplitSizes};

pub const DEFAULT_TOML: &str = include_str!("../config/default.toml");

/// Environment variables that may replace endpoint URLs.
pub const ENDPOINT_ENV: [(&str, &str); 4] = [
    ("llm", "NEOLEX_LLM_URL"),
    ("embedder", "NEOLEX_EMBEDDER_URL"),
    ("scorer", "NEOLEX_SCORER_URL"),
    ("judge", "NEOLEX_JUDGE_URL"),
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub dump: Option<PathBuf>,
    pub splits: Option<PathBuf>,
    pub docs: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub llm_script: Option<PathBuf>,
    pub align_script: Option<PathBuf>,
    pub judge_script: Option<PathBuf>,
}

impl PathsConfig {
    pub fn resolve_against(&mut self, base: &Path) {
        for p in [
            &mut self.dump,
            &mut self.splits,
            &mut self.docs,
            &mut self.index,
            &mut self.llm_script,
            &mut self.align_script,
            &mut self.judge_script,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub seed: u64,
    pub train_targets: Vec<Lang>,
    pub reference_free_targets: Vec<Lang>,
    pub sizes: SplitSizes,
    pub filter: CleanConfig,
}

impl IngestConfig {
    pub fn plan(&self) -> SplitPlan {
        SplitPlan {
            sizes: self.sizes,
            seed: self.seed,
            train_targets: self.train_targets.clone(),
            reference_free_targets: self.reference_free_targets.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalConfig {
    /// `hashed-trigram` or `http`.
    pub provider: String,
    pub dim: usize,
    pub cache_capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub reward_mode: RewardMode,
    pub fuzzy_variant: FuzzyVariant,
    pub fuzzy_threshold: u8,
}

impl MetricsConfig {
    pub fn matcher(&self) -> IndelMatcher {
        IndelMatcher {
            variant: self.fuzzy_variant,
            threshold: self.fuzzy_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    /// Empty means not configured.
    pub url: String,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl Endpoint {
    pub fn is_set(&self) -> bool {
        !self.url.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsConfig {
    /// Use the built-in hash scorer instead of the scorer endpoint.
    pub stub_scorer: bool,
    pub judge_enabled: bool,
    pub llm: Endpoint,
    pub embedder: Endpoint,
    pub scorer: Endpoint,
    pub judge: Endpoint,
}

impl BackendsConfig {
    fn endpoint_mut(&mut self, name: &str) -> &mut Endpoint {
        match name {
            "llm" => &mut self.llm,
            "embedder" => &mut self.embedder,
            "scorer" => &mut self.scorer,
            _ => &mut self.judge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeConfig {
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub paths: PathsConfig,
    pub ingest: IngestConfig,
    pub retrieval: RetrievalConfig,
    pub limits: TurnLimits,
    pub generation: GenerationConfig,
    pub weights: RewardWeights,
    pub metrics: MetricsConfig,
    pub budget: BudgetConfig,
    pub grpo: ObjectiveConfig,
    pub backends: BackendsConfig,
    pub runtime: RuntimeConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        toml::from_str(DEFAULT_TOML).expect("built-in default config is valid")
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn leaves(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, toml::Value>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                leaves(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

/// A validated configuration plus the keys that differ from the defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: HarnessConfig,
    pub overrides: Vec<String>,
}

impl HarnessConfig {
    /// Layer `text` over the defaults.
    pub fn from_toml_str(text: &str) -> Result<ResolvedConfig, ConfigError> {
        let mut base: toml::Value =
            toml::from_str(DEFAULT_TOML).expect("built-in default config is valid");
        let user: toml::Value =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        merge(&mut base, user);
        let config: HarnessConfig = base
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        let overrides = config.overrides();
        Ok(ResolvedConfig { config, overrides })
    }

    /// Read a config file; relative `[paths]` entries are taken relative to
    /// the file's directory. `None` yields the defaults.
    pub fn load(path: Option<&Path>) -> Result<ResolvedConfig, ConfigError> {
        let Some(p) = path else {
            return Self::from_toml_str("");
        };
        let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.to_path_buf(),
            source,
        })?;
        let mut resolved = Self::from_toml_str(&text)?;
        let base = p.parent().unwrap_or(Path::new(""));
        resolved.config.paths.resolve_against(base);
        Ok(resolved)
    }

    /// Replace endpoint URLs from the environment. Nothing else can be set
    /// this way.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Vec<String> {
        let mut applied = Vec::new();
        for (name, var) in ENDPOINT_ENV {
            if let Some(url) = get(var).filter(|u| !u.trim().is_empty()) {
                self.backends.endpoint_mut(name).url = url;
                applied.push(format!("backends.{name}.url"));
            }
        }
        applied
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.weights.validate().map_err(|e| invalid(&e))?;
        self.budget.validate().map_err(|e| invalid(&e))?;
        self.limits.validate().map_err(|e| invalid(&e))?;
        self.grpo.validate().map_err(|e| invalid(&e))?;
        if self.metrics.fuzzy_threshold > 100 {
            return Err(ConfigError::Invalid(
                "fuzzy_threshold must be at most 100".into(),
            ));
        }
        if !(0.0..=2.0).contains(&self.generation.temperature)
            || !(0.0..=1.0).contains(&self.generation.top_p)
        {
            return Err(ConfigError::Invalid(
                "temperature or top_p out of range".into(),
            ));
        }
        if self.runtime.workers == 0
            || self.retrieval.dim == 0
            || self.retrieval.cache_capacity == 0
        {
            return Err(ConfigError::Invalid(
                "workers, retrieval.dim and retrieval.cache_capacity must be positive".into(),
            ));
        }
        if !matches!(self.retrieval.provider.as_str(), "hashed-trigram" | "http") {
            return Err(ConfigError::Invalid(format!(
                "unknown embedding provider {:?}",
                self.retrieval.provider
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the resolved configuration, hex-encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Dotted keys whose value differs from the defaults.
    pub fn overrides(&self) -> Vec<String> {
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        leaves(
            "",
            &toml::Value::try_from(HarnessConfig::default()).expect("serializes"),
            &mut a,
        );
        leaves(
            "",
            &toml::Value::try_from(self).expect("serializes"),
            &mut b,
        );
        b.into_iter()
            .filter(|(k, v)| a.get(k) != Some(v))
            .map(|(k, _)| k)
            .collect()
    }

    /// Settings still at a default that is our own choice rather than a
    /// published value, as `key = value`.
    pub fn assumed_defaults(&self) -> Vec<String> {
        let d = HarnessConfig::default();
        [
            ("weights.sigma", self.weights.sigma, d.weights.sigma),
            ("grpo.epsilon", self.grpo.epsilon, d.grpo.epsilon),
            ("grpo.beta", self.grpo.beta, d.grpo.beta),
        ]
        .into_iter()
        .filter(|(_, v, dv)| v == dv)
        .map(|(k, v, _)| format!("{k} = {v}"))
        .collect()
    }
}
