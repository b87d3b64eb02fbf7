//! Reference implementations written from the formulas, sharing no code
//! with the library beyond its data types.

use std::collections::HashMap;

use neolex_core::dictionary::DictionaryDoc;
use neolex_core::grpo::{KlEstimator, ObjectiveConfig, RolloutGroup};

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 14695981039346656037;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(1099511628211);
    }
    h
}

/// Bucketed character 3-gram counts; strings under three characters count
/// as one gram.
pub fn trigram_vector(text: &str, dim: usize) -> Vec<f64> {
    let chars: Vec<char> = text.chars().collect();
    let mut grams: HashMap<String, u32> = HashMap::new();
    if chars.len() < 3 {
        *grams.entry(text.to_string()).or_default() += 1;
    } else {
        for i in 0..chars.len() - 2 {
            *grams.entry(chars[i..i + 3].iter().collect()).or_default() += 1;
        }
    }
    let mut v = vec![0.0; dim];
    for (g, n) in grams {
        v[(fnv1a(g.as_bytes()) % dim as u64) as usize] += n as f64;
    }
    v
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let mut sq = 0.0;
    for x in &v {
        sq += x * x;
    }
    let n = sq.sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Exhaustive cosine ranking over precomputed document vectors.
pub struct BruteForce {
    dim: usize,
    rows: Vec<(u64, Vec<f64>)>,
}

impl BruteForce {
    pub fn new(docs: &[DictionaryDoc], dim: usize) -> Self {
        let rows = docs
            .iter()
            .map(|d| (d.doc_id, unit(trigram_vector(&d.body, dim))))
            .collect();
        Self { dim, rows }
    }

    /// Every document scored against the query, sorted by score then doc id.
    pub fn ranking(&self, query: &str) -> Vec<(u64, f64)> {
        let q = unit(trigram_vector(query, self.dim));
        let mut all: Vec<(u64, f64)> = self
            .rows
            .iter()
            .map(|(id, v)| {
                let mut s = 0.0;
                for i in 0..self.dim {
                    s += v[i] * q[i];
                }
                (*id, s)
            })
            .collect();
        all.sort_by(|a, b| {
            if a.1 > b.1 {
                std::cmp::Ordering::Less
            } else if a.1 < b.1 {
                std::cmp::Ordering::Greater
            } else {
                a.0.cmp(&b.0)
            }
        });
        all
    }
}

pub fn advantages(rewards: &[f64]) -> Vec<f64> {
    let n = rewards.len() as f64;
    let mut mean = 0.0;
    for r in rewards {
        mean += r;
    }
    mean /= n;
    let mut var = 0.0;
    for r in rewards {
        var += (r - mean) * (r - mean);
    }
    let std = (var / n).sqrt();
    rewards.iter().map(|r| (r - mean) / (std + 1e-6)).collect()
}

/// Objective from dense per-token arrays, zeroing masked positions by
/// multiplication. The clipped minimum is taken in its closed form:
/// `A * min(ratio, 1 + eps)` for `A >= 0`, `A * max(ratio, 1 - eps)` otherwise.
pub fn objective(group: &RolloutGroup, cfg: &ObjectiveConfig) -> f64 {
    let adv = match &group.advantages {
        Some(a) => a.clone(),
        None => advantages(&group.rewards()),
    };
    let n = group.rollouts.len() as f64;
    let mut surr = 0.0;
    let mut kl = 0.0;
    for (r, &a) in group.rollouts.iter().zip(&adv) {
        let m: Vec<f64> = r.mask.iter().map(|&b| b as f64).collect();
        let active: f64 = m.iter().sum();
        let mut s = 0.0;
        let mut k = 0.0;
        for (t, &mt) in m.iter().enumerate() {
            if mt == 0.0 {
                continue;
            }
            let ratio = (r.logp_cur[t] - r.logp_old[t]).exp();
            let term = if a >= 0.0 {
                a * ratio.min(1.0 + cfg.epsilon)
            } else {
                a * ratio.max(1.0 - cfg.epsilon)
            };
            s += mt * term;
            k += mt
                * match cfg.kl_estimator {
                    KlEstimator::K3 => {
                        let x = r.logp_ref[t] - r.logp_cur[t];
                        x.exp() - x - 1.0
                    }
                    KlEstimator::ExactPerToken => r.logp_cur[t] - r.logp_ref[t],
                };
        }
        surr += s / active;
        kl += k / active;
    }
    surr / n - cfg.beta * (kl / n)
}

/// Content of the first `<aligned_word>` region that has a closing tag.
pub fn aligned_span(text: &str) -> Option<String> {
    let open = "<aligned_word>";
    let close = "</aligned_word>";
    let start = text.find(open)? + open.len();
    let end = text[start..].find(close)? + start;
    Some(text[start..end].trim().to_string())
}
