//! Translation difficulty and adaptive rollout budgeting.
//!
//! Each training example gets a group size derived from its difficulty
//! `v = phi_ref - phi_hyp`. Whatever the base sizes leave unused of the batch
//! budget goes to the examples with `v > 0`, proportionally to `v`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RqeError {
    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("budget {budget} is below the base allocation {base}")]
    BudgetTooSmall { budget: u64, base: u64 },
    #[error("invalid budget config: {0}")]
    InvalidConfig(String),
}

/// How the `v < 0` branch of the exponent treats `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPreset {
    /// `r = |gamma| * v + psi`, so harder-than-nothing examples shrink.
    #[default]
    ProseConsistent,
    /// `r = gamma * v + psi` exactly as written.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub psi: f64,
    pub g_min: u32,
    #[serde(rename = "G")]
    pub g_max: u32,
    #[serde(default)]
    pub preset: SignPreset,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            gamma: -5.0,
            psi: 0.0,
            g_min: 4,
            g_max: 8,
            preset: SignPreset::ProseConsistent,
        }
    }
}

impl BudgetConfig {
    pub fn validate(&self) -> Result<(), RqeError> {
        if !(self.alpha.is_finite() && self.gamma.is_finite() && self.psi.is_finite()) {
            return Err(RqeError::InvalidConfig(
                "alpha, gamma and psi must be finite".into(),
            ));
        }
        if self.g_min < 1 || self.g_min > self.g_max {
            return Err(RqeError::InvalidConfig(format!(
                "need 1 <= g_min ({}) <= G ({})",
                self.g_min, self.g_max
            )));
        }
        Ok(())
    }

    /// Per-example cap during redistribution.
    pub fn hard_cap(&self) -> u32 {
        self.g_max.saturating_mul(2)
    }

    pub fn default_budget(&self, batch: usize) -> u64 {
        batch as u64 * self.g_max as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DifficultyScore(f64);

impl DifficultyScore {
    /// Accept a precomputed difficulty.
    pub fn new(v: f64) -> Result<Self, RqeError> {
        if !(-1.0..=1.0).contains(&v) {
            return Err(RqeError::OutOfRange {
                value: v,
                lo: -1.0,
                hi: 1.0,
            });
        }
        Ok(Self(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn unit(x: f64) -> Result<f64, RqeError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(RqeError::OutOfRange {
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(x)
}

pub fn difficulty(phi_ref: f64, phi_hyp: f64) -> Result<DifficultyScore, RqeError> {
    Ok(DifficultyScore(unit(phi_ref)? - unit(phi_hyp)?))
}

pub fn exponent(v: f64, cfg: &BudgetConfig) -> f64 {
    if v >= 0.0 {
        return cfg.alpha * v + cfg.psi;
    }
    match cfg.preset {
        SignPreset::ProseConsistent => cfg.gamma.abs() * v + cfg.psi,
        SignPreset::Literal => cfg.gamma * v + cfg.psi,
    }
}

/// `round_half_up(G * exp(r))` clamped to `[g_min, G]`.
pub fn group_size(v: f64, cfg: &BudgetConfig) -> u32 {
    let raw = cfg.g_max as f64 * exponent(v, cfg).exp();
    let rounded = (raw + 0.5).floor();
    rounded.clamp(cfg.g_min as f64, cfg.g_max as f64) as u32
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetAllocation {
    /// Final rollout counts.
    pub g: Vec<u32>,
    /// Clamped group sizes before redistribution.
    pub base: Vec<u32>,
    /// Batch budget N.
    pub budget: u64,
    /// `N - sum(base)`.
    pub leftover: u64,
    pub leftover_assigned: u64,
}

impl BudgetAllocation {
    pub fn total(&self) -> u64 {
        self.g.iter().map(|&x| x as u64).sum()
    }
}

/// Sum in ascending order so the result does not depend on batch order.
fn order_free_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

/// Real-valued shares of `amount` proportional to `weights`, capped by
/// `room`. Capped entries are frozen and the remainder re-spread over the
/// rest until nothing exceeds its room.
fn water_fill(amount: f64, weights: &[f64], room: &[f64]) -> Vec<f64> {
    let mut share = vec![0.0; weights.len()];
    let mut active: Vec<usize> = (0..weights.len()).collect();
    let mut left = amount;
    while !active.is_empty() && left > 0.0 {
        let total = order_free_sum(active.iter().map(|&i| weights[i]).collect());
        let over: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| left * weights[i] / total >= room[i])
            .collect();
        if over.is_empty() {
            for &i in &active {
                share[i] = left * weights[i] / total;
            }
            break;
        }
        for &i in &over {
            share[i] = room[i];
        }
        left -= order_free_sum(over.iter().map(|&i| room[i]).collect());
        active.retain(|i| !over.contains(i));
    }
    share
}

pub fn allocate_batch(
    vs: &[DifficultyScore],
    cfg: &BudgetConfig,
    budget: u64,
) -> Result<BudgetAllocation, RqeError> {
    cfg.validate()?;
    if vs.is_empty() {
        return Err(RqeError::EmptyBatch);
    }
    let base: Vec<u32> = vs.iter().map(|v| group_size(v.value(), cfg)).collect();
    let base_sum: u64 = base.iter().map(|&x| x as u64).sum();
    if budget < base_sum {
        return Err(RqeError::BudgetTooSmall {
            budget,
            base: base_sum,
        });
    }
    let leftover = budget - base_sum;
    let mut g = base.clone();

    let recipients: Vec<usize> = (0..vs.len()).filter(|&i| vs[i].value() > 0.0).collect();
    let cap = cfg.hard_cap();
    let room: Vec<u64> = recipients.iter().map(|&i| (cap - base[i]) as u64).collect();
    let to_assign = leftover.min(room.iter().sum());
    if to_assign == 0 {
        return Ok(BudgetAllocation {
            g,
            base,
            budget,
            leftover,
            leftover_assigned: 0,
        });
    }

    let weights: Vec<f64> = recipients.iter().map(|&i| vs[i].value()).collect();
    let room_f: Vec<f64> = room.iter().map(|&r| r as f64).collect();
    let shares = water_fill(to_assign as f64, &weights, &room_f);

    // largest remainder
    let mut extra: Vec<u64> = shares
        .iter()
        .zip(&room)
        .map(|(s, &r)| (s.floor() as u64).min(r))
        .collect();
    let mut given: u64 = extra.iter().sum();
    let mut order: Vec<usize> = (0..recipients.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa)
            .then(weights[b].total_cmp(&weights[a]))
            .then(recipients[a].cmp(&recipients[b]))
    });
    while given < to_assign {
        let before = given;
        for &k in &order {
            if given == to_assign {
                break;
            }
            if extra[k] < room[k] {
                extra[k] += 1;
                given += 1;
            }
        }
        if given == before {
            break;
        }
    }
    for (k, &i) in recipients.iter().enumerate() {
        g[i] += extra[k] as u32;
    }
    Ok(BudgetAllocation {
        g,
        base,
        budget,
        leftover,
        leftover_assigned: given,
    })
}
