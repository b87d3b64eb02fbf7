//! Indel-based similarity scores on a 0-100 scale.

use serde::{Deserialize, Serialize};

pub trait FuzzyMatcher: Send + Sync {
    /// Similarity of `a` and `b`, 0 to 100.
    fn score(&self, a: &str, b: &str) -> u8;
    fn threshold(&self) -> u8;

    fn matches(&self, a: &str, b: &str) -> bool {
        self.score(a, b) >= self.threshold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzyVariant {
    /// Best window of the longer string against the shorter one.
    #[default]
    PartialRatio,
    /// Whole-string ratio.
    Ratio,
}

/// Length of the longest common subsequence, in characters.
pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `2 * lcs / (|a| + |b|)`, i.e. one minus the normalized indel distance.
pub fn indel_ratio(a: &[char], b: &[char]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * lcs_len(a, b) as f64 / total as f64
}

fn to_score(r: f64) -> u8 {
    (100.0 * r).round_ties_even() as u8
}

pub fn ratio(a: &str, b: &str) -> u8 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    to_score(indel_ratio(&a, &b))
}

/// Maximum ratio between the shorter string and every window of the same
/// length in the longer one. Case-sensitive. An empty string scores 0
/// against anything non-empty.
pub fn partial_ratio(a: &str, b: &str) -> u8 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return if long.is_empty() { 100 } else { 0 };
    }
    let mut best = 0.0f64;
    for w in long.windows(short.len()) {
        let r = indel_ratio(&short, w);
        if r > best {
            best = r;
            if best >= 1.0 {
                break;
            }
        }
    }
    to_score(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndelMatcher {
    pub variant: FuzzyVariant,
    pub threshold: u8,
}

impl Default for IndelMatcher {
    fn default() -> Self {
        Self {
            variant: FuzzyVariant::PartialRatio,
            threshold: 80,
        }
    }
}

impl FuzzyMatcher for IndelMatcher {
    /// Containment of one string in the other always scores 100.
    fn score(&self, a: &str, b: &str) -> u8 {
        if !a.is_empty() && !b.is_empty() && (a.contains(b) || b.contains(a)) {
            return 100;
        }
        match self.variant {
            FuzzyVariant::PartialRatio => partial_ratio(a, b),
            FuzzyVariant::Ratio => ratio(a, b),
        }
    }

    fn threshold(&self) -> u8 {
        self.threshold
    }
}
