//! Span-success metrics and their corpus aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::fuzzy::FuzzyMatcher;
use super::lemma::{lemma_contains, Lemmatizer};
use crate::lang::Lang;

/// Deduplicated, non-empty target-side spans.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpanSet {
    spans: Vec<String>,
}

impl SpanSet {
    /// Trims, drops empties and duplicates, keeping first-seen order.
    pub fn new<I, S>(spans: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        for s in spans {
            let s = s.as_ref().trim();
            if !s.is_empty() && !out.iter().any(|x| x == s) {
                out.push(s.to_string());
            }
        }
        Self { spans: out }
    }

    pub fn as_slice(&self) -> &[String] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

fn fraction(spans: &SpanSet, mut hit: impl FnMut(&str) -> bool) -> Option<f64> {
    if spans.is_empty() {
        return None;
    }
    let c = spans.as_slice().iter().filter(|s| hit(s)).count();
    Some(c as f64 / spans.len() as f64)
}

/// Raw substring containment. `None` when `spans` is empty.
pub fn metric_exact(hyp: &str, spans: &SpanSet) -> Option<f64> {
    fraction(spans, |s| hyp.contains(s))
}

pub fn metric_fuzzy(hyp: &str, spans: &SpanSet, matcher: &dyn FuzzyMatcher) -> Option<f64> {
    fraction(spans, |s| matcher.matches(s, hyp))
}

pub fn metric_lem_exact(
    hyp: &str,
    spans: &SpanSet,
    lemmatizer: &dyn Lemmatizer,
    lang: Lang,
) -> Option<f64> {
    let hyp_l = lemmatizer.lemmatize(hyp, lang);
    fraction(spans, |s| {
        lemma_contains(&hyp_l, &lemmatizer.lemmatize(s, lang), lang)
    })
}

pub fn metric_lem_fuzzy(
    hyp: &str,
    spans: &SpanSet,
    lemmatizer: &dyn Lemmatizer,
    matcher: &dyn FuzzyMatcher,
    lang: Lang,
) -> Option<f64> {
    let hyp_l = lemmatizer.lemmatize(hyp, lang);
    fraction(spans, |s| {
        matcher.matches(&lemmatizer.lemmatize(s, lang), &hyp_l)
    })
}

/// The training-time neologism reward: lemma-level containment, with an
/// empty span set scoring 1.
pub fn neologism_reward(
    hyp: &str,
    spans: &SpanSet,
    lemmatizer: &dyn Lemmatizer,
    lang: Lang,
) -> f64 {
    metric_lem_exact(hyp, spans, lemmatizer, lang).unwrap_or(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub exact: f64,
    pub fuzzy: f64,
    pub lem_exact: f64,
    pub lem_fuzzy: f64,
}

/// All four metrics, or `None` for an example without spans.
pub fn score_example(
    hyp: &str,
    spans: &SpanSet,
    lemmatizer: &dyn Lemmatizer,
    matcher: &dyn FuzzyMatcher,
    lang: Lang,
) -> Option<MetricScores> {
    Some(MetricScores {
        exact: metric_exact(hyp, spans)?,
        fuzzy: metric_fuzzy(hyp, spans, matcher)?,
        lem_exact: metric_lem_exact(hyp, spans, lemmatizer, lang)?,
        lem_fuzzy: metric_lem_fuzzy(hyp, spans, lemmatizer, matcher, lang)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Corpus percentages, 0-100.
    pub exact: f64,
    pub fuzzy: f64,
    pub lem_exact: f64,
    pub lem_fuzzy: f64,
    /// Examples contributing to the aggregates.
    pub scored: usize,
    /// Examples skipped for having no spans.
    pub excluded: usize,
    pub fuzzy_threshold: u8,
    pub rows: Vec<Option<MetricScores>>,
}

impl MetricReport {
    pub fn aggregate(rows: Vec<Option<MetricScores>>, fuzzy_threshold: u8) -> Self {
        let scored: Vec<&MetricScores> = rows.iter().flatten().collect();
        let n = scored.len();
        let mean = |f: fn(&MetricScores) -> f64| {
            if n == 0 {
                0.0
            } else {
                100.0 * scored.iter().map(|s| f(s)).sum::<f64>() / n as f64
            }
        };
        Self {
            exact: mean(|s| s.exact),
            fuzzy: mean(|s| s.fuzzy),
            lem_exact: mean(|s| s.lem_exact),
            lem_fuzzy: mean(|s| s.lem_fuzzy),
            scored: n,
            excluded: rows.len() - n,
            fuzzy_threshold,
            rows,
        }
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>8} {:>8} {:>10} {:>10}",
            "EXACT", "FUZZY", "LEM-EXACT", "LEM-FUZZY"
        );
        let _ = writeln!(
            s,
            "{:>8.2} {:>8.2} {:>10.2} {:>10.2}",
            self.exact, self.fuzzy, self.lem_exact, self.lem_fuzzy
        );
        s
    }
}
