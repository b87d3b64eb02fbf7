use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PipelineError, Stage};
use crate::agent::{render_agent_prompt, run_agent, GenerationRequest, LlmBackend};
use crate::config::HarnessConfig;
use crate::dictionary::Retriever;
use crate::lang::Lang;
use crate::reward::{
    format_indicator, neologism_reward, parse_judge_score, query_relatedness, render_judge_prompt,
    score_example, total_reward, JudgeFields, JudgeKind, MetricReport, MetricScores,
    RewardBreakdown, RewardInputs, SpanSet, SuffixLemmatizer,
};
use crate::scorer::{neural_reward_for, QeScorer};
use crate::wiktionary::ExamplePair;

const JUDGE_MAX_TOKENS: usize = 512;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JudgeScores {
    pub gemba: Option<f64>,
    pub neologism_aware: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub index: usize,
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub src: String,
    /// `None` when the transcript has no usable translation.
    pub hyp: Option<String>,
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub neologism: String,
    pub spans: Vec<String>,
    /// `None` when the agent run itself failed.
    pub search_turns: Option<usize>,
    pub queries: Vec<String>,
    pub budget_exhausted: bool,
    pub format: u8,
    pub metrics: Option<MetricScores>,
    pub rewards: Option<RewardBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<JudgeScores>,
    /// Set when any backend call for this row failed.
    pub degraded: bool,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Corpus metric percentages over rows with spans.
    pub exact: f64,
    pub fuzzy: f64,
    pub lem_exact: f64,
    pub lem_fuzzy: f64,
    pub scored: usize,
    pub excluded: usize,
    pub fuzzy_threshold: u8,
    pub degraded: usize,
    pub format_rate: f64,
    /// Mean total reward over rows with rewards.
    pub mean_reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gemba: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neologism_judge: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

impl Aggregates {
    pub fn from_rows(rows: &[EvalRow], fuzzy_threshold: u8) -> Self {
        let m = MetricReport::aggregate(rows.iter().map(|r| r.metrics).collect(), fuzzy_threshold);
        let judged = rows.iter().filter_map(|r| r.judge);
        Self {
            exact: m.exact,
            fuzzy: m.fuzzy,
            lem_exact: m.lem_exact,
            lem_fuzzy: m.lem_fuzzy,
            scored: m.scored,
            excluded: m.excluded,
            fuzzy_threshold,
            degraded: rows.iter().filter(|r| r.degraded).count(),
            format_rate: mean(rows.iter().map(|r| r.format as f64)).unwrap_or(0.0),
            mean_reward: mean(rows.iter().filter_map(|r| r.rewards).map(|b| b.total)),
            gemba: mean(judged.clone().filter_map(|j| j.gemba)),
            neologism_judge: mean(judged.filter_map(|j| j.neologism_aware)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub examples: usize,
    pub config_fingerprint: String,
    pub overrides: Vec<String>,
    /// Unpublished defaults in effect.
    pub assumed: Vec<String>,
    pub aggregates: Aggregates,
    /// Completed transcripts by number of searches answered.
    pub turn_histogram: BTreeMap<usize, usize>,
    pub rows: Vec<EvalRow>,
}

fn histogram(rows: &[EvalRow], max_turns: usize) -> BTreeMap<usize, usize> {
    let mut h: BTreeMap<usize, usize> = (0..=max_turns).map(|t| (t, 0)).collect();
    for t in rows.iter().filter_map(|r| r.search_turns) {
        *h.entry(t).or_default() += 1;
    }
    h
}

impl EvalReport {
    /// Aggregates and histogram rebuilt from the rows.
    pub fn recompute(
        &self,
        fuzzy_threshold: u8,
        max_turns: usize,
    ) -> (Aggregates, BTreeMap<usize, usize>) {
        (
            Aggregates::from_rows(&self.rows, fuzzy_threshold),
            histogram(&self.rows, max_turns),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let a = &self.aggregates;
        let mut s = String::new();
        let _ = write!(
            s,
            "{:>8} {:>8} {:>10} {:>10} {:>8}",
            "EXACT", "FUZZY", "LEM-EXACT", "LEM-FUZZY", "REWARD"
        );
        let judged = a.gemba.is_some() || a.neologism_judge.is_some();
        if judged {
            let _ = write!(s, " {:>8} {:>8}", "GEMBA", "NEO-JUDGE");
        }
        s.push('\n');
        let _ = write!(
            s,
            "{:>8.2} {:>8.2} {:>10.2} {:>10.2} {:>8.4}",
            a.exact,
            a.fuzzy,
            a.lem_exact,
            a.lem_fuzzy,
            a.mean_reward.unwrap_or(0.0)
        );
        if judged {
            let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
            let _ = write!(s, " {:>8} {:>8}", f(a.gemba), f(a.neologism_judge));
        }
        s.push('\n');
        let turns: Vec<String> = self
            .turn_histogram
            .iter()
            .map(|(t, n)| format!("{t}:{n}"))
            .collect();
        let _ = writeln!(s, "search turns {}", turns.join(" "));
        let _ = writeln!(s, "examples {} degraded {}", self.examples, a.degraded);
        if !self.assumed.is_empty() {
            let _ = writeln!(s, "assumed {}", self.assumed.join(", "));
        }
        s
    }
}

pub struct EvalContext<'a> {
    pub config: &'a HarnessConfig,
    pub overrides: Vec<String>,
    pub llm: &'a dyn LlmBackend,
    pub retriever: &'a dyn Retriever,
    pub scorer: &'a dyn QeScorer,
    pub judge: Option<&'a dyn LlmBackend>,
}

fn judge_once(
    judge: &dyn LlmBackend,
    kind: JudgeKind,
    fields: &JudgeFields,
) -> Result<f64, String> {
    let prompt = render_judge_prompt(kind, fields).map_err(|e| e.to_string())?;
    let out = judge
        .generate(&GenerationRequest {
            prompt,
            partial_response: String::new(),
            stop: vec![],
            max_tokens: JUDGE_MAX_TOKENS,
        })
        .map_err(|e| e.to_string())?;
    parse_judge_score(kind, &out.text).map_err(|e| e.to_string())
}

fn eval_one(ctx: &EvalContext<'_>, index: usize, pair: &ExamplePair) -> EvalRow {
    let cfg = ctx.config;
    let reference = Some(pair.ref_translation.clone()).filter(|r| !r.trim().is_empty());
    let mut row = EvalRow {
        index,
        src_lang: pair.src_lang,
        tgt_lang: pair.tgt_lang,
        src: pair.src_text.clone(),
        hyp: None,
        reference: reference.clone(),
        neologism: pair.neologism.clone(),
        spans: pair.spans.clone(),
        search_turns: None,
        queries: vec![],
        budget_exhausted: false,
        format: 0,
        metrics: None,
        rewards: None,
        judge: ctx.judge.map(|_| JudgeScores::default()),
        degraded: false,
        errors: vec![],
    };

    let transcript =
        render_agent_prompt(pair.src_lang.code(), pair.tgt_lang.code(), &pair.src_text)
            .and_then(|prompt| run_agent(ctx.llm, ctx.retriever, &cfg.limits, &prompt));
    let t = match transcript {
        Ok(t) => t,
        Err(e) => {
            row.degraded = true;
            row.errors.push(format!("agent: {e}"));
            return row;
        }
    };
    row.search_turns = Some(t.search_turns_used);
    row.queries = t.queries.clone();
    row.budget_exhausted = t.budget_exhausted;
    row.format = format_indicator(&t);
    row.hyp = t.translation();

    let hyp = row.hyp.clone().unwrap_or_default();
    let spans = SpanSet::new(&pair.spans);
    let matcher = cfg.metrics.matcher();
    let lemmatizer = SuffixLemmatizer;
    row.metrics = score_example(&hyp, &spans, &lemmatizer, &matcher, pair.tgt_lang);

    let r_neural = if row.format == 0 {
        Ok(0.0)
    } else {
        neural_reward_for(
            ctx.scorer,
            &pair.src_text,
            &hyp,
            reference.as_deref(),
            cfg.weights.delta,
        )
    };
    match r_neural {
        Ok(r_neural) => {
            let inputs = RewardInputs {
                r_neo: neologism_reward(&hyp, &spans, &lemmatizer, pair.tgt_lang),
                r_neural,
                r_q: query_relatedness(&t.queries, &pair.neologism, &matcher),
                format: row.format,
            };
            match total_reward(&inputs, &cfg.weights, cfg.metrics.reward_mode) {
                Ok(b) => row.rewards = Some(b),
                Err(e) => row.errors.push(format!("reward: {e}")),
            }
        }
        Err(e) => {
            row.degraded = true;
            row.errors.push(format!("scorer: {e}"));
        }
    }

    if let (Some(judge), Some(hyp), Some(reference)) =
        (ctx.judge, row.hyp.as_ref(), reference.as_ref())
    {
        let fields = JudgeFields {
            source_lang: pair.src_lang.name().into(),
            target_lang: pair.tgt_lang.name().into(),
            source: pair.src_text.clone(),
            reference: reference.clone(),
            candidate: hyp.clone(),
            neologism: pair.neologism.clone(),
            neologism_meaning: pair.glosses.join("; "),
        };
        let mut scores = JudgeScores::default();
        for kind in [JudgeKind::Gemba, JudgeKind::NeologismAware] {
            match judge_once(judge, kind, &fields) {
                Ok(v) => match kind {
                    JudgeKind::Gemba => scores.gemba = Some(v),
                    JudgeKind::NeologismAware => scores.neologism_aware = Some(v),
                },
                Err(e) => {
                    row.degraded = true;
                    row.errors.push(format!("judge: {e}"));
                }
            }
        }
        row.judge = Some(scores);
    }
    row
}

/// Run the agent over `pairs` on a pool of `runtime.workers` threads and
/// assemble the report in input order.
pub fn evaluate_pairs(
    ctx: &EvalContext<'_>,
    split: &str,
    pairs: &[ExamplePair],
) -> Result<EvalReport, PipelineError> {
    let cfg = ctx.config;
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.runtime.workers)
        .build()
        .map_err(|e| PipelineError::invariant(Stage::Evaluate, e))?;
    let rows: Vec<EvalRow> = pool.install(|| {
        pairs
            .par_iter()
            .enumerate()
            .map(|(i, p)| eval_one(ctx, i, p))
            .collect()
    });
    let aggregates = Aggregates::from_rows(&rows, cfg.metrics.fuzzy_threshold);
    Ok(EvalReport {
        split: split.to_string(),
        examples: rows.len(),
        config_fingerprint: cfg.fingerprint(),
        overrides: ctx.overrides.clone(),
        assumed: cfg.assumed_defaults(),
        aggregates,
        turn_histogram: histogram(&rows, cfg.limits.max_search_turns),
        rows,
    })
}
