//! Acceptance criteria as plain functions. Each returns a short detail line
//! or the first violation found.

use std::collections::BTreeMap;
use std::sync::Arc;

use neolex_core::agent::{extract_translation, parse_transcript, SegmentKind, Transcript};
use neolex_core::config::HarnessConfig;
use neolex_core::dictionary::{
    DictionarySearcher, DocStore, Embedder, FlatIndex, HashedTrigramEmbedder, Retriever,
};
use neolex_core::grpo::{evaluate_group, group_advantages, ObjectiveConfig, RolloutGroup};
use neolex_core::lang::Lang;
use neolex_core::pipeline::run_smoke;
use neolex_core::reward::{
    format_indicator, metric_exact, metric_fuzzy, metric_lem_exact, metric_lem_fuzzy,
    neologism_reward, total_reward, IndelMatcher, RewardInputs, RewardMode, RewardWeights, SpanSet,
    SuffixLemmatizer,
};
use neolex_core::rqe::{allocate_batch, BudgetConfig, DifficultyScore};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Deserialize;

use super::{fixture, gen, oracle, smoke_config};

pub type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn constants() -> Outcome {
    let c = HarnessConfig::default();
    let checks: [(&str, f64, f64); 14] = [
        ("limits.top_k", c.limits.top_k as f64, 5.0),
        (
            "limits.max_search_turns",
            c.limits.max_search_turns as f64,
            3.0,
        ),
        (
            "limits.max_info_chars",
            c.limits.max_info_chars as f64,
            2000.0,
        ),
        (
            "limits.max_response_tokens",
            c.limits.max_response_tokens as f64,
            4096.0,
        ),
        ("weights.lambda", c.weights.lambda, 0.1),
        ("weights.delta", c.weights.delta, 0.5),
        ("budget.alpha", c.budget.alpha, 10.0),
        ("budget.gamma", c.budget.gamma, -5.0),
        ("budget.psi", c.budget.psi, 0.0),
        ("budget.g_min", c.budget.g_min as f64, 4.0),
        ("budget.G", c.budget.g_max as f64, 8.0),
        ("generation.temperature", c.generation.temperature, 0.2),
        ("generation.top_p", c.generation.top_p, 0.95),
        (
            "metrics.fuzzy_threshold",
            c.metrics.fuzzy_threshold as f64,
            80.0,
        ),
    ];
    for (name, got, want) in checks {
        ensure(got == want, || format!("{name} = {got}, want {want}"))?;
    }
    Ok(format!("{} defaults", checks.len()))
}

#[derive(Deserialize)]
pub struct MetricCase {
    pub id: usize,
    pub lang: String,
    pub hyp: String,
    pub spans: Vec<String>,
    pub exact: Option<(usize, usize)>,
    pub fuzzy: Option<(usize, usize)>,
    pub lem_exact: Option<(usize, usize)>,
    pub lem_fuzzy: Option<(usize, usize)>,
}

pub fn metric_cases() -> Vec<MetricCase> {
    let text = std::fs::read_to_string(fixture("metric_cases.json")).expect("metric cases fixture");
    serde_json::from_str(&text).expect("metric cases parse")
}

fn frac(x: Option<(usize, usize)>) -> Option<f64> {
    x.map(|(h, n)| h as f64 / n as f64)
}

pub fn metric_table() -> Outcome {
    let cases = metric_cases();
    ensure(cases.len() == 30, || {
        format!("{} cases, want 30", cases.len())
    })?;
    let m = IndelMatcher::default();
    let l = SuffixLemmatizer;
    let mut bad = Vec::new();
    for c in &cases {
        let lang = Lang::parse(&c.lang).map_err(|e| e.to_string())?;
        let s = SpanSet::new(&c.spans);
        let got = [
            metric_exact(&c.hyp, &s),
            metric_fuzzy(&c.hyp, &s, &m),
            metric_lem_exact(&c.hyp, &s, &l, lang),
            metric_lem_fuzzy(&c.hyp, &s, &l, &m, lang),
        ];
        let want = [
            frac(c.exact),
            frac(c.fuzzy),
            frac(c.lem_exact),
            frac(c.lem_fuzzy),
        ];
        for (k, name) in ["exact", "fuzzy", "lem_exact", "lem_fuzzy"]
            .iter()
            .enumerate()
        {
            if got[k] != want[k] {
                bad.push(format!(
                    "case {} {name}: got {:?} want {:?}",
                    c.id, got[k], want[k]
                ));
            }
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok(format!("{} cases x 4 metrics", cases.len()))
}

pub fn check_gating(
    t: &gen::GenTranscript,
    inputs: RewardInputs,
    mode: RewardMode,
) -> Result<(), String> {
    let parsed = Transcript::from_text("", &t.text);
    let format = format_indicator(&parsed);
    ensure(format == t.format, || {
        format!("format {format}, constructed {} for {:?}", t.format, t.text)
    })?;
    let b = total_reward(
        &RewardInputs { format, ..inputs },
        &RewardWeights::default(),
        mode,
    )
    .map_err(|e| e.to_string())?;
    ensure((b.total == 0.0) == (format == 0), || {
        format!("total {} with format {format} for {:?}", b.total, t.text)
    })?;
    ensure((0.0..=1.0).contains(&b.total), || {
        format!("total {} outside [0,1]", b.total)
    })
}

pub fn reward_gating(seed: u64, n: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let mut formatted = 0;
    for _ in 0..n {
        let t = gen::transcript(&mut rng);
        let inputs = RewardInputs {
            r_neo: rng.random(),
            r_neural: 1.0 - rng.random::<f64>(),
            r_q: rng.random(),
            format: 0,
        };
        let mode = if rng.random_bool(0.5) {
            RewardMode::Outcome
        } else {
            RewardMode::Process
        };
        check_gating(&t, inputs, mode)?;
        formatted += t.format as usize;
    }
    Ok(format!("{n} transcripts, {formatted} with format 1"))
}

pub fn check_reward_agreement(hyp: &str, spans: &[String], lang: Lang) -> Result<(), String> {
    let s = SpanSet::new(spans);
    ensure(!s.is_empty(), || "empty span set".into())?;
    let l = SuffixLemmatizer;
    let r = neologism_reward(hyp, &s, &l, lang);
    let m = metric_lem_exact(hyp, &s, &l, lang);
    ensure(m == Some(r), || {
        format!("reward {r} vs metric {m:?} for {hyp:?} / {spans:?}")
    })
}

pub fn reward_agreement(seed: u64, n: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let mut hits = 0.0;
    for _ in 0..n {
        let (hyp, spans) = gen::hyp_and_spans(&mut rng);
        let lang = if rng.random_bool(0.5) {
            Lang::En
        } else {
            gen::lang(&mut rng)
        };
        check_reward_agreement(&hyp, &spans, lang)?;
        hits += neologism_reward(&hyp, &SpanSet::new(&spans), &SuffixLemmatizer, lang);
    }
    Ok(format!("{n} instances, mean reward {:.3}", hits / n as f64))
}

pub fn check_ranking(
    index: &FlatIndex,
    oracle: &oracle::BruteForce,
    emb: &HashedTrigramEmbedder,
    q: &str,
    k: usize,
) -> Result<(), String> {
    let got = index.search(emb, q, k).map_err(|e| e.to_string())?;
    let want = oracle.ranking(q);
    let want = &want[..k.min(want.len())];
    ensure(got.len() == want.len(), || {
        format!("{} hits, want {}", got.len(), want.len())
    })?;
    for (i, (h, w)) in got.iter().zip(want).enumerate() {
        ensure(h.doc_id == w.0, || {
            format!("query {q:?} rank {}: doc {} want {}", i + 1, h.doc_id, w.0)
        })?;
        ensure((h.score - w.1).abs() <= 1e-9, || {
            format!(
                "query {q:?} doc {}: score {} want {}",
                h.doc_id, h.score, w.1
            )
        })?;
        ensure(h.rank == i + 1, || {
            format!("rank field {} at position {}", h.rank, i + 1)
        })?;
    }
    Ok(())
}

pub fn retrieval(seed: u64, n_docs: usize, n_queries: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let docs = gen::corpus(&mut rng, n_docs);
    let emb = HashedTrigramEmbedder::default();
    let index = FlatIndex::build(&docs, &emb).map_err(|e| e.to_string())?;
    let searcher = DictionarySearcher::new(
        Arc::new(index.clone()),
        Arc::new(DocStore::new(docs.clone())),
        Arc::new(emb.clone()),
    )
    .map_err(|e| e.to_string())?;
    let brute = oracle::BruteForce::new(&docs, emb.dim());
    let limits = HarnessConfig::default().limits;
    let mut longest = 0;
    for _ in 0..n_queries {
        let q = gen::query(&mut rng, &docs);
        check_ranking(&index, &brute, &emb, &q, limits.top_k)?;
        check_ranking(&index, &brute, &emb, &q, docs.len())?;
        let block = searcher
            .retrieve(&q, limits.top_k, limits.max_info_chars)
            .map_err(|e| e.to_string())?;
        let chars = block.chars().count();
        ensure(chars <= limits.max_info_chars, || {
            format!("block of {chars} chars for {q:?}")
        })?;
        longest = longest.max(chars);
    }
    Ok(format!(
        "{n_docs} docs, {n_queries} queries, longest block {longest} chars"
    ))
}

pub fn check_allocation(vs: &[f64], budget: u64, cfg: &BudgetConfig) -> Result<(), String> {
    let scores: Vec<DifficultyScore> = vs
        .iter()
        .map(|&v| DifficultyScore::new(v).unwrap())
        .collect();
    let a = allocate_batch(&scores, cfg, budget).map_err(|e| e.to_string())?;
    let (lo, hi, cap) = (cfg.g_min, cfg.g_max, cfg.g_max * 2);
    let mut room = 0u64;
    for (i, &v) in vs.iter().enumerate() {
        let (b, g) = (a.base[i], a.g[i]);
        ensure((lo..=hi).contains(&b), || {
            format!("base {b} outside [{lo},{hi}] for v={v}")
        })?;
        ensure(g >= b && g <= cap, || {
            format!("g {g} outside [{b},{cap}] for v={v}")
        })?;
        if v > 0.0 {
            room += (cap - b) as u64;
        } else {
            ensure(g == b, || format!("non-recipient v={v} changed {b} -> {g}"))?;
        }
    }
    ensure(a.total() <= budget, || {
        format!("sum {} exceeds budget {budget}", a.total())
    })?;
    ensure(a.leftover_assigned == a.leftover.min(room), || {
        format!(
            "assigned {} of leftover {} with room {room}",
            a.leftover_assigned, a.leftover
        )
    })?;
    ensure(
        a.total() == a.base.iter().map(|&x| x as u64).sum::<u64>() + a.leftover_assigned,
        || "total does not equal base plus assigned".into(),
    )?;
    let mut by_v: BTreeMap<u64, (u32, u32)> = BTreeMap::new();
    for (i, &v) in vs.iter().enumerate().filter(|(_, &v)| v > 0.0) {
        let e = by_v.entry(v.to_bits()).or_insert((u32::MAX, 0));
        e.0 = e.0.min(a.g[i]);
        e.1 = e.1.max(a.g[i]);
    }
    for (bits, (mn, mx)) in by_v {
        ensure(mx - mn <= 1, || {
            format!("equal v={} got {mn}..{mx}", f64::from_bits(bits))
        })?;
    }
    Ok(())
}

/// Shuffling the batch permutes the result. Items with equal v are
/// interchangeable, so counts are compared as a multiset per v.
pub fn check_equivariance(
    vs: &[f64],
    budget: u64,
    cfg: &BudgetConfig,
    perm: &[usize],
) -> Result<(), String> {
    let alloc = |xs: &[f64]| {
        let s: Vec<DifficultyScore> = xs
            .iter()
            .map(|&v| DifficultyScore::new(v).unwrap())
            .collect();
        allocate_batch(&s, cfg, budget).map_err(|e| e.to_string())
    };
    let a = alloc(vs)?;
    let shuffled: Vec<f64> = perm.iter().map(|&i| vs[i]).collect();
    let b = alloc(&shuffled)?;
    let classes = |g: &[u32], xs: &[f64]| {
        let mut m: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        for (v, &x) in xs.iter().zip(g) {
            m.entry(v.to_bits()).or_default().push(x);
        }
        for c in m.values_mut() {
            c.sort_unstable();
        }
        m
    };
    ensure(classes(&a.g, vs) == classes(&b.g, &shuffled), || {
        format!("permutation changed counts for {vs:?}")
    })?;
    for (j, &i) in perm.iter().enumerate() {
        ensure(a.base[i] == b.base[j], || "base sizes not permuted".into())?;
    }
    ensure(a.leftover_assigned == b.leftover_assigned, || {
        "assigned leftover depends on order".into()
    })
}

pub fn allocation(seed: u64, batches: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let cfg = BudgetConfig::default();
    let mut redistributed = 0;
    for _ in 0..batches {
        let n = rng.random_range(1..=64);
        let vs = gen::difficulties(&mut rng, n);
        let base: u64 = vs
            .iter()
            .map(|&v| neolex_core::rqe::group_size(v, &cfg) as u64)
            .sum();
        let budget = match rng.random_range(0..4) {
            0 => base,
            1 => base + rng.random_range(0..=3 * n as u64 * cfg.g_max as u64),
            _ => cfg.default_budget(n).max(base),
        };
        check_allocation(&vs, budget, &cfg)?;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        check_equivariance(&vs, budget, &cfg, &perm)?;
        redistributed += usize::from(budget > base);
    }
    Ok(format!("{batches} batches, {redistributed} with leftover"))
}

pub fn check_group(
    rng: &mut rand_chacha::ChaCha8Rng,
    g: &RolloutGroup,
    cfg: &ObjectiveConfig,
) -> Result<(), String> {
    let e = evaluate_group(g, cfg).map_err(|e| e.to_string())?;
    let adv = group_advantages(&g.rewards()).map_err(|e| e.to_string())?;
    let mean = adv.iter().sum::<f64>() / adv.len() as f64;
    ensure(mean.abs() <= 1e-9, || format!("advantage mean {mean}"))?;
    ensure(e.advantages == adv, || {
        "evaluation used different advantages".into()
    })?;
    let want = oracle::objective(g, cfg);
    ensure((e.objective - want).abs() <= 1e-12, || {
        format!("objective {} vs brute force {want}", e.objective)
    })?;
    let p = gen::perturb_masked(rng, g);
    let ep = evaluate_group(&p, cfg).map_err(|e| e.to_string())?;
    ensure(ep.objective.to_bits() == e.objective.to_bits(), || {
        format!(
            "masked perturbation moved objective {} -> {}",
            e.objective, ep.objective
        )
    })?;
    ensure(
        ep.kl.to_bits() == e.kl.to_bits() && ep.surrogate.to_bits() == e.surrogate.to_bits(),
        || "masked perturbation moved a component".into(),
    )
}

pub fn grpo(seed: u64, groups: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let mut masked = 0usize;
    for i in 0..groups {
        let g = gen::group(&mut rng);
        let cfg = if i % 2 == 0 {
            ObjectiveConfig::default()
        } else {
            ObjectiveConfig {
                epsilon: rng.random_range(0.05..0.4),
                beta: rng.random_range(0.0..0.1),
                kl_estimator: if rng.random_bool(0.5) {
                    neolex_core::grpo::KlEstimator::K3
                } else {
                    neolex_core::grpo::KlEstimator::ExactPerToken
                },
            }
        };
        masked += g
            .rollouts
            .iter()
            .map(|r| r.mask.len() - r.active_tokens())
            .sum::<usize>();
        check_group(&mut rng, &g, &cfg)?;
    }
    Ok(format!("{groups} groups, {masked} masked tokens perturbed"))
}

pub const GTA_TRANSLATION: &str = "Although Rockstar is a seasoned and successful game company, the remasters of three landmark GTA games have been criticized for their artistic style and performance.";

pub fn gta_replay() -> Outcome {
    let text = std::fs::read_to_string(fixture("gta_transcript.txt")).map_err(|e| e.to_string())?;
    let segs = parse_transcript(&text);
    let count = |k: SegmentKind| segs.iter().filter(|s| s.kind == k).count();
    let got = [
        count(SegmentKind::Think),
        count(SegmentKind::Search),
        count(SegmentKind::Information),
        count(SegmentKind::Translation),
    ];
    ensure(got == [3, 1, 1, 1], || {
        format!("think/search/information/translation = {got:?}")
    })?;
    ensure(
        segs.iter()
            .filter(|s| s.kind == SegmentKind::Plain)
            .all(|s| s.text.trim().is_empty()),
        || "non-blank text outside tags".into(),
    )?;
    let t = extract_translation(&segs);
    ensure(t.as_deref() == Some(GTA_TRANSLATION), || {
        format!("translation {t:?}")
    })?;
    Ok("3 think, 1 search, 1 information, 1 translation".into())
}

pub fn smoke() -> Outcome {
    let r = smoke_config();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_smoke(&r.config, r.overrides.clone(), a.path()).map_err(|e| e.to_string())?;
    let second = run_smoke(&r.config, r.overrides.clone(), b.path()).map_err(|e| e.to_string())?;
    let s = &first.ingest.stats;
    ensure(s.kept == s.type1 + s.type2 + s.type3, || {
        format!("type partition {s:?}")
    })?;
    ensure(
        s.lines == s.malformed + s.missing_word + s.filtered + s.kept,
        || format!("line partition {s:?}"),
    )?;
    let ev = &first.evaluation;
    ensure(ev.rows.len() == 10, || {
        format!("{} rows, want 10", ev.rows.len())
    })?;
    ensure(
        ev.rows
            .iter()
            .all(|r| r.metrics.is_some() && r.rewards.is_some()),
        || "row without metrics or rewards".into(),
    )?;
    ensure(ev.turn_histogram.values().sum::<usize>() == 10, || {
        "histogram does not cover 10 runs".into()
    })?;
    let ja = serde_json::to_string(&first).map_err(|e| e.to_string())?;
    let jb = serde_json::to_string(&second).map_err(|e| e.to_string())?;
    ensure(ja == jb, || "two runs differ".into())?;
    Ok(format!(
        "type1 {} type2 {} type3 {}, exact {:.1}, mean reward {:.4}",
        s.type1,
        s.type2,
        s.type3,
        ev.aggregates.exact,
        ev.aggregates.mean_reward.unwrap_or(0.0)
    ))
}
