mod common;

use std::fs;

use common::{fixture, smoke_config};
use neolex_core::dictionary::HashedTrigramEmbedder;
use neolex_core::pipeline::{
    build_index, evaluate_pairs, make_llm, make_scorer, open_searcher, read_pairs, run_ingest,
    run_smoke, EvalContext, Stage,
};
use neolex_core::wiktionary::SplitName;

#[test]
fn smoke_passes_on_shipped_fixtures() {
    let r = smoke_config();
    let dir = tempfile::tempdir().unwrap();
    let report = run_smoke(&r.config, r.overrides.clone(), dir.path()).unwrap();
    assert_eq!(
        report.stages,
        [
            "ingest",
            "align",
            "index",
            "scorer",
            "llm",
            "evaluate",
            "invariants"
        ]
    );
    assert_eq!(report.evaluation.rows.len(), 10);
    let s = &report.ingest.stats;
    assert_eq!(s.kept, s.type1 + s.type2 + s.type3);
    assert_eq!((s.type1, s.type2), (13, 6));
    assert_eq!(report.evaluation.turn_histogram.values().sum::<usize>(), 10);
    assert!(report
        .evaluation
        .overrides
        .contains(&"paths.dump".to_string()));
    assert!(report
        .evaluation
        .assumed
        .contains(&"weights.sigma = 0.1".to_string()));
    assert!(report
        .evaluation
        .table()
        .contains("assumed weights.sigma = 0.1"));
}

#[test]
fn smoke_is_byte_deterministic() {
    let r = smoke_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ja = serde_json::to_string(&run_smoke(&r.config, r.overrides.clone(), a.path()).unwrap())
        .unwrap();
    let jb = serde_json::to_string(&run_smoke(&r.config, r.overrides.clone(), b.path()).unwrap())
        .unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn corrupted_index_names_index() {
    let mut r = smoke_config();
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad_index.json");
    fs::write(&bad, "{ this is not an index").unwrap();
    r.config.paths.index = Some(bad);
    let err = run_smoke(&r.config, vec![], dir.path()).unwrap_err();
    assert_eq!(err.stage(), Stage::Index, "{err}");
    assert!(err.to_string().contains("index"));
}

#[test]
fn missing_scorer_endpoint_names_scorer() {
    let mut r = smoke_config();
    r.config.backends.stub_scorer = false;
    let dir = tempfile::tempdir().unwrap();
    let err = run_smoke(&r.config, vec![], dir.path()).unwrap_err();
    assert_eq!(err.stage(), Stage::Scorer, "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn missing_dump_is_config_error() {
    let mut r = smoke_config();
    r.config.paths.dump = Some(fixture("nope.jsonl"));
    let dir = tempfile::tempdir().unwrap();
    let err = run_smoke(&r.config, vec![], dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

fn five_example_report(judge: bool) -> neolex_core::pipeline::EvalReport {
    let mut r = smoke_config();
    r.config.backends.judge_enabled = judge;
    let cfg = &r.config;
    let dir = tempfile::tempdir().unwrap();
    run_ingest(cfg.paths.dump.as_ref().unwrap(), cfg, dir.path()).unwrap();
    let mut pairs = read_pairs(&dir.path().join("test.jsonl")).unwrap();
    pairs.truncate(5);
    let aligner = neolex_core::pipeline::make_aligner(cfg).unwrap();
    neolex_core::pipeline::align_pairs(&mut pairs, aligner.as_ref());
    let embedder = std::sync::Arc::new(HashedTrigramEmbedder::new(cfg.retrieval.dim));
    let docs = dir.path().join("dictionary.jsonl");
    let index = dir.path().join("index.json");
    build_index(&docs, embedder.as_ref(), &index).unwrap();
    let searcher = open_searcher(cfg, &docs, &index, embedder).unwrap();
    let llm = make_llm(cfg).unwrap();
    let scorer = make_scorer(cfg).unwrap();
    let judge = neolex_core::pipeline::make_judge(cfg).unwrap();
    let ctx = EvalContext {
        config: cfg,
        overrides: r.overrides.clone(),
        llm: llm.as_ref(),
        retriever: &searcher,
        scorer: scorer.as_ref(),
        judge: judge.as_deref(),
    };
    evaluate_pairs(&ctx, SplitName::Test.as_str(), &pairs).unwrap()
}

#[test]
fn five_example_report_shape() {
    let rep = five_example_report(false);
    assert_eq!(rep.rows.len(), 5);
    assert_eq!(rep.turn_histogram.values().sum::<usize>(), 5);
    assert_eq!(rep.aggregates.scored + rep.aggregates.excluded, 5);
    let (agg, hist) = rep.recompute(80, 3);
    assert_eq!(agg, rep.aggregates);
    assert_eq!(hist, rep.turn_histogram);
    assert_eq!(rep.config_fingerprint.len(), 64);
}

#[test]
fn judge_columns_follow_the_switch() {
    let off = five_example_report(false);
    let json = serde_json::to_value(&off).unwrap();
    assert!(json["rows"][0].get("judge").is_none());
    assert!(json["aggregates"].get("gemba").is_none());
    assert!(json["aggregates"].get("exact").is_some());

    let on = five_example_report(true);
    let judged: Vec<_> = on.rows.iter().filter_map(|r| r.judge).collect();
    assert_eq!(judged.len(), 5);
    for (row, j) in on.rows.iter().zip(&judged) {
        if row.hyp.is_some() {
            assert_eq!(j.gemba, Some(82.0));
            assert_eq!(j.neologism_aware, Some(74.0));
        }
    }
    assert!(on.table().contains("GEMBA"));
}
