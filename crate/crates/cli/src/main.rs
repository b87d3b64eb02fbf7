use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use neolex_core::agent::{render_agent_prompt, run_agent};
use neolex_core::config::{HarnessConfig, ResolvedConfig};
use neolex_core::dictionary::DictionarySearcher;
use neolex_core::pipeline::{
    align_pairs, build_index, evaluate_pairs, grpo_eval, make_aligner, make_embedder, make_judge,
    make_llm, make_scorer, open_searcher, read_batch, read_pairs, require_path, rollout_plan,
    run_ingest, run_smoke, write_pairs, EvalContext, PipelineError, Stage,
};
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(
    name = "neolex",
    version,
    about = "Neologism-aware translation agent harness"
)]
struct Cli {
    /// TOML config layered over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream a dump into a dictionary file and dataset splits.
    Ingest {
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fill target-side spans of a split with the aligner.
    Align {
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        write: PathBuf,
    },
    #[command(subcommand)]
    Index(IndexCommand),
    /// Run the agent on one sentence and print the transcript.
    Translate {
        #[arg(long)]
        src_lang: String,
        #[arg(long)]
        tgt_lang: String,
        #[arg(long)]
        text: String,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Run the agent over a split and report metrics, rewards and judge scores.
    Evaluate {
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        limit: Option<usize>,
        /// Print the plain-text table to stderr.
        #[arg(long)]
        table: bool,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Difficulty-driven rollout counts for a batch.
    RolloutPlan {
        #[arg(long)]
        batch: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
    },
    #[command(subcommand)]
    Grpo(GrpoCommand),
    /// Offline ingest, align, index and evaluate run over the configured fixtures.
    Smoke {
        #[arg(long)]
        work_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Embed every dictionary document into a flat index file.
    Build {
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Top-k documents for a query.
    Search {
        #[arg(long)]
        query: String,
        #[arg(short, long)]
        k: Option<usize>,
        #[command(flatten)]
        store: StoreArgs,
    },
}

#[derive(Subcommand)]
enum GrpoCommand {
    /// Evaluate the masked objective on rollout groups (JSONL).
    Eval {
        #[arg(long)]
        groups: PathBuf,
    },
}

#[derive(Args)]
struct StoreArgs {
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ResolvedConfig, PipelineError> {
    let mut r = HarnessConfig::load(path)?;
    let applied = r.config.apply_env(|k| std::env::var(k).ok());
    r.overrides.extend(applied);
    r.overrides.sort();
    r.overrides.dedup();
    Ok(r)
}

fn pick<'a>(
    flag: &'a Option<PathBuf>,
    cfg: &'a Option<PathBuf>,
    name: &str,
) -> Result<&'a Path, PipelineError> {
    match flag {
        Some(p) => {
            if !p.exists() {
                return Err(PipelineError::Config(format!(
                    "{} does not exist",
                    p.display()
                )));
            }
            Ok(p)
        }
        None => require_path(name, cfg.as_ref()),
    }
}

fn searcher(cfg: &HarnessConfig, store: &StoreArgs) -> Result<DictionarySearcher, PipelineError> {
    let docs = pick(&store.docs, &cfg.paths.docs, "docs")?;
    let index = pick(&store.index, &cfg.paths.index, "index")?;
    open_searcher(cfg, docs, index, make_embedder(cfg)?)
}

/// Every JSON output leads with the config fingerprint and the override
/// list; bare arrays are wrapped under `results`.
fn emit<T: Serialize>(
    value: &T,
    r: &ResolvedConfig,
    out: Option<&Path>,
) -> Result<(), PipelineError> {
    let body = serde_json::to_value(value).expect("report serializes");
    let mut doc = Map::new();
    doc.insert("config_fingerprint".into(), r.config.fingerprint().into());
    doc.insert("overrides".into(), r.overrides.clone().into());
    match body {
        Value::Object(fields) => {
            for (k, v) in fields {
                if !doc.contains_key(&k) {
                    doc.insert(k, v);
                }
            }
        }
        other => {
            doc.insert("results".into(), other);
        }
    }
    let json = serde_json::to_string_pretty(&doc).expect("report serializes");
    let io = |e: std::io::Error| PipelineError::Config(format!("cannot write output: {e}"));
    match out {
        Some(p) => fs::write(p, json + "\n").map_err(io),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{json}").map_err(io)
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let resolved = load_config(cli.config.as_deref())?;
    let cfg = &resolved.config;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Ingest { dump, out_dir } => {
            let dump = pick(&dump, &cfg.paths.dump, "dump")?;
            emit(&run_ingest(dump, cfg, &out_dir)?, &resolved, out)
        }
        Command::Align { split, write } => {
            let mut pairs = read_pairs(&split)?;
            let aligner = make_aligner(cfg)?;
            let summary = align_pairs(&mut pairs, aligner.as_ref());
            write_pairs(&write, &pairs).map_err(|e| PipelineError::invariant(Stage::Align, e))?;
            emit(&summary, &resolved, out)
        }
        Command::Index(IndexCommand::Build { docs, index }) => {
            let docs = pick(&docs, &cfg.paths.docs, "docs")?;
            let index = index
                .or_else(|| cfg.paths.index.clone())
                .ok_or_else(|| PipelineError::Config("no index output path given".into()))?;
            let embedder = make_embedder(cfg)?;
            emit(
                &build_index(docs, embedder.as_ref(), &index)?,
                &resolved,
                out,
            )
        }
        Command::Index(IndexCommand::Search { query, k, store }) => {
            let s = searcher(cfg, &store)?;
            let hits = s
                .search(&query, k.unwrap_or(cfg.limits.top_k))
                .map_err(|e| PipelineError::invariant(Stage::Index, e))?;
            let rows: Vec<_> = hits
                .iter()
                .map(|h| {
                    serde_json::json!({
                        "rank": h.rank,
                        "doc_id": h.doc_id,
                        "score": h.score,
                        "title": s.docs().get(h.doc_id).map(|d| d.title.clone()),
                    })
                })
                .collect();
            emit(&rows, &resolved, out)
        }
        Command::Translate {
            src_lang,
            tgt_lang,
            text,
            store,
        } => {
            let s = searcher(cfg, &store)?;
            let llm = make_llm(cfg)?;
            let prompt = render_agent_prompt(&src_lang, &tgt_lang, &text)
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            let t = run_agent(llm.as_ref(), &s, &cfg.limits, &prompt)
                .map_err(|e| PipelineError::backend(Stage::Llm, e))?;
            emit(
                &serde_json::json!({
                    "translation": t.translation(),
                    "search_turns": t.search_turns_used,
                    "queries": t.queries,
                    "budget_exhausted": t.budget_exhausted,
                    "response": t.full_text,
                }),
                &resolved,
                out,
            )
        }
        Command::Evaluate {
            split,
            limit,
            table,
            store,
        } => {
            let split = pick(&split, &cfg.paths.splits, "splits")?;
            let mut pairs = read_pairs(split)?;
            if let Some(n) = limit {
                pairs.truncate(n);
            }
            let s = searcher(cfg, &store)?;
            let scorer = make_scorer(cfg)?;
            let llm = make_llm(cfg)?;
            let judge = make_judge(cfg)?;
            let name = split
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let ctx = EvalContext {
                config: cfg,
                overrides: resolved.overrides.clone(),
                llm: llm.as_ref(),
                retriever: &s,
                scorer: scorer.as_ref(),
                judge: judge.as_deref(),
            };
            let report = evaluate_pairs(&ctx, &name, &pairs)?;
            if table {
                eprint!("{}", report.table());
            }
            emit(&report, &resolved, out)
        }
        Command::RolloutPlan { batch, budget } => {
            let file = File::open(&batch)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", batch.display())))?;
            let items = read_batch(BufReader::new(file))?;
            emit(&rollout_plan(&items, cfg, budget)?, &resolved, out)
        }
        Command::Grpo(GrpoCommand::Eval { groups }) => {
            let file = File::open(&groups)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", groups.display())))?;
            emit(&grpo_eval(BufReader::new(file), cfg)?, &resolved, out)
        }
        Command::Smoke { work_dir } => {
            let tmp;
            let dir = match work_dir {
                Some(d) => d,
                None => {
                    tmp = std::env::temp_dir().join(format!("neolex-smoke-{}", std::process::id()));
                    tmp.clone()
                }
            };
            let report = run_smoke(cfg, resolved.overrides.clone(), &dir)?;
            eprint!("{}", report.evaluation.table());
            emit(&report, &resolved, out)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
