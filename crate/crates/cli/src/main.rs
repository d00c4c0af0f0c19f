use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use halluc_core::alignment::ScorerKind;
use halluc_core::model::Language;
use halluc_core::pipeline::{self, Benchmark, RunConfig};
use serde::Serialize;

/// Hallucination-aware multilingual preference data, DPO training and
/// benchmark scoring.
#[derive(Parser, Debug)]
#[command(name = "halluc", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Overrides {
    /// Run configuration (TOML). Defaults apply when absent.
    #[arg(long, global = true, env = "HALLUC_CONFIG")]
    config: Option<PathBuf>,

    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated language codes, e.g. ru,uk,zh.
    #[arg(long, global = true, value_delimiter = ',')]
    languages: Option<Vec<String>>,

    /// Pool size per ranking.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Responses per (query, language).
    #[arg(long, global = true)]
    n: Option<u32>,

    /// Distance scorer: bleu, external-loss or surrogate-ngram-ce.
    #[arg(long, global = true)]
    scorer: Option<String>,

    /// Run directory for all stage outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write queries.jsonl and responses.jsonl (mock model, or check an
    /// external responses file).
    Generate {
        /// External responses file to validate instead of running the mock.
        #[arg(long)]
        responses: Option<PathBuf>,
        /// Query records; synthetic queries when absent.
        #[arg(long)]
        queries: Option<PathBuf>,
    },
    /// Score every response against both reference answers.
    Score,
    /// Build explicit, implicit and translated preference pairs.
    BuildPairs,
    /// Draw a bounded seeded mixture of pairs.
    Mix {
        /// Number of pairs to draw.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Supervised warm-up, then DPO on the mixed pairs.
    Train,
    /// Score a benchmark: pope, mme or amber.
    Eval {
        benchmark: Benchmark,
        /// Benchmark items (captions for amber).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Object annotations (amber only).
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Also write a CSV report.
        #[arg(long)]
        csv: bool,
    },
    /// Collect stage summaries and eval reports of the run directory.
    Report,
}

fn load_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(codes) = &o.languages {
        cfg.languages = codes
            .iter()
            .map(|c| Language::from_code(c.trim()))
            .collect::<Result<_, _>>()?;
    }
    if let Some(k) = o.k {
        cfg.k = k;
    }
    if let Some(n) = o.n {
        cfg.n = n;
    }
    if let Some(s) = &o.scorer {
        cfg.scorer.kind = s.parse::<ScorerKind>()?;
    }
    if let Some(dir) = &o.out_dir {
        cfg.paths.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.overrides)?;
    let threads = cli.overrides.threads;
    match cli.command {
        Command::Generate { responses, queries } => {
            if responses.is_some() {
                cfg.paths.responses = responses;
            }
            if queries.is_some() {
                cfg.paths.queries = queries;
            }
            let summary = pipeline::in_pool(threads, || pipeline::generate(&cfg))??;
            log::info!("wrote {} responses", summary.records);
            print_json(&summary)
        }
        Command::Score => print_json(&pipeline::in_pool(threads, || pipeline::score(&cfg))??),
        Command::BuildPairs => print_json(&pipeline::in_pool(threads, || pipeline::build_pairs(&cfg))??),
        Command::Mix { count } => {
            if count.is_some() {
                cfg.mix_count = count;
            }
            print_json(&pipeline::in_pool(threads, || pipeline::mix(&cfg))??)
        }
        Command::Train => print_json(&pipeline::in_pool(threads, || pipeline::train(&cfg))??),
        Command::Eval {
            benchmark,
            input,
            annotations,
            csv,
        } => {
            if let Some(p) = input {
                match benchmark {
                    Benchmark::Pope => cfg.paths.pope = Some(p),
                    Benchmark::Mme => cfg.paths.mme = Some(p),
                    Benchmark::Amber => cfg.paths.amber_responses = Some(p),
                }
            }
            if annotations.is_some() {
                cfg.paths.amber_annotations = annotations;
            }
            cfg.eval.csv |= csv;
            let report = pipeline::in_pool(threads, || pipeline::evaluate(&cfg, benchmark))??;
            print!("{}", report.to_table());
            Ok(())
        }
        Command::Report => {
            let report = pipeline::report(&cfg)?;
            print!("{}", pipeline::render_report(&report));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
