use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use retaudit::commands;
use retaudit::config::{ConfigOverlay, RunConfig};

/// Audit how evenly a retrieval system distributes access across a typed
/// document collection.
#[derive(Parser)]
#[command(name = "retaudit", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one BM25 index per category and persist each with a manifest
    Index(CommonArgs),
    /// Sample unigram/bigram query sets and synthesize a Zipf-skewed log
    GenQueries(CommonArgs),
    /// Sweep retrievability over rank cutoffs and report access inequality
    Audit(CommonArgs),
    /// Accumulate export events into per-document usefulness and its Gini
    Usefulness(CommonArgs),
    /// Compare rankings from repeated vs deduplicated query sets
    Compare(CommonArgs),
}

/// Every subcommand takes the same settings; unset flags fall back to the
/// config file (when given), then to built-in defaults.
#[derive(Args)]
struct CommonArgs {
    /// Corpus file (.jsonl or .tsv)
    #[arg(long)]
    corpus: Option<PathBuf>,

    /// Interaction log with search/export events (.tsv or .jsonl)
    #[arg(long)]
    log: Option<PathBuf>,

    /// Categories to process, comma-separated (default: all in the corpus)
    #[arg(long, value_delimiter = ',')]
    categories: Option<Vec<String>>,

    /// Rank cutoffs for the retrievability sweep, comma-separated
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<u32>>,

    /// BM25 term-frequency saturation
    #[arg(long)]
    k1: Option<f64>,

    /// BM25 length normalization, 0 (none) to 1 (full)
    #[arg(long)]
    b: Option<f64>,

    /// Query weighting: uniform or popularity
    #[arg(long)]
    weights: Option<String>,

    /// Population the inequality measures run over: all-docs or
    /// retrieved-only
    #[arg(long)]
    population: Option<String>,

    /// Top-weightedness of rank-biased overlap, strictly between 0 and 1
    #[arg(long)]
    rbo_p: Option<f64>,

    /// Top-k sizes for Jaccard overlap, comma-separated
    #[arg(long, value_delimiter = ',')]
    jaccard_k: Option<Vec<usize>>,

    /// Output directory for the report bundle
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for query synthesis
    #[arg(long)]
    seed: Option<u64>,

    /// Search threads (0 = automatic)
    #[arg(long)]
    workers: Option<usize>,

    /// Minimum collection frequency for sampled query terms
    #[arg(long)]
    min_cf: Option<u64>,

    /// Cap on sampled queries per category
    #[arg(long)]
    max_queries: Option<usize>,

    /// Skew of the synthetic Zipf query log
    #[arg(long)]
    zipf_s: Option<f64>,

    /// Query occurrences to draw for the synthetic log (0 = 10x the base
    /// set)
    #[arg(long)]
    zipf_events: Option<u64>,

    /// Also write wall-clock timings to timings.json (kept out of the
    /// manifest, so reruns stay byte-identical)
    #[arg(long)]
    emit_timings: bool,

    /// Config file with key=value lines; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let cli = ConfigOverlay {
            corpus: self.corpus.clone(),
            log: self.log.clone(),
            categories: self.categories.clone(),
            cutoffs: self.cutoffs.clone(),
            k1: self.k1,
            b: self.b,
            weights: self.weights.clone(),
            population: self.population.clone(),
            rbo_p: self.rbo_p,
            jaccard_k: self.jaccard_k.clone(),
            out: self.out.clone(),
            seed: self.seed,
            workers: self.workers,
            min_cf: self.min_cf,
            max_queries: self.max_queries,
            zipf_s: self.zipf_s,
            zipf_events: self.zipf_events,
            emit_timings: if self.emit_timings { Some(true) } else { None },
        };
        let overlay = match &self.config {
            Some(path) => cli.or(ConfigOverlay::from_file(path)?),
            None => cli,
        };
        Ok(overlay.resolve()?)
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Index(args) => commands::cmd_index(&args.resolve()?),
        Command::GenQueries(args) => commands::cmd_gen_queries(&args.resolve()?),
        Command::Audit(args) => commands::cmd_audit(&args.resolve()?),
        Command::Usefulness(args) => commands::cmd_usefulness(&args.resolve()?),
        Command::Compare(args) => commands::cmd_compare(&args.resolve()?),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
