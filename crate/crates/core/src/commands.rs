//! The five `retaudit` commands.
//!
//! Each command is a pure function of (input files, resolved configuration,
//! seed): rerunning one writes a byte-identical bundle, files go through
//! [`Bundle`] so a failure removes everything already written, and the
//! manifest is written last. Warnings about skipped categories go to stderr
//! and never change the bundle contents.
//!
//! Where a command needs query sets and no log was given, it synthesizes
//! them per category: the most frequent unigrams and adjacent-bigrams (the
//! query budget split half and half, an odd budget favoring unigrams) are
//! expanded into a Zipf-distributed repeated set. The synthetic set of the
//! i-th processed category draws from `seed + i`, so categories get distinct
//! streams while the whole run remains a function of the configured seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use serde::Serialize;

use crate::analyze::Analyzer;
use crate::config::RunConfig;
use crate::corpus::{
    corpus_stats, ingest_corpus, Category, Corpus, CorpusFormat, IngestReport,
};
use crate::engine::{batch_search, build_index, InvertedIndex};
use crate::inequality::{inequality_report, write_lorenz_csv};
use crate::querylog::{
    build_query_sets, extract_exports, generate_zipf_log, parse_log, popularity_weighted_unique,
    sample_bigram_queries, sample_unigram_queries, write_queryset_tsv, LogFormat, ParsedLog,
    QueryMode, QuerySet, WeightScheme,
};
use crate::rankcompare::{compare_querysets, CompareError, QuerySetComparison};
use crate::report::{fmt_f64, Bundle, ManifestInputs};
use crate::retrievability::{
    accumulate, compute_usefulness, write_scores_tsv, CutoffSweep, RetrievabilityVector,
    UsefulnessWeights,
};

fn load_corpus(cfg: &RunConfig) -> anyhow::Result<(Corpus, IngestReport)> {
    let format = CorpusFormat::from_path(&cfg.corpus).ok_or_else(|| {
        anyhow!(
            "cannot tell the corpus format of {} from its extension (use .jsonl/.json or .tsv)",
            cfg.corpus.display()
        )
    })?;
    let (corpus, report) = ingest_corpus(&cfg.corpus, format)?;
    if corpus.is_empty() {
        bail!("corpus {} contains no documents", cfg.corpus.display());
    }
    Ok((corpus, report))
}

fn load_log(cfg: &RunConfig) -> anyhow::Result<Option<ParsedLog>> {
    match &cfg.log {
        None => Ok(None),
        Some(path) => {
            let log = parse_log(path, LogFormat::from_path(path))
                .with_context(|| format!("reading log {}", path.display()))?;
            Ok(Some(log))
        }
    }
}

/// The categories a command processes: the configured list, or every
/// category present in the corpus when none was configured.
fn resolve_categories(cfg: &RunConfig, corpus: &Corpus) -> Vec<Category> {
    if cfg.categories.is_empty() {
        corpus.categories().cloned().collect()
    } else {
        cfg.categories.clone()
    }
}

fn manifest_inputs(corpus: &Corpus, ingest: &IngestReport, log: Option<&ParsedLog>) -> ManifestInputs {
    let mut inputs = ManifestInputs {
        documents: corpus.len() as u64,
        documents_by_category: corpus
            .category_counts()
            .iter()
            .map(|(c, &n)| (c.to_string(), n as u64))
            .collect(),
        unknown_corpus_categories: ingest.unknown_categories.clone(),
        ..ManifestInputs::default()
    };
    if let Some(log) = log {
        inputs.search_events = Some(log.search_count());
        inputs.export_events = Some(log.export_count());
        inputs.invalid_log_rows = Some(log.invalid_rows);
        inputs.unknown_log_categories = log.unknown_categories.clone();
    }
    inputs
}

fn write_timings(bundle: &mut Bundle, started: Instant) -> anyhow::Result<()> {
    let timings = serde_json::json!({
        "total_ms": started.elapsed().as_millis() as u64,
    });
    let mut text = serde_json::to_string_pretty(&timings).expect("timings serialize");
    text.push('\n');
    bundle.write_aux_file("timings.json", text.as_bytes())?;
    Ok(())
}

/// Sampled-then-Zipf repeated query set for one category slice; `None` when
/// the frequency thresholds leave no base queries at all.
fn synthesize_repeated_set(
    cfg: &RunConfig,
    slice: &Corpus,
    analyzer: &Analyzer,
    category: &Category,
    seed: u64,
) -> anyhow::Result<Option<QuerySet>> {
    let stats = corpus_stats(slice, analyzer);
    let unigram_budget = cfg.max_queries.div_ceil(2);
    let bigram_budget = cfg.max_queries / 2;
    let mut base = sample_unigram_queries(&stats, category, cfg.min_cf, unigram_budget);
    let bigrams = sample_bigram_queries(slice, analyzer, category, cfg.min_cf, bigram_budget);
    base.entries.extend(bigrams.entries);
    if base.is_empty() {
        return Ok(None);
    }
    let total = if cfg.zipf_events > 0 {
        cfg.zipf_events
    } else {
        10 * base.entries.len() as u64
    };
    let set = generate_zipf_log(&base, cfg.zipf_s, total, seed)?;
    Ok(Some(set))
}

/// The repeated set a category audits: the log's searches when a log was
/// given, otherwise the synthetic set. `None` means the category has no
/// queries and must be skipped.
fn repeated_set_for(
    cfg: &RunConfig,
    log: Option<&ParsedLog>,
    slice: &Corpus,
    analyzer: &Analyzer,
    category: &Category,
    seed: u64,
) -> anyhow::Result<Option<QuerySet>> {
    let set = match log {
        Some(log) => {
            let (q_r, _) = build_query_sets(&log.entries, category);
            if q_r.is_empty() {
                None
            } else {
                Some(q_r)
            }
        }
        None => synthesize_repeated_set(cfg, slice, analyzer, category, seed)?,
    };
    Ok(set)
}

/// The set a sweep actually replays under a weight scheme: uniform weighting
/// runs every occurrence of the repeated set at weight 1; popularity
/// weighting folds multiplicity into per-entry weights and runs each distinct
/// query once.
fn weighted_run_set(scheme: WeightScheme, q_r: &QuerySet) -> QuerySet {
    match scheme {
        WeightScheme::Uniform => q_r.clone(),
        WeightScheme::Popularity => popularity_weighted_unique(q_r),
    }
}

/// Per-occurrence weights in `batch_search` result order.
fn occurrence_weights(set: &QuerySet) -> Vec<f64> {
    set.entries
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.weight, e.multiplicity as usize))
        .collect()
}

/// Search a query set at depth `max(cutoffs)` and fold the results into a
/// retrievability sweep over `cutoffs`.
fn run_sweep(
    index: &InvertedIndex,
    analyzer: &Analyzer,
    cfg: &RunConfig,
    set: &QuerySet,
    cutoffs: &[u32],
    collection_size: usize,
) -> anyhow::Result<CutoffSweep> {
    let k = *cutoffs.iter().max().expect("cutoffs validated nonempty") as usize;
    let results = batch_search(index, analyzer, cfg.bm25, set, k, cfg.workers)?;
    let weights = occurrence_weights(set);
    let sweep = accumulate(&results, &weights, cutoffs, k, &set.category, collection_size)?;
    Ok(sweep)
}

/// Like [`run_sweep`] but for a single cutoff, unwrapping its vector.
fn run_single_cutoff(
    index: &InvertedIndex,
    analyzer: &Analyzer,
    cfg: &RunConfig,
    set: &QuerySet,
    cutoff: u32,
    collection_size: usize,
) -> anyhow::Result<RetrievabilityVector> {
    let mut sweep = run_sweep(index, analyzer, cfg, set, &[cutoff], collection_size)?;
    Ok(sweep
        .vectors
        .remove(&cutoff)
        .expect("sweep contains its one cutoff"))
}

/// Build one BM25 index per category and persist each alongside a manifest.
pub fn cmd_index(cfg: &RunConfig) -> anyhow::Result<()> {
    let started = Instant::now();
    let analyzer = Analyzer::new();
    let (corpus, ingest) = load_corpus(cfg)?;
    let categories = resolve_categories(cfg, &corpus);

    let mut bundle = Bundle::create(&cfg.out)?;
    for category in &categories {
        let index = build_index(&corpus, &analyzer, Some(category));
        let name = format!("index_{}.json", category.slug());
        bundle.track_file(&name);
        index.save(&bundle.dir().join(&name))?;
    }
    if cfg.emit_timings {
        write_timings(&mut bundle, started)?;
    }
    bundle.finish("index", cfg, &manifest_inputs(&corpus, &ingest, None))?;
    Ok(())
}

fn write_queryset_file(
    bundle: &mut Bundle,
    name: &str,
    set: &QuerySet,
    params: &[(&str, String)],
) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    write_queryset_tsv(set, params, &mut buf)?;
    bundle.write_file(name, &buf)?;
    Ok(())
}

/// Sample unigram and bigram query sets per category and synthesize a
/// Zipf-skewed query log from their union. Empty sampled sets only warn.
pub fn cmd_gen_queries(cfg: &RunConfig) -> anyhow::Result<()> {
    let started = Instant::now();
    let analyzer = Analyzer::new();
    let (corpus, ingest) = load_corpus(cfg)?;
    let categories = resolve_categories(cfg, &corpus);

    let mut bundle = Bundle::create(&cfg.out)?;
    for (i, category) in categories.iter().enumerate() {
        let slug = category.slug();
        let slice = corpus.filter_category(category);
        if slice.is_empty() {
            eprintln!("warning: category {category} has no documents; skipping");
            continue;
        }
        let stats = corpus_stats(&slice, &analyzer);
        let unigram_budget = cfg.max_queries.div_ceil(2);
        let bigram_budget = cfg.max_queries / 2;
        let thresholds = |limit: usize| {
            vec![
                ("min-cf", cfg.min_cf.to_string()),
                ("limit", limit.to_string()),
            ]
        };

        let unigrams = sample_unigram_queries(&stats, category, cfg.min_cf, unigram_budget);
        if unigrams.is_empty() {
            eprintln!(
                "warning: category {category}: no term reaches collection frequency {}; \
                 unigram set is empty",
                cfg.min_cf
            );
        }
        write_queryset_file(
            &mut bundle,
            &format!("queries_unigram_{slug}.tsv"),
            &unigrams,
            &thresholds(unigram_budget),
        )?;

        let bigrams = sample_bigram_queries(&slice, &analyzer, category, cfg.min_cf, bigram_budget);
        if bigrams.is_empty() {
            eprintln!(
                "warning: category {category}: no adjacent pair reaches collection frequency {}; \
                 bigram set is empty",
                cfg.min_cf
            );
        }
        write_queryset_file(
            &mut bundle,
            &format!("queries_bigram_{slug}.tsv"),
            &bigrams,
            &thresholds(bigram_budget),
        )?;

        let mut base = unigrams;
        base.entries.extend(bigrams.entries);
        if base.is_empty() {
            eprintln!(
                "warning: category {category}: nothing to expand into a synthetic log; skipping"
            );
            continue;
        }
        let total = if cfg.zipf_events > 0 {
            cfg.zipf_events
        } else {
            10 * base.entries.len() as u64
        };
        let seed = cfg.seed.wrapping_add(i as u64);
        let zipf = generate_zipf_log(&base, cfg.zipf_s, total, seed)?;
        write_queryset_file(
            &mut bundle,
            &format!("queries_zipf_{slug}.tsv"),
            &zipf,
            &[
                ("seed", seed.to_string()),
                ("zipf-s", fmt_f64(cfg.zipf_s)),
                ("base-queries", base.entries.len().to_string()),
                ("events", total.to_string()),
            ],
        )?;
    }
    if cfg.emit_timings {
        write_timings(&mut bundle, started)?;
    }
    bundle.finish("gen-queries", cfg, &manifest_inputs(&corpus, &ingest, None))?;
    Ok(())
}

#[derive(Serialize)]
struct DistStatsRow {
    category: String,
    cutoff: u32,
    mean: f64,
    geometric_mean: Option<f64>,
    variance: f64,
    std_dev: f64,
}

#[derive(Serialize)]
struct GiniRow {
    category: String,
    cutoff: u32,
    gini: f64,
    retrieved: usize,
    pct_retrieved: f64,
}

#[derive(Serialize)]
struct AuditReport {
    dist_stats: Vec<DistStatsRow>,
    gini_by_cutoff: Vec<GiniRow>,
}

fn dist_stats_csv(rows: &[DistStatsRow]) -> String {
    let mut out = String::from("category,cutoff,mean,geometric_mean,variance,std_dev\n");
    for r in rows {
        let gm = r.geometric_mean.map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.category,
            r.cutoff,
            fmt_f64(r.mean),
            gm,
            fmt_f64(r.variance),
            fmt_f64(r.std_dev)
        )
        .expect("write to String");
    }
    out
}

fn gini_by_cutoff_csv(rows: &[GiniRow]) -> String {
    let mut out = String::from("category,cutoff,gini,retrieved,pct_retrieved\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.category,
            r.cutoff,
            fmt_f64(r.gini),
            r.retrieved,
            fmt_f64(r.pct_retrieved)
        )
        .expect("write to String");
    }
    out
}

/// Sweep retrievability over the configured cutoffs per category and report
/// distribution statistics, Gini coefficients, and Lorenz curves.
pub fn cmd_audit(cfg: &RunConfig) -> anyhow::Result<()> {
    let started = Instant::now();
    let analyzer = Analyzer::new();
    let (corpus, ingest) = load_corpus(cfg)?;
    let categories = resolve_categories(cfg, &corpus);
    let log = load_log(cfg)?;

    let mut bundle = Bundle::create(&cfg.out)?;
    let mut dist_rows: Vec<DistStatsRow> = Vec::new();
    let mut gini_rows: Vec<GiniRow> = Vec::new();

    for (i, category) in categories.iter().enumerate() {
        let slug = category.slug();
        let slice = corpus.filter_category(category);
        if slice.is_empty() {
            eprintln!("warning: category {category} has no documents; skipping");
            continue;
        }
        let seed = cfg.seed.wrapping_add(i as u64);
        let Some(q_r) = repeated_set_for(cfg, log.as_ref(), &slice, &analyzer, category, seed)?
        else {
            eprintln!("warning: category {category} has no queries; skipping");
            continue;
        };
        let run_set = weighted_run_set(cfg.weights, &q_r);

        let index = build_index(&corpus, &analyzer, Some(category));
        let sweep = run_sweep(&index, &analyzer, cfg, &run_set, &cfg.cutoffs, slice.len())?;

        for (&cutoff, vector) in &sweep.vectors {
            if vector.scores.is_empty() {
                eprintln!(
                    "warning: category {category} cutoff {cutoff}: nothing retrieved; row omitted"
                );
                continue;
            }
            let report =
                inequality_report(category, Some(cutoff), &vector.scores, slice.len(), cfg.population)?;

            let mut buf = Vec::new();
            write_scores_tsv(&vector.scores, &mut buf)?;
            bundle.write_file(&format!("scores_{slug}_c{cutoff}.tsv"), &buf)?;

            let mut buf = Vec::new();
            write_lorenz_csv(&report.lorenz, &mut buf)?;
            bundle.write_file(&format!("lorenz_{slug}_c{cutoff}.csv"), &buf)?;

            dist_rows.push(DistStatsRow {
                category: category.to_string(),
                cutoff,
                mean: report.stats.mean,
                geometric_mean: report.stats.geometric_mean,
                variance: report.stats.variance,
                std_dev: report.stats.std_dev,
            });
            gini_rows.push(GiniRow {
                category: category.to_string(),
                cutoff,
                gini: report.gini,
                retrieved: report.stats.positive_count,
                pct_retrieved: report.stats.pct_retrieved,
            });
        }
        bundle.write_json(&format!("sweep_{slug}.json"), &sweep)?;
    }

    if gini_rows.is_empty() {
        bail!("no category produced any retrieval results; nothing to audit");
    }
    bundle.write_file("dist_stats.csv", dist_stats_csv(&dist_rows).as_bytes())?;
    bundle.write_file("gini_by_cutoff.csv", gini_by_cutoff_csv(&gini_rows).as_bytes())?;
    bundle.write_json(
        "report.json",
        &AuditReport {
            dist_stats: dist_rows,
            gini_by_cutoff: gini_rows,
        },
    )?;
    if cfg.emit_timings {
        write_timings(&mut bundle, started)?;
    }
    bundle.finish("audit", cfg, &manifest_inputs(&corpus, &ingest, log.as_ref()))?;
    Ok(())
}

struct UsefulnessRow {
    category: String,
    gini: f64,
    exported: usize,
    pct_exported: f64,
    events: u64,
}

fn usefulness_csv(rows: &[UsefulnessRow]) -> String {
    let mut out = String::from("category,gini,exported,pct_exported,events\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.category,
            fmt_f64(r.gini),
            r.exported,
            fmt_f64(r.pct_exported),
            r.events
        )
        .expect("write to String");
    }
    out
}

/// Accumulate export events into per-document usefulness and report its
/// concentration. Categories without export events get no row at all rather
/// than a row of zeros — absence of evidence is not a measured zero.
pub fn cmd_usefulness(cfg: &RunConfig) -> anyhow::Result<()> {
    let started = Instant::now();
    let log_path = cfg
        .log
        .as_ref()
        .ok_or_else(|| anyhow!("usefulness requires --log: export events drive u(d)"))?;
    let (corpus, ingest) = load_corpus(cfg)?;
    let categories = resolve_categories(cfg, &corpus);
    let log = parse_log(log_path, LogFormat::from_path(log_path))
        .with_context(|| format!("reading log {}", log_path.display()))?;

    let mut bundle = Bundle::create(&cfg.out)?;
    let mut rows: Vec<UsefulnessRow> = Vec::new();
    let mut unknown_targets: u64 = 0;

    for category in &categories {
        let slug = category.slug();
        let slice = corpus.filter_category(category);
        if slice.is_empty() {
            eprintln!("warning: category {category} has no documents; skipping");
            continue;
        }
        let exports: Vec<_> = extract_exports(&log.entries, category)
            .into_iter()
            .filter(|e| {
                let known = slice.contains(&e.target_doc_id);
                if !known {
                    unknown_targets += 1;
                }
                known
            })
            .collect();
        if exports.is_empty() {
            eprintln!("note: category {category} has no export events; row absent");
            continue;
        }

        let popularity: BTreeMap<String, u64>;
        let weights = match cfg.weights {
            WeightScheme::Uniform => UsefulnessWeights::Uniform,
            WeightScheme::Popularity => {
                let (q_r, _) = build_query_sets(&log.entries, category);
                popularity = q_r
                    .entries
                    .iter()
                    .map(|e| (e.text.clone(), e.multiplicity))
                    .collect();
                UsefulnessWeights::Popularity(&popularity)
            }
        };
        let usefulness = compute_usefulness(&exports, weights, |_| 1.0, category, slice.len());
        if usefulness.scores.is_empty() {
            eprintln!(
                "note: category {category}: every export weighed zero under the {} scheme; \
                 row absent",
                cfg.weights.as_str()
            );
            continue;
        }
        let report =
            inequality_report(category, None, &usefulness.scores, slice.len(), cfg.population)?;

        let mut buf = Vec::new();
        write_scores_tsv(&usefulness.scores, &mut buf)?;
        bundle.write_file(&format!("usefulness_{slug}.tsv"), &buf)?;

        let mut buf = Vec::new();
        write_lorenz_csv(&report.lorenz, &mut buf)?;
        bundle.write_file(&format!("lorenz_usefulness_{slug}.csv"), &buf)?;

        rows.push(UsefulnessRow {
            category: category.to_string(),
            gini: report.gini,
            exported: usefulness.exported_count(),
            pct_exported: report.stats.pct_retrieved,
            events: usefulness.event_count,
        });
    }

    if rows.is_empty() {
        bail!("no category has export events; nothing to report");
    }
    bundle.write_file("usefulness_gini.csv", usefulness_csv(&rows).as_bytes())?;
    if cfg.emit_timings {
        write_timings(&mut bundle, started)?;
    }
    let mut inputs = manifest_inputs(&corpus, &ingest, Some(&log));
    inputs.unknown_export_targets = Some(unknown_targets);
    bundle.finish("usefulness", cfg, &inputs)?;
    Ok(())
}

fn compare_csv(comparisons: &[QuerySetComparison]) -> String {
    let mut out = String::from("category,measure,k,value\n");
    for c in comparisons {
        for &(k, v) in &c.jaccard {
            writeln!(out, "{},jaccard,{},{}", c.category, k, fmt_f64(v)).expect("write to String");
        }
        writeln!(out, "{},kendall_tau,,{}", c.category, fmt_f64(c.kendall_tau))
            .expect("write to String");
        writeln!(out, "{},spearman_rho,,{}", c.category, fmt_f64(c.spearman_rho))
            .expect("write to String");
        writeln!(out, "{},rbo,,{}", c.category, fmt_f64(c.rbo)).expect("write to String");
    }
    out
}

/// Compare the retrievability rankings induced by the repeated query set
/// against its deduplicated form at the deepest configured cutoff.
///
/// The repeated side always replays every occurrence at weight 1. The
/// deduplicated side follows the configured weight scheme: `uniform` runs
/// each distinct query once at weight 1 (the duplicate-blind view);
/// `popularity` reweights each distinct query by its occurrence count, which
/// reproduces the repeated side exactly.
pub fn cmd_compare(cfg: &RunConfig) -> anyhow::Result<()> {
    let started = Instant::now();
    let analyzer = Analyzer::new();
    let (corpus, ingest) = load_corpus(cfg)?;
    let categories = resolve_categories(cfg, &corpus);
    let log = load_log(cfg)?;
    let cutoff = *cfg.cutoffs.iter().max().expect("cutoffs validated nonempty");

    let mut bundle = Bundle::create(&cfg.out)?;
    let mut comparisons: Vec<QuerySetComparison> = Vec::new();

    for (i, category) in categories.iter().enumerate() {
        let slice = corpus.filter_category(category);
        if slice.is_empty() {
            eprintln!("warning: category {category} has no documents; skipping");
            continue;
        }
        let seed = cfg.seed.wrapping_add(i as u64);
        let Some(q_r) = repeated_set_for(cfg, log.as_ref(), &slice, &analyzer, category, seed)?
        else {
            eprintln!("warning: category {category} has no queries; skipping");
            continue;
        };
        let q_u = QuerySet {
            category: q_r.category.clone(),
            mode: QueryMode::Unique,
            provenance: q_r.provenance,
            entries: q_r
                .entries
                .iter()
                .map(|e| crate::querylog::QueryEntry {
                    text: e.text.clone(),
                    multiplicity: 1,
                    weight: 1.0,
                })
                .collect(),
        };
        let side_u = match cfg.weights {
            WeightScheme::Uniform => q_u,
            WeightScheme::Popularity => popularity_weighted_unique(&q_r),
        };

        let index = build_index(&corpus, &analyzer, Some(category));
        let vec_r = run_single_cutoff(&index, &analyzer, cfg, &q_r, cutoff, slice.len())?;
        let vec_u = run_single_cutoff(&index, &analyzer, cfg, &side_u, cutoff, slice.len())?;
        match compare_querysets(&vec_r, &vec_u, &cfg.jaccard_k, cfg.rbo_p) {
            Ok(comparison) => comparisons.push(comparison),
            // Rankings too thin or too flat to correlate are a property of
            // the data, not a failed run; report and move on.
            Err(
                err @ (CompareError::EmptyRanking
                | CompareError::TooFewConjoint(_)
                | CompareError::AllTied),
            ) => {
                eprintln!("warning: category {category}: {err}; skipping");
                continue;
            }
            Err(err) => return Err(err.into()),
        }
    }

    if comparisons.is_empty() {
        bail!("no category produced comparable rankings");
    }
    bundle.write_file("compare.csv", compare_csv(&comparisons).as_bytes())?;
    bundle.write_json("compare.json", &comparisons)?;
    if cfg.emit_timings {
        write_timings(&mut bundle, started)?;
    }
    bundle.finish("compare", cfg, &manifest_inputs(&corpus, &ingest, log.as_ref()))?;
    Ok(())
}
