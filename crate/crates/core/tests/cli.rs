//! End-to-end checks of the `retaudit` binary: flag handling, bundle layout,
//! determinism, failure cleanup, and a few numeric spot checks that are easy
//! to verify by hand.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use common::*;

fn write_file(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

/// Five documents across two categories with overlapping vocabulary.
fn write_corpus(dir: &Path) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    write_file(
        &path,
        concat!(
            r#"{"id":"ds1","type":"dataset","title":"wind speed hourly","body":"offshore wind measurements"}"#,
            "\n",
            r#"{"id":"ds2","type":"dataset","title":"sea level pressure","body":"pressure and wind records"}"#,
            "\n",
            r#"{"id":"ds3","type":"dataset","title":"household income survey","body":"yearly income data"}"#,
            "\n",
            r#"{"id":"pub1","type":"publication","title":"wind energy study","body":"analysis of wind farms"}"#,
            "\n",
            r#"{"id":"pub2","type":"publication","title":"income inequality paper","body":"study of income gaps"}"#,
            "\n",
        ),
    );
    path
}

fn write_log(dir: &Path, rows: &[(&str, &str, &str, &str)]) -> PathBuf {
    let path = dir.join("log.tsv");
    let mut text = String::from("timestamp\tkind\tcategory\tquery\ttarget_doc_id\n");
    for (i, (kind, category, query, target)) in rows.iter().enumerate() {
        text.push_str(&format!(
            "2024-01-01T00:{i:02}:00Z\t{kind}\t{category}\t{query}\t{target}\n"
        ));
    }
    write_file(&path, &text);
    path
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read_text(&dir.join("manifest.json"))).unwrap()
}

#[test]
fn index_writes_per_category_files_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "index",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    let files: Vec<String> = read_bundle(&out_a).into_keys().collect();
    assert_eq!(
        files,
        ["index_dataset.json", "index_publication.json", "manifest.json"]
    );
    assert_bundles_identical(&out_a, &out_b);

    let m = manifest(&out_a);
    assert_eq!(m["command"], "index");
    assert_eq!(m["inputs"]["documents"], 5);
    assert_eq!(m["inputs"]["documents-by-category"]["dataset"], 3);
}

#[test]
fn index_respects_category_filter() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let out = tmp.path().join("out");
    run_ok(&[
        "index",
        "--corpus",
        corpus.to_str().unwrap(),
        "--categories",
        "dataset",
        "--out",
        out.to_str().unwrap(),
    ]);
    let files: Vec<String> = read_bundle(&out).into_keys().collect();
    assert_eq!(files, ["index_dataset.json", "manifest.json"]);
    assert_eq!(manifest(&out)["config"]["categories"], serde_json::json!(["dataset"]));
}

#[test]
fn gen_queries_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "gen-queries",
            "--corpus",
            corpus.to_str().unwrap(),
            "--seed",
            "7",
            "--min-cf",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_bundles_identical(&out_a, &out_b);
    let files: Vec<String> = read_bundle(&out_a).into_keys().collect();
    assert!(files.contains(&"queries_zipf_dataset.tsv".to_string()));
    assert!(files.contains(&"queries_unigram_publication.tsv".to_string()));
}

#[test]
fn gen_queries_warns_but_succeeds_when_thresholds_filter_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let out = tmp.path().join("out");
    let output = retaudit(&[
        "gen-queries",
        "--corpus",
        corpus.to_str().unwrap(),
        "--min-cf",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("unigram set is empty"),
        "stderr was: {stderr}"
    );
    assert!(stderr.contains("nothing to expand into a synthetic log"));
    // Empty sets are still written, with header lines only.
    let unigrams = read_text(&out.join("queries_unigram_dataset.tsv"));
    assert_eq!(data_rows(&unigrams, '\t').len(), 0);
}

#[test]
fn audit_on_identical_documents_reports_zero_gini() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus.jsonl");
    let mut text = String::new();
    for i in 1..=4 {
        text.push_str(&format!(
            "{}\n",
            serde_json::json!({
                "id": format!("d{i}"),
                "type": "dataset",
                "title": "wind speed",
                "body": "offshore records"
            })
        ));
    }
    write_file(&corpus, &text);
    let log = write_log(
        tmp.path(),
        &[
            ("search", "dataset", "wind", ""),
            ("search", "dataset", "records", ""),
        ],
    );
    let out = tmp.path().join("out");
    run_ok(&[
        "audit",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--cutoffs",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    let table = parse_gini_table(&read_text(&out.join("gini_by_cutoff.csv")));
    let (gini, retrieved, pct) = table[&("dataset".to_string(), 10)];
    assert_eq!(gini, 0.0, "identical docs must share identical access");
    assert_eq!(retrieved, 4);
    assert_eq!(pct, 100.0);
}

#[test]
fn audit_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let log = write_log(
        tmp.path(),
        &[
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "income", ""),
            ("search", "publication", "wind energy", ""),
        ],
    );
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "audit",
            "--corpus",
            corpus.to_str().unwrap(),
            "--log",
            log.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_bundles_identical(&out_a, &out_b);
}

#[test]
fn failed_audit_removes_partial_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    // Queries that match nothing: every category is skipped, the command
    // fails, and the bundle directory it created must be gone afterwards.
    let log = write_log(tmp.path(), &[("search", "dataset", "zzzqqq", "")]);
    let out = tmp.path().join("bundle");
    let output = retaudit(&[
        "audit",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nothing to audit"), "stderr was: {stderr}");
    assert!(!out.exists(), "failed run left {} behind", out.display());
}

#[test]
fn failed_run_preserves_preexisting_directory_contents() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let log = write_log(tmp.path(), &[("search", "dataset", "zzzqqq", "")]);
    let out = tmp.path().join("bundle");
    std::fs::create_dir(&out).unwrap();
    write_file(&out.join("keep.txt"), "mine\n");
    let output = retaudit(&[
        "audit",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert_eq!(read_text(&out.join("keep.txt")), "mine\n");
    assert_eq!(read_bundle(&out).len(), 1, "only keep.txt should remain");
}

#[test]
fn cli_flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let config = tmp.path().join("run.conf");
    write_file(&config, "cutoffs=5\nseed=9\n");
    let log = write_log(tmp.path(), &[("search", "dataset", "wind", "")]);
    let out = tmp.path().join("out");
    run_ok(&[
        "audit",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--cutoffs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let m = manifest(&out);
    assert_eq!(m["config"]["cutoffs"], serde_json::json!([2]));
    assert_eq!(m["config"]["seed"], 9, "file value survives where no flag is given");
}

#[test]
fn unknown_config_key_is_rejected_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let config = tmp.path().join("run.conf");
    write_file(&config, "seed=9\nzipf=2\n");
    let output = retaudit(&[
        "audit",
        "--corpus",
        corpus.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("unknown config key \"zipf\"") && stderr.contains(":2"),
        "stderr was: {stderr}"
    );
}

#[test]
fn invalid_rbo_p_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let output = retaudit(&[
        "compare",
        "--corpus",
        corpus.to_str().unwrap(),
        "--rbo-p",
        "1.5",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("rbo-p"), "stderr was: {stderr}");
}

#[test]
fn usefulness_without_log_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let output = retaudit(&[
        "usefulness",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("usefulness requires --log"), "stderr was: {stderr}");
}

#[test]
fn usefulness_single_sink_matches_closed_form_gini() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus.jsonl");
    let mut text = String::new();
    for i in 1..=10 {
        text.push_str(&format!(
            "{}\n",
            serde_json::json!({
                "id": format!("d{i:02}"),
                "type": "dataset",
                "title": format!("record {i}"),
                "body": ""
            })
        ));
    }
    write_file(&corpus, &text);
    // Every export lands on one document out of ten: all-documents Gini is
    // (N − 1)/N = 0.9 exactly, independent of the event count.
    let log = write_log(
        tmp.path(),
        &[
            ("export", "dataset", "record", "d01"),
            ("export", "dataset", "record", "d01"),
            ("export", "dataset", "record", "d01"),
            ("export", "dataset", "record", "d01"),
            ("export", "dataset", "record", "d01"),
        ],
    );
    let out = tmp.path().join("out");
    run_ok(&[
        "usefulness",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = data_rows(&read_text(&out.join("usefulness_gini.csv")), ',');
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row[0], "dataset");
    assert_eq!(row[1].parse::<f64>().unwrap(), 0.9);
    assert_eq!(row[2], "1"); // exported documents
    assert_eq!(row[3].parse::<f64>().unwrap(), 10.0); // % exported
    assert_eq!(row[4], "5"); // events

    let scores: BTreeMap<String, f64> = data_rows(&read_text(&out.join("usefulness_dataset.tsv")), '\t')
        .into_iter()
        .map(|r| (r[0].clone(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(scores.len(), 1);
    assert_eq!(scores["d01"], 5.0);
}

#[test]
fn usefulness_skips_export_free_categories() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let log = write_log(
        tmp.path(),
        &[
            ("export", "dataset", "wind speed", "ds1"),
            ("search", "publication", "wind energy", ""),
        ],
    );
    let out = tmp.path().join("out");
    let output = retaudit(&[
        "usefulness",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("publication"), "stderr was: {stderr}");
    let rows = data_rows(&read_text(&out.join("usefulness_gini.csv")), ',');
    assert_eq!(rows.len(), 1, "only the dataset category has export events");
    assert!(!out.join("usefulness_publication.tsv").exists());
}

#[test]
fn compare_on_duplicate_free_log_reports_full_agreement() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    // No query text repeats, so the repeated and unique sets coincide.
    let log = write_log(
        tmp.path(),
        &[
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "income", ""),
            ("search", "dataset", "pressure", ""),
        ],
    );
    let out = tmp.path().join("out");
    run_ok(&[
        "compare",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--categories",
        "dataset",
        "--jaccard-k",
        "5,10",
        "--out",
        out.to_str().unwrap(),
    ]);
    let table = parse_compare_table(&read_text(&out.join("compare.csv")));
    assert_eq!(table.len(), 5, "two jaccard rows plus three rank measures");
    for ((_, measure, k), value) in table {
        assert_eq!(value, 1.0, "{measure}@{k}");
    }
}

#[test]
fn compare_with_popularity_weights_reproduces_repeated_ranking() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    // Heavy duplication: popularity weighting must make the unique run
    // indistinguishable from the repeated run.
    let log = write_log(
        tmp.path(),
        &[
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "income", ""),
            ("search", "dataset", "income", ""),
            ("search", "dataset", "pressure", ""),
        ],
    );
    let out = tmp.path().join("out");
    run_ok(&[
        "compare",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--categories",
        "dataset",
        "--weights",
        "popularity",
        "--jaccard-k",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let table = parse_compare_table(&read_text(&out.join("compare.csv")));
    for ((_, measure, k), value) in table {
        assert_eq!(value, 1.0, "{measure}@{k}");
    }
}

#[test]
fn compare_skips_categories_too_thin_to_correlate() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    // Publications get one query touching one document — rank correlation
    // is undefined there, but datasets must still be compared.
    let log = write_log(
        tmp.path(),
        &[
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "sea level", ""),
            ("search", "publication", "wind energy", ""),
        ],
    );
    let out = tmp.path().join("out");
    let output = retaudit(&[
        "compare",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--jaccard-k",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("publication") && stderr.contains("skipping"),
        "stderr was: {stderr}"
    );
    let table = parse_compare_table(&read_text(&out.join("compare.csv")));
    let categories: std::collections::BTreeSet<&String> =
        table.keys().map(|(cat, _, _)| cat).collect();
    assert_eq!(categories.len(), 1);
    assert!(categories.contains(&"dataset".to_string()));
}

#[test]
fn published_scores_reproduce_the_published_gini() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path());
    let log = write_log(
        tmp.path(),
        &[
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "wind speed", ""),
            ("search", "dataset", "sea level", ""),
        ],
    );
    let out = tmp.path().join("out");
    run_ok(&[
        "audit",
        "--corpus",
        corpus.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--categories",
        "dataset",
        "--cutoffs",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    // Round-trip: the per-document TSV plus zero padding for never-retrieved
    // documents must regenerate exactly the Gini the bundle reports.
    let mut values: Vec<f64> = data_rows(&read_text(&out.join("scores_dataset_c10.tsv")), '\t')
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    while values.len() < 3 {
        values.push(0.0);
    }
    let recomputed = retaudit::inequality::gini(&values).unwrap();
    let published = parse_gini_table(&read_text(&out.join("gini_by_cutoff.csv")))
        [&("dataset".to_string(), 10)]
        .0;
    assert_eq!(recomputed, published);
}
