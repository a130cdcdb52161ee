//! Shared fixtures for the integration suites: a seeded desk-scale corpus,
//! a CLI runner, and bundle/table parsing helpers.

#![allow(dead_code)] // each test binary uses its own subset

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Zipf};

/// Run the CLI binary with the given arguments.
pub fn retaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retaudit"))
        .args(args)
        .output()
        .expect("spawn retaudit")
}

/// Run the CLI and require success.
pub fn run_ok(args: &[&str]) -> Output {
    let out = retaudit(args);
    assert!(
        out.status.success(),
        "retaudit {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// All regular files of a bundle directory, name → bytes.
pub fn read_bundle(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("read bundle dir") {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            files.insert(
                entry.file_name().into_string().unwrap(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    files
}

pub fn assert_bundles_identical(a: &Path, b: &Path) {
    let files_a = read_bundle(a);
    let files_b = read_bundle(b);
    assert_eq!(
        files_a.keys().collect::<Vec<_>>(),
        files_b.keys().collect::<Vec<_>>(),
        "bundle file sets differ between {} and {}",
        a.display(),
        b.display()
    );
    for (name, bytes) in &files_a {
        assert!(
            bytes == &files_b[name],
            "file {name} differs between {} and {}",
            a.display(),
            b.display()
        );
    }
}

/// Rows of a delimited table, header line skipped.
pub fn data_rows(text: &str, sep: char) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1) // column header
        .filter(|l| !l.is_empty())
        .map(|l| l.split(sep).map(str::to_string).collect())
        .collect()
}

pub fn read_text(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// The `gini_by_cutoff.csv` table as (category, cutoff) → (gini, retrieved,
/// pct_retrieved).
pub fn parse_gini_table(text: &str) -> BTreeMap<(String, u32), (f64, u64, f64)> {
    data_rows(text, ',')
        .into_iter()
        .map(|row| {
            (
                (row[0].clone(), row[1].parse().unwrap()),
                (
                    row[2].parse().unwrap(),
                    row[3].parse().unwrap(),
                    row[4].parse().unwrap(),
                ),
            )
        })
        .collect()
}

/// The `compare.csv` table as (category, measure, k) → value; k is empty for
/// the rank-correlation rows.
pub fn parse_compare_table(text: &str) -> BTreeMap<(String, String, String), f64> {
    data_rows(text, ',')
        .into_iter()
        .map(|row| {
            (
                (row[0].clone(), row[1].clone(), row[2].clone()),
                row[3].parse().unwrap(),
            )
        })
        .collect()
}

pub const DESK_SEED: &str = "42";
pub const DESK_CUTOFFS: &[u32] = &[10, 20, 30, 40, 50, 100];

/// One desk-scale run, shared by the criteria that inspect it: a seeded
/// 3,000-document corpus in 3 categories with skewed length distributions,
/// audited and compared single-threaded with a synthetic Zipf query log
/// (s = 1.5, 20,000 occurrences per category over up to 2,000 base queries).
pub struct Desk {
    pub root: PathBuf,
    pub corpus: PathBuf,
    pub audit_out: PathBuf,
    pub compare_out: PathBuf,
    pub audit_secs: f64,
    pub compare_secs: f64,
}

impl Desk {
    /// The audit/compare flags of the canonical desk run, minus `--out` and
    /// `--workers` (manifests exclude both, so bundles from runs differing
    /// only there must be byte-identical).
    pub fn flags(&self) -> Vec<String> {
        vec![
            "--corpus".into(),
            self.corpus.to_str().unwrap().into(),
            "--seed".into(),
            DESK_SEED.into(),
            "--max-queries".into(),
            "2000".into(),
            "--zipf-events".into(),
            "20000".into(),
        ]
    }
}

pub fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let root = std::env::temp_dir().join(format!("retaudit-desk-{}", std::process::id()));
        std::fs::create_dir_all(&root).unwrap();
        let corpus = root.join("corpus.jsonl");
        std::fs::write(&corpus, desk_corpus_jsonl(42)).unwrap();

        let desk = Desk {
            audit_out: root.join("audit_w1"),
            compare_out: root.join("compare_w1"),
            root,
            corpus,
            audit_secs: 0.0,
            compare_secs: 0.0,
        };

        let mut audit_args: Vec<String> = vec!["audit".into()];
        audit_args.extend(desk.flags());
        audit_args.extend([
            "--workers".into(),
            "1".into(),
            "--out".into(),
            desk.audit_out.to_str().unwrap().into(),
        ]);
        let started = Instant::now();
        run_ok(&audit_args.iter().map(String::as_str).collect::<Vec<_>>());
        let audit_secs = started.elapsed().as_secs_f64();

        let mut compare_args: Vec<String> = vec!["compare".into()];
        compare_args.extend(desk.flags());
        compare_args.extend([
            "--workers".into(),
            "1".into(),
            "--jaccard-k".into(),
            "10,100".into(),
            "--out".into(),
            desk.compare_out.to_str().unwrap().into(),
        ]);
        let started = Instant::now();
        run_ok(&compare_args.iter().map(String::as_str).collect::<Vec<_>>());
        let compare_secs = started.elapsed().as_secs_f64();

        Desk {
            audit_secs,
            compare_secs,
            ..desk
        }
    })
}

/// A seeded synthetic corpus: 1,200 publications (long documents), 1,200
/// datasets (medium), 600 variables (short), token lengths log-normal within
/// each category and term choice Zipf-skewed over a shared vocabulary.
pub fn desk_corpus_jsonl(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..1500).map(|i| format!("w{i:04}")).collect();
    let mut out = String::new();
    for shape in [
        DocShape { prefix: "pub", category: "publication", count: 1200, typical_len: 60.0, len_sigma: 0.6 },
        DocShape { prefix: "ds", category: "dataset", count: 1200, typical_len: 30.0, len_sigma: 0.8 },
        DocShape { prefix: "var", category: "variable", count: 600, typical_len: 8.0, len_sigma: 0.5 },
    ] {
        push_docs(&mut out, &mut rng, &vocab, shape);
    }
    out
}

struct DocShape {
    prefix: &'static str,
    category: &'static str,
    count: usize,
    /// Median token count; lengths are LogNormal(ln(typical_len), len_sigma).
    typical_len: f64,
    len_sigma: f64,
}

fn push_docs(out: &mut String, rng: &mut ChaCha8Rng, vocab: &[String], shape: DocShape) {
    let DocShape { prefix, category, count, typical_len, len_sigma } = shape;
    let term_dist = Zipf::new(vocab.len() as f64, 1.1).unwrap();
    let len_dist = LogNormal::new(typical_len.ln(), len_sigma).unwrap();
    for i in 0..count {
        let len = len_dist.sample(rng).round().clamp(2.0, 400.0) as usize;
        let tokens: Vec<&str> = (0..len)
            .map(|_| {
                let rank: f64 = term_dist.sample(rng);
                vocab[rank as usize - 1].as_str()
            })
            .collect();
        let split = tokens.len().min(4);
        let line = serde_json::json!({
            "id": format!("{prefix}{i:05}"),
            "type": category,
            "title": tokens[..split].join(" "),
            "body": tokens[split..].join(" "),
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
}
