//! Agreement measures between two document rankings.
//!
//! The audit derives one ranking from the repeated query set and one from
//! the deduplicated set, then quantifies how far they diverge: top-k Jaccard
//! overlap, Kendall's τ-b and Spearman's ρ on the conjoint documents, and
//! rank-biased overlap (RBO) on the full prefixes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::corpus::Category;
use crate::retrievability::RetrievabilityVector;

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("ranking is empty (no positive scores)")]
    EmptyRanking,
    #[error("k must be >= 1")]
    InvalidK,
    #[error("RBO weight p must lie strictly between 0 and 1, got {0}")]
    InvalidP(f64),
    #[error("RBO depth must be >= 1")]
    InvalidDepth,
    #[error("need at least 2 conjoint items, found {0}")]
    TooFewConjoint(usize),
    #[error("score vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("scores must be finite, got {0}")]
    InvalidValue(f64),
    #[error("correlation is undefined when one side is entirely tied")]
    AllTied,
    #[error("ranking contains \"{0}\" more than once")]
    DuplicateItem(String),
    #[error("cannot compare rankings from different categories ({left} vs {right})")]
    CategoryMismatch { left: String, right: String },
}

/// A total order over documents, highest score first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedDocList {
    /// Distinct doc_ids, score descending, ties broken doc_id ascending.
    pub doc_ids: Vec<String>,
    /// Scores parallel to `doc_ids`, non-increasing.
    pub scores: Vec<f64>,
}

impl RankedDocList {
    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }
}

/// Order a sparse score vector into a ranking, dropping zero scores.
///
/// A map iterates doc_id-ascending and the sort is stable, so tied scores
/// keep id order.
pub fn rank_by_score(scores: &BTreeMap<String, f64>) -> Result<RankedDocList, CompareError> {
    if let Some(&bad) = scores.values().find(|v| !v.is_finite()) {
        return Err(CompareError::InvalidValue(bad));
    }
    let mut entries: Vec<(&String, f64)> = scores
        .iter()
        .filter(|&(_, &v)| v > 0.0)
        .map(|(d, &v)| (d, v))
        .collect();
    if entries.is_empty() {
        return Err(CompareError::EmptyRanking);
    }
    entries.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(RankedDocList {
        doc_ids: entries.iter().map(|(d, _)| (*d).clone()).collect(),
        scores: entries.iter().map(|&(_, v)| v).collect(),
    })
}

/// Set overlap of the top-k prefixes: |∩| / |∪| over the first
/// `min(k, length)` items of each list.
pub fn jaccard_topk<S: AsRef<str>>(s: &[S], t: &[S], k: usize) -> Result<f64, CompareError> {
    if k == 0 {
        return Err(CompareError::InvalidK);
    }
    if s.is_empty() || t.is_empty() {
        return Err(CompareError::EmptyRanking);
    }
    let top_s: HashSet<&str> = s[..k.min(s.len())].iter().map(AsRef::as_ref).collect();
    let top_t: HashSet<&str> = t[..k.min(t.len())].iter().map(AsRef::as_ref).collect();
    let intersection = top_s.intersection(&top_t).count();
    let union = top_s.len() + top_t.len() - intersection;
    Ok(intersection as f64 / union as f64)
}

/// Documents present in both rankings, with their (1-based) positions in
/// each, in doc_id order — a canonical order that keeps all downstream
/// floating-point accumulation deterministic.
fn conjoint_positions(s: &RankedDocList, t: &RankedDocList) -> Vec<(f64, f64)> {
    let pos_s: HashMap<&str, usize> = s
        .doc_ids
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i + 1))
        .collect();
    let pos_t: HashMap<&str, usize> = t
        .doc_ids
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i + 1))
        .collect();
    let conjoint: BTreeSet<&str> = s
        .doc_ids
        .iter()
        .map(String::as_str)
        .filter(|d| pos_t.contains_key(d))
        .collect();
    conjoint
        .into_iter()
        .map(|d| (pos_s[d] as f64, pos_t[d] as f64))
        .collect()
}

/// Kendall's τ-b between two rankings, computed on their conjoint documents.
pub fn kendall_tau(s: &RankedDocList, t: &RankedDocList) -> Result<f64, CompareError> {
    let pairs = conjoint_positions(s, t);
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    kendall_tau_scores(&xs, &ys)
}

/// Kendall's τ-b between two parallel score vectors:
/// `(C − D) / sqrt((n0 − n1)(n0 − n2))` where C/D count concordant and
/// discordant pairs, n0 = n(n−1)/2, and n1/n2 count pairs tied in x/y.
///
/// Pairs are counted exactly (merge-sort inversion counting, O(n log n)), so
/// the result is bit-identical to literal enumeration over all pairs.
pub fn kendall_tau_scores(xs: &[f64], ys: &[f64]) -> Result<f64, CompareError> {
    validate_parallel(xs, ys)?;
    let n = xs.len();

    // Sort jointly by (x, y): pairs tied in x are then y-ascending, so an
    // inversion in the y sequence is exactly a discordant pair.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(ys[a].total_cmp(&ys[b])));
    let sorted_y: Vec<f64> = order.iter().map(|&i| ys[i]).collect();

    let n0 = pairs_of(n as u64);
    let n1 = tied_pairs(order.iter().map(|&i| xs[i]));
    let n2 = {
        let mut y_sorted: Vec<f64> = ys.to_vec();
        y_sorted.sort_unstable_by(f64::total_cmp);
        tied_pairs(y_sorted.iter().copied())
    };
    let n3 = tied_pairs_joint(order.iter().map(|&i| (xs[i], ys[i])));

    if n1 == n0 || n2 == n0 {
        return Err(CompareError::AllTied);
    }

    let d = count_inversions(&sorted_y);
    let c = n0 - d - n1 - n2 + n3;
    let c_minus_d = c as i64 - d as i64;
    Ok(c_minus_d as f64 / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt())
}

fn validate_parallel(xs: &[f64], ys: &[f64]) -> Result<(), CompareError> {
    if xs.len() != ys.len() {
        return Err(CompareError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(CompareError::TooFewConjoint(xs.len()));
    }
    if let Some(&bad) = xs.iter().chain(ys).find(|v| !v.is_finite()) {
        return Err(CompareError::InvalidValue(bad));
    }
    Ok(())
}

fn pairs_of(run: u64) -> u64 {
    run * run.saturating_sub(1) / 2
}

fn tied_pairs(values: impl Iterator<Item = f64>) -> u64 {
    let mut total = 0;
    let mut run = 0u64;
    let mut prev: Option<f64> = None;
    for v in values {
        if prev == Some(v) {
            run += 1;
        } else {
            total += pairs_of(run);
            run = 1;
            prev = Some(v);
        }
    }
    total + pairs_of(run)
}

fn tied_pairs_joint(values: impl Iterator<Item = (f64, f64)>) -> u64 {
    let mut total = 0;
    let mut run = 0u64;
    let mut prev: Option<(f64, f64)> = None;
    for v in values {
        if prev == Some(v) {
            run += 1;
        } else {
            total += pairs_of(run);
            run = 1;
            prev = Some(v);
        }
    }
    total + pairs_of(run)
}

/// Count pairs (i, j) with i < j and values[i] > values[j], by merge sort.
fn count_inversions(values: &[f64]) -> u64 {
    fn sort_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
        let n = v.len();
        if n < 2 {
            return 0;
        }
        let mid = n / 2;
        let mut inversions = {
            let (left, right) = v.split_at_mut(mid);
            sort_count(left, buf) + sort_count(right, buf)
        };
        buf.clear();
        let (mut i, mut j) = (0, mid);
        while i < mid && j < n {
            if v[j] < v[i] {
                inversions += (mid - i) as u64;
                buf.push(v[j]);
                j += 1;
            } else {
                buf.push(v[i]);
                i += 1;
            }
        }
        buf.extend_from_slice(&v[i..mid]);
        buf.extend_from_slice(&v[j..n]);
        v.copy_from_slice(buf);
        inversions
    }
    let mut work = values.to_vec();
    let mut buf = Vec::with_capacity(values.len());
    sort_count(&mut work, &mut buf)
}

/// Replace each value by its 1-based rank; tied values share the average of
/// the positions they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &original in &order[i..=j] {
            ranks[original] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ between two rankings, on their conjoint documents.
pub fn spearman_rho(s: &RankedDocList, t: &RankedDocList) -> Result<f64, CompareError> {
    let pairs = conjoint_positions(s, t);
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    spearman_rho_scores(&xs, &ys)
}

/// Spearman's ρ between two parallel score vectors: the Pearson correlation
/// of their average-assigned ranks (which handles ties); equal to the
/// classic `1 − 6Σd²/(n(n²−1))` when tie-free.
pub fn spearman_rho_scores(xs: &[f64], ys: &[f64]) -> Result<f64, CompareError> {
    validate_parallel(xs, ys)?;
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mean_x = rx.iter().sum::<f64>() / n;
    let mean_y = ry.iter().sum::<f64>() / n;
    let mut covariance = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        covariance += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(CompareError::AllTied);
    }
    Ok(covariance / (var_x * var_y).sqrt())
}

/// Rank-biased overlap, truncated at `depth` and normalized so identical
/// lists score exactly 1.
///
/// With `A_d` the overlap fraction of the depth-`d` prefixes, this evaluates
/// `Σ_{d=1..D} p^{d−1} A_d / Σ_{d=1..D} p^{d−1}` — algebraically the
/// geometric weighting `(1−p) Σ p^{d−1} A_d / (1 − p^D)`, but with numerator
/// and denominator accumulated by the same loop so full agreement (`A_d = 1`
/// everywhere) divides a sum by itself. `depth` defaults to the shorter
/// list's length and is clamped to it.
pub fn rbo<S: AsRef<str>>(
    s: &[S],
    t: &[S],
    p: f64,
    depth: Option<usize>,
) -> Result<f64, CompareError> {
    if !(p.is_finite() && 0.0 < p && p < 1.0) {
        return Err(CompareError::InvalidP(p));
    }
    if s.is_empty() || t.is_empty() {
        return Err(CompareError::EmptyRanking);
    }
    if depth == Some(0) {
        return Err(CompareError::InvalidDepth);
    }
    let max_depth = s.len().min(t.len());
    let d_limit = depth.unwrap_or(max_depth).min(max_depth);

    let mut seen_s: HashSet<&str> = HashSet::new();
    let mut seen_t: HashSet<&str> = HashSet::new();
    let mut overlap = 0u64;
    let mut weight = 1.0;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for d in 1..=d_limit {
        let item_s = s[d - 1].as_ref();
        let item_t = t[d - 1].as_ref();
        if !seen_s.insert(item_s) {
            return Err(CompareError::DuplicateItem(item_s.to_string()));
        }
        if !seen_t.insert(item_t) {
            return Err(CompareError::DuplicateItem(item_t.to_string()));
        }
        if seen_t.contains(item_s) {
            overlap += 1;
        }
        // When the two depth-d items coincide they were counted once above;
        // otherwise check the t side against everything s has shown.
        if item_t != item_s && seen_s.contains(item_t) {
            overlap += 1;
        }
        let agreement = overlap as f64 / d as f64;
        numerator += weight * agreement;
        denominator += weight;
        weight *= p;
    }
    Ok(numerator / denominator)
}

/// The agreement table between a repeated-set ranking and a unique-set
/// ranking: Jaccard per k, plus τ, ρ, and RBO.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuerySetComparison {
    pub category: Category,
    /// `(k, jaccard_topk)` in the requested k order.
    pub jaccard: Vec<(usize, f64)>,
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    pub rbo: f64,
    pub rbo_p: f64,
    /// Documents ranked by both sides.
    pub conjoint_size: usize,
}

/// Compare the rankings induced by two retrievability vectors of the same
/// category.
pub fn compare_querysets(
    vec_r: &RetrievabilityVector,
    vec_u: &RetrievabilityVector,
    ks: &[usize],
    p: f64,
) -> Result<QuerySetComparison, CompareError> {
    if vec_r.category != vec_u.category {
        return Err(CompareError::CategoryMismatch {
            left: vec_r.category.to_string(),
            right: vec_u.category.to_string(),
        });
    }
    let ranked_r = rank_by_score(&vec_r.scores)?;
    let ranked_u = rank_by_score(&vec_u.scores)?;
    let jaccard = ks
        .iter()
        .map(|&k| Ok((k, jaccard_topk(&ranked_r.doc_ids, &ranked_u.doc_ids, k)?)))
        .collect::<Result<Vec<_>, CompareError>>()?;
    let conjoint_size = conjoint_positions(&ranked_r, &ranked_u).len();
    Ok(QuerySetComparison {
        category: vec_r.category.clone(),
        jaccard,
        kendall_tau: kendall_tau(&ranked_r, &ranked_u)?,
        spearman_rho: spearman_rho(&ranked_r, &ranked_u)?,
        rbo: rbo(&ranked_r.doc_ids, &ranked_u.doc_ids, p, None)?,
        rbo_p: p,
        conjoint_size,
    })
}
