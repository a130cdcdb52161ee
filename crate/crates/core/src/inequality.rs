//! Inequality measures over score vectors: Gini coefficient, Lorenz curve,
//! and distribution statistics.
//!
//! The Gini coefficient is evaluated on the ascending-sorted values as
//! `G = Σ_i (2i − N − 1)·v_i / (N · Σ_j v_j)` with 1-based `i`. A score
//! vector stores only positive scores, so every computation takes an
//! explicit population mode: `AllDocs` pads the implicit zeros up to the
//! collection size (the defining convention — an unretrieved document has
//! score 0), `RetrievedOnly` restricts to the positive scores.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::corpus::Category;

#[derive(Debug, thiserror::Error)]
pub enum InequalityError {
    #[error("cannot measure inequality of an empty population")]
    EmptyPopulation,
    #[error("all scores are zero; inequality is undefined, not 0")]
    ZeroTotal,
    #[error("scores must be finite and >= 0, got {0}")]
    InvalidValue(f64),
    #[error("{stored} scores stored but collection size is only {collection}")]
    CollectionTooSmall { stored: usize, collection: usize },
}

/// Which documents count as the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PopulationMode {
    /// Every document in the collection; unretrieved ones enter as zeros.
    AllDocs,
    /// Only documents with a positive score.
    RetrievedOnly,
}

impl PopulationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PopulationMode::AllDocs => "all-docs",
            PopulationMode::RetrievedOnly => "retrieved-only",
        }
    }
}

impl std::str::FromStr for PopulationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-docs" => Ok(PopulationMode::AllDocs),
            "retrieved-only" => Ok(PopulationMode::RetrievedOnly),
            other => Err(format!(
                "unknown population mode \"{other}\" (expected \"all-docs\" or \"retrieved-only\")"
            )),
        }
    }
}

fn validate_values(values: &[f64]) -> Result<(), InequalityError> {
    if values.is_empty() {
        return Err(InequalityError::EmptyPopulation);
    }
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(InequalityError::InvalidValue(bad));
    }
    Ok(())
}

/// Gini coefficient of a nonnegative value vector, in [0, 1].
///
/// Input order is irrelevant. An all-zero vector is rejected: with no mass
/// to distribute, inequality is undefined rather than perfect equality.
pub fn gini(values: &[f64]) -> Result<f64, InequalityError> {
    validate_values(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut numerator = 0.0;
    let mut total = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        numerator += (2.0 * (i + 1) as f64 - n - 1.0) * v;
        total += v;
    }
    if total <= 0.0 {
        return Err(InequalityError::ZeroTotal);
    }
    Ok(numerator / (n * total))
}

/// Lorenz curve: cumulative value share against cumulative population share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorenzCurve {
    /// `(x, y)` pairs starting at (0, 0) and ending exactly at (1, 1); x is
    /// strictly increasing, y non-decreasing and never above x.
    pub points: Vec<(f64, f64)>,
}

/// Lorenz curve of a nonnegative value vector (same domain rules as
/// [`gini`]): point `i` of the ascending-sorted values is
/// `(i/N, Σ_{j≤i} v_j / Σ v)`, with (0, 0) prepended.
pub fn lorenz(values: &[f64]) -> Result<LorenzCurve, InequalityError> {
    validate_values(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let mut cumulative = Vec::with_capacity(n);
    let mut running = 0.0;
    for v in &sorted {
        running += v;
        cumulative.push(running);
    }
    let total = running;
    if total <= 0.0 {
        return Err(InequalityError::ZeroTotal);
    }
    // Dividing the final cumulative sum by itself makes the last point land
    // on (1, 1) exactly.
    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    for (i, c) in cumulative.into_iter().enumerate() {
        points.push(((i + 1) as f64 / n as f64, c / total));
    }
    Ok(LorenzCurve { points })
}

/// Write a Lorenz curve as a two-column CSV ready for plotting.
pub fn write_lorenz_csv<W: Write>(curve: &LorenzCurve, mut w: W) -> std::io::Result<()> {
    writeln!(w, "population_share,value_share")?;
    for (x, y) in &curve.points {
        writeln!(w, "{x},{y}")?;
    }
    Ok(())
}

/// Moments and coverage of a score distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistStats {
    /// Population size the moments were computed over.
    pub count: usize,
    /// Documents with a positive score.
    pub positive_count: usize,
    pub mean: f64,
    /// Geometric mean over the strictly positive scores; absent when no
    /// score is positive (never reported as 0).
    pub geometric_mean: Option<f64>,
    /// Population variance (divides by N, not N−1: the scores are the whole
    /// population, not a sample).
    pub variance: f64,
    pub std_dev: f64,
    /// positive_count / collection_size × 100.
    pub pct_retrieved: f64,
}

/// Distribution statistics of a sparse score vector.
///
/// The arithmetic moments run over the population selected by `mode`; the
/// geometric mean always runs over the strictly positive scores only, since
/// a single zero would collapse it to 0 and hide the shape of the retrieved
/// mass.
pub fn dist_stats(
    scores: &BTreeMap<String, f64>,
    collection_size: usize,
    mode: PopulationMode,
) -> Result<DistStats, InequalityError> {
    let stored: Vec<f64> = scores.values().copied().collect();
    if let Some(&bad) = stored.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(InequalityError::InvalidValue(bad));
    }
    if collection_size < stored.len() {
        return Err(InequalityError::CollectionTooSmall {
            stored: stored.len(),
            collection: collection_size,
        });
    }
    let positive: Vec<f64> = stored.iter().copied().filter(|&v| v > 0.0).collect();
    let positive_count = positive.len();

    let count = match mode {
        PopulationMode::AllDocs => collection_size,
        PopulationMode::RetrievedOnly => positive_count,
    };
    if count == 0 {
        return Err(InequalityError::EmptyPopulation);
    }

    let sum: f64 = positive.iter().sum();
    let mean = sum / count as f64;
    let mut squared_dev: f64 = positive.iter().map(|v| (v - mean) * (v - mean)).sum();
    if mode == PopulationMode::AllDocs {
        // Every document outside the stored positives deviates by exactly
        // the mean.
        squared_dev += (collection_size - positive_count) as f64 * mean * mean;
    }
    let variance = squared_dev / count as f64;

    let geometric_mean = if positive_count == 0 {
        None
    } else {
        let log_sum: f64 = positive.iter().map(|v| v.ln()).sum();
        Some((log_sum / positive_count as f64).exp())
    };

    Ok(DistStats {
        count,
        positive_count,
        mean,
        geometric_mean,
        variance,
        std_dev: variance.sqrt(),
        pct_retrieved: positive_count as f64 / collection_size as f64 * 100.0,
    })
}

/// Gini, Lorenz curve, and distribution statistics of one score vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub category: Category,
    /// Rank cutoff the scores were accumulated at; absent for usefulness.
    pub cutoff: Option<u32>,
    pub mode: PopulationMode,
    pub gini: f64,
    pub stats: DistStats,
    pub lorenz: LorenzCurve,
}

/// Assemble the full inequality picture of a sparse score vector under one
/// population mode.
pub fn inequality_report(
    category: &Category,
    cutoff: Option<u32>,
    scores: &BTreeMap<String, f64>,
    collection_size: usize,
    mode: PopulationMode,
) -> Result<InequalityReport, InequalityError> {
    if collection_size < scores.len() {
        return Err(InequalityError::CollectionTooSmall {
            stored: scores.len(),
            collection: collection_size,
        });
    }
    let mut values: Vec<f64> = scores.values().copied().filter(|&v| v > 0.0).collect();
    if mode == PopulationMode::AllDocs {
        values.resize(collection_size, 0.0);
    }
    Ok(InequalityReport {
        category: category.clone(),
        cutoff,
        mode,
        gini: gini(&values)?,
        stats: dist_stats(scores, collection_size, mode)?,
        lorenz: lorenz(&values)?,
    })
}
