//! Complexity scores: posteriors ordered by median, Hellinger distances
//! accumulated along that order, then scaled to 0-10.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::divergence::DistanceMatrix;
use crate::error::{Error, Result};
use crate::posterior::BetaDist;

/// `(type id, attributes, posterior)`.
pub type TypedPosterior = (String, Vec<(String, String)>, BetaDist);

pub const MAX_SCORE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredType {
    pub type_id: String,
    pub attributes: Vec<(String, String)>,
    pub posterior: BetaDist,
    pub median: f64,
    pub variance: f64,
    /// Cumulative adjacent distance along the median order.
    pub raw_score: f64,
    /// `raw_score` rescaled so the most complex type scores 10.
    pub scaled_score: f64,
    /// 1-based position in ascending-median order.
    pub rank: usize,
}

/// Median and variance of a posterior, the two sort keys.
#[derive(Debug, Clone, Copy)]
struct SortKey {
    median: f64,
    variance: f64,
}

fn compare_keys(x: &SortKey, y: &SortKey) -> Ordering {
    x.median
        .total_cmp(&y.median)
        .then(x.variance.total_cmp(&y.variance))
}

/// Ascending by median, then by variance; remaining ties keep input order.
pub fn sort_by_complexity(posteriors: &[(String, BetaDist)]) -> Result<Vec<(String, BetaDist)>> {
    let keys = posteriors
        .iter()
        .map(|(_, d)| {
            Ok(SortKey {
                median: d.median()?,
                variance: d.variance(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..posteriors.len()).collect();
    order.sort_by(|&i, &j| compare_keys(&keys[i], &keys[j]));
    Ok(order.into_iter().map(|i| posteriors[i].clone()).collect())
}

/// Score recurrence: `s₁ = 0`, `sₖ = sₖ₋₁ + H(Pₖ, Pₖ₋₁)` with each distance
/// looked up in `matrix`.
pub fn raw_scores<S: AsRef<str>>(ordered: &[S], matrix: &DistanceMatrix) -> Result<Vec<f64>> {
    if ordered.len() != matrix.len() {
        return Err(Error::InconsistentInput(format!(
            "order has {} types but the matrix has {}",
            ordered.len(),
            matrix.len()
        )));
    }
    let mut seen = vec![false; matrix.len()];
    let idx = ordered
        .iter()
        .map(|id| {
            let id = id.as_ref();
            let i = matrix.index_of(id).ok_or_else(|| {
                Error::InconsistentInput(format!("type `{id}` is not in the distance matrix"))
            })?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InconsistentInput(format!(
                    "type `{id}` appears twice"
                )));
            }
            Ok(i)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(idx.len());
    let mut acc = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        if k > 0 {
            acc += matrix.get(i, idx[k - 1]);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Linear min-max scaling onto [0, 10]. A constant input maps to all zeros.
pub fn scale_scores(raw: &[f64]) -> Vec<f64> {
    let Some(min) = raw.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let max = raw.iter().copied().fold(min, f64::max);
    let span = max - min;
    if span <= 0.0 {
        return vec![0.0; raw.len()];
    }
    raw.iter()
        .map(|&r| {
            if r == max {
                MAX_SCORE
            } else {
                MAX_SCORE * (r - min) / span
            }
        })
        .collect()
}

/// Result of scoring a set of types.
#[derive(Debug, Clone)]
pub struct Scores {
    /// In ascending-median (rank) order.
    pub types: Vec<ScoredType>,
    /// True when every raw score is equal and no differentiation exists.
    pub degenerate: bool,
}

/// Runs the whole scoring step for typed posteriors.
pub fn score_types(posteriors: &[TypedPosterior], matrix: &DistanceMatrix) -> Result<Scores> {
    let pairs: Vec<(String, BetaDist)> = posteriors
        .iter()
        .map(|(id, _, d)| (id.clone(), *d))
        .collect();
    let ordered = sort_by_complexity(&pairs)?;
    let ids: Vec<&str> = ordered.iter().map(|(id, _)| id.as_str()).collect();
    let raw = raw_scores(&ids, matrix)?;
    let scaled = scale_scores(&raw);
    let degenerate = raw.len() > 1 && raw.iter().all(|&r| r == raw[0]);

    let types = ordered
        .iter()
        .enumerate()
        .map(|(k, (id, d))| {
            let attributes = posteriors
                .iter()
                .find(|(pid, _, _)| pid == id)
                .map(|(_, attrs, _)| attrs.clone())
                .unwrap_or_default();
            Ok(ScoredType {
                type_id: id.clone(),
                attributes,
                posterior: *d,
                median: d.median()?,
                variance: d.variance(),
                raw_score: raw[k],
                scaled_score: scaled[k],
                rank: k + 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scores { types, degenerate })
}
