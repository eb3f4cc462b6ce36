//! Mutual-information feature selection: quantile discretization, a discrete
//! plug-in MI estimator, and top-k ranking with deterministic tie-breaking.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const DEFAULT_BINS: usize = 16;
pub const DEFAULT_K: usize = 10;

/// Equal-frequency (quantile) binning into `bins` buckets.
///
/// Ranks are taken over a stable sort, so tied values all land in the bin of
/// their first occurrence in rank order — "ties go to the lower bin". A
/// constant input maps everything to bin 0.
pub fn discretize(values: &[f64], bins: usize) -> Vec<usize> {
    assert!(bins >= 2, "bins must be >= 2");
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut out = vec![0usize; n];
    let mut run_start = 0;
    for p in 0..n {
        if values[order[p]] != values[order[run_start]] {
            run_start = p;
        }
        out[order[p]] = run_start * bins / n;
    }
    out
}

/// Plug-in mutual information, in nats, over the joint histogram of two
/// bin-index sequences. Empty cells contribute zero; the estimate is clamped
/// at 0 to absorb negative floating-point dust.
pub fn mutual_information(x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Contract(format!(
            "mutual_information needs equal nonzero lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    // Each term is bitwise invariant under swapping the arguments (the
    // marginal product just commutes), but the summation order is not; fix a
    // canonical order so the symmetry holds exactly, not just within dust.
    if x > y {
        return mutual_information(y, x);
    }
    let n = x.len();
    let kx = x.iter().max().unwrap() + 1;
    let ky = y.iter().max().unwrap() + 1;
    let mut joint = vec![0u64; kx * ky];
    let mut mx = vec![0u64; kx];
    let mut my = vec![0u64; ky];
    for (&xi, &yi) in x.iter().zip(y) {
        joint[xi * ky + yi] += 1;
        mx[xi] += 1;
        my[yi] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for i in 0..kx {
        for j in 0..ky {
            let c = joint[i * ky + j];
            if c == 0 {
                continue;
            }
            let cf = c as f64;
            mi += cf / nf * ((cf * nf) / (mx[i] as f64 * my[j] as f64)).ln();
        }
    }
    Ok(mi.max(0.0))
}

/// Plug-in entropy in nats. Computed so that `mutual_information(x, x)`
/// reproduces it bit-exactly: each MI term degenerates to (c/n)·ln((c·n)/c²),
/// and IEEE division rounds (c·n)/c² and n/c to the same float while the
/// counts' products stay exactly representable.
pub fn entropy(x: &[usize]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let k = x.iter().max().unwrap() + 1;
    let mut counts = vec![0u64; k];
    for &xi in x {
        counts[xi] += 1;
    }
    let nf = x.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 / nf * (nf / c as f64).ln())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiScore {
    pub column: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// All columns, best first.
    pub scores: Vec<MiScore>,
    /// The top `min(k, n_cols)` column names, in score order.
    pub kept: Vec<String>,
}

/// Is this column already a valid bin-index sequence (dense integer codes)?
fn pass_through_bins(values: &[f64], bins: usize) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        if v.fract() != 0.0 || v < 0.0 || v >= bins as f64 {
            return None;
        }
        out.push(v as usize);
    }
    Some(out)
}

/// Rank every column by MI with the target and keep the top `k`.
///
/// Columns that already hold small non-negative integer codes are used as bin
/// indices directly; everything else (and the target) is quantile-binned.
/// Ties in score break by column name, ascending.
pub fn select_top_k(m: &FeatureMatrix, k: usize, bins: usize) -> Result<SelectionResult> {
    if m.n_rows() == 0 || m.n_cols() == 0 {
        return Err(Error::Contract(
            "select_top_k needs a nonempty matrix".into(),
        ));
    }
    if m.target.len() != m.n_rows() {
        return Err(Error::Contract("select_top_k needs a target column".into()));
    }
    if k == 0 {
        return Err(Error::Contract("k must be >= 1".into()));
    }
    if bins < 2 {
        return Err(Error::Contract("bins must be >= 2".into()));
    }

    let target_bins =
        pass_through_bins(&m.target, bins).unwrap_or_else(|| discretize(&m.target, bins));

    let mut scores: Vec<MiScore> = (0..m.n_cols())
        .into_par_iter()
        .map(|j| {
            let col = m.column(j);
            let col_bins = pass_through_bins(&col, bins).unwrap_or_else(|| discretize(&col, bins));
            mutual_information(&col_bins, &target_bins).map(|score| MiScore {
                column: m.column_names[j].clone(),
                score,
            })
        })
        .collect::<Result<_>>()?;

    scores.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.column.cmp(&b.column))
    });
    let kept = scores
        .iter()
        .take(k.min(scores.len()))
        .map(|s| s.column.clone())
        .collect();
    Ok(SelectionResult { scores, kept })
}
