//! Ordinary least squares through Householder QR with column pivoting.
//!
//! The design matrix is `[1 | X]`. Pivoting keeps the factorization stable
//! and pushes dependent columns to the back, where the rank test
//! `|r_kk| > 1e-10 · |r_00|` cuts them off. A rank-deficient design either
//! errors with the offending column names or, with `min_norm_fallback`,
//! returns the minimum-norm solution `w = P·R1ᵀ(R1R1ᵀ)⁻¹·c` computed from the
//! leading `rank` rows of R.

use super::{FitFlags, FitOutput, FittedParams, LinearParams};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub(crate) fn fit(m: &FeatureMatrix, p: &LinearParams) -> Result<FitOutput> {
    let n = m.n_rows();
    let d = m.n_cols();
    if n <= d {
        return Err(Error::InvalidParams(format!(
            "least squares needs more rows than design columns: {n} rows vs {d} features plus intercept"
        )));
    }
    let cols = d + 1;
    // Column-major design: swapping Vec handles makes pivoting O(1).
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(cols);
    a.push(vec![1.0; n]);
    for j in 0..d {
        a.push(m.column(j));
    }
    let mut b = m.target.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut diag = vec![0.0; cols];

    for k in 0..cols {
        // Recompute remaining tail norms each step; cheaper downdating
        // formulas drift after many reflections.
        let mut pivot = k;
        let mut best = -1.0;
        for (j, col) in a.iter().enumerate().skip(k) {
            let norm2: f64 = col[k..].iter().map(|v| v * v).sum();
            if norm2 > best {
                best = norm2;
                pivot = j;
            }
        }
        if pivot != k {
            a.swap(k, pivot);
            perm.swap(k, pivot);
        }
        let norm = best.sqrt();
        if norm == 0.0 {
            continue; // every remaining tail is zero; diag stays 0
        }
        let alpha = if a[k][k] >= 0.0 { -norm } else { norm };
        let mut v = a[k][k..].to_vec();
        v[0] -= alpha; // x − α·e₁ never cancels with this sign choice
        let v2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
        if v2 == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k + 1) {
            let dot: f64 = v.iter().zip(&col[k..]).map(|(u, x)| u * x).sum();
            let s = 2.0 * dot / v2;
            for (u, x) in v.iter().zip(col[k..].iter_mut()) {
                *x -= s * u;
            }
        }
        let dot: f64 = v.iter().zip(&b[k..]).map(|(u, x)| u * x).sum();
        let s = 2.0 * dot / v2;
        for (u, x) in v.iter().zip(b[k..].iter_mut()) {
            *x -= s * u;
        }
    }

    let threshold = 1e-10 * diag[0].abs();
    let rank = diag.iter().take_while(|r| r.abs() > threshold).count();

    let mut flags = FitFlags::default();
    let wt = if rank == cols {
        let mut wt = vec![0.0; cols];
        for i in (0..cols).rev() {
            let mut s = b[i];
            for j in i + 1..cols {
                s -= a[j][i] * wt[j];
            }
            wt[i] = s / a[i][i];
        }
        wt
    } else {
        let dependent: Vec<String> = perm[rank..].iter().map(|&j| column_label(m, j)).collect();
        if !p.min_norm_fallback {
            return Err(Error::RankDeficient { columns: dependent });
        }
        flags.notes.push(format!(
            "rank-deficient design (rank {rank} of {cols}); returned the minimum-norm solution"
        ));
        min_norm_solution(&a, &b, rank, cols)?
    };

    let mut w = vec![0.0; cols];
    for k in 0..cols {
        w[perm[k]] = wt[k];
    }
    Ok(FitOutput {
        fitted: FittedParams::Linear {
            intercept: w[0],
            coefficients: w[1..].to_vec(),
        },
        flags,
    })
}

fn column_label(m: &FeatureMatrix, design_col: usize) -> String {
    if design_col == 0 {
        "(intercept)".to_string()
    } else {
        m.column_names[design_col - 1].clone()
    }
}

/// Minimum-norm solution of the underdetermined system `R1·w̃ = c`, where
/// `R1` is the top `rank` rows of R: `w̃ = R1ᵀ(R1R1ᵀ)⁻¹c`. The Gram matrix is
/// small (rank ≤ design columns) and positive definite, so plain Cholesky is
/// enough. `a` is the reflected design, column-major: `R[i][j] = a[j][i]`.
fn min_norm_solution(a: &[Vec<f64>], b: &[f64], rank: usize, cols: usize) -> Result<Vec<f64>> {
    let mut gram = vec![vec![0.0; rank]; rank];
    for i in 0..rank {
        for i2 in 0..=i {
            // R1 rows i and i2 overlap where both are nonzero: j ≥ max(i,i2).
            let s: f64 = (i..cols).map(|j| a[j][i] * a[j][i2]).sum();
            gram[i][i2] = s;
            gram[i2][i] = s;
        }
    }
    let mut chol = gram;
    for i in 0..rank {
        for j in 0..=i {
            let mut s = chol[i][j];
            for k in 0..j {
                s -= chol[i][k] * chol[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Contract(
                        "minimum-norm fallback lost positive definiteness".into(),
                    ));
                }
                chol[i][j] = s.sqrt();
            } else {
                chol[i][j] = s / chol[j][j];
            }
        }
    }
    // Solve (R1R1ᵀ)·u = c with the factor L.
    let mut u = b[..rank].to_vec();
    for i in 0..rank {
        for k in 0..i {
            u[i] = u[i] - chol[i][k] * u[k];
        }
        u[i] /= chol[i][i];
    }
    for i in (0..rank).rev() {
        for k in i + 1..rank {
            u[i] = u[i] - chol[k][i] * u[k];
        }
        u[i] /= chol[i][i];
    }
    // w̃ = R1ᵀ·u
    let mut wt = vec![0.0; cols];
    for (j, col) in a.iter().enumerate().take(cols) {
        wt[j] = (0..rank.min(j + 1)).map(|i| col[i] * u[i]).sum();
    }
    Ok(wt)
}
