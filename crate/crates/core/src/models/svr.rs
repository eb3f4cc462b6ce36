//! ε-insensitive support vector regression trained by SMO.
//!
//! The dual is solved in β = α − α*: maximize
//! `−½βᵀKβ + βᵀy − ε‖β‖₁` subject to `Σβ = 0`, `β ∈ [−C, C]`. Each step picks
//! the maximal violating pair (the best index to push up and the best to push
//! down), moves them by a common δ so the equality constraint is preserved,
//! and maintains the gradient cache `F = Kβ − y` incrementally.
//!
//! Features are standardized internally; the kernel matrix is precomputed in
//! f32 (memory) while all optimizer arithmetic stays f64. Above
//! `max_train_rows` the fit runs on a seeded uniform subsample.

use rayon::prelude::*;

use super::{FitFlags, FitOutput, FittedParams, Kernel, SvrParams};
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::seed::rng_for;

pub(crate) fn kernel_value(kernel: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Kernel::Rbf => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-gamma * d2).exp()
        }
    }
}

pub(crate) fn fit(m: &FeatureMatrix, p: &SvrParams, seed: u64) -> Result<FitOutput> {
    let n = m.n_rows();
    let d = m.n_cols();
    let mut flags = FitFlags::default();

    let train: Vec<usize> = if n > p.max_train_rows {
        let mut rng = rng_for(seed, "svr_subsample", 0);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..p.max_train_rows {
            let j = rand::Rng::gen_range(&mut rng, i..n);
            pool.swap(i, j);
        }
        let mut chosen = pool[..p.max_train_rows].to_vec();
        chosen.sort_unstable();
        flags.notes.push(format!(
            "trained on a seeded subsample of {} of {n} rows",
            p.max_train_rows
        ));
        chosen
    } else {
        (0..n).collect()
    };
    let t = train.len();

    let mut means = vec![0.0; d];
    let mut stds = vec![1.0; d];
    for j in 0..d {
        let mean = train.iter().map(|&i| m.value(i, j)).sum::<f64>() / t as f64;
        let var = train
            .iter()
            .map(|&i| (m.value(i, j) - mean) * (m.value(i, j) - mean))
            .sum::<f64>()
            / t as f64;
        means[j] = mean;
        if var > 0.0 {
            stds[j] = var.sqrt();
        }
    }
    let rows: Vec<Vec<f64>> = train
        .iter()
        .map(|&i| {
            (0..d)
                .map(|j| (m.value(i, j) - means[j]) / stds[j])
                .collect()
        })
        .collect();
    let y: Vec<f64> = train.iter().map(|&i| m.target[i]).collect();

    let mut kmat = vec![0.0f32; t * t];
    kmat.par_chunks_mut(t).enumerate().for_each(|(i, out)| {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = kernel_value(p.kernel, p.gamma, &rows[i], &rows[j]) as f32;
        }
    });
    let k = |i: usize, j: usize| kmat[i * t + j] as f64;

    let c = p.c;
    let eps = p.epsilon;
    let mut beta = vec![0.0f64; t];
    let mut fgrad: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut iterations = 0u64;
    let mut violation;
    let bias;
    loop {
        let mut min_up = f64::INFINITY;
        let mut max_dn = f64::NEG_INFINITY;
        let mut i_up = usize::MAX;
        let mut i_dn = usize::MAX;
        for i in 0..t {
            let f = fgrad[i];
            if beta[i] < c {
                let up = f + if beta[i] >= 0.0 { eps } else { -eps };
                if up < min_up {
                    min_up = up;
                    i_up = i;
                }
            }
            if beta[i] > -c {
                let dn = f + if beta[i] > 0.0 { eps } else { -eps };
                if dn > max_dn {
                    max_dn = dn;
                    i_dn = i;
                }
            }
        }
        if i_up == usize::MAX || i_dn == usize::MAX {
            // Σβ = 0 keeps both index sets populated; belt and braces.
            violation = 0.0;
            bias = if min_up.is_finite() { -min_up } else { -max_dn };
            break;
        }
        violation = max_dn - min_up;
        if violation <= p.tol || iterations >= p.max_iter as u64 {
            // Any b in [−min_up, −max_dn] satisfies the remaining KKT
            // conditions at tolerance; take the midpoint.
            bias = -(min_up + max_dn) / 2.0;
            break;
        }
        iterations += 1;

        let eta = (k(i_up, i_up) + k(i_dn, i_dn) - 2.0 * k(i_up, i_dn)).max(1e-12);
        let mut delta = violation / eta;
        delta = delta.min(c - beta[i_up]).min(beta[i_dn] + c);
        // The ε kink at zero changes the subgradient; stop there and let the
        // next pair selection re-evaluate.
        if beta[i_up] < 0.0 {
            delta = delta.min(-beta[i_up]);
        }
        if beta[i_dn] > 0.0 {
            delta = delta.min(beta[i_dn]);
        }
        beta[i_up] += delta;
        beta[i_dn] -= delta;
        let (row_up, row_dn) = (
            &kmat[i_up * t..(i_up + 1) * t],
            &kmat[i_dn * t..(i_dn + 1) * t],
        );
        for ((f, ku), kd) in fgrad.iter_mut().zip(row_up).zip(row_dn) {
            *f += delta * (*ku as f64 - *kd as f64);
        }
    }

    flags.converged = violation <= p.tol;
    if !flags.converged {
        flags.notes.push(format!(
            "SMO stopped at max_iter={} with KKT violation {violation:.6}",
            p.max_iter
        ));
    }
    flags.iterations = Some(iterations);
    flags.kkt_violation = Some(violation.max(0.0));

    let mut dual_coefficients = Vec::new();
    let mut support_rows = Vec::new();
    for (i, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            dual_coefficients.push(b);
            support_rows.push(rows[i].clone());
        }
    }
    if dual_coefficients.is_empty() {
        flags.mean_predictor = true;
        flags
            .notes
            .push("no support vectors; predicting a constant".into());
    }
    Ok(FitOutput {
        fitted: FittedParams::Svr {
            kernel: p.kernel,
            gamma: p.gamma,
            bias,
            dual_coefficients,
            support_rows,
            feature_means: means,
            feature_stds: stds,
        },
        flags,
    })
}
