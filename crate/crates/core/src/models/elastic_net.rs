//! Elastic net by cyclic coordinate descent on the objective
//!
//! ```text
//! (1/2n)‖y − Xw‖² + α·(l1_ratio·‖w‖₁ + (1 − l1_ratio)/2·‖w‖²)
//! ```
//!
//! Features are standardized internally (population std) and the target is
//! centered, so every coordinate update is the classic soft-threshold step;
//! the fitted coefficients are mapped back to the original scale at the end.

use super::{ElasticNetParams, FitFlags, FitOutput, FittedParams};
use crate::error::Result;
use crate::features::FeatureMatrix;

fn soft_threshold(rho: f64, t: f64) -> f64 {
    rho.signum() * (rho.abs() - t).max(0.0)
}

pub(crate) fn fit(m: &FeatureMatrix, p: &ElasticNetParams) -> Result<FitOutput> {
    let n = m.n_rows();
    let d = m.n_cols();
    let nf = n as f64;
    let y_mean = m.target.iter().sum::<f64>() / nf;

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut means = vec![0.0; d];
    let mut stds = vec![1.0; d];
    let mut constant = vec![false; d];
    for j in 0..d {
        let mut col = m.column(j);
        let mean = col.iter().sum::<f64>() / nf;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        let std = var.sqrt();
        means[j] = mean;
        if std == 0.0 {
            constant[j] = true; // coefficient pinned at zero; std stays 1
            col.iter_mut().for_each(|v| *v = 0.0);
        } else {
            stds[j] = std;
            col.iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
        cols.push(col);
    }
    // Σx̃²/n is 1 by construction, but use the computed value so the
    // stationarity condition holds for the data we actually iterate on.
    let z: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf)
        .collect();

    let l1 = p.alpha * p.l1_ratio;
    let l2 = p.alpha * (1.0 - p.l1_ratio);
    let mut w = vec![0.0; d];
    let mut r: Vec<f64> = m.target.iter().map(|v| v - y_mean).collect();
    let mut flags = FitFlags::default();
    let mut iterations = 0u64;
    let mut converged = d == 0;
    while iterations < p.max_iter as u64 && !converged {
        iterations += 1;
        let mut max_delta = 0.0f64;
        for j in 0..d {
            if constant[j] {
                continue;
            }
            let col = &cols[j];
            let rho = col.iter().zip(&r).map(|(x, ri)| x * ri).sum::<f64>() / nf + z[j] * w[j];
            let w_new = soft_threshold(rho, l1) / (z[j] + l2);
            let delta = w_new - w[j];
            if delta != 0.0 {
                for (ri, x) in r.iter_mut().zip(col) {
                    *ri -= delta * x;
                }
                w[j] = w_new;
            }
            max_delta = max_delta.max(delta.abs());
        }
        if max_delta < p.tol {
            converged = true;
        }
    }
    if !converged {
        flags.converged = false;
        flags.notes.push(format!(
            "coordinate descent stopped at max_iter={} before reaching tol={}",
            p.max_iter, p.tol
        ));
    }
    flags.iterations = Some(iterations);

    let coefficients: Vec<f64> = (0..d).map(|j| w[j] / stds[j]).collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(c, mu)| c * mu)
            .sum::<f64>();
    Ok(FitOutput {
        fitted: FittedParams::Linear {
            intercept,
            coefficients,
        },
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::matrix;
    use super::super::*;
    use crate::features::FeatureMatrix;

    fn data(n: usize) -> FeatureMatrix {
        let x: Vec<f64> = (0..n)
            .map(|i| ((i * 17) % n) as f64 / n as f64 * 4.0)
            .collect();
        let z: Vec<f64> = (0..n)
            .map(|i| ((i * 5 + 2) % n) as f64 / n as f64 - 0.5)
            .collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&z)
            .enumerate()
            .map(|(i, (a, b))| 1.0 + 2.5 * a - 1.2 * b + ((i % 7) as f64 - 3.0) * 0.05)
            .collect();
        matrix(&[("x", x), ("z", z)], y)
    }

    #[test]
    fn zero_penalty_matches_least_squares() {
        let m = data(60);
        let en = fit_elastic_net(
            &m,
            ElasticNetParams {
                alpha: 0.0,
                tol: 1e-12,
                max_iter: 100_000,
                ..ElasticNetParams::default()
            },
        )
        .unwrap();
        let ols = fit_linear(&m, LinearParams::default()).unwrap();
        let a = predict(&en, &m).unwrap();
        let b = predict(&ols, &m).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-6, "{p} vs {q}");
        }
    }

    #[test]
    fn univariate_fit_matches_the_soft_threshold_formula() {
        let n = 40;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 - 19.5) / 5.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 0.5).collect();
        let m = matrix(&[("x", x.clone())], y.clone());
        let p = ElasticNetParams {
            alpha: 0.4,
            l1_ratio: 0.7,
            tol: 1e-14,
            max_iter: 100_000,
        };
        let model = fit_elastic_net(&m, p.clone()).unwrap();

        // One standardized feature converges in a single exact step.
        let nf = n as f64;
        let mean = x.iter().sum::<f64>() / nf;
        let std = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf).sqrt();
        let y_mean = y.iter().sum::<f64>() / nf;
        let rho = x
            .iter()
            .zip(&y)
            .map(|(v, t)| (v - mean) / std * (t - y_mean))
            .sum::<f64>()
            / nf;
        let t = p.alpha * p.l1_ratio;
        let expected_std_coef =
            rho.signum() * (rho.abs() - t).max(0.0) / (1.0 + p.alpha * (1.0 - p.l1_ratio));
        let FittedParams::Linear { coefficients, .. } = &model.fitted else {
            panic!("expected linear params");
        };
        assert!(
            (coefficients[0] - expected_std_coef / std).abs() < 1e-9,
            "{} vs {}",
            coefficients[0],
            expected_std_coef / std
        );
    }

    #[test]
    fn huge_penalty_collapses_to_the_mean() {
        let m = data(50);
        let model = fit_elastic_net(
            &m,
            ElasticNetParams {
                alpha: 1e6,
                ..ElasticNetParams::default()
            },
        )
        .unwrap();
        let FittedParams::Linear {
            intercept,
            coefficients,
        } = &model.fitted
        else {
            panic!("expected linear params");
        };
        assert!(coefficients.iter().all(|c| *c == 0.0));
        let y_mean = m.target.iter().sum::<f64>() / m.n_rows() as f64;
        assert!((intercept - y_mean).abs() < 1e-12);
    }

    #[test]
    fn lasso_zeroes_a_pure_noise_feature() {
        let n = 200;
        let x: Vec<f64> = (0..n)
            .map(|i| ((i * 29) % n) as f64 / n as f64 * 2.0)
            .collect();
        let noise: Vec<f64> = (0..n)
            .map(|i| (((i * 97 + 13) % 23) as f64 - 11.0) * 0.01)
            .collect();
        let y: Vec<f64> = x.iter().map(|v| 5.0 * v).collect();
        let m = matrix(&[("signal", x), ("noise", noise)], y);
        let model = fit_elastic_net(
            &m,
            ElasticNetParams {
                alpha: 0.05,
                l1_ratio: 1.0,
                ..ElasticNetParams::default()
            },
        )
        .unwrap();
        let FittedParams::Linear { coefficients, .. } = &model.fitted else {
            panic!("expected linear params");
        };
        assert_eq!(coefficients[1], 0.0);
        assert!(coefficients[0] > 3.0);
    }

    #[test]
    fn constant_column_keeps_a_zero_coefficient() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let m = matrix(&[("c", vec![4.2; 30]), ("x", x)], y);
        let model = fit_elastic_net(&m, ElasticNetParams::default()).unwrap();
        let FittedParams::Linear { coefficients, .. } = &model.fitted else {
            panic!("expected linear params");
        };
        assert_eq!(coefficients[0], 0.0);
        assert!(coefficients[1].is_finite());
        assert!(model.flags.converged);
    }

    #[test]
    fn hitting_max_iter_is_reported() {
        let m = data(60);
        let model = fit_elastic_net(
            &m,
            ElasticNetParams {
                alpha: 1e-6,
                tol: 1e-15,
                max_iter: 1,
                ..ElasticNetParams::default()
            },
        )
        .unwrap();
        assert!(!model.flags.converged);
        assert_eq!(model.flags.iterations, Some(1));
        assert!(!model.flags.notes.is_empty());
    }
}
