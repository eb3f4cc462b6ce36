//! Evaluation protocol: metrics, seeded splits, k-fold CV, grid search,
//! paired t-tests, and residual diagnostics.

pub mod student_t;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::{fit, predict, ModelConfig, TrainedModel};
use crate::seed::rng_for;

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::Contract(format!(
            "mse length mismatch: {} vs {}",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Contract("mse of zero rows is undefined".into()));
    }
    let n = y.len() as f64;
    Ok(y.iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Coefficient of determination. A constant target is only scorable when the
/// prediction is exact (then 1.0 by convention); otherwise it is an error
/// rather than a silent ±∞.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::Contract(format!(
            "r² length mismatch: {} vs {}",
            y.len(),
            yhat.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::Contract("r² needs at least two rows".into()));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    if sst == 0.0 {
        if sse == 0.0 {
            return Ok(1.0);
        }
        return Err(Error::Contract(
            "r² undefined: constant target with nonzero prediction error".into(),
        ));
    }
    Ok(1.0 - sse / sst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub r2: f64,
}

pub fn metrics(y: &[f64], yhat: &[f64]) -> Result<Metrics> {
    Ok(Metrics {
        mse: mse(y, yhat)?,
        r2: r2(y, yhat)?,
    })
}

/// Row-to-fold assignment: a seeded permutation cut into k contiguous blocks,
/// the first `n mod k` of them one row larger.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
        if k < 2 {
            return Err(Error::InvalidParams(format!(
                "k-fold needs k >= 2, got {k}"
            )));
        }
        if k > n {
            return Err(Error::InvalidParams(format!(
                "cannot cut {n} rows into {k} folds"
            )));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng_for(seed, "folds", 0));
        let base = n / k;
        let extra = n % k;
        let mut assignments = vec![0; n];
        let mut at = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            for &row in &perm[at..at + size] {
                assignments[row] = fold;
            }
            at += size;
        }
        Ok(FoldPlan {
            k,
            seed,
            assignments,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.assignments.len()
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.assignments[row]
    }

    /// Ascending row indices held out in `fold`.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Seeded shuffle split; the test set gets `round(n · test_fraction)` rows.
/// Both index lists come back ascending.
pub fn train_test_split(
    n: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "test_fraction must be in (0,1), got {test_fraction}"
        )));
    }
    let t = (n as f64 * test_fraction).round() as usize;
    if t == 0 || t == n {
        return Err(Error::InvalidParams(format!(
            "test_fraction {test_fraction} leaves an empty side for {n} rows"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_for(seed, "split", 0));
    let mut test = perm[..t].to_vec();
    let mut train = perm[t..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub folds: Vec<Metrics>,
    pub mean_mse: f64,
    pub mean_r2: f64,
}

impl CvResult {
    /// Population std of the per-fold MSEs, for leaderboard context.
    pub fn mse_std(&self) -> f64 {
        let k = self.folds.len() as f64;
        let mean = self.mean_mse;
        (self
            .folds
            .iter()
            .map(|m| (m.mse - mean) * (m.mse - mean))
            .sum::<f64>()
            / k)
            .sqrt()
    }
}

/// Fit+score `config` on every fold of `plan`. Folds run in parallel; a
/// failure anywhere reports the fold it happened in.
pub fn cross_validate(
    config: &ModelConfig,
    m: &FeatureMatrix,
    plan: &FoldPlan,
) -> Result<CvResult> {
    if plan.n_rows() != m.n_rows() {
        return Err(Error::Contract(format!(
            "fold plan covers {} rows but the matrix has {}",
            plan.n_rows(),
            m.n_rows()
        )));
    }
    let folds: Vec<Metrics> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let run = || -> Result<Metrics> {
                let train = m.subset_rows(&plan.train_indices(fold));
                let test = m.subset_rows(&plan.test_indices(fold));
                let model = fit(config, &train)?;
                let preds = predict(&model, &test)?;
                metrics(&test.target, &preds)
            };
            run().map_err(|e| Error::FoldFailed {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let k = folds.len() as f64;
    Ok(CvResult {
        mean_mse: folds.iter().map(|f| f.mse).sum::<f64>() / k,
        mean_r2: folds.iter().map(|f| f.r2).sum::<f64>() / k,
        folds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateResult {
    pub config: ModelConfig,
    pub cv: Option<CvResult>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct GridSearchResult {
    pub candidates: Vec<CandidateResult>,
    /// Index into `candidates`; ties on mean MSE keep the earliest.
    pub best_index: usize,
    /// The winning configuration refit on all rows.
    pub model: TrainedModel,
}

impl GridSearchResult {
    pub fn best(&self) -> &CandidateResult {
        &self.candidates[self.best_index]
    }
}

/// Cross-validate every candidate and refit the winner on the full matrix.
/// Individual candidates may fail (recorded, not fatal); every candidate
/// failing is an error carrying all the reasons.
pub fn grid_search(
    grid: &[ModelConfig],
    m: &FeatureMatrix,
    plan: &FoldPlan,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty hyperparameter grid".into()));
    }
    let family = grid[0].family();
    if grid.iter().any(|c| c.family() != family) {
        return Err(Error::InvalidParams(
            "grid candidates must share one model family".into(),
        ));
    }
    let candidates: Vec<CandidateResult> = grid
        .par_iter()
        .map(|config| match cross_validate(config, m, plan) {
            Ok(cv) => CandidateResult {
                config: config.clone(),
                cv: Some(cv),
                error: None,
            },
            Err(e) => CandidateResult {
                config: config.clone(),
                cv: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut best_index = None;
    for (i, c) in candidates.iter().enumerate() {
        let Some(cv) = &c.cv else { continue };
        match best_index {
            None => best_index = Some(i),
            Some(b) => {
                let best_mse = candidates[b].cv.as_ref().unwrap().mean_mse;
                if cv.mean_mse < best_mse {
                    best_index = Some(i);
                }
            }
        }
    }
    let Some(best_index) = best_index else {
        return Err(Error::AllCandidatesFailed {
            reasons: candidates.iter().filter_map(|c| c.error.clone()).collect(),
        });
    };
    let model = fit(&candidates[best_index].config, m)?;
    Ok(GridSearchResult {
        candidates,
        best_index,
        model,
    })
}

/// Paired two-sided t-test over per-row scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// ±∞ when the paired differences are constant and nonzero; serialized
    /// as the strings "inf"/"-inf" since JSON has no infinities.
    #[serde(with = "t_statistic")]
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub n: usize,
    /// True when the t statistic is not finite (zero-variance differences).
    pub degenerate: bool,
}

mod t_statistic {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct TVisitor;

    impl Visitor<'_> for TVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("unknown t value {other:?}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        d.deserialize_any(TVisitor)
    }
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "paired t-test length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Contract(
            "paired t-test needs at least 2 pairs".into(),
        ));
    }
    let nf = n as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    let df = nf - 1.0;
    if var == 0.0 {
        // Identical methods: no evidence of a difference. Constant nonzero
        // difference: infinitely strong evidence, flagged as degenerate.
        return Ok(if mean == 0.0 {
            TTestResult {
                t: 0.0,
                df,
                p: 1.0,
                n,
                degenerate: false,
            }
        } else {
            TTestResult {
                t: if mean > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df,
                p: 0.0,
                n,
                degenerate: true,
            }
        });
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    Ok(TTestResult {
        t,
        df,
        p: student_t::two_sided_p(t, df),
        n,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub mean: f64,
    /// Sample standard deviation (n−1).
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Spearman correlation between |residual| and the prediction; values
    /// near 0 mean homoscedastic errors.
    pub heteroscedasticity: f64,
    /// True when a statistic collapsed (constant residuals or constant
    /// ranks) and was reported as 0.
    pub degenerate: bool,
}

pub fn residual_diagnostics(y: &[f64], yhat: &[f64]) -> Result<ResidualDiagnostics> {
    if y.len() != yhat.len() {
        return Err(Error::Contract(format!(
            "residual diagnostics length mismatch: {} vs {}",
            y.len(),
            yhat.len()
        )));
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::Contract(
            "residual diagnostics need at least 2 rows".into(),
        ));
    }
    let nf = n as f64;
    let r: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| a - b).collect();
    let mean = r.iter().sum::<f64>() / nf;
    let m2 = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
    let m3 = r.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / nf;
    let m4 = r.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    let std = (r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0)).sqrt();
    let mut degenerate = false;
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        degenerate = true;
        (0.0, 0.0)
    };
    let abs_r: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    let heteroscedasticity = match spearman(&abs_r, yhat) {
        Some(score) => score,
        None => {
            degenerate = true;
            0.0
        }
    };
    Ok(ResidualDiagnostics {
        mean,
        std,
        skewness,
        excess_kurtosis,
        heteroscedasticity,
        degenerate,
    })
}

/// Average (fractional) ranks, 1-based; ties share their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut at = 0;
    while at < n {
        let mut end = at + 1;
        while end < n && values[order[end]] == values[order[at]] {
            end += 1;
        }
        let rank = (at + 1 + end) as f64 / 2.0; // mean of ranks at+1 ..= end
        for &i in &order[at..end] {
            ranks[i] = rank;
        }
        at = end;
    }
    ranks
}

/// Spearman rank correlation; `None` when either side has constant ranks.
fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va.sqrt() * vb.sqrt()))
}
