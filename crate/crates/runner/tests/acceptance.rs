//! Acceptance gate for the whole workspace. Each check prints one
//! `criterion N: PASS/FAIL` line (run with `-- --nocapture --test-threads=1`
//! for an ordered listing) and fails its test on any violation.
//!
//! Criteria 1–10 are self-contained oracle and property checks. Criteria
//! 11–15 reproduce the reference results on the delivery dataset and print
//! SKIP when the fixture is absent; point `DELIVERYTIME_DATASET` at the CSV
//! (default `data/train.csv` at the workspace root) to enable them, and set
//! `DELIVERYTIME_FULL=1` to run them on all rows instead of the 5,000-row
//! subsample.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use deliverytime_core::eval::{metrics, mse, paired_t_test, r2, student_t};
use deliverytime_core::features::{haversine_km, FeatureGroup, FeatureMatrix};
use deliverytime_core::models::{
    fit, predict, BaggingParams, ElasticNetParams, FamilyConfig, FittedParams, ForestParams,
    GbdtParams, Growth, LinearParams, ModelConfig, Tree, TreeNode, TreeParams,
};
use deliverytime_core::seed::rng_for;
use deliverytime_core::select::{discretize, entropy, mutual_information};

fn check(n: u32, ok: bool, detail: &str) {
    println!(
        "criterion {n:>2}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

fn skip(n: u32, why: &str) {
    println!("criterion {n:>2}: SKIP — {why}");
}

fn matrix(columns: &[Vec<f64>], target: Vec<f64>) -> FeatureMatrix {
    let names = (0..columns.len()).map(|i| format!("c{i}")).collect();
    let groups = vec![FeatureGroup::Order; columns.len()];
    let rows = (0..columns[0].len())
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect();
    FeatureMatrix::from_rows(names, groups, rows, target).unwrap()
}

fn fit_on(config: FamilyConfig, m: &FeatureMatrix) -> deliverytime_core::models::TrainedModel {
    fit(&ModelConfig::new(config, 7), m).unwrap()
}

fn linear_coefficients(m: &FeatureMatrix, config: FamilyConfig) -> (f64, Vec<f64>) {
    match fit_on(config, m).fitted {
        FittedParams::Linear {
            intercept,
            coefficients,
        } => (intercept, coefficients),
        other => panic!("expected a linear fit, got {other:?}"),
    }
}

/// Gauss–Jordan solve of the normal equations over the design `[1 | X]`; an
/// independent least-squares route.
fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let d = columns.len() + 1;
    let row = |r: usize| -> Vec<f64> {
        std::iter::once(1.0)
            .chain(columns.iter().map(|c| c[r]))
            .collect()
    };
    let mut a = vec![vec![0.0; d + 1]; d];
    for r in 0..n {
        let x = row(r);
        for i in 0..d {
            for j in 0..d {
                a[i][j] += x[i] * x[j];
            }
            a[i][d] += x[i] * y[r];
        }
    }
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for v in &mut a[col] {
            *v /= p;
        }
        for i in 0..d {
            if i != col {
                let f = a[i][col];
                for j in 0..=d {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    (0..d).map(|i| a[i][d]).collect()
}

fn random_columns(label: &str, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_for(2024, label, 0);
    (0..d)
        .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect()
}

#[test]
fn criterion_01_ols_recovers_known_coefficients() {
    let start = Instant::now();
    let truth = [7.5, 2.0, -1.25, 0.5, 3.75, -0.1];
    let columns = random_columns("ols", 200, 5);
    let y: Vec<f64> = (0..200)
        .map(|r| {
            truth[0]
                + columns
                    .iter()
                    .zip(&truth[1..])
                    .map(|(c, w)| c[r] * w)
                    .sum::<f64>()
        })
        .collect();

    let (intercept, coefficients) = linear_coefficients(
        &matrix(&columns, y.clone()),
        FamilyConfig::Linear(LinearParams::default()),
    );
    let fitted: Vec<f64> = std::iter::once(intercept).chain(coefficients).collect();
    let oracle = normal_equations(&columns, &y);

    let vs_truth = fitted
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let vs_oracle = fitted
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    check(
        1,
        vs_truth <= 1e-8 && vs_oracle <= 1e-8 && elapsed < 1.0,
        &format!(
            "ols max |Δw*| {vs_truth:.2e}, vs pseudoinverse oracle {vs_oracle:.2e}, {elapsed:.2}s"
        ),
    );
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

#[test]
fn criterion_02_elastic_net_limits() {
    // alpha = 0 collapses to least squares.
    let columns = random_columns("enet", 120, 3);
    let mut rng = rng_for(2024, "enet_noise", 0);
    let y: Vec<f64> = (0..120)
        .map(|r| 4.0 + 2.0 * columns[0][r] - columns[1][r] + rng.gen_range(-0.5..0.5))
        .collect();
    let m = matrix(&columns, y.clone());
    let (ols_b, ols_w) = linear_coefficients(&m, FamilyConfig::Linear(LinearParams::default()));
    let (en_b, en_w) = linear_coefficients(
        &m,
        FamilyConfig::ElasticNet(ElasticNetParams {
            alpha: 0.0,
            l1_ratio: 0.5,
            tol: 1e-12,
            max_iter: 200_000,
        }),
    );
    let alpha0_gap = std::iter::once((en_b, ols_b))
        .chain(en_w.iter().copied().zip(ols_w))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    // One feature: coordinate descent must land on the closed-form
    // soft-threshold solution of its standardized objective.
    let x = &columns[0];
    let (alpha, l1_ratio) = (0.7, 0.6);
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let std_x = (x.iter().map(|v| (v - mean_x).powi(2)).sum::<f64>() / n).sqrt();
    let mean_y = y.iter().sum::<f64>() / n;
    let rho = x
        .iter()
        .zip(&y)
        .map(|(xv, yv)| (xv - mean_x) / std_x * (yv - mean_y))
        .sum::<f64>()
        / n;
    let w_closed = soft(rho, alpha * l1_ratio) / (1.0 + alpha * (1.0 - l1_ratio)) / std_x;
    let b_closed = mean_y - w_closed * mean_x;
    let (uni_b, uni_w) = linear_coefficients(
        &matrix(&[x.clone()], y.clone()),
        FamilyConfig::ElasticNet(ElasticNetParams {
            alpha,
            l1_ratio,
            tol: 1e-12,
            max_iter: 200_000,
        }),
    );
    let closed_gap = (uni_w[0] - w_closed).abs().max((uni_b - b_closed).abs());

    check(
        2,
        alpha0_gap <= 1e-4 && closed_gap <= 1e-8,
        &format!("alpha=0 vs ols {alpha0_gap:.2e}, univariate closed form {closed_gap:.2e}"),
    );
}

fn sse_of(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let sum: f64 = values.iter().sum();
    values.iter().map(|v| v * v).sum::<f64>() - sum * sum / n
}

/// SSE of the greedy tree found by brute force: every (feature, threshold)
/// candidate at each node is scored directly — no prefix-sum scan, no
/// histogram — and the immediate-gain winner is recursed, mirroring CART's
/// split policy without sharing its implementation.
fn exhaustive_sse(columns: &[Vec<f64>], y: &[f64], rows: &[usize], depth: usize) -> f64 {
    let slice_sse = |idx: &[usize]| sse_of(&idx.iter().map(|&r| y[r]).collect::<Vec<_>>());
    let node = slice_sse(rows);
    if depth == 0 || rows.len() < 2 {
        return node;
    }
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for c in columns {
        let mut order: Vec<usize> = rows.to_vec();
        order.sort_by(|&a, &b| c[a].total_cmp(&c[b]));
        for cut in 1..order.len() {
            if c[order[cut - 1]] == c[order[cut]] {
                continue;
            }
            let (l, r) = order.split_at(cut);
            let immediate = slice_sse(l) + slice_sse(r);
            if best.as_ref().is_none_or(|(b, _, _)| immediate < *b) {
                best = Some((immediate, l.to_vec(), r.to_vec()));
            }
        }
    }
    match best {
        Some((immediate, l, r)) if node - immediate > 1e-12 * node.abs().max(1.0) => {
            exhaustive_sse(columns, y, &l, depth - 1) + exhaustive_sse(columns, y, &r, depth - 1)
        }
        _ => node,
    }
}

fn tree_train_sse(tree: &Tree, m: &FeatureMatrix) -> f64 {
    (0..m.n_rows())
        .map(|r| {
            let p = tree.predict_row(m.row(r));
            (m.target[r] - p) * (m.target[r] - p)
        })
        .sum()
}

#[test]
fn criterion_03_cart_matches_brute_force() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let mut rng = rng_for(2024, "cart", case);
        let n = rng.gen_range(20..=200);
        let d = 1 + (case as usize) % 3;
        let columns: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                (0..n)
                    .map(|_| (rng.gen_range(-4.0..4.0_f64) * 2.0).round() / 2.0)
                    .collect()
            })
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|r| {
                let step = if columns[0][r] > 0.0 { 10.0 } else { 0.0 };
                step + 3.0 * columns[d - 1][r] + rng.gen_range(-2.0..2.0)
            })
            .collect();

        let m = matrix(&columns, y.clone());
        let model = fit_on(
            FamilyConfig::Tree(TreeParams {
                max_depth: Some(2),
                min_samples_split: 2,
                min_samples_leaf: 1,
            }),
            &m,
        );
        let FittedParams::TreeEnsemble { trees } = &model.fitted else {
            panic!("expected a tree fit");
        };
        let greedy = tree_train_sse(&trees[0], &m);
        let oracle = exhaustive_sse(&columns, &y, &(0..n).collect::<Vec<_>>(), 2);
        let gap = (greedy - oracle).abs() / oracle.max(1.0);
        worst = worst.max(gap);
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        3,
        worst <= 1e-9 && elapsed < 10.0,
        &format!("50 datasets, worst relative SSE gap {worst:.2e}, {elapsed:.2}s"),
    );
}

fn max_prediction_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_04_single_member_reductions() {
    let columns = random_columns("reduction", 150, 3);
    let mut rng = rng_for(2024, "reduction_y", 0);
    let y: Vec<f64> = (0..150)
        .map(|r| 8.0 * (1.3 * columns[0][r]).sin() + 2.0 * columns[1][r] + rng.gen_range(-1.0..1.0))
        .collect();
    let m = matrix(&columns, y.clone());

    let tree_preds = predict(
        &fit_on(
            FamilyConfig::Tree(TreeParams {
                max_depth: Some(4),
                min_samples_split: 2,
                min_samples_leaf: 1,
            }),
            &m,
        ),
        &m,
    )
    .unwrap();

    let bagging_preds = predict(
        &fit_on(
            FamilyConfig::Bagging(BaggingParams {
                max_depth: Some(4),
                min_samples_split: 2,
                min_samples_leaf: 1,
                n_estimators: 1,
                bootstrap: false,
            }),
            &m,
        ),
        &m,
    )
    .unwrap();

    let forest_preds = predict(
        &fit_on(
            FamilyConfig::RandomForest(ForestParams {
                max_depth: Some(4),
                min_samples_split: 2,
                min_samples_leaf: 1,
                n_estimators: 1,
                bootstrap: false,
                m_try: Some(3),
            }),
            &m,
        ),
        &m,
    )
    .unwrap();

    let gbdt_preds = predict(
        &fit_on(
            FamilyConfig::Gbdt(GbdtParams {
                n_estimators: 1,
                learning_rate: 1.0,
                growth: Growth::LevelWise,
                max_depth: Some(3),
                max_leaves: None,
                lambda_l2: 0.0,
                alpha_l1: 0.0,
                min_gain: 0.0,
                histogram_bins: 64,
            }),
            &m,
        ),
        &m,
    )
    .unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let centered_tree = fit_on(
        FamilyConfig::Tree(TreeParams {
            max_depth: Some(3),
            min_samples_split: 2,
            min_samples_leaf: 1,
        }),
        &matrix(&columns, centered),
    );
    let boost_oracle: Vec<f64> = predict(&centered_tree, &m)
        .unwrap()
        .iter()
        .map(|p| mean + p)
        .collect();

    let bag_gap = max_prediction_gap(&bagging_preds, &tree_preds);
    let forest_gap = max_prediction_gap(&forest_preds, &tree_preds);
    let boost_gap = max_prediction_gap(&gbdt_preds, &boost_oracle);
    check(
        4,
        bag_gap <= 1e-9 && forest_gap <= 1e-9 && boost_gap <= 1e-9,
        &format!("bagging {bag_gap:.2e}, forest {forest_gap:.2e}, one-round gbdt {boost_gap:.2e}"),
    );
}

fn leaf_of(tree: &Tree, row: &[f64]) -> usize {
    let mut i = 0;
    loop {
        match &tree.nodes[i] {
            TreeNode::Leaf { .. } => return i,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                i = if row[*feature] <= *threshold {
                    *left
                } else {
                    *right
                }
            }
        }
    }
}

#[test]
fn criterion_05_boosting_internals() {
    let columns = random_columns("gbdt", 200, 3);
    let mut rng = rng_for(2024, "gbdt_y", 0);
    let y: Vec<f64> = (0..200)
        .map(|r| {
            6.0 * (0.9 * columns[0][r]).sin()
                + 1.5 * columns[1][r] * columns[2][r]
                + rng.gen_range(-1.0..1.0)
        })
        .collect();
    let m = matrix(&columns, y.clone());
    let lambda = 0.5;
    let learning_rate = 0.3;
    let model = fit_on(
        FamilyConfig::Gbdt(GbdtParams {
            n_estimators: 20,
            learning_rate,
            growth: Growth::LevelWise,
            max_depth: Some(3),
            max_leaves: None,
            lambda_l2: lambda,
            alpha_l1: 0.0,
            min_gain: 0.0,
            histogram_bins: 64,
        }),
        &m,
    );
    let FittedParams::Boosted {
        base_score, trees, ..
    } = &model.fitted
    else {
        panic!("expected a boosted fit");
    };

    // Replay training: per-round loss must not increase, and every leaf value
    // must equal −G/(H+λ) for the gradients routed to it (H = row count for
    // squared loss).
    let mut preds = vec![*base_score; y.len()];
    let mut losses = vec![mse(&y, &preds).unwrap()];
    let mut worst_leaf_gap: f64 = 0.0;
    for tree in trees {
        let mut leaf_stats: std::collections::BTreeMap<usize, (f64, usize)> =
            std::collections::BTreeMap::new();
        for r in 0..y.len() {
            let g = preds[r] - y[r];
            let e = leaf_stats
                .entry(leaf_of(tree, m.row(r)))
                .or_insert((0.0, 0));
            e.0 += g;
            e.1 += 1;
        }
        for (node, (g_sum, count)) in &leaf_stats {
            let TreeNode::Leaf { value, n_samples } = &tree.nodes[*node] else {
                panic!("routed to a split node");
            };
            assert_eq!(n_samples, count);
            worst_leaf_gap = worst_leaf_gap.max((value + g_sum / (*count as f64 + lambda)).abs());
        }
        for r in 0..y.len() {
            preds[r] += learning_rate * tree.predict_row(m.row(r));
        }
        losses.push(mse(&y, &preds).unwrap());
    }
    let monotone = losses.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    // The squared-loss gradient used above, against central differences on
    // L(ŷ) = ½ Σ (ŷᵢ − yᵢ)².
    let loss = |v: &[f64]| -> f64 { v.iter().zip(&y).map(|(p, t)| 0.5 * (p - t) * (p - t)).sum() };
    let mut worst_grad_gap: f64 = 0.0;
    let mut probe = preds.clone();
    for r in (0..y.len()).step_by(17) {
        let g = probe[r] - y[r];
        let h = 1e-5 * probe[r].abs().max(1.0);
        let saved = probe[r];
        probe[r] = saved + h;
        let up = loss(&probe);
        probe[r] = saved - h;
        let down = loss(&probe);
        probe[r] = saved;
        let numeric = (up - down) / (2.0 * h);
        worst_grad_gap = worst_grad_gap.max((numeric - g).abs() / g.abs().max(1e-9));
    }

    check(
        5,
        monotone && worst_leaf_gap <= 1e-9 && worst_grad_gap <= 1e-6,
        &format!(
            "20 rounds monotone {monotone}, leaf −G/(H+λ) gap {worst_leaf_gap:.2e}, \
             gradient vs finite differences {worst_grad_gap:.2e}"
        ),
    );
}

#[test]
fn criterion_06_haversine_properties() {
    let equator = haversine_km(0.0, 0.0, 0.0, 1.0);
    let equator_ok = (equator - 111.195).abs() <= 1e-3;

    let mut rng = rng_for(2024, "haversine", 0);
    let mut point =
        || -> (f64, f64) { (rng.gen_range(-90.0..=90.0), rng.gen_range(-180.0..=180.0)) };
    let mut symmetric = true;
    let mut triangular = true;
    for _ in 0..1000 {
        let (a, b, c) = (point(), point(), point());
        let ab = haversine_km(a.0, a.1, b.0, b.1);
        let ba = haversine_km(b.0, b.1, a.0, a.1);
        let ac = haversine_km(a.0, a.1, c.0, c.1);
        let cb = haversine_km(c.0, c.1, b.0, b.1);
        symmetric &= ab >= 0.0 && (ab - ba).abs() <= 1e-9 * ab.max(1.0);
        triangular &= ab <= ac + cb + 1e-6;
    }
    check(
        6,
        equator_ok && symmetric && triangular,
        &format!("equator degree {equator:.4} km, 1000 fuzzed triples symmetric and triangular"),
    );
}

#[test]
fn criterion_07_mutual_information_limits() {
    let n = 10_000;
    let x: Vec<usize> = (0..n).map(|i| i % 4).collect();
    let identical = mutual_information(&x, &x).unwrap();
    let identical_ok = (identical - 4.0_f64.ln()).abs() <= 0.01;

    let y: Vec<usize> = (0..n).map(|i| (i / 4) % 4).collect();
    let independent = mutual_information(&x, &y).unwrap();

    let mut rng = rng_for(2024, "mi", 0);
    let raw: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let binned = discretize(&raw, 8);
    let self_exact = mutual_information(&binned, &binned).unwrap() == entropy(&binned);

    check(
        7,
        identical_ok && independent <= 0.01 && self_exact,
        &format!(
            "identical {identical:.4} vs ln4 {:.4}, independent {independent:.2e}, \
             MI(x,x) equals plug-in entropy exactly: {self_exact}",
            4.0_f64.ln()
        ),
    );
}

#[test]
fn criterion_08_metric_identities() {
    let hand = mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() == 0.0
        && mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap() == 1.0
        && mse(&[1.0, 2.0], &[2.0, 4.0]).unwrap() == 2.5
        && r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() == 1.0
        && r2(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap() == 0.0
        && r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 5.0]).unwrap() == -1.0;

    let mut rng = rng_for(2024, "metrics", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..60);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let yhat: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let mean = y.iter().sum::<f64>() / n as f64;
        let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        if sst < 1e-9 {
            continue;
        }
        let m = metrics(&y, &yhat).unwrap();
        worst = worst.max((m.r2 - (1.0 - n as f64 * m.mse / sst)).abs());
    }
    check(
        8,
        hand && worst <= 1e-10,
        &format!("hand cases exact, r2 = 1 − n·mse/SST within {worst:.2e}"),
    );
}

#[test]
fn criterion_09_student_t_reference_values() {
    let p = student_t::two_sided_p(2.228, 10.0);
    let table_ok = (p - 0.050).abs() <= 1e-3;

    let centered = (1..=30).all(|df| (student_t::cdf(0.0, df as f64) - 0.5).abs() <= 1e-12);

    let same = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let t = paired_t_test(&same, &same).unwrap();
    let degenerate_ok = t.t == 0.0 && t.p == 1.0;

    check(
        9,
        table_ok && centered && degenerate_ok,
        &format!(
            "p(t=2.228, df=10) = {p:.4}, CDF(0) centered for df 1..30, identical samples → (0, 1)"
        ),
    );
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deliverytime"))
}

fn run_checked(cmd: &mut Command) {
    let out = cmd.output().expect("spawn deliverytime");
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Hyperparameters small enough that two full seven-family runs stay well
/// inside the one-minute budget even in unoptimized builds.
fn compact_grid_config(dataset: &Path, out: &Path) -> serde_json::Value {
    serde_json::json!({
        "dataset": dataset,
        "output_dir": out,
        "grids": {
            "gbdt": [
                {"n_estimators": 40, "learning_rate": 0.1, "growth": "leaf_wise", "max_leaves": 15},
                {"n_estimators": 40, "learning_rate": 0.1, "growth": "level_wise", "max_depth": 4},
            ],
            "random_forest": [{"n_estimators": 30, "max_depth": 10}],
            "bagging": [{"n_estimators": 20, "max_depth": 10}],
            "tree": [{"max_depth": 6}, {"max_depth": 10}],
            "elastic_net": [{"alpha": 0.1, "l1_ratio": 0.5}],
            "svr": [{"kernel": "rbf", "c": 10.0, "epsilon": 2.0, "gamma": 0.1, "max_train_rows": 2000}],
        }
    })
}

fn report_without_timing(path: &Path) -> serde_json::Value {
    let mut report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    for row in report["leaderboard"].as_array_mut().unwrap() {
        row.as_object_mut().unwrap().remove("fit_seconds");
    }
    report
}

#[test]
fn criterion_10_determinism_across_worker_counts() {
    let start = Instant::now();
    let tmp = tempfile::TempDir::new().unwrap();
    let data = tmp.path().join("synth.csv");
    run_checked(bin().args([
        "synth",
        "--rows",
        "1000",
        "--seed",
        "42",
        "--output",
        data.to_str().unwrap(),
    ]));
    let out = tmp.path().join("out");
    let config_path = tmp.path().join("config.json");
    fs::write(&config_path, compact_grid_config(&data, &out).to_string()).unwrap();

    run_checked(
        bin()
            .args(["train", config_path.to_str().unwrap()])
            .env("RAYON_NUM_THREADS", "1"),
    );
    let single_csv = fs::read(out.join("leaderboard.csv")).unwrap();
    let single_report = report_without_timing(&out.join("report.json"));

    run_checked(
        bin()
            .args(["train", config_path.to_str().unwrap()])
            .env("RAYON_NUM_THREADS", "4"),
    );
    let multi_csv = fs::read(out.join("leaderboard.csv")).unwrap();
    let multi_report = report_without_timing(&out.join("report.json"));

    let elapsed = start.elapsed().as_secs_f64();
    check(
        10,
        single_csv == multi_csv && single_report == multi_report && elapsed < 60.0,
        &format!(
            "1000-row synthetic leaderboard identical for 1 vs 4 workers, both runs in {elapsed:.1}s"
        ),
    );
}

fn fixture_path() -> PathBuf {
    match std::env::var_os("DELIVERYTIME_DATASET") {
        Some(path) => PathBuf::from(path),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/train.csv"),
    }
}

/// Criteria 11–15 share one prepared dataset and two training runs, so they
/// live in a single test; every criterion still prints its own line, and all
/// failures surface together at the end.
#[test]
fn dataset_reproduction_criteria() {
    use deliverytime_core::ingest::{clean_records, parse_records};
    use deliverytime_runner::config::ExperimentConfig;
    use deliverytime_runner::experiment::{run_ablation, run_compare, run_experiment};

    let fixture = fixture_path();
    if !fixture.exists() {
        let why = format!(
            "dataset fixture not found at {}; set DELIVERYTIME_DATASET to enable",
            fixture.display()
        );
        for n in 11..=15 {
            skip(n, &why);
        }
        return;
    }
    let full = std::env::var_os("DELIVERYTIME_FULL").is_some();
    let mut failures: Vec<String> = Vec::new();
    let mut verdict = |n: u32, ok: bool, detail: &str| {
        println!(
            "criterion {n:>2}: {} — {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failures.push(format!("criterion {n}: {detail}"));
        }
    };

    // 11: cleaning keeps the documented share of rows.
    let parsed = parse_records(fs::File::open(&fixture).unwrap()).unwrap();
    let (clean, summary) = clean_records(&parsed.records);
    let clean_rows = clean.len();
    verdict(
        11,
        (40_868..=41_868).contains(&clean_rows),
        &format!(
            "{} raw rows → {clean_rows} clean (expected 41,368 ± 500)",
            summary.raw_rows
        ),
    );
    drop(clean);

    let tmp = tempfile::TempDir::new().unwrap();
    let mut base: ExperimentConfig = serde_json::from_str("{}").unwrap();
    base.dataset = fixture.clone();
    base.output_dir = tmp.path().join("out");
    if !full {
        base.max_rows = Some(5000);
    }
    base.validate().unwrap();

    // Leaf-wise and level-wise GBDT compete separately so the leaderboard
    // exposes both rows the ordering criterion needs.
    let split_grid = |growth: Growth| -> Vec<GbdtParams> {
        base.grids
            .gbdt
            .iter()
            .filter(|p| p.growth == growth)
            .cloned()
            .collect()
    };

    let mut leaf_config = base.clone();
    leaf_config.grids.gbdt = split_grid(Growth::LeafWise);
    let started = Instant::now();
    let run = run_experiment(&leaf_config).unwrap();
    let pipeline_seconds = started.elapsed().as_secs_f64();

    let mut level_config = base.clone();
    level_config.families = vec!["gbdt".into()];
    level_config.grids.gbdt = split_grid(Growth::LevelWise);
    let level_run = run_experiment(&level_config).unwrap();

    let by_family = |name: &str| {
        run.report
            .leaderboard
            .iter()
            .find(|row| row.family.name() == name)
            .unwrap_or_else(|| panic!("{name} missing from leaderboard"))
    };
    let mse_leaf = by_family("gbdt").holdout.mse;
    let mse_level = level_run.report.leaderboard[0].holdout.mse;
    let mse_forest = by_family("random_forest").holdout.mse;
    let mse_tree = by_family("tree").holdout.mse;
    let mse_linear = by_family("linear").holdout.mse;

    // 12: ensemble-over-linear ordering.
    verdict(
        12,
        mse_leaf < mse_level
            && mse_level < mse_forest
            && mse_forest < mse_tree
            && mse_tree < mse_linear,
        &format!(
            "mse leaf-wise {mse_leaf:.2} < level-wise {mse_level:.2} < forest {mse_forest:.2} \
             < tree {mse_tree:.2} < linear {mse_linear:.2}"
        ),
    );

    // 13: absolute quality bars and the runtime budget.
    let r2_gbdt = by_family("gbdt").holdout.r2;
    let r2_linear = by_family("linear").holdout.r2;
    let budget = if full { 600.0 } else { 60.0 };
    verdict(
        13,
        r2_gbdt >= 0.70 && (0.30..=0.55).contains(&r2_linear) && pipeline_seconds <= budget,
        &format!(
            "gbdt r2 {r2_gbdt:.3} (≥ 0.70), linear r2 {r2_linear:.3} (0.30..0.55), \
             pipeline {pipeline_seconds:.0}s (≤ {budget:.0}s)"
        ),
    );

    // 14: ablation directions for the leaf-wise booster.
    let mut ablate_config = leaf_config.clone();
    ablate_config.ablation_groups = vec!["Geospatial".into(), "Traffic".into(), "Weather".into()];
    let ablation = run_ablation(&ablate_config, deliverytime_core::models::Family::Gbdt).unwrap();
    let group = |name: &str| {
        ablation
            .groups
            .iter()
            .find(|g| g.group == name)
            .unwrap_or_else(|| panic!("{name} missing from ablation"))
    };
    let geo_pct = group("Geospatial").pct_delta_mse;
    let traffic_delta = group("Traffic").delta_r2;
    let weather_delta = group("Weather").delta_r2;
    verdict(
        14,
        geo_pct >= 10.0 && traffic_delta < 0.0 && weather_delta < 0.0,
        &format!(
            "dropping Geospatial: mse {geo_pct:+.1}% (≥ +10%), Traffic Δr2 {traffic_delta:+.4}, \
             Weather Δr2 {weather_delta:+.4}"
        ),
    );

    // 15: the headline significance test — best booster vs the forest.
    let compare = run_compare(
        &leaf_config,
        deliverytime_core::models::Family::Gbdt,
        deliverytime_core::models::Family::RandomForest,
    )
    .unwrap();
    verdict(
        15,
        compare.t_test.p < 0.05,
        &format!(
            "gbdt vs random forest paired t = {:.2}, p = {:.2e} over {} hold-out rows",
            compare.t_test.t, compare.t_test.p, compare.n
        ),
    );

    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
