//! Bootstrap aggregation and random forests over the CART splitter.
//!
//! Member k trains on a resample drawn from an RNG seeded by (seed, k), so
//! the ensemble is reproducible whether members are fit in parallel or not,
//! and adding members never perturbs earlier ones.

use rand::Rng;
use rayon::prelude::*;

use super::splitter::{grow_tree, TreeBuildParams};
use super::{BaggingParams, FitFlags, FitOutput, FittedParams, ForestParams, Tree, TreeParams};
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::seed::rng_for;

fn fit_members(
    m: &FeatureMatrix,
    base: &TreeParams,
    n_estimators: usize,
    bootstrap: bool,
    m_try: Option<usize>,
    seed: u64,
) -> Vec<Tree> {
    let n = m.n_rows();
    let d = m.n_cols();
    // m_try >= n_cols means "scan everything": drop it so the build is
    // byte-identical to the plain tree and never touches the RNG.
    let m_try = m_try.filter(|&k| k < d);
    (0..n_estimators)
        .into_par_iter()
        .map(|k| {
            let build = TreeBuildParams {
                m_try,
                ..TreeBuildParams::cart(base)
            };
            let mut feature_rng = rng_for(seed, "ensemble_features", k as u64);
            if bootstrap {
                let mut rng = rng_for(seed, "ensemble_bootstrap", k as u64);
                let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let sample = m.subset_rows(&idx);
                let g: Vec<f64> = sample.target.iter().map(|y| -y).collect();
                grow_tree(&sample, &g, &build, Some(&mut feature_rng))
            } else {
                let g: Vec<f64> = m.target.iter().map(|y| -y).collect();
                grow_tree(m, &g, &build, Some(&mut feature_rng))
            }
        })
        .collect()
}

fn flags_for(trees: &[Tree]) -> FitFlags {
    FitFlags {
        mean_predictor: trees.iter().all(|t| t.is_single_leaf()),
        ..FitFlags::default()
    }
}

pub(crate) fn fit_bagging_impl(
    m: &FeatureMatrix,
    p: &BaggingParams,
    seed: u64,
) -> Result<FitOutput> {
    let trees = fit_members(m, &p.base(), p.n_estimators, p.bootstrap, None, seed);
    let flags = flags_for(&trees);
    Ok(FitOutput {
        fitted: FittedParams::TreeEnsemble { trees },
        flags,
    })
}

pub(crate) fn fit_forest_impl(m: &FeatureMatrix, p: &ForestParams, seed: u64) -> Result<FitOutput> {
    let d = m.n_cols();
    // Regression default: a third of the features, at least one.
    let m_try = p.m_try.unwrap_or_else(|| (d / 3).max(1));
    let trees = fit_members(m, &p.base(), p.n_estimators, p.bootstrap, Some(m_try), seed);
    let flags = flags_for(&trees);
    Ok(FitOutput {
        fitted: FittedParams::TreeEnsemble { trees },
        flags,
    })
}
