//! CART regression tree: greedy variance-reduction splits, mean leaves.

use super::splitter::{grow_tree, TreeBuildParams};
use super::{FitFlags, FitOutput, FittedParams, TreeParams};
use crate::error::Result;
use crate::features::FeatureMatrix;

pub(crate) fn fit(m: &FeatureMatrix, p: &TreeParams) -> Result<FitOutput> {
    // Degenerate inputs (too few rows, constant target) fall out of the
    // splitter as a single mean leaf; they are not errors.
    let g: Vec<f64> = m.target.iter().map(|y| -y).collect();
    let tree = grow_tree(m, &g, &TreeBuildParams::cart(p), None);
    let flags = FitFlags {
        mean_predictor: tree.is_single_leaf(),
        ..FitFlags::default()
    };
    Ok(FitOutput {
        fitted: FittedParams::TreeEnsemble { trees: vec![tree] },
        flags,
    })
}
