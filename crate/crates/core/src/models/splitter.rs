//! Exact greedy split search shared by CART, the bootstrap ensembles, and
//! level-wise GBDT.
//!
//! All of those are squared-loss trees, so they reduce to one primitive: given
//! per-row gradients `g` (hessians are identically 1, so `H` is a row count),
//! grow a tree whose leaves output `−G/(n+λ)` and whose splits maximize
//!
//! ```text
//! gain = ½·[G_L²/(n_L+λ) + G_R²/(n_R+λ) − G²/(n+λ)] − min_gain
//! ```
//!
//! CART is the `g = −y, λ = α = min_gain = 0` case: leaves become node means
//! and the gain is half the SSE reduction, which has the same argmax as the
//! weighted-child-variance criterion.
//!
//! Split search walks presorted per-feature row arrays; after each split the
//! arrays are stably partitioned in place so every tree node owns a contiguous
//! segment that stays value-sorted. That keeps the whole build at
//! O(d·n·depth) with no per-node sorting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Tree, TreeNode};
use crate::features::FeatureMatrix;

pub(crate) struct TreeBuildParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub lambda_l2: f64,
    pub alpha_l1: f64,
    pub min_gain: f64,
    /// Per-node feature subsampling; `None` or `Some(>= n_cols)` scans all.
    pub m_try: Option<usize>,
}

impl TreeBuildParams {
    pub fn cart(p: &super::TreeParams) -> TreeBuildParams {
        TreeBuildParams {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            lambda_l2: 0.0,
            alpha_l1: 0.0,
            min_gain: 0.0,
            m_try: None,
        }
    }

    pub(crate) fn leaf_value(&self, g_sum: f64, n: usize) -> f64 {
        let shrunk = if self.alpha_l1 > 0.0 {
            g_sum.signum() * (g_sum.abs() - self.alpha_l1).max(0.0)
        } else {
            g_sum
        };
        -shrunk / (n as f64 + self.lambda_l2)
    }
}

struct Active {
    node: usize,
    lo: usize,
    hi: usize,
    depth: usize,
}

/// Grow a regression tree on gradients `g` (one per row of `x`).
/// `rng` is only consulted when `m_try` actually subsamples features.
pub(crate) fn grow_tree(
    x: &FeatureMatrix,
    g: &[f64],
    p: &TreeBuildParams,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    let n = x.n_rows();
    let d = x.n_cols();
    assert_eq!(g.len(), n, "gradient length must match row count");
    assert!(n >= 1, "cannot grow a tree on zero rows");

    // Per-feature row ids sorted by (value, id), plus the aligned values so
    // segment scans stay sequential in memory.
    let mut ids: Vec<Vec<u32>> = Vec::with_capacity(d);
    let mut vals: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.sort_unstable_by(|&a, &b| {
            x.value(a as usize, j)
                .total_cmp(&x.value(b as usize, j))
                .then(a.cmp(&b))
        });
        let v: Vec<f64> = idx.iter().map(|&i| x.value(i as usize, j)).collect();
        ids.push(idx);
        vals.push(v);
    }

    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf {
        value: 0.0,
        n_samples: 0,
    }];
    let mut level = vec![Active {
        node: 0,
        lo: 0,
        hi: n,
        depth: 0,
    }];
    let mut go_left = vec![false; n];
    let mut scratch_ids = vec![0u32; n];
    let mut scratch_vals = vec![0.0f64; n];
    let mut pool: Vec<usize> = (0..d).collect();
    let mut sampled: Vec<usize> = Vec::with_capacity(d);

    // Sums a segment's gradients in the deterministic segment order.
    let seg_sum = |ids: &[Vec<u32>], lo: usize, hi: usize| -> f64 {
        if d == 0 {
            g.iter().sum()
        } else {
            ids[0][lo..hi].iter().map(|&i| g[i as usize]).sum()
        }
    };

    while !level.is_empty() {
        let mut next = Vec::new();
        for a in level {
            let m = a.hi - a.lo;
            let g_sum = seg_sum(&ids, a.lo, a.hi);
            let depth_ok = p.max_depth.map_or(true, |cap| a.depth < cap);
            if !depth_ok || d == 0 || m < p.min_samples_split || m < 2 * p.min_samples_leaf {
                nodes[a.node] = TreeNode::Leaf {
                    value: p.leaf_value(g_sum, m),
                    n_samples: m,
                };
                continue;
            }

            let features: &[usize] = match p.m_try {
                Some(k) if k < d => {
                    let rng = rng
                        .as_deref_mut()
                        .expect("feature subsampling requires an rng");
                    for i in 0..k {
                        let j = rng.gen_range(i..d);
                        pool.swap(i, j);
                    }
                    sampled.clear();
                    sampled.extend_from_slice(&pool[..k]);
                    sampled.sort_unstable();
                    &sampled
                }
                _ => {
                    pool.clear();
                    pool.extend(0..d);
                    &pool
                }
            };

            let parent_score = g_sum * g_sum / (m as f64 + p.lambda_l2);
            // Splits whose gain is below float resolution of the parent score
            // are accumulation dust, not structure.
            let gain_floor = 1e-12 * parent_score.abs();
            let mut best: Option<(f64, usize, f64, usize)> = None; // gain, feature, thr, n_left
            let mut best_gain = 0.0f64;
            for &j in features {
                let seg_ids = &ids[j][a.lo..a.hi];
                let seg_vals = &vals[j][a.lo..a.hi];
                let mut gl = 0.0;
                for i in 0..m - 1 {
                    gl += g[seg_ids[i] as usize];
                    if seg_vals[i] == seg_vals[i + 1] {
                        continue;
                    }
                    let nl = i + 1;
                    if nl < p.min_samples_leaf || m - nl < p.min_samples_leaf {
                        continue;
                    }
                    let gr = g_sum - gl;
                    let gain = 0.5
                        * (gl * gl / (nl as f64 + p.lambda_l2)
                            + gr * gr / ((m - nl) as f64 + p.lambda_l2)
                            - parent_score)
                        - p.min_gain;
                    if gain > best_gain && gain > gain_floor {
                        // Midpoint threshold, nudged down if rounding would
                        // send the upper value left.
                        let mid = 0.5 * (seg_vals[i] + seg_vals[i + 1]);
                        let thr = if mid < seg_vals[i + 1] {
                            mid
                        } else {
                            seg_vals[i]
                        };
                        best_gain = gain;
                        best = Some((gain, j, thr, nl));
                    }
                }
            }

            let Some((gain, feature, threshold, n_left)) = best else {
                nodes[a.node] = TreeNode::Leaf {
                    value: p.leaf_value(g_sum, m),
                    n_samples: m,
                };
                continue;
            };

            for (i, &id) in ids[feature][a.lo..a.hi].iter().enumerate() {
                go_left[id as usize] = i < n_left;
            }
            for f in 0..d {
                let mut l = 0;
                let mut r = n_left;
                for i in a.lo..a.hi {
                    let id = ids[f][i];
                    let v = vals[f][i];
                    if go_left[id as usize] {
                        scratch_ids[l] = id;
                        scratch_vals[l] = v;
                        l += 1;
                    } else {
                        scratch_ids[r] = id;
                        scratch_vals[r] = v;
                        r += 1;
                    }
                }
                ids[f][a.lo..a.hi].copy_from_slice(&scratch_ids[..m]);
                vals[f][a.lo..a.hi].copy_from_slice(&scratch_vals[..m]);
            }

            let left = nodes.len();
            nodes.push(TreeNode::Leaf {
                value: 0.0,
                n_samples: 0,
            });
            let right = nodes.len();
            nodes.push(TreeNode::Leaf {
                value: 0.0,
                n_samples: 0,
            });
            nodes[a.node] = TreeNode::Split {
                feature,
                threshold,
                gain,
                n_samples: m,
                left,
                right,
            };
            next.push(Active {
                node: left,
                lo: a.lo,
                hi: a.lo + n_left,
                depth: a.depth + 1,
            });
            next.push(Active {
                node: right,
                lo: a.lo + n_left,
                hi: a.hi,
                depth: a.depth + 1,
            });
        }
        level = next;
    }
    Tree { nodes }
}
