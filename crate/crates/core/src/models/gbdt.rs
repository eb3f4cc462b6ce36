//! Stagewise gradient boosting for squared loss.
//!
//! The base score is the target mean; each round fits a regression tree to
//! the current gradients `pred − y` and the prediction adds
//! `learning_rate · tree(x)`. Two growth policies share that loop:
//!
//! * `LevelWise` reuses the exact presorted splitter with a depth cap.
//! * `LeafWise` bins every feature into at most `histogram_bins`
//!   equal-frequency bins once per fit, then grows best-first: the leaf with
//!   the largest gain splits next until `max_leaves` is reached. Node
//!   histograms are built by scanning only the smaller child; the sibling is
//!   the parent histogram minus it.
//!
//! Bin edges are real feature values, so a bin-index comparison during
//! growth and the `value <= threshold` test during prediction route every
//! row the same way.

use std::collections::BinaryHeap;

use super::splitter::{grow_tree, TreeBuildParams};
use super::{FitFlags, FitOutput, FittedParams, GbdtParams, Growth, Tree, TreeNode};
use crate::error::Result;
use crate::features::FeatureMatrix;

pub(crate) fn fit(m: &FeatureMatrix, p: &GbdtParams) -> Result<FitOutput> {
    let n = m.n_rows();
    let y = &m.target;
    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut preds = vec![base_score; n];
    let mut g = vec![0.0; n];
    let binned = match p.growth {
        Growth::LeafWise => Some(BinnedMatrix::build(m, p.histogram_bins)),
        Growth::LevelWise => None,
    };
    let build = TreeBuildParams {
        max_depth: p.max_depth,
        min_samples_split: 2,
        min_samples_leaf: 1,
        lambda_l2: p.lambda_l2,
        alpha_l1: p.alpha_l1,
        min_gain: p.min_gain,
        m_try: None,
    };

    let mut trees: Vec<Tree> = Vec::new();
    let mut flags = FitFlags::default();
    for round in 0..p.n_estimators {
        for i in 0..n {
            g[i] = preds[i] - y[i];
        }
        let tree = match p.growth {
            Growth::LevelWise => grow_tree(m, &g, &build, None),
            Growth::LeafWise => grow_leaf_wise(binned.as_ref().unwrap(), &g, &build, p),
        };
        if round == 0 && tree.is_single_leaf() {
            // The root gradient sums to ~0 by construction, so an unsplittable
            // first round means every later round is unsplittable too.
            flags.mean_predictor = true;
            flags
                .notes
                .push("no usable split; predicting the training mean".into());
            break;
        }
        for i in 0..n {
            preds[i] += p.learning_rate * tree.predict_row(m.row(i));
        }
        trees.push(tree);
    }
    flags.iterations = Some(trees.len() as u64);
    Ok(FitOutput {
        fitted: FittedParams::Boosted {
            base_score,
            learning_rate: p.learning_rate,
            trees,
        },
        flags,
    })
}

/// Per-feature equal-frequency bins. `code(r, j) = #{edges < value}`, so
/// `code <= k` is exactly `value <= edges[k]`.
struct BinnedMatrix {
    /// Strictly ascending candidate thresholds per feature.
    edges: Vec<Vec<f64>>,
    /// Flat histogram offsets, one slot per (feature, bin); length d+1.
    offsets: Vec<usize>,
    /// Column-major codes, feature j row i at `j * n_rows + i`.
    codes: Vec<u8>,
    n_rows: usize,
}

impl BinnedMatrix {
    fn build(m: &FeatureMatrix, max_bins: usize) -> BinnedMatrix {
        let n = m.n_rows();
        let d = m.n_cols();
        let mut edges = Vec::with_capacity(d);
        let mut offsets = Vec::with_capacity(d + 1);
        offsets.push(0);
        let mut codes = vec![0u8; d * n];
        for j in 0..d {
            let mut sorted = m.column(j);
            sorted.sort_unstable_by(f64::total_cmp);
            let e = quantile_edges(&sorted, max_bins);
            for i in 0..n {
                let v = m.value(i, j);
                codes[j * n + i] = e.partition_point(|x| *x < v) as u8;
            }
            offsets.push(offsets.last().unwrap() + e.len() + 1);
            edges.push(e);
        }
        BinnedMatrix {
            edges,
            offsets,
            codes,
            n_rows: n,
        }
    }

    fn code(&self, row: usize, feature: usize) -> usize {
        self.codes[feature * self.n_rows + row] as usize
    }

    fn total_bins(&self) -> usize {
        *self.offsets.last().unwrap()
    }
}

fn quantile_edges(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let n = sorted.len();
    let distinct = sorted.windows(2).filter(|w| w[0] != w[1]).count() + 1;
    let mut edges = Vec::new();
    if n == 0 || distinct <= 1 {
        return edges;
    }
    // Midpoint threshold between lo < hi, nudged down so hi never routes left.
    let boundary = |lo: f64, hi: f64| {
        let mid = 0.5 * (lo + hi);
        if mid < hi {
            mid
        } else {
            lo
        }
    };
    if distinct <= max_bins {
        // Few enough values: keep every boundary, making the bins exact.
        for w in sorted.windows(2) {
            if w[0] != w[1] {
                edges.push(boundary(w[0], w[1]));
            }
        }
    } else {
        for b in 1..max_bins {
            let pos = b * n / max_bins;
            if sorted[pos - 1] < sorted[pos] {
                edges.push(boundary(sorted[pos - 1], sorted[pos]));
            }
        }
    }
    debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
    edges
}

#[derive(Clone, Copy, Default)]
struct Bin {
    g: f64,
    n: u32,
}

fn build_hist(b: &BinnedMatrix, g: &[f64], rows: &[u32]) -> Vec<Bin> {
    let mut hist = vec![Bin::default(); b.total_bins()];
    let n = b.n_rows;
    for j in 0..b.edges.len() {
        let codes = &b.codes[j * n..(j + 1) * n];
        let seg = &mut hist[b.offsets[j]..b.offsets[j + 1]];
        for &r in rows {
            let bin = &mut seg[codes[r as usize] as usize];
            bin.g += g[r as usize];
            bin.n += 1;
        }
    }
    hist
}

struct SplitChoice {
    gain: f64,
    feature: usize,
    edge: usize,
    threshold: f64,
    n_left: usize,
}

fn best_split(
    b: &BinnedMatrix,
    hist: &[Bin],
    g_sum: f64,
    n: usize,
    p: &TreeBuildParams,
) -> Option<SplitChoice> {
    let lambda = p.lambda_l2;
    let parent_score = g_sum * g_sum / (n as f64 + lambda);
    let gain_floor = 1e-12 * parent_score.abs();
    let mut best: Option<SplitChoice> = None;
    let mut best_gain = 0.0f64;
    for j in 0..b.edges.len() {
        let seg = &hist[b.offsets[j]..b.offsets[j + 1]];
        let mut cl = 0usize;
        let mut gl = 0.0;
        for (e, bin) in seg[..seg.len() - 1].iter().enumerate() {
            cl += bin.n as usize;
            gl += bin.g;
            if cl == 0 {
                continue;
            }
            if cl == n {
                break;
            }
            let gr = g_sum - gl;
            let gain = 0.5
                * (gl * gl / (cl as f64 + lambda) + gr * gr / ((n - cl) as f64 + lambda)
                    - parent_score)
                - p.min_gain;
            if gain > best_gain && gain > gain_floor {
                best_gain = gain;
                best = Some(SplitChoice {
                    gain,
                    feature: j,
                    edge: e,
                    threshold: b.edges[j][e],
                    n_left: cl,
                });
            }
        }
    }
    best
}

struct LeafState {
    node: usize,
    lo: usize,
    hi: usize,
    hist: Vec<Bin>,
    choice: SplitChoice,
}

/// Heap entry: larger gain wins, ties go to the earlier-created leaf.
struct Pending {
    gain: f64,
    order: u64,
    slot: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.gain.total_cmp(&other.gain).is_eq() && self.order == other.order
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then(other.order.cmp(&self.order))
    }
}

fn grow_leaf_wise(b: &BinnedMatrix, g: &[f64], p: &TreeBuildParams, gp: &GbdtParams) -> Tree {
    let n = b.n_rows;
    let g_total: f64 = g.iter().sum();
    let mut nodes = vec![TreeNode::Leaf {
        value: p.leaf_value(g_total, n),
        n_samples: n,
    }];
    let max_leaves = gp.max_leaves.unwrap_or(usize::MAX);
    if n < 2 || b.edges.is_empty() || max_leaves < 2 {
        return Tree { nodes };
    }

    let mut rows: Vec<u32> = (0..n as u32).collect();
    let mut scratch = vec![0u32; n];
    let mut slots: Vec<Option<LeafState>> = Vec::new();
    let mut heap: BinaryHeap<Pending> = BinaryHeap::new();
    let mut order = 0u64;
    let mut enqueue =
        |slots: &mut Vec<Option<LeafState>>, heap: &mut BinaryHeap<Pending>, state: LeafState| {
            heap.push(Pending {
                gain: state.choice.gain,
                order,
                slot: slots.len(),
            });
            slots.push(Some(state));
            order += 1;
        };

    let root_hist = build_hist(b, g, &rows);
    if let Some(choice) = best_split(b, &root_hist, g_total, n, p) {
        enqueue(
            &mut slots,
            &mut heap,
            LeafState {
                node: 0,
                lo: 0,
                hi: n,
                hist: root_hist,
                choice,
            },
        );
    }

    let mut n_leaves = 1;
    while n_leaves < max_leaves {
        let Some(pending) = heap.pop() else { break };
        let st = slots[pending.slot]
            .take()
            .expect("leaf state consumed twice");
        let c = st.choice;
        let m = st.hi - st.lo;

        let (mut l, mut r) = (0, c.n_left);
        for i in st.lo..st.hi {
            let row = rows[i];
            if b.code(row as usize, c.feature) <= c.edge {
                scratch[l] = row;
                l += 1;
            } else {
                scratch[r] = row;
                r += 1;
            }
        }
        rows[st.lo..st.hi].copy_from_slice(&scratch[..m]);
        let mid = st.lo + c.n_left;

        // Recompute child gradient sums directly for leaf-value accuracy; the
        // histogram subtraction below is only reused for split search.
        let gl: f64 = rows[st.lo..mid].iter().map(|&i| g[i as usize]).sum();
        let gr: f64 = rows[mid..st.hi].iter().map(|&i| g[i as usize]).sum();
        let (nl, nr) = (c.n_left, m - c.n_left);

        let left = nodes.len();
        nodes.push(TreeNode::Leaf {
            value: p.leaf_value(gl, nl),
            n_samples: nl,
        });
        let right = nodes.len();
        nodes.push(TreeNode::Leaf {
            value: p.leaf_value(gr, nr),
            n_samples: nr,
        });
        nodes[st.node] = TreeNode::Split {
            feature: c.feature,
            threshold: c.threshold,
            gain: c.gain,
            n_samples: m,
            left,
            right,
        };
        n_leaves += 1;
        if n_leaves >= max_leaves {
            break;
        }

        let (small_range, small_is_left) = if nl <= nr {
            (st.lo..mid, true)
        } else {
            (mid..st.hi, false)
        };
        let small = build_hist(b, g, &rows[small_range]);
        let mut large = st.hist;
        for (big, s) in large.iter_mut().zip(&small) {
            big.g -= s.g;
            big.n -= s.n;
        }
        let (left_hist, right_hist) = if small_is_left {
            (small, large)
        } else {
            (large, small)
        };

        for (node, lo, hi, gs, hist) in [
            (left, st.lo, mid, gl, left_hist),
            (right, mid, st.hi, gr, right_hist),
        ] {
            if hi - lo < 2 {
                continue;
            }
            if let Some(choice) = best_split(b, &hist, gs, hi - lo, p) {
                enqueue(
                    &mut slots,
                    &mut heap,
                    LeafState {
                        node,
                        lo,
                        hi,
                        hist,
                        choice,
                    },
                );
            }
        }
    }
    Tree { nodes }
}
