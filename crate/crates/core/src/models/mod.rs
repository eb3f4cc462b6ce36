//! The seven regressor families behind one fit/predict contract.
//!
//! Everything is implemented from first principles: QR least squares,
//! coordinate-descent elastic net, exact-split CART, bootstrap ensembles,
//! a two-policy gradient-boosting engine (exact level-wise and histogram
//! leaf-wise), and SMO-based ε-SVR. Fits are deterministic functions of
//! (config, data, seed) no matter how many worker threads run them.

pub mod elastic_net;
pub mod ensemble;
pub mod gbdt;
pub mod linear;
mod splitter;
pub mod svr;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Version stamp written into every serialized model artifact.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    ElasticNet,
    Tree,
    Bagging,
    RandomForest,
    Gbdt,
    Svr,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Linear,
        Family::ElasticNet,
        Family::Tree,
        Family::Bagging,
        Family::RandomForest,
        Family::Gbdt,
        Family::Svr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::ElasticNet => "elastic_net",
            Family::Tree => "tree",
            Family::Bagging => "bagging",
            Family::RandomForest => "random_forest",
            Family::Gbdt => "gbdt",
            Family::Svr => "svr",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearParams {
    /// Return the minimum-norm solution instead of erroring on a
    /// rank-deficient design.
    pub min_norm_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticNetParams {
    pub alpha: f64,
    pub l1_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        ElasticNetParams {
            alpha: 0.1,
            l1_ratio: 0.5,
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    /// `None` grows until the leaf constraints stop it.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaggingParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub n_estimators: usize,
    pub bootstrap: bool,
}

impl BaggingParams {
    pub fn base(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

impl Default for BaggingParams {
    fn default() -> Self {
        BaggingParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            n_estimators: 100,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub n_estimators: usize,
    pub bootstrap: bool,
    /// Features sampled per node; `None` resolves to max(1, n_cols / 3).
    pub m_try: Option<usize>,
}

impl ForestParams {
    pub fn base(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            n_estimators: 100,
            bootstrap: true,
            m_try: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    LevelWise,
    LeafWise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub growth: Growth,
    /// Depth cap for LevelWise growth.
    pub max_depth: Option<usize>,
    /// Leaf cap for LeafWise growth.
    pub max_leaves: Option<usize>,
    pub lambda_l2: f64,
    pub alpha_l1: f64,
    pub min_gain: f64,
    /// LeafWise only; quantile histogram resolution.
    pub histogram_bins: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_estimators: 100,
            learning_rate: 0.1,
            growth: Growth::LeafWise,
            max_depth: Some(6),
            max_leaves: Some(31),
            lambda_l2: 1.0,
            alpha_l1: 0.0,
            min_gain: 0.0,
            histogram_bins: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; ignored by the linear kernel.
    pub gamma: f64,
    /// Training rows are capped by seeded uniform subsampling above this.
    pub max_train_rows: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            kernel: Kernel::Rbf,
            c: 10.0,
            epsilon: 1.0,
            gamma: 0.1,
            max_train_rows: 8_000,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

/// Family selector plus that family's hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyConfig {
    Linear(LinearParams),
    ElasticNet(ElasticNetParams),
    Tree(TreeParams),
    Bagging(BaggingParams),
    RandomForest(ForestParams),
    Gbdt(GbdtParams),
    Svr(SvrParams),
}

impl FamilyConfig {
    pub fn family(&self) -> Family {
        match self {
            FamilyConfig::Linear(_) => Family::Linear,
            FamilyConfig::ElasticNet(_) => Family::ElasticNet,
            FamilyConfig::Tree(_) => Family::Tree,
            FamilyConfig::Bagging(_) => Family::Bagging,
            FamilyConfig::RandomForest(_) => Family::RandomForest,
            FamilyConfig::Gbdt(_) => Family::Gbdt,
            FamilyConfig::Svr(_) => Family::Svr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family_config: FamilyConfig,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(family_config: FamilyConfig, seed: u64) -> ModelConfig {
        ModelConfig {
            family_config,
            seed,
        }
    }

    pub fn family(&self) -> Family {
        self.family_config.family()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        match &self.family_config {
            FamilyConfig::Linear(_) => Ok(()),
            FamilyConfig::ElasticNet(p) => {
                if p.alpha < 0.0 || !p.alpha.is_finite() {
                    return bad(format!("elastic_net alpha must be >= 0, got {}", p.alpha));
                }
                if !(0.0..=1.0).contains(&p.l1_ratio) {
                    return bad(format!(
                        "elastic_net l1_ratio must be in [0,1], got {}",
                        p.l1_ratio
                    ));
                }
                if p.tol <= 0.0 || p.max_iter == 0 {
                    return bad("elastic_net needs tol > 0 and max_iter >= 1".into());
                }
                Ok(())
            }
            FamilyConfig::Tree(p) => validate_tree(p),
            FamilyConfig::Bagging(p) => {
                validate_tree(&p.base())?;
                if p.n_estimators == 0 {
                    return bad("bagging n_estimators must be >= 1".into());
                }
                Ok(())
            }
            FamilyConfig::RandomForest(p) => {
                validate_tree(&p.base())?;
                if p.n_estimators == 0 {
                    return bad("random_forest n_estimators must be >= 1".into());
                }
                if p.m_try == Some(0) {
                    return bad("random_forest m_try must be >= 1".into());
                }
                Ok(())
            }
            FamilyConfig::Gbdt(p) => {
                if p.n_estimators == 0 {
                    return bad("gbdt n_estimators must be >= 1".into());
                }
                if !(0.0 < p.learning_rate && p.learning_rate <= 1.0) {
                    return bad(format!(
                        "gbdt learning_rate must be in (0,1], got {}",
                        p.learning_rate
                    ));
                }
                if p.lambda_l2 < 0.0 || p.alpha_l1 < 0.0 || p.min_gain < 0.0 {
                    return bad("gbdt regularizers must be >= 0".into());
                }
                match p.growth {
                    Growth::LevelWise => match p.max_depth {
                        Some(d) if d >= 1 => {}
                        _ => return bad("level-wise gbdt needs max_depth >= 1".into()),
                    },
                    Growth::LeafWise => {
                        match p.max_leaves {
                            Some(l) if l >= 2 => {}
                            _ => return bad("leaf-wise gbdt needs max_leaves >= 2".into()),
                        }
                        if !(2..=256).contains(&p.histogram_bins) {
                            return bad(format!(
                                "histogram_bins must be in [2,256], got {}",
                                p.histogram_bins
                            ));
                        }
                    }
                }
                Ok(())
            }
            FamilyConfig::Svr(p) => {
                if p.c <= 0.0 {
                    return bad(format!("svr c must be > 0, got {}", p.c));
                }
                if p.epsilon < 0.0 {
                    return bad(format!("svr epsilon must be >= 0, got {}", p.epsilon));
                }
                if p.kernel == Kernel::Rbf && p.gamma <= 0.0 {
                    return bad(format!("svr gamma must be > 0, got {}", p.gamma));
                }
                if p.max_train_rows == 0 || p.max_iter == 0 || p.tol <= 0.0 {
                    return bad("svr needs max_train_rows >= 1, max_iter >= 1, tol > 0".into());
                }
                Ok(())
            }
        }
    }
}

fn validate_tree(p: &TreeParams) -> Result<()> {
    if p.max_depth == Some(0) {
        return Err(Error::InvalidParams("max_depth must be >= 1".into()));
    }
    if p.min_samples_leaf == 0 {
        return Err(Error::InvalidParams("min_samples_leaf must be >= 1".into()));
    }
    if p.min_samples_split < 2 {
        return Err(Error::InvalidParams(
            "min_samples_split must be >= 2".into(),
        ));
    }
    Ok(())
}

/// A binary regression tree, nodes stored flat with child indices.
/// Node 0 is the root; rows route left when `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        n_samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        n_samples: usize,
        left: usize,
        right: usize,
    },
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value, .. } => return *value,
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
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn is_single_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    fn accumulate_gains(&self, gains: &mut [f64]) {
        for node in &self.nodes {
            if let TreeNode::Split { feature, gain, .. } = node {
                gains[*feature] += gain.max(0.0);
            }
        }
    }
}

/// Family-specific fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedParams {
    /// `prediction = intercept + coefficients · row`. Used by both the OLS
    /// and elastic-net fits.
    Linear {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    /// `prediction = mean over trees`. A single CART is the one-tree case.
    TreeEnsemble { trees: Vec<Tree> },
    /// `prediction = base_score + learning_rate · Σ tree outputs`.
    Boosted {
        base_score: f64,
        learning_rate: f64,
        trees: Vec<Tree>,
    },
    /// `prediction = bias + Σ dual_i · K(support_i, standardized row)`.
    Svr {
        kernel: Kernel,
        gamma: f64,
        bias: f64,
        dual_coefficients: Vec<f64>,
        support_rows: Vec<Vec<f64>>,
        feature_means: Vec<f64>,
        feature_stds: Vec<f64>,
    },
}

/// Fit diagnostics that are part of the contract (never silent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFlags {
    pub converged: bool,
    /// Set when the model degenerated to predicting the training mean.
    pub mean_predictor: bool,
    pub iterations: Option<u64>,
    /// Final maximal KKT violation (SVR only).
    pub kkt_violation: Option<f64>,
    pub notes: Vec<String>,
}

impl Default for FitFlags {
    fn default() -> Self {
        FitFlags {
            converged: true,
            mean_predictor: false,
            iterations: None,
            kkt_violation: None,
            notes: Vec::new(),
        }
    }
}

pub(crate) struct FitOutput {
    pub fitted: FittedParams,
    pub flags: FitFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub family: Family,
    /// Echo of the fitting configuration, seed included.
    pub config: ModelConfig,
    /// Training-time column names; predict inputs must match exactly.
    pub columns: Vec<String>,
    pub fitted: FittedParams,
    /// Gain-based, normalized to sum 1. Tree families only.
    pub feature_importances: Option<Vec<f64>>,
    pub flags: FitFlags,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.version != MODEL_SCHEMA_VERSION {
            return Err(Error::Contract(format!(
                "model artifact version {} unsupported (expected {})",
                model.version, MODEL_SCHEMA_VERSION
            )));
        }
        Ok(model)
    }
}

/// Fit `config` on `m`. The matrix must carry a target.
pub fn fit(config: &ModelConfig, m: &FeatureMatrix) -> Result<TrainedModel> {
    config.validate()?;
    if m.n_rows() == 0 {
        return Err(Error::Contract("cannot fit on an empty matrix".into()));
    }
    if m.target.len() != m.n_rows() {
        return Err(Error::Contract("fit needs a target column".into()));
    }
    let out = match &config.family_config {
        FamilyConfig::Linear(p) => linear::fit(m, p)?,
        FamilyConfig::ElasticNet(p) => elastic_net::fit(m, p)?,
        FamilyConfig::Tree(p) => tree::fit(m, p)?,
        FamilyConfig::Bagging(p) => ensemble::fit_bagging_impl(m, p, config.seed)?,
        FamilyConfig::RandomForest(p) => ensemble::fit_forest_impl(m, p, config.seed)?,
        FamilyConfig::Gbdt(p) => gbdt::fit(m, p)?,
        FamilyConfig::Svr(p) => svr::fit(m, p, config.seed)?,
    };
    let feature_importances = importances_of(&out.fitted, m.n_cols());
    Ok(TrainedModel {
        version: MODEL_SCHEMA_VERSION,
        family: config.family(),
        config: config.clone(),
        columns: m.column_names.clone(),
        fitted: out.fitted,
        feature_importances,
        flags: out.flags,
    })
}

fn importances_of(fitted: &FittedParams, n_cols: usize) -> Option<Vec<f64>> {
    let trees: &[Tree] = match fitted {
        FittedParams::TreeEnsemble { trees } => trees,
        FittedParams::Boosted { trees, .. } => trees,
        _ => return None,
    };
    let mut gains = vec![0.0; n_cols];
    for t in trees {
        t.accumulate_gains(&mut gains);
    }
    let total: f64 = gains.iter().sum();
    if total > 0.0 {
        for g in &mut gains {
            *g /= total;
        }
    }
    Some(gains)
}

/// Ordinary least squares with intercept. See [`linear`].
pub fn fit_linear(m: &FeatureMatrix, params: LinearParams) -> Result<TrainedModel> {
    fit(&ModelConfig::new(FamilyConfig::Linear(params), 0), m)
}

pub fn fit_elastic_net(m: &FeatureMatrix, params: ElasticNetParams) -> Result<TrainedModel> {
    fit(&ModelConfig::new(FamilyConfig::ElasticNet(params), 0), m)
}

pub fn fit_tree(m: &FeatureMatrix, params: TreeParams) -> Result<TrainedModel> {
    fit(&ModelConfig::new(FamilyConfig::Tree(params), 0), m)
}

pub fn fit_bagging(m: &FeatureMatrix, params: BaggingParams, seed: u64) -> Result<TrainedModel> {
    fit(&ModelConfig::new(FamilyConfig::Bagging(params), seed), m)
}

pub fn fit_random_forest(
    m: &FeatureMatrix,
    params: ForestParams,
    seed: u64,
) -> Result<TrainedModel> {
    fit(
        &ModelConfig::new(FamilyConfig::RandomForest(params), seed),
        m,
    )
}

pub fn fit_gbdt(m: &FeatureMatrix, params: GbdtParams) -> Result<TrainedModel> {
    fit(&ModelConfig::new(FamilyConfig::Gbdt(params), 0), m)
}

pub fn fit_svr(m: &FeatureMatrix, params: SvrParams, seed: u64) -> Result<TrainedModel> {
    fit(&ModelConfig::new(FamilyConfig::Svr(params), seed), m)
}

/// One finite prediction per row. `m`'s columns must match training columns
/// by name and order; the target (if any) is ignored.
pub fn predict(model: &TrainedModel, m: &FeatureMatrix) -> Result<Vec<f64>> {
    if model.columns != m.column_names {
        let missing: Vec<String> = model
            .columns
            .iter()
            .filter(|c| !m.column_names.contains(c))
            .cloned()
            .collect();
        let extra: Vec<String> = m
            .column_names
            .iter()
            .filter(|c| !model.columns.contains(c))
            .cloned()
            .collect();
        return Err(Error::ColumnMismatch { missing, extra });
    }
    let n = m.n_rows();
    let mut out = Vec::with_capacity(n);
    match &model.fitted {
        FittedParams::Linear {
            intercept,
            coefficients,
        } => {
            for i in 0..n {
                let row = m.row(i);
                let dot: f64 = row.iter().zip(coefficients).map(|(x, w)| x * w).sum();
                out.push(intercept + dot);
            }
        }
        FittedParams::TreeEnsemble { trees } => {
            let k = trees.len() as f64;
            for i in 0..n {
                let row = m.row(i);
                let sum: f64 = trees.iter().map(|t| t.predict_row(row)).sum();
                out.push(sum / k);
            }
        }
        FittedParams::Boosted {
            base_score,
            learning_rate,
            trees,
        } => {
            for i in 0..n {
                let row = m.row(i);
                let sum: f64 = trees.iter().map(|t| t.predict_row(row)).sum();
                out.push(base_score + learning_rate * sum);
            }
        }
        FittedParams::Svr {
            kernel,
            gamma,
            bias,
            dual_coefficients,
            support_rows,
            feature_means,
            feature_stds,
        } => {
            let mut scaled = vec![0.0; m.n_cols()];
            for i in 0..n {
                let row = m.row(i);
                for j in 0..row.len() {
                    scaled[j] = (row[j] - feature_means[j]) / feature_stds[j];
                }
                let mut f = *bias;
                for (beta, s) in dual_coefficients.iter().zip(support_rows) {
                    f += beta * svr::kernel_value(*kernel, *gamma, s, &scaled);
                }
                out.push(f);
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract(
            "prediction produced a non-finite value".into(),
        ));
    }
    Ok(out)
}
