//! Experiment configuration: a single strict JSON document with documented
//! defaults for every key. The fully resolved config is echoed into each
//! report so a run can be reproduced from its own artifacts.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use deliverytime_core::features::{FeatureColumn, FeatureGroup};
use deliverytime_core::models::{
    BaggingParams, ElasticNetParams, Family, FamilyConfig, ForestParams, GbdtParams, Growth,
    Kernel, LinearParams, ModelConfig, SvrParams, TreeParams,
};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result, RunnerError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Training CSV in the 20-column raw schema.
    pub dataset: PathBuf,
    /// Where train/ablate write their artifacts.
    pub output_dir: PathBuf,
    /// Root seed; every stage derives its own stream from it.
    pub seed: u64,
    /// Fraction of rows held out for final scoring.
    pub test_fraction: f64,
    pub k_folds: usize,
    /// Feature columns kept by mutual-information ranking.
    pub select_k: usize,
    /// Quantile bins for the MI estimator.
    pub mi_bins: usize,
    /// Optional seeded row cap applied after cleaning (CI-scale runs).
    pub max_rows: Option<usize>,
    /// Engineered columns to build; `None` means the full canonical set.
    pub feature_set: Option<Vec<String>>,
    /// Feature groups the ablation command drops, one at a time.
    pub ablation_groups: Vec<String>,
    /// Model families to train, in leaderboard-entry order.
    pub families: Vec<String>,
    pub grids: Grids,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::from("data/train.csv"),
            output_dir: PathBuf::from("runs"),
            seed: 42,
            test_fraction: 0.2,
            k_folds: 5,
            select_k: 10,
            mi_bins: 16,
            max_rows: None,
            feature_set: None,
            ablation_groups: FeatureGroup::ALL
                .iter()
                .map(|g| g.name().to_string())
                .collect(),
            families: Family::ALL.iter().map(|f| f.name().to_string()).collect(),
            grids: Grids::default(),
        }
    }
}

/// Per-family hyperparameter grids. Entries are full parameter objects, so
/// partial JSON falls back to each family's documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub linear: Vec<LinearParams>,
    pub elastic_net: Vec<ElasticNetParams>,
    pub tree: Vec<TreeParams>,
    pub bagging: Vec<BaggingParams>,
    pub random_forest: Vec<ForestParams>,
    pub gbdt: Vec<GbdtParams>,
    pub svr: Vec<SvrParams>,
}

impl Default for Grids {
    fn default() -> Self {
        let mut elastic_net = Vec::new();
        for alpha in [0.01, 0.1, 1.0] {
            for l1_ratio in [0.2, 0.5, 0.8] {
                elastic_net.push(ElasticNetParams {
                    alpha,
                    l1_ratio,
                    ..Default::default()
                });
            }
        }

        let mut tree = Vec::new();
        for max_depth in [Some(6), Some(10), None] {
            for min_samples_leaf in [1, 5] {
                tree.push(TreeParams {
                    max_depth,
                    min_samples_split: 2,
                    min_samples_leaf,
                });
            }
        }

        let mut random_forest = Vec::new();
        for n_estimators in [100, 300] {
            for max_depth in [Some(8), Some(12), None] {
                random_forest.push(ForestParams {
                    n_estimators,
                    max_depth,
                    ..Default::default()
                });
            }
        }

        let mut gbdt = Vec::new();
        for n_estimators in [100, 300] {
            for learning_rate in [0.05, 0.1] {
                for max_depth in [4, 6, 8] {
                    gbdt.push(GbdtParams {
                        n_estimators,
                        learning_rate,
                        growth: Growth::LevelWise,
                        max_depth: Some(max_depth),
                        ..Default::default()
                    });
                }
                for max_leaves in [15, 31, 63] {
                    gbdt.push(GbdtParams {
                        n_estimators,
                        learning_rate,
                        growth: Growth::LeafWise,
                        max_leaves: Some(max_leaves),
                        ..Default::default()
                    });
                }
            }
        }

        Grids {
            linear: vec![LinearParams::default()],
            elastic_net,
            tree,
            bagging: vec![BaggingParams {
                n_estimators: 100,
                max_depth: Some(12),
                ..Default::default()
            }],
            random_forest,
            gbdt,
            svr: vec![SvrParams {
                kernel: Kernel::Rbf,
                c: 10.0,
                epsilon: 2.0,
                gamma: 0.1,
                max_train_rows: 4_000,
                ..Default::default()
            }],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_folds < 2 {
            return Err(validation(format!(
                "k_folds must be at least 2, got {}",
                self.k_folds
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(validation(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.select_k == 0 {
            return Err(validation("select_k must be at least 1"));
        }
        if self.mi_bins < 2 {
            return Err(validation(format!(
                "mi_bins must be at least 2, got {}",
                self.mi_bins
            )));
        }
        if let Some(max_rows) = self.max_rows {
            if max_rows < 10 {
                return Err(validation(format!(
                    "max_rows must be at least 10, got {max_rows}"
                )));
            }
        }

        if self.families.is_empty() {
            return Err(validation("families must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for name in &self.families {
            if Family::from_name(name).is_none() {
                return Err(validation(format!("unknown model family {name:?}")));
            }
            if !seen.insert(name.as_str()) {
                return Err(validation(format!("duplicate model family {name:?}")));
            }
        }

        if let Some(columns) = &self.feature_set {
            if columns.is_empty() {
                return Err(validation("feature_set must not be empty when given"));
            }
            let mut seen = BTreeSet::new();
            for name in columns {
                if FeatureColumn::from_name(name).is_none() {
                    return Err(validation(format!("unknown feature column {name:?}")));
                }
                if !seen.insert(name.as_str()) {
                    return Err(validation(format!("duplicate feature column {name:?}")));
                }
            }
        }

        let mut seen = BTreeSet::new();
        for name in &self.ablation_groups {
            if FeatureGroup::from_name(name).is_none() {
                return Err(validation(format!("unknown feature group {name:?}")));
            }
            if !seen.insert(name.as_str()) {
                return Err(validation(format!("duplicate feature group {name:?}")));
            }
        }

        for family in self.families() {
            let grid = self.grid_for(family);
            if grid.is_empty() {
                return Err(validation(format!("family {family} has an empty grid")));
            }
            for candidate in grid {
                ModelConfig::new(candidate, self.seed)
                    .validate()
                    .map_err(|e| validation(format!("grid for {family}: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn families(&self) -> Vec<Family> {
        self.families
            .iter()
            .filter_map(|n| Family::from_name(n))
            .collect()
    }

    pub fn feature_columns(&self) -> Vec<FeatureColumn> {
        match &self.feature_set {
            Some(names) => names
                .iter()
                .filter_map(|n| FeatureColumn::from_name(n))
                .collect(),
            None => deliverytime_core::features::default_feature_set(),
        }
    }

    pub fn ablation_groups(&self) -> Vec<FeatureGroup> {
        self.ablation_groups
            .iter()
            .filter_map(|n| FeatureGroup::from_name(n))
            .collect()
    }

    pub fn grid_for(&self, family: Family) -> Vec<FamilyConfig> {
        match family {
            Family::Linear => self
                .grids
                .linear
                .iter()
                .cloned()
                .map(FamilyConfig::Linear)
                .collect(),
            Family::ElasticNet => self
                .grids
                .elastic_net
                .iter()
                .cloned()
                .map(FamilyConfig::ElasticNet)
                .collect(),
            Family::Tree => self
                .grids
                .tree
                .iter()
                .cloned()
                .map(FamilyConfig::Tree)
                .collect(),
            Family::Bagging => self
                .grids
                .bagging
                .iter()
                .cloned()
                .map(FamilyConfig::Bagging)
                .collect(),
            Family::RandomForest => self
                .grids
                .random_forest
                .iter()
                .cloned()
                .map(FamilyConfig::RandomForest)
                .collect(),
            Family::Gbdt => self
                .grids
                .gbdt
                .iter()
                .cloned()
                .map(FamilyConfig::Gbdt)
                .collect(),
            Family::Svr => self
                .grids
                .svr
                .iter()
                .cloned()
                .map(FamilyConfig::Svr)
                .collect(),
        }
    }
}

/// Load, parse, and validate a config file. A blank file means "all
/// defaults"; unknown keys and out-of-range values are rejected by name.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        RunnerError::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    let text = if text.trim().is_empty() {
        "{}"
    } else {
        text.as_str()
    };
    let config: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| RunnerError::Validation(format!("config {}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_resolves_to_the_documented_defaults() {
        let config: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.k_folds, 5);
        assert_eq!(config.test_fraction, 0.2);
        assert_eq!(config.select_k, 10);
        assert_eq!(config.mi_bins, 16);
        assert_eq!(config.families.len(), 7);
        config.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"foo": 1}"#).unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
    }

    #[test]
    fn one_fold_fails_validation() {
        let config: ExperimentConfig = serde_json::from_str(r#"{"k_folds": 1}"#).unwrap();
        let err = config.validate().unwrap_err();
        assert!(matches!(err, RunnerError::Validation(ref m) if m.contains("k_folds")));
    }

    #[test]
    fn partial_grid_override_keeps_other_family_defaults() {
        let config: ExperimentConfig =
            serde_json::from_str(r#"{"grids": {"gbdt": [{"n_estimators": 10}]}}"#).unwrap();
        assert_eq!(config.grids.gbdt.len(), 1);
        assert_eq!(config.grids.gbdt[0].n_estimators, 10);
        assert_eq!(config.grids.elastic_net.len(), 9);
        assert_eq!(config.grids.linear.len(), 1);
    }

    #[test]
    fn bad_hyperparameters_fail_at_load_time() {
        let config: ExperimentConfig =
            serde_json::from_str(r#"{"grids": {"elastic_net": [{"alpha": -1.0}]}}"#).unwrap();
        let err = config.validate().unwrap_err();
        assert!(matches!(err, RunnerError::Validation(ref m) if m.contains("elastic_net")));
    }

    #[test]
    fn unknown_family_and_group_names_are_rejected() {
        let config: ExperimentConfig =
            serde_json::from_str(r#"{"families": ["boostzilla"]}"#).unwrap();
        assert!(config.validate().is_err());
        let config: ExperimentConfig =
            serde_json::from_str(r#"{"ablation_groups": ["Sundries"]}"#).unwrap();
        assert!(config.validate().is_err());
    }
}
