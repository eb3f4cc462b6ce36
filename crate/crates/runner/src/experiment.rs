//! The three experiment entry points: full leaderboard runs, feature-group
//! ablations, and head-to-head significance tests. All of them share
//! `pipeline::prepare`, so any two commands on the same config see the same
//! hold-out rows, folds, and selected columns.

use std::collections::BTreeMap;
use std::time::Instant;

use deliverytime_core::eval::{
    grid_search, metrics, paired_t_test, residual_diagnostics, CandidateResult,
};
use deliverytime_core::features::drop_feature_group;
use deliverytime_core::models::{predict, Family, FamilyConfig, ModelConfig, TrainedModel};
use deliverytime_core::seed::derive_seed;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{classify, validation, Result};
use crate::pipeline::{prepare, PreparedData};
use crate::report::{
    AblationReport, AblationVariant, CompareReport, ExperimentReport, LeaderboardRow,
    REPORT_VERSION,
};

pub struct FamilyOutcome {
    pub row: LeaderboardRow,
    pub candidates: Vec<CandidateResult>,
    pub model: TrainedModel,
}

fn family_ordinal(family: Family) -> u64 {
    Family::ALL.iter().position(|&f| f == family).unwrap() as u64
}

fn family_grid(config: &ExperimentConfig, family: Family) -> Result<Vec<ModelConfig>> {
    let grid = config.grid_for(family);
    if grid.is_empty() {
        return Err(validation(format!("family {family} has an empty grid")));
    }
    let seed = derive_seed(config.seed, "model", family_ordinal(family));
    Ok(grid
        .into_iter()
        .map(|fc| ModelConfig::new(fc, seed))
        .collect())
}

/// Grid-search one family on the training folds, refit the winner, and score
/// it once on the hold-out.
pub fn evaluate_family(
    data: &PreparedData,
    config: &ExperimentConfig,
    family: Family,
) -> Result<FamilyOutcome> {
    let stage = format!("train {family}");
    let configs = family_grid(config, family)?;
    let start = Instant::now();
    let search = grid_search(&configs, &data.train, &data.plan).map_err(|e| classify(&stage, e))?;
    let fit_seconds = start.elapsed().as_secs_f64();

    let preds = predict(&search.model, &data.holdout).map_err(|e| classify(&stage, e))?;
    let holdout = metrics(&data.holdout.target, &preds).map_err(|e| classify(&stage, e))?;
    let residuals =
        residual_diagnostics(&data.holdout.target, &preds).map_err(|e| classify(&stage, e))?;
    let cv = search
        .best()
        .cv
        .clone()
        .ok_or_else(|| crate::error::internal(format!("{stage}: winner has no CV metrics")))?;

    let row = LeaderboardRow {
        family,
        holdout,
        cv_mean_mse: cv.mean_mse,
        cv_std_mse: cv.mse_std(),
        cv_mean_r2: cv.mean_r2,
        best_params: search.model.config.family_config.clone(),
        seed: search.model.config.seed,
        fit_seconds,
        residuals,
        converged: search.model.flags.converged,
        mean_predictor: search.model.flags.mean_predictor,
        notes: search.model.flags.notes.clone(),
    };
    Ok(FamilyOutcome {
        row,
        candidates: search.candidates,
        model: search.model,
    })
}

pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub models: Vec<(Family, TrainedModel)>,
    pub data: PreparedData,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let data = prepare(config)?;
    let families = config.families();
    let outcomes: Result<Vec<FamilyOutcome>> = families
        .par_iter()
        .map(|&family| evaluate_family(&data, config, family))
        .collect();
    let mut outcomes = outcomes?;
    outcomes.sort_by(|a, b| {
        a.row
            .holdout
            .mse
            .total_cmp(&b.row.holdout.mse)
            .then(a.row.family.cmp(&b.row.family))
    });

    let mut leaderboard = Vec::new();
    let mut candidates = BTreeMap::new();
    let mut models = Vec::new();
    for outcome in outcomes {
        candidates.insert(outcome.row.family.name().to_string(), outcome.candidates);
        models.push((outcome.row.family, outcome.model));
        leaderboard.push(outcome.row);
    }

    let report = ExperimentReport {
        version: REPORT_VERSION,
        config: config.clone(),
        dataset: data.summary.clone(),
        rows_used: data.rows_used,
        distance_dropped_rows: data.distance_dropped_rows,
        n_train: data.train.n_rows(),
        n_holdout: data.holdout.n_rows(),
        selection: data.selection.clone(),
        leaderboard,
        candidates,
    };
    Ok(ExperimentRun {
        report,
        models,
        data,
    })
}

pub fn run_ablation(config: &ExperimentConfig, family: Family) -> Result<AblationReport> {
    let data = prepare(config)?;
    let baseline = evaluate_family(&data, config, family)?;

    let variants: Result<Vec<AblationVariant>> = config
        .ablation_groups()
        .par_iter()
        .map(|&group| {
            let train_v = drop_feature_group(&data.train, group);
            let dropped_columns = data.train.n_cols() - train_v.n_cols();
            if dropped_columns == 0 {
                // Nothing to drop: the variant is the baseline by identity.
                return Ok(AblationVariant {
                    group: group.name().to_string(),
                    dropped_columns: 0,
                    metrics: baseline.row.holdout,
                    delta_r2: 0.0,
                    pct_delta_mse: 0.0,
                });
            }
            let stage = format!("ablate {family} without {group}");
            let holdout_v = drop_feature_group(&data.holdout, group);
            let configs = family_grid(config, family)?;
            let search =
                grid_search(&configs, &train_v, &data.plan).map_err(|e| classify(&stage, e))?;
            let preds = predict(&search.model, &holdout_v).map_err(|e| classify(&stage, e))?;
            let m = metrics(&holdout_v.target, &preds).map_err(|e| classify(&stage, e))?;
            Ok(AblationVariant {
                group: group.name().to_string(),
                dropped_columns,
                metrics: m,
                delta_r2: m.r2 - baseline.row.holdout.r2,
                pct_delta_mse: 100.0 * (m.mse - baseline.row.holdout.mse)
                    / baseline.row.holdout.mse,
            })
        })
        .collect();

    Ok(AblationReport {
        version: REPORT_VERSION,
        family,
        config: config.clone(),
        baseline: baseline.row.holdout,
        baseline_params: baseline.row.best_params.clone(),
        groups: variants?,
    })
}

pub fn run_compare(
    config: &ExperimentConfig,
    family_a: Family,
    family_b: Family,
) -> Result<CompareReport> {
    let data = prepare(config)?;
    let (a, b) = rayon::join(
        || evaluate_family(&data, config, family_a),
        || evaluate_family(&data, config, family_b),
    );
    let (a, b) = (a?, b?);

    let preds_a = predict(&a.model, &data.holdout).map_err(|e| classify("compare", e))?;
    let preds_b = predict(&b.model, &data.holdout).map_err(|e| classify("compare", e))?;
    let y = &data.holdout.target;
    let errors_a: Vec<f64> = y
        .iter()
        .zip(&preds_a)
        .map(|(t, p)| (t - p) * (t - p))
        .collect();
    let errors_b: Vec<f64> = y
        .iter()
        .zip(&preds_b)
        .map(|(t, p)| (t - p) * (t - p))
        .collect();
    let t_test = paired_t_test(&errors_a, &errors_b).map_err(|e| classify("compare", e))?;

    Ok(CompareReport {
        version: REPORT_VERSION,
        family_a,
        family_b,
        holdout_a: a.row.holdout,
        holdout_b: b.row.holdout,
        n: t_test.n,
        t_test,
    })
}

/// `FamilyConfig` echo of a leaderboard row, exposed for rendering.
pub fn params_summary(params: &FamilyConfig) -> String {
    match serde_json::to_value(params) {
        Ok(serde_json::Value::Object(map)) => map
            .into_iter()
            .next()
            .map(|(name, body)| format!("{name} {body}"))
            .unwrap_or_default(),
        _ => String::new(),
    }
}
