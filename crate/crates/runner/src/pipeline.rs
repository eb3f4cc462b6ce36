//! Shared data preparation: every command that trains models runs the same
//! ingest → clean → build → split → select sequence, so hold-out rows and
//! selected columns are identical across train, ablate, and compare.

use std::fs::File;

use deliverytime_core::eval::{train_test_split, FoldPlan};
use deliverytime_core::features::{build_matrix, fit_encodings, EncodingMap, FeatureMatrix};
use deliverytime_core::ingest::{clean_records, parse_records, DatasetSummary, RowReject};
use deliverytime_core::seed::{derive_seed, rng_for};
use deliverytime_core::select::{select_top_k, SelectionResult};
use rand::Rng;

use crate::config::ExperimentConfig;
use crate::error::{classify, data, Result};

pub struct PreparedData {
    pub summary: DatasetSummary,
    pub parse_rejects: Vec<RowReject>,
    /// Rows actually modeled, after the optional `max_rows` cap.
    pub rows_used: usize,
    pub distance_dropped_rows: usize,
    pub encodings: Vec<EncodingMap>,
    pub selection: SelectionResult,
    /// Training matrix restricted to the selected columns.
    pub train: FeatureMatrix,
    /// Hold-out matrix with the same columns; never touched by tuning.
    pub holdout: FeatureMatrix,
    pub plan: FoldPlan,
}

pub fn prepare(config: &ExperimentConfig) -> Result<PreparedData> {
    let file = File::open(&config.dataset).map_err(|e| {
        data(format!(
            "cannot open dataset {}: {e}",
            config.dataset.display()
        ))
    })?;
    let parsed = parse_records(file).map_err(|e| classify("ingest", e))?;
    let (mut clean, summary) = clean_records(&parsed.records);
    if clean.is_empty() {
        return Err(data(format!(
            "no rows survived cleaning ({} raw rows)",
            summary.raw_rows
        )));
    }

    if let Some(cap) = config.max_rows {
        if clean.len() > cap {
            let mut rng = rng_for(config.seed, "row_cap", 0);
            let mut pool: Vec<usize> = (0..clean.len()).collect();
            for i in 0..cap {
                let j = rng.gen_range(i..pool.len());
                pool.swap(i, j);
            }
            let mut keep = pool[..cap].to_vec();
            keep.sort_unstable();
            clean = keep.into_iter().map(|i| clean[i].clone()).collect();
        }
    }

    let encodings = fit_encodings(&clean);
    let built = build_matrix(&clean, &encodings, &config.feature_columns())
        .map_err(|e| classify("features", e))?;
    let n = built.matrix.n_rows();
    if n < 10 {
        return Err(data(format!(
            "only {n} usable rows after cleaning; need at least 10"
        )));
    }

    let (train_idx, holdout_idx) = train_test_split(
        n,
        config.test_fraction,
        derive_seed(config.seed, "holdout", 0),
    )
    .map_err(|e| classify("split", e))?;
    let train_full = built.matrix.subset_rows(&train_idx);
    let holdout_full = built.matrix.subset_rows(&holdout_idx);

    // Selection sees only training rows; the hold-out influences nothing.
    let k = config.select_k.min(train_full.n_cols());
    let selection =
        select_top_k(&train_full, k, config.mi_bins).map_err(|e| classify("select", e))?;
    let train = train_full
        .select_columns(&selection.kept)
        .map_err(|e| classify("select", e))?;
    let holdout = holdout_full
        .select_columns(&selection.kept)
        .map_err(|e| classify("select", e))?;

    let plan = FoldPlan::new(
        train.n_rows(),
        config.k_folds,
        derive_seed(config.seed, "cv", 0),
    )
    .map_err(|e| classify("folds", e))?;

    Ok(PreparedData {
        summary,
        parse_rejects: parsed.rejects,
        rows_used: clean.len(),
        distance_dropped_rows: built.dropped_distance_rows.len(),
        encodings,
        selection,
        train,
        holdout,
        plan,
    })
}
