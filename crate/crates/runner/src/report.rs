//! Report artifacts and their writers. Every float lands in the CSV through
//! the same serializer that produces the JSON, so the two views of a number
//! are always byte-equal.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use deliverytime_core::eval::{CandidateResult, Metrics, ResidualDiagnostics, TTestResult};
use deliverytime_core::features::EncodingMap;
use deliverytime_core::ingest::{DatasetSummary, RowReject};
use deliverytime_core::models::{Family, FamilyConfig, TrainedModel};
use deliverytime_core::select::SelectionResult;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{internal, Result};

/// Version stamp on every report artifact.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub family: Family,
    pub holdout: Metrics,
    pub cv_mean_mse: f64,
    pub cv_std_mse: f64,
    pub cv_mean_r2: f64,
    /// Winning hyperparameters for this family.
    pub best_params: FamilyConfig,
    /// Derived seed the family's fits ran under.
    pub seed: u64,
    /// Wall-clock time for the full grid search plus refit.
    pub fit_seconds: f64,
    /// Hold-out residual shape: roughly zero-mean and symmetric when the
    /// model has captured the signal.
    pub residuals: ResidualDiagnostics,
    pub converged: bool,
    pub mean_predictor: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    /// Fully resolved configuration the run executed.
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub rows_used: usize,
    pub distance_dropped_rows: usize,
    pub n_train: usize,
    pub n_holdout: usize,
    pub selection: SelectionResult,
    /// Sorted by ascending hold-out mse.
    pub leaderboard: Vec<LeaderboardRow>,
    /// Every grid candidate per family, with fold metrics or failure reason.
    pub candidates: BTreeMap<String, Vec<CandidateResult>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationVariant {
    pub group: String,
    pub dropped_columns: usize,
    pub metrics: Metrics,
    /// `metrics.r2 - baseline.r2`.
    pub delta_r2: f64,
    /// `100 * (metrics.mse - baseline.mse) / baseline.mse`.
    pub pct_delta_mse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationReport {
    pub version: u32,
    pub family: Family,
    pub config: ExperimentConfig,
    pub baseline: Metrics,
    pub baseline_params: FamilyConfig,
    pub groups: Vec<AblationVariant>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub version: u32,
    pub family_a: Family,
    pub family_b: Family,
    pub holdout_a: Metrics,
    pub holdout_b: Metrics,
    /// Hold-out rows, i.e. the number of error pairs tested.
    pub n: usize,
    /// Paired t-test over per-row squared errors, a minus b.
    pub t_test: TTestResult,
}

/// JSON text for one float, also used for CSV cells.
pub fn json_number(v: f64) -> String {
    serde_json::to_string(&v).expect("finite float")
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| internal(format!("serializing report: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes files as a transaction: any failure removes everything written so
/// far, so a failed run leaves no partial artifacts behind.
struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<OutputDir> {
        std::fs::create_dir_all(dir)
            .map_err(|e| internal(format!("cannot create output dir {}: {e}", dir.display())))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        match std::fs::write(&path, contents) {
            Ok(()) => {
                self.written.push(path.clone());
                Ok(path)
            }
            Err(e) => {
                self.rollback();
                Err(internal(format!("cannot write {}: {e}", path.display())))
            }
        }
    }

    fn rollback(&mut self) {
        for path in self.written.drain(..) {
            let _ = std::fs::remove_file(path);
        }
    }
}

/// Timing stays out of the CSV so repeated runs produce identical bytes; it
/// lives in report.json only.
fn leaderboard_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "mse", "r2", "cv_mean", "cv_std"])
        .and_then(|()| {
            report.leaderboard.iter().try_for_each(|row| {
                w.write_record([
                    row.family.name().to_string(),
                    json_number(row.holdout.mse),
                    json_number(row.holdout.r2),
                    json_number(row.cv_mean_mse),
                    json_number(row.cv_std_mse),
                ])
            })
        })
        .map_err(|e| internal(format!("building leaderboard.csv: {e}")))?;
    let bytes = w
        .into_inner()
        .map_err(|e| internal(format!("building leaderboard.csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| internal(format!("leaderboard.csv is not UTF-8: {e}")))
}

pub fn rejects_csv(rejects: &[RowReject]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "reason"])
        .and_then(|()| {
            rejects
                .iter()
                .try_for_each(|r| w.write_record([r.row.to_string(), r.reason.clone()]))
        })
        .map_err(|e| internal(format!("building rejects.csv: {e}")))?;
    let bytes = w
        .into_inner()
        .map_err(|e| internal(format!("building rejects.csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| internal(format!("rejects.csv is not UTF-8: {e}")))
}

pub fn write_experiment(
    dir: &Path,
    report: &ExperimentReport,
    models: &[(Family, TrainedModel)],
    encodings: &[EncodingMap],
    rejects: &[RowReject],
) -> Result<Vec<PathBuf>> {
    // Render everything before touching the filesystem.
    let report_json = to_pretty_json(report)?;
    let csv_text = leaderboard_csv(report)?;
    let selection_json = to_pretty_json(&report.selection)?;
    let encodings_json = to_pretty_json(&encodings)?;
    let rejects_text = rejects_csv(rejects)?;
    let mut model_files = Vec::new();
    for (family, model) in models {
        let text = model
            .to_json()
            .map_err(|e| internal(format!("serializing model {family}: {e}")))?;
        model_files.push((format!("model.{}.json", family.name()), text));
    }

    let mut out = OutputDir::create(dir)?;
    let mut paths = vec![
        out.write("report.json", &report_json)?,
        out.write("leaderboard.csv", &csv_text)?,
        out.write("selection.json", &selection_json)?,
        out.write("encodings.json", &encodings_json)?,
        out.write("rejects.csv", &rejects_text)?,
    ];
    for (name, text) in &model_files {
        paths.push(out.write(name, text)?);
    }
    Ok(paths)
}

pub fn write_ablation(dir: &Path, report: &AblationReport) -> Result<PathBuf> {
    let text = to_pretty_json(report)?;
    let mut out = OutputDir::create(dir)?;
    out.write("ablation.json", &text)
}

pub fn render_compare(report: &CompareReport) -> Result<String> {
    to_pretty_json(report)
}
