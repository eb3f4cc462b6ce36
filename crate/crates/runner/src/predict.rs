//! Batch scoring: replay a trained model over a scoring CSV (the training
//! schema minus the target column) and emit predictions plus a reject file.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use deliverytime_core::features::{
    build_row, EncodingMap, FeatureColumn, FeatureGroup, FeatureMatrix, MAX_DISTANCE_KM,
};
use deliverytime_core::ingest::{
    clean_records, parse_records_with_mode, RawOrderRecord, RowReject, TargetMode, COLUMNS,
};
use deliverytime_core::models::{predict, TrainedModel};

use crate::error::{classify, data, internal, Result};
use crate::report::{json_number, rejects_csv};

pub struct PredictOutcome {
    pub total_rows: usize,
    pub predicted_rows: usize,
    pub rejected_rows: usize,
    pub output: PathBuf,
    pub rejects_path: PathBuf,
}

/// Categorical columns that need an encoding map at scoring time.
const ENCODED: [&str; 6] = [
    "traffic_density",
    "weather",
    "order_type",
    "vehicle_type",
    "festival",
    "city",
];

fn read_text(path: &Path, what: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| data(format!("cannot read {what} {path:?}: {e}")))
}

fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = read_text(path, "model file")?;
    TrainedModel::from_json(&text).map_err(|e| data(format!("model file {path:?}: {e}")))
}

fn load_encodings(path: &Path) -> Result<Vec<EncodingMap>> {
    let text = read_text(path, "encodings file")?;
    serde_json::from_str(&text).map_err(|e| data(format!("encodings file {path:?}: {e}")))
}

/// The model's column list, resolved back to typed feature columns. A model
/// trained by this tool can only contain known names; anything else means the
/// artifact was edited or produced elsewhere.
fn feature_set_of(model: &TrainedModel) -> Result<Vec<FeatureColumn>> {
    model
        .columns
        .iter()
        .map(|name| {
            FeatureColumn::from_name(name)
                .ok_or_else(|| data(format!("model column {name:?} is not a known feature")))
        })
        .collect()
}

fn check_encodings(feature_set: &[FeatureColumn], encodings: &[EncodingMap]) -> Result<()> {
    for col in feature_set {
        let name = col.name();
        if ENCODED.contains(&name) && !encodings.iter().any(|m| m.column == name) {
            return Err(data(format!(
                "encodings artifact has no map for column {name:?}"
            )));
        }
    }
    Ok(())
}

/// File-row numbers (1-based, header = 1) for the records that survived
/// parsing. Parse rejects consume file rows too, so surviving records do not
/// sit at consecutive rows; walk the row counter past the rejected ones.
fn record_rows(n_records: usize, rejects: &[RowReject]) -> Vec<usize> {
    let rejected: BTreeSet<usize> = rejects.iter().map(|r| r.row).collect();
    let mut rows = Vec::with_capacity(n_records);
    let mut row = 2;
    while rows.len() < n_records {
        if !rejected.contains(&row) {
            rows.push(row);
        }
        row += 1;
    }
    rows
}

fn raw_fields(raw: &RawOrderRecord) -> [&str; 19] {
    [
        &raw.id,
        &raw.delivery_person_id,
        &raw.delivery_person_age,
        &raw.delivery_person_ratings,
        &raw.restaurant_lat,
        &raw.restaurant_lon,
        &raw.delivery_lat,
        &raw.delivery_lon,
        &raw.order_date,
        &raw.time_ordered,
        &raw.time_order_picked,
        &raw.weather,
        &raw.traffic_density,
        &raw.vehicle_condition,
        &raw.order_type,
        &raw.vehicle_type,
        &raw.multiple_deliveries,
        &raw.festival,
        &raw.city,
    ]
}

fn predictions_csv(kept: &[&RawOrderRecord], preds: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = COLUMNS[..19]
        .iter()
        .copied()
        .chain(std::iter::once("predicted_minutes"))
        .collect();
    w.write_record(&header)
        .map_err(|e| internal(format!("csv: {e}")))?;
    for (raw, p) in kept.iter().zip(preds) {
        let record: Vec<String> = raw_fields(raw)
            .iter()
            .map(|s| s.to_string())
            .chain(std::iter::once(json_number(*p)))
            .collect();
        w.write_record(&record)
            .map_err(|e| internal(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| internal(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| internal(format!("csv: {e}")))
}

pub fn run_predict(
    model_path: &Path,
    encodings_path: &Path,
    input: &Path,
    output: &Path,
) -> Result<PredictOutcome> {
    let model = load_model(model_path)?;
    let encodings = load_encodings(encodings_path)?;
    let feature_set = feature_set_of(&model)?;
    check_encodings(&feature_set, &encodings)?;

    let file = File::open(input).map_err(|e| data(format!("cannot open input {input:?}: {e}")))?;
    let parsed = parse_records_with_mode(file, TargetMode::Absent)
        .map_err(|e| classify("predict input", e))?;

    let rows_of = record_rows(parsed.records.len(), &parsed.rejects);
    let mut rejects = parsed.rejects.clone();
    let mut kept: Vec<&RawOrderRecord> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (raw, &file_row) in parsed.records.iter().zip(&rows_of) {
        let (clean, summary) = clean_records(std::slice::from_ref(raw));
        let Some(rec) = clean.first() else {
            // One record in, one drop out: the summary holds exactly one reason.
            let reason = summary
                .dropped_by_reason
                .keys()
                .next()
                .cloned()
                .unwrap_or_else(|| "unknown".into());
            rejects.push(RowReject {
                row: file_row,
                reason,
            });
            continue;
        };
        match build_row(rec, &feature_set, &encodings) {
            Ok((_, distance)) if distance > MAX_DISTANCE_KM => {
                rejects.push(RowReject {
                    row: file_row,
                    reason: "distance_gt_100km".into(),
                });
            }
            Ok((values, _)) => {
                kept.push(raw);
                rows.push(values);
            }
            Err(e) => {
                rejects.push(RowReject {
                    row: file_row,
                    reason: e.to_string(),
                });
            }
        }
    }

    let groups: Vec<FeatureGroup> = feature_set.iter().map(|c| c.group()).collect();
    let matrix = FeatureMatrix::from_rows(model.columns.clone(), groups, rows, Vec::new())
        .map_err(|e| classify("predict features", e))?;
    let preds = if matrix.n_rows() == 0 {
        Vec::new()
    } else {
        predict(&model, &matrix).map_err(|e| classify("predict", e))?
    };

    let out_csv = predictions_csv(&kept, &preds)?;
    let rejects_path = output.with_file_name("rejects.csv");
    let reject_csv = rejects_csv(&rejects)?;
    if let Some(dir) = output.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| data(format!("cannot create output directory {dir:?}: {e}")))?;
        }
    }
    std::fs::write(output, out_csv).map_err(|e| data(format!("cannot write {output:?}: {e}")))?;
    std::fs::write(&rejects_path, reject_csv)
        .map_err(|e| data(format!("cannot write {rejects_path:?}: {e}")))?;

    Ok(PredictOutcome {
        total_rows: parsed.records.len() + parsed.rejects.len(),
        predicted_rows: kept.len(),
        rejected_rows: rejects.len(),
        output: output.to_path_buf(),
        rejects_path,
    })
}
