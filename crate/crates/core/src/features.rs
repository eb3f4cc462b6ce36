//! Feature engineering: haversine distance, temporal derivations, categorical
//! encodings, and the design matrix with per-column group tags for ablation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CleanOrderRecord;

/// Mean Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance between two (lat, lon) points, in kilometers.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Ablation groups; every matrix column carries exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    Traffic,
    Weather,
    Geospatial,
    Personnel,
    Order,
    Temporal,
    Vehicle,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 7] = [
        FeatureGroup::Traffic,
        FeatureGroup::Weather,
        FeatureGroup::Geospatial,
        FeatureGroup::Personnel,
        FeatureGroup::Order,
        FeatureGroup::Temporal,
        FeatureGroup::Vehicle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Traffic => "Traffic",
            FeatureGroup::Weather => "Weather",
            FeatureGroup::Geospatial => "Geospatial",
            FeatureGroup::Personnel => "Personnel",
            FeatureGroup::Order => "Order",
            FeatureGroup::Temporal => "Temporal",
            FeatureGroup::Vehicle => "Vehicle",
        }
    }

    pub fn from_name(name: &str) -> Option<FeatureGroup> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    Ordinal,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownPolicy {
    Error,
    /// Unknown categories map to the reserved code `k` (one past the last).
    ReserveCode,
}

/// Category → dense code map for one column. Codes are the positions in
/// `categories`, so density and injectivity hold by construction and ordinal
/// maps are order-preserving over the declared category order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingMap {
    pub column: String,
    pub kind: EncodingKind,
    pub categories: Vec<String>,
    pub unknown_policy: UnknownPolicy,
}

impl EncodingMap {
    pub fn new(
        column: impl Into<String>,
        kind: EncodingKind,
        categories: Vec<String>,
        unknown_policy: UnknownPolicy,
    ) -> Result<EncodingMap> {
        let unique: BTreeSet<&String> = categories.iter().collect();
        if unique.len() != categories.len() {
            return Err(Error::Contract(format!(
                "duplicate categories in encoding for column {:?}",
                column.into()
            )));
        }
        Ok(EncodingMap {
            column: column.into(),
            kind,
            categories,
            unknown_policy,
        })
    }

    pub fn code(&self, value: &str) -> Result<i64> {
        match self.categories.iter().position(|c| c == value) {
            Some(i) => Ok(i as i64),
            None => match self.unknown_policy {
                UnknownPolicy::ReserveCode => Ok(self.categories.len() as i64),
                UnknownPolicy::Error => Err(Error::UnseenCategory {
                    column: self.column.clone(),
                    value: value.to_string(),
                }),
            },
        }
    }

    pub fn mapping(&self) -> BTreeMap<String, i64> {
        self.categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i as i64))
            .collect()
    }
}

/// Replace each category value with its code under `map`.
pub fn encode_categorical(values: &[&str], map: &EncodingMap) -> Result<Vec<i64>> {
    values.iter().map(|v| map.code(v)).collect()
}

/// Declared order of the traffic ordinal.
pub const TRAFFIC_ORDER: [&str; 4] = ["Low", "Medium", "High", "Jam"];

const LABEL_COLUMNS: [(&str, fn(&CleanOrderRecord) -> &str); 5] = [
    ("weather", |r| &r.weather),
    ("order_type", |r| &r.order_type),
    ("vehicle_type", |r| &r.vehicle_type),
    ("festival", |r| &r.festival),
    ("city", |r| &r.city),
];

/// Build the training-time encodings: traffic as an ordinal over
/// Low < Medium < High < Jam, everything else as lexicographic label codes.
/// Off-vocabulary traffic values (none in the real data) sort after the
/// declared levels, lexicographically, to keep the map total and deterministic.
pub fn fit_encodings(records: &[CleanOrderRecord]) -> Vec<EncodingMap> {
    let observed_traffic: BTreeSet<&str> =
        records.iter().map(|r| r.traffic_density.as_str()).collect();
    let mut traffic: Vec<String> = TRAFFIC_ORDER
        .iter()
        .filter(|c| observed_traffic.contains(**c))
        .map(|c| c.to_string())
        .collect();
    traffic.extend(
        observed_traffic
            .iter()
            .filter(|c| !TRAFFIC_ORDER.contains(c))
            .map(|c| c.to_string()),
    );

    let mut maps = vec![EncodingMap {
        column: "traffic_density".into(),
        kind: EncodingKind::Ordinal,
        categories: traffic,
        unknown_policy: UnknownPolicy::Error,
    }];
    for (column, get) in LABEL_COLUMNS {
        let observed: BTreeSet<&str> = records.iter().map(|r| get(r).trim()).collect();
        maps.push(EncodingMap {
            column: column.into(),
            kind: EncodingKind::Label,
            categories: observed.into_iter().map(str::to_string).collect(),
            unknown_policy: UnknownPolicy::Error,
        });
    }
    maps
}

/// Derived clock/calendar features for one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalFeatures {
    pub prep_minutes: f64,
    pub order_hour: u32,
    /// Monday = 0.
    pub day_of_week: u32,
    pub is_weekend: u8,
}

pub fn temporal_features(record: &CleanOrderRecord) -> TemporalFeatures {
    let prep = (record.time_order_picked + 1440 - record.time_ordered) % 1440;
    let day_of_week = record.order_date.weekday().num_days_from_monday();
    TemporalFeatures {
        prep_minutes: prep as f64,
        order_hour: record.time_ordered / 60,
        day_of_week,
        is_weekend: u8::from(day_of_week >= 5),
    }
}

/// Columns the matrix builder knows how to derive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureColumn {
    TrafficDensity,
    Weather,
    DistanceKm,
    DeliveryPersonRatings,
    DeliveryPersonAge,
    MultipleDeliveries,
    OrderType,
    Festival,
    City,
    VehicleCondition,
    VehicleType,
    PrepMinutes,
    OrderHour,
    DayOfWeek,
    IsWeekend,
}

impl FeatureColumn {
    pub const ALL: [FeatureColumn; 15] = [
        FeatureColumn::TrafficDensity,
        FeatureColumn::Weather,
        FeatureColumn::DistanceKm,
        FeatureColumn::DeliveryPersonRatings,
        FeatureColumn::DeliveryPersonAge,
        FeatureColumn::MultipleDeliveries,
        FeatureColumn::OrderType,
        FeatureColumn::Festival,
        FeatureColumn::City,
        FeatureColumn::VehicleCondition,
        FeatureColumn::VehicleType,
        FeatureColumn::PrepMinutes,
        FeatureColumn::OrderHour,
        FeatureColumn::DayOfWeek,
        FeatureColumn::IsWeekend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureColumn::TrafficDensity => "traffic_density",
            FeatureColumn::Weather => "weather",
            FeatureColumn::DistanceKm => "distance_km",
            FeatureColumn::DeliveryPersonRatings => "delivery_person_ratings",
            FeatureColumn::DeliveryPersonAge => "delivery_person_age",
            FeatureColumn::MultipleDeliveries => "multiple_deliveries",
            FeatureColumn::OrderType => "order_type",
            FeatureColumn::Festival => "festival",
            FeatureColumn::City => "city",
            FeatureColumn::VehicleCondition => "vehicle_condition",
            FeatureColumn::VehicleType => "vehicle_type",
            FeatureColumn::PrepMinutes => "prep_minutes",
            FeatureColumn::OrderHour => "order_hour",
            FeatureColumn::DayOfWeek => "day_of_week",
            FeatureColumn::IsWeekend => "is_weekend",
        }
    }

    pub fn from_name(name: &str) -> Option<FeatureColumn> {
        FeatureColumn::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn group(self) -> FeatureGroup {
        match self {
            FeatureColumn::TrafficDensity => FeatureGroup::Traffic,
            FeatureColumn::Weather => FeatureGroup::Weather,
            FeatureColumn::DistanceKm | FeatureColumn::City => FeatureGroup::Geospatial,
            FeatureColumn::DeliveryPersonRatings | FeatureColumn::DeliveryPersonAge => {
                FeatureGroup::Personnel
            }
            FeatureColumn::MultipleDeliveries
            | FeatureColumn::OrderType
            | FeatureColumn::Festival => FeatureGroup::Order,
            FeatureColumn::VehicleCondition | FeatureColumn::VehicleType => FeatureGroup::Vehicle,
            FeatureColumn::PrepMinutes
            | FeatureColumn::OrderHour
            | FeatureColumn::DayOfWeek
            | FeatureColumn::IsWeekend => FeatureGroup::Temporal,
        }
    }
}

/// The full engineered set, in canonical order.
pub fn default_feature_set() -> Vec<FeatureColumn> {
    FeatureColumn::ALL.to_vec()
}

/// Numeric design matrix plus aligned column metadata.
///
/// `target` is empty for scoring-time matrices built from rows without the
/// target column; otherwise `target.len() == n_rows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub column_names: Vec<String>,
    pub column_groups: Vec<FeatureGroup>,
    n_rows: usize,
    /// Row-major, `n_rows × column_names.len()`.
    values: Vec<f64>,
    pub target: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(
        column_names: Vec<String>,
        column_groups: Vec<FeatureGroup>,
        rows: Vec<Vec<f64>>,
        target: Vec<f64>,
    ) -> Result<FeatureMatrix> {
        if column_groups.len() != column_names.len() {
            return Err(Error::Contract(
                "column_groups length must equal column_names length".into(),
            ));
        }
        if !target.is_empty() && target.len() != rows.len() {
            return Err(Error::Contract("target length must equal row count".into()));
        }
        let n_cols = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Contract(format!(
                    "row {i} has {} values, expected {n_cols}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        if values.iter().chain(target.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Contract("matrix contains non-finite values".into()));
        }
        Ok(FeatureMatrix {
            column_names,
            column_groups,
            n_rows: rows.len(),
            values,
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.value(i, col)).collect()
    }

    /// New matrix with the given rows, in the given order.
    pub fn subset_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let d = self.n_cols();
        let mut values = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        let target = if self.target.is_empty() {
            Vec::new()
        } else {
            indices.iter().map(|&i| self.target[i]).collect()
        };
        FeatureMatrix {
            column_names: self.column_names.clone(),
            column_groups: self.column_groups.clone(),
            n_rows: indices.len(),
            values,
            target,
        }
    }

    /// New matrix keeping `names` in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            let j = self
                .column_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Contract(format!("no column named {name:?}")))?;
            cols.push(j);
        }
        Ok(self.keep_column_indices(&cols))
    }

    fn keep_column_indices(&self, cols: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            values.extend(cols.iter().map(|&j| row[j]));
        }
        FeatureMatrix {
            column_names: cols.iter().map(|&j| self.column_names[j].clone()).collect(),
            column_groups: cols.iter().map(|&j| self.column_groups[j]).collect(),
            n_rows: self.n_rows,
            values,
            target: self.target.clone(),
        }
    }
}

/// One record → one numeric row under `feature_set`. The caller decides what
/// to do with the computed haversine distance (outlier policy differs between
/// batch build and scoring).
pub fn build_row(
    record: &CleanOrderRecord,
    feature_set: &[FeatureColumn],
    encodings: &[EncodingMap],
) -> Result<(Vec<f64>, f64)> {
    let distance = haversine_km(
        record.restaurant_lat,
        record.restaurant_lon,
        record.delivery_lat,
        record.delivery_lon,
    );
    let temporal = temporal_features(record);
    let map_for = |column: &str| -> Result<&EncodingMap> {
        encodings
            .iter()
            .find(|m| m.column == column)
            .ok_or_else(|| Error::Contract(format!("no encoding map for column {column:?}")))
    };
    let mut row = Vec::with_capacity(feature_set.len());
    for &col in feature_set {
        let v = match col {
            FeatureColumn::DistanceKm => distance,
            FeatureColumn::DeliveryPersonRatings => record.delivery_person_ratings,
            FeatureColumn::DeliveryPersonAge => record.delivery_person_age as f64,
            FeatureColumn::MultipleDeliveries => record.multiple_deliveries as f64,
            FeatureColumn::VehicleCondition => record.vehicle_condition as f64,
            FeatureColumn::PrepMinutes => temporal.prep_minutes,
            FeatureColumn::OrderHour => temporal.order_hour as f64,
            FeatureColumn::DayOfWeek => temporal.day_of_week as f64,
            FeatureColumn::IsWeekend => temporal.is_weekend as f64,
            FeatureColumn::TrafficDensity => {
                map_for("traffic_density")?.code(&record.traffic_density)? as f64
            }
            FeatureColumn::Weather => map_for("weather")?.code(&record.weather)? as f64,
            FeatureColumn::OrderType => map_for("order_type")?.code(&record.order_type)? as f64,
            FeatureColumn::VehicleType => {
                map_for("vehicle_type")?.code(&record.vehicle_type)? as f64
            }
            FeatureColumn::Festival => map_for("festival")?.code(&record.festival)? as f64,
            FeatureColumn::City => map_for("city")?.code(&record.city)? as f64,
        };
        row.push(v);
    }
    Ok((row, distance))
}

/// Rows whose haversine distance exceeds this are dropped at build time;
/// they are corrupt-coordinate artifacts, not deliveries.
pub const MAX_DISTANCE_KM: f64 = 100.0;

/// A built matrix plus the indices (into the input records) of rows dropped
/// by the distance-outlier policy.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltMatrix {
    pub matrix: FeatureMatrix,
    pub dropped_distance_rows: Vec<usize>,
}

/// Assemble the design matrix. Records with target set populate
/// `matrix.target`; records without (scoring mode) leave it empty — mixing
/// the two is a contract error. Encoding errors abort with the row index.
pub fn build_matrix(
    records: &[CleanOrderRecord],
    encodings: &[EncodingMap],
    feature_set: &[FeatureColumn],
) -> Result<BuiltMatrix> {
    let column_names: Vec<String> = feature_set.iter().map(|c| c.name().to_string()).collect();
    let column_groups: Vec<FeatureGroup> = feature_set.iter().map(|c| c.group()).collect();

    let with_target = records
        .iter()
        .filter(|r| r.time_taken_min.is_some())
        .count();
    if with_target != 0 && with_target != records.len() {
        return Err(Error::Contract(
            "records mix present and absent targets".into(),
        ));
    }

    let mut rows = Vec::with_capacity(records.len());
    let mut target = Vec::with_capacity(records.len());
    let mut dropped = Vec::new();
    for (i, record) in records.iter().enumerate() {
        let (row, distance) = build_row(record, feature_set, encodings).map_err(|e| e.at_row(i))?;
        if distance > MAX_DISTANCE_KM {
            dropped.push(i);
            continue;
        }
        rows.push(row);
        if let Some(t) = record.time_taken_min {
            target.push(t as f64);
        }
    }
    let matrix = FeatureMatrix::from_rows(column_names, column_groups, rows, target)?;
    Ok(BuiltMatrix {
        matrix,
        dropped_distance_rows: dropped,
    })
}

/// Matrix without the columns tagged `group`; dropping an absent group is the
/// identity. Target is untouched.
pub fn drop_feature_group(m: &FeatureMatrix, group: FeatureGroup) -> FeatureMatrix {
    let keep: Vec<usize> = (0..m.n_cols())
        .filter(|&j| m.column_groups[j] != group)
        .collect();
    m.keep_column_indices(&keep)
}
