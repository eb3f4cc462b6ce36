//! CSV ingestion: schema validation, type coercion, and drop accounting.
//!
//! The raw export is messy in well-known ways — trailing spaces everywhere,
//! `"NaN "` sentinels, weather values prefixed with `"conditions "`, times like
//! `24:00`, and a target stored as text (`"(min) 24"`). Cleaning normalizes all
//! of that, drops rows it cannot repair, and accounts for every drop by reason
//! so `clean + dropped == raw` always holds.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical header, in file order.
pub const COLUMNS: [&str; 20] = [
    "ID",
    "Delivery_person_ID",
    "Delivery_person_Age",
    "Delivery_person_Ratings",
    "Restaurant_latitude",
    "Restaurant_longitude",
    "Delivery_location_latitude",
    "Delivery_location_longitude",
    "Order_Date",
    "Time_Orderd",
    "Time_Order_picked",
    "Weatherconditions",
    "Road_traffic_density",
    "Vehicle_condition",
    "Type_of_order",
    "Type_of_vehicle",
    "multiple_deliveries",
    "Festival",
    "City",
    "Time_taken(min)",
];

/// Whether the target column is expected in the input.
///
/// Training data carries all 20 columns; scoring input is the same schema
/// minus `Time_taken(min)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    Required,
    Absent,
}

/// One row exactly as it appeared in the file, untyped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawOrderRecord {
    pub id: String,
    pub delivery_person_id: String,
    pub delivery_person_age: String,
    pub delivery_person_ratings: String,
    pub restaurant_lat: String,
    pub restaurant_lon: String,
    pub delivery_lat: String,
    pub delivery_lon: String,
    pub order_date: String,
    pub time_ordered: String,
    pub time_order_picked: String,
    pub weather: String,
    pub traffic_density: String,
    pub vehicle_condition: String,
    pub order_type: String,
    pub vehicle_type: String,
    pub multiple_deliveries: String,
    pub festival: String,
    pub city: String,
    /// `None` only when parsed with [`TargetMode::Absent`].
    pub time_taken_raw: Option<String>,
}

/// A row rejected at parse time (wrong column count).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowReject {
    /// 1-based file row; the header is row 1, so the first data row is 2.
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOutput {
    pub records: Vec<RawOrderRecord>,
    pub rejects: Vec<RowReject>,
}

/// Fully typed record; every field parsed, no sentinels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanOrderRecord {
    pub delivery_person_age: u32,
    pub delivery_person_ratings: f64,
    pub restaurant_lat: f64,
    pub restaurant_lon: f64,
    pub delivery_lat: f64,
    pub delivery_lon: f64,
    pub order_date: NaiveDate,
    /// Minutes since midnight, 0..=1439.
    pub time_ordered: u32,
    pub time_order_picked: u32,
    pub weather: String,
    pub traffic_density: String,
    pub vehicle_condition: i64,
    pub order_type: String,
    pub vehicle_type: String,
    pub multiple_deliveries: u32,
    pub festival: String,
    pub city: String,
    /// `None` only for scoring input parsed with [`TargetMode::Absent`].
    pub time_taken_min: Option<u32>,
}

impl CleanOrderRecord {
    /// Range invariants every clean record must satisfy.
    pub fn check_invariants(&self) -> Result<()> {
        let coords = [
            (self.restaurant_lat, 90.0, "Restaurant_latitude"),
            (self.restaurant_lon, 180.0, "Restaurant_longitude"),
            (self.delivery_lat, 90.0, "Delivery_location_latitude"),
            (self.delivery_lon, 180.0, "Delivery_location_longitude"),
        ];
        for (v, bound, name) in coords {
            if !v.is_finite() || v.abs() > bound {
                return Err(Error::Contract(format!("{name} out of range: {v}")));
            }
        }
        if self.time_ordered >= 1440 || self.time_order_picked >= 1440 {
            return Err(Error::Contract("time of day out of range".into()));
        }
        if self.time_taken_min == Some(0) {
            return Err(Error::Contract("time_taken_min must be > 0".into()));
        }
        Ok(())
    }

    /// Format the record back into raw text form (used by tests and fixtures).
    pub fn to_raw(&self) -> RawOrderRecord {
        RawOrderRecord {
            id: "0x0".into(),
            delivery_person_id: "RES0".into(),
            delivery_person_age: self.delivery_person_age.to_string(),
            delivery_person_ratings: format!("{}", self.delivery_person_ratings),
            restaurant_lat: format!("{}", self.restaurant_lat),
            restaurant_lon: format!("{}", self.restaurant_lon),
            delivery_lat: format!("{}", self.delivery_lat),
            delivery_lon: format!("{}", self.delivery_lon),
            order_date: self.order_date.format("%d-%m-%Y").to_string(),
            time_ordered: format_time_of_day(self.time_ordered),
            time_order_picked: format_time_of_day(self.time_order_picked),
            weather: self.weather.clone(),
            traffic_density: self.traffic_density.clone(),
            vehicle_condition: self.vehicle_condition.to_string(),
            order_type: self.order_type.clone(),
            vehicle_type: self.vehicle_type.clone(),
            multiple_deliveries: self.multiple_deliveries.to_string(),
            festival: self.festival.clone(),
            city: self.city.clone(),
            time_taken_raw: self.time_taken_min.map(|m| format!("(min) {m}")),
        }
    }
}

fn format_time_of_day(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

/// Numeric column statistics over the clean rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// What cleaning kept, what it dropped, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub raw_rows: usize,
    pub clean_rows: usize,
    /// Reasons: `missing:<Column>`, `unparseable:<Column>`,
    /// `invalid_coordinates`, `invalid_target`.
    pub dropped_by_reason: BTreeMap<String, usize>,
    /// Category value → count, per categorical column, over clean rows.
    pub category_frequencies: BTreeMap<String, BTreeMap<String, usize>>,
    /// min/max/mean per numeric column, over clean rows.
    pub numeric_stats: BTreeMap<String, NumericStats>,
}

impl DatasetSummary {
    pub fn dropped_total(&self) -> usize {
        self.dropped_by_reason.values().sum()
    }
}

/// Cleaning knobs the dataset's known quirks require.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    /// Values (compared after trimming) treated as missing.
    pub sentinels: Vec<String>,
    /// Per-column prefix stripped from category text before any other check.
    pub prefixes: BTreeMap<String, String>,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            sentinels: ["", "NaN", "NaN ", "nan", "null"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            prefixes: BTreeMap::from([(
                "Weatherconditions".to_string(),
                "conditions ".to_string(),
            )]),
        }
    }
}

fn normalize_header(name: &str) -> String {
    name.split_whitespace().collect::<String>().to_lowercase()
}

/// Parse a 20-column training CSV. See [`parse_records_with_mode`].
pub fn parse_records<R: Read>(source: R) -> Result<ParseOutput> {
    parse_records_with_mode(source, TargetMode::Required)
}

/// Parse the delivery CSV, validating the header against the canonical
/// schema (case- and whitespace-insensitively). Rows with the wrong column
/// count are reported as rejects, never silently dropped.
pub fn parse_records_with_mode<R: Read>(source: R, mode: TargetMode) -> Result<ParseOutput> {
    let expected: &[&str] = match mode {
        TargetMode::Required => &COLUMNS,
        TargetMode::Absent => &COLUMNS[..19],
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    if headers.len() != expected.len() {
        return Err(Error::Schema(format!(
            "expected {} columns, header has {}",
            expected.len(),
            headers.len()
        )));
    }
    for (i, want) in expected.iter().enumerate() {
        let got = headers.get(i).unwrap_or("");
        if normalize_header(got) != normalize_header(want) {
            return Err(Error::Schema(format!(
                "header column {} should be {want:?}, found {got:?}",
                i + 1
            )));
        }
    }

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let file_row = i + 2; // header is row 1
        if row.len() != expected.len() {
            rejects.push(RowReject {
                row: file_row,
                reason: format!("expected {} columns, found {}", expected.len(), row.len()),
            });
            continue;
        }
        let f = |j: usize| row.get(j).unwrap_or("").to_string();
        records.push(RawOrderRecord {
            id: f(0),
            delivery_person_id: f(1),
            delivery_person_age: f(2),
            delivery_person_ratings: f(3),
            restaurant_lat: f(4),
            restaurant_lon: f(5),
            delivery_lat: f(6),
            delivery_lon: f(7),
            order_date: f(8),
            time_ordered: f(9),
            time_order_picked: f(10),
            weather: f(11),
            traffic_density: f(12),
            vehicle_condition: f(13),
            order_type: f(14),
            vehicle_type: f(15),
            multiple_deliveries: f(16),
            festival: f(17),
            city: f(18),
            time_taken_raw: match mode {
                TargetMode::Required => Some(f(19)),
                TargetMode::Absent => None,
            },
        });
    }
    Ok(ParseOutput { records, rejects })
}

/// First unsigned integer appearing in the text, e.g. `"(min) 24"` → 24.
pub fn extract_target_minutes(time_taken_raw: &str) -> Result<u32> {
    let digits: String = time_taken_raw
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits
        .parse::<u32>()
        .map_err(|_| Error::TargetExtraction(time_taken_raw.to_string()))
}

/// Clean with the default sentinel/prefix configuration.
pub fn clean_records(raw: &[RawOrderRecord]) -> (Vec<CleanOrderRecord>, DatasetSummary) {
    clean_records_with(raw, &CleanConfig::default())
}

/// Per-row outcome; `Err` carries the drop reason.
type RowOutcome = std::result::Result<CleanOrderRecord, String>;

/// Type-coerce every row, dropping rows that contain a missing-value sentinel,
/// fail to parse, sit on null island, or carry a non-positive target. The
/// summary counts every drop by reason; `clean_rows + Σ dropped == raw_rows`.
pub fn clean_records_with(
    raw: &[RawOrderRecord],
    config: &CleanConfig,
) -> (Vec<CleanOrderRecord>, DatasetSummary) {
    use rayon::prelude::*;

    let sentinels: BTreeSet<&str> = config.sentinels.iter().map(|s| s.trim()).collect();
    let outcomes: Vec<RowOutcome> = raw
        .par_iter()
        .map(|r| clean_one(r, config, &sentinels))
        .collect();

    let mut clean = Vec::with_capacity(raw.len());
    let mut dropped_by_reason: BTreeMap<String, usize> = BTreeMap::new();
    for outcome in outcomes {
        match outcome {
            Ok(rec) => clean.push(rec),
            Err(reason) => *dropped_by_reason.entry(reason).or_insert(0) += 1,
        }
    }
    let summary = summarize(raw.len(), &clean, dropped_by_reason);
    (clean, summary)
}

/// Normalized category text: trimmed, configured prefix stripped, re-trimmed.
fn normalize_category<'a>(text: &'a str, column: &str, config: &CleanConfig) -> &'a str {
    let trimmed = text.trim();
    match config.prefixes.get(column) {
        Some(prefix) => trimmed
            .strip_prefix(prefix.as_str())
            .map(str::trim)
            .unwrap_or(trimmed),
        None => trimmed,
    }
}

fn clean_one(raw: &RawOrderRecord, config: &CleanConfig, sentinels: &BTreeSet<&str>) -> RowOutcome {
    // Missing-sentinel scan first, in schema order, so one reason per row.
    let fields: [(&str, Option<&str>); 20] = [
        ("ID", Some(&raw.id)),
        ("Delivery_person_ID", Some(&raw.delivery_person_id)),
        ("Delivery_person_Age", Some(&raw.delivery_person_age)),
        (
            "Delivery_person_Ratings",
            Some(&raw.delivery_person_ratings),
        ),
        ("Restaurant_latitude", Some(&raw.restaurant_lat)),
        ("Restaurant_longitude", Some(&raw.restaurant_lon)),
        ("Delivery_location_latitude", Some(&raw.delivery_lat)),
        ("Delivery_location_longitude", Some(&raw.delivery_lon)),
        ("Order_Date", Some(&raw.order_date)),
        ("Time_Orderd", Some(&raw.time_ordered)),
        ("Time_Order_picked", Some(&raw.time_order_picked)),
        ("Weatherconditions", Some(&raw.weather)),
        ("Road_traffic_density", Some(&raw.traffic_density)),
        ("Vehicle_condition", Some(&raw.vehicle_condition)),
        ("Type_of_order", Some(&raw.order_type)),
        ("Type_of_vehicle", Some(&raw.vehicle_type)),
        ("multiple_deliveries", Some(&raw.multiple_deliveries)),
        ("Festival", Some(&raw.festival)),
        ("City", Some(&raw.city)),
        ("Time_taken(min)", raw.time_taken_raw.as_deref()),
    ];
    for (column, value) in fields {
        if let Some(value) = value {
            if sentinels.contains(normalize_category(value, column, config)) {
                return Err(format!("missing:{column}"));
            }
        }
    }

    let unparseable = |column: &str| format!("unparseable:{column}");

    let age = parse_integer(&raw.delivery_person_age)
        .filter(|&v| v >= 0)
        .ok_or_else(|| unparseable("Delivery_person_Age"))? as u32;
    let ratings = parse_real(&raw.delivery_person_ratings)
        .ok_or_else(|| unparseable("Delivery_person_Ratings"))?;
    let restaurant_lat =
        parse_real(&raw.restaurant_lat).ok_or_else(|| unparseable("Restaurant_latitude"))?;
    let restaurant_lon =
        parse_real(&raw.restaurant_lon).ok_or_else(|| unparseable("Restaurant_longitude"))?;
    let delivery_lat =
        parse_real(&raw.delivery_lat).ok_or_else(|| unparseable("Delivery_location_latitude"))?;
    let delivery_lon =
        parse_real(&raw.delivery_lon).ok_or_else(|| unparseable("Delivery_location_longitude"))?;
    let order_date = parse_date(&raw.order_date).ok_or_else(|| unparseable("Order_Date"))?;
    let time_ordered =
        parse_time_of_day(&raw.time_ordered).ok_or_else(|| unparseable("Time_Orderd"))?;
    let time_order_picked = parse_time_of_day(&raw.time_order_picked)
        .ok_or_else(|| unparseable("Time_Order_picked"))?;
    let vehicle_condition =
        parse_integer(&raw.vehicle_condition).ok_or_else(|| unparseable("Vehicle_condition"))?;
    let multiple_deliveries = parse_integer(&raw.multiple_deliveries)
        .filter(|&v| v >= 0)
        .ok_or_else(|| unparseable("multiple_deliveries"))? as u32;
    let time_taken_min = match raw.time_taken_raw.as_deref() {
        Some(text) => {
            Some(extract_target_minutes(text).map_err(|_| unparseable("Time_taken(min)"))?)
        }
        None => None,
    };

    let in_range = |lat: f64, lon: f64| lat.abs() <= 90.0 && lon.abs() <= 180.0;
    let null_island = |lat: f64, lon: f64| lat.abs() < 0.5 && lon.abs() < 0.5;
    if !in_range(restaurant_lat, restaurant_lon)
        || !in_range(delivery_lat, delivery_lon)
        || null_island(restaurant_lat, restaurant_lon)
        || null_island(delivery_lat, delivery_lon)
    {
        return Err("invalid_coordinates".into());
    }
    if time_taken_min == Some(0) {
        return Err("invalid_target".into());
    }

    Ok(CleanOrderRecord {
        delivery_person_age: age,
        delivery_person_ratings: ratings,
        restaurant_lat,
        restaurant_lon,
        delivery_lat,
        delivery_lon,
        order_date,
        time_ordered,
        time_order_picked,
        weather: normalize_category(&raw.weather, "Weatherconditions", config).to_string(),
        traffic_density: raw.traffic_density.trim().to_string(),
        vehicle_condition,
        order_type: raw.order_type.trim().to_string(),
        vehicle_type: raw.vehicle_type.trim().to_string(),
        multiple_deliveries,
        festival: raw.festival.trim().to_string(),
        city: raw.city.trim().to_string(),
        time_taken_min,
    })
}

fn parse_real(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Integer, also accepting real text with zero fractional part ("29.0").
fn parse_integer(text: &str) -> Option<i64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<i64>() {
        return Some(v);
    }
    let v = t.parse::<f64>().ok()?;
    (v.is_finite() && v.fract() == 0.0 && v.abs() <= i64::MAX as f64).then_some(v as i64)
}

fn parse_date(text: &str) -> Option<NaiveDate> {
    let t = text.trim();
    for fmt in ["%d-%m-%Y", "%d/%m/%Y", "%Y-%m-%d"] {
        if let Ok(d) = NaiveDate::parse_from_str(t, fmt) {
            return Some(d);
        }
    }
    None
}

/// "HH:MM" or "HH:MM:SS" → minutes since midnight; hour 24 wraps to 0.
fn parse_time_of_day(text: &str) -> Option<u32> {
    let mut parts = text.trim().split(':');
    let h: u32 = parts.next()?.parse().ok()?;
    let m: u32 = parts.next()?.parse().ok()?;
    if let Some(s) = parts.next() {
        let s: u32 = s.parse().ok()?;
        if s >= 60 || parts.next().is_some() {
            return None;
        }
    }
    (h <= 24 && m < 60).then_some((h * 60 + m) % 1440)
}

fn summarize(
    raw_rows: usize,
    clean: &[CleanOrderRecord],
    dropped_by_reason: BTreeMap<String, usize>,
) -> DatasetSummary {
    let mut category_frequencies: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut numeric: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in clean {
        for (column, value) in [
            ("Weatherconditions", &rec.weather),
            ("Road_traffic_density", &rec.traffic_density),
            ("Type_of_order", &rec.order_type),
            ("Type_of_vehicle", &rec.vehicle_type),
            ("Festival", &rec.festival),
            ("City", &rec.city),
        ] {
            *category_frequencies
                .entry(column.to_string())
                .or_default()
                .entry(value.clone())
                .or_insert(0) += 1;
        }
        let mut push =
            |column: &str, v: f64| numeric.entry(column.to_string()).or_default().push(v);
        push("Delivery_person_Age", rec.delivery_person_age as f64);
        push("Delivery_person_Ratings", rec.delivery_person_ratings);
        push("Restaurant_latitude", rec.restaurant_lat);
        push("Restaurant_longitude", rec.restaurant_lon);
        push("Delivery_location_latitude", rec.delivery_lat);
        push("Delivery_location_longitude", rec.delivery_lon);
        push("Time_Orderd", rec.time_ordered as f64);
        push("Time_Order_picked", rec.time_order_picked as f64);
        push("Vehicle_condition", rec.vehicle_condition as f64);
        push("multiple_deliveries", rec.multiple_deliveries as f64);
        if let Some(t) = rec.time_taken_min {
            push("Time_taken(min)", t as f64);
        }
    }
    let numeric_stats = numeric
        .into_iter()
        .map(|(column, values)| {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            (column, NumericStats { min, max, mean })
        })
        .collect();

    DatasetSummary {
        raw_rows,
        clean_rows: clean.len(),
        dropped_by_reason,
        category_frequencies,
        numeric_stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_row(values: [&str; 20]) -> String {
        values.join(",")
    }

    fn good_row() -> [&'static str; 20] {
        [
            "0x1",
            "BANGRES01",
            "34",
            "4.5",
            "12.914264",
            "77.678400",
            "12.924264",
            "77.688400",
            "12-02-2022",
            "21:55",
            "22:10",
            "conditions Sunny",
            "Jam ",
            "2",
            "Snack ",
            "motorcycle ",
            "1",
            "No ",
            "Metropolitian ",
            "(min) 24",
        ]
    }

    fn csv_of(rows: &[[&str; 20]]) -> String {
        let mut s = COLUMNS.join(",");
        s.push('\n');
        for r in rows {
            s.push_str(&raw_row(*r));
            s.push('\n');
        }
        s
    }

    #[test]
    fn parses_and_cleans_a_good_row() {
        let out = parse_records(csv_of(&[good_row()]).as_bytes()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(out.rejects.is_empty());
        let (clean, summary) = clean_records(&out.records);
        assert_eq!(clean.len(), 1);
        let r = &clean[0];
        assert_eq!(r.weather, "Sunny");
        assert_eq!(r.traffic_density, "Jam");
        assert_eq!(r.time_ordered, 21 * 60 + 55);
        assert_eq!(r.time_taken_min, Some(24));
        assert_eq!(r.order_date, NaiveDate::from_ymd_opt(2022, 2, 12).unwrap());
        r.check_invariants().unwrap();
        assert_eq!(summary.clean_rows, 1);
        assert_eq!(summary.dropped_total(), 0);
    }

    #[test]
    fn header_mismatch_names_the_column() {
        let mut csv = csv_of(&[good_row()]);
        csv = csv.replacen("Time_Orderd", "Time_Ordered", 1);
        let err = parse_records(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("Time_Orderd")));
    }

    #[test]
    fn header_normalization_tolerates_case_and_whitespace() {
        let mut csv = csv_of(&[good_row()]);
        csv = csv.replacen("Weatherconditions", "  weatherConditions ", 1);
        assert!(parse_records(csv.as_bytes()).is_ok());
    }

    #[test]
    fn short_row_is_rejected_at_row_2() {
        let mut csv = COLUMNS.join(",");
        csv.push('\n');
        csv.push_str(&good_row()[..19].join(","));
        csv.push('\n');
        let out = parse_records(csv.as_bytes()).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.rejects.len(), 1);
        assert_eq!(out.rejects[0].row, 2);
    }

    #[test]
    fn header_only_file_yields_empty_sequence() {
        let mut csv = COLUMNS.join(",");
        csv.push('\n');
        let out = parse_records(csv.as_bytes()).unwrap();
        assert!(out.records.is_empty());
        assert!(out.rejects.is_empty());
    }

    #[test]
    fn sentinel_rows_drop_with_reason_counts() {
        let mut rows = vec![good_row(); 10];
        for r in rows.iter_mut().take(3) {
            r[3] = "NaN ";
        }
        let out = parse_records(csv_of(&rows).as_bytes()).unwrap();
        let (clean, summary) = clean_records(&out.records);
        assert_eq!(clean.len(), 7);
        assert_eq!(
            summary
                .dropped_by_reason
                .get("missing:Delivery_person_Ratings"),
            Some(&3)
        );
        assert_eq!(
            summary.clean_rows + summary.dropped_total(),
            summary.raw_rows
        );
    }

    #[test]
    fn prefixed_weather_sentinel_counts_as_missing() {
        let mut row = good_row();
        row[11] = "conditions NaN";
        let out = parse_records(csv_of(&[row]).as_bytes()).unwrap();
        let (clean, summary) = clean_records(&out.records);
        assert!(clean.is_empty());
        assert_eq!(
            summary.dropped_by_reason.get("missing:Weatherconditions"),
            Some(&1)
        );
    }

    #[test]
    fn unparseable_field_drops_not_aborts() {
        let mut row = good_row();
        row[2] = "thirty";
        let out = parse_records(csv_of(&[row, good_row()]).as_bytes()).unwrap();
        let (clean, summary) = clean_records(&out.records);
        assert_eq!(clean.len(), 1);
        assert_eq!(
            summary
                .dropped_by_reason
                .get("unparseable:Delivery_person_Age"),
            Some(&1)
        );
    }

    #[test]
    fn null_island_coordinates_drop() {
        let mut row = good_row();
        row[4] = "0.01";
        row[5] = "-0.2";
        let out = parse_records(csv_of(&[row]).as_bytes()).unwrap();
        let (clean, summary) = clean_records(&out.records);
        assert!(clean.is_empty());
        assert_eq!(
            summary.dropped_by_reason.get("invalid_coordinates"),
            Some(&1)
        );
    }

    #[test]
    fn out_of_range_latitude_drops() {
        let mut row = good_row();
        row[6] = "95.0";
        let out = parse_records(csv_of(&[row]).as_bytes()).unwrap();
        let (clean, _) = clean_records(&out.records);
        assert!(clean.is_empty());
    }

    #[test]
    fn extract_target_examples() {
        assert_eq!(extract_target_minutes("(min) 24").unwrap(), 24);
        assert_eq!(extract_target_minutes("32").unwrap(), 32);
        assert!(matches!(
            extract_target_minutes("(min) "),
            Err(Error::TargetExtraction(_))
        ));
    }

    #[test]
    fn midnight_wrap_time_parses_to_zero() {
        assert_eq!(parse_time_of_day("24:00"), Some(0));
        assert_eq!(parse_time_of_day("23:59:30"), Some(23 * 60 + 59));
        assert_eq!(parse_time_of_day("25:00"), None);
        assert_eq!(parse_time_of_day("0.97708333"), None);
    }

    #[test]
    fn cleaning_is_idempotent() {
        let out = parse_records(csv_of(&[good_row(); 4]).as_bytes()).unwrap();
        let (clean, _) = clean_records(&out.records);
        let raws: Vec<RawOrderRecord> = clean.iter().map(|c| c.to_raw()).collect();
        let (again, summary) = clean_records(&raws);
        assert_eq!(again, clean);
        assert_eq!(summary.dropped_total(), 0);
    }

    #[test]
    fn clean_record_round_trips_through_json() {
        let out = parse_records(csv_of(&[good_row()]).as_bytes()).unwrap();
        let (clean, summary) = clean_records(&out.records);
        let json = serde_json::to_string(&clean[0]).unwrap();
        let back: CleanOrderRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, clean[0]);
        let sjson = serde_json::to_string(&summary).unwrap();
        let sback: DatasetSummary = serde_json::from_str(&sjson).unwrap();
        assert_eq!(sback, summary);
    }

    #[test]
    fn target_absent_mode_parses_19_columns() {
        let mut csv = COLUMNS[..19].join(",");
        csv.push('\n');
        csv.push_str(&good_row()[..19].join(","));
        csv.push('\n');
        let out = parse_records_with_mode(csv.as_bytes(), TargetMode::Absent).unwrap();
        assert_eq!(out.records.len(), 1);
        let (clean, _) = clean_records(&out.records);
        assert_eq!(clean[0].time_taken_min, None);
    }

    #[test]
    fn zero_target_drops_as_invalid() {
        let mut row = good_row();
        row[19] = "(min) 0";
        let out = parse_records(csv_of(&[row]).as_bytes()).unwrap();
        let (clean, summary) = clean_records(&out.records);
        assert!(clean.is_empty());
        assert_eq!(summary.dropped_by_reason.get("invalid_target"), Some(&1));
    }
}
