//! Dataset profiling to stdout: cleaning tallies, per-category target
//! breakdowns, a ratings histogram, and a numeric correlation matrix.

use std::fs::File;
use std::path::Path;

use deliverytime_core::features::{haversine_km, temporal_features};
use deliverytime_core::ingest::{clean_records, parse_records, CleanOrderRecord};

use crate::error::{classify, data, Result};

/// Count / mean / sample-std of the target within one category value.
fn target_stats(values: &[f64]) -> (usize, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    };
    (n, mean, std)
}

fn category_table(
    out: &mut String,
    title: &str,
    records: &[CleanOrderRecord],
    key: impl Fn(&CleanOrderRecord) -> &str,
) {
    use std::collections::BTreeMap;
    let mut by_value: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for rec in records {
        if let Some(t) = rec.time_taken_min {
            by_value.entry(key(rec)).or_default().push(t as f64);
        }
    }
    out.push_str(&format!("\n{title}\n"));
    out.push_str(&format!(
        "  {:<16} {:>7} {:>10} {:>9}\n",
        "value", "rows", "mean_min", "std_min"
    ));
    for (value, times) in by_value {
        let (n, mean, std) = target_stats(&times);
        out.push_str(&format!("  {value:<16} {n:>7} {mean:>10.2} {std:>9.2}\n"));
    }
}

fn ratings_histogram(out: &mut String, records: &[CleanOrderRecord]) {
    // 0.5-wide bins over [0, 6); anything at or above 6 lands in the top bin.
    let mut bins = [0usize; 12];
    for rec in records {
        let idx = ((rec.delivery_person_ratings / 0.5) as usize).min(bins.len() - 1);
        bins[idx] += 1;
    }
    let peak = bins.iter().copied().max().unwrap_or(0).max(1);
    out.push_str("\nratings histogram\n");
    for (i, &count) in bins.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let lo = i as f64 * 0.5;
        let bar = "#".repeat((count * 40).div_ceil(peak));
        out.push_str(&format!(
            "  [{lo:>3.1}, {:>3.1}) {count:>7} {bar}\n",
            lo + 0.5
        ));
    }
}

/// Pearson correlation matrix over the numeric profile columns.
fn correlation_table(out: &mut String, records: &[CleanOrderRecord]) {
    let columns: [(&str, fn(&CleanOrderRecord) -> f64); 8] = [
        ("age", |r| r.delivery_person_age as f64),
        ("ratings", |r| r.delivery_person_ratings),
        ("distance_km", |r| {
            haversine_km(
                r.restaurant_lat,
                r.restaurant_lon,
                r.delivery_lat,
                r.delivery_lon,
            )
        }),
        ("vehicle_cond", |r| r.vehicle_condition as f64),
        ("multi_deliv", |r| r.multiple_deliveries as f64),
        ("prep_minutes", |r| temporal_features(r).prep_minutes),
        ("order_hour", |r| temporal_features(r).order_hour as f64),
        ("time_taken", |r| r.time_taken_min.unwrap_or(0) as f64),
    ];
    let n = records.len() as f64;
    let series: Vec<Vec<f64>> = columns
        .iter()
        .map(|(_, f)| records.iter().map(f).collect())
        .collect();
    let means: Vec<f64> = series.iter().map(|xs| xs.iter().sum::<f64>() / n).collect();
    let corr = |a: usize, b: usize| -> f64 {
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in 0..records.len() {
            let da = series[a][i] - means[a];
            let db = series[b][i] - means[b];
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        if saa <= 0.0 || sbb <= 0.0 {
            f64::NAN
        } else {
            sab / (saa * sbb).sqrt()
        }
    };
    out.push_str("\ncorrelation (pearson)\n");
    out.push_str(&format!("  {:<13}", ""));
    for (name, _) in &columns {
        out.push_str(&format!(" {:>12}", name));
    }
    out.push('\n');
    for a in 0..columns.len() {
        out.push_str(&format!("  {:<13}", columns[a].0));
        for b in 0..columns.len() {
            out.push_str(&format!(" {:>12.3}", corr(a, b)));
        }
        out.push('\n');
    }
}

pub fn run_summarize(csv_path: &Path) -> Result<String> {
    let file =
        File::open(csv_path).map_err(|e| data(format!("cannot open dataset {csv_path:?}: {e}")))?;
    let parsed = parse_records(file).map_err(|e| classify("summarize", e))?;
    let (clean, summary) = clean_records(&parsed.records);
    if clean.is_empty() {
        return Err(data(format!(
            "no usable rows in {csv_path:?} ({} raw rows)",
            summary.raw_rows
        )));
    }

    let mut out = String::new();
    out.push_str(&format!("dataset {csv_path:?}\n"));
    out.push_str(&format!(
        "  parsed rows     {}\n  parse rejects   {}\n  clean rows      {}\n  dropped rows    {}\n",
        summary.raw_rows,
        parsed.rejects.len(),
        summary.clean_rows,
        summary.dropped_total(),
    ));
    if !summary.dropped_by_reason.is_empty() {
        out.push_str("\ndrops by reason\n");
        for (reason, count) in &summary.dropped_by_reason {
            out.push_str(&format!("  {reason:<34} {count:>7}\n"));
        }
    }

    category_table(&mut out, "by city", &clean, |r| &r.city);
    category_table(&mut out, "by traffic density", &clean, |r| {
        &r.traffic_density
    });
    category_table(&mut out, "by weather", &clean, |r| &r.weather);
    ratings_histogram(&mut out, &clean);
    correlation_table(&mut out, &clean);
    Ok(out)
}
