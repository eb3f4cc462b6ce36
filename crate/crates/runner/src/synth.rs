//! Sample-data generator. Emits the exact raw CSV schema the ingest layer
//! expects — including its quirks: the `conditions ` weather prefix, stray
//! trailing spaces, `(min) N` targets, and a sprinkle of `NaN` sentinels —
//! so the full pipeline can be exercised without the real dataset.

use std::path::Path;

use rand::Rng;

use deliverytime_core::ingest::COLUMNS;
use deliverytime_core::seed::rng_for;

use crate::error::{data, internal, validation, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMode {
    /// Correlated fields with a target built from distance, traffic, weather,
    /// rush hours, ratings and the rest — rich enough to train against.
    Realistic,
    /// Target depends on traffic only; every other field is independent
    /// noise. Useful for checking that selection finds the one real signal.
    TrafficOnly,
}

impl SynthMode {
    pub fn parse(name: &str) -> Result<SynthMode> {
        match name.to_ascii_lowercase().as_str() {
            "realistic" => Ok(SynthMode::Realistic),
            "traffic_only" | "traffic-only" => Ok(SynthMode::TrafficOnly),
            other => Err(validation(format!(
                "unknown synth mode {other:?}; expected realistic or traffic_only"
            ))),
        }
    }
}

const CITY_CENTERS: [(&str, f64, f64); 5] = [
    ("Bangalore", 12.9716, 77.5946),
    ("Chennai", 13.0827, 80.2707),
    ("Hyderabad", 17.3850, 78.4867),
    ("Mumbai", 19.0760, 72.8777),
    ("Pune", 18.5204, 73.8567),
];

const WEATHER: [(&str, f64); 6] = [
    ("Sunny", 0.0),
    ("Cloudy", 1.0),
    ("Windy", 1.0),
    ("Fog", 4.0),
    ("Stormy", 5.0),
    ("Sandstorms", 6.0),
];

const TRAFFIC: [(&str, f64); 4] = [("Low", 0.0), ("Medium", 3.0), ("High", 6.0), ("Jam", 11.0)];
const ORDER_TYPES: [&str; 4] = ["Snack", "Meal", "Drinks", "Buffet"];
const VEHICLES: [&str; 3] = ["motorcycle", "scooter", "electric_scooter"];
const CITY_KINDS: [&str; 3] = ["Urban", "Metropolitian", "Semi-Urban"];

fn pick<'a, T>(rng: &mut impl Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

/// Standard normal via Box–Muller.
fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn hhmm(minutes: u32) -> String {
    format!("{:02}:{:02}", (minutes / 60) % 24, minutes % 60)
}

fn synth_row(rng: &mut impl Rng, index: usize, mode: SynthMode) -> Vec<String> {
    let (city_name, clat, clon) = *pick(rng, &CITY_CENTERS);
    let rlat = clat + rng.gen_range(-0.15..0.15);
    let rlon = clon + rng.gen_range(-0.15..0.15);
    // Keep the drop within ~0.13 degrees so the distance stays well under
    // the 100 km validity cutoff and the target clamp below rarely binds.
    let dlat = rlat + rng.gen_range(-0.13..0.13);
    let dlon = rlon + rng.gen_range(-0.13..0.13);
    let distance_km = deliverytime_core::features::haversine_km(rlat, rlon, dlat, dlon);

    let age = rng.gen_range(20..=39);
    let ratings = (rng.gen_range(3.0..=5.0_f64) * 10.0).round() / 10.0;
    let (weather, weather_pen) = *pick(rng, &WEATHER);
    let (traffic, traffic_pen) = *pick(rng, &TRAFFIC);
    let traffic_code = TRAFFIC.iter().position(|(n, _)| *n == traffic).unwrap() as f64;
    let vehicle_condition = rng.gen_range(0..=3);
    let order_type = *pick(rng, &ORDER_TYPES);
    let vehicle_type = *pick(rng, &VEHICLES);
    let multiple_deliveries = rng.gen_range(0..=3);
    let festival = if rng.gen_range(0..100) < 4 {
        "Yes"
    } else {
        "No"
    };
    let city_kind = *pick(rng, &CITY_KINDS);

    let day = rng.gen_range(1..=28);
    let month = rng.gen_range(2..=4);
    let order_minutes = rng.gen_range(8 * 60..23 * 60);
    let prep = rng.gen_range(5..=15);
    let picked_minutes = order_minutes + prep;
    let hour = order_minutes / 60;
    let weekend = {
        // Sakamoto day-of-week over the synthetic 2022 dates.
        let t = [0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4];
        let (y, m) = (2022, month as usize);
        let yy = if m < 3 { y - 1 } else { y };
        let dow = (yy + yy / 4 - yy / 100 + yy / 400 + t[m - 1] + day as usize) % 7;
        dow == 0 || dow == 6
    };

    let minutes = match mode {
        SynthMode::Realistic => {
            let rush = (12..14).contains(&hour) || (19..21).contains(&hour);
            let mut y = 6.0 + 0.9 * distance_km + traffic_pen + weather_pen;
            if rush {
                y += 3.0;
                if traffic == "Jam" {
                    y += 5.0;
                }
            }
            y += multiple_deliveries as f64 * 3.0;
            y += (4.8 - ratings) * 2.5;
            if festival == "Yes" {
                y += 8.0;
            }
            y += age as f64 * 0.05;
            if weekend {
                y += 1.5;
            }
            y += 3.0 - vehicle_condition as f64;
            y += normal(rng) * 2.0;
            y
        }
        SynthMode::TrafficOnly => 12.0 + 9.0 * traffic_code + normal(rng) * 0.8,
    };
    let minutes = (minutes.round() as i64).clamp(10, 54);

    // ~2% of realistic rows get a NaN sentinel in one nullable column, so the
    // cleaning stage has something to do.
    let nan_slot = if mode == SynthMode::Realistic && rng.gen_range(0..100) < 2 {
        rng.gen_range(0..4)
    } else {
        usize::MAX
    };
    let or_nan = |slot: usize, value: String| -> String {
        if slot == nan_slot {
            "NaN ".into()
        } else {
            value
        }
    };

    vec![
        format!("0x{index:04X}"),
        format!(
            "{}RES{:02}DEL{:03}",
            &city_name[..3].to_uppercase(),
            index % 20,
            index % 700
        ),
        or_nan(0, age.to_string()),
        or_nan(1, format!("{ratings}")),
        format!("{rlat:.6}"),
        format!("{rlon:.6}"),
        format!("{dlat:.6}"),
        format!("{dlon:.6}"),
        format!("{day:02}-{month:02}-2022"),
        or_nan(2, hhmm(order_minutes)),
        hhmm(picked_minutes),
        format!("conditions {weather}"),
        format!("{traffic} "),
        vehicle_condition.to_string(),
        format!("{order_type} "),
        format!("{vehicle_type} "),
        or_nan(3, multiple_deliveries.to_string()),
        festival.to_string(),
        format!("{city_kind} "),
        format!("(min) {minutes}"),
    ]
}

pub fn run_synth(rows: usize, seed: u64, mode: SynthMode, output: &Path) -> Result<()> {
    if rows == 0 {
        return Err(validation("rows must be at least 1"));
    }
    let mut rng = rng_for(seed, "synth", 0);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)
        .map_err(|e| internal(format!("csv: {e}")))?;
    for index in 0..rows {
        w.write_record(synth_row(&mut rng, index, mode))
            .map_err(|e| internal(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| internal(format!("csv: {e}")))?;
    if let Some(dir) = output.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| data(format!("cannot create output directory {dir:?}: {e}")))?;
        }
    }
    std::fs::write(output, bytes).map_err(|e| data(format!("cannot write {output:?}: {e}")))
}
