//! From-scratch machine-learning toolkit for food-delivery ETA regression.
//!
//! The crate is organized as a pipeline:
//!
//! * [`ingest`] — raw CSV parsing, sentinel-aware cleaning, and dataset
//!   summaries.
//! * [`features`] — categorical encodings, haversine distance, temporal
//!   expansion, and the numeric [`features::FeatureMatrix`].
//! * [`select`] — equal-frequency discretization and mutual-information
//!   feature ranking.
//! * [`models`] — seven regressor families (OLS, elastic net, CART, bagging,
//!   random forest, two-policy GBDT, ε-SVR) behind one fit/predict contract,
//!   all implemented from first principles.
//! * [`eval`] — metrics, seeded splits, cross-validated grid search, paired
//!   t-tests, and residual diagnostics.
//! * [`seed`] — labeled deterministic RNG derivation; every randomized
//!   component is a pure function of (data, params, seed).

pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod models;
pub mod seed;
pub mod select;

pub use error::{Error, Result};
