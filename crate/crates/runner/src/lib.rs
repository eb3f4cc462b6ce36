//! Experiment runner for the delivery-time models: configuration, the
//! train/ablate/compare pipelines, batch scoring, dataset profiling, and a
//! synthetic-data generator. The `deliverytime` binary is a thin CLI over
//! these modules.

pub mod config;
pub mod error;
pub mod experiment;
pub mod pipeline;
pub mod predict;
pub mod report;
pub mod summarize;
pub mod synth;
