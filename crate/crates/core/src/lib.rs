//! Ensemble attack detection for industrial control system telemetry.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`ingest`]: ARFF and delimited-text parsing into the canonical [`dataset::Dataset`]
//! - [`dataset`]: normalization, stratified splits, balanced-subset construction,
//!   imbalance-ratio subsampling
//! - [`simulator`]: a two-tank plant with false-data-injection and denial-of-service
//!   adversaries, producing labeled telemetry
//! - [`neural`]: from-scratch dense networks, autoencoders, Adam, gradient checking
//! - [`trees`]: CART decision tree plus random-forest and AdaBoost baselines
//! - [`ensemble`]: the balanced-representation ensemble (autoencoder branches,
//!   DNN branches, super-vector fusion, decision tree) and the experiment harness
//! - [`metrics`]: confusion-matrix accounting and score aggregation
//! - [`model_io`]: versioned binary serialization of trained models

pub mod dataset;
pub mod ensemble;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod model_io;
pub mod neural;
pub mod provenance;
pub mod rng;
pub mod simulator;
pub mod trees;

pub use dataset::Dataset;
pub use ensemble::{EnsembleModel, PipelineConfig};
pub use metrics::{ConfusionMatrix, Scores};
