//! Toolkit for studying how haters react to counterspeech.
//!
//! The pipeline runs from raw comment dumps to evaluated predictors:
//! [`ingest`] rebuilds dialogue trees, [`classify`] labels hate speech and
//! counterspeech, [`outcomes`] extracts pairs and reentry labels,
//! [`linguistics`] compares counterspeech across outcomes, [`forecast`]
//! trains reaction predictors and [`eval`] scores them.

pub mod classify;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod ingest;
pub mod linguistics;
pub mod outcomes;
pub mod pipeline;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
