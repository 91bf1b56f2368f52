//! Gaze-and-pinch selection toolkit: reticle heuristics, coordination-error
//! classification, a ring selection task, a seeded simulator, session logs,
//! statistics and reporting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod commands;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod report;
pub mod reticle;
pub mod service;
pub mod session;
pub mod sim;
pub mod stats;
pub mod task;

pub use error::{Error, Result};
