//! Experiment plans, the evaluation harness and on-disk formats for the
//! `dcstore` simulator.

pub mod experiments;
pub mod io;
pub mod plan;

pub use dcstore_core as core;
