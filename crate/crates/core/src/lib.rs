pub mod calendar;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod kde;
pub mod manifest;
pub mod model;
pub mod onset;
pub mod pipeline;
pub mod plot;
pub mod severity;
pub mod synth;
pub mod trend;

pub use error::{Error, Result};
