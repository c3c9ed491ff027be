//! Benchmark runner that evaluates the `dpim-core` models over configured
//! scenarios and compares the results with reference figure data.

pub mod cli;
pub mod config;
pub mod error;
pub mod reference;
pub mod report;
pub mod run;
pub mod svg;

pub use config::{Config, Scenario};
pub use error::{BenchError, Result};
pub use reference::{Figure, Metric, ReferenceRecord, ReferenceSet};
pub use report::{Report, ReportRow, Status};
pub use run::{Overrides, Runner};
