//! Digital processing-in-memory toolkit: a bit-level crossbar simulator,
//! arithmetic kernels built from column gates, and analytical throughput and
//! energy models for PIM and GPU baselines.

pub mod archmodel;
pub mod bitgrid;
pub mod error;
pub mod format;
pub mod kernels;
pub mod workloads;

pub use error::{Error, Result};
pub use format::{Number, NumberFormat};
