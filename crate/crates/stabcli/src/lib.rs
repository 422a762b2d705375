//! Command-line harness around `gnslab`: model building, deficits,
//! asymmetry, the reduction pipeline, perturbation scans and exponent fits.

pub mod cli;
pub mod error;
pub mod families;
pub mod fit;
pub mod scan;

pub use error::{CliError, CliResult};
