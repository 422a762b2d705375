//! Log-log least squares on scan rows.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::scan::ScanRecord;

pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Ordinary least squares of `ln λ` on `ln δ`.
///
/// `alpha_hat` is the fitted slope, so `λ ≈ C·δ^alpha_hat`; data with
/// `λ = δ²` gives `alpha_hat = 2`. The exponent `α` in `δ ≥ κ·λ^α`
/// implied by such data is `1 / alpha_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha_hat: f64,
    /// `ln C`.
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Fits the rows with `0 < delta < threshold` and `lambda > 0`.
pub fn fit_exponent(records: &[ScanRecord], threshold: f64) -> CliResult<FitResult> {
    if !(threshold > 0.0) {
        return Err(CliError::Usage(format!("threshold {threshold} must be positive")));
    }
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.delta > 0.0 && r.delta < threshold && r.lambda > 0.0 && r.lambda.is_finite())
        .map(|r| (r.delta.ln(), r.lambda.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(CliError::Usage(format!(
            "fit needs at least 3 rows with 0 < delta < {threshold} and lambda > 0, found {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(CliError::Usage("all fitted rows share one delta value".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(FitResult { alpha_hat: slope, intercept, r_squared, points_used: pts.len() })
}
