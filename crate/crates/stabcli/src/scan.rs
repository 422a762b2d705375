//! ε sweeps along a perturbation family.

use std::io::{Read, Write};
use std::sync::Arc;

use gnslab::asymmetry::{asymmetry, SearchConfig};
use gnslab::gnscore::{deficit, functional_g};
use gnslab::radialopt::RadialProfile;
use gnslab::rearrange::ps_deficit;
use gnslab::{Error, GnsParams, GridFunction, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCAN_HEADER: [&str; 5] = ["eps", "delta", "lambda", "delta_ps", "boundary_mass"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
    pub delta_ps: f64,
    pub boundary_mass: f64,
}

impl ScanRecord {
    fn is_finite(&self) -> bool {
        [self.eps, self.delta, self.lambda, self.delta_ps, self.boundary_mass].iter().all(|x| x.is_finite())
    }
}

/// Everything a row needs besides its ε.
pub struct ScanSetup {
    pub params: GnsParams,
    pub profile: Arc<RadialProfile>,
    /// The unperturbed function.
    pub v: GridFunction,
    /// The perturbation direction.
    pub w: GridFunction,
    pub g_const: f64,
    pub search: SearchConfig,
}

/// `G(v)/‖v‖_q` measured on the grid itself.
///
/// Using this instead of the radial estimate removes the discretization
/// offset from `δ`, so the embedded optimizer has `δ = 0` exactly.
pub fn grid_constant(v: &GridFunction, params: &GnsParams) -> Result<f64> {
    Ok(functional_g(v, params)? / v.lr_norm(params.q)?)
}

/// `count` values `max, max·ratio, max·ratio², ...`, ascending.
pub fn geometric_eps(max: f64, count: usize, ratio: f64) -> CliResult<Vec<f64>> {
    if !(max > 0.0 && max.is_finite()) || !(ratio > 0.0 && ratio < 1.0) || count == 0 {
        return Err(CliError::Usage("eps grid needs max > 0, 0 < ratio < 1 and count >= 1".into()));
    }
    let mut eps: Vec<f64> = (0..count).map(|i| max * ratio.powi(i as i32)).collect();
    eps.reverse();
    Ok(eps)
}

/// Sorts ascending and rejects negative, non-finite or repeated values.
pub fn check_eps(mut eps: Vec<f64>) -> CliResult<Vec<f64>> {
    if eps.is_empty() {
        return Err(CliError::Usage("empty eps grid".into()));
    }
    if let Some(bad) = eps.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(CliError::Usage(format!("eps = {bad} is not a finite nonnegative number")));
    }
    eps.sort_by(f64::total_cmp);
    if eps.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Usage("eps grid has repeated values".into()));
    }
    Ok(eps)
}

pub fn scan_row(setup: &ScanSetup, eps: f64) -> Result<ScanRecord> {
    let q = setup.params.q;
    let raw = setup.v.add_scaled(eps, &setup.w)?;
    let u = raw.scaled(1.0 / raw.lr_norm(q)?);
    let delta = deficit(&u, &setup.params, setup.g_const)?.delta;
    let lambda = asymmetry(&u, &setup.params, &setup.profile, &setup.search)?.lambda_value;
    let delta_ps = ps_deficit(&u.abs(), &setup.params)?;
    let rec = ScanRecord { eps, delta, lambda, delta_ps, boundary_mass: u.boundary_mass_fraction(q) };
    if !rec.is_finite() {
        return Err(Error::Numerical(format!("non-finite scan record at eps = {eps}")));
    }
    Ok(rec)
}

/// Runs every row on the current rayon pool; results come back in `eps` order.
pub fn run_scan(setup: &ScanSetup, eps: &[f64]) -> Vec<(f64, Result<ScanRecord>)> {
    eps.par_iter().map(|&e| (e, scan_row(setup, e))).collect()
}

pub fn write_scan_csv<W: Write>(out: W, records: &[ScanRecord]) -> CliResult<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(SCAN_HEADER)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_scan_csv<R: Read>(input: R) -> CliResult<Vec<ScanRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(SCAN_HEADER) {
        return Err(CliError::Usage(format!(
            "scan header must be `{}`, found `{}`",
            SCAN_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
