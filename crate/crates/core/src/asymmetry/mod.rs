//! Asymmetry: `q`-distance from a grid function to the optimizer orbit
//! `a·v(b(x − x0))` with matched `q`-norm.
//!
//! The amplitude `a > 0` is eliminated by matching grid `q`-masses, which
//! leaves a search over `(log b, x0)`. Each start runs a Nelder–Mead descent
//! in scaled coordinates; restarts run in parallel and the best result wins
//! (ties go to the lower start index).

mod simplex;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use simplex::{nelder_mead, SimplexOutcome};

use crate::error::{Error, Result};
use crate::gnscore::GnsParams;
use crate::gridfn::{GridFunction, Hyperplane};
use crate::numeric::abs_pow;
use crate::radialopt::{eval_witness, OptimizerWitness, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Randomized starts on top of the deterministic one.
    pub restarts: usize,
    /// Objective evaluations per start.
    pub budget: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub seed: u64,
    /// Simplex size at which a local search stops, in scaled coordinates.
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { restarts: 8, budget: 3000, b_min: 1e-3, b_max: 1e3, seed: 0, tol: 1e-6 }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b_min > 0.0 && self.b_min < self.b_max && self.b_max.is_finite()) {
            return Err(Error::Parameter(format!("bad dilation box [{}, {}]", self.b_min, self.b_max)));
        }
        if !(self.tol > 0.0) || self.budget == 0 {
            return Err(Error::Parameter("search needs tol > 0 and a nonzero budget".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SearchConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Axis-aligned affine set for the witness center: listed coordinates are pinned.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineRestriction {
    pub fixed_coords: BTreeMap<usize, f64>,
}

impl AffineRestriction {
    pub fn unrestricted() -> Self {
        Self::default()
    }

    /// `S = {0}`.
    pub fn origin(dim: usize) -> Self {
        AffineRestriction { fixed_coords: (0..dim).map(|k| (k, 0.0)).collect() }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Some((&k, _)) = self.fixed_coords.iter().find(|(&k, _)| k >= dim) {
            return Err(Error::Parameter(format!("restricted axis {k} out of range for dim {dim}")));
        }
        if self.fixed_coords.values().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("restricted coordinate is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AsymmetryResult {
    pub lambda_value: f64,
    pub witness: OptimizerWitness,
    /// `|‖v_w‖_q − ‖u‖_q| / ‖u‖_q` on the grid.
    pub constraint_residual: f64,
    pub restarts_used: usize,
    pub converged: bool,
    pub evaluations: usize,
    /// The best dilation sits on the edge of the search box.
    pub b_at_box_edge: bool,
}

/// Grid-side evaluator for `∫|u − a v_{1,b,x0}|^q / ∫|u|^q`.
struct Objective<'a> {
    u: &'a GridFunction,
    profile: &'a RadialProfile,
    q: f64,
    u_mass: f64,
    coords: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(u: &'a GridFunction, profile: &'a RadialProfile, q: f64) -> Self {
        let coords = (0..u.dim())
            .map(|k| {
                let n = u.shape()[k];
                let h = u.spacing()[k];
                (0..n).map(|i| (i as f64 + 0.5 - 0.5 * n as f64) * h).collect()
            })
            .collect();
        Objective { u, profile, q, u_mass: u.lr_mass(q) / u.cell_volume(), coords, scratch: vec![0.0; u.len()] }
    }

    /// Fills `scratch` with `v(b|x − x0|)`; returns `Σ v^q`.
    fn fill(&mut self, b: f64, x0: &[f64]) -> f64 {
        let dim = self.u.dim();
        let shape = self.u.shape();
        let mut multi = vec![0usize; dim];
        let last = dim - 1;
        let mut prefix = vec![0.0; dim + 1];
        let mut mass = 0.0;
        let n_last = shape[last];
        let mut idx = 0;
        'outer: loop {
            for k in 0..last {
                let d = self.coords[k][multi[k]] - x0[k];
                prefix[k + 1] = prefix[k] + d * d;
            }
            let base = prefix[last];
            for (i, x) in self.coords[last].iter().enumerate() {
                let d = x - x0[last];
                let v = self.profile.value_at(b * (base + d * d).sqrt());
                self.scratch[idx + i] = v;
                mass += abs_pow(v, self.q);
            }
            idx += n_last;
            let mut k = last;
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                multi[k] += 1;
                if multi[k] < shape[k] {
                    break;
                }
                multi[k] = 0;
            }
        }
        mass
    }

    /// Returns `(relative distance, amplitude)`; `None` when the witness misses the grid.
    fn eval(&mut self, b: f64, x0: &[f64]) -> Option<(f64, f64)> {
        let v_mass = self.fill(b, x0);
        if !(v_mass > 0.0) {
            return None;
        }
        let a = (self.u_mass / v_mass).powf(1.0 / self.q);
        let q = self.q;
        let dist: f64 = self.u.values().iter().zip(&self.scratch).map(|(u, v)| abs_pow(u - a * v, q)).sum();
        Some((dist / self.u_mass, a))
    }
}

/// `λ(u)`.
pub fn asymmetry(u: &GridFunction, params: &GnsParams, model: &Arc<RadialProfile>, cfg: &SearchConfig) -> Result<AsymmetryResult> {
    relative_asymmetry(u, &AffineRestriction::unrestricted(), params, model, cfg)
}

/// `λ(u|S)`: the same search with the pinned coordinates of `x0` held on `S`.
pub fn relative_asymmetry(
    u: &GridFunction,
    restriction: &AffineRestriction,
    params: &GnsParams,
    model: &Arc<RadialProfile>,
    cfg: &SearchConfig,
) -> Result<AsymmetryResult> {
    cfg.validate()?;
    let dim = u.dim();
    restriction.validate(dim)?;
    if model.dim != dim {
        return Err(Error::Shape(format!("model dimension {} differs from grid dimension {dim}", model.dim)));
    }
    let q = params.q;
    let u_mass = u.lr_mass(q);
    if !(u_mass > 0.0) {
        return Err(Error::Domain("asymmetry of a function with zero q-norm".into()));
    }

    let free: Vec<usize> = (0..dim).filter(|k| !restriction.fixed_coords.contains_key(k)).collect();
    let scale = model.half_max_radius().max(u.spacing().iter().cloned().fold(0.0, f64::max));
    let bary = u.barycenter(q);
    let spread = weighted_spread(u, q, &bary);
    let (lb_min, lb_max) = (cfg.b_min.ln(), cfg.b_max.ln());

    let mut base_x0 = bary.clone();
    for (&k, &c) in &restriction.fixed_coords {
        base_x0[k] = c;
    }
    let to_point = |y: &[f64]| -> (f64, Vec<f64>) {
        let mut x0 = base_x0.clone();
        for (j, &k) in free.iter().enumerate() {
            x0[k] = y[j + 1] * scale;
        }
        (y[0], x0)
    };

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(cfg.restarts + 1);
    let mut first = vec![0.0];
    first.extend(free.iter().map(|&k| bary[k] / scale));
    starts.push(first);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.restarts {
        let mut y = vec![rng.gen_range(-1.5..1.5)];
        for &k in &free {
            let reach = (2.0 * spread[k]).max(scale);
            y.push((bary[k] + rng.gen_range(-reach..reach)) / scale);
        }
        starts.push(y);
    }
    let step = vec![0.3; free.len() + 1];
    // an empty overlap scores as badly as disjoint supports can
    let miss = 2f64.powf(q) + 1.0;

    let runs: Vec<(SimplexOutcome, usize)> = starts
        .par_iter()
        .map(|y0| {
            let mut obj = Objective::new(u, model, q);
            let mut total = 0;
            let mut objective = |y: &[f64]| -> f64 {
                let (lb, x0) = to_point(y);
                let clamped = lb.clamp(lb_min, lb_max);
                let penalty = (lb - clamped).powi(2);
                obj.eval(clamped.exp(), &x0).map_or(miss, |(d, _)| d) + penalty
            };
            let mut out = nelder_mead(&mut objective, y0, &step, cfg.tol, cfg.budget);
            total += out.evaluations;
            // re-seed the simplex at the optimum once; Nelder–Mead can collapse early
            if out.converged {
                let again = nelder_mead(&mut objective, &out.x, &step, cfg.tol, cfg.budget);
                total += again.evaluations;
                if again.f < out.f {
                    out = again;
                }
            }
            (out, total)
        })
        .collect();

    let evaluations = runs.iter().map(|(_, e)| e).sum();
    let (best, _) = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.0.f.total_cmp(&b.0.f).then(i.cmp(j)))
        .map(|(_, r)| r)
        .unwrap();

    let (lb, x0) = to_point(&best.x);
    let lb = lb.clamp(lb_min, lb_max);
    let b = lb.exp();
    let mut obj = Objective::new(u, model, q);
    let (lambda_value, a) = obj
        .eval(b, &x0)
        .ok_or_else(|| Error::Numerical("asymmetry search ended on a witness that misses the grid".into()))?;
    let witness = OptimizerWitness::new(a, b, x0, model.clone())?;
    let v = eval_witness(&witness, u)?;
    let u_norm = u_mass.powf(1.0 / q);
    let constraint_residual = (v.lr_mass(q).powf(1.0 / q) - u_norm).abs() / u_norm;
    let edge = 1e-6;
    Ok(AsymmetryResult {
        lambda_value,
        witness,
        constraint_residual,
        restarts_used: starts.len(),
        converged: best.converged,
        evaluations,
        b_at_box_edge: lb <= lb_min + edge || lb >= lb_max - edge,
    })
}

/// Per-axis standard deviation of the `|u|^q` distribution.
fn weighted_spread(u: &GridFunction, q: f64, center: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; u.dim()];
    let mut total = 0.0;
    let mut x = vec![0.0; u.dim()];
    for (idx, v) in u.values().iter().enumerate() {
        let w = v.abs().powf(q);
        if w == 0.0 {
            continue;
        }
        u.center_into(idx, &mut x);
        total += w;
        for k in 0..u.dim() {
            acc[k] += w * (x[k] - center[k]).powi(2);
        }
    }
    acc.iter().map(|a| if total > 0.0 { (a / total).sqrt() } else { 0.0 }).collect()
}

/// `∫|u∘T_H − u|^q`; `H` must act as a cell permutation.
pub fn reflection_distance(u: &GridFunction, h: &Hyperplane, q: f64) -> Result<f64> {
    h.validate(u.dim())?;
    if !u.is_permutation_reflection(h) {
        return Err(Error::Shape("reflection is not a cell permutation on this grid".into()));
    }
    u.reflect(h)?.distance_mass(u, q)
}
