//! Numerical optimal constant and radial optimizer profile.
//!
//! The functional `F(u) = ∫|∇u|^p + ∫|u|^s` is discretized on radial shells
//! `[0, R_max]` and minimized over nonnegative, nonincreasing profiles with a
//! prescribed `q`-mass. Each step moves along the constraint-projected gradient
//! (taken in the discrete `H¹` metric), projects back onto the monotone cone by
//! pool-adjacent-violators, clips at zero, and rescales to the target mass.
//! Steps are accepted under an Armijo test, so `F` never increases.

mod isotonic;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use isotonic::isotonic_nonincreasing;

use crate::error::{Error, Result};
use crate::gnscore::GnsParams;
use crate::gridfn::GridFunction;
use crate::numeric::{exact_sum, unit_sphere_area};

/// Tail mass fraction (last tenth of the radial interval) tolerated after a solve.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Convergence: relative decrease of `F` over the last `STALL_WINDOW` steps.
const STALL_RTOL: f64 = 1e-12;
const STALL_WINDOW: usize = 50;

/// Discrete radial quadrature: shell volumes for nodes and for node-to-node edges.
#[derive(Debug, Clone)]
struct RadialGrid {
    dr: f64,
    radii: Vec<f64>,
    node_w: Vec<f64>,
    edge_w: Vec<f64>,
}

impl RadialGrid {
    fn new(dim: usize, radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 3 || radii[0] != 0.0 {
            return Err(Error::Parameter("radial grid needs >= 3 radii starting at 0".into()));
        }
        let dr = radii[1] - radii[0];
        for w in radii.windows(2) {
            let gap = w[1] - w[0];
            if !(gap > 0.0) || (gap - dr).abs() > 1e-9 * dr.max(1.0) {
                return Err(Error::Parameter("radii must be uniformly spaced and increasing".into()));
            }
        }
        let area = unit_sphere_area(dim);
        let nf = dim as f64;
        let last = *radii.last().unwrap();
        let shell = |lo: f64, hi: f64| area * (hi.powf(nf) - lo.powf(nf)) / nf;
        let node_w = radii
            .iter()
            .map(|&r| shell((r - 0.5 * dr).max(0.0), (r + 0.5 * dr).min(last)))
            .collect();
        let edge_w = radii.windows(2).map(|w| shell(w[0], w[1])).collect();
        Ok(RadialGrid { dr, radii, node_w, edge_w })
    }

    fn uniform(dim: usize, resolution: usize, r_max: f64) -> Result<Self> {
        let dr = r_max / (resolution - 1) as f64;
        Self::new(dim, (0..resolution).map(|i| i as f64 * dr).collect())
    }

    fn mass(&self, u: &[f64], r: f64) -> f64 {
        exact_sum(u.iter().zip(&self.node_w).map(|(v, w)| w * v.abs().powf(r)))
    }

    fn grad_mass(&self, u: &[f64], p: f64) -> f64 {
        let inv = 1.0 / self.dr;
        exact_sum(
            u.windows(2)
                .zip(&self.edge_w)
                .map(|(pair, w)| w * ((pair[1] - pair[0]) * inv).abs().powf(p)),
        )
    }

    fn functional(&self, u: &[f64], par: &GnsParams) -> f64 {
        self.grad_mass(u, par.p) + self.mass(u, par.s)
    }

    /// Euclidean gradients of `F` and of the `q`-mass.
    fn gradients(&self, u: &[f64], par: &GnsParams, g_f: &mut [f64], g_c: &mut [f64]) {
        let inv = 1.0 / self.dr;
        for i in 0..u.len() {
            let v = u[i].abs();
            let sign = if u[i] > 0.0 {
                1.0
            } else if u[i] < 0.0 {
                -1.0
            } else {
                0.0
            };
            g_f[i] = self.node_w[i] * par.s * v.powf(par.s - 1.0) * sign;
            g_c[i] = self.node_w[i] * par.q * v.powf(par.q - 1.0) * sign;
        }
        for (i, w) in self.edge_w.iter().enumerate() {
            let d = (u[i + 1] - u[i]) * inv;
            let flux = w * par.p * d.abs().powf(par.p - 1.0) * d.signum() * inv;
            g_f[i + 1] += flux;
            g_f[i] -= flux;
        }
    }

    /// Solves `(M + K) x = b` with `M` the lumped node mass and `K` the edge stiffness.
    fn sobolev_solve(&self, b: &[f64], out: &mut [f64]) {
        let n = b.len();
        let inv2 = 1.0 / (self.dr * self.dr);
        let mut diag: Vec<f64> = self.node_w.clone();
        let mut off = vec![0.0; n - 1];
        for (i, w) in self.edge_w.iter().enumerate() {
            let k = w * inv2;
            diag[i] += k;
            diag[i + 1] += k;
            off[i] = -k;
        }
        // Thomas algorithm
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
        d[0] = b[0] / diag[0];
        for i in 1..n {
            let denom = diag[i] - off[i - 1] * c[i - 1];
            if i < n - 1 {
                c[i] = off[i] / denom;
            }
            d[i] = (b[i] - off[i - 1] * d[i - 1]) / denom;
        }
        out[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = d[i] - c[i] * out[i + 1];
        }
    }

    /// Monotone projection, clip at zero, rescale to `q`-mass `target`.
    fn retract(&self, u: &mut Vec<f64>, q: f64, target: f64) -> bool {
        let mut proj = isotonic_nonincreasing(u, &self.node_w);
        proj.iter_mut().for_each(|v| *v = v.max(0.0));
        let m = self.mass(&proj, q);
        if !(m > 0.0 && m.is_finite()) {
            return false;
        }
        let scale = (target / m).powf(1.0 / q);
        proj.iter_mut().for_each(|v| *v *= scale);
        *u = proj;
        true
    }

    fn tail_fraction(&self, u: &[f64], q: f64) -> f64 {
        let total = self.mass(u, q);
        let start = (self.radii.len() * 9) / 10;
        let tail = exact_sum((start..u.len()).map(|i| self.node_w[i] * u[i].abs().powf(q)));
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}

/// Nonincreasing, nonnegative radial profile on uniformly spaced radii from 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub dim: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub q: f64,
    /// `(n ω_n ∫ |v|^q r^{n−1} dr)^{1/q}` on the shell quadrature.
    pub q_norm: f64,
}

impl RadialProfile {
    pub fn new(dim: usize, radii: Vec<f64>, values: Vec<f64>, q: f64) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::Shape("radii and values lengths differ".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter("profile values must be finite and nonnegative".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Parameter("profile values must be nonincreasing".into()));
        }
        let grid = RadialGrid::new(dim, radii)?;
        let q_norm = grid.mass(&values, q).powf(1.0 / q);
        if !(q_norm > 0.0) {
            return Err(Error::Degenerate("profile has zero q-norm".into()));
        }
        Ok(RadialProfile { dim, radii: grid.radii, values, q, q_norm })
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Linear interpolation in `r`; zero past the last radius.
    pub fn value_at(&self, r: f64) -> f64 {
        let dr = self.radii[1];
        let pos = r / dr;
        if !(pos >= 0.0) {
            return self.values[0];
        }
        let i = pos.floor() as usize;
        let last = self.values.len() - 1;
        if i >= last {
            return if i == last && pos == last as f64 { self.values[last] } else { 0.0 };
        }
        let f = pos - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Recomputes `‖v‖_q` from radii and values.
    pub fn recompute_q_norm(&self) -> f64 {
        RadialGrid::new(self.dim, self.radii.clone())
            .map(|g| g.mass(&self.values, self.q).powf(1.0 / self.q))
            .unwrap_or(f64::NAN)
    }

    /// Radius at which the profile first drops to half its peak.
    pub fn half_max_radius(&self) -> f64 {
        let half = 0.5 * self.values[0];
        for i in 1..self.values.len() {
            if self.values[i] <= half {
                let (a, b) = (self.values[i - 1], self.values[i]);
                let f = if a > b { (a - half) / (a - b) } else { 0.0 };
                return self.radii[i - 1] + f * (self.radii[i] - self.radii[i - 1]);
            }
        }
        self.r_max()
    }

    /// Masses `(∫|∇v|^p, ∫|v|^s, ∫|v|^q)` on the shell quadrature.
    pub fn masses(&self, params: &GnsParams) -> (f64, f64, f64) {
        let g = RadialGrid::new(self.dim, self.radii.clone()).expect("profile radii validated");
        (g.grad_mass(&self.values, params.p), g.mass(&self.values, params.s), g.mass(&self.values, params.q))
    }

    /// Scale-invariant GNS quotient `G(v)/‖v‖_q` on the radial discretization.
    pub fn gns_quotient(&self, params: &GnsParams) -> f64 {
        let (a, b, c) = self.masses(params);
        params.g_from_masses(a, b) / c.powf(1.0 / params.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialConfig {
    pub resolution: usize,
    pub r_max: f64,
    /// Maximum number of descent iterations.
    pub budget: usize,
    pub seed: u64,
    /// Target `∫|u|^q`.
    pub mass: f64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig {
            resolution: 2048,
            r_max: 20.0,
            budget: 20_000,
            seed: 0,
            mass: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub profile: RadialProfile,
    /// `(F_min/η₀)^{1/k}`, valid when `mass = 1`.
    pub g_est: f64,
    /// `G(v)/‖v‖_q` evaluated directly on the profile.
    pub g_direct: f64,
    pub f_min: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Line search failed before the convergence test fired.
    pub stagnated: bool,
    pub tail_fraction: f64,
    /// `F` after every accepted step, starting with the initial iterate.
    pub f_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projected descent for `inf {F(u) : ∫|u|^q = mass}` over radial nonincreasing `u`.
pub fn minimize_radial(params: &GnsParams, cfg: &RadialConfig) -> Result<RadialSolution> {
    if cfg.resolution < 256 {
        return Err(Error::Parameter(format!("radial resolution {} below 256", cfg.resolution)));
    }
    if !(cfg.r_max.is_finite() && cfg.r_max > 0.0) {
        return Err(Error::Parameter("R_max must be positive".into()));
    }
    if !(cfg.mass.is_finite() && cfg.mass > 0.0) {
        return Err(Error::Parameter(format!("constraint mass must be positive, got {}", cfg.mass)));
    }
    let grid = RadialGrid::uniform(params.n, cfg.resolution, cfg.r_max)?;
    let n = cfg.resolution;

    let width = if cfg.seed == 0 {
        1.0
    } else {
        ChaCha8Rng::seed_from_u64(cfg.seed).gen_range(0.7..1.4)
    };
    let mut u: Vec<f64> = grid.radii.iter().map(|r| (-(r / width).powi(2)).exp()).collect();
    if !grid.retract(&mut u, params.q, cfg.mass) {
        return Err(Error::Numerical("initial profile has no mass".into()));
    }

    let mut f = grid.functional(&u, params);
    let mut history = vec![f];
    let (mut g_f, mut g_c) = (vec![0.0; n], vec![0.0; n]);
    let (mut d_f, mut d_c) = (vec![0.0; n], vec![0.0; n]);
    // preconditioned projected gradient, and the search direction built from it
    let mut pg = vec![0.0; n];
    let mut pg_prev = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut gnorm_prev = 0.0;
    let mut step = 1.0;
    let mut converged = false;
    let mut stagnated = false;
    let mut iterations = 0;

    while iterations < cfg.budget {
        iterations += 1;
        grid.gradients(&u, params, &mut g_f, &mut g_c);
        grid.sobolev_solve(&g_f, &mut d_f);
        grid.sobolev_solve(&g_c, &mut d_c);
        let mu = dot(&g_c, &d_f) / dot(&g_c, &d_c);
        for i in 0..n {
            pg[i] = d_f[i] - mu * d_c[i];
        }
        let gnorm = dot(&g_f, &pg);
        if !(gnorm > 1e-30 * f) {
            converged = true;
            break;
        }
        // Polak-Ribiere+ in the H1 metric, restarted whenever it stops being a descent direction
        let beta = if gnorm_prev > 0.0 {
            let num: f64 = g_f.iter().zip(pg.iter().zip(&pg_prev)).map(|(g, (a, b))| g * (a - b)).sum();
            (num / gnorm_prev).max(0.0)
        } else {
            0.0
        };
        for i in 0..n {
            dir[i] = pg[i] + beta * dir[i];
        }
        let mut slope = dot(&g_f, &dir);
        if !(slope > 0.0) {
            dir.copy_from_slice(&pg);
            slope = gnorm;
        }
        pg_prev.copy_from_slice(&pg);
        gnorm_prev = gnorm;

        let trial = |t: f64| -> Option<(Vec<f64>, f64)> {
            let mut cand: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - t * b).collect();
            if grid.retract(&mut cand, params.q, cfg.mass) {
                let fc = grid.functional(&cand, params);
                Some((cand, fc))
            } else {
                None
            }
        };
        let mut accepted = None;
        let mut t = step;
        for _ in 0..80 {
            if let Some((cand, fc)) = trial(t) {
                if fc <= f - 1e-4 * t * slope {
                    accepted = Some((cand, fc, t));
                    break;
                }
            }
            t *= 0.5;
        }
        // expand while it keeps paying off, then refine with a parabola through the bracket
        if let Some((_, f_acc, t_acc)) = accepted.as_ref().map(|(c, fc, t)| (c.len(), *fc, *t)) {
            let (mut t_best, mut f_best) = (t_acc, f_acc);
            let (mut t_lo, mut f_lo) = (0.0, f);
            let mut upper = None;
            for _ in 0..20 {
                match trial(t_best * 2.0) {
                    Some((cand, fc)) if fc < f_best => {
                        t_lo = t_best;
                        f_lo = f_best;
                        t_best *= 2.0;
                        f_best = fc;
                        accepted = Some((cand, fc, t_best));
                    }
                    Some((_, fc)) => {
                        upper = Some((t_best * 2.0, fc));
                        break;
                    }
                    None => break,
                }
            }
            if let Some((t_hi, f_hi)) = upper {
                let (a, b, c) = (t_lo, t_best, t_hi);
                let num = (b - a).powi(2) * (f_best - f_hi) - (b - c).powi(2) * (f_best - f_lo);
                let den = (b - a) * (f_best - f_hi) - (b - c) * (f_best - f_lo);
                if den.abs() > 0.0 {
                    let t_vertex = b - 0.5 * num / den;
                    if t_vertex > a && t_vertex < c && t_vertex != b {
                        if let Some((cand, fc)) = trial(t_vertex) {
                            if fc < f_best {
                                accepted = Some((cand, fc, t_vertex));
                            }
                        }
                    }
                }
            }
        }
        match accepted {
            Some((cand, fc, t)) => {
                u = cand;
                f = fc;
                history.push(f);
                step = t;
                let k = history.len();
                if k > STALL_WINDOW && history[k - 1 - STALL_WINDOW] - f <= STALL_RTOL * f {
                    converged = true;
                    break;
                }
            }
            None => {
                if beta > 0.0 {
                    // retry from steepest descent before giving up
                    gnorm_prev = 0.0;
                    dir.iter_mut().for_each(|d| *d = 0.0);
                    continue;
                }
                converged = gnorm <= 1e-20 * f;
                stagnated = !converged;
                break;
            }
        }
    }

    let tail_fraction = grid.tail_fraction(&u, params.q);
    if tail_fraction > TAIL_TOLERANCE {
        return Err(Error::Numerical(format!(
            "R_max too small: tail carries {tail_fraction:.3e} of the q-mass"
        )));
    }
    let profile = RadialProfile::new(params.n, grid.radii.clone(), u, params.q)?;
    let g_direct = profile.gns_quotient(params);
    Ok(RadialSolution {
        g_est: params.g_from_min_f(f / cfg.mass.powf(params.alpha_exp)),
        g_direct,
        f_min: f,
        iterations,
        converged,
        stagnated,
        tail_fraction,
        f_history: history,
        profile,
    })
}

/// `φ(m) = m^α φ(1)`.
pub fn phi_of_mass(m: f64, params: &GnsParams, base: f64) -> Result<f64> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Parameter(format!("mass must be positive, got {m}")));
    }
    Ok(m.powf(params.alpha_exp) * base)
}

/// Member `x ↦ a·v(b(x − x0))` of the optimizer orbit.
#[derive(Debug, Clone)]
pub struct OptimizerWitness {
    pub a: f64,
    pub b: f64,
    pub x0: Vec<f64>,
    pub profile: Arc<RadialProfile>,
}

impl OptimizerWitness {
    pub fn new(a: f64, b: f64, x0: Vec<f64>, profile: Arc<RadialProfile>) -> Result<Self> {
        if !(a.is_finite() && a != 0.0) {
            return Err(Error::Parameter("witness amplitude must be nonzero".into()));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Parameter("witness dilation must be positive".into()));
        }
        if x0.len() != profile.dim {
            return Err(Error::Parameter("witness center has wrong dimension".into()));
        }
        Ok(OptimizerWitness { a, b, x0, profile })
    }

    /// `‖v_{a,b,x0}‖_q` on the profile quadrature, `|a| b^{−n/q} ‖v‖_q`.
    pub fn q_norm(&self) -> f64 {
        self.a.abs() * self.b.powf(-(self.profile.dim as f64) / self.profile.q) * self.profile.q_norm
    }
}

/// Samples `a·v(b|x − x0|)` at the cell centers of `template`.
pub fn eval_witness(w: &OptimizerWitness, template: &GridFunction) -> Result<GridFunction> {
    if template.dim() != w.x0.len() {
        return Err(Error::Shape("witness and template dimensions differ".into()));
    }
    template.sample_like(|x| {
        let r2: f64 = x.iter().zip(&w.x0).map(|(a, c)| (a - c) * (a - c)).sum();
        w.a * w.profile.value_at(w.b * r2.sqrt())
    })
}

/// On-disk optimizer model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerModel {
    pub params: GnsParams,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(rename = "G_est")]
    pub g_est: f64,
    #[serde(rename = "F_min")]
    pub f_min: f64,
    pub resolution: usize,
    pub seed: u64,
}

impl OptimizerModel {
    pub fn from_solution(params: &GnsParams, sol: &RadialSolution, cfg: &RadialConfig) -> Self {
        OptimizerModel {
            params: *params,
            radii: sol.profile.radii.clone(),
            values: sol.profile.values.clone(),
            g_est: sol.g_est,
            f_min: sol.f_min,
            resolution: cfg.resolution,
            seed: cfg.seed,
        }
    }

    pub fn profile(&self) -> Result<RadialProfile> {
        RadialProfile::new(self.params.n, self.radii.clone(), self.values.clone(), self.params.q)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: OptimizerModel = serde_json::from_str(text)?;
        if model.radii.len() != model.values.len() {
            return Err(Error::Format("model radii and values lengths differ".into()));
        }
        Ok(model)
    }

    pub fn save<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
