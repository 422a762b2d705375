//! Exponent bookkeeping for the GNS inequality
//! `G‖u‖_q ≤ ‖∇u‖_p^θ ‖u‖_s^{1−θ}`, the functionals `F` and `G`, the deficit,
//! the scale normalization that minimizes `F` along the `τ_λ` orbit, and the
//! positive/negative part splitting bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamsError, Result};
use crate::gridfn::GridFunction;

/// Tolerance on the `θ` relation and on stored derived fields.
const EXPONENT_TOL: f64 = 1e-12;

/// The tuple `(n, p, s, q)` together with every exponent derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StoredParams")]
pub struct GnsParams {
    pub n: usize,
    pub p: f64,
    pub s: f64,
    pub q: f64,
    /// Sobolev exponent `np/(n−p)`.
    pub p_star: f64,
    /// Interpolation weight with `θ/p* + (1−θ)/s = 1/q`.
    pub theta: f64,
    /// Exponent of `λ` in `‖∇τ_λ u‖_p^p = λ^a ‖∇u‖_p^p`.
    pub a_exp: f64,
    /// Exponent of `λ` in `‖τ_λ u‖_s^s = λ^b ‖u‖_s^s`.
    pub b_exp: f64,
    /// Power with `min_λ F(τ_λ u) = η₀ G(u)^k`.
    pub k_exp: f64,
    /// Mass scaling exponent, `φ(m) = m^α φ(1)`.
    pub alpha_exp: f64,
    /// `min_λ (λ^a + λ^b)`.
    pub eta0: f64,
    /// `max(p, 2)`.
    pub z_exp: f64,
}

#[derive(Deserialize)]
struct StoredParams {
    n: usize,
    p: f64,
    s: f64,
    q: f64,
    p_star: f64,
    theta: f64,
    a_exp: f64,
    b_exp: f64,
    k_exp: f64,
    alpha_exp: f64,
    eta0: f64,
    z_exp: f64,
}

impl TryFrom<StoredParams> for GnsParams {
    type Error = ParamsError;

    fn try_from(raw: StoredParams) -> std::result::Result<Self, ParamsError> {
        let fresh = GnsParams::new(raw.n, raw.p, raw.s, raw.q)?;
        let pairs = [
            ("p_star", raw.p_star, fresh.p_star),
            ("theta", raw.theta, fresh.theta),
            ("a_exp", raw.a_exp, fresh.a_exp),
            ("b_exp", raw.b_exp, fresh.b_exp),
            ("k_exp", raw.k_exp, fresh.k_exp),
            ("alpha_exp", raw.alpha_exp, fresh.alpha_exp),
            ("eta0", raw.eta0, fresh.eta0),
            ("z_exp", raw.z_exp, fresh.z_exp),
        ];
        for (field, stored, expected) in pairs {
            if !((stored - expected).abs() <= EXPONENT_TOL * expected.abs().max(1.0)) {
                return Err(ParamsError::DerivedMismatch { field, stored, expected });
            }
        }
        Ok(fresh)
    }
}

impl GnsParams {
    /// Validates the tuple and computes every derived exponent.
    pub fn new(n: usize, p: f64, s: f64, q: f64) -> std::result::Result<Self, ParamsError> {
        if !p.is_finite() {
            return Err(ParamsError::NonFinite("p"));
        }
        if !s.is_finite() {
            return Err(ParamsError::NonFinite("s"));
        }
        if !q.is_finite() {
            return Err(ParamsError::NonFinite("q"));
        }
        if n < 2 {
            return Err(ParamsError::DimensionTooSmall(n));
        }
        let nf = n as f64;
        if p <= 1.0 {
            return Err(ParamsError::PNotAboveOne(p));
        }
        if p >= nf {
            return Err(ParamsError::PNotBelowDimension { p, n });
        }
        if s < 1.0 {
            return Err(ParamsError::SBelowOne(s));
        }
        if s >= q {
            return Err(ParamsError::SNotBelowQ { s, q });
        }
        let p_star = nf * p / (nf - p);
        if q >= p_star {
            return Err(ParamsError::QNotBelowCritical { q, p_star });
        }
        let theta = (1.0 / s - 1.0 / q) / (1.0 / s - 1.0 / p_star);
        let a_exp = -nf + p + nf * p / q;
        let b_exp = -nf + nf * s / q;
        let num = nf * p + p * s - nf * s;
        let den = nf * p + p * q - nf * s;
        let alpha_exp = num / den;
        let k_exp = q * alpha_exp;
        let eta0 = eta0_from_exponents(a_exp, b_exp);
        Ok(GnsParams {
            n,
            p,
            s,
            q,
            p_star,
            theta,
            a_exp,
            b_exp,
            k_exp,
            alpha_exp,
            eta0,
            z_exp: p.max(2.0),
        })
    }

    /// Parses `"n,p,s,q"`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parameter(format!("expected n,p,s,q but got {text:?}")));
        }
        let n: usize = parts[0]
            .parse()
            .map_err(|_| Error::Parameter(format!("bad dimension {:?}", parts[0])))?;
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Parameter(format!("bad exponent {s:?}"))) };
        Ok(GnsParams::new(n, num(parts[1])?, num(parts[2])?, num(parts[3])?)?)
    }

    /// Residual of `θ/p* + (1−θ)/s − 1/q`.
    pub fn theta_residual(&self) -> f64 {
        self.theta / self.p_star + (1.0 - self.theta) / self.s - 1.0 / self.q
    }

    /// `λ_* = (−b/a)^{1/(a−b)}`, the minimizer of `λ^a + λ^b`.
    pub fn lambda_star(&self) -> f64 {
        (-self.b_exp / self.a_exp).powf(1.0 / (self.a_exp - self.b_exp))
    }

    /// `f(λ) = λ^a A + λ^b B`, i.e. `F(τ_λ u)` from the masses of `u`.
    pub fn scaled_f(&self, lambda: f64, grad_mass: f64, s_mass: f64) -> f64 {
        lambda.powf(self.a_exp) * grad_mass + lambda.powf(self.b_exp) * s_mass
    }

    /// Minimizing scale `λ_m = λ_* (B/A)^{1/(a−b)}`.
    pub fn optimal_lambda(&self, grad_mass: f64, s_mass: f64) -> f64 {
        self.lambda_star() * (s_mass / grad_mass).powf(1.0 / (self.a_exp - self.b_exp))
    }

    /// `G` from the masses `A = ∫|∇u|^p`, `B = ∫|u|^s`.
    pub fn g_from_masses(&self, grad_mass: f64, s_mass: f64) -> f64 {
        grad_mass.powf(self.theta / self.p) * s_mass.powf((1.0 - self.theta) / self.s)
    }

    /// `η₀ G^k`, the minimum of `F` along the `τ_λ` orbit.
    pub fn min_f_from_g(&self, g: f64) -> f64 {
        self.eta0 * g.powf(self.k_exp)
    }

    /// Inverse of [`min_f_from_g`](Self::min_f_from_g).
    pub fn g_from_min_f(&self, f_min: f64) -> f64 {
        (f_min / self.eta0).powf(1.0 / self.k_exp)
    }

    /// Positive/negative split profile `f(t) = (t^{k/q} + (1−t)^{k/q})^{1/k} − 1`.
    pub fn split_profile(&self, t: f64) -> f64 {
        split_profile(t, self.k_exp, self.q)
    }

    /// Largest value the asymmetry can take.
    pub fn asymmetry_ceiling(&self) -> f64 {
        2f64.powf(1f64.max(self.q - 1.0))
    }
}

fn eta0_from_exponents(a: f64, b: f64) -> f64 {
    let lam = (-b / a).powf(1.0 / (a - b));
    lam.powf(a) + lam.powf(b)
}

pub fn make_params(n: usize, p: f64, s: f64, q: f64) -> Result<GnsParams> {
    Ok(GnsParams::new(n, p, s, q)?)
}

pub fn eta0_of(params: &GnsParams) -> f64 {
    params.eta0
}

pub fn split_profile(t: f64, kappa: f64, q: f64) -> f64 {
    let e = kappa / q;
    (t.powf(e) + (1.0 - t).powf(e)).powf(1.0 / kappa) - 1.0
}

/// `G(u) = ‖∇u‖_p^θ ‖u‖_s^{1−θ}`.
pub fn functional_g(u: &GridFunction, params: &GnsParams) -> Result<f64> {
    let a = u.grad_p_mass(params.p)?;
    let b = u.lr_mass(params.s);
    Ok(params.g_from_masses(a, b))
}

/// `F(u) = ∫|∇u|^p + ∫|u|^s`.
pub fn functional_f(u: &GridFunction, params: &GnsParams) -> Result<f64> {
    Ok(u.grad_p_mass(params.p)? + u.lr_mass(params.s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub grad_p: f64,
    pub norm_s: f64,
    pub norm_q: f64,
    pub g_value: f64,
    pub delta: f64,
    /// Share of the `q`-mass sitting in the outermost cell layer.
    pub boundary_mass_fraction: f64,
}

/// `δ(u) = G(u) / (G_const ‖u‖_q) − 1`.
pub fn deficit(u: &GridFunction, params: &GnsParams, g_const: f64) -> Result<DeficitReport> {
    if !(g_const.is_finite() && g_const > 0.0) {
        return Err(Error::Parameter(format!("reference constant must be positive, got {g_const}")));
    }
    let norm_q = u.lr_norm(params.q)?;
    if norm_q == 0.0 {
        return Err(Error::Domain("deficit of a function with zero q-norm".into()));
    }
    let grad_p = u.grad_lp_norm(params.p)?;
    let norm_s = u.lr_norm(params.s)?;
    let g_value = grad_p.powf(params.theta) * norm_s.powf(1.0 - params.theta);
    Ok(DeficitReport {
        grad_p,
        norm_s,
        norm_q,
        g_value,
        delta: g_value / (g_const * norm_q) - 1.0,
        boundary_mass_fraction: u.boundary_mass_fraction(params.q),
    })
}

/// Rescales `u` by the `λ_m` that minimizes `F(τ_λ u)`, centered at the origin.
pub fn normalize_scale(u: &GridFunction, params: &GnsParams) -> Result<(f64, GridFunction)> {
    let a = u.grad_p_mass(params.p)?;
    let b = u.lr_mass(params.s);
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Degenerate(format!(
            "scale normalization needs positive gradient and s-masses (got {a}, {b})"
        )));
    }
    let lambda = params.optimal_lambda(a, b);
    let origin = vec![0.0; u.dim()];
    Ok((lambda, u.rescale(lambda, &origin, params.q)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignSplit {
    /// `∫(u⁺)^q`.
    pub t: f64,
    pub f_value: f64,
    pub delta: f64,
}

/// Splitting bound for sign-changing `u` with `‖u‖_q = 1`: the continuum
/// theory guarantees `f(t) ≤ δ(u)`.
pub fn sign_split_bound(u: &GridFunction, params: &GnsParams, g_const: f64) -> Result<SignSplit> {
    if !(u.min_value() < 0.0 && u.max_value() > 0.0) {
        return Err(Error::Precondition("function does not change sign".into()));
    }
    let norm = u.lr_norm(params.q)?;
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("expected unit q-norm, got {norm}")));
    }
    let t = u.positive_part().lr_mass(params.q) / u.lr_mass(params.q);
    let delta = deficit(u, params, g_const)?.delta;
    Ok(SignSplit {
        t,
        f_value: params.split_profile(t),
        delta,
    })
}
