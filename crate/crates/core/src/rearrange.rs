//! Spherical decreasing rearrangement on grids, the Pólya–Szegő deficit and
//! the symmetric-function bound comparing `u` with `u*`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::gnscore::GnsParams;
use crate::gridfn::{GridFunction, Hyperplane};

/// Cell volume of `{|u| > t}`.
pub fn distribution(u: &GridFunction, t: f64) -> f64 {
    let count = u.values().iter().filter(|v| v.abs() > t).count();
    count as f64 * u.cell_volume()
}

/// FNV-1a over the bit patterns of the descending-sorted `|values|`.
/// Equal multisets hash equally whatever their order.
pub fn value_checksum(values: &[f64]) -> u64 {
    let mut sorted: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in sorted {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Cell indices ordered by distance of the center from the origin, ties by index.
pub fn radial_cell_order(u: &GridFunction) -> Vec<usize> {
    let dim = u.dim();
    let mut multi = vec![0usize; dim];
    let mut order: Vec<usize> = (0..u.len()).collect();
    let uniform = u.spacing().iter().all(|&h| h == u.spacing()[0]);
    if uniform {
        // (2i + 1 − N)² summed over axes is exact and proportional to |x|²
        let keys: Vec<u64> = (0..u.len())
            .map(|idx| {
                u.unravel(idx, &mut multi);
                multi
                    .iter()
                    .zip(u.shape())
                    .map(|(&i, &n)| {
                        let d = (2 * i + 1) as i64 - n as i64;
                        (d * d) as u64
                    })
                    .sum()
            })
            .collect();
        order.sort_by_key(|&i| keys[i]);
    } else {
        let mut x = vec![0.0; dim];
        let keys: Vec<f64> = (0..u.len())
            .map(|idx| {
                u.center_into(idx, &mut x);
                x.iter().map(|v| v * v).sum()
            })
            .collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    }
    order
}

#[derive(Debug, Clone)]
pub struct Rearrangement {
    pub u_star: GridFunction,
    pub value_permutation_checksum: u64,
}

/// `u*`: the values of `|u|`, sorted descending, laid onto cells in order of
/// increasing radius. The value multiset is preserved exactly.
pub fn schwarz_rearrange(u: &GridFunction) -> Rearrangement {
    let mut sorted: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut values = vec![0.0; u.len()];
    for (slot, v) in radial_cell_order(u).into_iter().zip(sorted) {
        values[slot] = v;
    }
    let u_star = u.with_values_unchecked(values);
    let value_permutation_checksum = value_checksum(u_star.values());
    Rearrangement { u_star, value_permutation_checksum }
}

#[derive(Debug, Clone)]
pub struct RearrangeResult {
    pub u_star: GridFunction,
    pub value_permutation_checksum: u64,
    pub ps_deficit: f64,
}

/// Rearrangement together with its Pólya–Szegő deficit.
pub fn rearrange(u: &GridFunction, params: &GnsParams) -> Result<RearrangeResult> {
    let r = schwarz_rearrange(u);
    let ps = ps_deficit_against(u, &r.u_star, params)?;
    Ok(RearrangeResult { u_star: r.u_star, value_permutation_checksum: r.value_permutation_checksum, ps_deficit: ps })
}

/// `(‖∇u‖_p − ‖∇u*‖_p)/‖∇u*‖_p`.
pub fn ps_deficit(u: &GridFunction, params: &GnsParams) -> Result<f64> {
    let star = schwarz_rearrange(u).u_star;
    ps_deficit_against(u, &star, params)
}

fn ps_deficit_against(u: &GridFunction, star: &GridFunction, params: &GnsParams) -> Result<f64> {
    let gs = star.grad_lp_norm(params.p)?;
    if gs == 0.0 {
        return Err(Error::Degenerate("rearrangement has zero gradient norm".into()));
    }
    Ok((u.grad_lp_norm(params.p)? - gs) / gs)
}

/// Both sides of `∫|u − u*|^{p*} ≲ (∫u^{p*})^{p/n} (∫|∇u*|^p)^{(z−1)/z} (∫|∇u|^p − ∫|∇u*|^p)^{1/z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfmpGap {
    pub lhs: f64,
    pub rhs_core: f64,
    /// `∫|∇u|^p − ∫|∇u*|^p` before clamping.
    pub gradient_gap: f64,
    /// The discrete gradient gap came out negative and was clamped to 0.
    pub negative_gap: bool,
}

impl CfmpGap {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs_core
        }
    }
}

/// Requires `u ≥ 0` and exact symmetry under every coordinate reflection through 0.
pub fn cfmp_gap(u: &GridFunction, params: &GnsParams) -> Result<CfmpGap> {
    if u.min_value() < 0.0 {
        return Err(Error::Precondition("input must be nonnegative".into()));
    }
    for k in 0..u.dim() {
        let h = Hyperplane::axis(k, 0.0);
        if !u.is_permutation_reflection(&h) || !u.is_symmetric_under(&h)? {
            return Err(Error::Precondition(format!("input is not symmetric across x_{k} = 0")));
        }
    }
    let star = schwarz_rearrange(u).u_star;
    let ps = params.p_star;
    let lhs = u.distance_mass(&star, ps)?;
    let grad_u = u.grad_p_mass(params.p)?;
    let grad_star = star.grad_p_mass(params.p)?;
    let gradient_gap = grad_u - grad_star;
    let negative_gap = gradient_gap < 0.0;
    let z = params.z_exp;
    let rhs_core = u.lr_mass(ps).powf(params.p / params.n as f64)
        * grad_star.powf((z - 1.0) / z)
        * gradient_gap.max(0.0).powf(1.0 / z);
    Ok(CfmpGap { lhs, rhs_core, gradient_gap, negative_gap })
}

/// Largest upward step of `u*` along the radial cell order; 0 for a valid rearrangement.
pub fn radial_monotonicity_defect(u_star: &GridFunction) -> f64 {
    let order = radial_cell_order(u_star);
    let v = u_star.values();
    order
        .windows(2)
        .map(|w| v[w[1]] - v[w[0]])
        .fold(0.0, |acc, d| match d.partial_cmp(&acc) {
            Some(Ordering::Greater) => d,
            _ => acc,
        })
}
