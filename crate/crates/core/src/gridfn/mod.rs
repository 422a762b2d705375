//! Cell-centered samples of a real function on a uniform box centered at the origin.
//!
//! Every axis carries an even number of cells, so each coordinate hyperplane
//! `{x_k = 0}` lies between two cell layers and reflecting across it is a pure
//! permutation of cells. Integrals use the midpoint rule; gradients use central
//! differences in the interior and one-sided differences on the outermost layer.

mod io;

pub use io::{read_gfn, write_gfn};

use crate::error::{Error, Result};
use crate::numeric::{abs_pow, exact_sum};

/// Reflection hyperplane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hyperplane {
    /// `{x_axis = offset}`.
    Axis { axis: usize, offset: f64 },
    /// `{x_i = sign * x_j}` with `sign` in `{+1, -1}`.
    Diagonal { i: usize, j: usize, sign: i8 },
}

impl Hyperplane {
    pub fn axis(axis: usize, offset: f64) -> Self {
        Hyperplane::Axis { axis, offset }
    }

    pub fn diagonal(i: usize, j: usize, sign: i8) -> Self {
        Hyperplane::Diagonal { i, j, sign }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            Hyperplane::Axis { axis, offset } => {
                if axis >= dim {
                    return Err(Error::Parameter(format!("axis {axis} out of range for dim {dim}")));
                }
                if !offset.is_finite() {
                    return Err(Error::Parameter("hyperplane offset must be finite".into()));
                }
            }
            Hyperplane::Diagonal { i, j, sign } => {
                if dim < 2 || i == j || i >= dim || j >= dim {
                    return Err(Error::Parameter(format!(
                        "diagonal hyperplane ({i},{j}) invalid for dim {dim}"
                    )));
                }
                if sign != 1 && sign != -1 {
                    return Err(Error::Parameter(format!("diagonal sign {sign} must be +1 or -1")));
                }
            }
        }
        Ok(())
    }

    /// Mirror image of a point.
    pub fn apply(&self, x: &mut [f64]) {
        match *self {
            Hyperplane::Axis { axis, offset } => x[axis] = 2.0 * offset - x[axis],
            Hyperplane::Diagonal { i, j, sign } => {
                let s = sign as f64;
                let (xi, xj) = (x[i], x[j]);
                x[i] = s * xj;
                x[j] = s * xi;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::check_geometry(&shape, &spacing)?;
        let count: usize = shape.iter().product();
        if count != values.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {count} cells but {} values were given",
                shape,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite value at cell {pos}")));
        }
        Ok(GridFunction { shape, spacing, values })
    }

    pub fn zeros(shape: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        let count = shape.iter().product();
        Self::new(shape, spacing, vec![0.0; count])
    }

    /// Cubic box `[-half_width, half_width]^dim` with `cells` cells per axis.
    pub fn cube(dim: usize, cells: usize, half_width: f64) -> Result<Self> {
        let h = 2.0 * half_width / cells as f64;
        Self::zeros(vec![cells; dim], vec![h; dim])
    }

    /// Samples `f` at every cell center of the given geometry.
    pub fn from_fn<F>(shape: Vec<usize>, spacing: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut g = Self::zeros(shape, spacing)?;
        let mut x = vec![0.0; g.dim()];
        for idx in 0..g.values.len() {
            g.center_into(idx, &mut x);
            g.values[idx] = f(&x);
        }
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("sampled function produced non-finite values".into()));
        }
        Ok(g)
    }

    /// Same geometry as `self`, values from `f`.
    pub fn sample_like<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        Self::from_fn(self.shape.clone(), self.spacing.clone(), f)
    }

    fn check_geometry(shape: &[usize], spacing: &[f64]) -> Result<()> {
        if shape.is_empty() {
            return Err(Error::Shape("grid needs at least one axis".into()));
        }
        if shape.len() != spacing.len() {
            return Err(Error::Shape(format!(
                "shape has {} axes but spacing has {}",
                shape.len(),
                spacing.len()
            )));
        }
        for (k, (&n, &h)) in shape.iter().zip(spacing).enumerate() {
            if n == 0 || n % 2 != 0 {
                return Err(Error::Shape(format!("axis {k} has {n} cells; need a positive even count")));
            }
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Shape(format!("axis {k} spacing {h} must be positive and finite")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn domain_volume(&self) -> f64 {
        self.cell_volume() * self.values.len() as f64
    }

    /// Half width of the box along `axis`.
    pub fn half_width(&self, axis: usize) -> f64 {
        0.5 * self.shape[axis] as f64 * self.spacing[axis]
    }

    pub fn same_geometry(&self, other: &GridFunction) -> bool {
        self.shape == other.shape && self.spacing == other.spacing
    }

    /// Replaces the values, keeping the geometry.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.shape.clone(), self.spacing.clone(), values)
    }

    pub(crate) fn with_values_unchecked(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        GridFunction {
            shape: self.shape.clone(),
            spacing: self.spacing.clone(),
            values,
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.with_values_unchecked(self.values.iter().map(|v| c * v).collect())
    }

    pub fn abs(&self) -> Self {
        self.with_values_unchecked(self.values.iter().map(|v| v.abs()).collect())
    }

    /// `self + c * other` on a shared geometry.
    pub fn add_scaled(&self, c: f64, other: &GridFunction) -> Result<Self> {
        if !self.same_geometry(other) {
            return Err(Error::Shape("grid geometries differ".into()));
        }
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect())
    }

    pub fn positive_part(&self) -> Self {
        self.with_values_unchecked(self.values.iter().map(|v| v.max(0.0)).collect())
    }

    pub fn negative_part(&self) -> Self {
        self.with_values_unchecked(self.values.iter().map(|v| (-v).max(0.0)).collect())
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for k in (0..self.dim().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.shape[k + 1];
        }
        strides
    }

    /// Multi-index of a flat cell index.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for k in (0..self.dim()).rev() {
            out[k] = idx % self.shape[k];
            idx /= self.shape[k];
        }
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Signed offset of index `i` from the axis center in cell units: `i + 1/2 - N/2`.
    #[inline]
    fn centered(i: usize, n: usize) -> f64 {
        i as f64 + 0.5 - 0.5 * n as f64
    }

    pub fn center_into(&self, idx: usize, x: &mut [f64]) {
        let mut rem = idx;
        for k in (0..self.dim()).rev() {
            let i = rem % self.shape[k];
            rem /= self.shape[k];
            x[k] = Self::centered(i, self.shape[k]) * self.spacing[k];
        }
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.center_into(idx, &mut x);
        x
    }

    /// `∫|u|^r`.
    pub fn lr_mass(&self, r: f64) -> f64 {
        exact_sum(self.values.iter().map(|&v| abs_pow(v, r))) * self.cell_volume()
    }

    /// Midpoint-rule `L^r` norm.
    pub fn lr_norm(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::Parameter(format!("L^r norm needs finite r >= 1, got {r}")));
        }
        Ok(self.lr_mass(r).powf(1.0 / r))
    }

    /// Euclidean magnitude of the discrete gradient at every cell.
    pub fn grad_magnitudes(&self) -> Result<Vec<f64>> {
        if let Some(k) = self.shape.iter().position(|&n| n < 3) {
            return Err(Error::Shape(format!("axis {k} needs at least 3 cells for a gradient")));
        }
        let strides = self.strides();
        let mut sq = vec![0.0; self.values.len()];
        for k in 0..self.dim() {
            let n = self.shape[k];
            let stride = strides[k];
            let h = self.spacing[k];
            let (c2, c1) = (0.5 / h, 1.0 / h);
            for (idx, acc) in sq.iter_mut().enumerate() {
                let i = (idx / stride) % n;
                let d = if i == 0 {
                    (self.values[idx + stride] - self.values[idx]) * c1
                } else if i == n - 1 {
                    (self.values[idx] - self.values[idx - stride]) * c1
                } else {
                    (self.values[idx + stride] - self.values[idx - stride]) * c2
                };
                *acc += d * d;
            }
        }
        Ok(sq.into_iter().map(f64::sqrt).collect())
    }

    /// `∫|∇u|^p` with the discrete gradient.
    pub fn grad_p_mass(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Parameter(format!("gradient norm needs p > 1, got {p}")));
        }
        let g = self.grad_magnitudes()?;
        Ok(exact_sum(g.iter().map(|&v| abs_pow(v, p))) * self.cell_volume())
    }

    /// Discrete `‖∇u‖_p`.
    pub fn grad_lp_norm(&self, p: f64) -> Result<f64> {
        Ok(self.grad_p_mass(p)?.powf(1.0 / p))
    }

    /// Multilinear interpolation at a point; zero outside the outermost cell centers
    /// (the grid is padded by a ring of zero ghost cells).
    pub fn sample(&self, x: &[f64]) -> f64 {
        let pos: Vec<f64> = (0..self.dim())
            .map(|k| x[k] / self.spacing[k] + 0.5 * self.shape[k] as f64 - 0.5)
            .collect();
        self.sample_index_space(&pos)
    }

    /// Multilinear interpolation at fractional cell indices.
    pub fn sample_index_space(&self, pos: &[f64]) -> f64 {
        let dim = self.dim();
        let mut base = [0isize; 8];
        let mut frac = [0.0f64; 8];
        debug_assert!(dim <= 8, "dimension above 8 not supported by the sampler");
        for k in 0..dim {
            let p = pos[k];
            if !(p > -1.0 && p < self.shape[k] as f64) {
                return 0.0;
            }
            let f = p.floor();
            base[k] = f as isize;
            frac[k] = p - f;
        }
        let strides = self.strides();
        let mut total = 0.0;
        'corner: for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for k in 0..dim {
                let bit = (corner >> k) & 1;
                let wk = if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                if wk == 0.0 {
                    continue 'corner;
                }
                let i = base[k] + bit as isize;
                if i < 0 || i >= self.shape[k] as isize {
                    continue 'corner;
                }
                w *= wk;
                flat += i as usize * strides[k];
            }
            total += w * self.values[flat];
        }
        total
    }

    /// `τ_λ u(x) = λ^{n/q} u(λ(x − x0))`, resampled onto the same grid.
    pub fn rescale(&self, lambda: f64, x0: &[f64], q: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Parameter(format!("rescale factor must be positive, got {lambda}")));
        }
        if x0.len() != self.dim() {
            return Err(Error::Parameter("rescale center has wrong dimension".into()));
        }
        for (k, &c) in x0.iter().enumerate() {
            if !c.is_finite() || c.abs() > self.half_width(k) {
                return Err(Error::Parameter(format!("rescale center x0[{k}] = {c} outside the domain")));
            }
        }
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::Parameter(format!("rescale exponent q must be positive, got {q}")));
        }
        let amp = lambda.powf(self.dim() as f64 / q);
        let shift: Vec<f64> = x0.iter().zip(&self.spacing).map(|(c, h)| c / h).collect();
        let mut multi = vec![0usize; self.dim()];
        let mut pos = vec![0.0; self.dim()];
        let values = (0..self.values.len())
            .map(|idx| {
                self.unravel(idx, &mut multi);
                for k in 0..self.dim() {
                    let n = self.shape[k];
                    pos[k] = lambda * (Self::centered(multi[k], n) - shift[k]) + 0.5 * n as f64 - 0.5;
                }
                amp * self.sample_index_space(&pos)
            })
            .collect();
        Ok(self.with_values_unchecked(values))
    }

    /// Whether reflecting across `h` maps cells onto cells.
    pub fn is_permutation_reflection(&self, h: &Hyperplane) -> bool {
        match *h {
            Hyperplane::Axis { axis, offset } => {
                let t = 2.0 * offset / self.spacing[axis];
                axis < self.dim() && (t - t.round()).abs() < 1e-9
            }
            Hyperplane::Diagonal { i, j, .. } => {
                i < self.dim()
                    && j < self.dim()
                    && self.shape[i] == self.shape[j]
                    && self.spacing[i] == self.spacing[j]
            }
        }
    }

    /// `u ∘ T_H`. Exact permutation whenever the hyperplane is grid-aligned;
    /// interpolated otherwise. Cells whose mirror image leaves the grid read zero.
    pub fn reflect(&self, h: &Hyperplane) -> Result<Self> {
        h.validate(self.dim())?;
        let strides = self.strides();
        let mut multi = vec![0usize; self.dim()];
        match *h {
            Hyperplane::Axis { axis, offset } => {
                let n = self.shape[axis] as isize;
                let t = 2.0 * offset / self.spacing[axis];
                if (t - t.round()).abs() < 1e-9 {
                    // i' = 2c/h - i - 1 + N
                    let shift = t.round() as isize + n - 1;
                    let values = (0..self.values.len())
                        .map(|idx| {
                            let i = ((idx / strides[axis]) % n as usize) as isize;
                            let j = shift - i;
                            if j < 0 || j >= n {
                                0.0
                            } else {
                                let delta = (j - i) * strides[axis] as isize;
                                self.values[(idx as isize + delta) as usize]
                            }
                        })
                        .collect();
                    Ok(self.with_values_unchecked(values))
                } else {
                    let mut pos = vec![0.0; self.dim()];
                    let values = (0..self.values.len())
                        .map(|idx| {
                            self.unravel(idx, &mut multi);
                            for k in 0..self.dim() {
                                pos[k] = multi[k] as f64;
                            }
                            pos[axis] = t + (n - 1) as f64 - multi[axis] as f64;
                            self.sample_index_space(&pos)
                        })
                        .collect();
                    Ok(self.with_values_unchecked(values))
                }
            }
            Hyperplane::Diagonal { i, j, sign } => {
                if !self.is_permutation_reflection(h) {
                    return Err(Error::Shape(format!(
                        "diagonal reflection needs equal cell count and spacing on axes {i} and {j}"
                    )));
                }
                let n = self.shape[i];
                let mut src = vec![0usize; self.dim()];
                let values = (0..self.values.len())
                    .map(|idx| {
                        self.unravel(idx, &mut multi);
                        src.copy_from_slice(&multi);
                        if sign > 0 {
                            src[i] = multi[j];
                            src[j] = multi[i];
                        } else {
                            src[i] = n - 1 - multi[j];
                            src[j] = n - 1 - multi[i];
                        }
                        self.values[self.ravel(&src)]
                    })
                    .collect();
                Ok(self.with_values_unchecked(values))
            }
        }
    }

    /// Shift by whole cells: `out[i] = u[i - shift]`, zero-filled.
    pub fn shift_cells(&self, shift: &[isize]) -> Self {
        let mut multi = vec![0usize; self.dim()];
        let mut src = vec![0usize; self.dim()];
        let values = (0..self.values.len())
            .map(|idx| {
                self.unravel(idx, &mut multi);
                for k in 0..self.dim() {
                    let s = multi[k] as isize - shift[k];
                    if s < 0 || s >= self.shape[k] as isize {
                        return 0.0;
                    }
                    src[k] = s as usize;
                }
                self.values[self.ravel(&src)]
            })
            .collect();
        self.with_values_unchecked(values)
    }

    /// Fraction of `∫|u|^r` carried by the outermost cell layer of the box.
    /// Large values signal that the function is truncated by the grid.
    pub fn boundary_mass_fraction(&self, r: f64) -> f64 {
        let total = self.lr_mass(r);
        if total == 0.0 {
            return 0.0;
        }
        let mut multi = vec![0usize; self.dim()];
        let mut edge = 0.0;
        for idx in 0..self.values.len() {
            self.unravel(idx, &mut multi);
            if multi.iter().zip(&self.shape).any(|(&i, &n)| i == 0 || i == n - 1) {
                edge += abs_pow(self.values[idx], r);
            }
        }
        edge * self.cell_volume() / total
    }

    /// `|u|^r`-weighted barycenter.
    pub fn barycenter(&self, r: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        let mut total = 0.0;
        let mut x = vec![0.0; self.dim()];
        for (idx, v) in self.values.iter().enumerate() {
            let w = abs_pow(*v, r);
            if w == 0.0 {
                continue;
            }
            self.center_into(idx, &mut x);
            total += w;
            for k in 0..self.dim() {
                acc[k] += w * x[k];
            }
        }
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        }
        acc
    }

    /// `∫|u - v|^r` on a shared geometry.
    pub fn distance_mass(&self, other: &GridFunction, r: f64) -> Result<f64> {
        if !self.same_geometry(other) {
            return Err(Error::Shape("grid geometries differ".into()));
        }
        let sum = exact_sum(self.values.iter().zip(&other.values).map(|(a, b)| abs_pow(a - b, r)));
        Ok(sum * self.cell_volume())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether `u ∘ T_H == u` bit-exactly.
    pub fn is_symmetric_under(&self, h: &Hyperplane) -> Result<bool> {
        Ok(self.reflect(h)?.values == self.values)
    }
}
