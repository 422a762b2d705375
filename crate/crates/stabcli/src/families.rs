//! Fixed perturbation families for `scan`.
//!
//! `v` is the embedded optimizer `v(x) = φ(|x|)` and `r` its half-maximum
//! radius. Every family adds `ε·w` to `v` and renormalizes in `L^q`:
//!
//! | family        | w(x)                               |
//! |---------------|------------------------------------|
//! | `radial-bump` | `exp(-((|x| - 2r) / r)^2)`         |
//! | `translate`   | `v(x - r e_1) - v(x)`              |
//! | `dilate`      | `v(x / 1.5) - v(x)`                |
//! | `two-bump`    | `v(x - 3r e_1)`                    |
//! | `sign-flip`   | `-v(x - 3r e_1)`                   |

use std::fmt;
use std::str::FromStr;

use gnslab::radialopt::RadialProfile;
use gnslab::{GridFunction, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    RadialBump,
    Translate,
    Dilate,
    TwoBump,
    SignFlip,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::RadialBump, Family::Translate, Family::Dilate, Family::TwoBump, Family::SignFlip];

    pub fn name(&self) -> &'static str {
        match self {
            Family::RadialBump => "radial-bump",
            Family::Translate => "translate",
            Family::Dilate => "dilate",
            Family::TwoBump => "two-bump",
            Family::SignFlip => "sign-flip",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown family `{s}` (expected one of radial-bump, translate, dilate, two-bump, sign-flip)"))
    }
}

fn radius(x: &[f64], shift0: f64, dilation: f64) -> f64 {
    let mut r2 = 0.0;
    for (k, &xk) in x.iter().enumerate() {
        let y = if k == 0 { xk - shift0 } else { xk } / dilation;
        r2 += y * y;
    }
    r2.sqrt()
}

/// Samples `v = φ(|x|)` on the geometry of `template`.
pub fn embedded_optimizer(profile: &RadialProfile, template: &GridFunction) -> Result<GridFunction> {
    template.sample_like(|x| profile.value_at(radius(x, 0.0, 1.0)))
}

/// Samples the direction `w` of `family` on the geometry of `template`.
pub fn perturbation(family: Family, profile: &RadialProfile, template: &GridFunction) -> Result<GridFunction> {
    let r = profile.half_max_radius();
    let phi = |x: &[f64], shift: f64, dil: f64| profile.value_at(radius(x, shift, dil));
    match family {
        Family::RadialBump => template.sample_like(|x| {
            let t = (radius(x, 0.0, 1.0) - 2.0 * r) / r;
            (-t * t).exp()
        }),
        Family::Translate => template.sample_like(|x| phi(x, r, 1.0) - phi(x, 0.0, 1.0)),
        Family::Dilate => template.sample_like(|x| phi(x, 0.0, 1.5) - phi(x, 0.0, 1.0)),
        Family::TwoBump => template.sample_like(|x| phi(x, 3.0 * r, 1.0)),
        Family::SignFlip => template.sample_like(|x| -phi(x, 3.0 * r, 1.0)),
    }
}

/// Default box half-width: five half-maximum radii, rounded up to a multiple of 1/2.
pub fn default_half_width(profile: &RadialProfile) -> f64 {
    (10.0 * profile.half_max_radius()).ceil() / 2.0
}
