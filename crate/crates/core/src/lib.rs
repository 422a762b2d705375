//! Numerical laboratory for quantitative stability of Gagliardo–Nirenberg–Sobolev
//! inequalities on grid-sampled functions.

pub mod asymmetry;
pub mod error;
pub mod gnscore;
pub mod gridfn;
pub mod numeric;
pub mod radialopt;
pub mod rearrange;
pub mod symmetrize;

pub use error::{Error, ParamsError, Result};
pub use gnscore::{DeficitReport, GnsParams};
pub use gridfn::{GridFunction, Hyperplane};
