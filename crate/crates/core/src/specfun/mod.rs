//! Special functions: gamma helpers, the Meijer G-function, and the
//! bivariate Meijer-G integral used by the ergodic capacity.

pub mod bivariate;
pub mod gamma;
pub mod meijer;

pub use bivariate::{bivariate_g, BivariateGSpec, BivariateValue};
pub use gamma::reciprocal_gamma;
pub use meijer::{
    leading_residues, meijer_g, meijer_g_contour, meijer_g_series, pole_structure, GMethod, GValue,
    MeijerGSpec, PoleStructure,
};
