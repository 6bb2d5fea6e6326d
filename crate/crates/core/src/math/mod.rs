//! Dense linear algebra and numeric helpers.
//!
//! Everything is `f64`. Matrix-vector products sum each row strictly
//! left-to-right so results are bit-stable across runs and builds.

mod activation;
mod linalg;
mod rng;
mod spectral;

pub use activation::{sigmoid, sigmoid_deriv, sigmoid_scalar, tanh_deriv, tanh_vec};
pub use linalg::{Matrix, Vector};
pub use rng::{Rng, RngState};
pub use spectral::{principal_singular_value, qr_decompose, uniform_init};

/// Default tolerance for [`principal_singular_value`].
pub const SPECTRAL_TOL: f64 = 1e-13;
/// Default iteration cap for [`principal_singular_value`].
pub const SPECTRAL_MAX_ITER: usize = 100_000;
