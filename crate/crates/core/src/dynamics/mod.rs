//! The within-timestep dynamical system.
//!
//! Holding the input and the previous cell state fixed turns the LSTM update
//! into an autonomous map `g` of the hidden state. When
//! `σ_j + ¼σ_i + ¼σ_f + ¼σ_o < 1` (principal singular values of the
//! recurrent matrices) and `|c0| < 1`, the Jacobian of `g` has spectral norm
//! below one everywhere, so every Liapunov exponent is negative. This module
//! provides the map, its analytic Jacobian, two Liapunov estimators and the
//! condition checker.

mod condition;
mod lyapunov;
mod map;
pub mod montecarlo;

pub use condition::{check_condition, spectral_rescale, ConditionReport};
pub use lyapunov::{lyapunov_direct, lyapunov_spectrum, LyapunovEstimate};
pub use map::{apply_map, iterate_map, jacobian_g, AutonomousMap, Trajectory};
pub use montecarlo::{analyze_map, params_draw, random_draw, random_params, DrawRecord, DrawSpec};
