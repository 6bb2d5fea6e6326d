//! Iterative LSTM cells and the tooling around them.
//!
//! An iterative cell re-applies the LSTM hidden-state update several times
//! within a single timestep while holding the input and the previous cell
//! state fixed. A scalar iteration gate weights each extra iteration and
//! decides when to stop, and the layer output adds a residual copy of the
//! input.
//!
//! The crate is organised bottom-up:
//!
//! * [`math`]: dense vectors/matrices, activations, seeded RNG, spectral norms.
//! * [`cell`]: the iterative cell forward pass and its per-timestep trace.
//! * [`dynamics`]: the frozen-input hidden-state map, its Jacobian, Liapunov
//!   exponent estimators and the spectral convergence condition.
//! * [`autograd`]: hand-written backpropagation through iterations and time,
//!   finite-difference checks and gradient clipping.
//! * [`lm`]: corpus handling, the stacked language model, training and
//!   checkpoints.

pub mod autograd;
pub mod cell;
pub mod dynamics;
mod error;
pub mod lm;
pub mod math;

pub use error::{Error, Result};
