//! The iterative LSTM cell.
//!
//! Per timestep the input-dependent constants `C_φ = W_in_φ·x + b_φ` are
//! computed once. The gate cascade
//!
//! ```text
//! j = tanh(W_rec_j·h + C_j)
//! i = σ(W_rec_i·h + C_i)
//! f = σ(W_rec_f·h + C_f)
//! c = f ⊙ c0 + i ⊙ j
//! o = σ(W_rec_o·h + C_o)
//! h̃ = o ⊙ tanh(c)
//! ```
//!
//! is then re-evaluated with `c0` fixed to the previous cell state, blending
//! each candidate `h̃` into the running hidden state with the iteration gate
//! `p`. The layer output is `y = h + x` when the residual connection is on.

mod params;
mod step;
mod trace;

pub use params::{CellParams, Gate, IterationGateParams};
pub use step::{
    cell_iteration, cell_step, iteration_gate, layer_forward, precompute_constants, CellState, IterationConfig,
    IterationMode, IterationOutputs, LayerOutput, StepOutput,
};
pub use trace::{IterationRecord, IterationTrace};
