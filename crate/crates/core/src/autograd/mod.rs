//! Reverse-mode gradients through unrolled iterations and timesteps.
//!
//! The backward pass mirrors the forward cascade of [`crate::cell`] by hand.
//! [`finite_difference_gradient`] is the independent oracle used to check it.

mod backward;
mod clip;
mod fd;
pub mod gradcheck;
mod params;

pub use backward::{cell_step_backward, layer_backward, BackpropPlan, BlendMode, LayerGrads, StateGrad, StepGrads};
pub use clip::clip_gradients;
pub use fd::finite_difference_gradient;
pub use gradcheck::{run_gradcheck, GradcheckReport, GradcheckSpec};
pub use params::Parameters;
