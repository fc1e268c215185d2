//! Context inference: latent estimation from recent transitions, encoder and
//! potential training, and cost shaping.

pub mod context;
pub mod encoder_update;
pub mod potential;
pub mod shaping;

pub use context::{infer_context, ContextMode, ContextWindow, Inference};
pub use encoder_update::{encoder_gradient, encoder_update, EncoderGradient};
pub use potential::{potential_update, value_target};
pub use shaping::{potentials, reshape_costs, ReshapedCost};
