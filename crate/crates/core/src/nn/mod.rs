//! Small differentiable approximators over flat parameter vectors.

pub mod checkpoint;
pub mod dual_head;
pub mod encoder;
pub mod gaussian;
pub mod mlp;
pub mod params;
pub mod policy;

#[cfg(test)]
pub(crate) mod testing;

pub use dual_head::{DualHeadNet, HeadPass};
pub use encoder::{ContextEncoder, FactorPass};
pub use gaussian::GaussianFactor;
pub use mlp::{Mlp, Tape};
pub use params::{LayerShape, ParamVector};
pub use policy::{ActionSpace, GaussianPolicy, PolicySample};
