//! Independent numerical checks of the closed-form pipeline.

pub mod forward;
pub mod identity;
pub mod nystrom;

pub use forward::{forward_solve, weyl_check, SampledPotential, WeylCheck};
pub use identity::{operator_identity_residual, IdentityResidual};
pub use nystrom::{KernelSource, NystromOperator};
