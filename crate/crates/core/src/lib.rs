pub mod cases;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod policy;
pub mod quadrature;
pub mod recover;
pub mod semisep;
pub mod transform;
pub mod weyl;

pub use error::{Error, Result};
pub use policy::NumericalPolicy;
