pub mod block;
pub mod error;
pub mod gate;
pub mod instances;
pub mod matrix;
pub mod numerics;
pub mod oracle;
pub mod regular;
pub mod roots;
pub mod singular;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
