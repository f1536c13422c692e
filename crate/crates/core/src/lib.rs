//! Many-particle interference in multiport interferometers.

pub mod correlation;
pub mod error;
pub mod interference;
pub mod matrix_functions;
pub mod rng;
pub mod sampling;
pub mod suppression;
pub mod tensor;

pub use error::{Error, Result};
pub use interference::ParticleClass;
