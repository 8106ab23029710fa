//! Threshold methods for ordinal regression: surrogate losses, population
//! and empirical risk minimization, threshold tuning and evaluation.

pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod losses;
pub mod numeric;
pub mod probability;
pub mod risk;
pub mod theory;
pub mod thresholding;

pub use error::{Error, Result};
pub use losses::{BasePhi, Composition, SurrogateSpec, TaskLoss};
pub use probability::{BiasClass, BiasVector, ModelKind, Pmf};
