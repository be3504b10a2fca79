pub mod attacks;
pub mod cli;
pub mod data;
pub mod error;
pub mod estimators;
pub mod feasible;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod models;
pub mod rng;
pub mod samplers;
pub mod special;
pub mod targets;
pub mod weights;

#[cfg(test)]
#[path = "../tests/common/oracles.rs"]
#[allow(dead_code)]
mod test_oracles;

pub use data::Dataset;
pub use error::{Error, Result};
pub use feasible::FeasibleSet;
pub use model::{LogDensity, Model, ParamVector};
pub use rng::RngSeed;
pub use weights::{Budget, WeightVector};
