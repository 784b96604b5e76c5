//! Shuffle-Exchange SGD at desk scale: seed-synchronized worker grouping,
//! numerically exact ring allreduce collectives, a deterministic network
//! cost simulator, analytic communication cost formulas, and numerical
//! verification of the convergence bounds.

pub mod algorithms;
pub mod collectives;
pub mod config;
pub mod costmodel;
pub mod error;
pub mod models;
pub mod netsim;
pub mod rng;
pub mod shuffle;
pub mod theory;
pub mod vector;

pub use config::{NetworkConfig, TrainConfig, WorkerId};
pub use error::{Error, Result};
pub use rng::Rng64;
pub use vector::ParamVector;
