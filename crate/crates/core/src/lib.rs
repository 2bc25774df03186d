pub mod density;
pub mod error;
pub mod exec;
pub mod rng;
pub mod space;
pub mod stats;
pub mod symbols;

pub use error::{Error, Result};
pub mod peon;
pub mod quasitest;
pub mod realization;
pub mod sampler;
