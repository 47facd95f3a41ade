//! Coalition formation for multi-service robot collectives.

pub mod error;
pub mod experiment;
pub mod grape;
pub mod model;
pub mod probgen;
pub mod reward;
pub mod runner;
pub mod sda;
pub mod simnet;
pub mod verify;

pub use error::{Error, Result};
