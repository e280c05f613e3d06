//! Joint replenishment of spare satellites shared by several constellations.

pub mod config;
pub mod cost;
pub mod error;
pub mod evaluate;
pub mod inplane;
pub mod numerics;
pub mod optimizer;
pub mod orbital;
pub mod parking;
pub mod registry;
pub mod report;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
