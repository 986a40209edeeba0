//! Open-system simulator for pulsed microwave-to-optical transduction through
//! a piezo-optomechanical resonator: a transmon swaps its excitation into a
//! mechanical mode, which is read out by red-sideband optical scattering and
//! single-photon counting.

pub mod analytics;
pub mod calibrate;
pub mod config;
pub mod density;
pub mod detection;
pub mod environment;
pub mod error;
pub mod fit;
pub mod integrate;
pub mod model;
pub mod operators;
pub mod params;
pub mod pipeline;
pub mod protocol;
pub mod relations;
pub mod rng;
pub mod sequence;
pub mod units;
pub mod warnings;

pub use error::{Error, Result};
