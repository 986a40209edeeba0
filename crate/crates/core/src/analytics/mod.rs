//! Closed-form spectroscopy and calibration relations.

mod rates;
mod spectroscopy;
mod thermometry;

pub use rates::{
    calibrate_envelope_factor, readout_efficiency, scattering_rate, DetectionChain, Sideband,
};
pub use spectroscopy::{
    avoided_crossing, fit_linewidth_vs_power, linewidth_model, minimum_splitting,
    thermal_npsd, LinewidthFit,
};
pub use thermometry::{sideband_asymmetry, Thermometry};
