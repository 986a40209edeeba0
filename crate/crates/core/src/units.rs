//! Unit conventions.
//!
//! Everything inside the crate is angular (rad/s) and SI seconds. Config files
//! and the CLI speak ordinary frequency (Hz); conversion happens only here.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Hz → rad/s.
#[inline]
pub fn angular(hz: f64) -> f64 {
    TWO_PI * hz
}

/// rad/s → Hz.
#[inline]
pub fn hertz(rad_per_s: f64) -> f64 {
    rad_per_s / TWO_PI
}

#[inline]
pub fn ns(seconds: f64) -> f64 {
    seconds * 1e9
}

/// Rate (1/s) from a lifetime; an infinite lifetime means no loss.
#[inline]
pub fn rate_from_lifetime(t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        1.0 / t
    }
}
