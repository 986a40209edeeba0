//! Calibration of the phenomenological profile parameters against their anchors.

use crate::analytics::calibrate_envelope_factor;
use crate::config::DeviceProfile;
use crate::environment::{calibrate_heating, calibrate_injection, trapezoid, HeatingModel};
use crate::error::Result;
use crate::protocol::{readout_grid, readout_segment};
use crate::sequence::PulseSequence;

/// Measured per-pulse detection probability used as the readout anchor.
pub const P_D_ANCHOR: f64 = 8.8e-6;
/// Mean heated occupancy over the 38 ns window.
pub const HEATING_ANCHOR: f64 = 0.64;
/// QP recovery time of the untreated device.
pub const RECOVERY_ANCHOR: f64 = 8e-3;

struct Window {
    times: Vec<f64>,
    env: PulseSequence,
    per_photon: f64,
}

fn window(profile: &DeviceProfile) -> Result<Window> {
    let m = profile.device.mode();
    Ok(Window {
        times: readout_grid(profile.protocol.tau_ro_s),
        env: PulseSequence::new(vec![readout_segment(profile)], 0.0, f64::INFINITY)?,
        per_photon: 4.0 * m.g_om * m.g_om / profile.device.kappa_o(),
    })
}

/// ∫γ_om(t) dt over the counting window.
pub fn integrated_backaction(profile: &DeviceProfile) -> Result<f64> {
    let w = window(profile)?;
    let g: Vec<f64> = w.times.iter().map(|&t| w.per_photon * w.env.photons(t)).collect();
    Ok(trapezoid(&w.times, &g))
}

/// Envelope factor reproducing the p_d anchor with the ramped readout pulse.
pub fn envelope_factor(profile: &DeviceProfile) -> Result<f64> {
    calibrate_envelope_factor(P_D_ANCHOR, integrated_backaction(profile)?, &profile.chain)
}

/// Heating model reproducing the occupancy anchor with the profile n_p and onset.
pub fn heating(profile: &DeviceProfile) -> Result<HeatingModel> {
    let w = window(profile)?;
    let m = profile.device.mode();
    calibrate_heating(
        profile.heating.n_p,
        profile.heating.onset_delay,
        HEATING_ANCHOR,
        &|t| w.env.photons(t),
        &|t| w.per_photon * w.env.photons(t),
        &w.times,
        m.kappa_m_t1,
        profile.device.n_f(),
    )
}

/// Injected QP decay rate reproducing the recovery anchor.
pub fn qp_injection(profile: &DeviceProfile) -> f64 {
    let q = &profile.qp;
    calibrate_injection(q.tau_qp, q.rabi_window, q.threshold, RECOVERY_ANCHOR)
}

/// Profile with all three calibrated parameters recomputed.
pub fn calibrated(profile: &DeviceProfile) -> Result<DeviceProfile> {
    let mut p = profile.clone();
    p.chain.envelope_factor = envelope_factor(profile)?;
    p.heating = heating(profile)?;
    p.qp.injected_decay_rate = qp_injection(profile);
    if let Some(t) = p.qp_trapped.as_mut() {
        t.injected_decay_rate = p.qp.injected_decay_rate;
    }
    Ok(p)
}
