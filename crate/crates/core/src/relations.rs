//! Closed-form single-number relations.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Transmon 0→1 frequency (Hz) in the asymptotic transmon limit,
/// `f = √(8 E_J |cos(πΦ/Φ0)| E_c) − E_c`, energies given as E/h in Hz.
pub fn transmon_frequency(e_j_hz: f64, e_c_hz: f64, flux_ratio: f64) -> Result<f64> {
    if !(e_j_hz > 0.0 && e_c_hz > 0.0) {
        return Err(Error::InvalidInput(format!(
            "E_J and E_c must be positive (got {e_j_hz}, {e_c_hz})"
        )));
    }
    let e_j_eff = e_j_hz * (PI * flux_ratio).cos().abs();
    let f = (8.0 * e_j_eff * e_c_hz).sqrt() - e_c_hz;
    if f <= 0.0 {
        return Err(Error::Domain(format!(
            "qubit frequency collapsed at flux ratio {flux_ratio}"
        )));
    }
    Ok(f)
}

/// Red-sideband back-action damping γ_om = 4 n_c g_om² / κ_o (all angular).
pub fn backaction_rate(n_c: f64, g_om: f64, kappa_o: f64) -> Result<f64> {
    if kappa_o == 0.0 {
        return Err(Error::Domain("division by zero optical linewidth".into()));
    }
    if n_c < 0.0 || g_om < 0.0 || kappa_o < 0.0 {
        return Err(Error::InvalidInput(format!(
            "back-action inputs must be non-negative (n_c={n_c}, g_om={g_om}, κ_o={kappa_o})"
        )));
    }
    Ok(4.0 * n_c * g_om * g_om / kappa_o)
}

/// Parametrically enhanced coupling G_om = √n_c · g_om.
pub fn enhanced_coupling(n_c: f64, g_om: f64) -> f64 {
    n_c.max(0.0).sqrt() * g_om
}

/// Multi-photon cooperativity C = 4 G² / (κ_o κ_m).
pub fn cooperativity(n_c: f64, g_om: f64, kappa_o: f64, kappa_m: f64) -> f64 {
    4.0 * n_c * g_om * g_om / (kappa_o * kappa_m)
}

/// Two-level dispersive AC-Stark shift δω = Ω_d² / (2 Δ_d).
pub fn stark_shift(drive_rabi: f64, drive_detuning: f64) -> f64 {
    drive_rabi * drive_rabi / (2.0 * drive_detuning)
}

/// Drive Rabi rate needed for a target Stark shift at the given drive detuning.
pub fn stark_drive_for_shift(shift: f64, drive_detuning: f64) -> Result<f64> {
    let sq = 2.0 * drive_detuning * shift;
    if sq < 0.0 {
        return Err(Error::Domain(
            "shift and drive detuning must have the same sign".into(),
        ));
    }
    Ok(sq.sqrt())
}

/// Intracavity photon number at a given input power, scaled linearly from the
/// calibration point (44 photons at 2 µW).
pub fn intracavity_photons(power_w: f64) -> f64 {
    const REF_PHOTONS: f64 = 44.0;
    const REF_POWER_W: f64 = 2e-6;
    REF_PHOTONS * power_w / REF_POWER_W
}

/// Frequency of the qubit-like dressed state in the single-excitation block
/// `[[Δ, g], [g, 0]]` (rotating frame of the mechanics). For Δ = 0 the upper
/// branch is returned.
pub fn dressed_qubit_detuning(bare_detuning: f64, g: f64) -> f64 {
    let half = 0.5 * bare_detuning;
    let split = (half * half + g * g).sqrt();
    if bare_detuning >= 0.0 {
        half + split
    } else {
        half - split
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{angular, hertz};
    use proptest::prelude::*;

    #[test]
    fn transmon_design_point() {
        let f = transmon_frequency(15.5e9, 292e6, 0.0).unwrap();
        assert!((f - 5.7253e9).abs() < 1e6, "f = {f}");
        assert!((f - 5.7e9).abs() / 5.7e9 < 0.01);
    }

    #[test]
    fn transmon_half_flux_collapses() {
        assert!(matches!(
            transmon_frequency(15.5e9, 292e6, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn transmon_quadrupled_josephson_energy() {
        let f = transmon_frequency(4.0 * 15.5e9, 292e6, 0.0).unwrap();
        let plasma = (8.0f64 * 4.0 * 15.5e9 * 292e6).sqrt();
        assert!((plasma - 12.035e9).abs() < 1e6);
        assert!((f - 11.743e9).abs() < 1e6);
    }

    #[test]
    fn backaction_device_point() {
        let g = backaction_rate(44.0, angular(420e3), angular(1.61e9)).unwrap();
        assert!((hertz(g) - 19.3e3).abs() < 50.0, "{}", hertz(g));
        let g4 = backaction_rate(176.0, angular(420e3), angular(1.61e9)).unwrap();
        assert!((hertz(g4) - 77.2e3).abs() < 100.0);
        assert_eq!(backaction_rate(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(backaction_rate(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn stark_calibration() {
        let omega = stark_drive_for_shift(angular(10e6), angular(50e6)).unwrap();
        assert!((hertz(omega) - 31.62e6).abs() < 0.01e6);
        assert!((stark_shift(omega, angular(50e6)) - angular(10e6)).abs() < 1e-3);
    }

    #[test]
    fn dressed_shift_is_dispersive_far_away() {
        let g = angular(2.24e6);
        let d = angular(-500e6);
        let shift = dressed_qubit_detuning(d, g) - d;
        assert!(shift < 0.0 && shift.abs() < g * g / d.abs());
        assert_eq!(dressed_qubit_detuning(0.0, g), g);
    }

    proptest! {
        #[test]
        fn backaction_linear_and_quadratic(n in 0.0f64..1e4, g in 1.0f64..1e7, k in 1e6f64..1e11, s in 0.1f64..10.0) {
            let base = backaction_rate(n, g, k).unwrap();
            let lin = backaction_rate(s * n, g, k).unwrap();
            let quad = backaction_rate(n, s * g, k).unwrap();
            prop_assert!((lin - s * base).abs() <= 1e-12 * lin.abs().max(1e-300));
            prop_assert!((quad - s * s * base).abs() <= 1e-12 * quad.abs().max(1e-300));
        }

        #[test]
        fn transmon_even_and_periodic(phi in -0.45f64..0.45, k in -3i32..3) {
            let f0 = transmon_frequency(15.5e9, 292e6, phi).unwrap();
            let f_neg = transmon_frequency(15.5e9, 292e6, -phi).unwrap();
            let f_per = transmon_frequency(15.5e9, 292e6, phi + k as f64).unwrap();
            prop_assert!((f0 - f_neg).abs() < 1e-3);
            prop_assert!((f0 - f_per).abs() < 1.0);
        }
    }
}
