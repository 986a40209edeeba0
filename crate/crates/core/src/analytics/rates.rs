use crate::error::{Error, Result};
use crate::params::DeviceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sideband {
    /// Anti-Stokes, ∝ n_m.
    Red,
    /// Stokes, ∝ n_m + 1.
    Blue,
}

/// Optical detection chain from the cavity to the single-photon detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionChain {
    /// Cavity-to-waveguide efficiency κ_e,o/κ_o.
    pub eta_kappa: f64,
    pub eta_cplr: f64,
    pub eta_tran: f64,
    pub eta_spd: f64,
    /// Measured system efficiency, used in place of the factor product when set.
    pub eta_sys_measured: Option<f64>,
    /// Dark count rate, counts/s.
    pub dark_rate: f64,
    /// Correction for the time dependence of the readout pulse turn-on.
    pub envelope_factor: f64,
}

impl DetectionChain {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_kappa", self.eta_kappa),
            ("eta_cplr", self.eta_cplr),
            ("eta_tran", self.eta_tran),
            ("eta_spd", self.eta_spd),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if let Some(m) = self.eta_sys_measured {
            let min = self.eta_cplr.min(self.eta_tran).min(self.eta_spd);
            if !(0.0..=min).contains(&m) {
                return Err(Error::InvalidInput(format!(
                    "eta_sys = {m} must lie in [0, {min}] (smallest factor)"
                )));
            }
        }
        if !(self.dark_rate >= 0.0) {
            return Err(Error::InvalidInput("dark count rate must be ≥ 0".into()));
        }
        if !(self.envelope_factor >= 0.0) {
            return Err(Error::InvalidInput("envelope factor must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn eta_sys(&self) -> f64 {
        self.eta_sys_measured
            .unwrap_or(self.eta_cplr * self.eta_tran * self.eta_spd)
    }

    /// Probability that one anti-Stokes photon scattered per unit γ_om·dt is detected.
    pub fn per_phonon_efficiency(&self) -> f64 {
        self.eta_kappa * self.eta_sys() * self.envelope_factor
    }
}

/// Sideband scattering count rate:
/// Γ = Γ_dark + η_κ η_sys f (4 g_om² n_c/κ_o)(n_m + [blue]).
pub fn scattering_rate(
    sideband: Sideband,
    n_m: f64,
    n_c: f64,
    params: &DeviceParams,
    chain: &DetectionChain,
) -> f64 {
    let g = params.mode().g_om;
    let gamma_om = 4.0 * g * g * n_c / params.kappa_o();
    let occupancy = match sideband {
        Sideband::Red => n_m,
        Sideband::Blue => n_m + 1.0,
    };
    chain.dark_rate + chain.per_phonon_efficiency() * gamma_om * occupancy
}

/// Readout efficiency η_ro = γ/(γ+κ)·(1 − e^{−(γ+κ)τ}).
pub fn readout_efficiency(tau_ro: f64, gamma_om: f64, kappa_m_t1: f64) -> f64 {
    let total = gamma_om + kappa_m_t1;
    if total == 0.0 || tau_ro <= 0.0 {
        return 0.0;
    }
    gamma_om / total * -(-total * tau_ro).exp_m1()
}

/// Envelope factor that makes η_κ η_sys f ∫γ_om dt equal the measured `p_d`.
pub fn calibrate_envelope_factor(p_d: f64, integrated_gamma_om: f64, chain: &DetectionChain) -> Result<f64> {
    let base = chain.eta_kappa * chain.eta_sys() * integrated_gamma_om;
    if !(base > 0.0) {
        return Err(Error::InvalidInput("no readout to calibrate against".into()));
    }
    Ok(p_d / base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::paper_device;
    use crate::units::angular;
    use proptest::prelude::*;

    #[test]
    fn red_without_phonons_is_dark() {
        let p = paper_device();
        assert_eq!(
            scattering_rate(Sideband::Red, 0.0, 44.0, &p.device, &p.chain),
            p.chain.dark_rate
        );
    }

    #[test]
    fn constant_pulse_difference() {
        let p = paper_device();
        let chain = DetectionChain {
            envelope_factor: 1.0,
            ..p.chain.clone()
        };
        let diff = scattering_rate(Sideband::Blue, 0.3, 44.0, &p.device, &chain)
            - scattering_rate(Sideband::Red, 0.3, 44.0, &p.device, &chain);
        let per_pulse = diff * 38e-9;
        // η_κ η_sys γ_om τ with γ_om/2π = 19.3 kHz
        let oracle = (0.81 / 1.61) * 0.015 * angular(4.0 * 420e3 * 420e3 * 44.0 / 1.61e9) * 38e-9;
        assert!((per_pulse - oracle).abs() < 1e-12 * oracle);
        assert!((per_pulse - 3.4e-5).abs() < 0.1e-5, "{per_pulse}");
    }

    #[test]
    fn readout_efficiency_device_values() {
        let g = angular(19e3);
        let k = angular(446e3);
        assert!((readout_efficiency(1.0, g, k) - 19.0 / 465.0).abs() < 1e-12);
        assert!((readout_efficiency(1.0, g, k) - 0.0409).abs() < 1e-4);
        assert_eq!(readout_efficiency(0.0, g, k), 0.0);
        let e38 = readout_efficiency(38e-9, g, k);
        assert!((e38 - 4.3e-3).abs() < 0.05e-3, "{e38}");
        assert!((e38 * 7.5e-3 - 3.2e-5).abs() < 0.1e-5);
        assert_eq!(readout_efficiency(1e-6, 0.0, 0.0), 0.0);
    }

    #[test]
    fn chain_rejects_out_of_range() {
        let mut c = paper_device().chain;
        c.eta_spd = 1.2;
        assert!(c.validate().is_err());
        let mut c = paper_device().chain;
        c.eta_sys_measured = Some(0.5);
        assert!(c.validate().is_err());
        let mut c = paper_device().chain;
        c.dark_rate = -1.0;
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn asymmetry_independent_of_occupancy(n1 in 0.0..5.0f64, n2 in 0.0..5.0f64, n_c in 0.0..500.0f64) {
            let p = paper_device();
            let d = |n| scattering_rate(Sideband::Blue, n, n_c, &p.device, &p.chain)
                - scattering_rate(Sideband::Red, n, n_c, &p.device, &p.chain);
            prop_assert!((d(n1) - d(n2)).abs() <= 1e-9 * d(n1).abs().max(1e-30));
        }

        #[test]
        fn readout_efficiency_monotone_and_bounded(t1 in 0.0..2e-6f64, t2 in 0.0..2e-6f64,
                                                   g in 1e3..1e7f64, k in 1e3..1e7f64) {
            let (a, b) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let ea = readout_efficiency(a, g, k);
            let eb = readout_efficiency(b, g, k);
            prop_assert!(ea <= eb);
            prop_assert!(eb < g / (g + k) || eb == 0.0);
        }

        #[test]
        fn small_time_slope_is_gamma(g in 1e3..1e6f64, k in 1e3..1e6f64) {
            let tau = 1e-12;
            let e = readout_efficiency(tau, g, k);
            prop_assert!((e / tau - g).abs() < 1e-5 * g);
        }
    }
}
