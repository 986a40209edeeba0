//! Device parameters in internal (angular, SI) units.

use crate::error::{Error, Result};
use crate::units::{rate_from_lifetime, HBAR, K_B};

/// One mechanical mode of the hybridized transducer.
#[derive(Debug, Clone, PartialEq)]
pub struct MechMode {
    /// Mode frequency ω_m, rad/s.
    pub omega_m: f64,
    /// Single-photon optomechanical coupling g_om, rad/s.
    pub g_om: f64,
    /// Piezoelectric coupling to the qubit, rad/s. Zero for modes whose
    /// coupling has not been measured.
    pub g_pe: f64,
    /// Intrinsic optomechanical linewidth κ_i,m, rad/s.
    pub kappa_i_m: f64,
    /// Energy decay rate κ_m,T1 = 1/T1_m, 1/s.
    pub kappa_m_t1: f64,
    /// Phonon lifetime, s.
    pub t1_m: f64,
}

impl MechMode {
    pub fn new(omega_m: f64, g_om: f64, g_pe: f64, kappa_i_m: f64, t1_m: f64) -> Self {
        Self {
            omega_m,
            g_om,
            g_pe,
            kappa_i_m,
            kappa_m_t1: rate_from_lifetime(t1_m),
            t1_m,
        }
    }

    /// Replace the lifetime, keeping κ_m,T1 consistent.
    pub fn with_t1(mut self, t1_m: f64) -> Self {
        self.t1_m = t1_m;
        self.kappa_m_t1 = rate_from_lifetime(t1_m);
        self
    }
}

/// Transmon parameters. Energies are stored as frequencies E/h in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitParams {
    pub e_j_hz: f64,
    pub e_c_hz: f64,
    pub t1_q: f64,
    pub t2s_q: f64,
    /// CPW external coupling κ_e,q, rad/s (design value).
    pub kappa_e_q: f64,
    /// The alternative κ_e,q quoted with the microwave spectrum, rad/s.
    pub kappa_e_q_alt: Option<f64>,
}

impl QubitParams {
    pub fn decay_rate(&self) -> f64 {
        rate_from_lifetime(self.t1_q)
    }

    /// Pure dephasing γ_φ = 1/T2* − 1/(2 T1), white-noise model.
    pub fn dephasing_rate(&self) -> f64 {
        let g = rate_from_lifetime(self.t2s_q) - 0.5 * rate_from_lifetime(self.t1_q);
        // T2* = 2 T1 exactly can round to a tiny negative value
        g.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    /// Qubit–phonon vacuum coupling of the transduction mode, rad/s.
    pub g_pe: f64,
    pub mech_modes: Vec<MechMode>,
    /// Index into `mech_modes` of the mode used for transduction.
    pub transduction_mode: usize,
    /// Optical cavity frequency ω_c, rad/s.
    pub omega_c: f64,
    pub kappa_i_o: f64,
    pub kappa_e_o: f64,
    pub qubit: QubitParams,
    /// Fridge temperature, K.
    pub t_f: f64,
}

impl DeviceParams {
    /// Total optical linewidth κ_o = κ_i,o + κ_e,o.
    pub fn kappa_o(&self) -> f64 {
        self.kappa_i_o + self.kappa_e_o
    }

    /// The transduction mode.
    pub fn mode(&self) -> &MechMode {
        &self.mech_modes[self.transduction_mode]
    }

    pub fn mode_mut(&mut self) -> &mut MechMode {
        let i = self.transduction_mode;
        &mut self.mech_modes[i]
    }

    /// Bose–Einstein occupancy of the transduction mode at the fridge temperature.
    pub fn n_f(&self) -> f64 {
        bose_einstein(self.mode().omega_m, self.t_f)
    }

    /// Per-mode coupling used by the spectroscopy layer: the transduction mode
    /// always carries `g_pe`, spectators carry their own configured value.
    pub fn mode_g_pe(&self, i: usize) -> f64 {
        if i == self.transduction_mode {
            self.g_pe
        } else {
            self.mech_modes[i].g_pe
        }
    }

    /// Check every invariant. Field violations come back as config errors
    /// with the offending path; the resolved-sideband check is a validity error.
    pub fn validate(&self) -> Result<()> {
        positive("device.g_pe_hz", self.g_pe)?;
        positive("device.optical_frequency_hz", self.omega_c)?;
        positive("device.kappa_i_o_hz", self.kappa_i_o)?;
        positive("device.kappa_e_o_hz", self.kappa_e_o)?;
        positive("device.fridge_temperature_k", self.t_f)?;
        positive("qubit.e_j_hz", self.qubit.e_j_hz)?;
        positive("qubit.e_c_hz", self.qubit.e_c_hz)?;
        positive("qubit.t1_s", self.qubit.t1_q)?;
        positive("qubit.t2_star_s", self.qubit.t2s_q)?;
        positive("qubit.kappa_e_hz", self.qubit.kappa_e_q)?;
        if self.qubit.t2s_q > 2.0 * self.qubit.t1_q {
            return Err(Error::config(
                "qubit.t2_star_s",
                format!(
                    "T2* = {:.3e} s exceeds 2·T1 = {:.3e} s",
                    self.qubit.t2s_q,
                    2.0 * self.qubit.t1_q
                ),
            ));
        }
        if self.mech_modes.is_empty() {
            return Err(Error::config("mech_modes", "at least one mode required"));
        }
        if self.transduction_mode >= self.mech_modes.len() {
            return Err(Error::config(
                "device.transduction_mode",
                format!("index {} out of range", self.transduction_mode),
            ));
        }
        for (i, m) in self.mech_modes.iter().enumerate() {
            let p = |f: &str| format!("mech_modes[{i}].{f}");
            positive(&p("frequency_hz"), m.omega_m)?;
            positive(&p("g_om_hz"), m.g_om)?;
            positive(&p("kappa_i_hz"), m.kappa_i_m)?;
            positive(&p("t1_s"), m.t1_m)?;
            non_negative(&p("g_pe_hz"), m.g_pe)?;
        }
        let kappa_o = self.kappa_o();
        let m = self.mode();
        if m.omega_m <= kappa_o {
            return Err(Error::Validity(format!(
                "resolved-sideband condition violated: ω_m/2π = {:.4e} Hz ≤ κ_o/2π = {:.4e} Hz",
                crate::units::hertz(m.omega_m),
                crate::units::hertz(kappa_o)
            )));
        }
        Ok(())
    }
}

/// Mean thermal occupancy of a mode at angular frequency `omega` and temperature `t`.
pub fn bose_einstein(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * t);
    1.0 / x.exp_m1()
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be strictly positive, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be non-negative, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::paper_device;
    use crate::units::angular;

    #[test]
    fn paper_device_is_valid() {
        let p = paper_device().device;
        p.validate().unwrap();
        assert_eq!(p.kappa_o(), p.kappa_i_o + p.kappa_e_o);
    }

    #[test]
    fn fridge_occupancy_is_negligible() {
        let p = paper_device().device;
        let n = p.n_f();
        assert!(n > 0.0 && n < 1e-6, "n_f = {n}");
    }

    #[test]
    fn dephasing_from_measured_lifetimes() {
        let q = paper_device().device.qubit;
        let expected = 1.0 / 678e-9 - 0.5 / 522e-9;
        assert!((q.dephasing_rate() - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn negative_coupling_names_field() {
        let mut p = paper_device().device;
        p.kappa_e_o = -1.0;
        match p.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "device.kappa_e_o_hz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unresolved_sideband_rejected() {
        let mut p = paper_device().device;
        p.kappa_i_o = angular(6e9);
        assert!(matches!(p.validate(), Err(Error::Validity(_))));
    }

    #[test]
    fn t2_above_twice_t1_rejected() {
        let mut p = paper_device().device;
        p.qubit.t2s_q = 3.0 * p.qubit.t1_q;
        assert!(matches!(p.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn lossless_lifetimes_allowed() {
        let mut p = paper_device().device;
        p.qubit.t1_q = f64::INFINITY;
        p.qubit.t2s_q = f64::INFINITY;
        p.validate().unwrap();
        assert_eq!(p.qubit.dephasing_rate(), 0.0);
        assert_eq!(p.qubit.decay_rate(), 0.0);
    }
}
