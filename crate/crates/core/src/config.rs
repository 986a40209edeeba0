//! Device profiles: the `device.toml` schema, bundled profiles and overrides.
//!
//! Every frequency in a profile file is an ordinary frequency in Hz and every
//! time is in seconds; conversion to angular units happens in [`ProfileFile::build`].

use serde::{Deserialize, Serialize};

use crate::analytics::DetectionChain;
use crate::environment::{HeatingModel, QpModel};
use crate::error::{Error, Result};
use crate::params::{DeviceParams, MechMode, QubitParams};
use crate::units::{angular, hertz};

const PAPER_DEVICE_TOML: &str = include_str!("../profiles/paper_device.toml");

/// Name under which the bundled profile is addressable from the CLI.
pub const PAPER_DEVICE: &str = "paper_device";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub name: String,
    pub device: DeviceSection,
    pub qubit: QubitSection,
    pub mech_modes: Vec<ModeSection>,
    pub detection: DetectionSection,
    pub heating: HeatingSection,
    pub qp: QpSection,
    pub protocol: ProtocolSettings,
    pub readout_resonator: ReadoutResonator,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub g_pe_hz: f64,
    #[serde(default)]
    pub transduction_mode: usize,
    pub optical_frequency_hz: f64,
    pub kappa_i_o_hz: f64,
    pub kappa_e_o_hz: f64,
    pub fridge_temperature_k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub e_j_hz: f64,
    pub e_c_hz: f64,
    pub t1_s: f64,
    pub t2_star_s: f64,
    pub kappa_e_hz: f64,
    #[serde(default)]
    pub kappa_e_alt_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub frequency_hz: f64,
    pub g_om_hz: f64,
    #[serde(default)]
    pub g_pe_hz: f64,
    pub kappa_i_hz: f64,
    pub t1_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub eta_cplr: f64,
    pub eta_tran: f64,
    pub eta_spd: f64,
    /// Measured end-to-end system efficiency; when present it replaces the
    /// product of the three factors.
    #[serde(default)]
    pub eta_sys: Option<f64>,
    pub dark_count_rate_hz: f64,
    #[serde(default = "one")]
    pub envelope_factor: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HeatingSection {
    /// Hot-bath coupling per intracavity photon, Hz.
    pub gamma_p_per_photon_hz: f64,
    pub n_p: f64,
    #[serde(default)]
    pub onset_delay_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QpSection {
    pub tau_qp_s: f64,
    /// QP lifetime after vortex trapping.
    #[serde(default)]
    pub tau_qp_trapped_s: Option<f64>,
    /// Rabi-decay rate induced per unit QP density, multiplied by the injected
    /// density, in units of 1/s.
    pub injected_decay_rate_hz: f64,
    pub rabi_window_s: f64,
    pub threshold: f64,
    pub pulse_duration_s: f64,
    pub pulse_power_w: f64,
}

/// Protocol and integrator defaults, already in SI units (times in s, frequencies in Hz).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSettings {
    pub n_m_levels: usize,
    pub dt_s: f64,
    /// Qubit bias used for Rabi, Ramsey and the phonon-T1 measurement.
    pub idle_frequency_hz: f64,
    /// Qubit detuning from the mechanics before the Stark pulse (ν_0 − ν_m).
    pub parking_detuning_hz: f64,
    pub stark_shift_hz: f64,
    pub stark_rise_s: f64,
    /// Detuning of the Stark tone from the qubit.
    pub stark_drive_detuning_hz: f64,
    pub pi_time_s: f64,
    pub swap_hold_s: f64,
    pub n_c_peak: f64,
    pub readout_rise_s: f64,
    pub readout_fall_s: f64,
    pub readout_duration_s: f64,
    pub tau_ro_s: f64,
    pub repetition_period_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReadoutResonator {
    pub frequency_hz: f64,
    pub g_hz: f64,
    pub kappa_hz: f64,
}

/// A fully resolved profile in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub name: String,
    pub device: DeviceParams,
    pub chain: DetectionChain,
    pub heating: HeatingModel,
    pub qp: QpModel,
    pub qp_trapped: Option<QpModel>,
    pub protocol: ProtocolSettings,
    pub readout_resonator: ReadoutResonator,
}

impl ProfileFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<profile>", e.to_string()))?;
        Self::from_value(toml::Value::Table(value))
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.inner().to_string())
        })
    }

    pub fn build(&self) -> Result<DeviceProfile> {
        let d = &self.device;
        let modes = self
            .mech_modes
            .iter()
            .map(|m| {
                MechMode::new(
                    angular(m.frequency_hz),
                    angular(m.g_om_hz),
                    angular(m.g_pe_hz),
                    angular(m.kappa_i_hz),
                    m.t1_s,
                )
            })
            .collect();
        let device = DeviceParams {
            g_pe: angular(d.g_pe_hz),
            mech_modes: modes,
            transduction_mode: d.transduction_mode,
            omega_c: angular(d.optical_frequency_hz),
            kappa_i_o: angular(d.kappa_i_o_hz),
            kappa_e_o: angular(d.kappa_e_o_hz),
            qubit: QubitParams {
                e_j_hz: self.qubit.e_j_hz,
                e_c_hz: self.qubit.e_c_hz,
                t1_q: self.qubit.t1_s,
                t2s_q: self.qubit.t2_star_s,
                kappa_e_q: angular(self.qubit.kappa_e_hz),
                kappa_e_q_alt: self.qubit.kappa_e_alt_hz.map(angular),
            },
            t_f: d.fridge_temperature_k,
        };
        device.validate()?;

        let det = &self.detection;
        let chain = DetectionChain {
            eta_kappa: device.kappa_e_o / device.kappa_o(),
            eta_cplr: det.eta_cplr,
            eta_tran: det.eta_tran,
            eta_spd: det.eta_spd,
            eta_sys_measured: det.eta_sys,
            dark_rate: det.dark_count_rate_hz,
            envelope_factor: det.envelope_factor,
        };
        chain.validate().map_err(|e| relabel(e, "detection"))?;

        let heating = HeatingModel {
            gamma_p_per_photon: angular(self.heating.gamma_p_per_photon_hz),
            n_p: self.heating.n_p,
            onset_delay: self.heating.onset_delay_s,
        };
        heating.validate().map_err(|e| relabel(e, "heating"))?;

        let q = &self.qp;
        let qp = QpModel {
            tau_qp: q.tau_qp_s,
            injected_decay_rate: q.injected_decay_rate_hz,
            rabi_window: q.rabi_window_s,
            threshold: q.threshold,
        };
        qp.validate().map_err(|e| relabel(e, "qp"))?;
        let qp_trapped = q.tau_qp_trapped_s.map(|tau| QpModel { tau_qp: tau, ..qp.clone() });
        if let Some(t) = &qp_trapped {
            t.validate().map_err(|e| relabel(e, "qp.tau_qp_trapped_s"))?;
        }

        let p = &self.protocol;
        if p.n_m_levels < 2 {
            return Err(Error::config("protocol.n_m_levels", "must be ≥ 2"));
        }
        for (name, v) in [
            ("protocol.dt_s", p.dt_s),
            ("protocol.pi_time_s", p.pi_time_s),
            ("protocol.tau_ro_s", p.tau_ro_s),
            ("protocol.readout_duration_s", p.readout_duration_s),
            ("protocol.repetition_period_s", p.repetition_period_s),
            ("protocol.idle_frequency_hz", p.idle_frequency_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be strictly positive, got {v}")));
            }
        }
        if p.n_c_peak < 0.0 {
            return Err(Error::config("protocol.n_c_peak", "must be ≥ 0"));
        }
        if p.readout_rise_s + p.readout_fall_s > p.readout_duration_s {
            return Err(Error::config(
                "protocol.readout_duration_s",
                "rise + fall exceeds the readout duration",
            ));
        }

        Ok(DeviceProfile {
            name: self.name.clone(),
            device,
            chain,
            heating,
            qp,
            qp_trapped,
            protocol: p.clone(),
            readout_resonator: self.readout_resonator.clone(),
        })
    }
}

fn relabel(e: Error, section: &str) -> Error {
    match e {
        Error::InvalidInput(m) => Error::config(section, m),
        other => other,
    }
}

impl DeviceProfile {
    /// Qubit idle detuning from the transduction mode, rad/s.
    pub fn idle_detuning(&self) -> f64 {
        angular(self.protocol.idle_frequency_hz) - self.device.mode().omega_m
    }

    pub fn mode_frequency_hz(&self) -> f64 {
        hertz(self.device.mode().omega_m)
    }
}

/// Parse `key=value` overrides. Keys are dotted paths into the profile file,
/// with `[i]` selecting array elements (`mech_modes[0].t1_s=1e-6`). Values are
/// parsed as TOML literals, falling back to bare strings.
pub fn apply_overrides(root: &mut toml::Value, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::config(ov.clone(), "override must have the form key=value"))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = parse_literal(raw);
        let target = lookup_mut(root, key)?;
        *target = value;
    }
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn lookup_mut<'a>(root: &'a mut toml::Value, key: &str) -> Result<&'a mut toml::Value> {
    let mut cur = root;
    for part in key.split('.') {
        let (name, index) = match part.split_once('[') {
            Some((n, rest)) => {
                let idx = rest
                    .strip_suffix(']')
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::config(key, "malformed array index"))?;
                (n, Some(idx))
            }
            None => (part, None),
        };
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{name}` is not inside a table")))?;
        cur = table
            .get_mut(name)
            .ok_or_else(|| Error::config(key, format!("unknown key `{name}`")))?;
        if let Some(i) = index {
            let arr = cur
                .as_array_mut()
                .ok_or_else(|| Error::config(key, format!("`{name}` is not an array")))?;
            let len = arr.len();
            cur = arr
                .get_mut(i)
                .ok_or_else(|| Error::config(key, format!("index {i} out of range ({len})")))?;
        }
    }
    Ok(cur)
}

/// Source text of a bundled profile.
pub fn bundled_profile_text(name: &str) -> Option<&'static str> {
    (name == PAPER_DEVICE).then_some(PAPER_DEVICE_TOML)
}

/// Load a profile by bundled name or file path, applying overrides.
pub fn load_profile(name_or_path: &str, overrides: &[String]) -> Result<(ProfileFile, DeviceProfile)> {
    let text = match bundled_profile_text(name_or_path) {
        Some(t) => t.to_string(),
        None => std::fs::read_to_string(name_or_path)
            .map_err(|e| Error::config(name_or_path, format!("cannot read profile: {e}")))?,
    };
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(name_or_path, e.to_string()))?;
    let mut value = toml::Value::Table(table);
    apply_overrides(&mut value, overrides)?;
    let file = ProfileFile::from_value(value)?;
    let profile = file.build()?;
    Ok((file, profile))
}

/// The bundled profile of the measured device.
pub fn paper_device() -> DeviceProfile {
    paper_device_file()
        .build()
        .expect("bundled profile is valid")
}

pub fn paper_device_file() -> ProfileFile {
    ProfileFile::from_toml(PAPER_DEVICE_TOML).expect("bundled profile parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_profile_values() {
        let p = paper_device();
        let d = &p.device;
        assert_eq!(d.mech_modes.len(), 4);
        assert!((hertz(d.g_pe) - 2.24e6).abs() < 1.0);
        assert!((hertz(d.mode().omega_m) - 5.1588e9).abs() < 1.0);
        assert!((hertz(d.mode().g_om) - 420e3).abs() < 1e-6);
        assert!((d.mode().t1_m - 357e-9).abs() < 1e-18);
        assert!((hertz(d.kappa_o()) - 1.61e9).abs() < 1.0);
        assert_eq!(d.qubit.t1_q, 522e-9);
        assert_eq!(d.qubit.t2s_q, 678e-9);
        assert!((hertz(d.qubit.kappa_e_q) - 120e3).abs() < 1e-6);
        assert!((hertz(d.qubit.kappa_e_q_alt.unwrap()) - 100e3).abs() < 1e-6);
        assert!((p.chain.eta_sys() - 0.015).abs() < 1e-15);
        assert_eq!(p.chain.dark_rate, 10.0);
        assert_eq!(p.protocol.repetition_period_s, 0.01);
        assert_eq!(p.qp.tau_qp, 1.5e-3);
        assert_eq!(p.qp_trapped.as_ref().unwrap().tau_qp, 320e-6);
        // spectators carry no piezoelectric coupling by default
        assert!(d.mech_modes[1..].iter().all(|m| m.g_pe == 0.0));
    }

    #[test]
    fn override_nested_and_indexed() {
        let mut v = toml::Value::Table(PAPER_DEVICE_TOML.parse().unwrap());
        apply_overrides(
            &mut v,
            &["device.g_pe_hz=1e6".into(), "mech_modes[0].t1_s = 1e-6".into()],
        )
        .unwrap();
        let p = ProfileFile::from_value(v).unwrap().build().unwrap();
        assert!((hertz(p.device.g_pe) - 1e6).abs() < 1e-6);
        assert_eq!(p.device.mode().t1_m, 1e-6);
    }

    #[test]
    fn unknown_override_key_is_config_error() {
        let err = load_profile(PAPER_DEVICE, &["device.nope=1".into()]).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn wrong_type_reports_field_path() {
        let err = load_profile(PAPER_DEVICE, &["qubit.t1_s=\"long\"".into()]).unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "qubit.t1_s"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_kappa_reports_field_path() {
        let err = load_profile(PAPER_DEVICE, &["device.kappa_e_o_hz=-1".into()]).unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "device.kappa_e_o_hz"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unresolved_sideband_is_validity_error() {
        let err = load_profile(PAPER_DEVICE, &["device.kappa_i_o_hz=6e9".into()]).unwrap_err();
        assert!(matches!(err, Error::Validity(_)));
    }

    #[test]
    fn serialization_roundtrip() {
        let f = paper_device_file();
        let text = toml::to_string(&f).unwrap();
        assert_eq!(ProfileFile::from_toml(&text).unwrap(), f);
    }
}
