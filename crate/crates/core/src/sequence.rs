//! Pulse segments and sequences.
//!
//! Time zero is the start of the first segment. All envelopes are continuous
//! at segment boundaries when edges are non-zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::units::angular;

/// Cosine edge of microwave drive pulses.
pub const DRIVE_EDGE: f64 = 2e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind {
    /// Microwave drive on the qubit. The carrier phase is referenced to the
    /// absolute sequence time, θ(t) = detuning·t + phase, so consecutive
    /// pulses are phase coherent. `detuning` is ω_d − ω_m.
    MicrowaveDrive {
        rabi: f64,
        detuning: f64,
        phase: f64,
        edge: f64,
    },
    /// Programmed qubit-frequency offset with raised-cosine edges inside the segment.
    StarkShift { shift: f64, rise: f64 },
    /// Red-sideband optical pump, trapezoidal in intracavity photon number.
    OpticalReadout { n_c_peak: f64, rise: f64, fall: f64 },
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSegment {
    pub kind: SegmentKind,
    pub duration: f64,
}

/// Raised-cosine step rising from 0 to 1 over `[0, width]`.
fn smooth_step(x: f64, width: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= width {
        1.0
    } else {
        0.5 * (1.0 - (PI * x / width).cos())
    }
}

/// Flat-top window on `[0, duration]` with raised-cosine edges of width `edge`
/// placed inside; its area is `duration − edge`.
fn flat_top(t: f64, duration: f64, edge: f64) -> f64 {
    if t < 0.0 || t > duration {
        return 0.0;
    }
    if edge <= 0.0 {
        return 1.0;
    }
    smooth_step(t, edge) - smooth_step(t - (duration - edge), edge)
}

impl PulseSegment {
    /// Drive pulse whose area equals `rabi · length`. The segment occupies
    /// `length + DRIVE_EDGE`; a zero-length pulse has zero envelope.
    pub fn drive(rabi: f64, detuning: f64, phase: f64, length: f64) -> Self {
        Self {
            kind: SegmentKind::MicrowaveDrive {
                rabi,
                detuning,
                phase,
                edge: DRIVE_EDGE,
            },
            duration: length + DRIVE_EDGE,
        }
    }

    /// Stark pulse of total length `duration`; the edge is clamped to half the length.
    pub fn stark(shift: f64, rise: f64, duration: f64) -> Self {
        Self {
            kind: SegmentKind::StarkShift { shift, rise },
            duration,
        }
    }

    pub fn readout(n_c_peak: f64, rise: f64, fall: f64, duration: f64) -> Self {
        Self {
            kind: SegmentKind::OpticalReadout {
                n_c_peak,
                rise,
                fall,
            },
            duration,
        }
    }

    pub fn idle(duration: f64) -> Self {
        Self {
            kind: SegmentKind::Idle,
            duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidInput(format!(
                "segment duration must be positive and finite, got {}",
                self.duration
            )));
        }
        match self.kind {
            SegmentKind::MicrowaveDrive { rabi, edge, .. } => {
                if rabi < 0.0 {
                    return Err(Error::InvalidInput("drive Rabi rate must be ≥ 0".into()));
                }
                if edge < 0.0 || edge > self.duration {
                    return Err(Error::InvalidInput(format!(
                        "drive edge {edge} does not fit in duration {}",
                        self.duration
                    )));
                }
            }
            SegmentKind::StarkShift { rise, .. } => {
                if rise < 0.0 {
                    return Err(Error::InvalidInput("Stark rise must be ≥ 0".into()));
                }
            }
            SegmentKind::OpticalReadout {
                n_c_peak,
                rise,
                fall,
            } => {
                if n_c_peak < 0.0 {
                    return Err(Error::InvalidInput("n_c peak must be ≥ 0".into()));
                }
                if rise < 0.0 || fall < 0.0 || rise + fall > self.duration * (1.0 + 1e-12) {
                    return Err(Error::InvalidInput(format!(
                        "rise + fall = {} exceeds duration {}",
                        rise + fall,
                        self.duration
                    )));
                }
            }
            SegmentKind::Idle => {}
        }
        Ok(())
    }

    /// Effective Stark edge, clamped so the two edges fit.
    fn stark_edge(&self, rise: f64) -> f64 {
        rise.min(0.5 * self.duration)
    }

    fn stark_offset(&self, local: f64) -> f64 {
        match self.kind {
            SegmentKind::StarkShift { shift, rise } => {
                shift * flat_top(local, self.duration, self.stark_edge(rise))
            }
            _ => 0.0,
        }
    }

    fn drive_amplitude(&self, local: f64) -> f64 {
        match self.kind {
            SegmentKind::MicrowaveDrive { rabi, edge, .. } => {
                rabi * flat_top(local, self.duration, edge)
            }
            _ => 0.0,
        }
    }

    fn photons(&self, local: f64) -> f64 {
        match self.kind {
            SegmentKind::OpticalReadout {
                n_c_peak,
                rise,
                fall,
            } => {
                if local < 0.0 || local > self.duration {
                    return 0.0;
                }
                let up = if rise > 0.0 { local / rise } else { 1.0 };
                let down = if fall > 0.0 {
                    (self.duration - local) / fall
                } else {
                    1.0
                };
                n_c_peak * up.min(down).clamp(0.0, 1.0)
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    segments: Vec<PulseSegment>,
    starts: Vec<f64>,
    total: f64,
    /// Repetition period 1/R, s.
    pub repetition_period: f64,
    /// Static qubit detuning ω_q − ω_m at the flux-bias point, rad/s.
    pub qubit_detuning: f64,
}

impl PulseSequence {
    pub fn new(
        segments: Vec<PulseSegment>,
        qubit_detuning: f64,
        repetition_period: f64,
    ) -> Result<Self> {
        let mut starts = Vec::with_capacity(segments.len());
        let mut t = 0.0;
        for s in &segments {
            s.validate()?;
            starts.push(t);
            t += s.duration;
        }
        if repetition_period < t {
            return Err(Error::InvalidInput(format!(
                "repetition period {repetition_period} s shorter than sequence {t} s"
            )));
        }
        Ok(Self {
            segments,
            starts,
            total: t,
            repetition_period,
            qubit_detuning,
        })
    }

    /// Sequence with no segments at all (free evolution).
    pub fn empty(qubit_detuning: f64) -> Self {
        Self {
            segments: Vec::new(),
            starts: Vec::new(),
            total: 0.0,
            repetition_period: f64::INFINITY,
            qubit_detuning,
        }
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn start_of(&self, index: usize) -> f64 {
        self.starts[index]
    }

    pub fn end_of(&self, index: usize) -> f64 {
        self.starts[index] + self.segments[index].duration
    }

    pub fn total_duration(&self) -> f64 {
        self.total
    }

    /// Segments that may be active at `t` (at most two, at a shared boundary).
    fn active(&self, t: f64) -> impl Iterator<Item = (&PulseSegment, f64)> {
        let idx = self.starts.partition_point(|&s| s <= t);
        let lo = idx.saturating_sub(2);
        (lo..idx).filter_map(move |i| {
            let local = t - self.starts[i];
            (local <= self.segments[i].duration).then_some((&self.segments[i], local))
        })
    }

    /// Programmed qubit frequency offset δω_q(t).
    pub fn stark_offset(&self, t: f64) -> f64 {
        self.active(t).map(|(s, l)| s.stark_offset(l)).sum()
    }

    /// Coefficient of σ_eg in the drive Hamiltonian, (Ω(t)/2)·e^{−iθ(t)}.
    pub fn drive_field(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, l) in self.active(t) {
            if let SegmentKind::MicrowaveDrive {
                detuning, phase, ..
            } = s.kind
            {
                let amp = s.drive_amplitude(l);
                if amp != 0.0 {
                    acc += Complex64::from_polar(0.5 * amp, -(detuning * t + phase));
                }
            }
        }
        acc
    }

    /// Intracavity pump photon number n_c(t).
    pub fn photons(&self, t: f64) -> f64 {
        self.active(t).map(|(s, l)| s.photons(l)).sum()
    }

    /// Peak n_c over the whole sequence.
    pub fn peak_photons(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s.kind {
                SegmentKind::OpticalReadout { n_c_peak, .. } => n_c_peak,
                _ => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Index of the first optical readout segment.
    pub fn first_readout(&self) -> Option<usize> {
        self.segments
            .iter()
            .position(|s| matches!(s.kind, SegmentKind::OpticalReadout { .. }))
    }
}

/// `sequence.toml` schema. Frequencies in Hz, times in seconds.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub repetition_period_s: f64,
    #[serde(default)]
    pub qubit_detuning_hz: f64,
    #[serde(default, rename = "segment")]
    pub segments: Vec<SegmentFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentFile {
    MicrowaveDrive {
        /// Pulse area length; the segment lasts this plus the drive edge.
        length_s: f64,
        rabi_hz: f64,
        #[serde(default)]
        detuning_hz: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    StarkShift {
        duration_s: f64,
        shift_hz: f64,
        rise_s: f64,
    },
    OpticalReadout {
        duration_s: f64,
        n_c_peak: f64,
        rise_s: f64,
        fall_s: f64,
    },
    Idle {
        duration_s: f64,
    },
}

impl SequenceFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::config("<sequence>", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.inner().to_string())
        })
    }

    pub fn build(&self) -> Result<PulseSequence> {
        let segments = self
            .segments
            .iter()
            .map(|s| match *s {
                SegmentFile::MicrowaveDrive {
                    length_s,
                    rabi_hz,
                    detuning_hz,
                    phase_rad,
                } => PulseSegment::drive(angular(rabi_hz), angular(detuning_hz), phase_rad, length_s),
                SegmentFile::StarkShift {
                    duration_s,
                    shift_hz,
                    rise_s,
                } => PulseSegment::stark(angular(shift_hz), rise_s, duration_s),
                SegmentFile::OpticalReadout {
                    duration_s,
                    n_c_peak,
                    rise_s,
                    fall_s,
                } => PulseSegment::readout(n_c_peak, rise_s, fall_s, duration_s),
                SegmentFile::Idle { duration_s } => PulseSegment::idle(duration_s),
            })
            .collect();
        PulseSequence::new(
            segments,
            angular(self.qubit_detuning_hz),
            self.repetition_period_s,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid-rule area of a sampled function.
    fn area(f: impl Fn(f64) -> f64, t0: f64, t1: f64) -> f64 {
        let n = 200_000;
        let h = (t1 - t0) / n as f64;
        let mut s = 0.5 * (f(t0) + f(t1));
        for k in 1..n {
            s += f(t0 + k as f64 * h);
        }
        s * h
    }

    #[test]
    fn drive_area_matches_length() {
        for length in [0.0, 1e-9, 32e-9, 100e-9] {
            let seq =
                PulseSequence::new(vec![PulseSegment::drive(1.0, 0.0, 0.0, length)], 0.0, 1.0)
                    .unwrap();
            let a = area(|t| 2.0 * seq.drive_field(t).norm(), 0.0, seq.total_duration());
            assert!((a - length).abs() < 1e-13, "length {length}: area {a}");
        }
    }

    #[test]
    fn stark_area_and_clamped_edges() {
        let seq = PulseSequence::new(vec![PulseSegment::stark(2.0, 15e-9, 100e-9)], 0.0, 1.0)
            .unwrap();
        let a = area(|t| seq.stark_offset(t), 0.0, 100e-9);
        assert!((a - 2.0 * 85e-9).abs() < 1e-15);
        assert_eq!(seq.stark_offset(50e-9), 2.0);
        let short = PulseSequence::new(vec![PulseSegment::stark(1.0, 15e-9, 10e-9)], 0.0, 1.0)
            .unwrap();
        assert!((short.stark_offset(5e-9) - 1.0).abs() < 1e-12);
        assert!(short.stark_offset(10e-9).abs() < 1e-12);
    }

    #[test]
    fn readout_trapezoid() {
        let seq = PulseSequence::new(
            vec![
                PulseSegment::idle(10e-9),
                PulseSegment::readout(44.0, 20e-9, 20e-9, 100e-9),
            ],
            0.0,
            1.0,
        )
        .unwrap();
        assert_eq!(seq.photons(5e-9), 0.0);
        assert!((seq.photons(20e-9) - 22.0).abs() < 1e-9);
        assert_eq!(seq.photons(60e-9), 44.0);
        assert!(seq.photons(110e-9).abs() < 1e-9);
        assert_eq!(seq.first_readout(), Some(1));
        assert_eq!(seq.peak_photons(), 44.0);
    }

    #[test]
    fn invariants_rejected() {
        assert!(PulseSegment::readout(1.0, 30e-9, 30e-9, 50e-9).validate().is_err());
        assert!(PulseSegment::idle(0.0).validate().is_err());
        assert!(PulseSegment::drive(-1.0, 0.0, 0.0, 1e-9).validate().is_err());
        assert!(PulseSequence::new(vec![PulseSegment::idle(1.0)], 0.0, 0.5).is_err());
    }

    #[test]
    fn phase_is_referenced_to_absolute_time() {
        let det = 1e7;
        let seq = PulseSequence::new(
            vec![
                PulseSegment::drive(1.0, det, 0.0, 10e-9),
                PulseSegment::idle(50e-9),
                PulseSegment::drive(1.0, det, 0.0, 10e-9),
            ],
            0.0,
            1.0,
        )
        .unwrap();
        let t = seq.start_of(2) + 6e-9;
        let f = seq.drive_field(t);
        assert!((f.arg() - (-(det * t)).sin().atan2((-(det * t)).cos())).abs() < 1e-9);
    }

    #[test]
    fn sequence_file_roundtrip() {
        let text = r#"
repetition_period_s = 0.01
qubit_detuning_hz = -10e6

[[segment]]
kind = "microwave_drive"
length_s = 32e-9
rabi_hz = 15.625e6

[[segment]]
kind = "stark_shift"
duration_s = 104e-9
shift_hz = 10e6
rise_s = 15e-9

[[segment]]
kind = "optical_readout"
duration_s = 60e-9
n_c_peak = 44
rise_s = 20e-9
fall_s = 20e-9
"#;
        let seq = SequenceFile::from_toml(text).unwrap().build().unwrap();
        assert_eq!(seq.segments().len(), 3);
        assert!((seq.total_duration() - (34e-9 + 104e-9 + 60e-9)).abs() < 1e-18);
    }

    #[test]
    fn sequence_file_reports_field_path() {
        let text = r#"
repetition_period_s = 0.01
[[segment]]
kind = "idle"
duration_s = "long"
"#;
        match SequenceFile::from_toml(text) {
            Err(Error::Config { path, .. }) => assert!(path.contains("segment"), "{path}"),
            other => panic!("{other:?}"),
        }
    }
}
