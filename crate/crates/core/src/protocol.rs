//! Measurement protocols: Rabi calibration, Stark-driven swap, double-swap
//! phonon T1, Ramsey, and the transduction sequence.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::config::DeviceProfile;
use crate::density::DensityMatrix;
use crate::environment::{heated_occupancy, trapezoid, HeatingModel};
use crate::error::{Error, Result};
use crate::fit::{dominant_frequency, levenberg_marquardt};
use crate::integrate::{evolve, IntegratorSettings};
use crate::model::{build_model, LindbladModel, ModelOptions};
use crate::relations::dressed_qubit_detuning;
use crate::sequence::{PulseSegment, PulseSequence};
use crate::units::angular;
use crate::warnings::{emit, Warning};

/// Spacing of the readout-window grid.
const READOUT_DT: f64 = 0.05e-9;

pub fn integrator_settings(profile: &DeviceProfile) -> IntegratorSettings {
    IntegratorSettings::with_dt(profile.protocol.dt_s)
}

pub fn model_options(profile: &DeviceProfile) -> ModelOptions {
    ModelOptions::eliminated(profile.protocol.n_m_levels)
}

/// Qubit detuning from the mechanics while parked before the swap, rad/s.
pub fn parking_detuning(profile: &DeviceProfile) -> f64 {
    angular(profile.protocol.parking_detuning_hz)
}

/// Squared qubit amplitude of the qubit-like dressed state at a bare detuning.
pub fn dressed_qubit_fraction(bare_detuning: f64, g: f64) -> f64 {
    let l = dressed_qubit_detuning(bare_detuning, g);
    if l == 0.0 && g == 0.0 {
        return 1.0;
    }
    l * l / (l * l + g * g)
}

/// Drive amplitude giving the profile π-time on the dressed qubit at `bare_detuning`.
pub fn calibrated_rabi(profile: &DeviceProfile, bare_detuning: f64) -> f64 {
    let frac = dressed_qubit_fraction(bare_detuning, profile.device.g_pe);
    PI / profile.protocol.pi_time_s / frac.sqrt()
}

/// Segment starts before `t_end`, then `t_end`; steps then never straddle
/// an edge where an envelope may jump.
fn boundary_grid(seq: &PulseSequence, t_end: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..seq.segments().len())
        .map(|i| seq.start_of(i))
        .filter(|&t| t < t_end)
        .collect();
    grid.push(t_end);
    grid.dedup_by(|b, a| *b <= *a);
    grid
}

fn final_state(
    profile: &DeviceProfile,
    seq: &PulseSequence,
    rho0: Option<(usize, usize)>,
) -> Result<(LindbladModel, DensityMatrix)> {
    let model = build_model(&profile.device, seq, &model_options(profile))?;
    let rho = match rho0 {
        Some((q, m)) => DensityMatrix::basis(&model.ops, q, m, 0),
        None => DensityMatrix::ground(&model.ops),
    };
    let t1 = seq.total_duration();
    let state = if t1 > 0.0 {
        let traj = evolve(&model, &rho, &boundary_grid(seq, t1), &integrator_settings(profile))?;
        traj.states.into_iter().last().expect("final state")
    } else {
        rho
    };
    Ok((model, state))
}

fn populations(model: &LindbladModel, s: &DensityMatrix) -> Result<(f64, f64)> {
    Ok((s.expectation(&model.ops.sigma_ee)?, s.expectation(&model.ops.n_b)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiFit {
    /// Rabi angular frequency.
    pub omega_r: f64,
    pub pi_time: f64,
    pub period: f64,
    pub contrast: f64,
    pub decay_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiScan {
    pub durations: Vec<f64>,
    pub p_e: Vec<f64>,
    pub fit: Option<RabiFit>,
    pub fit_error: Option<String>,
}

/// Fit c − A e^{−γτ} cos(ωτ) to a Rabi curve.
pub fn fit_rabi(durations: &[f64], p: &[f64]) -> Result<RabiFit> {
    if durations.len() < 5 {
        return Err(Error::Fit("insufficient points for a Rabi fit".into()));
    }
    let max = p.iter().copied().fold(f64::MIN, f64::max);
    let min = p.iter().copied().fold(f64::MAX, f64::min);
    let contrast = max - min;
    if contrast < 0.05 {
        return Err(Error::Fit(format!("Rabi contrast {contrast:.3e} below 0.05")));
    }
    let w0 = dominant_frequency(durations, p)
        .ok_or_else(|| Error::Fit("no oscillation found".into()))?;
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let model = |t: f64, q: &[f64]| q[0] - q[1] * (-q[3] * t).exp() * (q[2] * t).cos();
    let f = levenberg_marquardt(durations, p, &[mean, 0.5 * contrast, w0, 1e5], &model)?;
    let omega = f.params[2].abs();
    if !(omega > 0.0) {
        return Err(Error::Fit("fitted Rabi frequency is zero".into()));
    }
    Ok(RabiFit {
        omega_r: omega,
        pi_time: PI / omega,
        period: 2.0 * PI / omega,
        contrast,
        decay_rate: f.params[3],
    })
}

/// Qubit Rabi oscillations at the idle bias, driven at the dressed qubit frequency.
pub fn rabi_scan(profile: &DeviceProfile, omega: f64, durations: &[f64]) -> Result<RabiScan> {
    if omega < 0.0 {
        return Err(Error::InvalidInput("Rabi drive must be ≥ 0".into()));
    }
    let idle = profile.idle_detuning();
    let drive_det = dressed_qubit_detuning(idle, profile.device.g_pe);
    let p_e = durations
        .par_iter()
        .map(|&tau| {
            let seq = PulseSequence::new(
                vec![PulseSegment::drive(omega, drive_det, 0.0, tau)],
                idle,
                profile.protocol.repetition_period_s,
            )?;
            let (m, s) = final_state(profile, &seq, None)?;
            s.expectation(&m.ops.sigma_ee)
        })
        .collect::<Result<Vec<_>>>()?;
    let (fit, fit_error) = match fit_rabi(durations, &p_e) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(RabiScan {
        durations: durations.to_vec(),
        p_e,
        fit,
        fit_error,
    })
}

/// How the qubit excitation is prepared before the swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preparation {
    /// Start in |e, 0⟩ at the parking point.
    #[default]
    Excited,
    /// Calibrated π-pulse at the parking point from |g, 0⟩.
    PiPulse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapPoint {
    pub hold: f64,
    pub p_e: f64,
    pub n_m: f64,
}

fn preparation_segments(profile: &DeviceProfile, prep: Preparation, qubit_drive: f64) -> Vec<PulseSegment> {
    match prep {
        Preparation::Excited => Vec::new(),
        Preparation::PiPulse if qubit_drive > 0.0 => {
            let park = parking_detuning(profile);
            vec![PulseSegment::drive(
                calibrated_rabi(profile, park),
                dressed_qubit_detuning(park, profile.device.g_pe),
                0.0,
                qubit_drive,
            )]
        }
        Preparation::PiPulse => Vec::new(),
    }
}

fn initial_for(prep: Preparation) -> Option<(usize, usize)> {
    match prep {
        Preparation::Excited => Some((1, 0)),
        Preparation::PiPulse => None,
    }
}

/// Warnings for the configured Stark shift.
pub fn swap_warnings(profile: &DeviceProfile) -> Vec<Warning> {
    let shift = angular(profile.protocol.stark_shift_hz);
    let four_g = 4.0 * profile.device.g_pe;
    if shift.abs() < four_g {
        vec![emit(Warning::InsufficientDetuningContrast {
            shift,
            four_g_pe: four_g,
        })]
    } else {
        Vec::new()
    }
}

fn swap_sequence(profile: &DeviceProfile, prep: Preparation, hold: f64) -> Result<PulseSequence> {
    let p = &profile.protocol;
    let mut segs = preparation_segments(profile, prep, p.pi_time_s);
    if hold > 0.0 {
        segs.push(PulseSegment::stark(angular(p.stark_shift_hz), p.stark_rise_s, hold));
    }
    if segs.is_empty() {
        return Ok(PulseSequence::empty(parking_detuning(profile)));
    }
    PulseSequence::new(segs, parking_detuning(profile), p.repetition_period_s)
}

/// Populations after a Stark pulse of total length `hold`.
pub fn stark_swap(profile: &DeviceProfile, hold: f64, prep: Preparation) -> Result<SwapPoint> {
    if !(hold >= 0.0) {
        return Err(Error::InvalidInput("hold must be ≥ 0".into()));
    }
    let seq = swap_sequence(profile, prep, hold)?;
    let (m, s) = final_state(profile, &seq, initial_for(prep))?;
    let (p_e, n_m) = populations(&m, &s)?;
    Ok(SwapPoint { hold, p_e, n_m })
}

pub fn stark_swap_scan(profile: &DeviceProfile, holds: &[f64], prep: Preparation) -> Result<Vec<SwapPoint>> {
    holds.par_iter().map(|&h| stark_swap(profile, h, prep)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapEfficiency {
    pub eta: f64,
    pub hold: f64,
    pub warnings: Vec<Warning>,
}

/// Optimal swap: maximize n_m over the Stark-pulse length.
pub fn swap_efficiency(profile: &DeviceProfile, prep: Preparation) -> Result<SwapEfficiency> {
    let warnings = swap_warnings(profile);
    let g = profile.device.g_pe;
    if g <= 0.0 {
        return Err(Error::InvalidInput("swap needs g_pe > 0".into()));
    }
    let rise = profile.protocol.stark_rise_s.max(0.0);
    let half = PI / (2.0 * g);
    let (lo, hi) = (rise.max(1e-9), 2.0 * half + 2.0 * rise);
    let n = 120;
    let holds: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let scan = stark_swap_scan(profile, &holds, prep)?;
    let best = scan
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.n_m.total_cmp(&b.1.n_m))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    let step = holds[1] - holds[0];
    let (mut a, mut b) = (
        (holds[best] - step).max(lo),
        (holds[best] + step).min(hi),
    );
    // golden-section refinement
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |h: f64| stark_swap(profile, h, prep).map(|p| p.n_m);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > 0.02e-9 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d)?;
        }
    }
    let hold = 0.5 * (a + b);
    let eta = eval(hold)?;
    Ok(SwapEfficiency { eta, hold, warnings })
}

/// Damped vacuum Rabi oscillation of the phonon population over hold time.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumRabiFit {
    pub frequency_hz: f64,
    pub decay_rate: f64,
}

/// Fit a e^{−γt}(1 − c cos(ωt + φ)) to a hold-time sweep of n_m.
pub fn fit_vacuum_rabi(holds: &[f64], n_m: &[f64]) -> Result<VacuumRabiFit> {
    if distinct(holds) < 6 {
        return Err(Error::Fit("insufficient points".into()));
    }
    let w0 = dominant_frequency(holds, n_m).ok_or_else(|| Error::Fit("no oscillation found".into()))?;
    let mean = n_m.iter().sum::<f64>() / n_m.len() as f64;
    let model = |t: f64, q: &[f64]| q[0] * (-q[1] * t).exp() * (1.0 - q[2] * (q[3] * t + q[4]).cos());
    let mut best: Option<crate::fit::FitResult> = None;
    for k in 0..4 {
        let phi = k as f64 * 0.5 * PI;
        if let Ok(f) = levenberg_marquardt(holds, n_m, &[mean, 1e5, 1.0, w0, phi], &model) {
            if f.params[3].abs() > nyquist(holds) {
                continue;
            }
            if best.as_ref().is_none_or(|b| f.residual_ss < b.residual_ss) {
                best = Some(f);
            }
        }
    }
    let f = best.ok_or_else(|| Error::Fit("vacuum Rabi fit failed".into()))?;
    Ok(VacuumRabiFit {
        frequency_hz: f.params[3].abs() / (2.0 * PI),
        decay_rate: f.params[1],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhononT1 {
    pub delays: Vec<f64>,
    pub p_e: Vec<f64>,
    /// Fitted T1, or the longest delay when only a lower bound is available.
    pub t1: f64,
    pub t1_sigma: f64,
    pub lower_bound: bool,
}

/// Largest angular frequency resolvable on the (uniform) grid `xs`.
fn nyquist(xs: &[f64]) -> f64 {
    let span = xs.iter().copied().fold(f64::MIN, f64::max) - xs.iter().copied().fold(f64::MAX, f64::min);
    PI * (xs.len() - 1) as f64 / span
}

fn distinct(xs: &[f64]) -> usize {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// `n + 1` delays spaced by the qubit–phonon exchange period at the parking
/// point, so the residual dispersive oscillation is sampled at a fixed phase.
pub fn phonon_t1_delays(profile: &DeviceProfile, n: usize) -> Vec<f64> {
    let d = parking_detuning(profile);
    let g = profile.device.g_pe;
    let period = 2.0 * PI / (d * d + 4.0 * g * g).sqrt();
    (0..=n).map(|k| k as f64 * period).collect()
}

/// Double-swap phonon lifetime: π-pulse, swap, wait, swap back, read the qubit.
pub fn phonon_t1(profile: &DeviceProfile, delays: &[f64]) -> Result<PhononT1> {
    if distinct(delays) < 3 {
        return Err(Error::Fit("insufficient points".into()));
    }
    if delays.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidInput("delays must be ≥ 0".into()));
    }
    let p = &profile.protocol;
    let prep = Preparation::PiPulse;
    let p_e = delays
        .par_iter()
        .map(|&delay| {
            let mut segs = preparation_segments(profile, prep, p.pi_time_s);
            let stark = PulseSegment::stark(angular(p.stark_shift_hz), p.stark_rise_s, p.swap_hold_s);
            segs.push(stark.clone());
            if delay > 0.0 {
                segs.push(PulseSegment::idle(delay));
            }
            segs.push(stark);
            let seq = PulseSequence::new(segs, parking_detuning(profile), p.repetition_period_s)?;
            let (m, s) = final_state(profile, &seq, None)?;
            s.expectation(&m.ops.sigma_ee)
        })
        .collect::<Result<Vec<_>>>()?;

    let max_delay = delays.iter().copied().fold(0.0, f64::max);
    let min_delay = delays.iter().copied().fold(f64::MAX, f64::min);
    let first = p_e[delays.iter().position(|&d| d == min_delay).unwrap()];
    let last = p_e[delays.iter().position(|&d| d == max_delay).unwrap()];
    let model = |t: f64, q: &[f64]| q[0] * (-q[1] * t).exp() + q[2];
    let guess = [first - last.min(first * 0.5), 3.0 / (max_delay - min_delay), last.min(first * 0.5)];
    let fit = levenberg_marquardt(delays, &p_e, &guess, &model)?;
    let rate = fit.params[1];
    let amp = fit.params[0];
    let (t1, sigma, lower) = if rate > 0.0 && amp > 0.0 && 1.0 / rate <= max_delay {
        (1.0 / rate, fit.sigma(1) / (rate * rate), false)
    } else {
        (max_delay, f64::NAN, true)
    };
    Ok(PhononT1 {
        delays: delays.to_vec(),
        p_e,
        t1,
        t1_sigma: sigma,
        lower_bound: lower,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ramsey {
    pub delays: Vec<f64>,
    /// P_e(final phase 0) − P_e(final phase π).
    pub signal: Vec<f64>,
    /// Fitted T2*; `None` when the envelope shows no decay over the scan.
    pub t2_star: Option<f64>,
    /// Fitted fringe frequency, Hz.
    pub fringe_hz: f64,
    pub amplitude: f64,
}

/// Ramsey fringes at the idle bias with π/2 pulses detuned by `detuning` (rad/s).
pub fn ramsey(profile: &DeviceProfile, delays: &[f64], detuning: f64) -> Result<Ramsey> {
    if distinct(delays) < 6 {
        return Err(Error::Fit("insufficient points".into()));
    }
    let p = &profile.protocol;
    let idle = profile.idle_detuning();
    let omega = calibrated_rabi(profile, idle);
    let drive_det = dressed_qubit_detuning(idle, profile.device.g_pe) + detuning;
    let half = 0.5 * p.pi_time_s;
    let run = |delay: f64, phase: f64| -> Result<f64> {
        let mut segs = vec![PulseSegment::drive(omega, drive_det, 0.0, half)];
        if delay > 0.0 {
            segs.push(PulseSegment::idle(delay));
        }
        segs.push(PulseSegment::drive(omega, drive_det, phase, half));
        let seq = PulseSequence::new(segs, idle, p.repetition_period_s)?;
        let (m, s) = final_state(profile, &seq, None)?;
        s.expectation(&m.ops.sigma_ee)
    };
    let signal = delays
        .par_iter()
        .map(|&d| Ok(run(d, 0.0)? - run(d, PI)?))
        .collect::<Result<Vec<_>>>()?;

    let span = delays.iter().copied().fold(0.0, f64::max) - delays.iter().copied().fold(f64::MAX, f64::min);
    let w0 = dominant_frequency(delays, &signal).ok_or_else(|| Error::Fit("no fringes".into()))?;
    let amp0 = signal.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let model = |t: f64, q: &[f64]| q[0] + q[1] * (-q[3] * t).exp() * (q[2] * t + q[4]).cos();
    let mut best = None;
    for k in 0..4 {
        let phi = k as f64 * 0.5 * PI;
        if let Ok(f) = levenberg_marquardt(delays, &signal, &[0.0, amp0, w0, 1.0 / span, phi], &model) {
            if f.params[2].abs() > nyquist(delays) {
                continue;
            }
            if best.as_ref().is_none_or(|b: &crate::fit::FitResult| f.residual_ss < b.residual_ss) {
                best = Some(f);
            }
        }
    }
    let f = best.ok_or_else(|| Error::Fit("Ramsey fit failed".into()))?;
    let gamma = f.params[3];
    let t2 = (gamma > 0.0 && 1.0 / gamma < 10.0 * span).then(|| 1.0 / gamma);
    Ok(Ramsey {
        delays: delays.to_vec(),
        signal,
        t2_star: t2,
        fringe_hz: f.params[2].abs() / (2.0 * PI),
        amplitude: f.params[1].abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransductionOptions {
    pub tau_ro: f64,
    pub hold: f64,
    pub heating: bool,
}

impl TransductionOptions {
    pub fn from_profile(profile: &DeviceProfile) -> Self {
        Self {
            tau_ro: profile.protocol.tau_ro_s,
            hold: profile.protocol.swap_hold_s,
            heating: true,
        }
    }
}

/// Readout-entry state and scattered-photon fluxes over the counting window.
#[derive(Debug, Clone, PartialEq)]
pub struct TransductionSequence {
    pub qubit_drive: f64,
    /// Occupancy entering readout.
    pub occupancy: f64,
    pub p_e_at_readout: f64,
    /// Readout start within the sequence, s.
    pub readout_start: f64,
    /// Times relative to readout start.
    pub times: Vec<f64>,
    pub n_c: Vec<f64>,
    pub gamma_om: Vec<f64>,
    pub n_m: Vec<f64>,
    /// Anti-Stokes (red) detected flux, counts/s.
    pub flux_red: Vec<f64>,
    /// Stokes (blue) detected flux, counts/s.
    pub flux_blue: Vec<f64>,
    pub warnings: Vec<Warning>,
}

impl TransductionSequence {
    fn interp(&self, y: &[f64], t: f64) -> f64 {
        if t <= 0.0 {
            return y[0];
        }
        let h = self.times[1] - self.times[0];
        let x = t / h;
        let i = (x.floor() as usize).min(self.times.len() - 2);
        let f = (x - i as f64).min(1.0);
        y[i] * (1.0 - f) + y[i + 1] * f
    }

    pub fn red_flux_at(&self, t: f64) -> f64 {
        self.interp(&self.flux_red, t)
    }

    pub fn blue_flux_at(&self, t: f64) -> f64 {
        self.interp(&self.flux_blue, t)
    }

    /// Expected red counts per trial.
    pub fn mean_red_counts(&self) -> f64 {
        trapezoid(&self.times, &self.flux_red)
    }

    pub fn mean_blue_counts(&self) -> f64 {
        trapezoid(&self.times, &self.flux_blue)
    }

    /// γ_om-weighted mean occupancy over the window.
    pub fn weighted_occupancy(&self) -> f64 {
        let num: Vec<f64> = self.gamma_om.iter().zip(&self.n_m).map(|(g, n)| g * n).collect();
        let den = trapezoid(&self.times, &self.gamma_om);
        if den > 0.0 {
            trapezoid(&self.times, &num) / den
        } else {
            0.0
        }
    }
}

/// Readout envelope relative to readout start.
pub fn readout_segment(profile: &DeviceProfile) -> PulseSegment {
    let p = &profile.protocol;
    PulseSegment::readout(p.n_c_peak, p.readout_rise_s, p.readout_fall_s, p.readout_duration_s)
}

/// Grid over the counting window `[0, τ]`.
pub fn readout_grid(tau: f64) -> Vec<f64> {
    let n = (tau / READOUT_DT).round().max(1.0) as usize;
    (0..=n).map(|k| tau * k as f64 / n as f64).collect()
}

/// Pulse sequence of one transduction repetition: drive, Stark swap of
/// length `hold` (omitted when zero), red-sideband readout.
pub fn transduction_pulses(profile: &DeviceProfile, qubit_drive: f64, hold: f64) -> Result<PulseSequence> {
    let p = &profile.protocol;
    let mut segs = preparation_segments(profile, Preparation::PiPulse, qubit_drive);
    if hold > 0.0 {
        segs.push(PulseSegment::stark(angular(p.stark_shift_hz), p.stark_rise_s, hold));
    }
    segs.push(readout_segment(profile));
    PulseSequence::new(segs, parking_detuning(profile), p.repetition_period_s)
}

/// Drive the qubit for `qubit_drive` at the parking point, swap, then read
/// out the mechanics with the red-sideband pulse.
pub fn transduction_sequence(
    profile: &DeviceProfile,
    qubit_drive: f64,
    opts: &TransductionOptions,
) -> Result<TransductionSequence> {
    if !(opts.tau_ro > 0.0) {
        return Err(Error::InvalidInput("τ_ro must be > 0".into()));
    }
    if !(qubit_drive >= 0.0) {
        return Err(Error::InvalidInput("qubit drive must be ≥ 0".into()));
    }
    let mut warnings = swap_warnings(profile);
    let seq = transduction_pulses(profile, qubit_drive, opts.hold)?;
    let readout_start = seq.start_of(seq.first_readout().expect("readout segment present"));

    let recovery = profile.qp.recovery_time();
    if seq.repetition_period < recovery {
        warnings.push(emit(Warning::RepetitionBelowRecovery {
            period: seq.repetition_period,
            recovery,
        }));
    }

    let model = build_model(&profile.device, &seq, &model_options(profile))?;
    let rho0 = DensityMatrix::ground(&model.ops);
    let state = if readout_start > 0.0 {
        let traj = evolve(&model, &rho0, &boundary_grid(&seq, readout_start), &integrator_settings(profile))?;
        traj.states.into_iter().last().expect("final state")
    } else {
        rho0
    };
    let (p_e, n0) = populations(&model, &state)?;

    let dev = &profile.device;
    let mode = dev.mode();
    let per_photon = 4.0 * mode.g_om * mode.g_om / dev.kappa_o();
    let env = readout_segment(profile);
    let env_seq = PulseSequence::new(vec![env], 0.0, f64::INFINITY)?;
    let n_c_fn = |t: f64| env_seq.photons(t);
    let g_om_fn = |t: f64| per_photon * env_seq.photons(t);
    let heating = if opts.heating {
        profile.heating.clone()
    } else {
        HeatingModel::none()
    };
    let times = readout_grid(opts.tau_ro);
    let n_m = heated_occupancy(&heating, &n_c_fn, &g_om_fn, &times, mode.kappa_m_t1, dev.n_f(), n0)?;
    let n_c: Vec<f64> = times.iter().map(|&t| n_c_fn(t)).collect();
    let gamma_om: Vec<f64> = n_c.iter().map(|n| per_photon * n).collect();
    let eff = profile.chain.per_phonon_efficiency();
    let dark = profile.chain.dark_rate;
    let flux_red = gamma_om.iter().zip(&n_m).map(|(g, n)| dark + eff * g * n).collect();
    let flux_blue = gamma_om.iter().zip(&n_m).map(|(g, n)| dark + eff * g * (n + 1.0)).collect();
    Ok(TransductionSequence {
        qubit_drive,
        occupancy: n0,
        p_e_at_readout: p_e,
        readout_start,
        times,
        n_c,
        gamma_om,
        n_m,
        flux_red,
        flux_blue,
        warnings,
    })
}
