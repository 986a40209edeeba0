//! Monte Carlo photon counting and the estimators built on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::{linear_least_squares, Scale};
use crate::rng::poisson_total;
use crate::warnings::{emit, Warning};

/// z-score of the reported intervals (one standard deviation).
pub const Z_SCORE: f64 = 1.0;

/// Mean per-trial count above which the SPD would see multiple photons.
pub const MULTI_PHOTON_THRESHOLD: f64 = 0.1;

/// Point estimate with an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn symmetric(value: f64, sigma: f64) -> Self {
        Self {
            value,
            lo: value - sigma,
            hi: value + sigma,
        }
    }

    pub fn exact(value: f64) -> Self {
        Self::symmetric(value, 0.0)
    }

    /// Half-width, averaged over the two sides.
    pub fn sigma(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Wilson score interval for k successes in n trials.
pub fn wilson(k: u64, n: u64, z: f64) -> Estimate {
    let nf = n as f64;
    let p = (k as f64 / nf).min(1.0);
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    Estimate {
        value: k as f64 / nf,
        lo: (center - half).max(0.0),
        hi: center + half,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub trials: u64,
    pub detected: u64,
    /// Counting window τ_ro, s.
    pub window: f64,
    pub seed: u64,
    /// Expected counts per trial the record was drawn from.
    pub mean_per_trial: f64,
    pub warnings: Vec<Warning>,
}

impl CountRecord {
    pub fn new(trials: u64, detected: u64, window: f64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidInput("count record needs at least one trial".into()));
        }
        Ok(Self {
            trials,
            detected,
            window,
            seed,
            mean_per_trial: f64::NAN,
            warnings: Vec::new(),
        })
    }

    /// Counts per trial.
    pub fn rate(&self) -> f64 {
        self.detected as f64 / self.trials as f64
    }

    pub fn interval(&self) -> Estimate {
        wilson(self.detected, self.trials, Z_SCORE)
    }
}

/// Integrate a flux over `[0, τ]` with composite Simpson.
pub fn integrate_flux(flux: &dyn Fn(f64) -> f64, tau: f64) -> Result<f64> {
    const N: usize = 2000;
    if tau <= 0.0 {
        return Ok(0.0);
    }
    let h = tau / N as f64;
    let mut s = 0.0;
    for k in 0..=N {
        let f = flux(k as f64 * h);
        if !(f >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "flux must be non-negative and finite, got {f} at t = {:e} s",
                k as f64 * h
            )));
        }
        let w = if k == 0 || k == N {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * f;
    }
    Ok(s * h / 3.0)
}

/// Draw the total count over `trials` windows of a Poisson process with the
/// given flux (counts/s) on `[0, τ]`.
pub fn simulate_counts(
    flux: &dyn Fn(f64) -> f64,
    tau: f64,
    trials: u64,
    seed: u64,
) -> Result<CountRecord> {
    let mean = integrate_flux(flux, tau)?;
    simulate_counts_from_mean(mean, tau, trials, seed)
}

pub fn simulate_counts_from_mean(mean: f64, tau: f64, trials: u64, seed: u64) -> Result<CountRecord> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be > 0".into()));
    }
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::InvalidInput(format!("mean counts per trial must be ≥ 0, got {mean}")));
    }
    let mut warnings = Vec::new();
    if mean > MULTI_PHOTON_THRESHOLD {
        warnings.push(emit(Warning::MultiPhoton {
            mean_per_trial: mean,
        }));
    }
    let detected = poisson_total(mean, trials, seed);
    Ok(CountRecord {
        trials,
        detected,
        window: tau,
        seed,
        mean_per_trial: mean,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransductionResult {
    pub p_pi: Estimate,
    pub p_0: Estimate,
    pub eta_t: Estimate,
    /// Absent when η_t ≤ 0.
    pub n_add: Option<Estimate>,
    /// False when η_t ≤ 0: no significant transduction.
    pub significant: bool,
}

/// η_t = P_π − P_0 and n_add = P_0/η_t from two probabilities with 1σ errors.
pub fn estimate_from_probabilities(p_pi: Estimate, p_0: Estimate) -> TransductionResult {
    let eta = p_pi.value - p_0.value;
    let s_pi = p_pi.sigma();
    let s_0 = p_0.sigma();
    let eta_t = Estimate::symmetric(eta, s_pi.hypot(s_0));
    let significant = eta > 0.0;
    let n_add = significant.then(|| {
        let n = p_0.value / eta;
        let e2 = eta * eta;
        // ∂n/∂P0 = Pπ/η², ∂n/∂Pπ = −P0/η²
        let s = ((p_pi.value * s_0 / e2).powi(2) + (p_0.value * s_pi / e2).powi(2)).sqrt();
        Estimate::symmetric(n, s)
    });
    if !significant {
        log::warn!("no significant transduction: η_t = {eta:.3e}");
    }
    TransductionResult {
        p_pi,
        p_0,
        eta_t,
        n_add,
        significant,
    }
}

/// Estimate transduction efficiency and added noise from the π and no-π records.
pub fn transduction_estimate(with_pi: &CountRecord, without_pi: &CountRecord) -> Result<TransductionResult> {
    if (with_pi.window - without_pi.window).abs() > 1e-15 {
        return Err(Error::Estimator(format!(
            "counting windows differ: {:e} s vs {:e} s",
            with_pi.window, without_pi.window
        )));
    }
    Ok(estimate_from_probabilities(with_pi.interval(), without_pi.interval()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalRabiFit {
    pub offset: Estimate,
    pub amplitude: Estimate,
    pub phase: f64,
    pub period: f64,
    /// Fitted minimum, offset − amplitude.
    pub background: Estimate,
    /// Fitted maximum, offset + amplitude.
    pub maximum: Estimate,
}

/// Fit c + a cos(2πτ/T) + b sin(2πτ/T) with the period T fixed. `sigmas`
/// gives per-point 1σ errors; without them the noise is taken from the residuals.
/// The amplitude interval is the 90% joint region of (a, b).
pub fn optical_rabi(
    durations: &[f64],
    rates: &[f64],
    sigmas: Option<&[f64]>,
    period: f64,
) -> Result<OpticalRabiFit> {
    let n = durations.len();
    if n < 4 {
        return Err(Error::Fit(format!("optical Rabi fit needs at least 4 durations, got {n}")));
    }
    if rates.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rates.len(),
        });
    }
    if !(period > 0.0) {
        return Err(Error::Fit("period must be positive".into()));
    }
    let w = std::f64::consts::TAU / period;
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => (w * durations[i]).cos(),
        _ => (w * durations[i]).sin(),
    });
    let y = DVector::from_column_slice(rates);
    let weights = match sigmas {
        Some(s) => {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.len(),
                });
            }
            if s.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Fit("point errors must be positive".into()));
            }
            Some(DVector::from_iterator(n, s.iter().map(|v| 1.0 / (v * v))))
        }
        None => None,
    };
    let scale = if weights.is_some() {
        Scale::Absolute
    } else {
        Scale::Residual
    };
    let f = linear_least_squares(&design, &y, weights.as_ref(), scale)?;
    let (c, a, b) = (f.params[0], f.params[1], f.params[2]);
    let amp = a.hypot(b);
    let cov = &f.covariance;

    // radius of the 90% region of a 2D Gaussian
    let r90 = (-2.0 * 0.1f64.ln()).sqrt();
    let s_ab = (0.5 * (cov[(1, 1)] + cov[(2, 2)])).max(0.0).sqrt();
    let amplitude = Estimate {
        value: amp,
        lo: (amp - r90 * s_ab).max(0.0),
        hi: amp + r90 * s_ab,
    };

    // gradient of A with respect to (a, b); direction undefined at A = 0
    let (ua, ub) = if amp > 0.0 { (a / amp, b / amp) } else { (0.0, 0.0) };
    let var_a = ua * ua * cov[(1, 1)] + ub * ub * cov[(2, 2)] + 2.0 * ua * ub * cov[(1, 2)];
    let cov_c_a = ua * cov[(0, 1)] + ub * cov[(0, 2)];
    let var_c = cov[(0, 0)];
    let s_min = (var_c + var_a - 2.0 * cov_c_a).max(0.0).sqrt();
    let s_max = (var_c + var_a + 2.0 * cov_c_a).max(0.0).sqrt();

    Ok(OpticalRabiFit {
        offset: Estimate::symmetric(c, var_c.max(0.0).sqrt()),
        amplitude,
        phase: (-b).atan2(a),
        period,
        background: Estimate::symmetric(c - amp, s_min),
        maximum: Estimate::symmetric(c + amp, s_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measured_estimator_identity() {
        let r = estimate_from_probabilities(Estimate::exact(1.38e-5), Estimate::exact(0.50e-5));
        assert!((r.eta_t.value - 0.88e-5).abs() < 1e-18);
        assert!((r.n_add.unwrap().value - 0.5681818181818182).abs() < 1e-12);
        assert!(r.significant);
    }

    #[test]
    fn equal_probabilities_flagged() {
        let r = estimate_from_probabilities(Estimate::exact(1e-5), Estimate::exact(1e-5));
        assert!(!r.significant);
        assert!(r.n_add.is_none());
    }

    #[test]
    fn zero_flux_zero_counts() {
        let r = simulate_counts(&|_| 0.0, 38e-9, 1_000_000_000, 1).unwrap();
        assert_eq!(r.detected, 0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn dark_count_example() {
        let r = simulate_counts(&|_| 10.0, 38e-9, 1_000_000_000, 42).unwrap();
        assert!((r.mean_per_trial * 1e9 - 380.0).abs() < 1e-6);
        assert!((r.detected as f64 - 380.0).abs() < 3.0 * 380f64.sqrt());
    }

    #[test]
    fn multi_photon_warning() {
        let r = simulate_counts_from_mean(0.2, 1e-7, 1000, 1).unwrap();
        assert!(matches!(r.warnings[0], Warning::MultiPhoton { .. }));
    }

    #[test]
    fn negative_flux_rejected() {
        assert!(simulate_counts(&|_| -1.0, 1e-8, 10, 1).is_err());
    }

    #[test]
    fn wilson_brackets_rate() {
        let e = wilson(380, 1_000_000_000, 1.0);
        assert!(e.lo < e.value && e.value < e.hi);
        // large-count limit: ≈ √k/N
        assert!((e.sigma() - 380f64.sqrt() / 1e9).abs() < 0.01 * 380f64.sqrt() / 1e9);
        let z = wilson(0, 100, 1.0);
        assert_eq!(z.lo, 0.0);
        assert!(z.hi > 0.0);
    }

    #[test]
    fn mismatched_windows_rejected() {
        let a = CountRecord::new(10, 1, 38e-9, 1).unwrap();
        let b = CountRecord::new(10, 1, 40e-9, 1).unwrap();
        assert!(matches!(transduction_estimate(&a, &b), Err(Error::Estimator(_))));
    }

    #[test]
    fn optical_rabi_noiseless_recovery() {
        let period = 64e-9;
        let d: Vec<f64> = (0..12).map(|k| k as f64 * 8e-9).collect();
        let w = std::f64::consts::TAU / period;
        let y: Vec<f64> = d.iter().map(|t| 1.0e-5 - 0.35e-5 * (w * t).cos()).collect();
        let f = optical_rabi(&d, &y, None, period).unwrap();
        assert!((f.offset.value - 1.0e-5).abs() < 1e-6 * 1e-5);
        assert!((f.amplitude.value - 0.35e-5).abs() < 1e-6 * 0.35e-5);
        assert!((f.background.value - 0.65e-5).abs() < 1e-6 * 1e-5);
        assert!((f.maximum.value - 1.35e-5).abs() < 1e-6 * 1e-5);
    }

    #[test]
    fn optical_rabi_zero_amplitude_covers_zero() {
        let d: Vec<f64> = (0..10).map(|k| k as f64 * 7e-9).collect();
        // deterministic alternating noise
        let y: Vec<f64> = (0..10).map(|k| 1e-5 + if k % 3 == 0 { 1e-7 } else { -5e-8 }).collect();
        let s = vec![1e-7; 10];
        let f = optical_rabi(&d, &y, Some(&s), 64e-9).unwrap();
        assert!(f.amplitude.contains(0.0), "{:?}", f.amplitude);
    }

    #[test]
    fn optical_rabi_needs_four_points() {
        assert!(matches!(
            optical_rabi(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0], None, 4.0),
            Err(Error::Fit(_))
        ));
    }
}
