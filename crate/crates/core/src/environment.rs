//! Optical-absorption heating of the mechanics and quasi-particle recovery of the qubit.

use crate::error::{Error, Result};
use crate::sequence::PulseSequence;

/// Single hot bath switched on in proportion to the intracavity photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatingModel {
    /// γ_p per intracavity photon, rad/s.
    pub gamma_p_per_photon: f64,
    /// Hot-bath occupancy.
    pub n_p: f64,
    /// Delay between the optical envelope and the bath coupling, s.
    pub onset_delay: f64,
}

impl HeatingModel {
    pub fn none() -> Self {
        Self {
            gamma_p_per_photon: 0.0,
            n_p: 0.0,
            onset_delay: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_p_per_photon", self.gamma_p_per_photon),
            ("n_p", self.n_p),
            ("onset_delay", self.onset_delay),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("heating {name} must be ≥ 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Hot-bath coupling γ_p(t) for an envelope `n_c`.
    pub fn gamma_p(&self, n_c: &dyn Fn(f64) -> f64, t: f64) -> f64 {
        self.gamma_p_per_photon * n_c(t - self.onset_delay)
    }
}

/// Largest sub-step used when integrating the occupancy rate equation.
const OCC_DT: f64 = 0.05e-9;

/// Phonon occupancy under optical readout and heating:
///
/// dn/dt = −(κ + γ_om(t) + γ_p(t)) n + κ n_f + γ_p(t) n_p
///
/// starting from `n0` at `t_grid[0]`.
#[allow(clippy::too_many_arguments)]
pub fn heated_occupancy(
    model: &HeatingModel,
    n_c: &dyn Fn(f64) -> f64,
    gamma_om: &dyn Fn(f64) -> f64,
    t_grid: &[f64],
    kappa_m_t1: f64,
    n_f: f64,
    n0: f64,
) -> Result<Vec<f64>> {
    model.validate()?;
    if t_grid.is_empty() {
        return Ok(Vec::new());
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
    }
    let deriv = |t: f64, n: f64| {
        let gp = model.gamma_p(n_c, t);
        let loss = kappa_m_t1 + gamma_om(t) + gp;
        -loss * n + kappa_m_t1 * n_f + gp * model.n_p
    };
    let mut out = Vec::with_capacity(t_grid.len());
    let mut n = n0;
    out.push(n);
    for w in t_grid.windows(2) {
        let steps = ((w[1] - w[0]) / OCC_DT).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / steps as f64;
        for k in 0..steps {
            let t = w[0] + k as f64 * h;
            let k1 = deriv(t, n);
            let k2 = deriv(t + 0.5 * h, n + 0.5 * h * k1);
            let k3 = deriv(t + 0.5 * h, n + 0.5 * h * k2);
            let k4 = deriv(t + h, n + h * k3);
            n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if !n.is_finite() {
            return Err(Error::Integration {
                invariant: "finite occupancy",
                time_s: w[1],
                value: n,
            });
        }
        out.push(n.max(0.0));
    }
    Ok(out)
}

/// Steady state of [`heated_occupancy`] under constant rates.
pub fn heated_steady_state(kappa: f64, n_f: f64, gamma_om: f64, gamma_p: f64, n_p: f64) -> f64 {
    (kappa * n_f + gamma_p * n_p) / (kappa + gamma_om + gamma_p)
}

/// γ_om-weighted mean of `n` over the grid, the quantity a sideband-asymmetry
/// measurement reports.
pub fn weighted_mean_occupancy(t_grid: &[f64], n: &[f64], gamma_om: &dyn Fn(f64) -> f64) -> f64 {
    let w: Vec<f64> = t_grid.iter().map(|&t| gamma_om(t)).collect();
    let num: Vec<f64> = w.iter().zip(n).map(|(a, b)| a * b).collect();
    let den = trapezoid(t_grid, &w);
    if den == 0.0 {
        0.0
    } else {
        trapezoid(t_grid, &num) / den
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Solve for γ_p per photon (with `n_p` fixed) such that the γ_om-weighted
/// mean occupancy over the grid equals `target`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_heating(
    n_p: f64,
    onset_delay: f64,
    target: f64,
    n_c: &dyn Fn(f64) -> f64,
    gamma_om: &dyn Fn(f64) -> f64,
    t_grid: &[f64],
    kappa_m_t1: f64,
    n_f: f64,
) -> Result<HeatingModel> {
    if !(target > n_f && target < n_p) {
        return Err(Error::InvalidInput(format!(
            "heating target {target} must lie between n_f = {n_f} and n_p = {n_p}"
        )));
    }
    let mean_for = |g: f64| -> Result<f64> {
        let m = HeatingModel {
            gamma_p_per_photon: g,
            n_p,
            onset_delay,
        };
        let n = heated_occupancy(&m, n_c, gamma_om, t_grid, kappa_m_t1, n_f, n_f)?;
        Ok(weighted_mean_occupancy(t_grid, &n, gamma_om))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean_for(hi)? < target {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::InvalidInput("heating target unreachable".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_for(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(HeatingModel {
        gamma_p_per_photon: 0.5 * (lo + hi),
        n_p,
        onset_delay,
    })
}

/// Quasi-particle recovery after an optical pulse.
///
/// The QP density relaxes as x(t) = x0·e^{−t/τ_qp}; the qubit Rabi decay rate
/// is proportional to x, and the measured contrast is the fraction of coherent
/// amplitude surviving the Rabi window: C = exp(−Γ0 e^{−t/τ_qp} T_window).
#[derive(Debug, Clone, PartialEq)]
pub struct QpModel {
    pub tau_qp: f64,
    /// Extra Rabi decay rate right after the pulse, Γ0 = rate per density × x0, 1/s.
    pub injected_decay_rate: f64,
    pub rabi_window: f64,
    /// Fraction of full contrast that counts as recovered.
    pub threshold: f64,
}

impl QpModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_qp > 0.0 && self.tau_qp.is_finite()) {
            return Err(Error::InvalidInput(format!("τ_qp must be > 0, got {}", self.tau_qp)));
        }
        if !(self.injected_decay_rate >= 0.0) {
            return Err(Error::InvalidInput("injected decay rate must be ≥ 0".into()));
        }
        if !(self.rabi_window > 0.0) {
            return Err(Error::InvalidInput("Rabi window must be > 0".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidInput(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// QP density relative to the injected value.
    pub fn density(&self, delay: f64) -> f64 {
        (-delay / self.tau_qp).exp()
    }

    /// Contrast as a function of relative QP density.
    pub fn contrast_at_density(&self, x: f64) -> f64 {
        (-self.injected_decay_rate * x * self.rabi_window).exp()
    }

    pub fn contrast(&self, delay: f64) -> f64 {
        self.contrast_at_density(self.density(delay))
    }

    /// Delay after which the contrast first exceeds the threshold.
    pub fn recovery_time(&self) -> f64 {
        let a = self.injected_decay_rate * self.rabi_window;
        let b = -self.threshold.ln();
        if a <= b {
            0.0
        } else {
            self.tau_qp * (a / b).ln()
        }
    }
}

/// Rabi contrast at each delay.
pub fn qp_recovery(model: &QpModel, delays: &[f64]) -> Vec<f64> {
    delays.iter().map(|&d| model.contrast(d)).collect()
}

/// First delay of a sampled recovery curve whose contrast reaches the threshold.
pub fn first_recovered_delay(model: &QpModel, delays: &[f64]) -> Option<f64> {
    delays
        .iter()
        .copied()
        .find(|&d| model.contrast(d) >= model.threshold)
}

/// Injected decay rate Γ0 that makes the recovery time equal `recovery`.
pub fn calibrate_injection(tau_qp: f64, rabi_window: f64, threshold: f64, recovery: f64) -> f64 {
    -threshold.ln() * (recovery / tau_qp).exp() / rabi_window
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepetitionBudget {
    pub sequence_duration: f64,
    pub recovery_time: f64,
    pub min_period: f64,
    pub max_rate: f64,
}

impl RepetitionBudget {
    pub fn admits(&self, period: f64) -> bool {
        period >= self.min_period
    }
}

/// Maximum repetition rate: each repetition must cover the sequence and, if
/// it contains light, the QP recovery.
pub fn repetition_budget(seq: &PulseSequence, qp: &QpModel) -> RepetitionBudget {
    let duration = seq.total_duration();
    let recovery = if seq.peak_photons() > 0.0 {
        qp.recovery_time()
    } else {
        0.0
    };
    let min_period = duration.max(recovery);
    RepetitionBudget {
        sequence_duration: duration,
        recovery_time: recovery,
        min_period,
        max_rate: if min_period > 0.0 { 1.0 / min_period } else { f64::INFINITY },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::PulseSegment;
    use proptest::prelude::*;

    fn device_qp() -> QpModel {
        crate::config::paper_device().qp
    }

    #[test]
    fn zero_power_keeps_fridge_occupancy() {
        let m = HeatingModel {
            gamma_p_per_photon: 5e4,
            n_p: 10.0,
            onset_delay: 0.0,
        };
        let grid: Vec<f64> = (0..=38).map(|k| k as f64 * 1e-9).collect();
        let n = heated_occupancy(&m, &|_| 0.0, &|_| 0.0, &grid, 2.8e6, 1e-7, 1e-7).unwrap();
        assert!(n.iter().all(|&x| (x - 1e-7).abs() < 1e-15));
    }

    #[test]
    fn steady_state_matches_closed_form() {
        let m = HeatingModel {
            gamma_p_per_photon: 2e4,
            n_p: 8.0,
            onset_delay: 0.0,
        };
        let (kappa, n_f, g_om, n_c) = (2.8e6, 0.01, 1.2e5, 44.0);
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 200e-9).collect();
        let n = heated_occupancy(&m, &|_| n_c, &|_| g_om, &grid, kappa, n_f, 0.0).unwrap();
        let ss = heated_steady_state(kappa, n_f, g_om, m.gamma_p_per_photon * n_c, m.n_p);
        assert!((n.last().unwrap() - ss).abs() < 1e-9 * ss.max(1.0), "{} vs {ss}", n.last().unwrap());
        assert!(n.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn doubling_gamma_p_doubles_initial_slope() {
        let grid = [0.0, 0.1e-9];
        let slope = |g: f64| {
            let m = HeatingModel {
                gamma_p_per_photon: g,
                n_p: 10.0,
                onset_delay: 0.0,
            };
            heated_occupancy(&m, &|_| 44.0, &|_| 1.2e5, &grid, 2.8e6, 0.0, 0.0).unwrap()[1] / 0.1e-9
        };
        let r = slope(2e4) / slope(1e4);
        assert!((r - 2.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn heating_calibration_hits_target() {
        let grid: Vec<f64> = (0..=380).map(|k| k as f64 * 0.1e-9).collect();
        let ramp = |t: f64| 44.0 * (t / 20e-9).clamp(0.0, 1.0);
        let g_om = move |t: f64| 2757.0 * ramp(t);
        let m = calibrate_heating(10.0, 0.0, 0.64, &ramp, &g_om, &grid, 2.8e6, 0.0).unwrap();
        let n = heated_occupancy(&m, &ramp, &g_om, &grid, 2.8e6, 0.0, 0.0).unwrap();
        assert!((weighted_mean_occupancy(&grid, &n, &g_om) - 0.64).abs() < 1e-6);
    }

    #[test]
    fn qp_recovery_measured_times() {
        let qp = device_qp();
        let t = qp.recovery_time();
        assert!((t - 8e-3).abs() < 0.05e-3, "{t}");
        let trapped = QpModel {
            tau_qp: 320e-6,
            ..qp.clone()
        };
        let t2 = trapped.recovery_time();
        assert!(t2 > 1.5e-3 && t2 < 2.2e-3, "{t2}");
        let ratio = t / t2;
        assert!((4.0..=5.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn sampled_recovery_matches_analytic() {
        let qp = device_qp();
        let delays: Vec<f64> = (0..=2000).map(|k| k as f64 * 10e-6).collect();
        let d = first_recovered_delay(&qp, &delays).unwrap();
        assert!(d >= qp.recovery_time() && d - qp.recovery_time() <= 10e-6);
    }

    #[test]
    fn zero_injection_is_flat() {
        let qp = QpModel {
            injected_decay_rate: 0.0,
            ..device_qp()
        };
        assert!(qp_recovery(&qp, &[0.0, 1e-6, 1e-3]).iter().all(|&c| c == 1.0));
        assert_eq!(qp.recovery_time(), 0.0);
    }

    #[test]
    fn repetition_budget_device() {
        let qp = device_qp();
        let seq = PulseSequence::new(
            vec![
                PulseSegment::drive(1e8, 0.0, 0.0, 32e-9),
                PulseSegment::stark(6e7, 15e-9, 104e-9),
                PulseSegment::readout(44.0, 20e-9, 20e-9, 80e-9),
            ],
            0.0,
            0.01,
        )
        .unwrap();
        let b = repetition_budget(&seq, &qp);
        assert!(b.max_rate >= 100.0 && b.max_rate <= 130.0, "{}", b.max_rate);
        assert!(b.admits(seq.repetition_period));

        let dark = PulseSequence::new(vec![PulseSegment::idle(200e-9)], 0.0, 1.0).unwrap();
        let b = repetition_budget(&dark, &qp);
        assert!((b.max_rate - 5e6).abs() < 1.0);
    }

    proptest! {
        #[test]
        fn contrast_monotone_in_delay(d1 in 0.0..20e-3f64, d2 in 0.0..20e-3f64) {
            let qp = device_qp();
            let (a, b) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(qp.contrast(a) <= qp.contrast(b));
        }

        #[test]
        fn contrast_monotone_decreasing_in_density(x1 in 0.0..2.0f64, x2 in 0.0..2.0f64) {
            let qp = device_qp();
            let (a, b) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
            prop_assert!(qp.contrast_at_density(a) >= qp.contrast_at_density(b));
            prop_assert_eq!(qp.contrast_at_density(0.0), 1.0);
        }

        #[test]
        fn recovery_scales_with_tau(s in 0.2..5.0f64) {
            let qp = device_qp();
            let scaled = QpModel { tau_qp: qp.tau_qp * s, ..qp.clone() };
            let r = scaled.recovery_time() / qp.recovery_time();
            prop_assert!((r - s).abs() < 1e-9 * s);
        }
    }
}
