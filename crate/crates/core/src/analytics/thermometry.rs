use crate::detection::{CountRecord, Estimate};
use crate::error::{Error, Result};

/// Sideband-asymmetry estimates: detection probability per phonon and mean occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct Thermometry {
    /// p_d = ∫(Γ_B − Γ_R) dt per trial.
    pub p_d: Estimate,
    /// ⟨n_m⟩ = ∫(Γ_R − Γ_dark) dt / ∫(Γ_B − Γ_R) dt.
    pub n_m: Estimate,
}

/// Sideband-asymmetry thermometry with dark counts (`dark_per_trial` = Γ_dark τ)
/// removed before forming the ratio. Intervals are 1σ Poisson, propagated.
pub fn sideband_asymmetry(
    red: &CountRecord,
    blue: &CountRecord,
    dark_per_trial: f64,
) -> Result<Thermometry> {
    if red.trials != blue.trials || (red.window - blue.window).abs() > 1e-15 {
        return Err(Error::Estimator(
            "red and blue records must share trials and window".into(),
        ));
    }
    let n = red.trials as f64;
    let k_r = red.detected as f64;
    let k_b = blue.detected as f64;
    let dark = dark_per_trial * n;
    let delta = k_b - k_r;
    if delta <= 0.0 {
        return Err(Error::Estimator(format!(
            "non-physical asymmetry: blue {k_b} ≤ red {k_r} counts after dark subtraction"
        )));
    }
    let red_signal = k_r - dark;
    // a red rate significantly below the dark level cannot come from a physical occupancy
    if red_signal < -3.0 * k_r.max(1.0).sqrt() {
        return Err(Error::Estimator(format!(
            "non-physical asymmetry: red counts {k_r} fall below dark expectation {dark:.1}"
        )));
    }
    let p_d = delta / n;
    let s_pd = (k_b + k_r).sqrt() / n;
    let n_m = red_signal / delta;
    // ∂n/∂k_R = (k_B − D)/Δ², ∂n/∂k_B = −(k_R − D)/Δ²
    let d2 = delta * delta;
    let s_n = (((k_b - dark) / d2).powi(2) * k_r + (red_signal / d2).powi(2) * k_b).sqrt();
    Ok(Thermometry {
        p_d: Estimate::symmetric(p_d, s_pd),
        n_m: Estimate::symmetric(n_m, s_n),
    })
}
