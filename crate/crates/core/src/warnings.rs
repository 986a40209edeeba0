//! Non-fatal conditions raised by protocols and the detection layer.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Stark shift smaller than 4 g_pe: the parked qubit is not well separated from the mechanics.
    InsufficientDetuningContrast { shift: f64, four_g_pe: f64 },
    /// Mean detected photons per trial above 0.1.
    MultiPhoton { mean_per_trial: f64 },
    /// Repetition period shorter than the quasi-particle recovery time.
    RepetitionBelowRecovery { period: f64, recovery: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::InsufficientDetuningContrast { shift, four_g_pe } => write!(
                f,
                "insufficient detuning contrast: |shift| = {shift:.3e} rad/s < 4 g_pe = {four_g_pe:.3e} rad/s"
            ),
            Warning::MultiPhoton { mean_per_trial } => write!(
                f,
                "multi-photon regime, SPD dead-time unmodeled (mean {mean_per_trial:.3e} per trial)"
            ),
            Warning::RepetitionBelowRecovery { period, recovery } => write!(
                f,
                "repetition period {period:.3e} s is below the quasi-particle recovery time {recovery:.3e} s (environment model)"
            ),
        }
    }
}

/// Log a warning and hand it back for collection.
pub(crate) fn emit(w: Warning) -> Warning {
    log::warn!("{w}");
    w
}
