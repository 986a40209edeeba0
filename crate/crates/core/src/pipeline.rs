//! End-to-end runs: transduction counting, thermometry and optical Rabi.

use rayon::prelude::*;

use crate::analytics::{sideband_asymmetry, Thermometry};
use crate::config::DeviceProfile;
use crate::detection::{
    optical_rabi, simulate_counts_from_mean, transduction_estimate, CountRecord, Estimate,
    OpticalRabiFit, TransductionResult,
};
use crate::environment::trapezoid;
use crate::error::Result;
use crate::protocol::{transduction_sequence, TransductionOptions, TransductionSequence};
use crate::rng::derive_seed;
use crate::warnings::Warning;

#[derive(Debug, Clone)]
pub struct TransductionRun {
    pub with_pi: TransductionSequence,
    pub without_pi: TransductionSequence,
    pub counts_pi: CountRecord,
    pub counts_0: CountRecord,
    pub result: TransductionResult,
}

impl TransductionRun {
    pub fn warnings(&self) -> Vec<Warning> {
        let mut w = self.with_pi.warnings.clone();
        w.extend(self.counts_pi.warnings.iter().cloned());
        w.extend(self.counts_0.warnings.iter().cloned());
        w.dedup();
        w
    }
}

/// Interleaved π / no-π transduction experiment with red-sideband counting.
pub fn transduce(profile: &DeviceProfile, trials: u64, seed: u64, opts: &TransductionOptions) -> Result<TransductionRun> {
    let with_pi = transduction_sequence(profile, profile.protocol.pi_time_s, opts)?;
    let without_pi = transduction_sequence(profile, 0.0, opts)?;
    let counts_pi = simulate_counts_from_mean(with_pi.mean_red_counts(), opts.tau_ro, trials, derive_seed(seed, 1))?;
    let counts_0 = simulate_counts_from_mean(without_pi.mean_red_counts(), opts.tau_ro, trials, derive_seed(seed, 2))?;
    let result = transduction_estimate(&counts_pi, &counts_0)?;
    Ok(TransductionRun {
        with_pi,
        without_pi,
        counts_pi,
        counts_0,
        result,
    })
}

#[derive(Debug, Clone)]
pub struct ThermometryRun {
    pub injected: f64,
    pub red: CountRecord,
    pub blue: CountRecord,
    pub estimate: Thermometry,
}

/// Expected red and blue counts per trial for a constant occupancy `n_m`
/// under the profile readout envelope.
pub fn sideband_means(profile: &DeviceProfile, n_m: f64, tau: f64) -> Result<(f64, f64)> {
    let seg = crate::protocol::readout_segment(profile);
    let env = crate::sequence::PulseSequence::new(vec![seg], 0.0, f64::INFINITY)?;
    let times = crate::protocol::readout_grid(tau);
    let red: Vec<f64> = times
        .iter()
        .map(|&t| crate::analytics::scattering_rate(crate::analytics::Sideband::Red, n_m, env.photons(t), &profile.device, &profile.chain))
        .collect();
    let blue: Vec<f64> = times
        .iter()
        .map(|&t| crate::analytics::scattering_rate(crate::analytics::Sideband::Blue, n_m, env.photons(t), &profile.device, &profile.chain))
        .collect();
    Ok((trapezoid(&times, &red), trapezoid(&times, &blue)))
}

fn thermometry_from_means(profile: &DeviceProfile, injected: f64, means: (f64, f64), tau: f64, trials: u64, seed: u64) -> Result<ThermometryRun> {
    let red = simulate_counts_from_mean(means.0, tau, trials, derive_seed(seed, 11))?;
    let blue = simulate_counts_from_mean(means.1, tau, trials, derive_seed(seed, 12))?;
    let estimate = sideband_asymmetry(&red, &blue, profile.chain.dark_rate * tau)?;
    Ok(ThermometryRun {
        injected,
        red,
        blue,
        estimate,
    })
}

/// Sideband-asymmetry thermometry on synthetic counts at a constant occupancy.
pub fn thermometry(profile: &DeviceProfile, n_m: f64, trials: u64, seed: u64) -> Result<ThermometryRun> {
    let tau = profile.protocol.tau_ro_s;
    let means = sideband_means(profile, n_m, tau)?;
    thermometry_from_means(profile, n_m, means, tau, trials, seed)
}

/// Thermometry of the heated mode as produced by the readout pulse itself.
pub fn heated_thermometry(profile: &DeviceProfile, trials: u64, seed: u64) -> Result<ThermometryRun> {
    let opts = TransductionOptions::from_profile(profile);
    let seq = transduction_sequence(profile, 0.0, &opts)?;
    let means = (seq.mean_red_counts(), seq.mean_blue_counts());
    thermometry_from_means(profile, seq.weighted_occupancy(), means, opts.tau_ro, trials, seed)
}

#[derive(Debug, Clone)]
pub struct OpticalRabiRun {
    pub durations: Vec<f64>,
    pub records: Vec<CountRecord>,
    pub rates: Vec<Estimate>,
    pub fit: OpticalRabiFit,
}

/// Optical detection of qubit Rabi oscillations: sweep the qubit drive,
/// count red-sideband photons, fit a sinusoid at the supplied period.
pub fn optical_rabi_sweep(
    profile: &DeviceProfile,
    durations: &[f64],
    period: f64,
    trials: u64,
    seed: u64,
) -> Result<OpticalRabiRun> {
    let opts = TransductionOptions::from_profile(profile);
    let records = durations
        .par_iter()
        .enumerate()
        .map(|(i, &d)| {
            let s = transduction_sequence(profile, d, &opts)?;
            simulate_counts_from_mean(s.mean_red_counts(), opts.tau_ro, trials, derive_seed(seed, 100 + i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<Estimate> = records.iter().map(|r| r.interval()).collect();
    let y: Vec<f64> = rates.iter().map(|e| e.value).collect();
    let s: Vec<f64> = rates.iter().map(|e| e.sigma().max(1.0 / trials as f64)).collect();
    let fit = optical_rabi(durations, &y, Some(&s), period)?;
    Ok(OpticalRabiRun {
        durations: durations.to_vec(),
        records,
        rates,
        fit,
    })
}
