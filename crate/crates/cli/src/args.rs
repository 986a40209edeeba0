//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug, Clone)]
#[command(
    name = "transduce-sim",
    version,
    about = "Pulsed microwave-to-optical transduction simulator"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Bundled profile name or path to a device TOML file.
    #[arg(long, global = true, default_value = "paper_device")]
    pub profile: String,
    /// Seed for the counting generator; required by Monte Carlo subcommands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trials per count record; accepts `1e9` style literals.
    #[arg(long, global = true, value_parser = parse_trials)]
    pub trials: Option<u64>,
    /// Output directory for CSV, JSON summary and manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Profile override, `dotted.key=value`; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Pulse sequence file (`sequence.toml` schema).
    #[arg(long, global = true)]
    pub sequence: Option<PathBuf>,
}

/// Parse a trial count written as an integer or a float literal such as `1e9`.
pub fn parse_trials(s: &str) -> Result<u64, String> {
    let clean = s.replace('_', "");
    if let Ok(n) = clean.parse::<u64>() {
        return if n > 0 { Ok(n) } else { Err("trials must be positive".into()) };
    }
    let x: f64 = clean.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(x >= 1.0 && x <= 9.0e18 && x.fract() == 0.0) {
        return Err(format!("`{s}` is not a positive whole number of trials"));
    }
    Ok(x as u64)
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Check a profile (and optional sequence) against every invariant.
    Validate,
    /// Qubit Rabi oscillations at the idle bias.
    Rabi(RabiArgs),
    /// Stark-driven vacuum Rabi swap and swap efficiency.
    Swap(SwapArgs),
    /// Double-swap phonon lifetime.
    #[command(name = "phonon-t1")]
    PhononT1(PhononT1Args),
    /// Ramsey fringes and T2*.
    Ramsey(RamseyArgs),
    /// Avoided-crossing spectrum against qubit frequency.
    Spectrum(SpectrumArgs),
    /// Thermal anti-Stokes noise spectrum of the mechanical modes.
    Npsd(NpsdArgs),
    /// Sideband-asymmetry thermometry on synthetic counts.
    Thermometry(ThermometryArgs),
    /// Heating noise against readout efficiency over the counting window.
    Heating(HeatingArgs),
    /// Quasi-particle recovery and repetition budget.
    Qp(QpArgs),
    /// Interleaved π / no-π transduction experiment.
    Transduce(TransduceArgs),
    /// Optically detected qubit Rabi oscillations.
    #[command(name = "optical-rabi")]
    OpticalRabi(OpticalRabiArgs),
    /// Rerun a subcommand over values of one profile key.
    Sweep(SweepArgs),
    /// Integrate the master equation over a sequence file.
    Evolve(EvolveArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Rabi(_) => "rabi",
            Command::Swap(_) => "swap",
            Command::PhononT1(_) => "phonon-t1",
            Command::Ramsey(_) => "ramsey",
            Command::Spectrum(_) => "spectrum",
            Command::Npsd(_) => "npsd",
            Command::Thermometry(_) => "thermometry",
            Command::Heating(_) => "heating",
            Command::Qp(_) => "qp",
            Command::Transduce(_) => "transduce",
            Command::OpticalRabi(_) => "optical-rabi",
            Command::Sweep(_) => "sweep",
            Command::Evolve(_) => "evolve",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct RabiArgs {
    /// Rabi angular frequency, rad/s (default: π over the profile π-time).
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 160.0)]
    pub t_max_ns: f64,
    #[arg(long, default_value_t = 81)]
    pub points: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Prep {
    #[default]
    Excited,
    PiPulse,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SwapArgs {
    #[arg(long, value_enum, default_value_t = Prep::Excited)]
    pub prep: Prep,
    #[arg(long, default_value_t = 400.0)]
    pub hold_max_ns: f64,
    #[arg(long, default_value_t = 81)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PhononT1Args {
    /// Number of delay steps; delays are multiples of the exchange period at the parking point.
    #[arg(long, default_value_t = 12)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RamseyArgs {
    #[arg(long, default_value_t = 2.0)]
    pub detuning_mhz: f64,
    #[arg(long, default_value_t = 1500.0)]
    pub t_max_ns: f64,
    #[arg(long, default_value_t = 31)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 5.10)]
    pub f_min_ghz: f64,
    #[arg(long, default_value_t = 5.30)]
    pub f_max_ghz: f64,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Default)]
pub struct NpsdArgs {
    /// Optical input power, µW.
    #[arg(long, default_value_t = 20.0)]
    pub power_uw: f64,
    /// Mean occupancy assigned to every mode.
    #[arg(long, default_value_t = 1.0)]
    pub occupancy: f64,
    #[arg(long, default_value_t = 5.14)]
    pub f_min_ghz: f64,
    #[arg(long, default_value_t = 5.28)]
    pub f_max_ghz: f64,
    #[arg(long, default_value_t = 1401)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ThermometryArgs {
    /// Injected occupancies.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.3, 0.64])]
    pub n_m: Vec<f64>,
    /// Add a row for the mode heated by the readout pulse itself.
    #[arg(long)]
    pub heated: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct HeatingArgs {
    #[arg(long, default_value_t = 100.0)]
    pub tau_max_ns: f64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Default)]
pub struct QpArgs {
    #[arg(long, default_value_t = 15.0)]
    pub delay_max_ms: f64,
    #[arg(long, default_value_t = 151)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TransduceArgs {
    /// Counting window, ns (default: profile τ_ro).
    #[arg(long)]
    pub tau_ro_ns: Option<f64>,
    /// Switch off optical-absorption heating.
    #[arg(long)]
    pub no_heating: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct OpticalRabiArgs {
    #[arg(long, default_value_t = 128.0)]
    pub t_max_ns: f64,
    #[arg(long, default_value_t = 17)]
    pub points: usize,
    /// Fixed fit period, ns (default: from a dispersive Rabi scan).
    #[arg(long)]
    pub period_ns: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    Swap,
    Transduce,
    Heating,
    Qp,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Profile key to vary, same syntax as `--override`.
    #[arg(long)]
    pub key: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,
    #[arg(long, value_enum)]
    pub target: SweepTarget,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Initial {
    #[default]
    Ground,
    Excited,
}

#[derive(Args, Debug, Clone, Default)]
pub struct EvolveArgs {
    #[arg(long, value_enum, default_value_t = Initial::Ground)]
    pub initial: Initial,
    /// Keep the optical mode with this many Fock levels.
    #[arg(long)]
    pub n_o: Option<usize>,
    /// Maximum step, ns (default: profile dt).
    #[arg(long)]
    pub dt_ns: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_literals() {
        assert_eq!(parse_trials("1e9"), Ok(1_000_000_000));
        assert_eq!(parse_trials("1_000"), Ok(1000));
        assert_eq!(parse_trials("2.5e3"), Ok(2500));
        assert!(parse_trials("0").is_err());
        assert!(parse_trials("1.5").is_err());
        assert!(parse_trials("abc").is_err());
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["transduce-sim", "transduce", "--seed", "7", "--trials", "1e9"]).unwrap();
        assert_eq!(cli.global.seed, Some(7));
        assert_eq!(cli.global.trials, Some(1_000_000_000));
        assert_eq!(cli.command.name(), "transduce");
    }
}
