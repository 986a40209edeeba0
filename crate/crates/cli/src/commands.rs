//! One function per subcommand. Each returns an optional CSV table and a
//! JSON summary; writing them out is left to the caller.

use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use serde_json::{json, Map, Value};

use transduce_core::analytics::{avoided_crossing, minimum_splitting, readout_efficiency, thermal_npsd};
use transduce_core::calibrate;
use transduce_core::config::{apply_overrides, DeviceProfile, ProfileFile};
use transduce_core::density::DensityMatrix;
use transduce_core::detection::Estimate;
use transduce_core::environment::{first_recovered_delay, qp_recovery, repetition_budget};
use transduce_core::integrate::{evolve, IntegratorSettings};
use transduce_core::model::{build_model, ModelOptions};
use transduce_core::pipeline::{heated_thermometry, optical_rabi_sweep, thermometry, transduce, ThermometryRun};
use transduce_core::protocol::{
    fit_vacuum_rabi, phonon_t1, phonon_t1_delays, rabi_scan, ramsey, stark_swap_scan, swap_efficiency,
    swap_warnings, transduction_pulses, transduction_sequence, Preparation, TransductionOptions,
};
use transduce_core::relations::intracavity_photons;
use transduce_core::rng::derive_seed;
use transduce_core::sequence::SequenceFile;
use transduce_core::units::{angular, hertz};
use transduce_core::warnings::Warning;
use transduce_core::Error;

use crate::args::*;
use crate::output::{num, Cell, Table};

/// Trials per count record when `--trials` is not given.
pub const DEFAULT_TRIALS: u64 = 1_000_000_000;

/// Resolved inputs shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub file: ProfileFile,
    pub profile: DeviceProfile,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub sequence: Option<PathBuf>,
}

impl Context {
    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::Config {
                path: "--seed".into(),
                message: "a seed is required for Monte Carlo subcommands".into(),
            }
            .into()
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    /// Same context with one more profile override applied.
    fn with_override(&self, kv: &str) -> Result<Self> {
        let mut value = toml::Value::try_from(&self.file).context("serializing profile")?;
        apply_overrides(&mut value, &[kv.to_string()])?;
        let file = ProfileFile::from_value(value)?;
        let profile = file.build()?;
        Ok(Self {
            file,
            profile,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Option<Table>,
    pub summary: Value,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn warning_list(w: &[Warning]) -> Value {
    Value::Array(w.iter().map(|x| Value::String(x.to_string())).collect())
}

fn estimate_fields(map: &mut Map<String, Value>, key: &str, e: &Estimate) {
    map.insert(key.into(), num(e.value));
    map.insert(format!("{key}_lo"), num(e.lo));
    map.insert(format!("{key}_hi"), num(e.hi));
}

pub fn dispatch(cmd: &Command, ctx: &Context) -> Result<Outcome> {
    match cmd {
        Command::Validate => validate(ctx),
        Command::Rabi(a) => rabi(ctx, a),
        Command::Swap(a) => swap(ctx, a),
        Command::PhononT1(a) => phonon(ctx, a),
        Command::Ramsey(a) => ramsey_cmd(ctx, a),
        Command::Spectrum(a) => spectrum(ctx, a),
        Command::Npsd(a) => npsd(ctx, a),
        Command::Thermometry(a) => thermometry_cmd(ctx, a),
        Command::Heating(a) => heating(ctx, a),
        Command::Qp(a) => qp(ctx, a),
        Command::Transduce(a) => transduce_cmd(ctx, a),
        Command::OpticalRabi(a) => optical_rabi_cmd(ctx, a),
        Command::Sweep(a) => sweep(ctx, a),
        Command::Evolve(a) => evolve_cmd(ctx, a),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

fn validate(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.profile;
    let mut checks = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        checks.push(json!({ "check": name, "ok": ok, "detail": detail }));
    };
    let m = p.device.mode();
    check(
        "resolved_sideband",
        true,
        format!("ω_m/κ_o = {:.3}", m.omega_m / p.device.kappa_o()),
    );

    let seq = transduction_pulses(p, p.protocol.pi_time_s, p.protocol.swap_hold_s)?;
    build_model(&p.device, &seq, &ModelOptions::eliminated(p.protocol.n_m_levels))?;
    check("adiabatic_elimination", true, format!("peak n_c = {}", seq.peak_photons()));

    // evolves the full transduction sequence with every state invariant checked
    let opts = TransductionOptions::from_profile(p);
    let run = transduction_sequence(p, p.protocol.pi_time_s, &opts)?;
    check(
        "integrator_invariants",
        true,
        format!("occupancy entering readout {:.4}", run.occupancy),
    );

    let sw = swap_warnings(p);
    check(
        "detuning_contrast",
        sw.is_empty(),
        sw.first().map_or("Stark shift exceeds 4 g_pe".into(), |w| w.to_string()),
    );

    let budget = repetition_budget(&seq, &p.qp);
    check(
        "repetition_budget",
        budget.admits(p.protocol.repetition_period_s),
        format!(
            "period {:.3e} s, minimum {:.3e} s",
            p.protocol.repetition_period_s, budget.min_period
        ),
    );

    let cal = calibrate::calibrated(p)?;
    let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a / b - 1.0).abs() };
    let drift = rel(p.chain.envelope_factor, cal.chain.envelope_factor)
        .max(rel(p.heating.gamma_p_per_photon, cal.heating.gamma_p_per_photon))
        .max(rel(p.qp.injected_decay_rate, cal.qp.injected_decay_rate));
    check(
        "calibration_anchors",
        drift < 1e-2,
        format!(
            "envelope_factor {:.4}, γ_p/2π per photon {:.4e} Hz, QP injection {:.4e} /s (largest drift {:.2e})",
            cal.chain.envelope_factor,
            hertz(cal.heating.gamma_p_per_photon),
            cal.qp.injected_decay_rate,
            drift
        ),
    );

    if let Some(path) = &ctx.sequence {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let s = SequenceFile::from_toml(&text)?.build()?;
        build_model(&p.device, &s, &ModelOptions::eliminated(p.protocol.n_m_levels))?;
        let b = repetition_budget(&s, &p.qp);
        check(
            "sequence",
            b.admits(s.repetition_period),
            format!("{} segments, {:.3e} s", s.segments().len(), s.total_duration()),
        );
    }

    let ok = checks.iter().all(|c| c["ok"] == Value::Bool(true));
    Ok(Outcome {
        table: None,
        summary: json!({ "profile": p.name, "all_ok": ok, "checks": checks }),
    })
}

fn rabi(ctx: &Context, a: &RabiArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let omega = a.omega.unwrap_or(PI / p.protocol.pi_time_s);
    let durations = linspace(0.0, a.t_max_ns * 1e-9, a.points);
    let scan = rabi_scan(p, omega, &durations)?;
    let mut t = Table::new(["duration_ns", "p_e"]);
    for (d, pe) in durations.iter().zip(&scan.p_e) {
        t.push(vec![(d * 1e9).into(), (*pe).into()]);
    }
    let f = scan.fit.as_ref();
    Ok(Outcome {
        table: Some(t),
        summary: json!({
            "omega_rad_per_s": num(omega),
            "pi_time_ns": f.map(|f| num(f.pi_time * 1e9)),
            "period_ns": f.map(|f| num(f.period * 1e9)),
            "contrast": f.map(|f| num(f.contrast)),
            "fit_error": scan.fit_error,
        }),
    })
}

fn preparation(p: Prep) -> Preparation {
    match p {
        Prep::Excited => Preparation::Excited,
        Prep::PiPulse => Preparation::PiPulse,
    }
}

fn swap(ctx: &Context, a: &SwapArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let prep = preparation(a.prep);
    let holds = linspace(0.0, a.hold_max_ns * 1e-9, a.points);
    let pts = stark_swap_scan(p, &holds, prep)?;
    let eff = swap_efficiency(p, prep)?;
    let n_m: Vec<f64> = pts.iter().map(|s| s.n_m).collect();
    let vr = fit_vacuum_rabi(&holds, &n_m).ok();
    let mut t = Table::new(["hold_ns", "p_e", "n_m"]);
    for s in &pts {
        t.push(vec![(s.hold * 1e9).into(), s.p_e.into(), s.n_m.into()]);
    }
    Ok(Outcome {
        table: Some(t),
        summary: json!({
            "prep": format!("{:?}", a.prep).to_lowercase(),
            "eta_swap": num(eff.eta),
            "hold_ns": num(eff.hold * 1e9),
            "vacuum_rabi_mhz": vr.map(|v| num(v.frequency_hz / 1e6)),
            "warnings": warning_list(&eff.warnings),
        }),
    })
}

fn phonon(ctx: &Context, a: &PhononT1Args) -> Result<Outcome> {
    let p = &ctx.profile;
    let delays = phonon_t1_delays(p, a.points);
    let r = phonon_t1(p, &delays)?;
    let mut t = Table::new(["delay_ns", "p_e"]);
    for (d, pe) in r.delays.iter().zip(&r.p_e) {
        t.push(vec![(d * 1e9).into(), (*pe).into()]);
    }
    Ok(Outcome {
        table: Some(t),
        summary: json!({
            "t1_ns": num(r.t1 * 1e9),
            "t1_sigma_ns": num(r.t1_sigma * 1e9),
            "lower_bound": r.lower_bound,
        }),
    })
}

fn ramsey_cmd(ctx: &Context, a: &RamseyArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let delays = linspace(0.0, a.t_max_ns * 1e-9, a.points);
    let r = ramsey(p, &delays, angular(a.detuning_mhz * 1e6))?;
    let mut t = Table::new(["delay_ns", "signal"]);
    for (d, s) in r.delays.iter().zip(&r.signal) {
        t.push(vec![(d * 1e9).into(), (*s).into()]);
    }
    Ok(Outcome {
        table: Some(t),
        summary: json!({
            "t2_star_ns": r.t2_star.map(|x| num(x * 1e9)),
            "fringe_mhz": num(r.fringe_hz / 1e6),
            "amplitude": num(r.amplitude),
        }),
    })
}

fn spectrum(ctx: &Context, a: &SpectrumArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let f_hz = linspace(a.f_min_ghz * 1e9, a.f_max_ghz * 1e9, a.points);
    let w: Vec<f64> = f_hz.iter().map(|&f| angular(f)).collect();
    let branches = avoided_crossing(&p.device, &w);
    let n = p.device.mech_modes.len() + 1;
    let mut header = vec!["qubit_ghz".to_string()];
    header.extend((0..n).map(|i| format!("branch_{i}_ghz")));
    let mut t = Table::new(header);
    for (f, row) in f_hz.iter().zip(&branches) {
        let mut cells: Vec<Cell> = vec![(f / 1e9).into()];
        cells.extend(row.iter().map(|&x| Cell::F(hertz(x) / 1e9)));
        t.push(cells);
    }
    // splitting of the transduction-mode crossing only; spectators may be uncoupled
    let center = p.device.mode().omega_m;
    let window = angular(20e6);
    let (sel_w, sel_b): (Vec<f64>, Vec<Vec<f64>>) = w
        .iter()
        .zip(&branches)
        .filter(|(x, _)| (**x - center).abs() <= window)
        .map(|(x, b)| (*x, b.clone()))
        .unzip();
    let split = minimum_splitting(&sel_b, &sel_w);
    Ok(Outcome {
        table: Some(t),
        summary: json!({
            "transduction_mode_ghz": num(hertz(center) / 1e9),
            "min_splitting_mhz": split.map(|(g, _)| num(hertz(g) / 1e6)),
            "at_qubit_ghz": split.map(|(_, x)| num(hertz(x) / 1e9)),
        }),
    })
}

fn npsd(ctx: &Context, a: &NpsdArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let n_c = intracavity_photons(a.power_uw * 1e-6);
    let f_hz = linspace(a.f_min_ghz * 1e9, a.f_max_ghz * 1e9, a.points);
    let w: Vec<f64> = f_hz.iter().map(|&f| angular(f)).collect();
    let occ = vec![a.occupancy; p.device.mech_modes.len()];
    let s = thermal_npsd(&p.device, &w, n_c, &occ)?;
    let mut t = Table::new(["omega_ghz", "npsd_per_s_per_hz"]);
    for (f, v) in f_hz.iter().zip(&s) {
        // density per rad/s to density per Hz
        t.push(vec![(f / 1e9).into(), (v * 2.0 * PI).into()]);
    }
    let kappa_o = p.device.kappa_o();
    let modes: Vec<Value> = p
        .device
        .mech_modes
        .iter()
        .map(|m| {
            let g = 4.0 * m.g_om * m.g_om * n_c / kappa_o;
            json!({
                "frequency_ghz": num(hertz(m.omega_m) / 1e9),
                "gamma_om_khz": num(hertz(g) / 1e3),
                "linewidth_khz": num(hertz(m.kappa_i_m + g) / 1e3),
            })
        })
        .collect();
    Ok(Outcome {
        table: Some(t),
        summary: json!({ "n_c": num(n_c), "occupancy": num(a.occupancy), "modes": modes }),
    })
}

fn thermometry_row(t: &mut Table, r: &ThermometryRun) {
    let e = &r.estimate;
    t.push(vec![
        r.injected.into(),
        r.red.trials.into(),
        r.red.detected.into(),
        r.blue.detected.into(),
        e.p_d.value.into(),
        e.p_d.lo.into(),
        e.p_d.hi.into(),
        e.n_m.value.into(),
        e.n_m.lo.into(),
        e.n_m.hi.into(),
    ]);
}

fn thermometry_cmd(ctx: &Context, a: &ThermometryArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let seed = ctx.seed()?;
    let trials = ctx.trials();
    let mut runs = Vec::new();
    for (i, &n) in a.n_m.iter().enumerate() {
        runs.push(thermometry(p, n, trials, derive_seed(seed, i as u64))?);
    }
    if a.heated {
        runs.push(heated_thermometry(p, trials, derive_seed(seed, 1000))?);
    }
    let mut t = Table::new([
        "injected_n_m", "trials", "red_counts", "blue_counts", "p_d", "p_d_lo", "p_d_hi", "n_m", "n_m_lo", "n_m_hi",
    ]);
    let mut rec = Vec::new();
    for r in &runs {
        thermometry_row(&mut t, r);
        let s = r.estimate.n_m.sigma();
        rec.push(json!({
            "injected_n_m": num(r.injected),
            "n_m": num(r.estimate.n_m.value),
            "n_m_sigma": num(s),
            "within_3_sigma": (r.estimate.n_m.value - r.injected).abs() <= 3.0 * s,
        }));
    }
    Ok(Outcome {
        table: Some(t),
        summary: json!({ "seed": seed, "trials": trials, "results": rec }),
    })
}

fn heating(ctx: &Context, a: &HeatingArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let m = p.device.mode();
    let plateau = 4.0 * m.g_om * m.g_om * p.protocol.n_c_peak / p.device.kappa_o();
    let base = TransductionOptions::from_profile(p);
    let n = a.points.max(1);
    let taus: Vec<f64> = (1..=n).map(|k| a.tau_max_ns * 1e-9 * k as f64 / n as f64).collect();
    let mut t = Table::new(["tau_ro_ns", "n_m_weighted", "p_d", "eta_ro"]);
    for &tau in &taus {
        let s = transduction_sequence(p, 0.0, &TransductionOptions { tau_ro: tau, ..base.clone() })?;
        t.push(vec![
            (tau * 1e9).into(),
            s.weighted_occupancy().into(),
            (s.mean_blue_counts() - s.mean_red_counts()).into(),
            readout_efficiency(tau, plateau, m.kappa_m_t1).into(),
        ]);
    }
    let at = transduction_sequence(p, 0.0, &base)?;
    Ok(Outcome {
        table: Some(t),
        summary: json!({
            "tau_ro_ns": num(base.tau_ro * 1e9),
            "n_m_weighted": num(at.weighted_occupancy()),
            "p_d": num(at.mean_blue_counts() - at.mean_red_counts()),
            "gamma_p_per_photon_hz": num(hertz(p.heating.gamma_p_per_photon)),
            "n_p": num(p.heating.n_p),
        }),
    })
}

fn qp(ctx: &Context, a: &QpArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let delays = linspace(0.0, a.delay_max_ms * 1e-3, a.points);
    let c = qp_recovery(&p.qp, &delays);
    let ct = p.qp_trapped.as_ref().map(|q| qp_recovery(q, &delays));
    let mut t = Table::new(["delay_ms", "contrast", "contrast_trapped"]);
    for (i, d) in delays.iter().enumerate() {
        let trapped = ct.as_ref().map_or(f64::NAN, |v| v[i]);
        t.push(vec![(d * 1e3).into(), c[i].into(), trapped.into()]);
    }
    let seq = transduction_pulses(p, p.protocol.pi_time_s, p.protocol.swap_hold_s)?;
    let budget = repetition_budget(&seq, &p.qp);
    let rec = p.qp.recovery_time();
    let mut s = Map::new();
    s.insert("recovery_ms".into(), num(rec * 1e3));
    s.insert(
        "first_recovered_delay_ms".into(),
        first_recovered_delay(&p.qp, &delays).map_or(Value::Null, |d| num(d * 1e3)),
    );
    s.insert("max_rate_hz".into(), num(budget.max_rate));
    s.insert("repetition_period_ms".into(), num(p.protocol.repetition_period_s * 1e3));
    s.insert("period_admitted".into(), Value::Bool(budget.admits(p.protocol.repetition_period_s)));
    if let Some(q) = &p.qp_trapped {
        let rt = q.recovery_time();
        s.insert("recovery_trapped_ms".into(), num(rt * 1e3));
        s.insert("recovery_ratio".into(), num(rec / rt));
        s.insert("max_rate_trapped_hz".into(), num(repetition_budget(&seq, q).max_rate));
    }
    Ok(Outcome {
        table: Some(t),
        summary: Value::Object(s),
    })
}

fn transduce_cmd(ctx: &Context, a: &TransduceArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let seed = ctx.seed()?;
    let trials = ctx.trials();
    let mut opts = TransductionOptions::from_profile(p);
    if let Some(t) = a.tau_ro_ns {
        opts.tau_ro = t * 1e-9;
    }
    opts.heating = !a.no_heating;
    let run = transduce(p, trials, seed, &opts)?;
    let mut t = Table::new([
        "case", "qubit_drive_ns", "occupancy", "n_m_weighted", "mean_counts_per_trial", "trials", "detected", "rate",
        "ci_lo", "ci_hi",
    ]);
    for (name, s, c) in [
        ("pi", &run.with_pi, &run.counts_pi),
        ("no_pi", &run.without_pi, &run.counts_0),
    ] {
        let e = c.interval();
        t.push(vec![
            name.into(),
            (s.qubit_drive * 1e9).into(),
            s.occupancy.into(),
            s.weighted_occupancy().into(),
            c.mean_per_trial.into(),
            c.trials.into(),
            c.detected.into(),
            c.rate().into(),
            e.lo.into(),
            e.hi.into(),
        ]);
    }
    let r = &run.result;
    let mut s = Map::new();
    estimate_fields(&mut s, "p_pi", &r.p_pi);
    estimate_fields(&mut s, "p_0", &r.p_0);
    estimate_fields(&mut s, "eta_t", &r.eta_t);
    match &r.n_add {
        Some(n) => estimate_fields(&mut s, "n_add", n),
        None => {
            s.insert("n_add".into(), Value::Null);
        }
    }
    s.insert("significant".into(), Value::Bool(r.significant));
    s.insert("tau_ro_ns".into(), num(opts.tau_ro * 1e9));
    s.insert("seed".into(), json!(seed));
    s.insert("trials".into(), json!(trials));
    s.insert("warnings".into(), warning_list(&run.warnings()));
    Ok(Outcome {
        table: Some(t),
        summary: Value::Object(s),
    })
}

fn optical_rabi_cmd(ctx: &Context, a: &OpticalRabiArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let seed = ctx.seed()?;
    let trials = ctx.trials();
    let period = match a.period_ns {
        Some(t) => t * 1e-9,
        None => {
            let scan = rabi_scan(p, PI / p.protocol.pi_time_s, &linspace(0.0, 160e-9, 81))?;
            scan.fit
                .ok_or_else(|| Error::Fit(scan.fit_error.unwrap_or_default()))?
                .period
        }
    };
    let durations = linspace(0.0, a.t_max_ns * 1e-9, a.points);
    let run = optical_rabi_sweep(p, &durations, period, trials, seed)?;
    let mut t = Table::new(["duration_ns", "rate", "ci_lo", "ci_hi"]);
    for (d, e) in durations.iter().zip(&run.rates) {
        t.push(vec![(d * 1e9).into(), e.value.into(), e.lo.into(), e.hi.into()]);
    }
    let f = &run.fit;
    let mut s = Map::new();
    estimate_fields(&mut s, "background", &f.background);
    estimate_fields(&mut s, "maximum", &f.maximum);
    estimate_fields(&mut s, "amplitude", &f.amplitude);
    s.insert("period_ns".into(), num(period * 1e9));
    s.insert("seed".into(), json!(seed));
    s.insert("trials".into(), json!(trials));
    Ok(Outcome {
        table: Some(t),
        summary: Value::Object(s),
    })
}

fn sweep(ctx: &Context, a: &SweepArgs) -> Result<Outcome> {
    let mut results = Vec::new();
    for v in &a.values {
        let sub = ctx.with_override(&format!("{}={}", a.key, v))?;
        let out = match a.target {
            SweepTarget::Swap => swap(
                &sub,
                &SwapArgs {
                    points: 2,
                    ..SwapArgs::default()
                },
            )?,
            SweepTarget::Transduce => transduce_cmd(&sub, &TransduceArgs::default())?,
            SweepTarget::Heating => heating(&sub, &HeatingArgs { tau_max_ns: 0.0, points: 0 }).map(|mut o| {
                o.table = None;
                o
            })?,
            SweepTarget::Qp => qp(&sub, &QpArgs { delay_max_ms: 0.0, points: 1 })?,
        };
        results.push((v.clone(), out.summary));
    }
    // numeric summary fields, in the order of the first result
    let keys: Vec<String> = match results.first() {
        Some((_, Value::Object(m))) => m
            .iter()
            .filter(|(k, v)| v.is_number() && *k != "seed" && *k != "trials")
            .map(|(k, _)| k.clone())
            .collect(),
        _ => Vec::new(),
    };
    let mut header = vec![a.key.clone()];
    header.extend(keys.iter().cloned());
    let mut t = Table::new(header);
    for (v, s) in &results {
        let mut row = vec![Cell::S(v.clone())];
        row.extend(keys.iter().map(|k| Cell::F(s[k].as_f64().unwrap_or(f64::NAN))));
        t.push(row);
    }
    Ok(Outcome {
        table: Some(t),
        summary: json!({
            "key": a.key,
            "target": format!("{:?}", a.target).to_lowercase(),
            "runs": results.into_iter().map(|(v, s)| json!({ "value": v, "summary": s })).collect::<Vec<_>>(),
        }),
    })
}

fn evolve_cmd(ctx: &Context, a: &EvolveArgs) -> Result<Outcome> {
    let p = &ctx.profile;
    let path = ctx.sequence.as_ref().ok_or_else(|| Error::Config {
        path: "--sequence".into(),
        message: "evolve needs a sequence file".into(),
    })?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let seq = SequenceFile::from_toml(&text)?.build()?;
    let total = seq.total_duration();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("sequence has zero duration".into()).into());
    }
    let n_m = p.protocol.n_m_levels;
    let opts = match a.n_o {
        Some(n_o) => ModelOptions::full_cavity(n_m, n_o),
        None => ModelOptions::eliminated(n_m),
    }
    .with_heating(p.heating.clone());
    let model = build_model(&p.device, &seq, &opts)?;
    let rho0 = match a.initial {
        Initial::Ground => DensityMatrix::ground(&model.ops),
        Initial::Excited => DensityMatrix::basis(&model.ops, 1, 0, 0),
    };
    let settings = IntegratorSettings::with_dt(a.dt_ns.map_or(p.protocol.dt_s, |d| d * 1e-9));
    let grid = linspace(0.0, total, a.points.max(2));
    let traj = evolve(&model, &rho0, &grid, &settings)?;
    let rows = traj.rows(&model);
    let mut t = Table::new(["t_ns", "p_e", "n_m", "n_o", "trace_error"]);
    for r in &rows {
        t.push(vec![
            r.t_ns.into(),
            r.p_e.into(),
            r.n_m.into(),
            r.n_o.unwrap_or(f64::NAN).into(),
            r.trace_error.into(),
        ]);
    }
    let last = rows.last().expect("non-empty trajectory");
    Ok(Outcome {
        table: Some(t),
        summary: json!({
            "dimension": model.dim(),
            "duration_ns": num(total * 1e9),
            "final_p_e": num(last.p_e),
            "final_n_m": num(last.n_m),
            "max_trace_error": num(rows.iter().map(|r| r.trace_error).fold(0.0, f64::max)),
        }),
    })
}
