use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_transduce-sim");

fn run(args: &[&str], out: &Path, threads: Option<usize>) -> Output {
    let mut c = Command::new(BIN);
    c.args(args).arg("--out").arg(out);
    match threads {
        Some(n) => c.env("TRANSDUCE_SIM_THREADS", n.to_string()),
        None => c.env_remove("TRANSDUCE_SIM_THREADS"),
    };
    c.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn same_seed_same_bytes_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, extra) in [
        ("thermometry", &["--heated"][..]),
        ("transduce", &[][..]),
        ("optical-rabi", &["--points", "5", "--period-ns", "64"][..]),
    ] {
        let mut outs = Vec::new();
        for (i, threads) in [Some(1), Some(4), None].into_iter().enumerate() {
            let dir = tmp.path().join(format!("{cmd}-{i}"));
            let mut args = vec![cmd, "--seed", "11", "--trials", "1e8"];
            args.extend_from_slice(extra);
            let o = run(&args, &dir, threads);
            assert!(o.status.success(), "{cmd}: {}", stderr(&o));
            outs.push(fs::read(dir.join(format!("{cmd}.csv"))).unwrap());
        }
        assert_eq!(outs[0], outs[1], "{cmd}: 1 vs 4 threads");
        assert_eq!(outs[0], outs[2], "{cmd}: 1 thread vs default");
    }
}

#[test]
fn different_seeds_differ() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&["transduce", "--seed", "1", "--trials", "1e8"], &a, None).status.success());
    assert!(run(&["transduce", "--seed", "2", "--trials", "1e8"], &b, None).status.success());
    assert_ne!(
        fs::read(a.join("transduce.csv")).unwrap(),
        fs::read(b.join("transduce.csv")).unwrap()
    );
}

#[test]
fn zero_rabi_drive_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["rabi", "--omega", "0", "--points", "11"], tmp.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(tmp.path().join("rabi.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["duration_ns", "p_e"]);
    let mut n = 0;
    for row in r.records() {
        let p: f64 = row.unwrap()[1].parse().unwrap();
        assert!(p.abs() < 1e-9, "{p}");
        n += 1;
    }
    assert_eq!(n, 11);
}

#[test]
fn negative_rate_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["swap", "--override", "device.kappa_e_o_hz=-1"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("device.kappa_e_o_hz"), "{}", stderr(&o));
}

#[test]
fn unresolved_sideband_is_a_validity_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["validate", "--override", "device.kappa_i_o_hz=5e9", "--override", "device.kappa_e_o_hz=5e9"],
        tmp.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("resolved-sideband"));
}

#[test]
fn unknown_key_and_missing_seed_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["swap", "--override", "device.no_such_key=1"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["transduce"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
    let o = run(&["transduce", "--seed", "1"], tmp.path(), None);
    assert!(o.status.success());
    let mut c = Command::new(BIN);
    let o = c
        .args(["qp", "--out"])
        .arg(tmp.path())
        .env("TRANSDUCE_SIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_passes_on_bundled_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["validate"], tmp.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(tmp.path(), "validate");
    assert_eq!(s["all_ok"], Value::Bool(true), "{s:#}");
}

#[test]
fn manifest_records_run_and_replay_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let o = run(
        &[
            "transduce",
            "--seed",
            "5",
            "--trials",
            "2e8",
            "--override",
            "protocol.tau_ro_s=30e-9",
        ],
        &first,
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "transduce");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["trials"], 200_000_000u64);
    assert_eq!(m["profile"]["protocol"]["tau_ro_s"].as_f64(), Some(30e-9));
    assert_eq!(summary(&first, "transduce")["tau_ro_ns"].as_f64().map(|x| x.round()), Some(30.0));

    let second = tmp.path().join("second");
    let mut c = Command::new(BIN);
    let o = c
        .args(["replay", "--manifest"])
        .arg(first.join("manifest.json"))
        .arg("--out")
        .arg(&second)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(first.join("transduce.csv")).unwrap(),
        fs::read(second.join("transduce.csv")).unwrap()
    );
    assert_eq!(
        fs::read(first.join("transduce.json")).unwrap(),
        fs::read(second.join("transduce.json")).unwrap()
    );
}

#[test]
fn sweep_rows_follow_values() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["sweep", "--key", "qp.tau_qp_s", "--values", "1.5e-3,0.32e-3", "--target", "qp"],
        tmp.path(),
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(tmp.path().join("sweep.csv")).unwrap();
    let h = r.headers().unwrap().clone();
    let col = h.iter().position(|c| c == "recovery_ms").unwrap();
    let rec: Vec<f64> = r.records().map(|x| x.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(rec.len(), 2);
    assert!(rec[0] > 4.0 * rec[1], "{rec:?}");
}

#[test]
fn evolve_exports_trajectory_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq.toml");
    fs::write(
        &seq,
        r#"
repetition_period_s = 0.01
qubit_detuning_hz = 0.0

[[segment]]
kind = "idle"
duration_s = 60e-9
"#,
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = run(
        &["evolve", "--initial", "excited", "--points", "7", "--sequence", seq.to_str().unwrap()],
        &out,
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("evolve.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["t_ns", "p_e", "n_m", "n_o", "trace_error"]);
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|x| x.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 7);
    // resonant exchange with the phonon: excitation sum decays but stays ≤ 1
    for w in rows.windows(2) {
        assert!(w[1][1] + w[1][2] <= w[0][1] + w[0][2] + 1e-9);
    }
    assert!(rows.iter().all(|r| r[4] < 1e-8));
}
