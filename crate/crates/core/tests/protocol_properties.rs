//! Cross-module protocol properties on the bundled device profile.

use std::f64::consts::PI;

use transduce_core::config::{paper_device, DeviceProfile};
use transduce_core::pipeline::optical_rabi_sweep;
use transduce_core::protocol::{rabi_scan, swap_efficiency, Preparation};

fn eta(p: &DeviceProfile) -> f64 {
    swap_efficiency(p, Preparation::Excited).unwrap().eta
}

/// Set qubit rates directly: energy decay Γ1 and pure dephasing γ_φ.
fn with_qubit_rates(mut p: DeviceProfile, gamma_1: f64, gamma_phi: f64) -> DeviceProfile {
    p.device.qubit.t1_q = 1.0 / gamma_1;
    p.device.qubit.t2s_q = 1.0 / (gamma_phi + 0.5 * gamma_1);
    p
}

#[test]
fn swap_efficiency_monotone_in_each_loss_rate() {
    let p = paper_device();
    let g1 = p.device.qubit.decay_rate();
    let gphi = p.device.qubit.dephasing_rate();
    let km = p.device.mode().kappa_m_t1;

    let base = eta(&p);
    let mut last = base;
    for s in [1.5, 2.5] {
        let e = eta(&with_qubit_rates(p.clone(), g1 * s, gphi));
        assert!(e <= last + 1e-12, "Γ1 × {s}: {e} > {last}");
        last = e;
    }
    let mut last = base;
    for s in [1.5, 2.5] {
        let e = eta(&with_qubit_rates(p.clone(), g1, gphi * s));
        assert!(e <= last + 1e-12, "γφ × {s}: {e} > {last}");
        last = e;
    }
    let mut last = base;
    for s in [1.5, 2.5] {
        let mut q = p.clone();
        let m = q.device.mode().clone().with_t1(1.0 / (km * s));
        *q.device.mode_mut() = m;
        let e = eta(&q);
        assert!(e <= last + 1e-12, "κ_m × {s}: {e} > {last}");
        last = e;
    }
}

#[test]
fn optical_rabi_at_device_rates() {
    let p = paper_device();
    let durations: Vec<f64> = (0..=16).map(|k| k as f64 * 8e-9).collect();
    let scan = rabi_scan(&p, PI / p.protocol.pi_time_s, &durations).unwrap();
    let period = scan.fit.unwrap().period;
    let run = optical_rabi_sweep(&p, &durations, period, 1_000_000_000, 21).unwrap();
    let f = run.fit;
    // measured background (0.67 ± 0.17)e-5 and maximum (1.38 ± 0.17)e-5
    assert!(f.background.lo <= 0.84e-5 && f.background.hi >= 0.50e-5, "{:?}", f.background);
    assert!((f.maximum.value - 1.38e-5).abs() < 2.0 * 0.17e-5, "{:?}", f.maximum);
    assert!(f.amplitude.lo > 0.0);
}
