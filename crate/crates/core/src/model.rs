//! Lindblad model in the frame rotating at the transduction-mode frequency.
//!
//! H(t) = Δ_q σ_ee + g_pe(σ_eg b + σ_ge b†) + δ(t) σ_ee + f(t) σ_eg + f*(t) σ_ge
//!        [+ G(t)(a†b + a b†) with the cavity retained]
//!
//! With the cavity eliminated the beam-splitter is replaced by a phonon decay
//! channel at γ_om(t) = 4 n_c(t) g_om²/κ_o.

use num_complex::Complex64;

use crate::environment::HeatingModel;
use crate::error::{Error, Result};
use crate::operators::{build_operators_with_ceiling, dagger, CMatrix, OperatorSet, DEFAULT_DIMENSION_CEILING};
use crate::params::DeviceParams;
use crate::relations::backaction_rate;
use crate::sequence::PulseSequence;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CavityMode {
    /// Optical mode retained with `n_o` Fock levels.
    FullCavity { n_o: usize },
    Eliminated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    pub n_m: usize,
    pub cavity: CavityMode,
    pub heating: Option<HeatingModel>,
    pub dimension_ceiling: usize,
}

impl ModelOptions {
    pub fn eliminated(n_m: usize) -> Self {
        Self {
            n_m,
            cavity: CavityMode::Eliminated,
            heating: None,
            dimension_ceiling: DEFAULT_DIMENSION_CEILING,
        }
    }

    pub fn full_cavity(n_m: usize, n_o: usize) -> Self {
        Self {
            cavity: CavityMode::FullCavity { n_o },
            ..Self::eliminated(n_m)
        }
    }

    pub fn with_heating(mut self, heating: HeatingModel) -> Self {
        self.heating = Some(heating);
        self
    }
}

/// Time dependence of a collapse rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Constant(f64),
    /// `coefficient · n_c(t − delay)`.
    PerPhoton { coefficient: f64, delay: f64 },
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub name: &'static str,
    pub op: CMatrix,
    pub op_dag: CMatrix,
    pub op_dag_op: CMatrix,
    pub rate: Rate,
    op_sparse: Sparse,
}

/// Nonzero entries (row, col, value) of an operator.
type Sparse = Vec<(usize, usize, Complex64)>;

fn sparse(m: &CMatrix) -> Sparse {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z != Complex64::new(0.0, 0.0) {
                out.push((i, j, z));
            }
        }
    }
    out
}

fn add_sparse(h: &mut CMatrix, terms: &Sparse, scale: Complex64) {
    for &(i, j, z) in terms {
        h[(i, j)] += z * scale;
    }
}

/// Reusable buffers for `LindbladModel::rhs_into`.
#[derive(Debug, Clone)]
pub struct RhsScratch {
    heff: CMatrix,
    x: CMatrix,
}

impl RhsScratch {
    pub fn new(dim: usize) -> Self {
        Self {
            heff: CMatrix::zeros(dim, dim),
            x: CMatrix::zeros(dim, dim),
        }
    }
}

impl Channel {
    fn new(name: &'static str, op: CMatrix, rate: Rate) -> Self {
        let op_dag = dagger(&op);
        let op_dag_op = &op_dag * &op;
        Self {
            op_sparse: sparse(&op),
            name,
            op,
            op_dag,
            op_dag_op,
            rate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub ops: OperatorSet,
    pub seq: PulseSequence,
    pub cavity: CavityMode,
    /// Static effective Hamiltonian: H0 − (i/2) Σ r L†L over constant channels.
    heff_static: CMatrix,
    /// Σ coefficient · L†L over photon-proportional channels, by delay.
    per_photon_anti: Vec<(f64, Sparse)>,
    sigma_ee: Sparse,
    sigma_eg: Sparse,
    sigma_ge: Sparse,
    beam_splitter: Option<Sparse>,
    pub g_om: f64,
    pub channels: Vec<Channel>,
}

fn is_negligible(rate: f64) -> bool {
    rate == 0.0
}

/// Assemble the model for `params` driven by `seq`.
pub fn build_model(
    params: &DeviceParams,
    seq: &PulseSequence,
    options: &ModelOptions,
) -> Result<LindbladModel> {
    let n_o = match options.cavity {
        CavityMode::FullCavity { n_o } => Some(n_o),
        CavityMode::Eliminated => None,
    };
    let ops = build_operators_with_ceiling(options.n_m, n_o, options.dimension_ceiling)?;
    let mode = params.mode();
    let kappa_o = params.kappa_o();
    let n_peak = seq.peak_photons();

    if matches!(options.cavity, CavityMode::Eliminated) {
        let g_peak = n_peak.sqrt() * mode.g_om;
        if 4.0 * g_peak > kappa_o {
            return Err(Error::Validity(format!(
                "adiabatic elimination invalid: 4G_om = {:.3e} rad/s exceeds κ_o = {:.3e} rad/s",
                4.0 * g_peak,
                kappa_o
            )));
        }
    }
    for (i, s) in seq.segments().iter().enumerate() {
        let t0 = seq.start_of(i);
        for t in [t0, t0 + 0.5 * s.duration, t0 + s.duration] {
            let vals = [seq.stark_offset(t), seq.drive_field(t).norm(), seq.photons(t)];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite envelope at t = {t:e} s")));
            }
        }
    }

    let sigma_ge = ops.sigma_ge.clone();
    let sigma_eg = dagger(&sigma_ge);
    let b_dag = dagger(&ops.b);
    let jc = &sigma_eg * &ops.b + &sigma_ge * &b_dag;
    let h0 = ops.sigma_ee.map(|z| z * seq.qubit_detuning) + jc.map(|z| z * params.g_pe);

    let n_f = params.n_f();
    let q = &params.qubit;
    let mut channels = Vec::new();
    let mut push = |name, op: CMatrix, rate: Rate| {
        let zero = match rate {
            Rate::Constant(r) => is_negligible(r),
            Rate::PerPhoton { coefficient, .. } => is_negligible(coefficient),
        };
        if !zero {
            channels.push(Channel::new(name, op, rate));
        }
    };
    push("qubit_decay", sigma_ge.clone(), Rate::Constant(q.decay_rate()));
    push(
        "qubit_dephasing",
        ops.sigma_ee.clone(),
        Rate::Constant(2.0 * q.dephasing_rate()),
    );
    push(
        "phonon_decay",
        ops.b.clone(),
        Rate::Constant(mode.kappa_m_t1 * (n_f + 1.0)),
    );
    push(
        "phonon_excitation",
        b_dag.clone(),
        Rate::Constant(mode.kappa_m_t1 * n_f),
    );

    let beam_splitter = match options.cavity {
        CavityMode::FullCavity { .. } => {
            let a = ops.a.clone().expect("photon operators present");
            let a_dag = dagger(&a);
            push("optical_decay", a.clone(), Rate::Constant(kappa_o));
            Some(&a_dag * &ops.b + &a * &b_dag)
        }
        CavityMode::Eliminated => {
            let per_photon = backaction_rate(1.0, mode.g_om, kappa_o)?;
            push(
                "optomechanical_readout",
                ops.b.clone(),
                Rate::PerPhoton {
                    coefficient: per_photon,
                    delay: 0.0,
                },
            );
            None
        }
    };
    if let Some(h) = &options.heating {
        h.validate()?;
        push(
            "hot_bath_decay",
            ops.b.clone(),
            Rate::PerPhoton {
                coefficient: h.gamma_p_per_photon * (h.n_p + 1.0),
                delay: h.onset_delay,
            },
        );
        push(
            "hot_bath_excitation",
            b_dag,
            Rate::PerPhoton {
                coefficient: h.gamma_p_per_photon * h.n_p,
                delay: h.onset_delay,
            },
        );
    }

    let half_i = Complex64::new(0.0, -0.5);
    let mut heff_static = h0;
    let mut per_photon_anti: Vec<(f64, CMatrix)> = Vec::new();
    for ch in &channels {
        match ch.rate {
            Rate::Constant(r) => heff_static += ch.op_dag_op.map(|z| z * half_i * r),
            Rate::PerPhoton { coefficient, delay } => {
                let term = ch.op_dag_op.map(|z| z * half_i * coefficient);
                match per_photon_anti.iter_mut().find(|(d, _)| *d == delay) {
                    Some((_, m)) => *m += term,
                    None => per_photon_anti.push((delay, term)),
                }
            }
        }
    }

    Ok(LindbladModel {
        ops: ops.clone(),
        seq: seq.clone(),
        cavity: options.cavity,
        heff_static,
        per_photon_anti: per_photon_anti.into_iter().map(|(d, m)| (d, sparse(&m))).collect(),
        sigma_ee: sparse(&ops.sigma_ee),
        sigma_eg: sparse(&sigma_eg),
        sigma_ge: sparse(&ops.sigma_ge),
        beam_splitter: beam_splitter.as_ref().map(sparse),
        g_om: mode.g_om,
        channels,
    })
}

impl LindbladModel {
    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    pub fn rate_at(&self, rate: Rate, t: f64) -> f64 {
        match rate {
            Rate::Constant(r) => r,
            Rate::PerPhoton { coefficient, delay } => coefficient * self.seq.photons(t - delay),
        }
    }

    /// Largest total decay rate over the sequence, used for step-size checks.
    pub fn max_total_rate(&self) -> f64 {
        let n_peak = self.seq.peak_photons();
        self.channels
            .iter()
            .map(|ch| match ch.rate {
                Rate::Constant(r) => r,
                Rate::PerPhoton { coefficient, .. } => coefficient * n_peak,
            })
            .sum()
    }

    /// Non-Hermitian effective Hamiltonian H(t) − (i/2) Σ r(t) L†L.
    pub fn effective_hamiltonian(&self, t: f64) -> CMatrix {
        let mut h = self.heff_static.clone();
        self.fill_effective_hamiltonian(t, &mut h);
        h
    }

    fn fill_effective_hamiltonian(&self, t: f64, h: &mut CMatrix) {
        h.copy_from(&self.heff_static);
        let re = |x: f64| Complex64::new(x, 0.0);
        let delta = self.seq.stark_offset(t);
        if delta != 0.0 {
            add_sparse(h, &self.sigma_ee, re(delta));
        }
        let f = self.seq.drive_field(t);
        if f.norm_sqr() != 0.0 {
            add_sparse(h, &self.sigma_eg, f);
            add_sparse(h, &self.sigma_ge, f.conj());
        }
        if let Some(bs) = &self.beam_splitter {
            let n_c = self.seq.photons(t);
            if n_c > 0.0 {
                add_sparse(h, bs, re(n_c.sqrt() * self.g_om));
            }
        }
        for (delay, m) in &self.per_photon_anti {
            let n_c = self.seq.photons(t - delay);
            if n_c > 0.0 {
                add_sparse(h, m, re(n_c));
            }
        }
    }

    /// Hermitian part of the Hamiltonian at `t`.
    pub fn hamiltonian(&self, t: f64) -> CMatrix {
        let h = self.effective_hamiltonian(t);
        (&h + h.adjoint()).map(|z| z * 0.5)
    }

    /// dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ r L ρ L†.
    pub fn rhs(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        self.rhs_into(t, rho, &mut out, &mut RhsScratch::new(d));
        out
    }

    /// Allocation-free form of [`rhs`](Self::rhs).
    pub fn rhs_into(&self, t: f64, rho: &CMatrix, out: &mut CMatrix, s: &mut RhsScratch) {
        self.fill_effective_hamiltonian(t, &mut s.heff);
        s.x.gemm(Complex64::new(1.0, 0.0), &s.heff, rho, Complex64::new(0.0, 0.0));
        let n = rho.nrows();
        let mi = Complex64::new(0.0, -1.0);
        // ρ Heff† = (Heff ρ)† for Hermitian ρ
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] = mi * s.x[(i, j)] - mi * s.x[(j, i)].conj();
            }
        }
        for ch in &self.channels {
            let r = self.rate_at(ch.rate, t);
            if r == 0.0 {
                continue;
            }
            // L ρ L† entrywise: Σ L_ij ρ_jl conj(L_kl) at (i, k)
            for &(i, j, a) in &ch.op_sparse {
                let ar = a * r;
                for &(k, l, b) in &ch.op_sparse {
                    out[(i, k)] += ar * rho[(j, l)] * b.conj();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::paper_device;
    use crate::sequence::PulseSegment;
    use crate::units::angular;
    use approx::assert_relative_eq;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_power_readout_is_no_readout() {
        let p = paper_device().device;
        let with = PulseSequence::new(
            vec![PulseSegment::idle(10e-9), PulseSegment::readout(0.0, 5e-9, 5e-9, 50e-9)],
            0.0,
            1.0,
        )
        .unwrap();
        let without = PulseSequence::new(vec![PulseSegment::idle(60e-9)], 0.0, 1.0).unwrap();
        let opts = ModelOptions::eliminated(4);
        let a = build_model(&p, &with, &opts).unwrap();
        let b = build_model(&p, &without, &opts).unwrap();
        let rho = crate::density::DensityMatrix::basis(&a.ops, 1, 1, 0).rho;
        for t in [0.0, 20e-9, 35e-9, 59e-9] {
            assert_eq!(a.rhs(t, &rho), b.rhs(t, &rho));
        }
    }

    #[test]
    fn resonant_swap_block_coupling() {
        let p = paper_device().device;
        let seq = PulseSequence::empty(0.0);
        let m = build_model(&p, &seq, &ModelOptions::eliminated(4)).unwrap();
        let h = m.hamiltonian(0.0);
        let e0 = m.ops.index(1, 0, 0);
        let g1 = m.ops.index(0, 1, 0);
        assert_relative_eq!(h[(e0, g1)].re, angular(2.24e6), max_relative = 1e-12);
        assert_eq!(h[(e0, e0)].re, 0.0);
        assert_eq!(h[(g1, g1)].re, 0.0);
    }

    #[test]
    fn adiabaticity_violation_rejected() {
        let p = paper_device().device;
        // 4 √n g_om > κ_o needs n > (κ_o / 4 g_om)^2 ≈ 9.2e5
        let seq = PulseSequence::new(vec![PulseSegment::readout(1e7, 1e-9, 1e-9, 10e-9)], 0.0, 1.0)
            .unwrap();
        assert!(matches!(
            build_model(&p, &seq, &ModelOptions::eliminated(4)),
            Err(Error::Validity(_))
        ));
        assert!(build_model(&p, &seq, &ModelOptions::full_cavity(3, 2)).is_ok());
    }

    #[test]
    fn channel_rates_nonnegative_and_rhs_traceless() {
        let p = paper_device().device;
        let seq = PulseSequence::new(
            vec![
                PulseSegment::drive(angular(10e6), 0.0, 0.3, 20e-9),
                PulseSegment::stark(angular(10e6), 15e-9, 60e-9),
                PulseSegment::readout(44.0, 20e-9, 20e-9, 80e-9),
            ],
            angular(-10e6),
            1.0,
        )
        .unwrap();
        let heating = HeatingModel {
            gamma_p_per_photon: 1e3,
            n_p: 10.0,
            onset_delay: 0.0,
        };
        for opts in [
            ModelOptions::eliminated(4).with_heating(heating.clone()),
            ModelOptions::full_cavity(3, 2),
        ] {
            let m = build_model(&p, &seq, &opts).unwrap();
            let rho = crate::density::DensityMatrix::thermal_phonon(&m.ops, 1, 0.3).rho;
            for k in 0..40 {
                let t = k as f64 * 4e-9;
                for ch in &m.channels {
                    assert!(m.rate_at(ch.rate, t) >= 0.0);
                }
                let d = m.rhs(t, &rho);
                assert!(d.trace().norm() < 1e-12 * max_abs(&d));
                assert!(max_abs(&(&d - d.adjoint())) < 1e-6 * max_abs(&d));
            }
        }
    }
}
