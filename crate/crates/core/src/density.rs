//! Density matrices on the composite space.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{CMatrix, Dims, OperatorSet};

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub dims: Dims,
    pub rho: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(dims: Dims, rho: CMatrix) -> Result<Self> {
        let d = dims.total();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: rho.nrows(),
            });
        }
        Ok(Self { dims, rho })
    }

    /// Pure basis state |q, m, o⟩.
    pub fn basis(ops: &OperatorSet, qubit: usize, phonon: usize, photon: usize) -> Self {
        let d = ops.dim();
        let i = ops.index(qubit, phonon, photon);
        let mut rho = CMatrix::zeros(d, d);
        rho[(i, i)] = Complex64::new(1.0, 0.0);
        Self {
            dims: ops.dims,
            rho,
        }
    }

    pub fn ground(ops: &OperatorSet) -> Self {
        Self::basis(ops, 0, 0, 0)
    }

    /// Qubit in `qubit`, phonon in a truncated thermal state of mean `n_th`,
    /// photon in vacuum.
    pub fn thermal_phonon(ops: &OperatorSet, qubit: usize, n_th: f64) -> Self {
        let d = ops.dim();
        let n_m = ops.dims.phonon;
        let ratio = if n_th > 0.0 { n_th / (n_th + 1.0) } else { 0.0 };
        let weights: Vec<f64> = (0..n_m).map(|k| ratio.powi(k as i32)).collect();
        let z: f64 = weights.iter().sum();
        let mut rho = CMatrix::zeros(d, d);
        for (k, w) in weights.iter().enumerate() {
            let i = ops.index(qubit, k, 0);
            rho[(i, i)] = Complex64::new(w / z, 0.0);
        }
        Self {
            dims: ops.dims,
            rho,
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn trace_error(&self) -> f64 {
        (self.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    /// Largest |ρ − ρ†| entry.
    pub fn hermiticity_error(&self) -> f64 {
        let diff = &self.rho - self.rho.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// ⟨O⟩ = tr(ρ O) including any imaginary part.
    pub fn expectation_complex(&self, observable: &CMatrix) -> Result<Complex64> {
        let d = self.dim();
        if observable.nrows() != d || observable.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: observable.nrows(),
            });
        }
        // tr(ρO) = Σ_ij ρ_ij O_ji
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.rho[(i, j)] * observable[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Real expectation value of a Hermitian observable.
    pub fn expectation(&self, observable: &CMatrix) -> Result<f64> {
        let z = self.expectation_complex(observable)?;
        debug_assert!(
            z.im.abs() < 1e-9 * (1.0 + z.re.abs()),
            "non-real expectation {z} for a Hermitian observable"
        );
        Ok(z.re)
    }

    /// Check all state invariants, naming the first that fails.
    pub fn check(&self, time_s: f64) -> Result<()> {
        let te = self.trace_error();
        if te >= TRACE_TOL {
            return Err(Error::Integration {
                invariant: "trace",
                time_s,
                value: te,
            });
        }
        let he = self.hermiticity_error();
        if he >= HERMITIAN_TOL {
            return Err(Error::Integration {
                invariant: "hermiticity",
                time_s,
                value: he,
            });
        }
        let me = self.min_eigenvalue();
        if me < -POSITIVITY_TOL {
            return Err(Error::Integration {
                invariant: "positivity",
                time_s,
                value: me,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::build_operators;

    #[test]
    fn ground_and_excited_populations() {
        let ops = build_operators(4, None).unwrap();
        let g = DensityMatrix::ground(&ops);
        assert_eq!(g.expectation(&ops.sigma_ee).unwrap(), 0.0);
        let e = DensityMatrix::basis(&ops, 1, 0, 0);
        assert_eq!(e.expectation(&ops.sigma_ee).unwrap(), 1.0);
        e.check(0.0).unwrap();
    }

    /// Independent oracle: occupancy of a geometric distribution truncated at N levels.
    fn truncated_geometric_mean(n: f64, levels: usize) -> f64 {
        let r = n / (n + 1.0);
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..levels {
            num += k as f64 * r.powi(k as i32);
            den += r.powi(k as i32);
        }
        num / den
    }

    #[test]
    fn thermal_occupancy_at_six_levels() {
        let ops = build_operators(6, None).unwrap();
        let rho = DensityMatrix::thermal_phonon(&ops, 0, 0.64);
        let n = rho.expectation(&ops.n_b).unwrap();
        // truncation removes N q^N/(1 − q^N) from the untruncated mean
        let q: f64 = 0.64 / 1.64;
        let deficit = 6.0 * q.powi(6) / (1.0 - q.powi(6));
        assert!((0.64 - n - deficit).abs() < 1e-12, "n = {n}");
        assert!(deficit < 0.025);
        assert!((n - truncated_geometric_mean(0.64, 6)).abs() < 1e-12);
        rho.check(0.0).unwrap();
    }

    #[test]
    fn mismatched_observable() {
        let a = build_operators(4, None).unwrap();
        let b = build_operators(3, None).unwrap();
        let rho = DensityMatrix::ground(&a);
        assert!(matches!(
            rho.expectation(&b.n_b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn check_flags_trace() {
        let ops = build_operators(2, None).unwrap();
        let mut rho = DensityMatrix::ground(&ops);
        rho.rho[(0, 0)] = Complex64::new(1.1, 0.0);
        assert!(matches!(
            rho.check(1e-9),
            Err(Error::Integration {
                invariant: "trace",
                ..
            })
        ));
    }
}
