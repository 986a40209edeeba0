//! Truncated composite Hilbert space: qubit ⊗ phonon [⊗ photon].
//!
//! Basis ordering is qubit-major; the qubit index is 0 = |g⟩, 1 = |e⟩.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const DEFAULT_DIMENSION_CEILING: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub qubit: usize,
    pub phonon: usize,
    pub photon: Option<usize>,
}

impl Dims {
    pub fn total(&self) -> usize {
        self.qubit * self.phonon * self.photon.unwrap_or(1)
    }
}

/// Dense embedded operators on the composite space.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub dims: Dims,
    pub identity: CMatrix,
    /// Qubit lowering σ_ge = |g⟩⟨e|.
    pub sigma_ge: CMatrix,
    /// Excited-state projector σ_ee.
    pub sigma_ee: CMatrix,
    /// Phonon annihilator b.
    pub b: CMatrix,
    /// Phonon number b†b.
    pub n_b: CMatrix,
    /// Photon annihilator a, when the optical mode is retained.
    pub a: Option<CMatrix>,
    pub n_a: Option<CMatrix>,
}

/// Single-mode truncated annihilation operator on `n` levels.
pub fn annihilator(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    m
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

fn embed(qubit: &CMatrix, phonon: &CMatrix, photon: Option<&CMatrix>) -> CMatrix {
    let qp = qubit.kronecker(phonon);
    match photon {
        Some(o) => qp.kronecker(o),
        None => qp,
    }
}

/// Build the operator set with the default dimension ceiling.
pub fn build_operators(n_m: usize, n_o: Option<usize>) -> Result<OperatorSet> {
    build_operators_with_ceiling(n_m, n_o, DEFAULT_DIMENSION_CEILING)
}

pub fn build_operators_with_ceiling(
    n_m: usize,
    n_o: Option<usize>,
    ceiling: usize,
) -> Result<OperatorSet> {
    if n_m < 2 {
        return Err(Error::InvalidInput(format!(
            "phonon truncation must be ≥ 2, got {n_m}"
        )));
    }
    if let Some(o) = n_o {
        if o < 2 {
            return Err(Error::InvalidInput(format!(
                "photon truncation must be ≥ 2, got {o}"
            )));
        }
    }
    let dims = Dims {
        qubit: 2,
        phonon: n_m,
        photon: n_o,
    };
    let dim = dims.total();
    if dim > ceiling {
        return Err(Error::Resource { dim, ceiling });
    }

    let iq = CMatrix::identity(2, 2);
    let im = CMatrix::identity(n_m, n_m);
    let io = n_o.map(|o| CMatrix::identity(o, o));

    let mut sm = CMatrix::zeros(2, 2);
    sm[(0, 1)] = Complex64::new(1.0, 0.0);
    let see = sm.adjoint() * &sm;
    let bm = annihilator(n_m);

    let sigma_ge = embed(&sm, &im, io.as_ref());
    let sigma_ee = embed(&see, &im, io.as_ref());
    let b = embed(&iq, &bm, io.as_ref());
    let n_b = b.adjoint() * &b;
    let a = n_o.map(|o| embed(&iq, &im, Some(&annihilator(o))));
    let n_a = a.as_ref().map(|a| a.adjoint() * a);

    Ok(OperatorSet {
        dims,
        identity: CMatrix::identity(dim, dim),
        sigma_ge,
        sigma_ee,
        b,
        n_b,
        a,
        n_a,
    })
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    /// Composite basis index of |q, m, o⟩.
    pub fn index(&self, qubit: usize, phonon: usize, photon: usize) -> usize {
        let no = self.dims.photon.unwrap_or(1);
        (qubit * self.dims.phonon + phonon) * no + photon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nnz(m: &CMatrix) -> usize {
        m.iter().filter(|z| z.norm() > 0.0).count()
    }

    #[test]
    fn smallest_space() {
        let ops = build_operators(2, None).unwrap();
        assert_eq!(ops.dim(), 4);
        let x = &ops.sigma_ge * ops.b.adjoint();
        assert_eq!(nnz(&x), 1);
    }

    #[test]
    fn truncation_identity_below_top() {
        let ops = build_operators(5, None).unwrap();
        let c = commutator(&ops.b, &ops.b.adjoint());
        // ⟨g,3|[b,b†]|g,3⟩
        let i = ops.index(0, 3, 0);
        assert!((c[(i, i)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn commutator_differs_from_identity_only_at_top() {
        for n_m in 2..7 {
            let ops = build_operators(n_m, Some(2)).unwrap();
            let c = commutator(&ops.b, &ops.b.adjoint()) - &ops.identity;
            for r in 0..ops.dim() {
                for col in 0..ops.dim() {
                    let top = r == col && (r / ops.dims.photon.unwrap()) % n_m == n_m - 1;
                    if !top {
                        assert!(c[(r, col)].norm() < 1e-14);
                    } else {
                        assert!((c[(r, col)].re + n_m as f64).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn cross_subsystem_commutators_vanish() {
        let ops = build_operators(3, Some(3)).unwrap();
        assert_eq!(ops.dim(), 18);
        let a = ops.a.clone().unwrap();
        let set = [
            (&ops.sigma_ge, &ops.b),
            (&ops.sigma_ge, &a),
            (&ops.b, &a),
        ];
        for (x, y) in set {
            for (p, q) in [
                (x.clone(), y.clone()),
                (x.adjoint(), y.clone()),
                (x.clone(), y.adjoint()),
                (x.adjoint(), y.adjoint()),
            ] {
                let c = commutator(&p, &q);
                assert!(c.iter().all(|z| z.norm() == 0.0));
            }
        }
    }

    #[test]
    fn dimension_ceiling() {
        assert!(matches!(
            build_operators_with_ceiling(10, Some(10), 100),
            Err(Error::Resource { dim: 200, .. })
        ));
        assert!(build_operators(300, None).is_err());
        assert!(build_operators(1, None).is_err());
    }
}
