//! Least-squares fitting: linear, and Levenberg–Marquardt for nonlinear models.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Parameter covariance s²(JᵀWJ)⁻¹, or (JᵀWJ)⁻¹ when weights are absolute.
    pub covariance: DMatrix<f64>,
    pub residual_ss: f64,
    pub dof: usize,
}

impl FitResult {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

/// How to scale the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Estimate the noise from the residuals.
    Residual,
    /// Weights are 1/σ² with known σ.
    Absolute,
}

fn invert_normal(jtj: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    jtj.clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| jtj.clone().pseudo_inverse(1e-14).ok())
        .ok_or_else(|| Error::Fit("singular normal matrix".into()))
}

/// Weighted linear least squares for y ≈ X β. `weights` are 1/σ² per point.
pub fn linear_least_squares(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    weights: Option<&DVector<f64>>,
    scale: Scale,
) -> Result<FitResult> {
    let (n, p) = design.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < p {
        return Err(Error::Fit(format!("insufficient points: {n} for {p} parameters")));
    }
    let w = weights.cloned().unwrap_or_else(|| DVector::from_element(n, 1.0));
    let sw = w.map(f64::sqrt);
    let mut xw = design.clone();
    for (mut row, s) in xw.row_iter_mut().zip(sw.iter()) {
        row *= *s;
    }
    let yw = y.component_mul(&sw);
    let svd = xw.clone().svd(true, true);
    let beta = svd
        .solve(&yw, 1e-13)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let resid = &yw - &xw * &beta;
    let rss = resid.norm_squared();
    let dof = n - p;
    let base = invert_normal(&(xw.transpose() * &xw))?;
    let s2 = match scale {
        Scale::Absolute => 1.0,
        Scale::Residual => {
            if dof > 0 {
                rss / dof as f64
            } else {
                0.0
            }
        }
    };
    Ok(FitResult {
        params: beta.iter().copied().collect(),
        covariance: base * s2,
        residual_ss: rss,
        dof,
    })
}

/// Unweighted Levenberg–Marquardt fit of `model(x, p)` to `(x, y)` from `p0`,
/// with a forward-difference Jacobian.
pub fn levenberg_marquardt(
    x: &[f64],
    y: &[f64],
    p0: &[f64],
    model: &dyn Fn(f64, &[f64]) -> f64,
) -> Result<FitResult> {
    let n = x.len();
    let np = p0.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < np {
        return Err(Error::Fit(format!("insufficient points: {n} for {np} parameters")));
    }
    let residuals = |p: &[f64]| -> DVector<f64> {
        DVector::from_iterator(n, x.iter().zip(y).map(|(&xi, &yi)| yi - model(xi, p)))
    };
    // central differences; the floor keeps the step finite for zero-valued parameters
    let jacobian = |p: &[f64]| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(n, np);
        let mut q = p.to_vec();
        for k in 0..np {
            let h = 1e-6 * p[k].abs().max(1e-3);
            q[k] = p[k] + h;
            let up: Vec<f64> = x.iter().map(|&xi| model(xi, &q)).collect();
            q[k] = p[k] - h;
            for (i, &xi) in x.iter().enumerate() {
                j[(i, k)] = (up[i] - model(xi, &q)) / (2.0 * h);
            }
            q[k] = p[k];
        }
        j
    };

    let mut p = p0.to_vec();
    let mut r = residuals(&p);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::Fit("model not finite at the initial guess".into()));
    }
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let j = jacobian(&p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.clone().lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = residuals(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let rel = (cost - ct) / cost.max(1e-300);
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(s, v)| s.abs() <= 1e-12 * v.abs().max(1e-300));
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel < 1e-15 || small_step {
                    return finish(&p, cost, n, np, &jacobian);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    finish(&p, cost, n, np, &jacobian)
}

fn finish(
    p: &[f64],
    cost: f64,
    n: usize,
    np: usize,
    jacobian: &dyn Fn(&[f64]) -> DMatrix<f64>,
) -> Result<FitResult> {
    let j = jacobian(p);
    let dof = n - np;
    let s2 = if dof > 0 { cost / dof as f64 } else { 0.0 };
    let cov = invert_normal(&(j.transpose() * &j))
        .map(|c| c * s2)
        .unwrap_or_else(|_| DMatrix::from_element(np, np, f64::NAN));
    Ok(FitResult {
        params: p.to_vec(),
        covariance: cov,
        residual_ss: cost,
        dof,
    })
}

/// Angular frequency of the strongest component of `y` (mean removed),
/// scanning a fine grid up to the Nyquist limit of the mean spacing.
/// Ties go to the lowest frequency.
pub fn dominant_frequency(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 3 {
        return None;
    }
    let span = x.last()? - x.first()?;
    if !(span > 0.0) {
        return None;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let dx = span / (x.len() - 1) as f64;
    let w_max = std::f64::consts::PI / dx;
    let w_min = std::f64::consts::PI / span;
    let steps = 40 * x.len();
    let mut best = (0.0, f64::NAN);
    for k in 0..=steps {
        let w = w_min + (w_max - w_min) * k as f64 / steps as f64;
        let (mut c, mut s) = (0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            c += (yi - mean) * (w * xi).cos();
            s += (yi - mean) * (w * xi).sin();
        }
        let p = c * c + s * s;
        if p > best.0 * (1.0 + 1e-12) {
            best = (p, w);
        }
    }
    best.1.is_finite().then_some(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_exact_line() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let design = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let y = DVector::from_iterator(10, x.iter().map(|v| 3.0 - 2.0 * v));
        let f = linear_least_squares(&design, &y, None, Scale::Residual).unwrap();
        assert!((f.params[0] - 3.0).abs() < 1e-12);
        assert!((f.params[1] + 2.0).abs() < 1e-12);
        assert!(f.sigma(1) < 1e-10);
    }

    #[test]
    fn lm_recovers_damped_cosine() {
        let x: Vec<f64> = (0..80).map(|k| k as f64 * 5e-9).collect();
        let truth = [0.5, 0.4, 2.0 * std::f64::consts::PI * 4.48e6, 1.0 / 300e-9, 0.3];
        let m = |t: f64, p: &[f64]| p[0] + p[1] * (-t * p[3]).exp() * (p[2] * t + p[4]).cos();
        let y: Vec<f64> = x.iter().map(|&t| m(t, &truth)).collect();
        let w0 = dominant_frequency(&x, &y).unwrap();
        let f = levenberg_marquardt(&x, &y, &[0.5, 0.3, w0, 1e6, 0.0], &m).unwrap();
        for (a, b) in f.params.iter().zip(truth) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn too_few_points() {
        let m = |t: f64, p: &[f64]| p[0] * t + p[1];
        assert!(matches!(
            levenberg_marquardt(&[1.0], &[1.0], &[1.0, 0.0], &m),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn periodogram_peak() {
        let x: Vec<f64> = (0..100).map(|k| k as f64 * 1e-8).collect();
        let y: Vec<f64> = x.iter().map(|t| (2e7 * t).cos()).collect();
        let w = dominant_frequency(&x, &y).unwrap();
        assert!((w - 2e7).abs() < 0.02 * 2e7, "{w}");
    }
}
