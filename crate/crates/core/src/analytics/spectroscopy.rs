use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::{linear_least_squares, Scale};
use crate::params::DeviceParams;

/// Eigenfrequencies of the qubit coupled to every mechanical mode, for each
/// qubit frequency in `qubit_freqs` (rad/s, lab frame). Rows are sorted ascending.
pub fn avoided_crossing(params: &DeviceParams, qubit_freqs: &[f64]) -> Vec<Vec<f64>> {
    let modes = &params.mech_modes;
    let dim = 1 + modes.len();
    // diagonalize relative to the first mode frequency to keep conditioning good
    let reference = modes.first().map(|m| m.omega_m).unwrap_or(0.0);
    let mut base = DMatrix::<f64>::zeros(dim, dim);
    for (i, m) in modes.iter().enumerate() {
        base[(i + 1, i + 1)] = m.omega_m - reference;
        let g = params.mode_g_pe(i);
        base[(0, i + 1)] = g;
        base[(i + 1, 0)] = g;
    }
    qubit_freqs
        .iter()
        .map(|&wq| {
            let mut h = base.clone();
            h[(0, 0)] = wq - reference;
            let mut ev: Vec<f64> = h
                .symmetric_eigenvalues()
                .iter()
                .map(|e| e + reference)
                .collect();
            ev.sort_by(f64::total_cmp);
            ev
        })
        .collect()
}

/// Smallest gap between adjacent branches over the grid, with the qubit
/// frequency where it occurs.
pub fn minimum_splitting(branches: &[Vec<f64>], qubit_freqs: &[f64]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (row, &wq) in branches.iter().zip(qubit_freqs) {
        for w in row.windows(2) {
            let gap = w[1] - w[0];
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, wq));
            }
        }
    }
    best
}

/// Mechanical linewidth κ_i,m + 4 g_om² n_c/κ_o.
pub fn linewidth_model(kappa_i_m: f64, g_om: f64, kappa_o: f64, n_c: f64) -> f64 {
    kappa_i_m + 4.0 * g_om * g_om * n_c / kappa_o
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinewidthFit {
    pub g_om: f64,
    pub kappa_i_m: f64,
    /// dκ_m/dn_c.
    pub slope: f64,
}

/// Fit intrinsic linewidth and g_om from linewidths measured at several
/// intracavity photon numbers. A non-positive slope returns g_om = 0.
pub fn fit_linewidth_vs_power(kappa_o: f64, n_c: &[f64], linewidths: &[f64]) -> Result<LinewidthFit> {
    if n_c.len() != linewidths.len() {
        return Err(Error::DimensionMismatch {
            expected: n_c.len(),
            got: linewidths.len(),
        });
    }
    if n_c.len() < 2 {
        return Err(Error::Fit("insufficient points".into()));
    }
    let n = n_c.len();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { n_c[i] });
    let f = linear_least_squares(&design, &DVector::from_column_slice(linewidths), None, Scale::Residual)?;
    let slope = f.params[1];
    let g_om = if slope > 0.0 {
        (slope * kappa_o / 4.0).sqrt()
    } else {
        0.0
    };
    Ok(LinewidthFit {
        g_om,
        kappa_i_m: f.params[0],
        slope,
    })
}

/// Normalized Lorentzian of full width `width` centred at `center`.
fn lorentzian(w: f64, center: f64, width: f64) -> f64 {
    let hw = 0.5 * width;
    hw / std::f64::consts::PI / ((w - center).powi(2) + hw * hw)
}

/// Anti-Stokes noise power spectral density: one Lorentzian per mode with
/// width κ_i,m + γ_om,i and area γ_om,i n_m,i (scattered photons per second).
pub fn thermal_npsd(params: &DeviceParams, omegas: &[f64], n_c: f64, occupancies: &[f64]) -> Result<Vec<f64>> {
    if occupancies.len() != params.mech_modes.len() {
        return Err(Error::DimensionMismatch {
            expected: params.mech_modes.len(),
            got: occupancies.len(),
        });
    }
    let kappa_o = params.kappa_o();
    let terms: Vec<(f64, f64, f64)> = params
        .mech_modes
        .iter()
        .zip(occupancies)
        .map(|(m, &n)| {
            let gamma = 4.0 * m.g_om * m.g_om * n_c / kappa_o;
            (m.omega_m, m.kappa_i_m + gamma, gamma * n)
        })
        .collect();
    Ok(omegas
        .iter()
        .map(|&w| terms.iter().map(|&(c, width, area)| area * lorentzian(w, c, width)).sum())
        .collect())
}
