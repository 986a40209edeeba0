//! Fixed-step RK4 evolution of the master equation.

use num_complex::Complex64;

use crate::density::{DensityMatrix, HERMITIAN_TOL, TRACE_TOL};
use crate::error::{Error, Result};
use crate::model::{LindbladModel, RhsScratch};
use crate::operators::CMatrix;

/// Default maximum step, 0.2 ns.
pub const DEFAULT_DT: f64 = 0.2e-9;

/// Largest |rate·dt| for which RK4 stays well inside its stability region.
const MAX_RATE_DT: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub max_dt: f64,
    /// Diagonalize at every grid point to check positivity.
    pub check_positivity: bool,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            max_dt: DEFAULT_DT,
            check_positivity: true,
        }
    }
}

impl IntegratorSettings {
    pub fn with_dt(max_dt: f64) -> Self {
        Self {
            max_dt,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

/// One exported trajectory row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t_ns: f64,
    pub p_e: f64,
    pub n_m: f64,
    pub n_o: Option<f64>,
    pub trace_error: f64,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn rows(&self, model: &LindbladModel) -> Vec<TrajectoryRow> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| TrajectoryRow {
                t_ns: t * 1e9,
                p_e: s.expectation(&model.ops.sigma_ee).unwrap_or(f64::NAN),
                n_m: s.expectation(&model.ops.n_b).unwrap_or(f64::NAN),
                n_o: model.ops.n_a.as_ref().map(|n| s.expectation(n).unwrap_or(f64::NAN)),
                trace_error: s.trace_error(),
            })
            .collect()
    }
}

fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// y += h·k
fn add_scaled(y: &mut CMatrix, h: f64, k: &CMatrix) {
    for (a, b) in y.iter_mut().zip(k.iter()) {
        *a += b * h;
    }
}

/// Preallocated RK4 stages.
struct Rk4 {
    k: [CMatrix; 4],
    tmp: CMatrix,
    scratch: RhsScratch,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        let z = CMatrix::zeros(dim, dim);
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
            scratch: RhsScratch::new(dim),
        }
    }

    fn step(&mut self, model: &LindbladModel, t: f64, h: f64, rho: &mut CMatrix) {
        let Self { k, tmp, scratch } = self;
        let [k1, k2, k3, k4] = k;
        model.rhs_into(t, rho, k1, scratch);
        tmp.copy_from(rho);
        add_scaled(tmp, 0.5 * h, k1);
        model.rhs_into(t + 0.5 * h, tmp, k2, scratch);
        tmp.copy_from(rho);
        add_scaled(tmp, 0.5 * h, k2);
        model.rhs_into(t + 0.5 * h, tmp, k3, scratch);
        tmp.copy_from(rho);
        add_scaled(tmp, h, k3);
        // left limit at the step end: segments are half-open, so an envelope
        // that switches off exactly at t + h still applies to this step
        model.rhs_into(t + h * (1.0 - 1e-9), tmp, k4, scratch);
        let w = h / 6.0;
        add_scaled(rho, w, k1);
        add_scaled(rho, 2.0 * w, k2);
        add_scaled(rho, 2.0 * w, k3);
        add_scaled(rho, w, k4);
    }
}

fn check_step(rho: &CMatrix, t: f64) -> Result<()> {
    let tr = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    if !(tr < TRACE_TOL) {
        return Err(Error::Integration {
            invariant: "trace",
            time_s: t,
            value: tr,
        });
    }
    let n = rho.nrows();
    let mut herm: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    if !(herm < HERMITIAN_TOL) {
        return Err(Error::Integration {
            invariant: "hermiticity",
            time_s: t,
            value: herm,
        });
    }
    Ok(())
}

/// Evolve `rho0`, taken as the state at `t_grid[0]`, and return the state at
/// every grid point. Each grid interval is split into equal steps no longer
/// than `settings.max_dt`.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    if rho0.dims != model.ops.dims {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: rho0.dim(),
        });
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
    }
    if !(settings.max_dt > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let stiffness = model.max_total_rate() * settings.max_dt;
    if stiffness > MAX_RATE_DT {
        return Err(Error::InvalidInput(format!(
            "step {:.3e} s too large for decay rate {:.3e} /s (rate·dt = {stiffness:.2})",
            settings.max_dt,
            model.max_total_rate()
        )));
    }
    rho0.check(t_grid[0])?;

    let mut rho = rho0.rho.clone();
    let mut rk4 = Rk4::new(model.dim());
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    times.push(t_grid[0]);
    states.push(rho0.clone());
    for w in t_grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let n = ((t1 - t0) / settings.max_dt - 1e-9).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        for k in 0..n {
            let t = t0 + k as f64 * h;
            rk4.step(model, t, h, &mut rho);
            check_step(&rho, t + h)?;
            hermitize(&mut rho);
        }
        let state = DensityMatrix {
            dims: rho0.dims,
            rho: rho.clone(),
        };
        if settings.check_positivity {
            state.check(t1)?;
        }
        times.push(t1);
        states.push(state);
    }
    Ok(Trajectory { times, states })
}

/// Evolve from `t0` to `t1` and return only the final state.
pub fn evolve_to(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<DensityMatrix> {
    if t1 <= t0 {
        return Ok(rho0.clone());
    }
    let traj = evolve(model, rho0, &[t0, t1], settings)?;
    Ok(traj.states.into_iter().last().expect("two states"))
}

/// Uniform grid from `t0` to `t1` inclusive with `n` intervals.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| t0 + (t1 - t0) * k as f64 / n as f64)
        .collect()
}
