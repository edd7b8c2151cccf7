//! Brute-force time integration of the complex Westervelt equation
//!
//! ```text
//! ∂_t²(u − αu²) − ∇·(γ∇u) − ∇·(β∇u_t) = 0
//! (γ + β∂_t)∂_ν u + λu_t + ηu = g e^{−iωt}
//! ```
//!
//! to a periodic steady state, as an independent check of the cascade.
//!
//! With `v = u_t` and the spatial operators of the Helmholtz assembly
//! (`K = ∇·γ∇ − η` on the boundary, `D = ∇·β∇ − λ` on the boundary) the
//! semi-discrete system is `d/dt[(1 − 2αu) v] = K u + D v + s e^{−iωt}`,
//! `u_t = v`. It is advanced by the trapezoidal rule in the conserved
//! variable `q = (1 − 2αu) v`; the implicit nonlinear term `2αuv` is resolved
//! by Picard iteration, so each iteration is one solve with the fixed matrix
//! `I − (Δt/2) D − (Δt²/4) K`.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::{assemble_operator, Helmholtz};
use crate::medium::{BoundarySource, Medium};
use crate::scalar::norm2;
use crate::sparse::{Solver, SolverConfig, SparseMatrix};
use crate::{norms, ComplexField, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `u = 0, u_t = 0`.
    #[default]
    Zero,
    /// `u = u₁, u_t = −iω u₁` from the linear fundamental solve; shortens the transient.
    LinearSteadyState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeStepperConfig {
    pub steps_per_period: usize,
    pub n_periods_max: usize,
    pub periodicity_tol: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub initial: InitialData,
}

impl Default for TimeStepperConfig {
    fn default() -> Self {
        Self {
            steps_per_period: 256,
            n_periods_max: 60,
            periodicity_tol: 1e-8,
            picard_tol: 1e-10,
            picard_max_iters: 25,
            initial: InitialData::Zero,
        }
    }
}

impl TimeStepperConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < 64 {
            return Err(Error::InvalidArgument(format!(
                "steps_per_period must be ≥ 64, got {}",
                self.steps_per_period
            )));
        }
        let positive = [self.periodicity_tol, self.picard_tol].iter().all(|&t| t > 0.0);
        if !positive || self.picard_max_iters == 0 || self.n_periods_max == 0 {
            return Err(Error::InvalidArgument("tolerances and iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Samples over one period, `times[n] = nT/N` measured from the period start.
#[derive(Debug, Clone)]
pub struct RingBuffer {
    pub omega: f64,
    pub times: Vec<f64>,
    pub samples: Vec<ComplexField>,
}

impl RingBuffer {
    pub fn write_to_dir(&self, grid: &Grid, report: &ConvergenceReport, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (n, u) in self.samples.iter().enumerate() {
            let mut w = BufWriter::new(fs::File::create(dir.join(format!("t_{n:04}.csv")))?);
            u.write_csv(grid, &mut w)?;
        }
        let manifest = serde_json::json!({
            "omega": self.omega,
            "times": self.times,
            "report": report,
        });
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub periods_run: usize,
    /// `max_n ‖u(t_n) − u(t_n − T)‖ / max_n ‖u(t_n)‖` after each period.
    pub periodicity_history: Vec<f64>,
    pub periodic: bool,
    pub max_picard_iterations: usize,
}

/// State `(u, v = u_t)` at time `t`.
#[derive(Debug, Clone)]
pub struct State {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub t: f64,
}

/// Fixed-step trapezoidal integrator for one grid, medium and forcing.
pub struct TimeStepper {
    k: SparseMatrix<Complex64>,
    d: SparseMatrix<Complex64>,
    s: Vec<Complex64>,
    alpha: Vec<f64>,
    omega: f64,
    dt: f64,
    m: Solver<Complex64>,
    picard_tol: f64,
    picard_max_iters: usize,
}

impl TimeStepper {
    pub fn new(grid: &Grid, medium: &Medium, source: &BoundarySource, dt: f64, picard_tol: f64, picard_max_iters: usize) -> Result<Self> {
        medium.validate(grid)?;
        let real = |v: &[f64]| v.iter().map(|&x| Complex64::from(x)).collect::<Vec<_>>();
        let neg = |v: &[f64]| v.iter().map(|&x| Complex64::from(-x)).collect::<Vec<_>>();
        let k = assemble_operator(grid, &real(&medium.gamma), Complex64::zero(), &neg(&medium.eta));
        let d = assemble_operator(grid, &real(&medium.beta), Complex64::zero(), &neg(&medium.lambda));
        let mut s = vec![Complex64::zero(); grid.len()];
        for (b, g) in grid.boundary.iter().zip(source.g.iter()) {
            s[b.index] = g * (b.weight / grid.interior_weight[b.index]);
        }
        let m = SparseMatrix::identity(grid.len())
            .add_scaled((-dt / 2.0).into(), &d)?
            .add_scaled((-dt * dt / 4.0).into(), &k)?;
        Ok(Self {
            k,
            d,
            s,
            alpha: medium.alpha.clone(),
            omega: source.omega,
            dt,
            m: Solver::new(m, SolverConfig::default())?,
            picard_tol,
            picard_max_iters,
        })
    }

    fn rhs(&self, u: &[Complex64], v: &[Complex64], t: f64) -> Vec<Complex64> {
        let ku = self.k.matvec(u);
        let dv = self.d.matvec(v);
        let e = Complex64::from_polar(1.0, -self.omega * t);
        (0..u.len()).map(|i| ku[i] + dv[i] + self.s[i] * e).collect()
    }

    fn nonlinear(&self, u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        u.iter().zip(v).zip(&self.alpha).map(|((a, b), &al)| a * b * (2.0 * al)).collect()
    }

    /// Advances one step; returns the number of Picard iterations used.
    pub fn step(&self, st: &mut State) -> Result<usize> {
        let (dt, n) = (self.dt, st.u.len());
        let t1 = st.t + dt;
        let f0 = self.rhs(&st.u, &st.v, st.t);
        let ku = self.k.matvec(&st.u);
        let kv = self.k.matvec(&st.v);
        let e1 = Complex64::from_polar(1.0, -self.omega * t1);
        let mut nl = self.nonlinear(&st.u, &st.v);
        let base: Vec<Complex64> = (0..n)
            .map(|i| {
                let q = st.v[i] - nl[i];
                q + (f0[i] + self.s[i] * e1) * (dt / 2.0) + ku[i] * (dt / 2.0) + kv[i] * (dt * dt / 4.0)
            })
            .collect();
        let advance = |nl: &[Complex64]| -> Result<(Vec<Complex64>, Vec<Complex64>)> {
            let b: Vec<Complex64> = base.iter().zip(nl).map(|(a, b)| a + b).collect();
            let (v1, _) = self.m.solve(&b)?;
            let u1 = (0..n).map(|i| st.u[i] + (v1[i] + st.v[i]) * (dt / 2.0)).collect();
            Ok((u1, v1))
        };
        let linear = self.alpha.iter().all(|&a| a == 0.0);
        let mut iters = 0;
        let (u1, v1) = loop {
            iters += 1;
            let (u1, v1) = advance(&nl)?;
            if linear {
                break (u1, v1);
            }
            let nl1 = self.nonlinear(&u1, &v1);
            let diff: Vec<Complex64> = nl1.iter().zip(&nl).map(|(a, b)| a - b).collect();
            let dn = norm2(&diff);
            let q1: Vec<Complex64> = v1.iter().zip(&nl1).map(|(a, b)| a - b).collect();
            let scale = norm2(&q1).max(1e-300);
            nl = nl1;
            if dn <= self.picard_tol * scale {
                break advance(&nl)?;
            }
            if iters >= self.picard_max_iters {
                return Err(Error::PicardNonConvergence { step: (t1 / dt).round() as usize, increment: dn / scale });
            }
        };
        st.u = u1;
        st.v = v1;
        st.t = t1;
        Ok(iters)
    }
}

/// Discrete energy `‖u_t‖² + Σ_f c_f γ_f |Δu|² + ‖√η u‖²_{∂Ω}`.
pub fn discrete_energy(grid: &Grid, medium: &Medium, st: &State) -> f64 {
    let mut e: f64 = st.v.iter().zip(&grid.interior_weight).map(|(v, w)| w * v.norm_sqr()).sum();
    crate::helmholtz::for_each_face(grid, |a, b, c| {
        e += c * 0.5 * (medium.gamma[a] + medium.gamma[b]) * (st.u[a] - st.u[b]).norm_sqr();
    });
    for (s, b) in grid.boundary.iter().enumerate() {
        e += b.weight * medium.eta[s] * st.u[b.index].norm_sqr();
    }
    e
}

pub fn timestep_to_periodic(
    grid: &Grid,
    medium: &Medium,
    source: &BoundarySource,
    cfg: &TimeStepperConfig,
) -> Result<(RingBuffer, ConvergenceReport)> {
    cfg.validate()?;
    let omega = source.omega;
    let period = std::f64::consts::TAU / omega;
    let nsteps = cfg.steps_per_period;
    let dt = period / nsteps as f64;
    let stepper = TimeStepper::new(grid, medium, source, dt, cfg.picard_tol, cfg.picard_max_iters)?;
    let mut st = match cfg.initial {
        InitialData::Zero => State { u: vec![Complex64::zero(); grid.len()], v: vec![Complex64::zero(); grid.len()], t: 0.0 },
        InitialData::LinearSteadyState => {
            let (u1, _) = Helmholtz::new(grid, medium)?.solve_fundamental(source)?;
            let v = u1.iter().map(|x| x * Complex64::new(0.0, -omega)).collect();
            State { u: u1.into_vec(), v, t: 0.0 }
        }
    };

    let mut prev: Option<Vec<ComplexField>> = None;
    let mut history = Vec::new();
    let mut max_picard = 0;
    let mut periodic = false;
    let mut periods_run = 0;
    let mut current = Vec::with_capacity(nsteps);
    for p in 0..cfg.n_periods_max {
        current.clear();
        for n in 0..nsteps {
            current.push(ComplexField::from_vec(st.u.clone()));
            max_picard = max_picard.max(stepper.step(&mut st)?);
            // keep the clock exact at period boundaries
            if n + 1 == nsteps {
                st.t = (p + 1) as f64 * period;
            }
        }
        periods_run = p + 1;
        if let Some(prev) = &prev {
            let diff = current.iter().zip(prev).map(|(a, b)| norms::l2(grid, &(a - b))).fold(0.0, f64::max);
            let size = current.iter().map(|a| norms::l2(grid, a)).fold(0.0, f64::max);
            let d = if size > 0.0 { diff / size } else { diff };
            history.push(d);
            if d <= cfg.periodicity_tol {
                periodic = true;
                break;
            }
        }
        prev = Some(std::mem::replace(&mut current, Vec::with_capacity(nsteps)));
    }
    if current.is_empty() {
        current = prev.unwrap_or_default();
    }
    let times = (0..nsteps).map(|n| n as f64 * dt).collect();
    let report = ConvergenceReport { periods_run, periodicity_history: history, periodic, max_picard_iterations: max_picard };
    Ok((RingBuffer { omega, times, samples: current }, report))
}

/// `û_k = (1/N) Σ_n u(t_n) e^{+ikωt_n}` for k = 0..K.
pub fn extract_harmonics(buffer: &RingBuffer, omega: f64, k_count: usize) -> Result<Vec<ComplexField>> {
    let n = buffer.samples.len();
    if n < 4 * k_count || n == 0 {
        return Err(Error::InsufficientSamples { needed: (4 * k_count).max(1), got: n });
    }
    let len = buffer.samples[0].len();
    Ok((0..=k_count)
        .map(|k| {
            let mut acc = vec![Complex64::zero(); len];
            for (u, &t) in buffer.samples.iter().zip(&buffer.times) {
                let e = Complex64::from_polar(1.0 / n as f64, k as f64 * omega * t);
                acc.iter_mut().zip(u.iter()).for_each(|(a, v)| *a += v * e);
            }
            ComplexField::from_vec(acc)
        })
        .collect())
}
