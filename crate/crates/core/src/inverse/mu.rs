use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NamedField, PixelBasis, ReconstructionResult, RtDDataset};
use crate::error::{Error, Result};
use crate::helmholtz::{assemble_harmonic_operator, boundary_rhs, for_each_face};
use crate::sparse::{Solver, SolverConfig};
use crate::{BoundarySource, Grid, Medium};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the misfit by less than this fraction.
    pub rel_tol: f64,
    pub beta_min: f64,
    pub gamma_min: f64,
    /// Damping retries per iteration before giving up.
    pub max_halvings: usize,
}

impl Default for MuOptions {
    fn default() -> Self {
        Self { max_iterations: 40, rel_tol: 1e-6, beta_min: 1e-3, gamma_min: 1e-2, max_halvings: 12 }
    }
}

/// Directional derivative of the misfit: adjoint gradient against a central
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub adjoint: f64,
    pub finite_difference: f64,
    pub relative: f64,
}

/// First-harmonic misfit `J(β, γ) = ½ Σ_i ∫_∂Ω |u₁⁽ⁱ⁾ − d⁽ⁱ⁾|²` on a pixel
/// parameterization `θ = (β_1..β_P, γ_1..γ_P)`.
pub struct MuProblem<'a> {
    grid: &'a Grid,
    basis: &'a PixelBasis,
    omega: f64,
    rhs: Vec<Vec<Complex64>>,
    data: Vec<Vec<Complex64>>,
    lambda: Vec<f64>,
    eta: Vec<f64>,
}

struct State {
    solver: Solver<Complex64>,
    u: Vec<Vec<Complex64>>,
    misfit: f64,
}

impl<'a> MuProblem<'a> {
    pub fn new(grid: &'a Grid, dataset: &RtDDataset, lambda: Vec<f64>, eta: Vec<f64>, basis: &'a PixelBasis) -> Result<Self> {
        dataset.check(grid)?;
        grid.check_boundary(lambda.len())?;
        grid.check_boundary(eta.len())?;
        let rhs = dataset.sources(grid)?.iter().map(|s: &BoundarySource| boundary_rhs(grid, &s.g)).collect();
        let data = dataset.records.iter().map(|r| r.trace1.clone()).collect();
        Ok(Self { grid, basis, omega: dataset.omega, rhs, data, lambda, eta })
    }

    pub fn n_params(&self) -> usize {
        2 * self.basis.cells()
    }

    pub fn medium(&self, theta: &[f64]) -> Result<Medium> {
        if theta.len() != self.n_params() {
            return Err(Error::ShapeMismatch { expected: self.n_params(), got: theta.len() });
        }
        let p = self.basis.cells();
        Medium::new(
            self.grid,
            vec![0.0; self.grid.len()],
            self.basis.field(&theta[..p]),
            self.basis.field(&theta[p..]),
            self.lambda.clone(),
            self.eta.clone(),
        )
    }

    /// `½ Σ_i ∫_∂Ω |d⁽ⁱ⁾|²`, the misfit of a zero prediction.
    pub fn data_energy(&self) -> f64 {
        self.data.iter().map(|d| self.boundary_energy(d)).sum()
    }

    fn boundary_energy(&self, r: &[Complex64]) -> f64 {
        0.5 * self.grid.boundary.iter().zip(r).map(|(b, v)| b.weight * v.norm_sqr()).sum::<f64>()
    }

    fn residual(&self, u: &[Complex64], i: usize) -> Vec<Complex64> {
        self.grid.boundary.iter().zip(&self.data[i]).map(|(b, d)| u[b.index] - d).collect()
    }

    fn state(&self, theta: &[f64]) -> Result<State> {
        let medium = self.medium(theta)?;
        let a = assemble_harmonic_operator(self.grid, &medium, 1, self.omega)?;
        let solver = Solver::new(a, SolverConfig::default())?;
        let u = self.rhs.par_iter().map(|b| solver.solve(b).map(|(x, _)| x)).collect::<Result<Vec<_>>>()?;
        let misfit = u.iter().enumerate().map(|(i, ui)| self.boundary_energy(&self.residual(ui, i))).sum();
        Ok(State { solver, u, misfit })
    }

    pub fn misfit(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.state(theta)?.misfit)
    }

    /// `λᵀ (∂A/∂μ_n) u` at every node `n`, with μ entering through face means.
    fn nodal_sensitivity(&self, lam: &[Complex64], u: &[Complex64], out: &mut [Complex64]) {
        let w = &self.grid.interior_weight;
        for_each_face(self.grid, |a, b, c| {
            let du = u[b] - u[a];
            let t = (lam[a] / w[a] - lam[b] / w[b]) * du * (0.5 * c);
            out[a] += t;
            out[b] += t;
        });
    }

    /// Discrete adjoint gradient: `∂J/∂θ = −Re Σ_i λᵢᵀ (∂A/∂θ) uᵢ` with `Aᵀλᵢ = ℓ·conj(rᵢ)`.
    fn gradient_at(&self, st: &State) -> Result<Vec<f64>> {
        let n = self.grid.len();
        let per_source = st
            .u
            .par_iter()
            .enumerate()
            .map(|(i, u)| {
                let mut c = vec![Complex64::default(); n];
                for (b, r) in self.grid.boundary.iter().zip(self.residual(u, i)) {
                    c[b.index] = r.conj() * b.weight;
                }
                let (lam, _) = st.solver.solve_transposed(&c)?;
                let mut g = vec![Complex64::default(); n];
                self.nodal_sensitivity(&lam, u, &mut g);
                Ok(g)
            })
            .collect::<Result<Vec<_>>>()?;
        let p = self.basis.cells();
        let mut grad = vec![0.0; 2 * p];
        for g in per_source {
            for (&l, v) in self.basis.labels().iter().zip(&g) {
                // ∂μ/∂γ = 1, ∂μ/∂β = −iω
                grad[p + l] -= v.re;
                grad[l] -= self.omega * v.im;
            }
        }
        Ok(grad)
    }

    pub fn misfit_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let st = self.state(theta)?;
        Ok((st.misfit, self.gradient_at(&st)?))
    }

    /// Weighted residuals `√ℓ r` and their Jacobian, both stacked real/imaginary.
    fn gauss_newton_system(&self, st: &State) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let (grid, p) = (self.grid, self.basis.cells());
        let nb = grid.boundary.len();
        let m = nb * st.u.len();
        let sqrt_w: Vec<f64> = grid.boundary.iter().map(|b| b.weight.sqrt()).collect();
        let w = &grid.interior_weight;
        let labels = self.basis.labels();
        // ∂u/∂γ_c = −A⁻¹ (∂A/∂γ_c) u and ∂u/∂β_c = −iω ∂u/∂γ_c
        let cols = st
            .u
            .par_iter()
            .map(|u| {
                let mut dir = vec![vec![Complex64::default(); grid.len()]; p];
                for_each_face(grid, |a, b, c| {
                    let du = (u[b] - u[a]) * (0.5 * c);
                    for cell in [labels[a], labels[b]] {
                        dir[cell][a] += du / w[a];
                        dir[cell][b] -= du / w[b];
                    }
                });
                dir.iter()
                    .map(|y| {
                        let (x, _) = st.solver.solve(y)?;
                        Ok(grid.boundary.iter().map(|b| -x[b.index]).collect::<Vec<_>>())
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut jac = DMatrix::zeros(2 * m, 2 * p);
        let mut res = DVector::zeros(2 * m);
        let mi = Complex64::new(0.0, -self.omega);
        for (i, (u, ci)) in st.u.iter().zip(&cols).enumerate() {
            for (k, r) in self.residual(u, i).into_iter().enumerate() {
                let row = i * nb + k;
                let s = sqrt_w[k];
                res[row] = s * r.re;
                res[m + row] = s * r.im;
                for (c, col) in ci.iter().enumerate() {
                    let dg = col[k] * s;
                    let db = dg * mi;
                    jac[(row, p + c)] = dg.re;
                    jac[(m + row, p + c)] = dg.im;
                    jac[(row, c)] = db.re;
                    jac[(m + row, c)] = db.im;
                }
            }
        }
        Ok((jac, res))
    }

    /// Adjoint against central differences along `count` random relative
    /// perturbations of `theta`.
    pub fn gradient_check(&self, theta: &[f64], count: usize, seed: u64, step: f64) -> Result<Vec<GradientCheck>> {
        let (_, grad) = self.misfit_and_gradient(theta)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let d: Vec<f64> = theta.iter().map(|t| t * rng.random_range(-1.0..1.0)).collect();
                let shifted = |s: f64| -> Vec<f64> { theta.iter().zip(&d).map(|(t, di)| t + s * di).collect() };
                let fd = (self.misfit(&shifted(step))? - self.misfit(&shifted(-step))?) / (2.0 * step);
                let adjoint: f64 = grad.iter().zip(&d).map(|(g, di)| g * di).sum();
                let relative = (adjoint - fd).abs() / adjoint.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
                Ok(GradientCheck { adjoint, finite_difference: fd, relative })
            })
            .collect()
    }

    fn project(&self, theta: &mut [f64], opts: &MuOptions) -> bool {
        let p = self.basis.cells();
        let mut active = false;
        for (i, t) in theta.iter_mut().enumerate() {
            let lo = if i < p { opts.beta_min } else { opts.gamma_min };
            if *t < lo {
                *t = lo;
                active = true;
            }
        }
        active
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Projected Levenberg–Marquardt (damped Gauss–Newton) on the pixel
/// coefficients of `(β, γ)`, starting from `theta0 = (β cells, γ cells)`.
/// `truth` holds nodal `(β, γ)` for error reporting against their cell averages.
pub fn recover_mu(
    problem: &MuProblem,
    theta0: &[f64],
    opts: &MuOptions,
    truth: Option<(&[f64], &[f64])>,
) -> Result<ReconstructionResult> {
    let mut theta = theta0.to_vec();
    let mut projection_active = problem.project(&mut theta, opts);
    let mut st = problem.state(&theta)?;
    let energy = problem.data_energy();
    let grad_scale = energy / theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut history = vec![st.misfit];
    let mut grad = problem.gradient_at(&st)?;
    let mut damping = 1e-4;
    let mut iterations = 0;
    let mut warnings = Vec::new();
    while iterations < opts.max_iterations && norm(&grad) > 1e-8 * grad_scale && st.misfit > 1e-24 * energy {
        let (jac, res) = problem.gauss_newton_system(&st)?;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &res;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut lhs = jtj.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += damping * jtj[(i, i)].max(f64::MIN_POSITIVE);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-&jtr))) else {
                damping *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let active = problem.project(&mut trial, opts);
            let next = problem.state(&trial)?;
            if next.misfit < st.misfit {
                damping = (damping / 10.0).max(1e-12);
                accepted = Some((trial, next, active));
                break;
            }
            damping *= 10.0;
        }
        let Some((trial, next, active)) = accepted else {
            if norm(&grad) <= 1e-6 * grad_scale {
                warnings.push("stopped at roundoff floor".into());
                break;
            }
            return Err(Error::LineSearchFailure(opts.max_halvings));
        };
        iterations += 1;
        projection_active |= active;
        let decrease = (st.misfit - next.misfit) / st.misfit;
        theta = trial;
        st = next;
        history.push(st.misfit);
        grad = problem.gradient_at(&st)?;
        if decrease < opts.rel_tol {
            break;
        }
    }
    if iterations == opts.max_iterations {
        warnings.push(format!("iteration limit {} reached", opts.max_iterations));
    }
    let p = problem.basis.cells();
    let beta = problem.basis.field(&theta[..p]);
    let gamma = problem.basis.field(&theta[p..]);
    let relative_error = truth.map(|(tb, tg)| {
        let cb = problem.basis.project(problem.grid, tb);
        let cg = problem.basis.project(problem.grid, tg);
        let rel = |x: &[f64], t: &[f64]| {
            let d: Vec<f64> = x.iter().zip(t).map(|(a, b)| a - b).collect();
            norm(&d) / norm(t)
        };
        rel(&theta[..p], &cb).max(rel(&theta[p..], &cg))
    });
    Ok(ReconstructionResult {
        coefficients: theta,
        max_abs: gamma.iter().chain(&beta).fold(0.0, |m, v| m.max(v.abs())),
        fields: vec![NamedField { name: "beta".into(), values: beta }, NamedField { name: "gamma".into(), values: gamma }],
        misfit_history: history,
        reg_weight: 0.0,
        relative_error,
        projection_active,
        effective_rank: None,
        rank_deficient: false,
        gradient_norm: Some(norm(&grad)),
        iterations,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{synthesize_rtd, SynthesisOptions};
    use super::*;
    use crate::medium::fourier_modes;

    fn setup(g: &Grid, basis: &PixelBasis) -> (RtDDataset, Vec<f64>) {
        let theta: Vec<f64> = [vec![0.02, 0.02, 0.02, 0.04], vec![1.0, 1.2, 1.0, 1.4]].concat();
        let p = basis.cells();
        let nb = g.boundary.len();
        let m = Medium::new(g, vec![0.0; g.len()], basis.field(&theta[..p]), basis.field(&theta[p..]), vec![1.0; nb], vec![1.0; nb])
            .unwrap();
        let d = synthesize_rtd(g, &m, &fourier_modes(g, 2), 8.0, &SynthesisOptions::default()).unwrap();
        (d, theta)
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let g = Grid::build(1.0, 1.0, 17, 17).unwrap();
        let basis = PixelBasis::new(&g, 2, 2).unwrap();
        let (d, _) = setup(&g, &basis);
        let nb = g.boundary.len();
        let prob = MuProblem::new(&g, &d, vec![1.0; nb], vec![1.0; nb], &basis).unwrap();
        let theta0 = [vec![0.03; 4], vec![1.1; 4]].concat();
        for c in prob.gradient_check(&theta0, 5, 11, 1e-5).unwrap() {
            assert!(c.relative < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn recovers_pixel_media_and_stops_at_truth() {
        let g = Grid::build(1.0, 1.0, 17, 17).unwrap();
        let basis = PixelBasis::new(&g, 2, 2).unwrap();
        let (d, truth) = setup(&g, &basis);
        let nb = g.boundary.len();
        let prob = MuProblem::new(&g, &d, vec![1.0; nb], vec![1.0; nb], &basis).unwrap();
        let at_truth = recover_mu(&prob, &truth, &MuOptions::default(), None).unwrap();
        assert_eq!(at_truth.iterations, 0);
        let r = recover_mu(&prob, &[vec![0.03; 4], vec![1.1; 4]].concat(), &MuOptions::default(), None).unwrap();
        assert!(r.misfit_history.windows(2).all(|w| w[1] < w[0]));
        for (x, t) in r.coefficients.iter().zip(&truth) {
            assert!((x - t).abs() < 1e-6 * t, "{:?}", r.coefficients);
        }
    }
}
