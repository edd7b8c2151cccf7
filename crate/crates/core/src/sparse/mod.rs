//! Sparse matrices and linear solvers.

mod iterative;
mod lu;
mod matrix;
mod ordering;

use num_traits::{Float, Zero};
use serde::{Deserialize, Serialize};

pub use iterative::{gmres, Ilu0};
pub use lu::LuFactor;
pub use matrix::{SparseMatrix, Triplets};
pub use ordering::nested_dissection;

use crate::error::{Error, Result};
use crate::scalar::{norm2, Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    #[default]
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// `‖A x − b‖ / max(‖b‖, 1e−300)`.
    pub residual_norm: f64,
    /// Refinement steps for direct solves, GMRES iterations otherwise.
    pub iterations: usize,
    pub method: SolveMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<R> {
    pub method: SolveMethod,
    pub tol: R,
    pub pivot_tol: R,
    pub max_refinements: usize,
    pub leaf_size: usize,
    pub gmres_restart: usize,
    pub max_iterations: usize,
}

impl<R: Real> Default for SolverConfig<R> {
    fn default() -> Self {
        Self {
            method: SolveMethod::Direct,
            // 1e-10, or as close as the precision allows
            tol: R::lit(1e-10).max(R::epsilon() * R::lit(100.0)),
            pivot_tol: R::lit(0.1),
            max_refinements: 4,
            leaf_size: 32,
            gmres_restart: 60,
            max_iterations: 5000,
        }
    }
}

impl<R: Real> SolverConfig<R> {
    pub fn iterative() -> Self {
        Self { method: SolveMethod::Iterative, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
enum Backend<S> {
    Direct(LuFactor<S>),
    Iterative(Ilu0<S>),
}

/// A factored (or preconditioned) operator. Immutable; `solve` takes `&self`
/// so one instance can serve many threads.
#[derive(Debug, Clone)]
pub struct Solver<S: Scalar> {
    a: SparseMatrix<S>,
    at: Option<SparseMatrix<S>>,
    backend: Backend<S>,
    cfg: SolverConfig<S::Real>,
}

impl<S: Scalar> Solver<S> {
    pub fn new(a: SparseMatrix<S>, cfg: SolverConfig<S::Real>) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let (backend, at) = match cfg.method {
            SolveMethod::Direct => {
                let order = nested_dissection(&a.symmetric_adjacency(), cfg.leaf_size);
                (Backend::Direct(LuFactor::factor(&a, order, cfg.pivot_tol)?), None)
            }
            SolveMethod::Iterative => (Backend::Iterative(Ilu0::new(&a)?), Some(a.transpose())),
        };
        Ok(Self { a, at, backend, cfg })
    }

    pub fn matrix(&self) -> &SparseMatrix<S> {
        &self.a
    }

    pub fn solve(&self, b: &[S]) -> Result<(Vec<S>, SolveReport)> {
        self.solve_impl(b, false)
    }

    /// Solves `Aᵀ x = b` (plain transpose), as needed by discrete adjoints.
    pub fn solve_transposed(&self, b: &[S]) -> Result<(Vec<S>, SolveReport)> {
        self.solve_impl(b, true)
    }

    fn solve_impl(&self, b: &[S], transposed: bool) -> Result<(Vec<S>, SolveReport)> {
        let n = self.a.dim();
        if b.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: b.len() });
        }
        let bnorm = norm2(b);
        if bnorm == S::Real::zero() {
            let report = SolveReport { residual_norm: 0.0, iterations: 0, method: self.cfg.method };
            return Ok((vec![S::zero(); n], report));
        }
        let scale = bnorm.max(S::Real::lit(1e-300));
        let apply = |x: &[S]| {
            if transposed {
                self.a.matvec_transposed(x)
            } else {
                self.a.matvec(x)
            }
        };
        let residual = |x: &[S]| -> (Vec<S>, S::Real) {
            let ax = apply(x);
            let r: Vec<S> = b.iter().zip(&ax).map(|(&bi, &yi)| bi - yi).collect();
            let nr = norm2(&r) / scale;
            (r, nr)
        };

        match &self.backend {
            Backend::Direct(lu) => {
                let inv = |r: &[S]| {
                    if transposed {
                        lu.solve_transposed(r)
                    } else {
                        lu.solve(r)
                    }
                };
                let mut x = inv(b);
                let (mut r, mut res) = residual(&x);
                let mut iterations = 0;
                while !(res <= self.cfg.tol) && iterations < self.cfg.max_refinements {
                    let dx = inv(&r);
                    let cand: Vec<S> = x.iter().zip(&dx).map(|(&a, &d)| a + d).collect();
                    let (rc, rescand) = residual(&cand);
                    iterations += 1;
                    if !(rescand < res) {
                        break;
                    }
                    x = cand;
                    r = rc;
                    res = rescand;
                }
                self.finish(x, res, iterations)
            }
            Backend::Iterative(ilu) => {
                let (x, iterations) = if transposed {
                    // ILU of A is not a preconditioner for Aᵀ; fall back to an
                    // ILU of the transpose built on demand.
                    let at = self.at.as_ref().expect("transpose kept for iterative solver");
                    let prec = Ilu0::new(at)?;
                    gmres(at, &prec, b, vec![S::zero(); n], self.cfg.tol, self.cfg.gmres_restart, self.cfg.max_iterations)
                } else {
                    gmres(&self.a, ilu, b, vec![S::zero(); n], self.cfg.tol, self.cfg.gmres_restart, self.cfg.max_iterations)
                };
                let (_, res) = residual(&x);
                self.finish(x, res, iterations)
            }
        }
    }

    fn finish(&self, x: Vec<S>, res: S::Real, iterations: usize) -> Result<(Vec<S>, SolveReport)> {
        if res <= self.cfg.tol {
            let report = SolveReport { residual_norm: res.to_f64_lossy(), iterations, method: self.cfg.method };
            Ok((x, report))
        } else {
            Err(Error::NonConvergence { best_residual: res.to_f64_lossy(), tol: self.cfg.tol.to_f64_lossy() })
        }
    }
}

/// One-shot solve with the default direct configuration.
pub fn solve<S: Scalar>(a: &SparseMatrix<S>, b: &[S]) -> Result<(Vec<S>, SolveReport)> {
    Solver::new(a.clone(), SolverConfig::default())?.solve(b)
}
