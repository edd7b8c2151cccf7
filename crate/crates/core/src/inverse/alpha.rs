use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{relative_l2, MuStage, NamedField, PixelBasis, ReconstructionResult, RtDDataset};
use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::helmholtz::Helmholtz;
use crate::{ComplexField, Grid};

/// Singular values below this fraction of the largest count as rank loss.
const RANK_TOL: f64 = 1e-10;
const DEFAULT_REG_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaOptions {
    /// Tikhonov weight; `None` picks `1e−6·‖A‖²`.
    pub reg_weight: Option<f64>,
    /// Nodal ground truth for error reporting.
    #[serde(skip)]
    pub truth: Option<Vec<f64>>,
}

/// Reciprocity rows `A x = b`, one per (record, probe) pair:
///
/// ```text
/// A[(i,j), c] = (2ω)² ∫ χ_c (u₁⁽ⁱ⁾)² v⁽ʲ⁾,    b[(i,j)] = ∫_∂Ω h_j u₂⁽ⁱ⁾
/// ```
///
/// With the discrete auxiliary solve the identity holds exactly for the
/// discrete cascade, because the weighted operator is complex symmetric.
#[derive(Debug, Clone)]
pub struct AlphaSystem {
    pub a: Vec<Vec<Complex64>>,
    pub b: Vec<Complex64>,
    pub cells: usize,
    gradient_rows: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LCurvePoint {
    pub reg_weight: f64,
    pub residual_norm: f64,
    pub seminorm: f64,
}

/// First-harmonic fields for every record and auxiliary fields for every probe.
fn forward_fields(
    grid: &Grid,
    dataset: &RtDDataset,
    stage: &MuStage,
    probes: &[BoundaryField<f64>],
) -> Result<(Vec<ComplexField>, Vec<ComplexField>)> {
    dataset.check(grid)?;
    if probes.is_empty() {
        return Err(Error::InvalidArgument("at least one probe is required".into()));
    }
    for h in probes {
        grid.check_boundary(h.len())?;
    }
    let solver = Helmholtz::new(grid, stage.medium())?;
    let omega = dataset.omega;
    solver.solver(omega)?;
    solver.solver(2.0 * omega)?;
    let u1 = dataset
        .sources(grid)?
        .par_iter()
        .map(|s| solver.solve_fundamental(s).map(|(u, _)| u))
        .collect::<Result<Vec<_>>>()?;
    let v = probes
        .par_iter()
        .map(|h| solver.solve_auxiliary(omega, h).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;
    Ok((u1, v))
}

pub fn assemble_alpha_system(
    grid: &Grid,
    dataset: &RtDDataset,
    stage: &MuStage,
    probes: &[BoundaryField<f64>],
    basis: &PixelBasis,
) -> Result<AlphaSystem> {
    let (u1, v) = forward_fields(grid, dataset, stage, probes)?;
    let scale = (2.0 * dataset.omega).powi(2);
    let labels = basis.labels();
    let mut a = Vec::with_capacity(u1.len() * v.len());
    let mut b = Vec::with_capacity(u1.len() * v.len());
    for (u, rec) in u1.iter().zip(&dataset.records) {
        let u2w: Vec<Complex64> = u.iter().zip(&grid.interior_weight).map(|(x, w)| x * x * (w * scale)).collect();
        for (vj, h) in v.iter().zip(probes) {
            let mut row = vec![Complex64::default(); basis.cells()];
            for ((&l, p), q) in labels.iter().zip(&u2w).zip(vj.iter()) {
                row[l] += p * q;
            }
            a.push(row);
            b.push(grid.boundary.iter().zip(h.iter().zip(&rec.trace2)).map(|(n, (hv, t))| hv * t * n.weight).sum());
        }
    }
    Ok(AlphaSystem { a, b, cells: basis.cells(), gradient_rows: basis.gradient_rows() })
}

impl AlphaSystem {
    pub fn rows(&self) -> usize {
        self.b.len()
    }

    /// Real/imaginary stacking; α is real so both parts constrain it.
    fn real_parts(&self) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.rows();
        let a = DMatrix::from_fn(2 * m, self.cells, |r, c| {
            let z = self.a[r % m][c];
            if r < m { z.re } else { z.im }
        });
        let b = DVector::from_fn(2 * m, |r, _| if r < m { self.b[r].re } else { self.b[r - m].im });
        (a, b)
    }

    /// Singular values of the data matrix, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let (a, _) = self.real_parts();
        let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
        s.sort_by(|x, y| y.total_cmp(x));
        s
    }

    pub fn default_reg_weight(&self) -> f64 {
        DEFAULT_REG_SCALE * self.singular_values().first().map_or(0.0, |s| s * s)
    }

    /// Minimizer of `‖Ax − b‖² + reg‖Lx‖²`, by SVD of the stacked system.
    pub fn solve(&self, reg_weight: f64) -> Result<Vec<f64>> {
        if !(reg_weight >= 0.0 && reg_weight.is_finite()) {
            return Err(Error::InvalidArgument(format!("regularization weight must be ≥ 0, got {reg_weight}")));
        }
        let (a, b) = self.real_parts();
        let (m, e) = (a.nrows(), self.gradient_rows.len());
        let s = reg_weight.sqrt();
        let mut stacked = DMatrix::zeros(m + e, self.cells);
        stacked.rows_mut(0, m).copy_from(&a);
        for (r, &(p, q)) in self.gradient_rows.iter().enumerate() {
            stacked[(m + r, p)] = -s;
            stacked[(m + r, q)] = s;
        }
        let mut rhs = DVector::zeros(m + e);
        rhs.rows_mut(0, m).copy_from(&b);
        let svd = stacked.svd(true, true);
        let smax = svd.singular_values.max();
        let x = svd
            .solve(&rhs, RANK_TOL * smax)
            .map_err(|e| Error::InvalidArgument(format!("least-squares solve failed: {e}")))?;
        Ok(x.iter().copied().collect())
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, b)| (row.iter().zip(x).map(|(a, x)| a * x).sum::<Complex64>() - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn seminorm(&self, x: &[f64]) -> f64 {
        self.gradient_rows.iter().map(|&(p, q)| (x[q] - x[p]).powi(2)).sum::<f64>().sqrt()
    }

    /// Residual and seminorm over logarithmically spaced weights.
    pub fn l_curve(&self, lo: f64, hi: f64, count: usize) -> Result<Vec<LCurvePoint>> {
        if !(lo > 0.0 && hi > lo && count >= 2) {
            return Err(Error::InvalidArgument("L-curve sweep needs 0 < lo < hi and ≥ 2 points".into()));
        }
        let step = (hi / lo).ln() / (count - 1) as f64;
        (0..count)
            .map(|i| {
                let w = lo * (step * i as f64).exp();
                let x = self.solve(w)?;
                Ok(LCurvePoint { reg_weight: w, residual_norm: self.residual_norm(&x), seminorm: self.seminorm(&x) })
            })
            .collect()
    }
}

/// Regularized least-squares recovery of α on the pixel basis, clipped at 0.
pub fn recover_alpha(
    grid: &Grid,
    dataset: &RtDDataset,
    stage: &MuStage,
    probes: &[BoundaryField<f64>],
    basis: &PixelBasis,
    opts: &AlphaOptions,
) -> Result<ReconstructionResult> {
    let rows = dataset.records.len() * probes.len();
    if rows < basis.cells() {
        return Err(Error::Underdetermined { rows, cols: basis.cells() });
    }
    let sys = assemble_alpha_system(grid, dataset, stage, probes, basis)?;
    let sv = sys.singular_values();
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax).count();
    let reg = opts.reg_weight.unwrap_or(DEFAULT_REG_SCALE * smax * smax);
    let mut x = sys.solve(reg)?;
    let projection_active = x.iter().any(|&v| v < 0.0);
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let mut warnings = Vec::new();
    if rank < basis.cells() {
        warnings.push(format!("rank deficient: effective rank {rank} of {}", basis.cells()));
    }
    let alpha = basis.field(&x);
    let misfit = 0.5 * sys.residual_norm(&x).powi(2);
    Ok(ReconstructionResult {
        relative_error: opts.truth.as_ref().and_then(|t| relative_l2(grid, &alpha, t)),
        max_abs: alpha.iter().fold(0.0, |m, v| m.max(v.abs())),
        coefficients: x,
        fields: vec![NamedField { name: "alpha".into(), values: alpha }],
        misfit_history: vec![misfit],
        reg_weight: reg,
        projection_active,
        effective_rank: Some(rank),
        rank_deficient: rank < basis.cells(),
        gradient_norm: None,
        iterations: 1,
        warnings,
    })
}

/// Largest relative row residual of the reciprocity identity for a nodal α,
/// each row scaled by `(2ω)² ∫|α u₁² v| + |b|`.
pub fn alpha_identity_residual(
    grid: &Grid,
    dataset: &RtDDataset,
    stage: &MuStage,
    probes: &[BoundaryField<f64>],
    alpha: &[f64],
) -> Result<f64> {
    grid.check_nodes(alpha.len())?;
    let (u1, v) = forward_fields(grid, dataset, stage, probes)?;
    let scale = (2.0 * dataset.omega).powi(2);
    let mut worst: f64 = 0.0;
    for (u, rec) in u1.iter().zip(&dataset.records) {
        for (vj, h) in v.iter().zip(probes) {
            let (mut lhs, mut mag) = (Complex64::default(), 0.0);
            for k in 0..grid.len() {
                let t = u[k] * u[k] * vj[k] * (alpha[k] * grid.interior_weight[k] * scale);
                lhs += t;
                mag += t.norm();
            }
            let b: Complex64 = grid.boundary.iter().zip(h.iter().zip(&rec.trace2)).map(|(n, (hv, t))| hv * t * n.weight).sum();
            let denom = mag + b.norm();
            if denom > 0.0 {
                worst = worst.max((lhs - b).norm() / denom);
            }
        }
    }
    Ok(worst)
}
