use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{synthesize_rtd, SynthesisOptions};
use crate::error::Result;
use crate::field::BoundaryField;
use crate::{norms, ComplexField, Grid, Medium};

fn sqrt_mu(medium: &Medium, omega: f64) -> ComplexField {
    ComplexField::from_vec(medium.mu(omega).into_iter().map(Complex64::sqrt).collect())
}

/// `p = μ⁻¹ − ω⁻² μ^{−1/2} Δ_h μ^{1/2}` with the principal root. The
/// Laplacian is only defined at interior nodes, so boundary nodes get `μ⁻¹`.
pub fn compute_potential(grid: &Grid, medium: &Medium, omega: f64) -> Result<ComplexField> {
    medium.validate(grid)?;
    let s = sqrt_mu(medium, omega);
    let lap = norms::laplacian(grid, &s);
    let w2 = omega * omega;
    Ok(ComplexField::from_vec(
        s.iter().zip(lap.iter()).map(|(r, l)| (r * r).inv() - l / (r * w2)).collect(),
    ))
}

/// Max over interior nodes of `|p − i/(ωβ)| · ωβ`, the relative distance of
/// the potential from its leading high-frequency term.
pub fn potential_deviation(grid: &Grid, medium: &Medium, omega: f64) -> Result<f64> {
    let p = compute_potential(grid, medium, omega)?;
    Ok(grid
        .interior
        .iter()
        .map(|&k| {
            let wb = omega * medium.beta[k];
            (p[k] - Complex64::new(0.0, 1.0 / wb)).norm() * wb
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    /// `‖Δ_h U + ω² p U‖ / ‖ω² p U‖` over interior nodes.
    pub relative_residual: f64,
    pub h: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Checks that `U = μ^{1/2} u₁` solves the Schrödinger form `ΔU + ω² p U = 0`.
pub fn liouville_check(grid: &Grid, medium: &Medium, omega: f64, u1: &ComplexField) -> Result<LiouvilleReport> {
    grid.check_nodes(u1.len())?;
    let p = compute_potential(grid, medium, omega)?;
    let big_u = sqrt_mu(medium, omega).mul(u1);
    let lap = norms::laplacian(grid, &big_u);
    let w2 = omega * omega;
    let (mut num, mut den) = (0.0, 0.0);
    for &k in &grid.interior {
        let pu = p[k] * big_u[k] * w2;
        num += (lap[k] + pu).norm_sqr();
        den += pu.norm_sqr();
    }
    let h = grid.hx.max(grid.hy);
    let relative_residual = (num / den).sqrt();
    let bound = 10.0 * h * h;
    Ok(LiouvilleReport { relative_residual, h, bound, passed: relative_residual <= bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguishReport {
    /// Max over sources of the relative boundary-L² trace difference.
    pub trace1_difference: f64,
    pub trace2_difference: f64,
    pub trace1_indistinguishable: bool,
    pub trace2_indistinguishable: bool,
    /// Max coefficient mismatch at boundary nodes; the comparison assumes 0.
    pub boundary_mismatch: f64,
}

const INDISTINGUISHABLE: f64 = 1e-10;

/// Compares clean RtD data of two media over the same sources.
pub fn distinguishability_test(
    grid: &Grid,
    medium: &Medium,
    medium_tilde: &Medium,
    sources: &[BoundaryField<f64>],
    omega: f64,
) -> Result<DistinguishReport> {
    let opts = SynthesisOptions::default();
    let a = synthesize_rtd(grid, medium, sources, omega, &opts)?;
    let b = synthesize_rtd(grid, medium_tilde, sources, omega, &opts)?;
    let bl2 = |v: &mut dyn Iterator<Item = Complex64>| -> f64 {
        grid.boundary.iter().zip(v).map(|(n, x)| n.weight * x.norm_sqr()).sum::<f64>().sqrt()
    };
    let rel = |x: &[Complex64], y: &[Complex64]| {
        let d = bl2(&mut x.iter().zip(y).map(|(p, q)| p - q));
        let s = bl2(&mut x.iter().copied()).max(bl2(&mut y.iter().copied()));
        if d == 0.0 { 0.0 } else { d / s }
    };
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for (ra, rb) in a.records.iter().zip(&b.records) {
        d1 = d1.max(rel(&ra.trace1, &rb.trace1));
        d2 = d2.max(rel(&ra.trace2, &rb.trace2));
    }
    let boundary_mismatch = grid
        .boundary
        .iter()
        .map(|n| {
            let k = n.index;
            (medium.beta[k] - medium_tilde.beta[k]).abs().max((medium.gamma[k] - medium_tilde.gamma[k]).abs())
        })
        .fold(0.0, f64::max);
    Ok(DistinguishReport {
        trace1_difference: d1,
        trace2_difference: d2,
        trace1_indistinguishable: d1 < INDISTINGUISHABLE,
        trace2_indistinguishable: d2 < INDISTINGUISHABLE,
        boundary_mismatch,
    })
}
