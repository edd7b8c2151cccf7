//! Multi-harmonic construction of the time-periodic solution
//! `u(t, x) = Σ_k u_k(x) e^{−ikωt}`.
//!
//! `u₁` solves the boundary-forced problem; each `u_k`, k ≥ 2, solves the
//! harmonic problem sourced by the Cauchy product of the lower harmonics.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::{mode_residual, Helmholtz};
use crate::medium::{BoundarySource, Medium};
use crate::sparse::SolveReport;
use crate::{norms, ComplexField, Grid};

pub const DEFAULT_K_MAX: usize = 12;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Margin above which the degeneracy constraint `2αu < 1` is considered at risk.
pub const DEGENERACY_WARNING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicNorms {
    pub l2: f64,
    pub h1_seminorm: f64,
    pub max_abs: f64,
}

impl HarmonicNorms {
    pub fn of(grid: &Grid, u: &ComplexField) -> Self {
        Self { l2: norms::l2(grid, u), h1_seminorm: norms::grad_l2(grid, u), max_abs: u.max_abs() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationReason {
    ToleranceMet,
    KMaxReached,
    DivergenceDetected,
}

/// `u₀..u_K` for one frequency; `u₀ ≡ 0` is stored explicitly.
#[derive(Debug, Clone)]
pub struct HarmonicStack {
    pub omega: f64,
    pub source: BoundarySource,
    pub harmonics: Vec<ComplexField>,
    pub norms: Vec<HarmonicNorms>,
    pub truncation_reason: TruncationReason,
}

impl HarmonicStack {
    /// Highest harmonic index `K`.
    pub fn k(&self) -> usize {
        self.harmonics.len() - 1
    }

    /// Mode-wise time derivative: `u_k ↦ (−ikω)^m u_k`.
    pub fn time_derivative(&self, m: u32) -> Self {
        let harmonics = self
            .harmonics
            .iter()
            .enumerate()
            .map(|(k, u)| u.scale(Complex64::new(0.0, -(k as f64) * self.omega).powu(m)))
            .collect();
        Self { harmonics, ..self.clone() }
    }

    pub fn write_to_dir(&self, grid: &Grid, diagnostics: &CascadeDiagnostics, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (k, u) in self.harmonics.iter().enumerate() {
            let mut w = BufWriter::new(fs::File::create(dir.join(format!("u_{k}.csv")))?);
            u.write_csv(grid, &mut w)?;
        }
        let manifest = StackManifest {
            omega: self.omega,
            k: self.k(),
            norms: &self.norms,
            truncation_reason: self.truncation_reason,
            diagnostics,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

#[derive(Serialize)]
struct StackManifest<'a> {
    omega: f64,
    #[serde(rename = "K")]
    k: usize,
    norms: &'a [HarmonicNorms],
    truncation_reason: TruncationReason,
    diagnostics: &'a CascadeDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeDiagnostics {
    /// `‖u_{k+1}‖ / ‖u_k‖` for k = 1..K−1.
    pub ratio_sequence: Vec<f64>,
    /// Max over nodes and 4K time samples of `2α|u^K|`.
    pub degeneracy_margin: f64,
    pub degeneracy_warning: bool,
    pub empirical_r: f64,
    pub solve_reports: Vec<SolveReport>,
}

/// `f_k = Σ_{l=1}^{k−1} (l/k) u_l u_{k−l}`.
pub fn cauchy_source(harmonics: &[ComplexField], k: usize) -> Result<ComplexField> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("Cauchy source needs k ≥ 2, got {k}")));
    }
    if harmonics.len() < k {
        return Err(Error::MissingHarmonic(harmonics.len()));
    }
    let n = harmonics[1].len();
    let mut f = vec![Complex64::zero(); n];
    for l in 1..k {
        let c = l as f64 / k as f64;
        let (a, b) = (&harmonics[l], &harmonics[k - l]);
        f.iter_mut().enumerate().for_each(|(i, fi)| *fi += a[i] * b[i] * c);
    }
    Ok(ComplexField::from_vec(f))
}

pub fn run_cascade(
    grid: &Grid,
    medium: &Medium,
    source: &BoundarySource,
    k_max: usize,
    tol: f64,
) -> Result<(HarmonicStack, CascadeDiagnostics)> {
    run_cascade_with(&Helmholtz::new(grid, medium)?, source, k_max, tol)
}

/// Cascade reusing the factorizations cached in `solver`.
pub fn run_cascade_with(
    solver: &Helmholtz,
    source: &BoundarySource,
    k_max: usize,
    tol: f64,
) -> Result<(HarmonicStack, CascadeDiagnostics)> {
    if k_max < 2 {
        return Err(Error::InvalidArgument(format!("k_max must be ≥ 2, got {k_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let grid = solver.grid();
    let omega = source.omega;
    let (u1, rep) = solver.solve_fundamental(source)?;
    let mut harmonics = vec![ComplexField::zeros(grid), u1];
    let mut reports = vec![rep];
    let mut l2s = vec![0.0, norms::l2(grid, &harmonics[1])];
    let mut ratios = Vec::new();
    let mut reason = TruncationReason::KMaxReached;
    for k in 2..=k_max {
        let f = cauchy_source(&harmonics, k)?;
        let (uk, rep) = solver.solve_harmonic(k, omega, &f)?;
        reports.push(rep);
        let nk = norms::l2(grid, &uk);
        harmonics.push(uk);
        l2s.push(nk);
        ratios.push(if l2s[k - 1] > 0.0 { nk / l2s[k - 1] } else { 0.0 });
        if nk <= tol * l2s[1] {
            reason = TruncationReason::ToleranceMet;
            break;
        }
        if ratios.len() >= 2 && ratios[ratios.len() - 2..].iter().all(|&r| r > 1.0) {
            reason = TruncationReason::DivergenceDetected;
            break;
        }
    }
    let norms = harmonics.iter().map(|u| HarmonicNorms::of(grid, u)).collect();
    let stack = HarmonicStack { omega, source: source.clone(), harmonics, norms, truncation_reason: reason };
    let degeneracy_margin = degeneracy_margin(&stack, &solver.medium().alpha);
    let empirical_r = ratios.iter().copied().fold(0.0, f64::max);
    let diag = CascadeDiagnostics {
        ratio_sequence: ratios,
        degeneracy_margin,
        degeneracy_warning: degeneracy_margin >= DEGENERACY_WARNING,
        empirical_r,
        solve_reports: reports,
    };
    Ok((stack, diag))
}

/// Equispaced times `t_n = nT/N`, `N = 4K`.
pub fn sample_times(stack: &HarmonicStack) -> Vec<f64> {
    let n = 4 * stack.k().max(1);
    let period = std::f64::consts::TAU / stack.omega;
    (0..n).map(|i| period * i as f64 / n as f64).collect()
}

fn degeneracy_margin(stack: &HarmonicStack, alpha: &[f64]) -> f64 {
    sample_times(stack)
        .into_iter()
        .map(|t| {
            let u = synthesize_time(stack, t);
            u.iter().zip(alpha).map(|(v, a)| 2.0 * a * v.norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Partial sum `Σ_k u_k e^{−ikωt}`.
pub fn synthesize_time(stack: &HarmonicStack, t: f64) -> ComplexField {
    let n = stack.harmonics[0].len();
    let mut out = vec![Complex64::zero(); n];
    for (k, u) in stack.harmonics.iter().enumerate() {
        // reduce the phase modulo 2π so t = T reproduces t = 0 exactly
        let turns = k as f64 * stack.omega * t / std::f64::consts::TAU;
        let phase = std::f64::consts::TAU * (turns - turns.round());
        let e = if phase == 0.0 { Complex64::one() } else { Complex64::from_polar(1.0, -phase) };
        out.iter_mut().zip(u.iter()).for_each(|(o, v)| *o += v * e);
    }
    ComplexField::from_vec(out)
}

/// Relative residual of every mode equation, recomputed from the stored fields.
pub fn mode_residuals(grid: &Grid, medium: &Medium, stack: &HarmonicStack) -> Result<Vec<f64>> {
    let omega = stack.omega;
    (1..=stack.k())
        .map(|k| {
            if k == 1 {
                mode_residual(grid, medium, 1, omega, &stack.harmonics[1], Some(&stack.source.g), None)
            } else {
                let f = cauchy_source(&stack.harmonics, k)?;
                mode_residual(grid, medium, k, omega, &stack.harmonics[k], None, Some(&f))
            }
        })
        .collect()
}

/// `h₁ = 1`, `h_k = Σ_{l=1}^{k−1} h_l h_{k−l}`, exactly.
pub fn h_sequence(k_count: usize) -> Vec<BigUint> {
    let mut h: Vec<BigUint> = Vec::with_capacity(k_count);
    for k in 1..=k_count {
        if k == 1 {
            h.push(BigUint::one());
        } else {
            let s = (1..k).map(|l| &h[l - 1] * &h[k - l - 1]).sum();
            h.push(s);
        }
    }
    h
}

/// Whether `h_k k² ≤ 5^{k−1}` (equivalently `h_k ≤ 5^{k−1}/k²`), exactly.
pub fn h_bound_holds(k: usize, hk: &BigUint) -> bool {
    hk * BigUint::from(k * k) <= BigUint::from(5u32).pow((k - 1) as u32)
}

/// `h_k / (C kω ‖α‖) · (C² ω^{−1/2} ‖g‖ ‖α‖)^k`.
pub fn predicted_norm_bound(k: usize, omega: f64, norm_alpha: f64, norm_g: f64, c: f64) -> f64 {
    let hk = h_sequence(k).pop().and_then(|h| h.to_f64()).unwrap_or(f64::INFINITY);
    let base = c * c * omega.powf(-0.5) * norm_g * norm_alpha;
    hk / (c * k as f64 * omega * norm_alpha) * base.powi(k as i32)
}

/// `C := ω^{1/2} ‖u₁‖_{H²-proxy} / ‖g‖_{L²(∂Ω)}`.
pub fn calibrate_constant(grid: &Grid, u1: &ComplexField, source: &BoundarySource) -> f64 {
    source.omega.sqrt() * norms::h2_proxy(grid, u1) / norms::boundary_field_l2(grid, &source.g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BoundaryField;
    use num_integer::binomial;

    #[test]
    fn h_sequence_matches_catalan() {
        let h = h_sequence(30);
        assert_eq!(h[..5].iter().map(|v| v.to_u64().unwrap()).collect::<Vec<_>>(), vec![1, 1, 2, 5, 14]);
        for (i, hk) in h.iter().enumerate() {
            let k = i + 1;
            let cat = binomial(BigUint::from(2 * k - 2), BigUint::from(k - 1)) / BigUint::from(k);
            assert_eq!(*hk, cat);
            assert!(h_bound_holds(k, hk));
        }
    }

    #[test]
    fn cauchy_source_small_k() {
        let g = Grid::build(1.0, 1.0, 4, 4).unwrap();
        let u1 = ComplexField::from_fn(&g, Complex64::new);
        let u2 = ComplexField::from_fn(&g, |x, y| Complex64::new(1.0 + y, -x));
        let hs = vec![ComplexField::zeros(&g), u1.clone(), u2.clone()];
        let f2 = cauchy_source(&hs, 2).unwrap();
        assert!((&f2 - &u1.mul(&u1).scale(0.5.into())).max_abs() < 1e-15);
        let f3 = cauchy_source(&hs, 3).unwrap();
        assert!((&f3 - &u1.mul(&u2)).max_abs() < 1e-14);
        assert!(matches!(cauchy_source(&hs, 4), Err(Error::MissingHarmonic(_))));
        let zeros = vec![ComplexField::zeros(&g); 5];
        assert!(cauchy_source(&zeros, 5).unwrap().is_zero());
    }

    #[test]
    fn bound_power_laws() {
        let b1 = predicted_norm_bound(1, 40.0, 2.0, 3.0, 5.0);
        assert!((b1 - 25.0 * 40f64.powf(-0.5) * 3.0 * 2.0 / (5.0 * 40.0 * 2.0)).abs() < 1e-12 * b1);
        let r = predicted_norm_bound(2, 40.0, 2.0, 6.0, 5.0) / predicted_norm_bound(2, 40.0, 2.0, 3.0, 5.0);
        assert!((r - 4.0).abs() < 1e-12);
    }

    fn scenario(alpha: f64) -> (Grid, Medium, BoundarySource) {
        let g = Grid::build(1.0, 1.0, 33, 33).unwrap();
        let m = Medium::constant(&g, alpha, 0.2, 1.0, 3.0, 250.0).unwrap();
        let s = BoundarySource::new(&g, BoundaryField::constant(&g, 1.0.into()), 40.0).unwrap();
        (g, m, s)
    }

    #[test]
    fn linear_medium_stops_at_two() {
        let (g, m, s) = scenario(0.0);
        let (stack, diag) = run_cascade(&g, &m, &s, 12, 1e-10).unwrap();
        assert_eq!(stack.truncation_reason, TruncationReason::ToleranceMet);
        assert_eq!(stack.k(), 2);
        assert!(stack.harmonics[2].is_zero() && stack.harmonics[0].is_zero());
        assert_eq!(diag.degeneracy_margin, 0.0);
    }

    #[test]
    fn synthesis_periodicity_and_dft() {
        let (g, m, s) = scenario(10.0);
        let (stack, diag) = run_cascade(&g, &m, &s, 12, 1e-10).unwrap();
        assert!(diag.empirical_r < 1.0);
        let period = std::f64::consts::TAU / stack.omega;
        assert_eq!(synthesize_time(&stack, 0.0), synthesize_time(&stack, period));
        let t0 = synthesize_time(&stack, 0.0);
        let sum = stack.harmonics.iter().skip(1).fold(stack.harmonics[0].clone(), |a, b| &a + b);
        assert!((&t0 - &sum).max_abs() < 1e-15 * sum.max_abs().max(1.0) * 4.0);
        // Fourier round trip over 4K samples
        let ts = sample_times(&stack);
        let n = ts.len() as f64;
        for (k, uk) in stack.harmonics.iter().enumerate() {
            let mut acc = vec![Complex64::zero(); g.len()];
            for &t in &ts {
                let e = Complex64::from_polar(1.0 / n, k as f64 * stack.omega * t);
                acc.iter_mut().zip(synthesize_time(&stack, t).iter()).for_each(|(a, v)| *a += v * e);
            }
            let d = (&ComplexField::from_vec(acc) - uk).max_abs();
            assert!(d <= 1e-12 * stack.harmonics[1].max_abs(), "k {k}: {d}");
        }
        // geometric decay envelope
        let r = diag.empirical_r;
        for k in 1..=stack.k() {
            assert!(stack.norms[k].l2 <= stack.norms[1].l2 * r.powi(k as i32 - 1) * 1.5);
        }
    }

    #[test]
    fn single_harmonic_modulus_is_time_independent() {
        let (g, m, s) = scenario(0.0);
        let (mut stack, _) = run_cascade(&g, &m, &s, 12, 1e-10).unwrap();
        stack.harmonics.truncate(2);
        let a = synthesize_time(&stack, 0.0);
        let b = synthesize_time(&stack, 0.0123);
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x.norm() - y.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn residuals_detect_injected_defect() {
        let (g, m, s) = scenario(10.0);
        let (mut stack, diag) = run_cascade(&g, &m, &s, 12, 1e-10).unwrap();
        let res = mode_residuals(&g, &m, &stack).unwrap();
        assert!(res.iter().all(|&r| r <= 1e-8), "{res:?}");
        assert!((res[0] - diag.solve_reports[0].residual_norm).abs() < 1e-10);
        stack.harmonics[3] = ComplexField::zeros(&g);
        let res = mode_residuals(&g, &m, &stack).unwrap();
        assert!(res[2] > 1e-8);
    }

    #[test]
    fn calibrated_bound_dominates() {
        let (g, m, s) = scenario(10.0);
        let (stack, _) = run_cascade(&g, &m, &s, 12, 1e-10).unwrap();
        let c = calibrate_constant(&g, &stack.harmonics[1], &s);
        let ng = norms::boundary_field_l2(&g, &s.g);
        for k in 1..=stack.k() {
            let b = predicted_norm_bound(k, s.omega, 10.0, ng, c);
            assert!(stack.norms[k].l2 <= b, "k {k}: {} > {b}", stack.norms[k].l2);
        }
    }
}
