//! Assembly and solution of the boundary-forced fundamental problem and the
//! interior-forced harmonic problems
//!
//! ```text
//! (kω)² u + ∇·(μ_k ∇u) = F          in Ω,   μ_k = γ − ikωβ
//! μ_k ∂_ν u − (ikωλ − η) u = G      on ∂Ω
//! ```
//!
//! Discretization is finite-volume on the node grid: every node owns a dual
//! cell of area `w` and boundary length `ℓ`, faces carry the arithmetic mean of
//! μ, and the Robin relation replaces the flux through the boundary part of
//! the cell. On uniform grids this is the 5-point stencil with second-order
//! ghost-node elimination. Rows are divided by `w` so interior rows read as the
//! pointwise equation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::field::{BoundaryField, ComplexField};
use crate::medium::{BoundarySource, Medium};
use crate::sparse::{SolveReport, Solver, SolverConfig, SparseMatrix, Triplets};
use crate::{norms, Grid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Visits every face `(a, b, len/dist)` of the dual mesh once.
pub(crate) fn for_each_face(grid: &Grid, mut f: impl FnMut(usize, usize, f64)) {
    let (nx, ny) = (grid.nx, grid.ny);
    let half = |e: bool| if e { 0.5 } else { 1.0 };
    for j in 0..ny {
        let cy = half(j == 0 || j == ny - 1);
        for i in 0..nx - 1 {
            let a = j * nx + i;
            f(a, a + 1, grid.hy * cy / grid.hx);
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let cx = half(i == 0 || i == nx - 1);
            let a = j * nx + i;
            f(a, a + nx, grid.hx * cx / grid.hy);
        }
    }
}

/// Operator `u ↦ mass·u + (1/w)Σ_f c_f μ_f (u_b − u_a) + (ℓ/w)·robin·u`.
///
/// `robin` is indexed by boundary slot.
pub fn assemble_operator(grid: &Grid, mu: &[Complex64], mass: Complex64, robin: &[Complex64]) -> SparseMatrix<Complex64> {
    let w = &grid.interior_weight;
    let mut t = Triplets::with_capacity(grid.len(), 5 * grid.len());
    let mut diag = vec![mass; grid.len()];
    for_each_face(grid, |a, b, c| {
        let m = (mu[a] + mu[b]) * (0.5 * c);
        t.push(a, b, m / w[a]);
        t.push(b, a, m / w[b]);
        diag[a] -= m / w[a];
        diag[b] -= m / w[b];
    });
    for (bn, r) in grid.boundary.iter().zip(robin) {
        diag[bn.index] += r * (bn.weight / w[bn.index]);
    }
    for (k, d) in diag.into_iter().enumerate() {
        t.push(k, k, d);
    }
    t.finalize()
}

fn robin_coefficient(medium: &Medium, k_omega: f64) -> Vec<Complex64> {
    medium
        .lambda
        .iter()
        .zip(&medium.eta)
        .map(|(&l, &e)| Complex64::new(-e, k_omega * l))
        .collect()
}

fn operator_at(grid: &Grid, medium: &Medium, k_omega: f64) -> SparseMatrix<Complex64> {
    let mu = medium.mu(k_omega);
    assemble_operator(grid, &mu, (k_omega * k_omega).into(), &robin_coefficient(medium, k_omega))
}

pub fn assemble_harmonic_operator(grid: &Grid, medium: &Medium, k: usize, omega: f64) -> Result<SparseMatrix<Complex64>> {
    medium.validate(grid)?;
    if k == 0 {
        return Err(Error::InvalidArgument("harmonic index must be ≥ 1".into()));
    }
    check_omega(omega)?;
    Ok(operator_at(grid, medium, k as f64 * omega))
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("ω must be positive, got {omega}")))
    }
}

/// Right-hand side `−(ℓ/w) g` for a Robin datum `g`.
pub(crate) fn boundary_rhs(grid: &Grid, g: &BoundaryField<f64>) -> Vec<Complex64> {
    let mut b = vec![Complex64::zero(); grid.len()];
    for (bn, gv) in grid.boundary.iter().zip(g.iter()) {
        b[bn.index] = -gv * (bn.weight / grid.interior_weight[bn.index]);
    }
    b
}

/// Right-hand side `(kω)² 2α f`.
fn harmonic_rhs(medium: &Medium, k_omega: f64, f: &ComplexField<f64>) -> Vec<Complex64> {
    let s = 2.0 * k_omega * k_omega;
    f.iter().zip(&medium.alpha).map(|(v, &a)| v * (s * a)).collect()
}

/// Solver context for one grid and medium. Factorizations are cached per
/// frequency `kω` and shared read-only.
pub struct Helmholtz<'a> {
    grid: &'a Grid,
    medium: &'a Medium,
    cfg: SolverConfig<f64>,
    cache: Mutex<HashMap<u64, Arc<Solver<Complex64>>>>,
}

impl<'a> Helmholtz<'a> {
    pub fn new(grid: &'a Grid, medium: &'a Medium) -> Result<Self> {
        Self::with_config(grid, medium, SolverConfig::default())
    }

    pub fn with_config(grid: &'a Grid, medium: &'a Medium, cfg: SolverConfig<f64>) -> Result<Self> {
        medium.validate(grid)?;
        Ok(Self { grid, medium, cfg, cache: Mutex::new(HashMap::new()) })
    }

    pub fn grid(&self) -> &'a Grid {
        self.grid
    }

    pub fn medium(&self) -> &'a Medium {
        self.medium
    }

    /// Factored operator at frequency `kω`.
    pub fn solver(&self, k_omega: f64) -> Result<Arc<Solver<Complex64>>> {
        check_omega(k_omega)?;
        let key = k_omega.to_bits();
        if let Some(s) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(s));
        }
        let s = Arc::new(Solver::new(operator_at(self.grid, self.medium, k_omega), self.cfg)?);
        self.cache.lock().expect("cache lock").insert(key, Arc::clone(&s));
        Ok(s)
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache lock").clear();
    }

    fn solve_at(&self, k_omega: f64, rhs: Vec<Complex64>) -> Result<(ComplexField<f64>, SolveReport)> {
        let (x, rep) = self.solver(k_omega)?.solve(&rhs)?;
        Ok((ComplexField::from_vec(x), rep))
    }

    /// `u₁` with Robin datum `g` at frequency ω.
    pub fn solve_fundamental(&self, source: &BoundarySource) -> Result<(ComplexField<f64>, SolveReport)> {
        self.grid.check_boundary(source.g.len())?;
        self.solve_at(source.omega, boundary_rhs(self.grid, &source.g))
    }

    /// `u_k` with interior source `(kω)² 2α f` and homogeneous Robin data.
    pub fn solve_harmonic(&self, k: usize, omega: f64, f: &ComplexField<f64>) -> Result<(ComplexField<f64>, SolveReport)> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("harmonic problems need k ≥ 2, got {k}")));
        }
        self.grid.check_nodes(f.len())?;
        let kw = k as f64 * omega;
        self.solve_at(kw, harmonic_rhs(self.medium, kw, f))
    }

    /// Auxiliary problem at 2ω with Robin datum `−h`.
    pub fn solve_auxiliary(&self, omega: f64, h: &BoundaryField<f64>) -> Result<(ComplexField<f64>, SolveReport)> {
        let src = BoundarySource::new(self.grid, h.scale((-1.0).into()), 2.0 * omega)?;
        self.solve_fundamental(&src)
    }
}

pub fn solve_fundamental(grid: &Grid, medium: &Medium, source: &BoundarySource) -> Result<(ComplexField<f64>, SolveReport)> {
    Helmholtz::new(grid, medium)?.solve_fundamental(source)
}

pub fn solve_harmonic(grid: &Grid, medium: &Medium, k: usize, omega: f64, f: &ComplexField<f64>) -> Result<(ComplexField<f64>, SolveReport)> {
    Helmholtz::new(grid, medium)?.solve_harmonic(k, omega, f)
}

pub fn solve_auxiliary(grid: &Grid, medium: &Medium, omega: f64, h: &BoundaryField<f64>) -> Result<(ComplexField<f64>, SolveReport)> {
    Helmholtz::new(grid, medium)?.solve_auxiliary(omega, h)
}

/// `∂_ν u = (g + (ikωλ − η) u) / (γ − ikωβ)` on the boundary.
pub fn robin_to_neumann_trace(
    grid: &Grid,
    medium: &Medium,
    k: usize,
    omega: f64,
    u: &ComplexField<f64>,
    g: Option<&BoundaryField<f64>>,
) -> Result<BoundaryField<f64>> {
    grid.check_nodes(u.len())?;
    if let Some(g) = g {
        grid.check_boundary(g.len())?;
    }
    let kw = k as f64 * omega;
    let vals = grid
        .boundary
        .iter()
        .enumerate()
        .map(|(s, bn)| {
            let k = bn.index;
            let gv = g.map_or(Complex64::zero(), |g| g[s]);
            let robin = Complex64::new(-medium.eta[s], kw * medium.lambda[s]);
            let mu = Complex64::new(medium.gamma[k], -kw * medium.beta[k]);
            (gv + robin * u[k]) / mu
        })
        .collect();
    Ok(BoundaryField::from_vec(vals))
}

/// Both sides of the dissipation identity
/// `ω∫β|∇u|² + ω∫_{∂Ω}λ|u|² = −Im ∫_{∂Ω} g ū`
/// evaluated with the discrete bilinear form of the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub volume: f64,
    pub boundary: f64,
    pub flux: f64,
    pub relative_discrepancy: f64,
}

pub fn energy_balance(grid: &Grid, medium: &Medium, source: &BoundarySource, u: &ComplexField<f64>) -> Result<EnergyBalance> {
    grid.check_nodes(u.len())?;
    let omega = source.omega;
    let mut volume = 0.0;
    for_each_face(grid, |a, b, c| {
        let beta = 0.5 * (medium.beta[a] + medium.beta[b]);
        volume += c * beta * (u[a] - u[b]).norm_sqr();
    });
    volume *= omega;
    let mut boundary = 0.0;
    let mut flux = Complex64::zero();
    for (s, bn) in grid.boundary.iter().enumerate() {
        let v = u[bn.index];
        boundary += bn.weight * medium.lambda[s] * v.norm_sqr();
        flux += source.g[s] * v.conj() * bn.weight;
    }
    boundary *= omega;
    let flux = -flux.im;
    let lhs = volume + boundary;
    let relative_discrepancy = (lhs - flux).abs() / lhs.abs().max(flux.abs()).max(1e-300);
    Ok(EnergyBalance { volume, boundary, flux, relative_discrepancy })
}

/// Relative residual `‖A u − b‖_{L²(Ω)} / ‖u‖` of the k-th mode equation
/// (absolute when `‖u‖ < 1e−14`). `k = 1` uses the Robin datum `g`,
/// `k ≥ 2` the interior source `f`.
pub fn mode_residual(
    grid: &Grid,
    medium: &Medium,
    k: usize,
    omega: f64,
    u: &ComplexField<f64>,
    g: Option<&BoundaryField<f64>>,
    f: Option<&ComplexField<f64>>,
) -> Result<f64> {
    let kw = k as f64 * omega;
    let a = assemble_harmonic_operator(grid, medium, k, omega)?;
    let au = a.matvec(u.values());
    let mut b = match g {
        Some(g) => boundary_rhs(grid, g),
        None => vec![Complex64::zero(); grid.len()],
    };
    if let Some(f) = f {
        b.iter_mut().zip(harmonic_rhs(medium, kw, f)).for_each(|(x, y)| *x += y);
    }
    let r = ComplexField::from_vec(au.iter().zip(&b).map(|(x, y)| x - y).collect());
    let nr = norms::l2(grid, &r);
    let nu = norms::l2(grid, u);
    Ok(if nu < 1e-14 { nr } else { nr / nu })
}

/// Exact Robin datum of a smooth field `u` with gradient `grad`, evaluated per
/// boundary face and averaged by face length at corners.
pub fn robin_datum_of(
    grid: &Grid,
    medium: &Medium,
    omega: f64,
    u: impl Fn(f64, f64) -> Complex64,
    grad: impl Fn(f64, f64) -> [Complex64; 2],
) -> BoundaryField<f64> {
    BoundaryField::from_vec(
        grid.boundary
            .iter()
            .enumerate()
            .map(|(s, bn)| {
                let [x, y] = grid.position(bn.index);
                let k = bn.index;
                let mu = Complex64::new(medium.gamma[k], -omega * medium.beta[k]);
                let robin = Complex64::new(-medium.eta[s], omega * medium.lambda[s]);
                let (uv, gv) = (u(x, y), grad(x, y));
                let (i, j) = grid.ij(k);
                let mut acc = Complex64::zero();
                let mut len = 0.0;
                let mut face = |dn: Complex64, l: f64| {
                    acc += (mu * dn - robin * uv) * l;
                    len += l;
                };
                if i == 0 {
                    face(-gv[0], grid.hy);
                }
                if i == grid.nx - 1 {
                    face(gv[0], grid.hy);
                }
                if j == 0 {
                    face(-gv[1], grid.hx);
                }
                if j == grid.ny - 1 {
                    face(gv[1], grid.hx);
                }
                acc / len
            })
            .collect(),
    )
}

/// Plane wave `exp(iκ·x)` with `μκ·κ = ω²` for constant μ; returns `(κ, u, ∇u)`.
pub fn plane_wave(mu: Complex64, omega: f64, angle: f64) -> (Complex64, impl Fn(f64, f64) -> Complex64, impl Fn(f64, f64) -> [Complex64; 2]) {
    let kappa = omega / mu.sqrt();
    let (dx, dy) = (angle.cos(), angle.sin());
    let u = move |x: f64, y: f64| (I * kappa * (dx * x + dy * y)).exp();
    let grad = move |x: f64, y: f64| {
        let v = (I * kappa * (dx * x + dy * y)).exp();
        [I * kappa * dx * v, I * kappa * dy * v]
    };
    (kappa, u, grad)
}
