//! Discrete norms on grid fields.
//!
//! The gradient uses centered differences inside and second-order one-sided
//! differences on the boundary; the Laplacian is the 5-point stencil at
//! interior nodes. The H² proxy is `‖Δ_h u‖ + ‖u‖_{H¹}`.

use num_complex::Complex;

use crate::field::{BoundaryField, ComplexField};
use crate::grid::Grid;
use crate::scalar::Real;

pub fn l2<T: Real>(grid: &Grid<T>, u: &ComplexField<T>) -> T {
    u.iter()
        .zip(&grid.interior_weight)
        .map(|(v, &w)| v.norm_sqr() * w)
        .sum::<T>()
        .sqrt()
}

/// Boundary L² norm of the trace of a nodal field.
pub fn boundary_l2<T: Real>(grid: &Grid<T>, u: &ComplexField<T>) -> T {
    grid.boundary
        .iter()
        .map(|b| u[b.index].norm_sqr() * b.weight)
        .sum::<T>()
        .sqrt()
}

pub fn boundary_field_l2<T: Real>(grid: &Grid<T>, g: &BoundaryField<T>) -> T {
    grid.boundary
        .iter()
        .zip(g.iter())
        .map(|(b, v)| v.norm_sqr() * b.weight)
        .sum::<T>()
        .sqrt()
}

/// Discrete gradient `(∂_x u, ∂_y u)` at every node.
pub fn gradient<T: Real>(grid: &Grid<T>, u: &ComplexField<T>) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let (nx, ny) = (grid.nx, grid.ny);
    let two = T::lit(2.0);
    let (three, four) = (T::lit(3.0), T::lit(4.0));
    let v = u.values();
    let mut gx = vec![Complex::default(); grid.len()];
    let mut gy = vec![Complex::default(); grid.len()];
    let at = |i: usize, j: usize| v[j * nx + i];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            gx[k] = if i == 0 {
                (at(0, j) * (-three) + at(1, j) * four - at(2, j)) / (two * grid.hx)
            } else if i == nx - 1 {
                (at(i, j) * three - at(i - 1, j) * four + at(i - 2, j)) / (two * grid.hx)
            } else {
                (at(i + 1, j) - at(i - 1, j)) / (two * grid.hx)
            };
            gy[k] = if j == 0 {
                (at(i, 0) * (-three) + at(i, 1) * four - at(i, 2)) / (two * grid.hy)
            } else if j == ny - 1 {
                (at(i, j) * three - at(i, j - 1) * four + at(i, j - 2)) / (two * grid.hy)
            } else {
                (at(i, j + 1) - at(i, j - 1)) / (two * grid.hy)
            };
        }
    }
    (gx, gy)
}

/// L² norm of the discrete gradient (H¹ seminorm).
pub fn grad_l2<T: Real>(grid: &Grid<T>, u: &ComplexField<T>) -> T {
    let (gx, gy) = gradient(grid, u);
    gx.iter()
        .zip(&gy)
        .zip(&grid.interior_weight)
        .map(|((a, b), &w)| (a.norm_sqr() + b.norm_sqr()) * w)
        .sum::<T>()
        .sqrt()
}

/// 5-point Laplacian at interior nodes; zero on the boundary.
pub fn laplacian<T: Real>(grid: &Grid<T>, u: &ComplexField<T>) -> ComplexField<T> {
    let nx = grid.nx;
    let two = T::lit(2.0);
    let (ihx2, ihy2) = (T::one() / (grid.hx * grid.hx), T::one() / (grid.hy * grid.hy));
    let mut out = ComplexField::zeros(grid);
    for &k in &grid.interior {
        let c = u[k] * two;
        out[k] = (u[k + 1] + u[k - 1] - c) * ihx2 + (u[k + nx] + u[k - nx] - c) * ihy2;
    }
    out
}

pub fn laplacian_l2<T: Real>(grid: &Grid<T>, u: &ComplexField<T>) -> T {
    let lap = laplacian(grid, u);
    let w = grid.hx * grid.hy;
    grid.interior
        .iter()
        .map(|&k| lap[k].norm_sqr() * w)
        .sum::<T>()
        .sqrt()
}

pub fn h1<T: Real>(grid: &Grid<T>, u: &ComplexField<T>) -> T {
    l2(grid, u).hypot(grad_l2(grid, u))
}

pub fn h2_proxy<T: Real>(grid: &Grid<T>, u: &ComplexField<T>) -> T {
    laplacian_l2(grid, u) + h1(grid, u)
}
