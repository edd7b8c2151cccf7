//! Complex nodal and boundary fields, plus the CSV dump format.

use std::io::Write;
use std::ops::{Add, Index, IndexMut, Sub};

use num_complex::Complex;

use crate::error::Result;
use crate::grid::Grid;
use crate::scalar::Real;

/// Complex value at every grid node, flat index `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<T>(Vec<Complex<T>>);

/// Complex value at every boundary node, in the grid's boundary order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField<T>(Vec<Complex<T>>);

macro_rules! field_common {
    ($name:ident) => {
        impl<T: Real> $name<T> {
            pub fn from_vec(values: Vec<Complex<T>>) -> Self {
                Self(values)
            }

            pub fn values(&self) -> &[Complex<T>] {
                &self.0
            }

            pub fn values_mut(&mut self) -> &mut [Complex<T>] {
                &mut self.0
            }

            pub fn into_vec(self) -> Vec<Complex<T>> {
                self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn iter(&self) -> std::slice::Iter<'_, Complex<T>> {
                self.0.iter()
            }

            pub fn scale(&self, c: Complex<T>) -> Self {
                Self(self.0.iter().map(|v| v * c).collect())
            }

            pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
                Self(self.0.iter().map(|&v| f(v)).collect())
            }

            /// Pointwise product.
            pub fn mul(&self, other: &Self) -> Self {
                Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
            }

            pub fn max_abs(&self) -> T {
                self.0.iter().map(|v| v.norm()).fold(T::zero(), T::max)
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.re.is_finite() && v.im.is_finite())
            }

            pub fn is_zero(&self) -> bool {
                self.0.iter().all(|v| v.re == T::zero() && v.im == T::zero())
            }
        }

        impl<T> Index<usize> for $name<T> {
            type Output = Complex<T>;
            fn index(&self, k: usize) -> &Complex<T> {
                &self.0[k]
            }
        }

        impl<T> IndexMut<usize> for $name<T> {
            fn index_mut(&mut self, k: usize) -> &mut Complex<T> {
                &mut self.0[k]
            }
        }

        impl<T: Real> Add for &$name<T> {
            type Output = $name<T>;
            fn add(self, rhs: Self) -> $name<T> {
                $name(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
            }
        }

        impl<T: Real> Sub for &$name<T> {
            type Output = $name<T>;
            fn sub(self, rhs: Self) -> $name<T> {
                $name(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
            }
        }
    };
}

field_common!(ComplexField);
field_common!(BoundaryField);

impl<T: Real> ComplexField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self(vec![Complex::new(T::zero(), T::zero()); grid.len()])
    }

    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T, T) -> Complex<T>) -> Self {
        Self((0..grid.len()).map(|k| {
            let [x, y] = grid.position(k);
            f(x, y)
        })
        .collect())
    }

    pub fn from_real(values: &[T]) -> Self {
        Self(values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    /// Values at the boundary nodes, in boundary order.
    pub fn trace(&self, grid: &Grid<T>) -> BoundaryField<T> {
        BoundaryField(grid.boundary.iter().map(|b| self.0[b.index]).collect())
    }

    /// Writes `x,y,re,im` rows in flat-index order.
    pub fn write_csv(&self, grid: &Grid<T>, w: &mut impl Write) -> Result<()> {
        writeln!(w, "x,y,re,im")?;
        for (k, v) in self.0.iter().enumerate() {
            let [x, y] = grid.position(k);
            write_row(w, x, y, *v)?;
        }
        Ok(())
    }
}

impl<T: Real> BoundaryField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self(vec![Complex::new(T::zero(), T::zero()); grid.boundary.len()])
    }

    pub fn constant(grid: &Grid<T>, c: Complex<T>) -> Self {
        Self(vec![c; grid.boundary.len()])
    }

    pub fn from_fn(grid: &Grid<T>, f: impl Fn(&crate::grid::BoundaryNode<T>, [T; 2]) -> Complex<T>) -> Self {
        Self(grid.boundary.iter().map(|b| f(b, grid.position(b.index))).collect())
    }

    /// Nodal field equal to these values on the boundary and zero inside.
    pub fn extend(&self, grid: &Grid<T>) -> ComplexField<T> {
        let mut out = ComplexField::zeros(grid);
        for (b, v) in grid.boundary.iter().zip(&self.0) {
            out[b.index] = *v;
        }
        out
    }

    pub fn write_csv(&self, grid: &Grid<T>, w: &mut impl Write) -> Result<()> {
        writeln!(w, "x,y,re,im")?;
        for (b, v) in grid.boundary.iter().zip(&self.0) {
            let [x, y] = grid.position(b.index);
            write_row(w, x, y, *v)?;
        }
        Ok(())
    }
}

fn write_row<T: Real>(w: &mut impl Write, x: T, y: T, v: Complex<T>) -> Result<()> {
    writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", x, y, v.re, v.im)?;
    Ok(())
}
