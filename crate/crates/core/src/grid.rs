//! Uniform node grid on a rectangle with boundary classification and
//! trapezoidal quadrature weights.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{BoundaryField, ComplexField};
use crate::scalar::Real;

/// One boundary node, listed counterclockwise starting at the lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode<T> {
    pub index: usize,
    pub normal: [T; 2],
    /// Trapezoidal length weight; corners collect half a spacing from each edge.
    pub weight: T,
    /// Arclength from the lower-left corner.
    pub arclength: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub nx: usize,
    pub ny: usize,
    pub hx: T,
    pub hy: T,
    pub origin: [T; 2],
    pub width: T,
    pub height: T,
    pub boundary: Vec<BoundaryNode<T>>,
    pub interior: Vec<usize>,
    /// Trapezoidal area weight for every node.
    pub interior_weight: Vec<T>,
    /// Position in `boundary` for boundary nodes.
    boundary_slot: Vec<Option<usize>>,
}

impl<T: Real> Grid<T> {
    pub fn build(width: T, height: T, nx: usize, ny: usize) -> Result<Self> {
        Self::build_at([T::zero(), T::zero()], width, height, nx, ny)
    }

    pub fn build_at(origin: [T; 2], width: T, height: T, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::DimensionTooSmall { nx, ny });
        }
        if !(width > T::zero() && height > T::zero()) {
            return Err(Error::NonpositiveExtent {
                width: width.to_f64_lossy(),
                height: height.to_f64_lossy(),
            });
        }
        let hx = width / T::lit((nx - 1) as f64);
        let hy = height / T::lit((ny - 1) as f64);
        let n = nx * ny;
        let half = T::lit(0.5);
        let cx = |i: usize| if i == 0 || i == nx - 1 { half } else { T::one() };
        let cy = |j: usize| if j == 0 || j == ny - 1 { half } else { T::one() };

        let mut interior_weight = vec![T::zero(); n];
        for j in 0..ny {
            for i in 0..nx {
                interior_weight[j * nx + i] = hx * hy * cx(i) * cy(j);
            }
        }

        // Counterclockwise walk: bottom, right, top, left.
        let mut ring: Vec<(usize, usize)> = Vec::with_capacity(2 * (nx + ny) - 4);
        ring.extend((0..nx).map(|i| (i, 0)));
        ring.extend((1..ny).map(|j| (nx - 1, j)));
        ring.extend((0..nx - 1).rev().map(|i| (i, ny - 1)));
        ring.extend((1..ny - 1).rev().map(|j| (0, j)));

        let mut boundary = Vec::with_capacity(ring.len());
        let mut boundary_slot = vec![None; n];
        let mut arclength = T::zero();
        let mut prev: Option<(usize, usize)> = None;
        for (slot, &(i, j)) in ring.iter().enumerate() {
            if let Some((pi, _)) = prev {
                arclength += if pi != i { hx } else { hy };
            }
            prev = Some((i, j));
            let (mut nxv, mut nyv) = (T::zero(), T::zero());
            let mut weight = T::zero();
            if i == 0 || i == nx - 1 {
                nxv += if i == 0 { -T::one() } else { T::one() };
                weight += hy * cy(j);
            }
            if j == 0 || j == ny - 1 {
                nyv += if j == 0 { -T::one() } else { T::one() };
                weight += hx * cx(i);
            }
            let len = (nxv * nxv + nyv * nyv).sqrt();
            let index = j * nx + i;
            boundary_slot[index] = Some(slot);
            boundary.push(BoundaryNode {
                index,
                normal: [nxv / len, nyv / len],
                weight,
                arclength,
            });
        }
        let interior = (0..n).filter(|&k| boundary_slot[k].is_none()).collect();

        Ok(Self {
            nx,
            ny,
            hx,
            hy,
            origin,
            width,
            height,
            boundary,
            interior,
            interior_weight,
            boundary_slot,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn position(&self, k: usize) -> [T; 2] {
        let (i, j) = self.ij(k);
        [
            self.origin[0] + self.hx * T::lit(i as f64),
            self.origin[1] + self.hy * T::lit(j as f64),
        ]
    }

    pub fn boundary_slot(&self, k: usize) -> Option<usize> {
        self.boundary_slot[k]
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary_slot[k].is_some()
    }

    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary.iter().map(|b| b.index)
    }

    /// Total boundary length.
    pub fn perimeter(&self) -> T {
        let two = T::lit(2.0);
        two * (self.width + self.height)
    }

    /// Boundary length weight per node (zero in the interior).
    pub fn boundary_length_per_node(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.len()];
        for b in &self.boundary {
            out[b.index] = b.weight;
        }
        out
    }

    /// Trapezoidal approximation of the area integral.
    pub fn integrate_interior(&self, f: &ComplexField<T>) -> Result<Complex<T>> {
        self.check_nodes(f.len())?;
        Ok(f.values()
            .iter()
            .zip(&self.interior_weight)
            .map(|(v, &w)| v * w)
            .sum())
    }

    /// Trapezoidal approximation of the boundary integral.
    pub fn integrate_boundary(&self, f: &BoundaryField<T>) -> Result<Complex<T>> {
        self.check_boundary(f.len())?;
        Ok(f.values()
            .iter()
            .zip(&self.boundary)
            .map(|(v, b)| v * b.weight)
            .sum())
    }

    pub(crate) fn check_nodes(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected: self.len(), got })
        }
    }

    pub(crate) fn check_boundary(&self, got: usize) -> Result<()> {
        if got == self.boundary.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected: self.boundary.len(), got })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_grid_counts() {
        let g = Grid::build(1.0, 1.0, 3, 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.boundary.len(), 8);
        assert_eq!(g.interior, vec![4]);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            Grid::build(1.0, 1.0, 2, 5),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(matches!(
            Grid::build(0.0, 1.0, 5, 5),
            Err(Error::NonpositiveExtent { .. })
        ));
        assert!(Grid::build(1.0, f64::NAN, 5, 5).is_err());
    }

    #[test]
    fn weights_sum_to_area_and_perimeter() {
        let g = Grid::build(2.0, 1.0, 5, 3).unwrap();
        assert_eq!((g.hx, g.hy), (0.5, 0.5));
        let perim: f64 = g.boundary.iter().map(|b| b.weight).sum();
        assert!((perim - 6.0).abs() <= 1e-12);
        let g = Grid::build(1.0, 1.0, 65, 65).unwrap();
        let area: f64 = g.interior_weight.iter().sum();
        assert!((area - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn normals_and_order() {
        let g = Grid::build(1.0, 2.0, 4, 5).unwrap();
        let first = g.boundary[0];
        assert_eq!(first.index, 0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((first.normal[0] + s).abs() < 1e-15 && (first.normal[1] + s).abs() < 1e-15);
        assert_eq!(g.boundary[1].normal, [0.0, -1.0]);
        let right = g.boundary.iter().find(|b| g.ij(b.index) == (3, 2)).unwrap();
        assert_eq!(right.normal, [1.0, 0.0]);
        let last = g.boundary.last().unwrap();
        assert!((last.arclength - (6.0 - g.hy)).abs() < 1e-12);
        // every node classified once
        let nb = (0..g.len()).filter(|&k| g.is_boundary(k)).count();
        assert_eq!(nb + g.interior.len(), g.len());
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            assert_eq!(g.index(i, j), k);
        }
    }

    #[test]
    fn single_precision_grid() {
        let g = Grid::<f32>::build(1.0, 1.0, 9, 9).unwrap();
        let area: f32 = g.interior_weight.iter().sum();
        assert!((area - 1.0).abs() < 1e-6);
    }
}
