//! ILU(0)-preconditioned restarted GMRES, the fallback to the direct solver.

use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};
use crate::sparse::matrix::SparseMatrix;

/// Incomplete LU with the sparsity pattern of `A`, stored by rows.
#[derive(Debug, Clone)]
pub struct Ilu0<S> {
    rowptr: Vec<usize>,
    colidx: Vec<usize>,
    values: Vec<S>,
    diag: Vec<usize>,
}

impl<S: Scalar> Ilu0<S> {
    pub fn new(a: &SparseMatrix<S>) -> Result<Self> {
        // Rows of A are the columns of Aᵀ.
        let at = a.transpose();
        let n = a.dim();
        let rowptr = at.colptr().to_vec();
        let colidx = at.rowidx().to_vec();
        let mut values = at.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in rowptr[i]..rowptr[i + 1] {
                if colidx[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SingularMatrix { column: i });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in rowptr[i]..rowptr[i + 1] {
                pos[colidx[p]] = p;
            }
            for p in rowptr[i]..diag[i] {
                let k = colidx[p];
                let piv = values[diag[k]];
                if piv == S::zero() {
                    return Err(Error::SingularMatrix { column: k });
                }
                values[p] /= piv;
                let lik = values[p];
                for t in diag[k] + 1..rowptr[k + 1] {
                    let q = pos[colidx[t]];
                    if q != usize::MAX {
                        let ukj = values[t];
                        values[q] -= lik * ukj;
                    }
                }
            }
            for p in rowptr[i]..rowptr[i + 1] {
                pos[colidx[p]] = usize::MAX;
            }
            if values[diag[i]] == S::zero() {
                return Err(Error::SingularMatrix { column: i });
            }
        }
        Ok(Self { rowptr, colidx, values, diag })
    }

    pub fn apply(&self, r: &[S]) -> Vec<S> {
        let n = r.len();
        let mut y = r.to_vec();
        for i in 0..n {
            let s: S = (self.rowptr[i]..self.diag[i])
                .map(|p| self.values[p] * y[self.colidx[p]])
                .sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: S = (self.diag[i] + 1..self.rowptr[i + 1])
                .map(|p| self.values[p] * y[self.colidx[p]])
                .sum();
            y[i] = (y[i] - s) / self.values[self.diag[i]];
        }
        y
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| x.conj() * *y).sum()
}

/// Right-preconditioned GMRES(m). Returns the iterate and the total number of
/// inner iterations; stops when `‖b − A x‖ ≤ tol ‖b‖`.
pub fn gmres<S: Scalar>(
    a: &SparseMatrix<S>,
    prec: &Ilu0<S>,
    b: &[S],
    x0: Vec<S>,
    tol: S::Real,
    restart: usize,
    max_iters: usize,
) -> (Vec<S>, usize) {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0;
    let mut iters = 0;
    if bnorm == S::Real::zero() {
        return (vec![S::zero(); n], 0);
    }
    let m = restart.max(1);
    while iters < max_iters {
        let ax = a.matvec(&x);
        let r: Vec<S> = b.iter().zip(&ax).map(|(&bi, &yi)| bi - yi).collect();
        let beta = norm2(&r);
        if beta <= tol * bnorm {
            break;
        }
        let mut v: Vec<Vec<S>> = vec![r.iter().map(|&ri| ri / S::from_real(beta)).collect()];
        let mut z: Vec<Vec<S>> = Vec::with_capacity(m);
        let mut h = vec![vec![S::zero(); m]; m + 1];
        let mut cs = vec![S::Real::zero(); m];
        let mut sn = vec![S::zero(); m];
        let mut g = vec![S::zero(); m + 1];
        g[0] = S::from_real(beta);
        let mut used = 0;
        for j in 0..m {
            iters += 1;
            let zj = prec.apply(&v[j]);
            let mut w = a.matvec(&zj);
            z.push(zj);
            for i in 0..=j {
                let hij = dot(&v[i], &w);
                h[i][j] = hij;
                w.iter_mut().zip(&v[i]).for_each(|(wk, vk)| *wk -= hij * *vk);
            }
            let wn = norm2(&w);
            h[j + 1][j] = S::from_real(wn);
            for i in 0..j {
                let (a0, a1) = (h[i][j], h[i + 1][j]);
                h[i][j] = S::from_real(cs[i]) * a0 + sn[i] * a1;
                h[i + 1][j] = -sn[i].conj() * a0 + S::from_real(cs[i]) * a1;
            }
            let (hjj, hj1) = (h[j][j], h[j + 1][j]);
            let t = (hjj.modulus_sqr() + hj1.modulus_sqr()).sqrt();
            if hjj.modulus() == S::Real::zero() {
                cs[j] = S::Real::zero();
                sn[j] = S::one();
            } else {
                cs[j] = hjj.modulus() / t;
                sn[j] = S::from_real(cs[j]) * (hj1 / hjj).conj();
            }
            h[j][j] = S::from_real(cs[j]) * hjj + sn[j] * hj1;
            h[j + 1][j] = S::zero();
            g[j + 1] = -sn[j].conj() * g[j];
            g[j] = S::from_real(cs[j]) * g[j];
            used = j + 1;
            if g[j + 1].modulus() <= tol * bnorm || wn == S::Real::zero() || iters >= max_iters {
                break;
            }
            v.push(w.iter().map(|&wk| wk / S::from_real(wn)).collect());
        }
        let mut yv = vec![S::zero(); used];
        for i in (0..used).rev() {
            let s: S = (i + 1..used).map(|k| h[i][k] * yv[k]).sum();
            yv[i] = (g[i] - s) / h[i][i];
        }
        for (k, zk) in z.iter().take(used).enumerate() {
            x.iter_mut().zip(zk).for_each(|(xi, zi)| *xi += yv[k] * *zi);
        }
    }
    (x, iters)
}
