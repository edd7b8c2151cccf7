//! Left-looking sparse LU (Gilbert–Peierls) with threshold partial pivoting.
//!
//! Computes `P A Q = L U` with `Q` a fixed fill-reducing column order and `P`
//! chosen row by row. The diagonal entry of the permuted matrix is kept as
//! pivot whenever it is within `pivot_tol` of the column maximum.

use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::matrix::SparseMatrix;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct LuFactor<S> {
    n: usize,
    // L is unit lower triangular; the diagonal is stored first in each column.
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<S>,
    // U is upper triangular; the diagonal is stored last in each column.
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<S>,
    pinv: Vec<usize>,
    q: Vec<usize>,
}

struct Workspace {
    xi: Vec<usize>,
    stack: Vec<usize>,
    pstack: Vec<usize>,
    mark: Vec<usize>,
}

impl<S: Scalar> LuFactor<S> {
    pub fn factor(a: &SparseMatrix<S>, q: Vec<usize>, pivot_tol: S::Real) -> Result<Self> {
        let n = a.dim();
        assert_eq!(q.len(), n, "column order has wrong length");
        let mut f = Self {
            n,
            lp: Vec::with_capacity(n + 1),
            li: Vec::with_capacity(4 * a.nnz()),
            lx: Vec::with_capacity(4 * a.nnz()),
            up: Vec::with_capacity(n + 1),
            ui: Vec::with_capacity(4 * a.nnz()),
            ux: Vec::with_capacity(4 * a.nnz()),
            pinv: vec![NONE; n],
            q,
        };
        let mut ws = Workspace {
            xi: vec![0; n],
            stack: vec![0; n],
            pstack: vec![0; n],
            mark: vec![NONE; n],
        };
        let mut x = vec![S::zero(); n];

        for k in 0..n {
            f.lp.push(f.li.len());
            f.up.push(f.ui.len());
            let col = f.q[k];

            let mut top = n;
            for (r, _) in a.column(col) {
                if ws.mark[r] != k {
                    top = f.dfs(r, k, top, &mut ws);
                }
            }
            for (r, v) in a.column(col) {
                x[r] = v;
            }
            for p in top..n {
                let j = ws.xi[p];
                let jj = f.pinv[j];
                if jj == NONE {
                    continue;
                }
                let xj = x[j];
                if xj == S::zero() {
                    continue;
                }
                for t in f.lp[jj] + 1..f.lp[jj + 1] {
                    x[f.li[t]] -= f.lx[t] * xj;
                }
            }

            let mut ipiv = NONE;
            let mut amax = -S::Real::one();
            for p in top..n {
                let i = ws.xi[p];
                if f.pinv[i] == NONE {
                    let t = x[i].modulus();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    f.ui.push(f.pinv[i]);
                    f.ux.push(x[i]);
                }
            }
            if ipiv == NONE || !(amax > S::Real::zero()) || !amax.is_finite() {
                return Err(Error::SingularMatrix { column: k });
            }
            if f.pinv[col] == NONE && x[col].modulus() >= amax * pivot_tol {
                ipiv = col;
            }
            let pivot = x[ipiv];
            f.ui.push(k);
            f.ux.push(pivot);
            f.pinv[ipiv] = k;
            f.li.push(ipiv);
            f.lx.push(S::one());
            for p in top..n {
                let i = ws.xi[p];
                if f.pinv[i] == NONE {
                    f.li.push(i);
                    f.lx.push(x[i] / pivot);
                }
                x[i] = S::zero();
            }
        }
        f.lp.push(f.li.len());
        f.up.push(f.ui.len());
        for i in &mut f.li {
            *i = f.pinv[*i];
        }
        f.li.shrink_to_fit();
        f.lx.shrink_to_fit();
        f.ui.shrink_to_fit();
        f.ux.shrink_to_fit();
        Ok(f)
    }

    /// Depth-first search in the graph of the partial `L`, pushing the
    /// postorder of nodes reachable from `j0` onto `xi[..top]`.
    fn dfs(&self, j0: usize, k: usize, mut top: usize, ws: &mut Workspace) -> usize {
        let mut head = 0usize;
        ws.stack[0] = j0;
        loop {
            let j = ws.stack[head];
            let jj = self.pinv[j];
            if ws.mark[j] != k {
                ws.mark[j] = k;
                ws.pstack[head] = if jj == NONE { 0 } else { self.lp[jj] };
            }
            let end = if jj == NONE { 0 } else { self.lp[jj + 1] };
            let mut descended = false;
            let mut p = ws.pstack[head];
            while p < end {
                let i = self.li[p];
                p += 1;
                if ws.mark[i] != k {
                    ws.pstack[head] = p;
                    head += 1;
                    ws.stack[head] = i;
                    descended = true;
                    break;
                }
            }
            if !descended {
                top -= 1;
                ws.xi[top] = j;
                if head == 0 {
                    return top;
                }
                head -= 1;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L + U`.
    pub fn nnz(&self) -> usize {
        self.lx.len() + self.ux.len()
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut y = vec![S::zero(); n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for k in 0..n {
            let yk = y[k];
            if yk != S::zero() {
                for t in self.lp[k] + 1..self.lp[k + 1] {
                    y[self.li[t]] -= self.lx[t] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            let d = self.up[k + 1] - 1;
            y[k] /= self.ux[d];
            let yk = y[k];
            if yk != S::zero() {
                for t in self.up[k]..d {
                    y[self.ui[t]] -= self.ux[t] * yk;
                }
            }
        }
        let mut x = vec![S::zero(); n];
        for (k, &c) in self.q.iter().enumerate() {
            x[c] = y[k];
        }
        x
    }

    /// Solves `Aᵀ x = b` (no conjugation) with the same factors.
    pub fn solve_transposed(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut z: Vec<S> = self.q.iter().map(|&c| b[c]).collect();
        for k in 0..n {
            let d = self.up[k + 1] - 1;
            let s: S = (self.up[k]..d).map(|t| self.ux[t] * z[self.ui[t]]).sum();
            z[k] = (z[k] - s) / self.ux[d];
        }
        for k in (0..n).rev() {
            let s: S = (self.lp[k] + 1..self.lp[k + 1])
                .map(|t| self.lx[t] * z[self.li[t]])
                .sum();
            z[k] -= s;
        }
        (0..n).map(|i| z[self.pinv[i]]).collect()
    }
}
