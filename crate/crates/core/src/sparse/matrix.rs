use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coordinate-format accumulator. Duplicates are summed on compression.
#[derive(Debug, Clone)]
pub struct Triplets<S> {
    n: usize,
    entries: Vec<(usize, usize, S)>,
}

impl<S: Scalar> Triplets<S> {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, row: usize, col: usize, v: S) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, v));
    }

    pub fn finalize(self) -> SparseMatrix<S> {
        SparseMatrix::from_triplets(self)
    }
}

/// Square matrix in compressed sparse column form with sorted, unique rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<S> {
    n: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> SparseMatrix<S> {
    fn from_triplets(t: Triplets<S>) -> Self {
        let n = t.n;
        let mut count = vec![0usize; n + 1];
        for &(_, c, _) in &t.entries {
            count[c + 1] += 1;
        }
        for c in 0..n {
            count[c + 1] += count[c];
        }
        let mut next = count.clone();
        let mut rows = vec![0usize; t.entries.len()];
        let mut vals = vec![S::zero(); t.entries.len()];
        for (r, c, v) in t.entries {
            rows[next[c]] = r;
            vals[next[c]] = v;
            next[c] += 1;
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowidx = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len());
        colptr.push(0);
        let mut scratch: Vec<(usize, S)> = Vec::new();
        for c in 0..n {
            scratch.clear();
            scratch.extend((count[c]..count[c + 1]).map(|p| (rows[p], vals[p])));
            scratch.sort_by_key(|e| e.0);
            for &(r, v) in &scratch {
                if rowidx.len() > colptr[c] && *rowidx.last().unwrap() == r {
                    *values.last_mut().unwrap() += v;
                } else {
                    rowidx.push(r);
                    values.push(v);
                }
            }
            colptr.push(rowidx.len());
        }
        Self { n, colptr, rowidx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![S::one(); n])
    }

    pub fn from_diagonal(d: &[S]) -> Self {
        Self {
            n: d.len(),
            colptr: (0..=d.len()).collect(),
            rowidx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowidx(&self) -> &[usize] {
        &self.rowidx
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Entries of column `c` as `(row, value)`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        (self.colptr[c]..self.colptr[c + 1]).map(move |p| (self.rowidx[p], self.values[p]))
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        let rows = &self.rowidx[self.colptr[c]..self.colptr[c + 1]];
        match rows.binary_search(&r) {
            Ok(p) => self.values[self.colptr[c] + p],
            Err(_) => S::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.n).flat_map(move |c| self.column(c).map(move |(r, v)| (r, c, v)))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.n];
        for c in 0..self.n {
            let xc = x[c];
            if xc == S::zero() {
                continue;
            }
            for p in self.colptr[c]..self.colptr[c + 1] {
                y[self.rowidx[p]] += self.values[p] * xc;
            }
        }
        y
    }

    /// `y = Aᵀ x` (plain transpose, no conjugation).
    pub fn matvec_transposed(&self, x: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|c| self.column(c).map(|(r, v)| v * x[r]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Triplets::with_capacity(self.n, self.nnz());
        for (r, c, v) in self.triplets() {
            t.push(c, r, v);
        }
        t.finalize()
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: S, other: &Self) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::ShapeMismatch { expected: self.n, got: other.n });
        }
        let mut t = Triplets::with_capacity(self.n, self.nnz() + other.nnz());
        self.triplets().for_each(|(r, c, v)| t.push(r, c, v));
        other.triplets().for_each(|(r, c, v)| t.push(r, c, s * v));
        Ok(t.finalize())
    }

    pub fn scale(&self, s: S) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Drops stored zeros.
    pub fn pruned(&self) -> Self {
        let mut t = Triplets::with_capacity(self.n, self.nnz());
        self.triplets()
            .filter(|e| e.2 != S::zero())
            .for_each(|(r, c, v)| t.push(r, c, v));
        t.finalize()
    }

    /// Off-diagonal adjacency of the symmetrized pattern `A + Aᵀ`.
    pub fn symmetric_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (r, c, _) in self.triplets() {
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = Triplets::new(3);
        t.push(0, 0, 1.0);
        t.push(2, 1, 4.0);
        t.push(0, 0, 2.0);
        t.push(1, 1, 5.0);
        let a = t.finalize();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(2, 1), 4.0);
        assert_eq!(a.get(1, 2), 0.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 5.0, 4.0]);
        assert_eq!(a.matvec_transposed(&[1.0, 1.0, 1.0]), vec![3.0, 9.0, 0.0]);
        assert_eq!(a.transpose().get(1, 2), 4.0);
    }
}
