//! Small linear-algebra layer: a complex CSR matrix plus dense helpers on top of faer.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Compressed sparse row matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    /// Duplicate entries are summed; exact zeros after summation are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            values.push(v);
        }
        let mut out_idx = Vec::with_capacity(indices.len());
        let mut out_val = Vec::with_capacity(values.len());
        for k in 0..indices.len() {
            if values[k] != ZERO {
                indptr[rows[k] + 1] += 1;
                out_idx.push(indices[k]);
                out_val.push(values[k]);
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix { nrows, ncols, indptr, indices: out_idx, values: out_val }
    }

    pub fn from_dense(m: &Mat<C64>, drop_below: f64) -> Self {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.norm() > drop_below {
                    t.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[a..b].binary_search(&c) {
            Ok(k) => self.values[a + k],
            Err(_) => ZERO,
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    /// y += alpha A x
    pub fn matvec_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for r in 0..self.nrows {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[r] += alpha * acc;
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &CsrMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t: Vec<_> = self.triplets().chain(other.triplets()).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest absolute row sum (induced infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn dagger(m: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

pub fn max_abs(m: &Mat<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// max |A_ij - conj(A_ji)|
pub fn hermiticity_defect(m: &Mat<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j.min(m.nrows() - 1) {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

pub fn hermitize(m: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn trace(m: &Mat<C64>) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Eigenvalues in ascending order and eigenvectors as columns.
pub fn eigh(m: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let vals = (0..m.nrows()).map(|i| evd.S()[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn eigvalsh(m: &Mat<C64>) -> Result<Vec<f64>> {
    let vals = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(vals)
}

/// Column-stacked vectorisation: index i + j*d holds entry (i, j).
pub fn vec_of(m: &Mat<C64>) -> Vec<C64> {
    let d = m.nrows();
    let mut v = vec![ZERO; d * m.ncols()];
    for j in 0..m.ncols() {
        for i in 0..d {
            v[i + j * d] = m[(i, j)];
        }
    }
    v
}

pub fn unvec(v: &[C64], d: usize) -> Mat<C64> {
    assert_eq!(v.len(), d * d);
    Mat::from_fn(d, d, |i, j| v[i + j * d])
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Half the trace norm of the difference of two Hermitian matrices.
pub fn trace_distance(a: &Mat<C64>, b: &Mat<C64>) -> Result<f64> {
    let diff = hermitize(&(a - b));
    Ok(0.5 * eigvalsh(&diff)?.iter().map(|x| x.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_cancellations() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![(1, 0, c(1.0, 0.0)), (0, 1, c(2.0, 1.0)), (1, 0, c(0.5, 0.0)), (0, 0, c(1.0, 0.0)), (0, 0, c(-1.0, 0.0))],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 0), c(1.5, 0.0));
        assert_eq!(m.get(0, 0), ZERO);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 0, c(1.0, 1.0)), (0, 2, c(2.0, 0.0)), (1, 1, c(0.0, -1.0))]);
        let b = CsrMatrix::from_triplets(3, 2, vec![(0, 1, c(3.0, 0.0)), (1, 0, c(1.0, 0.0)), (2, 0, c(0.0, 2.0))]);
        let p = a.matmul(&b).to_dense();
        let q = &a.to_dense() * &b.to_dense();
        assert!(max_abs(&(&p - &q)) < 1e-14);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let mut a = Mat::<C64>::zeros(2, 2);
        let mut b = Mat::<C64>::zeros(2, 2);
        a[(0, 0)] = ONE;
        b[(1, 1)] = ONE;
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
    }
}
