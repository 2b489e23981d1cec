//! Sparse Lindblad superoperators on column-stacked density matrices (vec index i + j*d).

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, C64, ZERO};

#[derive(Debug, Clone)]
pub struct SuperoperatorMatrix {
    pub dim: usize,
    pub elements: CsrMatrix,
}

impl SuperoperatorMatrix {
    pub fn apply(&self, rho: &Mat<C64>) -> Mat<C64> {
        let v = crate::linalg::vec_of(rho);
        let mut out = vec![ZERO; v.len()];
        self.elements.matvec(&v, &mut out);
        crate::linalg::unvec(&out, self.dim)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        self.elements.to_dense()
    }

    pub fn add(&self, other: &SuperoperatorMatrix) -> SuperoperatorMatrix {
        SuperoperatorMatrix { dim: self.dim, elements: self.elements.add(&other.elements) }
    }
}

fn check_square(op: &CsrMatrix, d: usize) -> Result<()> {
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.nrows().max(op.ncols()) });
    }
    Ok(())
}

/// Triplets of I (x) A, i.e. rho -> A rho.
fn left(a: &CsrMatrix, d: usize, scale: C64, t: &mut Vec<(usize, usize, C64)>) {
    for (i, k, v) in a.triplets() {
        for j in 0..d {
            t.push((i + j * d, k + j * d, scale * v));
        }
    }
}

/// Triplets of B^T (x) I, i.e. rho -> rho B.
fn right(b: &CsrMatrix, d: usize, scale: C64, t: &mut Vec<(usize, usize, C64)>) {
    for (k, j, v) in b.triplets() {
        for i in 0..d {
            t.push((i + j * d, i + k * d, scale * v));
        }
    }
}

/// -i [H, .]
pub fn commutator_superoperator(h: &CsrMatrix) -> Result<SuperoperatorMatrix> {
    let d = h.nrows();
    check_square(h, d)?;
    let mut t = Vec::with_capacity(2 * h.nnz() * d);
    left(h, d, C64::new(0.0, -1.0), &mut t);
    right(h, d, C64::new(0.0, 1.0), &mut t);
    Ok(SuperoperatorMatrix { dim: d, elements: CsrMatrix::from_triplets(d * d, d * d, t) })
}

/// Sum of dissipators D[C] rho = C rho C^+ - {C^+ C, rho}/2.
pub fn dissipator_superoperator(d: usize, collapses: &[CsrMatrix]) -> Result<SuperoperatorMatrix> {
    let mut t = Vec::new();
    for c in collapses {
        check_square(c, d)?;
        let ctc = c.adjoint().matmul(c);
        left(&ctc, d, C64::new(-0.5, 0.0), &mut t);
        right(&ctc, d, C64::new(-0.5, 0.0), &mut t);
        let entries: Vec<_> = c.triplets().collect();
        for &(i, k, a) in &entries {
            for &(j, l, b) in &entries {
                t.push((i + j * d, k + l * d, a * b.conj()));
            }
        }
    }
    Ok(SuperoperatorMatrix { dim: d, elements: CsrMatrix::from_triplets(d * d, d * d, t) })
}

/// L = -i(I (x) H - H^T (x) I) + sum_n [conj(C_n) (x) C_n - I (x) C_n^+C_n / 2 - (C_n^+C_n)^T (x) I / 2]
pub fn build_liouvillian(h: &CsrMatrix, collapses: &[CsrMatrix]) -> Result<SuperoperatorMatrix> {
    let d = h.nrows();
    Ok(commutator_superoperator(h)?.add(&dissipator_superoperator(d, collapses)?))
}

/// Reference implementation in operator form: -i[H, rho] + sum D[C] rho.
pub fn lindblad_rhs_direct(h: &Mat<C64>, collapses: &[Mat<C64>], rho: &Mat<C64>) -> Mat<C64> {
    let mi = C64::new(0.0, -1.0);
    let mut out = (h * rho - rho * h) * faer::Scale(mi);
    for c in collapses {
        let cd = crate::linalg::dagger(c);
        let ctc = &cd * c;
        out = out + c * rho * &cd - (&ctc * rho + rho * &ctc) * faer::Scale(C64::new(0.5, 0.0));
    }
    out
}

/// True if L commutes with the superoperator rho -> P rho P^+ of a signed permutation.
pub fn commutes_with(l: &SuperoperatorMatrix, sym: &crate::hilbert::SignedPermutation, tol: f64) -> bool {
    let d = l.dim;
    let map = |p: usize| -> (usize, f64) {
        let (i, j) = (p % d, p / d);
        (sym.perm[i] + sym.perm[j] * d, sym.signs[i] * sym.signs[j])
    };
    for (r, c, v) in l.elements.triplets() {
        let (pr, sr) = map(r);
        let (pc, sc) = map(c);
        if (l.elements.get(pr, pc) * (sr * sc) - v).norm() > tol {
            return false;
        }
    }
    true
}
