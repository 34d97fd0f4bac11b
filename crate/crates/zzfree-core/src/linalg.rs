//! Dense and Krylov linear algebra used by the solvers and propagators.
//!
//! Hamiltonians in this crate are real symmetric whenever no drive phase is
//! involved, so the dense eigensolver wraps `nalgebra::SymmetricEigen`.
//! Time propagation uses a Hermitian Lanczos approximation of
//! `exp(-i dt H) v` on sparse operators, which stays cheap even at the
//! default carrier-resolving step sizes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub struct EighResult {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DMatrix<f64>,
}

/// Diagonalize a real symmetric matrix. Fails on non-finite input.
pub fn eigh(mat: &DMatrix<f64>) -> Result<EighResult> {
    if mat.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure("non-finite entry in matrix".into()));
    }
    let n = mat.nrows();
    let eig = mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok(EighResult { values, vectors })
}

/// Max |A - A^T| over all entries, as a hermiticity check for real matrices.
pub fn symmetry_defect(mat: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..mat.nrows() {
        for j in (i + 1)..mat.ncols() {
            worst = worst.max((mat[(i, j)] - mat[(j, i)]).abs());
        }
    }
    worst
}

/// Frobenius-like scale of a matrix, used to normalize defect checks.
pub fn max_abs(mat: &DMatrix<f64>) -> f64 {
    mat.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// exp(A) for a small dense real matrix by scaling-and-squaring with a
/// Taylor core. Adequate for the displacement generators used here
/// (norms of order 1, dimensions of order 10).
pub fn expm_real(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = a.iter().fold(0.0f64, |m, x| m.max(x.abs())) * n as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let a_s = a * scale;
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    for k in 1..=20 {
        term = (&term * &a_s) / k as f64;
        sum += &term;
        if term.iter().fold(0.0f64, |m, x| m.max(x.abs())) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Sparse complex matrix in CSR form.
#[derive(Debug, Clone)]
pub struct CsMat {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<C64>,
}

impl CsMat {
    /// Build from triplets, summing duplicates and dropping entries below `drop_tol`.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, C64)], drop_tol: f64) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut v = row[k].1;
                let mut k2 = k + 1;
                while k2 < row.len() && row[k2].0 == col {
                    v += row[k2].1;
                    k2 += 1;
                }
                if v.norm() > drop_tol {
                    col_idx.push(col);
                    vals.push(v);
                }
                k = k2;
            }
            row_ptr.push(col_idx.len());
        }
        CsMat { dim, row_ptr, col_idx, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y += scale * A x
    pub fn mul_add(&self, x: &[C64], y: &mut [C64], scale: C64) {
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] += scale * acc;
        }
    }

    /// Max |A - A^dagger| entry, for hermiticity assertions.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut dense: std::collections::HashMap<(usize, usize), C64> = std::collections::HashMap::new();
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                dense.insert((i, self.col_idx[k]), self.vals[k]);
            }
        }
        let mut worst = 0.0f64;
        for (&(i, j), &v) in dense.iter() {
            let vt = dense.get(&(j, i)).copied().unwrap_or(C64::new(0.0, 0.0));
            worst = worst.max((v - vt.conj()).norm());
        }
        worst
    }

    pub fn scaled(&self, s: C64) -> CsMat {
        let mut out = self.clone();
        for v in out.vals.iter_mut() {
            *v *= s;
        }
        out
    }
}

pub fn zeros(dim: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); dim]
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Accumulating operator for Lanczos: applies a weighted sum of sparse terms.
pub trait LinOp {
    fn dim(&self) -> usize;
    /// y = H x
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

pub struct WeightedSum<'a> {
    pub dim: usize,
    pub terms: Vec<(C64, &'a CsMat)>,
    /// Optional real diagonal added on top of the sparse terms.
    pub diag: Option<&'a [f64]>,
}

impl LinOp for WeightedSum<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.fill(C64::new(0.0, 0.0));
        if let Some(d) = self.diag {
            for i in 0..self.dim {
                y[i] = C64::new(d[i], 0.0) * x[i];
            }
        }
        for (w, m) in &self.terms {
            m.mul_add(x, y, *w);
        }
    }
}

/// Largest Krylov dimension tried before giving up.
const LANCZOS_MAX: usize = 64;

/// v <- exp(-i * tau * H) v for Hermitian H, via Lanczos.
///
/// `tau` is real (units consistent with H). Converges to `tol` on the
/// residual estimate; returns the Krylov dimension used.
pub fn expmv_lanczos<H: LinOp>(h: &H, tau: f64, v: &mut [C64], tol: f64) -> Result<usize> {
    let n = h.dim();
    let beta0 = norm(v);
    if beta0 == 0.0 {
        return Ok(0);
    }
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut q = v.to_vec();
    for z in q.iter_mut() {
        *z /= beta0;
    }
    basis.push(q.clone());
    let mut w = zeros(n);
    let mut m = 0;
    loop {
        m += 1;
        h.apply(&basis[m - 1], &mut w);
        let alpha = dot(&basis[m - 1], &w).re;
        alphas.push(alpha);
        axpy(C64::new(-alpha, 0.0), &basis[m - 1].clone(), &mut w);
        if m > 1 {
            let b = betas[m - 2];
            axpy(C64::new(-b, 0.0), &basis[m - 2].clone(), &mut w);
        }
        // full reorthogonalization: cheap at these Krylov sizes, avoids ghost modes
        for b in basis.iter() {
            let c = dot(b, &w);
            axpy(-c, b, &mut w);
        }
        let beta = norm(&w);
        // evaluate exp on the current tridiagonal and check the residual estimate
        let (coeffs, err) = tridiag_exp_coeffs(&alphas, &betas, tau, beta);
        if err < tol * beta0.max(1.0) || beta < 1e-14 || m >= LANCZOS_MAX {
            if m >= LANCZOS_MAX && err >= tol * beta0.max(1.0) && beta >= 1e-14 {
                return Err(Error::NumericalFailure(format!(
                    "lanczos stalled at m={m}, err={err:.2e}"
                )));
            }
            for z in v.iter_mut() {
                *z = C64::new(0.0, 0.0);
            }
            for (k, b) in basis.iter().enumerate() {
                axpy(coeffs[k] * beta0, b, v);
            }
            return Ok(m);
        }
        betas.push(beta);
        let mut next = w.clone();
        for z in next.iter_mut() {
            *z /= beta;
        }
        basis.push(next);
    }
}

/// First column of exp(-i tau T) for the Lanczos tridiagonal T, plus an
/// error estimate `|tau| * beta_next * |last entry|`.
fn tridiag_exp_coeffs(alphas: &[f64], betas: &[f64], tau: f64, beta_next: f64) -> (Vec<C64>, f64) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut coeffs = vec![C64::new(0.0, 0.0); m];
    for k in 0..m {
        let lam = eig.eigenvalues[k];
        let phase = C64::from_polar(1.0, -tau * lam);
        let w0 = eig.eigenvectors[(0, k)];
        for i in 0..m {
            coeffs[i] += phase * w0 * eig.eigenvectors[(i, k)];
        }
    }
    let err = (tau.abs() * beta_next * coeffs[m - 1].norm()).min(1.0);
    (coeffs, err)
}

/// Dense unitary step propagator exp(-i tau H) for a sparse Hermitian H.
/// Used when the generator is constant over the whole propagation window.
pub fn dense_step_propagator(terms: &[(C64, &CsMat)], diag: Option<&[f64]>, dim: usize, tau: f64) -> DMatrix<C64> {
    let op = WeightedSum { dim, terms: terms.to_vec(), diag };
    let mut cols: Vec<DVector<C64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut e = zeros(dim);
        e[j] = C64::new(1.0, 0.0);
        // tolerance well below per-step requirements; reused many times
        expmv_lanczos(&op, tau, &mut e, 1e-13).expect("propagator column");
        cols.push(DVector::from_vec(e));
    }
    DMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigh_matches_hand_2x2() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r = eigh(&m).unwrap();
        assert_relative_eq!(r.values[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(r.values[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn expm_real_rotation() {
        // exp of a 2x2 rotation generator
        let g = DMatrix::from_row_slice(2, 2, &[0.0, -1.3, 1.3, 0.0]);
        let r = expm_real(&g);
        assert_relative_eq!(r[(0, 0)], 1.3f64.cos(), epsilon = 1e-12);
        assert_relative_eq!(r[(1, 0)], 1.3f64.sin(), epsilon = 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_exponential() {
        // small random Hermitian built from a fixed pattern
        let dim = 12;
        let mut tri = Vec::new();
        for i in 0..dim {
            tri.push((i, i, C64::new(0.3 * i as f64, 0.0)));
            if i + 1 < dim {
                let v = C64::new(0.11 * (i as f64 + 1.0).sin(), 0.07 * (i as f64).cos());
                tri.push((i, i + 1, v));
                tri.push((i + 1, i, v.conj()));
            }
        }
        let h = CsMat::from_triplets(dim, &tri, 0.0);
        assert!(h.hermiticity_defect() < 1e-15);
        let mut v = zeros(dim);
        v[0] = C64::new(1.0, 0.0);
        let op = WeightedSum { dim, terms: vec![(C64::new(1.0, 0.0), &h)], diag: None };
        expmv_lanczos(&op, 0.7, &mut v, 1e-12).unwrap();
        // independent dense reference: scaled Taylor series of exp(-i tau H)
        let mut dense = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..dim {
            for k in h.row_ptr[i]..h.row_ptr[i + 1] {
                dense[(i, h.col_idx[k])] = h.vals[k];
            }
        }
        let gen = dense * C64::new(0.0, -0.7 / 64.0);
        let mut term = DMatrix::<C64>::identity(dim, dim);
        let mut u = DMatrix::<C64>::identity(dim, dim);
        for k in 1..=24 {
            term = &term * &gen / C64::new(k as f64, 0.0);
            u += &term;
        }
        for _ in 0..6 {
            u = &u * &u;
        }
        let mut e = zeros(dim);
        e[0] = C64::new(1.0, 0.0);
        let reference = &u * DVector::from_vec(e);
        for i in 0..dim {
            assert!((v[i] - reference[i]).norm() < 1e-10);
        }
        assert_relative_eq!(norm(&v), 1.0, epsilon = 1e-10);
    }
}
