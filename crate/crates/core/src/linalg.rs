//! Dense linear-algebra helpers shared by the spectral and fitting code.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

/// Hermitian eigendecomposition with eigenvalues in ascending order.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `V diag(values) V†`.
pub(crate) fn from_eigen(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let col = vectors.column(k);
        out += (&col * col.adjoint()) * C64::new(v, 0.0);
    }
    out
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub(crate) fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let (_, u) = Schur::new(m.clone()).unpack();
    (0..u.nrows()).map(|i| u[(i, i)]).collect()
}

/// Right singular vectors of `m` for its `count` smallest singular values,
/// together with all singular values in descending order.
pub(crate) fn smallest_singular_vectors(m: &CMatrix, count: usize) -> (CMatrix, Vec<f64>) {
    let n = m.ncols();
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut basis = CMatrix::zeros(n, count);
    for (c, &idx) in order[n - count..].iter().enumerate() {
        for r in 0..n {
            basis[(r, c)] = v_t[(idx, r)].conj();
        }
    }
    (basis, sorted)
}

pub(crate) fn condition_number(m: &CMatrix) -> f64 {
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Diagonalization `A = V diag(values) V⁻¹` of a general complex matrix.
#[derive(Debug, Clone)]
pub(crate) struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: CMatrix,
    pub inverse: CMatrix,
    pub condition: f64,
    pub residual: f64,
}

impl EigenDecomposition {
    /// Builds eigenvectors from the Schur form by back substitution. Returns
    /// `None` when the eigenvector matrix is not invertible.
    pub fn new(a: &CMatrix) -> Option<Self> {
        let n = a.nrows();
        let (q, u) = Schur::new(a.clone()).unpack();
        let scale = u.norm().max(f64::MIN_POSITIVE);
        let small = 1e-14 * scale;
        let mut w = CMatrix::zeros(n, n);
        for j in 0..n {
            let lambda = u[(j, j)];
            w[(j, j)] = C64::new(1.0, 0.0);
            for i in (0..j).rev() {
                let mut num = C64::new(0.0, 0.0);
                for k in i + 1..=j {
                    num -= u[(i, k)] * w[(k, j)];
                }
                let d = u[(i, i)] - lambda;
                w[(i, j)] = if d.norm() >= small {
                    num / d
                } else if num.norm() <= 1e-10 * scale {
                    // repeated eigenvalue with decoupled Schur block
                    C64::new(0.0, 0.0)
                } else {
                    num / small
                };
            }
        }
        let mut vectors = &q * &w;
        for mut col in vectors.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= C64::new(norm, 0.0);
            }
        }
        let inverse = vectors.clone().try_inverse()?;
        let values: Vec<C64> = (0..n).map(|i| u[(i, i)]).collect();
        let d = CMatrix::from_diagonal(&DVector::from_vec(values.clone()));
        let residual = (a * &vectors - &vectors * d).norm() / scale;
        let condition = condition_number(&vectors);
        Some(Self {
            values,
            vectors,
            inverse,
            condition,
            residual,
        })
    }

    /// `V diag(f(values)) V⁻¹`.
    pub fn apply(&self, f: impl Fn(C64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[k]);
        }
        scaled * &self.inverse
    }
}

/// Column-stacked vectorization.
pub(crate) fn vectorize(m: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub(crate) fn unvectorize(v: &[C64], n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v)
}

/// Real coordinates `(Re m, Im m)` of a complex matrix.
pub(crate) fn real_coordinates(m: &CMatrix) -> DVector<f64> {
    let len = m.len();
    DVector::from_fn(2 * len, |i, _| {
        if i < len {
            m.as_slice()[i].re
        } else {
            m.as_slice()[i - len].im
        }
    })
}

/// Greedy rank-revealing orthogonalization over real vectors: at every step
/// the candidate with the largest relative residual is accepted, until all
/// remaining residuals fall below `tol`. Residuals are measured relative to
/// `max(‖candidate‖, scales[i])`, so a candidate that is a small remnant of a
/// larger operator is judged against the size of that operator.
pub(crate) fn greedy_independent(
    seed: &[DVector<f64>],
    candidates: &[DVector<f64>],
    scales: &[f64],
    tol: f64,
) -> Vec<usize> {
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    let orthonormalize = |ortho: &[DVector<f64>], v: &DVector<f64>| {
        let mut r = v.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in ortho {
                let c = q.dot(&r);
                r -= q * c;
            }
        }
        r
    };
    for s in seed {
        let r = orthonormalize(&ortho, s);
        let norm = r.norm();
        if norm > tol * s.norm() {
            ortho.push(r / norm);
        }
    }
    let mut chosen = Vec::new();
    let mut remaining: Vec<usize> = (0..candidates.len()).collect();
    loop {
        let mut best: Option<(usize, f64, DVector<f64>)> = None;
        for (pos, &idx) in remaining.iter().enumerate() {
            let c = &candidates[idx];
            let cn = c.norm().max(scales.get(idx).copied().unwrap_or(0.0));
            if cn == 0.0 {
                continue;
            }
            let r = orthonormalize(&ortho, c);
            let rel = r.norm() / cn;
            if best.as_ref().map_or(true, |b| rel > b.1 + 1e-12) {
                best = Some((pos, rel, r));
            }
        }
        match best {
            Some((pos, rel, r)) if rel > tol => {
                let idx = remaining.remove(pos);
                let norm = r.norm();
                ortho.push(r / norm);
                chosen.push(idx);
            }
            _ => break,
        }
    }
    chosen
}

/// Least-squares residual of `target` against the span of `basis` (real coordinates).
pub(crate) fn span_residual(basis: &[DVector<f64>], target: &DVector<f64>) -> f64 {
    if basis.is_empty() {
        return target.norm();
    }
    let rows = target.len();
    let a = DMatrix::from_fn(rows, basis.len(), |r, c| basis[c][r]);
    let svd = SVD::new(a, true, true);
    match svd.solve(target, 1e-12) {
        Ok(x) => {
            let fitted = DMatrix::from_fn(rows, basis.len(), |r, c| basis[c][r]) * x;
            (target - fitted).norm()
        }
        Err(_) => target.norm(),
    }
}
