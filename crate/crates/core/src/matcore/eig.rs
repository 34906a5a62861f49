use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};

use super::matrix::{CMatrix, C64};
use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V·diag(λ)·V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let lam: Vec<C64> = self.values.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.vectors
            .matmul(&CMatrix::diag(&lam))
            .matmul(&self.vectors.dagger())
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Output is canonicalized so that equal inputs give equal outputs: every
/// eigenvector has its largest-magnitude component rotated to be real and
/// positive, eigenvalues are sorted descending, and eigenvectors inside a
/// (numerically) degenerate cluster are ordered lexicographically by their
/// components, largest first.
pub fn hermitian_eig(h: &CMatrix, tol: f64) -> Result<Eigen> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of {:?} matrix",
            h.shape()
        )));
    }
    let deviation = h.hermiticity_deviation();
    if deviation.is_nan() || deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    let n = h.rows();
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let herm = h.hermitian_part();
    let dm = DMatrix::from_row_slice(n, n, herm.as_slice());
    let se = SymmetricEigen::new(dm);

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<C64> = se.eigenvectors.column(k).iter().copied().collect();
            fix_phase(&mut v);
            (se.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    // Reorder inside clusters of nearly equal eigenvalues.
    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let cluster_tol = 1e-10 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (pairs[end - 1].0 - pairs[end].0) <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lexicographic_desc(&a.1, &b.1));
        }
        start = end;
    }

    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, (lam, v)) in pairs.into_iter().enumerate() {
        values.push(lam);
        vectors.set_column(k, &v);
    }
    Ok(Eigen { values, vectors })
}

fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, z) in v.iter().enumerate() {
        // Earliest index wins on near-ties so the choice is stable.
        if z.norm() > best_norm * (1.0 + 1e-12) {
            best = i;
            best_norm = z.norm();
        }
    }
    if best_norm <= 0.0 {
        return;
    }
    let phase = v[best].conj() / best_norm;
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[best] = C64::new(v[best].re, 0.0);
}

fn lexicographic_desc(a: &[C64], b: &[C64]) -> Ordering {
    const EPS: f64 = 1e-12;
    for (x, y) in a.iter().zip(b) {
        if (x.re - y.re).abs() > EPS {
            return y.re.partial_cmp(&x.re).unwrap_or(Ordering::Equal);
        }
        if (x.im - y.im).abs() > EPS {
            return y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues below `tol` are clamped to zero; anything below `-tol` is
/// rejected as [`Error::NotPsd`].
pub fn psd_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(m, tol)?;
    let min = eig.min_value();
    if min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let roots: Vec<C64> = eig
        .values
        .iter()
        .map(|&x| C64::new(if x < tol { 0.0 } else { x.sqrt() }, 0.0))
        .collect();
    let s = eig
        .vectors
        .matmul(&CMatrix::diag(&roots))
        .matmul(&eig.vectors.dagger());
    Ok(s.hermitian_part())
}
