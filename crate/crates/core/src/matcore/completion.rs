use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::random::gaussian_vector;

/// Candidates whose residual after orthogonalization is at or below this
/// norm are skipped.
const ACCEPT_RESIDUAL: f64 = 1e-8;

/// Extends a `D×k` matrix with orthonormal columns to a `D×D` unitary.
///
/// The first `k` columns are copied verbatim. The rest come from the
/// standard basis `e₀, e₁, …` in order: each candidate is orthogonalized
/// against every accepted column with two passes of modified Gram–Schmidt
/// and kept when its residual norm exceeds `1e-8`.
pub fn complete_to_unitary(columns: &CMatrix, tol: f64) -> Result<CMatrix> {
    let d = columns.rows();
    let mut basis = (0..d).map(|i| {
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[i] = C64::new(1.0, 0.0);
        e
    });
    complete_with(columns, tol, || basis.next())
}

/// Like [`complete_to_unitary`] but draws candidates from complex Gaussian
/// vectors seeded by `seed`. Gives a different, equally valid completion.
pub fn complete_to_unitary_seeded(columns: &CMatrix, tol: f64, seed: u64) -> Result<CMatrix> {
    let d = columns.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Gaussian candidates are independent almost surely; the cap only
    // guards against a pathological generator.
    let mut budget = 4 * d + 16;
    complete_with(columns, tol, || {
        if budget == 0 {
            return None;
        }
        budget -= 1;
        Some(gaussian_vector(d, &mut rng))
    })
}

fn complete_with(
    columns: &CMatrix,
    tol: f64,
    mut next_candidate: impl FnMut() -> Option<Vec<C64>>,
) -> Result<CMatrix> {
    let (d, k) = columns.shape();
    if k > d {
        return Err(Error::DimensionMismatch(format!(
            "{k} columns do not fit in dimension {d}"
        )));
    }
    let deviation = columns.isometry_deviation();
    if deviation.is_nan() || deviation > tol {
        return Err(Error::NotIsometry { deviation });
    }

    let mut accepted: Vec<Vec<C64>> = (0..k).map(|j| columns.column(j)).collect();
    while accepted.len() < d {
        let Some(mut v) = next_candidate() else {
            return Err(Error::RankDeficient {
                found: accepted.len(),
                needed: d,
            });
        };
        for _pass in 0..2 {
            for q in &accepted {
                let overlap: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= overlap * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > ACCEPT_RESIDUAL {
            v.iter_mut().for_each(|z| *z /= norm);
            accepted.push(v);
        }
    }

    let mut u = CMatrix::zeros(d, d);
    for (j, col) in accepted.iter().enumerate() {
        u.set_column(j, col);
    }
    // Copy the caller's columns bit-for-bit.
    for j in 0..k {
        u.set_column(j, &columns.column(j));
    }
    Ok(u)
}
