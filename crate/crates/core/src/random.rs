//! Seeded random fixtures: Gaussian matrices, Haar-like isometries and
//! random density matrices. Every generator takes an explicit RNG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{CMatrix, C64};

pub type FixtureRng = ChaCha8Rng;

/// RNG for stream `stream` of `seed`; different streams are independent.
pub fn stream_rng(seed: u64, stream: u64) -> FixtureRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Random `rows×cols` isometry (`cols ≤ rows`) from orthonormalizing
/// Gaussian columns.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    loop {
        let g = gaussian_matrix(rows, cols, rng);
        if let Some(q) = orthonormalize_columns(&g) {
            return q;
        }
    }
}

pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    random_isometry(n, n, rng)
}

/// Full-rank random density matrix `GG†/Tr(GG†)`.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    let m = g.matmul(&g.dagger());
    let tr = m.trace().re;
    m.scale_real(1.0 / tr).hermitian_part()
}

/// Two-pass modified Gram–Schmidt on the columns; `None` if any column
/// is numerically dependent on the previous ones.
fn orthonormalize_columns(m: &CMatrix) -> Option<CMatrix> {
    let mut out = CMatrix::zeros(m.rows(), m.cols());
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m.cols());
    for j in 0..m.cols() {
        let mut v = m.column(j);
        for _ in 0..2 {
            for q in &basis {
                let overlap: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= overlap * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        out.set_column(j, &v);
        basis.push(v);
    }
    Some(out)
}
