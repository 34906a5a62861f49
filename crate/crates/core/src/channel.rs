//! Dynamical maps in dynamical-matrix form and their canonical
//! operator-sum decomposition.
//!
//! A map on `N×N` density matrices is stored as the Hermitian `N²×N²`
//! matrix `B` with `B[(r·N + r'), (s·N + s')] = Λ_{rr',ss'}`, acting as
//! `ρ'_{rs} = Σ_{r's'} Λ_{rr',ss'} ρ_{r's'}`. Flattening is row-major
//! throughout, so `vec(L)[r·N + r'] = L[r][r']`.

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eig, CMatrix, C64, DEFAULT_TOL};
use crate::random::{random_density_matrix, random_isometry, stream_rng, FixtureRng};

/// Relative eigenvalue cutoff used when decomposing a map.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// An `N×N` Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at `1e-10`.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() || mat.rows() == 0 {
            return Err(Error::InvalidState(format!(
                "shape {:?} is not square",
                mat.shape()
            )));
        }
        let dev = mat.hermiticity_deviation();
        if dev > DEFAULT_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = mat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > DEFAULT_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eig(&mat, DEFAULT_TOL)?.min_value();
        if min < -DEFAULT_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix already known to be a state up to rounding.
    pub(crate) fn from_unchecked(mat: CMatrix) -> Self {
        Self { mat }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(CMatrix::outer(&v, &v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Full-rank random state drawn from the Ginibre ensemble.
    pub fn random(dim: usize, rng: &mut FixtureRng) -> Self {
        Self {
            mat: random_density_matrix(dim, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.mat.matmul(&self.mat).trace().re
    }
}

/// A linear map on `N×N` matrices in dynamical-matrix form.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalMap {
    dim: usize,
    bmat: CMatrix,
}

impl DynamicalMap {
    /// Wraps a dynamical matrix, requiring it to be Hermitian within `1e-10`
    /// (the map then sends Hermitian inputs to Hermitian outputs).
    pub fn new(dim: usize, bmat: CMatrix) -> Result<Self> {
        Self::with_tolerance(dim, bmat, DEFAULT_TOL)
    }

    pub fn with_tolerance(dim: usize, bmat: CMatrix, tol: f64) -> Result<Self> {
        let side = dim * dim;
        if bmat.shape() != (side, side) {
            return Err(Error::DimensionMismatch(format!(
                "dynamical matrix of shape {:?} for dimension {dim}",
                bmat.shape()
            )));
        }
        let deviation = bmat.hermiticity_deviation();
        if deviation.is_nan() || deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { dim, bmat })
    }

    pub fn identity(dim: usize) -> Self {
        map_from_kraus(&[(1.0, CMatrix::identity(dim))], dim).expect("square identity")
    }

    /// The transpose map `ρ ↦ ρᵀ`; trace preserving but not completely positive.
    pub fn transpose(dim: usize) -> Self {
        let side = dim * dim;
        let bmat = CMatrix::from_fn(side, side, |row, col| {
            let (r, rp) = (row / dim, row % dim);
            let (s, sp) = (col / dim, col % dim);
            if r == sp && rp == s {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self { dim, bmat }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bmat(&self) -> &CMatrix {
        &self.bmat
    }

    /// `Λ_{rr',ss'}`.
    pub fn element(&self, r: usize, rp: usize, s: usize, sp: usize) -> C64 {
        self.bmat[(r * self.dim + rp, s * self.dim + sp)]
    }

    /// `T[r'][s'] = Σ_r Λ_{rr',rs'}`, which equals `δ_{r's'}` exactly when
    /// the map preserves trace.
    pub fn trace_contraction(&self) -> CMatrix {
        let n = self.dim;
        CMatrix::from_fn(n, n, |rp, sp| {
            (0..n).map(|r| self.element(r, rp, r, sp)).sum()
        })
    }

    /// Applies the map to an arbitrary `N×N` matrix.
    pub fn apply_to(&self, m: &CMatrix) -> Result<CMatrix> {
        let n = self.dim;
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "map on dimension {n} applied to {:?} matrix",
                m.shape()
            )));
        }
        Ok(CMatrix::from_fn(n, n, |r, s| {
            let mut acc = C64::new(0.0, 0.0);
            for rp in 0..n {
                for sp in 0..n {
                    acc += self.element(r, rp, s, sp) * m[(rp, sp)];
                }
            }
            acc
        }))
    }

    /// Sum of two maps on the same dimension.
    pub fn sum(&self, other: &DynamicalMap) -> Result<DynamicalMap> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(
                "maps of different dimension".into(),
            ));
        }
        Ok(DynamicalMap {
            dim: self.dim,
            bmat: &self.bmat + &other.bmat,
        })
    }
}

/// One eigen-term `λ·L ρ L†` of a canonical decomposition, with `L`
/// normalized in Hilbert–Schmidt norm.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausTerm {
    pub weight: f64,
    pub op: CMatrix,
}

impl KrausTerm {
    /// The operator `√λ·L`; requires a non-negative weight.
    pub fn kraus_operator(&self) -> CMatrix {
        self.op.scale_real(self.weight.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDecomposition {
    dim: usize,
    terms: Vec<KrausTerm>,
}

impl CanonicalDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Terms sorted by descending weight.
    pub fn terms(&self) -> &[KrausTerm] {
        &self.terms
    }

    /// Number of retained eigen-operators, `ν ≤ N²`.
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.terms.last().map(|t| t.weight)
    }

    /// `Σ λ vec(L) vec(L)†`.
    pub fn reconstruct(&self) -> DynamicalMap {
        let pairs: Vec<(f64, CMatrix)> = self
            .terms
            .iter()
            .map(|t| (t.weight, t.op.clone()))
            .collect();
        map_from_kraus(&pairs, self.dim).expect("terms share the decomposition dimension")
    }

    /// `Σ λ L†L`; the identity for trace-preserving maps.
    pub fn effect(&self) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            acc = &acc + &t.op.dagger().matmul(&t.op).scale_real(t.weight);
        }
        acc
    }

    /// `‖Σ λ L†L − I‖_max`.
    pub fn trace_residual(&self) -> f64 {
        self.effect().max_abs_diff(&CMatrix::identity(self.dim))
    }

    /// `Σ λ L ρ L†` evaluated term by term.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch(format!(
                "decomposition on dimension {} applied to {:?} matrix",
                self.dim,
                rho.shape()
            )));
        }
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            let term = t.op.matmul(rho).matmul(&t.op.dagger()).scale_real(t.weight);
            acc = &acc + &term;
        }
        Ok(acc)
    }
}

/// Axiom report for a map. Produced by [`check_properties`].
#[derive(Debug, Clone, PartialEq)]
pub struct MapProperties {
    pub hermiticity_preserving: bool,
    pub trace_preserving: bool,
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
    /// `‖Σ_r Λ_{rr',rs'} − δ_{r's'}‖_max`.
    pub trace_defect: f64,
}

/// `B = Σ λ_α vec(L_α) vec(L_α)†` for weighted operators (not necessarily
/// normalized).
pub fn map_from_kraus(terms: &[(f64, CMatrix)], dim: usize) -> Result<DynamicalMap> {
    let side = dim * dim;
    let mut bmat = CMatrix::zeros(side, side);
    for (weight, op) in terms {
        if op.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "operator of shape {:?} for dimension {dim}",
                op.shape()
            )));
        }
        if !weight.is_finite() {
            return Err(Error::NonFinite);
        }
        if *weight == 0.0 {
            continue;
        }
        let v = op.as_slice();
        bmat = &bmat + &CMatrix::outer(v, v).scale_real(*weight);
    }
    DynamicalMap::new(dim, bmat)
}

/// `ρ'_{rs} = Σ Λ_{rr',ss'} ρ_{r's'}`. The output need not have unit trace.
pub fn apply_map(map: &DynamicalMap, rho: &DensityMatrix) -> Result<CMatrix> {
    map.apply_to(rho.matrix())
}

/// Eigendecomposition of the dynamical matrix. Eigenvalues with
/// `|λ| ≤ trunc_tol·max|λ|` are dropped; each kept eigenvector is reshaped
/// row-major into an eigen-operator.
pub fn canonical_decompose(map: &DynamicalMap, trunc_tol: f64) -> Result<CanonicalDecomposition> {
    let n = map.dim();
    let eig = hermitian_eig(map.bmat(), f64::INFINITY)?;
    let scale = eig.values.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let mut terms = Vec::new();
    for (k, &lam) in eig.values.iter().enumerate() {
        if scale == 0.0 || lam.abs() <= trunc_tol * scale {
            continue;
        }
        let op = CMatrix::unvectorize(&eig.vector(k), n, n)?;
        terms.push(KrausTerm { weight: lam, op });
    }
    Ok(CanonicalDecomposition { dim: n, terms })
}

/// Checks Hermiticity preservation, trace preservation (on components) and
/// complete positivity, reporting rather than failing.
pub fn check_properties(map: &DynamicalMap, tol: f64) -> MapProperties {
    let b = map.bmat();
    let hermiticity_preserving = b.hermiticity_deviation() <= tol;
    let min_eigenvalue = hermitian_eig(&b.hermitian_part(), f64::INFINITY)
        .map(|e| e.min_value())
        .unwrap_or(f64::NAN);
    let trace_defect = map
        .trace_contraction()
        .max_abs_diff(&CMatrix::identity(map.dim()));
    MapProperties {
        hermiticity_preserving,
        trace_preserving: trace_defect <= tol,
        completely_positive: min_eigenvalue >= -tol,
        min_eigenvalue,
        trace_defect,
    }
}

/// `kraus_rank` random Kraus operators with `Σ K†K = I`, sliced from a
/// random isometry `dim → dim·kraus_rank`.
pub fn random_kraus_operators(dim: usize, kraus_rank: usize, rng: &mut FixtureRng) -> Vec<CMatrix> {
    let w = random_isometry(dim * kraus_rank, dim, rng);
    (0..kraus_rank)
        .map(|j| w.row_block(j * dim, (j + 1) * dim))
        .collect()
}

/// Seeded random completely positive trace-preserving map of the given
/// Kraus rank. Bit-for-bit reproducible for a fixed seed.
pub fn random_cptp(dim: usize, kraus_rank: usize, seed: u64) -> Result<DynamicalMap> {
    if dim == 0 || kraus_rank == 0 || kraus_rank > dim * dim {
        return Err(Error::BadRank {
            rank: kraus_rank,
            max: dim * dim,
        });
    }
    let mut rng = stream_rng(seed, 0);
    let ops = random_kraus_operators(dim, kraus_rank, &mut rng);
    let terms: Vec<(f64, CMatrix)> = ops.into_iter().map(|k| (1.0, k)).collect();
    map_from_kraus(&terms, dim)
}

/// Common single-qubit and qudit maps in weighted-Kraus form.
pub mod standard {
    use super::*;

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_real(2, 2, &[0., 1., 1., 0.]).unwrap()
    }

    /// `|k⟩⟨k|` in dimension `dim`.
    pub fn basis_projector(dim: usize, k: usize) -> CMatrix {
        let mut p = CMatrix::zeros(dim, dim);
        p[(k, k)] = C64::new(1.0, 0.0);
        p
    }

    pub fn bit_flip() -> DynamicalMap {
        map_from_kraus(&[(1.0, pauli_x())], 2).unwrap()
    }

    /// Complete dephasing in the computational basis, Kraus `{P_k}`.
    pub fn dephasing(dim: usize) -> DynamicalMap {
        let terms: Vec<(f64, CMatrix)> = (0..dim).map(|k| (1.0, basis_projector(dim, k))).collect();
        map_from_kraus(&terms, dim).unwrap()
    }

    pub fn amplitude_damping_kraus(gamma: f64) -> Vec<CMatrix> {
        let k0 = CMatrix::from_real(2, 2, &[1., 0., 0., (1.0 - gamma).sqrt()]).unwrap();
        let k1 = CMatrix::from_real(2, 2, &[0., gamma.sqrt(), 0., 0.]).unwrap();
        vec![k0, k1]
    }

    pub fn amplitude_damping(gamma: f64) -> DynamicalMap {
        let terms: Vec<(f64, CMatrix)> = amplitude_damping_kraus(gamma)
            .into_iter()
            .map(|k| (1.0, k))
            .collect();
        map_from_kraus(&terms, 2).unwrap()
    }

    /// `ρ ↦ P ρ P` for a single operator.
    pub fn conjugation(op: &CMatrix) -> DynamicalMap {
        map_from_kraus(&[(1.0, op.clone())], op.rows()).unwrap()
    }
}
