//! Unitary dilation of a completely positive trace-preserving map.
//!
//! For a canonical decomposition `Λρ = Σ λ_α L_α ρ L_α†` the isometry
//!
//! ```text
//! W: |r'⟩|0⟩ ↦ Σ_{r,α} √λ_α [L_α]_{rr'} |r⟩|α⟩
//! ```
//!
//! has orthonormal columns exactly when `Σ λ_α L_α†L_α = I`. Completing `W`
//! to a unitary `U` on system ⊗ ancilla (ancilla dimension `ν`, the rank of
//! the decomposition) gives `Tr_B[U(ρ ⊗ |0⟩⟨0|)U†] = Λρ`.

use crate::channel::{
    apply_map, canonical_decompose, CanonicalDecomposition, DensityMatrix, DynamicalMap, KrausTerm,
    DEFAULT_TRUNCATION,
};
use crate::error::{Error, Result};
use crate::matcore::{
    complete_to_unitary, complete_to_unitary_seeded, partial_trace_b, CMatrix,
    CompositeIndexConvention, DEFAULT_TOL,
};
use crate::random::stream_rng;

/// Weights in `[-WEIGHT_FLOOR, 0)` are treated as eigensolver noise and
/// clamped to zero.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// Largest `‖Σ λ L†L − I‖_max` accepted before building an isometry.
pub const TRACE_RESIDUAL_TOL: f64 = 1e-8;

/// How the columns not fixed by the isometry are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completion {
    /// Deterministic Gram–Schmidt over the standard basis.
    #[default]
    Canonical,
    /// Gram–Schmidt over seeded Gaussian vectors.
    Seeded(u64),
}

/// Unitary on system ⊗ ancilla realizing a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationUnitary {
    sys_dim: usize,
    anc_dim: usize,
    u: CMatrix,
    conv: CompositeIndexConvention,
}

impl DilationUnitary {
    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    /// Ancilla dimension `ν`.
    pub fn anc_dim(&self) -> usize {
        self.anc_dim
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.u
    }

    pub fn convention(&self) -> CompositeIndexConvention {
        self.conv
    }

    /// Number of columns prescribed by the isometry (one per system level).
    pub fn iso_cols(&self) -> usize {
        self.sys_dim
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_residual(&self) -> f64 {
        self.u.isometry_deviation()
    }

    /// The columns `(r', 0)` of `U`, i.e. the isometry.
    pub fn isometry(&self) -> CMatrix {
        reference_block(&self.u, self.conv)
    }
}

/// Composite column indices `(r', 0)` for every system level `r'`.
pub(crate) fn reference_columns(conv: CompositeIndexConvention) -> Vec<usize> {
    (0..conv.dim_a).map(|r| conv.index(r, 0)).collect()
}

pub(crate) fn reference_block(u: &CMatrix, conv: CompositeIndexConvention) -> CMatrix {
    u.select_columns(&reference_columns(conv))
}

pub(crate) fn check_weights(terms: &[KrausTerm]) -> Result<()> {
    match terms.iter().find(|t| t.weight < -WEIGHT_FLOOR) {
        Some(t) => Err(Error::NotCompletelyPositive { weight: t.weight }),
        None => Ok(()),
    }
}

/// Writes `√λ_α [L_α]_{rr'}` at row `(r, offset + α)`, column `r'`.
pub(crate) fn fill_isometry(
    w: &mut CMatrix,
    conv: CompositeIndexConvention,
    offset: usize,
    terms: &[KrausTerm],
) {
    let n = conv.dim_a;
    for (alpha, term) in terms.iter().enumerate() {
        let amp = term.weight.max(0.0).sqrt();
        for r in 0..n {
            for rp in 0..n {
                w[(conv.index(r, offset + alpha), rp)] = term.op[(r, rp)] * amp;
            }
        }
    }
}

/// Completes an isometry whose columns belong at `(r', 0)` into a full
/// unitary; the free columns `(r', α≠0)` take the completion's extra
/// vectors in increasing composite order.
pub(crate) fn embed_isometry(
    iso: &CMatrix,
    conv: CompositeIndexConvention,
    completion: Completion,
) -> Result<CMatrix> {
    let full = match completion {
        Completion::Canonical => complete_to_unitary(iso, DEFAULT_TOL)?,
        Completion::Seeded(seed) => complete_to_unitary_seeded(iso, DEFAULT_TOL, seed)?,
    };
    let d = conv.total();
    let mut u = CMatrix::zeros(d, d);
    let mut extra = conv.dim_a..d;
    for col in 0..d {
        let (r, alpha) = conv.split(col);
        let src = if alpha == 0 {
            r
        } else {
            extra.next().expect("completion has d columns")
        };
        u.set_column(col, &full.column(src));
    }
    Ok(u)
}

/// `u·(ρ ⊗ |0⟩⟨0|)·u†`. Only the reference columns of `u` meet the product
/// state, so this evaluates `W ρ W†` with `W` those columns.
pub(crate) fn evolve_joint(
    u: &CMatrix,
    conv: CompositeIndexConvention,
    rho: &DensityMatrix,
) -> Result<CMatrix> {
    if rho.dim() != conv.dim_a {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for system dimension {}",
            rho.dim(),
            conv.dim_a
        )));
    }
    let w = reference_block(u, conv);
    Ok(w.matmul(rho.matrix()).matmul(&w.dagger()))
}

/// The `(N·ν)×N` isometry for a CP, trace-preserving decomposition.
pub fn build_dilation_isometry(dec: &CanonicalDecomposition) -> Result<CMatrix> {
    check_weights(dec.terms())?;
    let residual = dec.trace_residual();
    if residual.is_nan() || residual > TRACE_RESIDUAL_TOL {
        return Err(Error::NotTracePreserving { residual });
    }
    let conv = CompositeIndexConvention::new(dec.dim(), dec.rank());
    let mut w = CMatrix::zeros(conv.total(), dec.dim());
    fill_isometry(&mut w, conv, 0, dec.terms());
    Ok(w)
}

pub fn build_dilation_unitary(dec: &CanonicalDecomposition) -> Result<DilationUnitary> {
    build_dilation_unitary_with(dec, Completion::Canonical)
}

pub fn build_dilation_unitary_with(
    dec: &CanonicalDecomposition,
    completion: Completion,
) -> Result<DilationUnitary> {
    let iso = build_dilation_isometry(dec)?;
    let conv = CompositeIndexConvention::new(dec.dim(), dec.rank());
    debug_assert!(conv.dim_b <= conv.dim_a * conv.dim_a);
    let u = embed_isometry(&iso, conv, completion)?;
    Ok(DilationUnitary {
        sys_dim: conv.dim_a,
        anc_dim: conv.dim_b,
        u,
        conv,
    })
}

/// Evolves `ρ ⊗ |0⟩⟨0|` and traces out the ancilla. Returns
/// `(joint, reduced)`.
pub fn simulate_via_dilation(
    du: &DilationUnitary,
    rho: &DensityMatrix,
) -> Result<(CMatrix, CMatrix)> {
    let joint = evolve_joint(&du.u, du.conv, rho)?;
    let reduced = partial_trace_b(&joint, du.conv)?;
    Ok((joint, reduced))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationReport {
    pub trials: usize,
    pub anc_dim: usize,
    pub unitarity_residual: f64,
    /// Largest `‖reduced − Λρ‖_max` over all trials.
    pub max_error: f64,
}

/// Compares the dilation route with direct application of `map` on
/// `trials` random states. Trial `t` draws its state from stream `t` of
/// `seed`.
pub fn verify_dilation(map: &DynamicalMap, trials: usize, seed: u64) -> Result<DilationReport> {
    let dec = canonical_decompose(map, DEFAULT_TRUNCATION)?;
    let du = build_dilation_unitary(&dec)?;
    let mut max_error = 0.0f64;
    for t in 0..trials {
        let mut rng = stream_rng(seed, t as u64);
        let rho = DensityMatrix::random(map.dim(), &mut rng);
        let (_, reduced) = simulate_via_dilation(&du, &rho)?;
        let direct = apply_map(map, &rho)?;
        max_error = max_error.max(reduced.max_abs_diff(&direct));
    }
    Ok(DilationReport {
        trials,
        anc_dim: du.anc_dim,
        unitarity_residual: du.unitarity_residual(),
        max_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_cptp, standard::*};
    use crate::matcore::{kron, C64};

    fn dec(map: &DynamicalMap) -> CanonicalDecomposition {
        canonical_decompose(map, DEFAULT_TRUNCATION).unwrap()
    }

    #[test]
    fn identity_channel_needs_no_ancilla() {
        let d = dec(&DynamicalMap::identity(2));
        let w = build_dilation_isometry(&d).unwrap();
        assert!(w.max_abs_diff(&CMatrix::identity(2)) < 1e-14);
        let du = build_dilation_unitary(&d).unwrap();
        assert_eq!(du.anc_dim(), 1);
        assert!(du.unitary().max_abs_diff(&CMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn dephasing_is_the_copy_isometry() {
        let d = dec(&dephasing(2));
        let w = build_dilation_isometry(&d).unwrap();
        // |r'⟩|0⟩ ↦ |r'⟩|r'⟩: rows (0,0)=0 and (1,1)=3.
        let mut expected = CMatrix::zeros(4, 2);
        expected[(0, 0)] = C64::new(1.0, 0.0);
        expected[(3, 1)] = C64::new(1.0, 0.0);
        assert!(w.max_abs_diff(&expected) < 1e-14, "{w:?}");

        let du = build_dilation_unitary(&d).unwrap();
        assert!(du.unitarity_residual() < 1e-10);
        assert!(du.isometry().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn transpose_map_is_rejected() {
        let d = dec(&DynamicalMap::transpose(2));
        assert!(matches!(
            build_dilation_isometry(&d),
            Err(Error::NotCompletelyPositive { .. })
        ));
    }

    #[test]
    fn non_trace_preserving_map_is_rejected() {
        let d = dec(&conjugation(&basis_projector(2, 0)));
        assert!(matches!(
            build_dilation_isometry(&d),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn dephasing_kills_coherences() {
        let du = build_dilation_unitary(&dec(&dephasing(2))).unwrap();
        let rho =
            DensityMatrix::new(CMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap()).unwrap();
        let (joint, reduced) = simulate_via_dilation(&du, &rho).unwrap();
        assert!(reduced.max_abs_diff(&CMatrix::diag_real(&[0.5, 0.5])) < 1e-15);
        assert!((joint.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn amplitude_damping_matches_direct_route() {
        let map = amplitude_damping(0.5);
        let du = build_dilation_unitary(&dec(&map)).unwrap();
        let rho = DensityMatrix::new(CMatrix::diag_real(&[0.0, 1.0])).unwrap();
        let (_, reduced) = simulate_via_dilation(&du, &rho).unwrap();
        assert!(reduced.max_abs_diff(&CMatrix::diag_real(&[0.5, 0.5])) < 1e-14);
        assert!(reduced.max_abs_diff(&apply_map(&map, &rho).unwrap()) < 1e-14);
    }

    #[test]
    fn reference_column_shortcut_equals_full_product() {
        let map = random_cptp(3, 4, 17).unwrap();
        let du = build_dilation_unitary(&dec(&map)).unwrap();
        let rho = DensityMatrix::random(3, &mut stream_rng(17, 1));
        let mut anc0 = CMatrix::zeros(du.anc_dim(), du.anc_dim());
        anc0[(0, 0)] = C64::new(1.0, 0.0);
        let full = du
            .unitary()
            .matmul(&kron(rho.matrix(), &anc0))
            .matmul(&du.unitary().dagger());
        let (joint, _) = simulate_via_dilation(&du, &rho).unwrap();
        assert!(joint.max_abs_diff(&full) < 1e-14);
    }

    #[test]
    fn wrong_state_dimension() {
        let du = build_dilation_unitary(&dec(&dephasing(2))).unwrap();
        assert!(matches!(
            simulate_via_dilation(&du, &DensityMatrix::maximally_mixed(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn verify_reports() {
        let r = verify_dilation(&DynamicalMap::identity(3), 5, 1).unwrap();
        assert!(r.max_error <= 1e-12);
        let r = verify_dilation(&dephasing(2), 10, 2).unwrap();
        assert!(r.max_error <= 1e-10);
        assert_eq!(r, verify_dilation(&dephasing(2), 10, 2).unwrap());
    }
}
