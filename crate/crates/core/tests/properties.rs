use dilation_core::channel::{random_kraus_operators, DEFAULT_TRUNCATION};
use dilation_core::instrument::{random_instrument, DEFAULT_THRESHOLD};
use dilation_core::matcore::DEFAULT_TOL;
use dilation_core::random::{gaussian_matrix, random_isometry, stream_rng};
use dilation_core::*;
use proptest::prelude::*;

fn random_hermitian(n: usize, seed: u64) -> CMatrix {
    let g = gaussian_matrix(n, n, &mut stream_rng(seed, 0));
    &g + &g.dagger()
}

fn random_psd(n: usize, rank: usize, seed: u64) -> CMatrix {
    let g = gaussian_matrix(n, rank, &mut stream_rng(seed, 0));
    g.matmul(&g.dagger())
}

/// Σ K ρ K† straight from Kraus operators.
fn kraus_apply(ops: &[CMatrix], rho: &CMatrix) -> CMatrix {
    ops.iter()
        .fold(CMatrix::zeros(rho.rows(), rho.cols()), |acc, k| {
            &acc + &k.matmul(rho).matmul(&k.dagger())
        })
}

fn random_map(dim: usize, rank: usize, seed: u64) -> DynamicalMap {
    random_cptp(dim, rank, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dagger_is_an_involution(rows in 1usize..6, cols in 1usize..6, seed: u64) {
        let m = gaussian_matrix(rows, cols, &mut stream_rng(seed, 0));
        prop_assert_eq!(dagger(&dagger(&m)), m);
    }

    #[test]
    fn kron_is_associative(seed: u64, da in 1usize..4, db in 1usize..4, dc in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let a = gaussian_matrix(da, db, &mut rng);
        let b = gaussian_matrix(db, dc, &mut rng);
        let c = gaussian_matrix(dc, da, &mut rng);
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state_factorizes(seed: u64, n in 1usize..5, d in 1usize..5) {
        let mut rng = stream_rng(seed, 0);
        let rho = gaussian_matrix(n, n, &mut rng);
        let sigma = gaussian_matrix(d, d, &mut rng);
        let red = partial_trace_b(&kron(&rho, &sigma), CompositeIndexConvention::new(n, d)).unwrap();
        prop_assert!(red.max_abs_diff(&rho.scale(sigma.trace())) <= 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace(seed: u64, n in 1usize..5, d in 1usize..5) {
        let m = gaussian_matrix(n * d, n * d, &mut stream_rng(seed, 0));
        let red = partial_trace_b(&m, CompositeIndexConvention::new(n, d)).unwrap();
        prop_assert!((red.trace() - m.trace()).norm() <= 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs(seed: u64, n in 1usize..=16) {
        let h = random_hermitian(n, seed);
        let e = hermitian_eig(&h, DEFAULT_TOL).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&h) <= 1e-10);
        prop_assert!(e.vectors.isometry_deviation() <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn psd_sqrt_squares_back(seed: u64, n in 1usize..8, rank in 1usize..8) {
        let m = random_psd(n, rank, seed);
        let s = psd_sqrt(&m, DEFAULT_TOL).unwrap();
        prop_assert!(s.matmul(&s).max_abs_diff(&m) <= 1e-9);
        prop_assert_eq!(s.hermiticity_deviation(), 0.0);
    }

    #[test]
    fn completion_is_unitary_and_keeps_columns(seed: u64, d in 1usize..20, k_frac in 0.0f64..=1.0) {
        let k = ((d as f64 * k_frac) as usize).min(d);
        let w = random_isometry(d, k, &mut stream_rng(seed, 0));
        for u in [
            complete_to_unitary(&w, DEFAULT_TOL).unwrap(),
            complete_to_unitary_seeded(&w, DEFAULT_TOL, seed).unwrap(),
        ] {
            prop_assert!(u.isometry_deviation() <= 1e-10);
            for j in 0..k {
                prop_assert_eq!(u.column(j), w.column(j));
            }
        }
    }

    #[test]
    fn cptp_outputs_are_states(seed: u64, dim in 2usize..=4, rank_frac in 0.0f64..1.0) {
        let rank = 1 + (rank_frac * (dim * dim) as f64) as usize;
        let map = random_map(dim, rank.min(dim * dim), seed);
        let rho = DensityMatrix::random(dim, &mut stream_rng(seed, 1));
        let out = apply_map(&map, &rho).unwrap();
        prop_assert!(out.hermiticity_deviation() <= 1e-10);
        prop_assert!((out.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(hermitian_eig(&out.hermitian_part(), DEFAULT_TOL).unwrap().min_value() >= -1e-9);
    }

    #[test]
    fn decomposition_round_trip_and_routes_agree(seed: u64, dim in 2usize..=4, rank_frac in 0.0f64..1.0) {
        let rank = (1 + (rank_frac * (dim * dim) as f64) as usize).min(dim * dim);
        let ops = random_kraus_operators(dim, rank, &mut stream_rng(seed, 0));
        let map = random_map(dim, rank, seed);
        let dec = canonical_decompose(&map, DEFAULT_TRUNCATION).unwrap();
        prop_assert!(dec.rank() <= dim * dim);
        prop_assert_eq!(dec.rank(), rank);
        prop_assert!(dec.reconstruct().bmat().max_abs_diff(map.bmat()) <= 1e-9);
        for t in dec.terms() {
            prop_assert!((t.op.frobenius_norm() - 1.0).abs() <= 1e-10);
        }
        // Trace preservation on components agrees with Σ λ L†L = I.
        let props = check_properties(&map, DEFAULT_TOL);
        prop_assert_eq!(props.trace_preserving, dec.trace_residual() <= DEFAULT_TOL);
        // Three routes to Λρ: dynamical matrix, eigen-terms, generating Kraus set.
        let rho = DensityMatrix::random(dim, &mut stream_rng(seed, 1));
        let via_b = apply_map(&map, &rho).unwrap();
        prop_assert!(via_b.max_abs_diff(&dec.apply(rho.matrix()).unwrap()) <= 1e-9);
        prop_assert!(via_b.max_abs_diff(&kraus_apply(&ops, rho.matrix())) <= 1e-12);
    }

    #[test]
    fn hs_orthonormal_eigen_operators(seed: u64, dim in 2usize..=3) {
        let map = random_map(dim, dim * dim, seed);
        let dec = canonical_decompose(&map, DEFAULT_TRUNCATION).unwrap();
        for (a, ta) in dec.terms().iter().enumerate() {
            for (b, tb) in dec.terms().iter().enumerate() {
                let ip = ta.op.dagger().matmul(&tb.op).trace();
                let expected = if a == b { 1.0 } else { 0.0 };
                prop_assert!((ip - C64::new(expected, 0.0)).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn dilation_equivalence_and_structure(seed: u64, dim in 2usize..=4, rank_frac in 0.0f64..1.0) {
        let rank = (1 + (rank_frac * (dim * dim) as f64) as usize).min(dim * dim);
        let map = random_map(dim, rank, seed);
        let dec = canonical_decompose(&map, DEFAULT_TRUNCATION).unwrap();
        let w = build_dilation_isometry(&dec).unwrap();
        prop_assert!(w.isometry_deviation() <= 1e-9);
        let du = build_dilation_unitary(&dec).unwrap();
        prop_assert!(du.anc_dim() <= dim * dim);
        prop_assert!(du.unitarity_residual() <= 1e-10);
        prop_assert_eq!(du.isometry(), w);

        let rho = DensityMatrix::random(dim, &mut stream_rng(seed, 1));
        let (joint, reduced) = simulate_via_dilation(&du, &rho).unwrap();
        prop_assert!(reduced.max_abs_diff(&apply_map(&map, &rho).unwrap()) <= 1e-9);
        prop_assert!((joint.trace().re - 1.0).abs() <= 1e-10);
        // Unitary evolution keeps Tr(X²) of ρ ⊗ |0⟩⟨0|, which is Tr(ρ²).
        prop_assert!((joint.matmul(&joint).trace().re - rho.purity()).abs() <= 1e-9);

        let alt = build_dilation_unitary_with(&dec, Completion::Seeded(seed ^ 0x5eed)).unwrap();
        let (_, reduced_alt) = simulate_via_dilation(&alt, &rho).unwrap();
        prop_assert!(reduced_alt.max_abs_diff(&reduced) <= 1e-10);
    }

    #[test]
    fn instrument_routes_agree(seed: u64, dim in 2usize..=3, mu in 2usize..=4) {
        let inst = random_instrument(dim, mu, seed).unwrap();
        let dil = build_instrument_dilation(&inst).unwrap();
        prop_assert!(dil.anc_dim() <= mu * dim * dim);
        prop_assert!(dil.unitarity_residual() <= 1e-10);
        let covered: usize = dil.sectors().iter().map(|s| s.range.len()).sum();
        prop_assert_eq!(covered, dil.anc_dim());

        let rho = DensityMatrix::random(dim, &mut stream_rng(seed, 1));
        let via = measure_via_dilation(&dil, &rho, DEFAULT_THRESHOLD).unwrap();
        let direct = outcome_statistics(&inst, &rho).unwrap();
        let total: f64 = via.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        for (a, b) in via.iter().zip(&direct) {
            prop_assert_eq!(&a.label, &b.label);
            prop_assert!((a.probability - b.probability).abs() <= 1e-9);
            prop_assert!(a.raw_unnormalized.max_abs_diff(&b.raw_unnormalized) <= 1e-9);
            prop_assert!(a.raw_unnormalized.hermiticity_deviation() <= 1e-9);
            let min = hermitian_eig(&a.raw_unnormalized.hermitian_part(), DEFAULT_TOL).unwrap().min_value();
            prop_assert!(min >= -1e-9);
        }
    }

    #[test]
    fn padding_completes_and_keeps_statistics(seed: u64, dim in 2usize..=3, mu in 2usize..=4) {
        // Dropping one outcome of a complete instrument leaves a PSD defect.
        let full = random_instrument(dim, mu, seed).unwrap();
        let kept: Vec<_> = full.outcomes()[..mu - 1].to_vec();
        let partial = Instrument::new(dim, kept).unwrap();
        let padded = pad_to_complete(&partial).unwrap();
        prop_assert!(check_completeness(&padded, 1e-9).0);
        prop_assert_eq!(padded.padded_index(), Some(mu - 1));

        let rho = DensityMatrix::random(dim, &mut stream_rng(seed, 1));
        let before = outcome_statistics(&partial, &rho).unwrap();
        let after = outcome_statistics(&padded, &rho).unwrap();
        prop_assert_eq!(&after[..mu - 1], &before[..]);
        let total: f64 = after.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }
}
