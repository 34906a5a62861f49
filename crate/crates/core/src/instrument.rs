//! Instruments (sets of CP maps, one per measurement outcome) and their
//! realization as one unitary followed by a projective measurement of
//! ancilla sectors.
//!
//! Each outcome `i` contributes `νᵢ` ancilla levels `(i, α)`, laid out
//! sector by sector in outcome order. The isometry
//! `|r'⟩|(0,0)⟩ ↦ Σ √λ⁽ⁱ⁾_α [L⁽ⁱ⁾_α]_{rr'} |r⟩|(i,α)⟩` is orthonormal
//! exactly when the instrument is complete; projecting the evolved state
//! onto sector `i` and tracing out the ancilla yields `Λ⁽ⁱ⁾ρ`.

use std::collections::HashSet;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::{
    apply_map, canonical_decompose, map_from_kraus, random_kraus_operators, DensityMatrix,
    DynamicalMap, DEFAULT_TRUNCATION,
};
use crate::dilation::{check_weights, embed_isometry, evolve_joint, fill_isometry, Completion};
use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eig, partial_trace_b, psd_sqrt, CMatrix, CompositeIndexConvention, DEFAULT_TOL,
};
use crate::random::{random_unitary, stream_rng};

/// `‖defect‖_max` at or below which an instrument counts as complete.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Tolerance used by [`pad_to_complete`] to decide whether padding is needed.
pub const PADDING_TOL: f64 = 1e-10;
/// Most negative defect eigenvalue tolerated by [`pad_to_complete`].
pub const OVERCOMPLETE_TOL: f64 = 1e-9;
/// Probabilities at or below this get no post-selected state.
pub const DEFAULT_THRESHOLD: f64 = 1e-12;
/// Label given to the outcome added by [`pad_to_complete`].
pub const DISCARD_LABEL: &str = "discard";

/// An ordered set of labelled CP maps on one system.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    dim: usize,
    outcomes: Vec<(String, DynamicalMap)>,
    complete: bool,
    padded_index: Option<usize>,
}

impl Instrument {
    /// Requires at least one outcome, unique labels, matching dimensions and
    /// completely positive members. Members need not preserve trace.
    pub fn new(dim: usize, outcomes: Vec<(String, DynamicalMap)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidInstrument("no outcomes".into()));
        }
        let mut seen = HashSet::new();
        for (label, map) in &outcomes {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidInstrument(format!(
                    "duplicate label {label:?}"
                )));
            }
            if map.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "outcome {label:?} has dimension {}, instrument {dim}",
                    map.dim()
                )));
            }
            let min = hermitian_eig(map.bmat(), f64::INFINITY)?.min_value();
            if min < -DEFAULT_TOL {
                return Err(Error::NotCompletelyPositive { weight: min });
            }
        }
        let mut inst = Self {
            dim,
            outcomes,
            complete: false,
            padded_index: None,
        };
        inst.complete = check_completeness(&inst, COMPLETENESS_TOL).0;
        Ok(inst)
    }

    /// Labels `"0"`, `"1"`, … in order.
    pub fn from_maps(dim: usize, maps: Vec<DynamicalMap>) -> Result<Self> {
        Self::new(
            dim,
            maps.into_iter()
                .enumerate()
                .map(|(i, m)| (i.to_string(), m))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcomes `μ`.
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[(String, DynamicalMap)] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Index of the outcome added by padding, if any.
    pub fn padded_index(&self) -> Option<usize> {
        self.padded_index
    }

    /// Restores padding metadata, e.g. after deserialization.
    pub fn with_padded_index(mut self, index: Option<usize>) -> Result<Self> {
        if let Some(i) = index {
            if i >= self.outcomes.len() {
                return Err(Error::InvalidInstrument(format!(
                    "padded index {i} out of range"
                )));
            }
        }
        self.padded_index = index;
        Ok(self)
    }

    /// `Σᵢ Λ⁽ⁱ⁾` as a single map.
    pub fn total_map(&self) -> DynamicalMap {
        let mut it = self.outcomes.iter().map(|(_, m)| m);
        let first = it.next().expect("non-empty").clone();
        it.fold(first, |acc, m| acc.sum(m).expect("dimensions checked"))
    }
}

/// Returns `(complete, I − Σ_{i,α} λ⁽ⁱ⁾_α L⁽ⁱ⁾_α† L⁽ⁱ⁾_α)`, with `complete`
/// meaning the defect is within `tol` in max norm.
pub fn check_completeness(inst: &Instrument, tol: f64) -> (bool, CMatrix) {
    let mut defect = CMatrix::identity(inst.dim);
    for (_, map) in &inst.outcomes {
        let dec = canonical_decompose(map, DEFAULT_TRUNCATION).expect("member maps are Hermitian");
        defect = &defect - &dec.effect();
    }
    (defect.max_abs() <= tol, defect)
}

/// Appends a discard outcome with the single Kraus operator `√(I − ΣE⁽ⁱ⁾)`
/// when the instrument is incomplete.
pub fn pad_to_complete(inst: &Instrument) -> Result<Instrument> {
    let (complete, defect) = check_completeness(inst, PADDING_TOL);
    if complete {
        return Ok(inst.clone());
    }
    let defect = defect.hermitian_part();
    let min = hermitian_eig(&defect, DEFAULT_TOL)?.min_value();
    if min < -OVERCOMPLETE_TOL {
        return Err(Error::OverComplete {
            min_eigenvalue: min,
        });
    }
    let k = psd_sqrt(&defect, OVERCOMPLETE_TOL)?;
    let discard = map_from_kraus(&[(1.0, k)], inst.dim)?;

    let mut label = DISCARD_LABEL.to_string();
    let mut n = 1;
    while inst.labels().any(|l| l == label) {
        label = format!("{DISCARD_LABEL}_{n}");
        n += 1;
    }
    let mut outcomes = inst.outcomes.clone();
    outcomes.push((label, discard));
    let index = outcomes.len() - 1;
    Instrument::new(inst.dim, outcomes)?.with_padded_index(Some(index))
}

/// The ancilla levels belonging to one outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sector {
    pub label: String,
    pub range: Range<usize>,
}

/// Unitary plus sector layout realizing an instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentDilation {
    sys_dim: usize,
    anc_dim: usize,
    u: CMatrix,
    sectors: Vec<Sector>,
    conv: CompositeIndexConvention,
    padded_index: Option<usize>,
}

impl InstrumentDilation {
    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    /// `Σᵢ νᵢ`.
    pub fn anc_dim(&self) -> usize {
        self.anc_dim
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.u
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn convention(&self) -> CompositeIndexConvention {
        self.conv
    }

    pub fn padded_index(&self) -> Option<usize> {
        self.padded_index
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.u.isometry_deviation()
    }

    /// `μ·N²`, the bound on the ancilla dimension.
    pub fn ancilla_bound(&self) -> usize {
        self.sectors.len() * self.sys_dim * self.sys_dim
    }
}

pub fn build_instrument_dilation(inst: &Instrument) -> Result<InstrumentDilation> {
    build_instrument_dilation_with(inst, Completion::Canonical)
}

pub fn build_instrument_dilation_with(
    inst: &Instrument,
    completion: Completion,
) -> Result<InstrumentDilation> {
    let (complete, defect) = check_completeness(inst, COMPLETENESS_TOL);
    if !complete {
        return Err(Error::Incomplete {
            defect: defect.max_abs(),
        });
    }
    let n = inst.dim;
    let mut decs = Vec::with_capacity(inst.len());
    for (_, map) in &inst.outcomes {
        let dec = canonical_decompose(map, DEFAULT_TRUNCATION)?;
        check_weights(dec.terms())?;
        decs.push(dec);
    }
    let anc_dim: usize = decs.iter().map(|d| d.rank()).sum();
    debug_assert!(anc_dim <= inst.len() * n * n);

    let conv = CompositeIndexConvention::new(n, anc_dim);
    let mut iso = CMatrix::zeros(conv.total(), n);
    let mut sectors = Vec::with_capacity(inst.len());
    let mut offset = 0;
    for ((label, _), dec) in inst.outcomes.iter().zip(&decs) {
        fill_isometry(&mut iso, conv, offset, dec.terms());
        sectors.push(Sector {
            label: label.clone(),
            range: offset..offset + dec.rank(),
        });
        offset += dec.rank();
    }
    let u = embed_isometry(&iso, conv, completion)?;
    Ok(InstrumentDilation {
        sys_dim: n,
        anc_dim,
        u,
        sectors,
        conv,
        padded_index: inst.padded_index,
    })
}

/// Statistics of one outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeResult {
    pub label: String,
    pub probability: f64,
    /// `Λ⁽ⁱ⁾ρ / p`, present only when `p` exceeds the threshold.
    pub post_state: Option<DensityMatrix>,
    /// `Λ⁽ⁱ⁾ρ`.
    pub raw_unnormalized: CMatrix,
}

fn outcome_from_raw(label: &str, raw: CMatrix, threshold: f64) -> OutcomeResult {
    let p = raw.trace().re.clamp(0.0, 1.0);
    let post_state = (p > threshold)
        .then(|| DensityMatrix::from_unchecked(raw.hermitian_part().scale_real(1.0 / p)));
    OutcomeResult {
        label: label.to_string(),
        probability: p,
        post_state,
        raw_unnormalized: raw,
    }
}

/// Evolves `ρ ⊗ |(0,0)⟩⟨(0,0)|`, projects onto each ancilla sector and
/// traces out the ancilla.
pub fn measure_via_dilation(
    dil: &InstrumentDilation,
    rho: &DensityMatrix,
    threshold: f64,
) -> Result<Vec<OutcomeResult>> {
    let joint = evolve_joint(&dil.u, dil.conv, rho)?;
    let d = dil.conv.total();
    dil.sectors
        .iter()
        .map(|sector| {
            let inside = |idx: usize| sector.range.contains(&dil.conv.split(idx).1);
            let projected = CMatrix::from_fn(d, d, |i, j| {
                if inside(i) && inside(j) {
                    joint[(i, j)]
                } else {
                    Default::default()
                }
            });
            let raw = partial_trace_b(&projected, dil.conv)?;
            Ok(outcome_from_raw(&sector.label, raw, threshold))
        })
        .collect()
}

/// Direct route: `Tr[Λ⁽ⁱ⁾ρ]` and `Λ⁽ⁱ⁾ρ / Tr[Λ⁽ⁱ⁾ρ]` for every outcome.
pub fn outcome_statistics(inst: &Instrument, rho: &DensityMatrix) -> Result<Vec<OutcomeResult>> {
    inst.outcomes
        .iter()
        .map(|(label, map)| {
            Ok(outcome_from_raw(
                label,
                apply_map(map, rho)?,
                DEFAULT_THRESHOLD,
            ))
        })
        .collect()
}

/// Outcome counts in instrument order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub shots: u64,
    pub counts: Vec<(String, u64)>,
}

impl Histogram {
    pub fn count(&self, label: &str) -> Option<u64> {
        self.counts
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| *c)
    }
}

/// Draws `shots` outcomes by inverse CDF over the dilation's outcome
/// probabilities.
pub fn sample_outcomes(
    dil: &InstrumentDilation,
    rho: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<Histogram> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let results = measure_via_dilation(dil, rho, DEFAULT_THRESHOLD)?;
    let mut cdf = Vec::with_capacity(results.len());
    let mut acc = 0.0;
    for r in &results {
        acc += r.probability;
        cdf.push(acc);
    }
    let total = acc;
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidArgument(
            "all outcome probabilities vanish".into(),
        ));
    }
    let mut counts = vec![0u64; results.len()];
    let mut rng = stream_rng(seed, 0);
    for _ in 0..shots {
        let x = rng.random::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= x).min(results.len() - 1);
        counts[k] += 1;
    }
    Ok(Histogram {
        shots,
        counts: results
            .into_iter()
            .zip(counts)
            .map(|(r, c)| (r.label, c))
            .collect(),
    })
}

/// Seeded random complete instrument: a random isometry is sliced into
/// Kraus operators, which are then dealt to `outcomes` outcomes (each gets
/// at least one).
pub fn random_instrument(dim: usize, outcomes: usize, seed: u64) -> Result<Instrument> {
    if dim == 0 || outcomes == 0 {
        return Err(Error::InvalidArgument(
            "dimension and outcome count must be positive".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let max_ops = (outcomes * dim * dim).max(outcomes);
    let n_ops = rng.random_range(outcomes..=max_ops.min(outcomes + 2 * dim));
    let ops = random_kraus_operators(dim, n_ops, &mut rng);
    let mut owner: Vec<usize> = (0..n_ops)
        .map(|j| {
            if j < outcomes {
                j
            } else {
                rng.random_range(0..outcomes)
            }
        })
        .collect();
    owner.shuffle(&mut rng);
    let maps = (0..outcomes)
        .map(|i| {
            let terms: Vec<(f64, CMatrix)> = ops
                .iter()
                .zip(&owner)
                .filter(|(_, &o)| o == i)
                .map(|(k, _)| (1.0, k.clone()))
                .collect();
            map_from_kraus(&terms, dim)
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::from_maps(dim, maps)
}

/// Seeded random projective measurement: a random orthonormal basis split
/// into `outcomes` non-empty groups, outcome `i` acting as `ρ ↦ PᵢρPᵢ`.
pub fn random_projective_instrument(dim: usize, outcomes: usize, seed: u64) -> Result<Instrument> {
    if outcomes == 0 || outcomes > dim {
        return Err(Error::InvalidArgument(format!(
            "{outcomes} projective outcomes in dimension {dim}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let u = random_unitary(dim, &mut rng);
    let mut owner: Vec<usize> = (0..dim)
        .map(|j| {
            if j < outcomes {
                j
            } else {
                rng.random_range(0..outcomes)
            }
        })
        .collect();
    owner.shuffle(&mut rng);
    let maps = (0..outcomes)
        .map(|i| {
            let mut p = CMatrix::zeros(dim, dim);
            for (j, _) in owner.iter().enumerate().filter(|(_, &o)| o == i) {
                let v = u.column(j);
                p = &p + &CMatrix::outer(&v, &v);
            }
            map_from_kraus(&[(1.0, p)], dim)
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::from_maps(dim, maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::random_cptp;
    use crate::channel::standard::*;
    use crate::dilation::{build_dilation_unitary, simulate_via_dilation};
    use crate::matcore::C64;

    fn basis_instrument() -> Instrument {
        Instrument::new(
            2,
            vec![
                ("0".into(), conjugation(&basis_projector(2, 0))),
                ("1".into(), conjugation(&basis_projector(2, 1))),
            ],
        )
        .unwrap()
    }

    fn p0_instrument() -> Instrument {
        Instrument::new(2, vec![("p0".into(), conjugation(&basis_projector(2, 0)))]).unwrap()
    }

    fn plus() -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap()).unwrap()
    }

    #[test]
    fn completeness_examples() {
        let (ok, defect) = check_completeness(&basis_instrument(), DEFAULT_TOL);
        assert!(ok && defect.max_abs() < 1e-15);

        let (ok, defect) = check_completeness(&p0_instrument(), DEFAULT_TOL);
        assert!(!ok);
        assert!(defect.max_abs_diff(&basis_projector(2, 1)) < 1e-15);

        let inst = Instrument::from_maps(3, vec![random_cptp(3, 5, 8).unwrap()]).unwrap();
        assert!(check_completeness(&inst, DEFAULT_TOL).0);
        assert!(inst.is_complete());
    }

    #[test]
    fn padding_examples() {
        let padded = pad_to_complete(&p0_instrument()).unwrap();
        assert_eq!(padded.len(), 2);
        assert_eq!(padded.padded_index(), Some(1));
        assert_eq!(padded.outcomes()[1].0, DISCARD_LABEL);
        assert!(check_completeness(&padded, 1e-10).0);
        let expected = conjugation(&basis_projector(2, 1));
        assert!(padded.outcomes()[1].1.bmat().max_abs_diff(expected.bmat()) < 1e-14);

        let already = basis_instrument();
        let same = pad_to_complete(&already).unwrap();
        assert_eq!(same, already);
        assert_eq!(same.padded_index(), None);
    }

    #[test]
    fn overcomplete_rejected() {
        let doubled = map_from_kraus(&[(2.0, CMatrix::identity(2))], 2).unwrap();
        let inst = Instrument::from_maps(2, vec![doubled]).unwrap();
        assert!(matches!(
            pad_to_complete(&inst),
            Err(Error::OverComplete { .. })
        ));
    }

    #[test]
    fn instrument_validation() {
        assert!(matches!(
            Instrument::new(2, vec![]),
            Err(Error::InvalidInstrument(_))
        ));
        let m = conjugation(&basis_projector(2, 0));
        assert!(matches!(
            Instrument::new(2, vec![("a".into(), m.clone()), ("a".into(), m.clone())]),
            Err(Error::InvalidInstrument(_))
        ));
        assert!(matches!(
            Instrument::from_maps(2, vec![DynamicalMap::transpose(2)]),
            Err(Error::NotCompletelyPositive { .. })
        ));
        assert!(matches!(
            Instrument::from_maps(3, vec![m]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn incomplete_instrument_cannot_be_dilated() {
        assert!(matches!(
            build_instrument_dilation(&p0_instrument()),
            Err(Error::Incomplete { .. })
        ));
    }

    #[test]
    fn basis_instrument_dilation_layout() {
        let dil = build_instrument_dilation(&basis_instrument()).unwrap();
        assert_eq!(dil.anc_dim(), 2);
        assert_eq!(dil.sectors()[0].range, 0..1);
        assert_eq!(dil.sectors()[1].range, 1..2);
        // |r'⟩|(0,0)⟩ ↦ |r'⟩|(r',0)⟩: columns 0 and 2 hit rows 0 and 3.
        let u = dil.unitary();
        assert!((u[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((u[(3, 2)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(dil.unitarity_residual() < 1e-10);
        assert!(dil.anc_dim() <= dil.ancilla_bound());
    }

    #[test]
    fn basis_measurement_of_plus_state() {
        let inst = basis_instrument();
        let dil = build_instrument_dilation(&inst).unwrap();
        let via = measure_via_dilation(&dil, &plus(), DEFAULT_THRESHOLD).unwrap();
        let direct = outcome_statistics(&inst, &plus()).unwrap();
        for (k, expected) in [[1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
            assert!((via[k].probability - 0.5).abs() < 1e-15);
            let post = via[k].post_state.as_ref().unwrap();
            assert!(post.matrix().max_abs_diff(&CMatrix::diag_real(expected)) < 1e-14);
            assert!((direct[k].probability - via[k].probability).abs() < 1e-9);
        }
    }

    #[test]
    fn single_outcome_channel_reduces_to_channel_dilation() {
        let map = random_cptp(2, 3, 4).unwrap();
        let inst = Instrument::from_maps(2, vec![map.clone()]).unwrap();
        let dil = build_instrument_dilation(&inst).unwrap();
        let du = build_dilation_unitary(&canonical_decompose(&map, DEFAULT_TRUNCATION).unwrap())
            .unwrap();
        assert_eq!(dil.unitary(), du.unitary());
        let rho = DensityMatrix::random(2, &mut stream_rng(4, 1));
        let out = measure_via_dilation(&dil, &rho, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0).abs() < 1e-12);
        let (_, reduced) = simulate_via_dilation(&du, &rho).unwrap();
        assert!(out[0].raw_unnormalized.max_abs_diff(&reduced) < 1e-10);
    }

    #[test]
    fn padded_instrument_on_excited_state() {
        let padded = pad_to_complete(&p0_instrument()).unwrap();
        let dil = build_instrument_dilation(&padded).unwrap();
        let excited = DensityMatrix::new(CMatrix::diag_real(&[0.0, 1.0])).unwrap();
        let out = measure_via_dilation(&dil, &excited, DEFAULT_THRESHOLD).unwrap();
        assert!(out[0].probability.abs() < 1e-15);
        assert!(out[0].post_state.is_none());
        assert!((out[1].probability - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unpadded_incomplete_statistics_are_subnormalized() {
        let out = outcome_statistics(&p0_instrument(), &DensityMatrix::maximally_mixed(2)).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampling_contract() {
        let dil = build_instrument_dilation(&basis_instrument()).unwrap();
        assert!(matches!(
            sample_outcomes(&dil, &plus(), 0, 1),
            Err(Error::InvalidArgument(_))
        ));
        let h = sample_outcomes(&dil, &plus(), 1000, 3).unwrap();
        assert_eq!(h.counts.iter().map(|c| c.1).sum::<u64>(), 1000);
        assert_eq!(h, sample_outcomes(&dil, &plus(), 1000, 3).unwrap());

        let one = Instrument::from_maps(2, vec![DynamicalMap::identity(2)]).unwrap();
        let dil = build_instrument_dilation(&one).unwrap();
        let h = sample_outcomes(&dil, &plus(), 500, 9).unwrap();
        assert_eq!(h.count("0"), Some(500));
    }

    #[test]
    fn random_generators_are_complete() {
        for seed in 0..10 {
            let inst = random_instrument(3, 3, seed).unwrap();
            assert_eq!(inst.len(), 3);
            assert!(inst.is_complete());
            let proj = random_projective_instrument(3, 2, seed).unwrap();
            assert!(proj.is_complete());
        }
        assert!(random_projective_instrument(2, 3, 0).is_err());
    }
}
