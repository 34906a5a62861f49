//! Unitary dilations of dynamical maps and quantum instruments.
//!
//! A dynamical map on an `N`-level system is stored as its Hermitian
//! `N² × N²` dynamical matrix. Its eigendecomposition gives the canonical
//! operator-sum form `ρ ↦ Σ λ_α L_α ρ L_α†`, from which this crate builds
//!
//! * a unitary on system ⊗ ancilla whose partial trace reproduces the map
//!   (see [`dilation`]), and
//! * for a set of maps (an instrument), a unitary followed by a projective
//!   measurement of ancilla sectors that reproduces every outcome's
//!   probability and post-selected state (see [`instrument`]).
//!
//! Everything is dense and double precision; dimensions are expected to be
//! small (system dimension up to ~16).

pub mod channel;
pub mod dilation;
pub mod error;
pub mod instrument;
pub mod matcore;
pub mod random;

pub use channel::{
    apply_map, canonical_decompose, check_properties, map_from_kraus, random_cptp,
    CanonicalDecomposition, DensityMatrix, DynamicalMap, KrausTerm, MapProperties,
};
pub use dilation::{
    build_dilation_isometry, build_dilation_unitary, build_dilation_unitary_with,
    simulate_via_dilation, verify_dilation, Completion, DilationReport, DilationUnitary,
};
pub use error::{Error, Result};
pub use instrument::{
    build_instrument_dilation, build_instrument_dilation_with, check_completeness,
    measure_via_dilation, outcome_statistics, pad_to_complete, sample_outcomes, Histogram,
    Instrument, InstrumentDilation, OutcomeResult, Sector,
};
pub use matcore::{
    complete_to_unitary, complete_to_unitary_seeded, dagger, hermitian_eig, kron, partial_trace_b,
    psd_sqrt, CMatrix, CompositeIndexConvention, Eigen, C64,
};
