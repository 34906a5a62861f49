//! Dense complex linear-algebra kernels.
//!
//! Every composite system ⊗ ancilla index in this crate follows
//! [`CompositeIndexConvention`]: basis state `|r⟩|α⟩` sits at `r·d + α`,
//! which is exactly the row-major layout produced by [`kron`].

mod completion;
mod eig;
mod matrix;

pub use completion::{complete_to_unitary, complete_to_unitary_seeded};
pub use eig::{hermitian_eig, psd_sqrt, Eigen};
pub use matrix::{dagger, kron, partial_trace_b, CMatrix, CompositeIndexConvention, C64};

/// Default tolerance for Hermiticity and orthonormality checks.
pub const DEFAULT_TOL: f64 = 1e-10;
