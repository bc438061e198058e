//! Dense Hermitian arithmetic and validated quantum data types.
//!
//! Every positivity check, trace norm and operator square root in the crate
//! goes through [`ComplexMatrix::eigh`], so all modules share one tolerance
//! regime: absolute `1e-9` on eigenvalues, Hermiticity scaled by the largest
//! entry.

mod born;
mod matrix;
pub mod random;
mod states;

pub(crate) use born::hermitian_trace_norm;
pub use born::{born_probabilities, clamp_probability, guess_value, trace_norm};
pub use matrix::{sum_matrices, ComplexMatrix, HermitianEigen};
pub(crate) use states::is_permutation;
pub use states::{
    completeness_deviation, validate_density, validate_povm, DensityMatrix, Povm, StateEnsemble,
};

pub const EIGEN_TOLERANCE: f64 = 1e-9;
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;
pub const TRACE_TOLERANCE: f64 = 1e-9;
pub const COMPLETENESS_TOLERANCE: f64 = 1e-9;
pub const PRIOR_TOLERANCE: f64 = 1e-12;
pub const PROBABILITY_SLACK: f64 = 1e-9;
