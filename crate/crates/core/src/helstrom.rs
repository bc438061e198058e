//! Closed-form optimal discrimination of two states.

use crate::error::{Error, Result};
use crate::quantum::{hermitian_trace_norm, ComplexMatrix, Povm, StateEnsemble};

/// Eigenvalues of the Helstrom operator within this band of zero go to outcome 1.
pub const ZERO_EIGENVALUE_BAND: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HelstromResult {
    pub value: f64,
    pub povm: Povm,
    /// `q_1 ρ_1 − q_2 ρ_2`.
    pub helstrom_operator: ComplexMatrix,
}

/// `½(1 + ‖q_1ρ_1 − q_2ρ_2‖)` together with the spectral projectors that attain it.
pub fn helstrom(ensemble: &StateEnsemble) -> Result<HelstromResult> {
    if ensemble.len() != 2 {
        return Err(Error::WrongArity {
            found: ensemble.len(),
        });
    }
    let gamma = &ensemble.weighted_state(0) - &ensemble.weighted_state(1);
    let eig = gamma.eigh();
    let first = eig.map(|x| if x >= -ZERO_EIGENVALUE_BAND { 1.0 } else { 0.0 });
    let second = eig.map(|x| if x >= -ZERO_EIGENVALUE_BAND { 0.0 } else { 1.0 });
    let value = 0.5 * (1.0 + hermitian_trace_norm(&gamma));
    Ok(HelstromResult {
        value,
        povm: Povm::from_trusted(vec![first, second]),
        helstrom_operator: gamma,
    })
}
