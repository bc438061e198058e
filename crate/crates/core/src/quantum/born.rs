use super::matrix::ComplexMatrix;
use super::states::{Povm, StateEnsemble};
use super::{HERMITIAN_TOLERANCE, PROBABILITY_SLACK};
use crate::error::{Error, Result};

/// Sum of absolute eigenvalues (`hermitian = true`) or of singular values.
pub fn trace_norm(a: &ComplexMatrix, hermitian: bool) -> Result<f64> {
    if !a.is_finite() {
        let m = a.as_matrix();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if !(m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
    }
    if hermitian {
        let deviation = a.hermiticity_deviation();
        if deviation > HERMITIAN_TOLERANCE * a.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(hermitian_trace_norm(a))
    } else {
        Ok(a.as_matrix().clone().singular_values().iter().sum())
    }
}

/// Trace norm of a matrix already known to be Hermitian.
pub(crate) fn hermitian_trace_norm(a: &ComplexMatrix) -> f64 {
    a.eigh().values.iter().map(|x| x.abs()).sum()
}

/// Clamps float noise within `PROBABILITY_SLACK` of `[0, 1]`.
pub fn clamp_probability(value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else if (-PROBABILITY_SLACK..0.0).contains(&value) {
        Ok(0.0)
    } else if value > 1.0 && value <= 1.0 + PROBABILITY_SLACK {
        Ok(1.0)
    } else {
        Err(Error::ProbabilityOutOfRange { value })
    }
}

fn check_shapes(ensemble: &StateEnsemble, povm: &Povm) -> Result<()> {
    if povm.len() != ensemble.len() {
        return Err(Error::ArityMismatch {
            expected: ensemble.len(),
            found: povm.len(),
        });
    }
    if povm.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.dim(),
            found: povm.dim(),
        });
    }
    Ok(())
}

/// Table `P[x][y] = tr[ρ_y M_x]`: rows are outcomes, columns are states.
pub fn born_probabilities(ensemble: &StateEnsemble, povm: &Povm) -> Result<Vec<Vec<f64>>> {
    check_shapes(ensemble, povm)?;
    let n = ensemble.len();
    let mut table = vec![vec![0.0; n]; n];
    for (x, row) in table.iter_mut().enumerate() {
        for (y, entry) in row.iter_mut().enumerate() {
            let p = ensemble.state(y).matrix().trace_product(povm.element(x)).re;
            *entry = clamp_probability(p)?;
        }
    }
    Ok(table)
}

/// `Σ_x q_x tr[ρ_x M_x]`, read off the diagonal of [`born_probabilities`].
pub fn guess_value(ensemble: &StateEnsemble, povm: &Povm) -> Result<f64> {
    let table = born_probabilities(ensemble, povm)?;
    Ok(ensemble
        .priors()
        .iter()
        .enumerate()
        .map(|(x, q)| q * table[x][x])
        .sum())
}
