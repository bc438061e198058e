use num_complex::Complex64;

use super::matrix::{sum_matrices, ComplexMatrix};
use super::{
    COMPLETENESS_TOLERANCE, EIGEN_TOLERANCE, HERMITIAN_TOLERANCE, PRIOR_TOLERANCE, TRACE_TOLERANCE,
};
use crate::error::{Error, Result};

/// Unit-trace, positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

/// Prior-weighted list of states sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    priors: Vec<f64>,
    states: Vec<DensityMatrix>,
}

/// Positive semidefinite elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

fn hermitian_limit(matrix: &ComplexMatrix) -> f64 {
    HERMITIAN_TOLERANCE * matrix.max_abs().max(1.0)
}

/// Checks Hermiticity, positivity and unit trace, in that order.
pub fn validate_density(matrix: ComplexMatrix) -> Result<DensityMatrix> {
    let deviation = matrix.hermiticity_deviation();
    if deviation > hermitian_limit(&matrix) {
        return Err(Error::NotHermitian { deviation });
    }
    let matrix = matrix.hermitian_part();
    let min_eigenvalue = matrix.min_eigenvalue();
    if min_eigenvalue < -EIGEN_TOLERANCE {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    let trace = matrix.real_trace();
    if (trace - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::TraceNotOne { trace });
    }
    Ok(DensityMatrix(matrix))
}

/// Checks each element for Hermiticity and positivity, then completeness.
pub fn validate_povm(elements: Vec<ComplexMatrix>) -> Result<Povm> {
    let first = elements
        .first()
        .ok_or(Error::TooFewStates { min: 1, found: 0 })?;
    let dim = first.dim();
    for m in &elements {
        if m.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
    }
    let mut hermitized = Vec::with_capacity(elements.len());
    for (index, m) in elements.iter().enumerate() {
        let deviation = m.hermiticity_deviation();
        if deviation > hermitian_limit(m) {
            return Err(Error::PovmElementNotHermitian { index, deviation });
        }
        let h = m.hermitian_part();
        let min_eigenvalue = h.min_eigenvalue();
        if min_eigenvalue < -EIGEN_TOLERANCE {
            return Err(Error::PovmElementNotPsd {
                index,
                min_eigenvalue,
            });
        }
        hermitized.push(h);
    }
    let deviation = completeness_deviation(&hermitized);
    if deviation > COMPLETENESS_TOLERANCE {
        return Err(Error::CompletenessViolated { deviation });
    }
    Ok(Povm {
        elements: hermitized,
    })
}

/// Max entrywise deviation of `Σ M_x` from the identity.
pub fn completeness_deviation(elements: &[ComplexMatrix]) -> f64 {
    match elements.first() {
        None => f64::INFINITY,
        Some(first) => {
            let dim = first.dim();
            sum_matrices(dim, elements).max_abs_diff(&ComplexMatrix::identity(dim))
        }
    }
}

impl DensityMatrix {
    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr.is_nan() || norm_sqr <= 0.0 || norm_sqr.is_infinite() {
            return Err(Error::TraceNotOne { trace: norm_sqr });
        }
        validate_density(ComplexMatrix::projector(ket).scale(1.0 / norm_sqr))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

impl StateEnsemble {
    pub fn new(priors: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::TooFewStates {
                min: 2,
                found: states.len(),
            });
        }
        if priors.len() != states.len() {
            return Err(Error::ArityMismatch {
                expected: states.len(),
                found: priors.len(),
            });
        }
        let dim = states[0].dim();
        for s in &states {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
        }
        for (index, &value) in priors.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidPrior { index, value });
            }
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > PRIOR_TOLERANCE {
            return Err(Error::PriorsNotNormalized { sum });
        }
        Ok(Self { priors, states })
    }

    /// Equal priors `1/N`.
    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let n = states.len().max(1);
        Self::new(vec![1.0 / n as f64; states.len()], states)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn prior(&self, x: usize) -> f64 {
        self.priors[x]
    }

    pub fn state(&self, x: usize) -> &DensityMatrix {
        &self.states[x]
    }

    /// `q_x ρ_x`.
    pub fn weighted_state(&self, x: usize) -> ComplexMatrix {
        self.states[x].matrix().scale(self.priors[x])
    }

    /// Jointly reorders priors and states: entry `k` of the result is entry
    /// `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if !is_permutation(order, self.len()) {
            return Err(Error::BadPermutation { n: self.len() });
        }
        Self::new(
            order.iter().map(|&k| self.priors[k]).collect(),
            order.iter().map(|&k| self.states[k].clone()).collect(),
        )
    }
}

pub(crate) fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &k in order {
        if k >= n || seen[k] {
            return false;
        }
        seen[k] = true;
    }
    true
}

impl Povm {
    /// Wraps elements already known to satisfy the POVM invariants.
    pub(crate) fn from_trusted(elements: Vec<ComplexMatrix>) -> Self {
        Povm { elements }
    }

    /// `{I/N, …, I/N}`.
    pub fn uniform(count: usize, dim: usize) -> Self {
        let e = ComplexMatrix::identity(dim).scale(1.0 / count as f64);
        Povm {
            elements: vec![e; count],
        }
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, x: usize) -> &ComplexMatrix {
        &self.elements[x]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn into_elements(self) -> Vec<ComplexMatrix> {
        self.elements
    }
}
