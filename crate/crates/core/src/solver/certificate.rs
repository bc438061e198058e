use crate::error::{Error, Result};
use crate::quantum::{
    completeness_deviation, sum_matrices, ComplexMatrix, Povm, StateEnsemble, HERMITIAN_TOLERANCE,
};

/// Dual operator `K` with the complementary operators `σ_x = K − q_x ρ_x`.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub k_operator: ComplexMatrix,
    pub sigma: Vec<ComplexMatrix>,
    /// `tr[σ_x M_x]`.
    pub slackness: Vec<f64>,
    /// Minimum eigenvalue of each `σ_x`.
    pub dual_feasibility: Vec<f64>,
    pub trace_k: f64,
}

/// Residuals of the optimality conditions at a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Largest violation of Hermiticity, positivity or completeness of the POVM.
    pub primal_residual: f64,
    /// `max_x max(0, −λ_min(σ_x))`.
    pub dual_residual: f64,
    /// `max_x |tr[σ_x M_x]|`.
    pub slackness_residual: f64,
    /// `tr K − Σ_x q_x tr[ρ_x M_x]`.
    pub gap: f64,
}

impl KktReport {
    /// The quantity the solver drives to zero: slackness, dual feasibility and |gap|.
    pub fn score(&self) -> f64 {
        self.slackness_residual
            .max(self.dual_residual)
            .max(self.gap.abs())
    }

    pub fn certifies(&self, tolerance: f64) -> bool {
        self.score() <= tolerance
    }
}

fn check_elements(ensemble: &StateEnsemble, elements: &[ComplexMatrix]) -> Result<()> {
    if elements.len() != ensemble.len() {
        return Err(Error::ArityMismatch {
            expected: ensemble.len(),
            found: elements.len(),
        });
    }
    for m in elements {
        if m.dim() != ensemble.dim() {
            return Err(Error::DimensionMismatch {
                expected: ensemble.dim(),
                found: m.dim(),
            });
        }
    }
    Ok(())
}

pub(crate) fn dual_operator_from_elements(
    ensemble: &StateEnsemble,
    elements: &[ComplexMatrix],
) -> ComplexMatrix {
    let products: Vec<ComplexMatrix> = elements
        .iter()
        .enumerate()
        .map(|(x, m)| &ensemble.weighted_state(x) * m)
        .collect();
    sum_matrices(ensemble.dim(), &products).hermitian_part()
}

/// `K = (R + R†)/2` with `R = Σ_x q_x ρ_x M_x`.
pub fn dual_operator(ensemble: &StateEnsemble, povm: &Povm) -> Result<ComplexMatrix> {
    check_elements(ensemble, povm.elements())?;
    Ok(dual_operator_from_elements(ensemble, povm.elements()))
}

fn primal_residual(elements: &[ComplexMatrix]) -> f64 {
    let mut worst = completeness_deviation(elements);
    for m in elements {
        worst = worst.max(m.hermiticity_deviation());
        worst = worst.max(-m.min_eigenvalue());
    }
    worst
}

pub(crate) fn evaluate(
    ensemble: &StateEnsemble,
    elements: &[ComplexMatrix],
    k: &ComplexMatrix,
) -> (DualCertificate, KktReport) {
    let n = ensemble.len();
    let mut sigma = Vec::with_capacity(n);
    let mut slackness = Vec::with_capacity(n);
    let mut dual_feasibility = Vec::with_capacity(n);
    let mut objective = 0.0;
    for (x, m) in elements.iter().enumerate() {
        let s = k - &ensemble.weighted_state(x);
        slackness.push(s.trace_product(m).re);
        dual_feasibility.push(s.min_eigenvalue());
        objective += ensemble.prior(x) * ensemble.state(x).matrix().trace_product(m).re;
        sigma.push(s);
    }
    let trace_k = k.real_trace();
    let report = KktReport {
        primal_residual: primal_residual(elements).max(0.0),
        dual_residual: dual_feasibility
            .iter()
            .map(|&e| (-e).max(0.0))
            .fold(0.0, f64::max),
        slackness_residual: slackness.iter().map(|s| s.abs()).fold(0.0, f64::max),
        gap: trace_k - objective,
    };
    let certificate = DualCertificate {
        k_operator: k.clone(),
        sigma,
        slackness,
        dual_feasibility,
        trace_k,
    };
    (certificate, report)
}

/// Residuals of complementary slackness, dual feasibility, primal feasibility
/// and the duality gap for an arbitrary candidate pair.
///
/// The elements are not required to form a valid POVM; their violation is
/// what `primal_residual` measures.
pub fn kkt_check(
    ensemble: &StateEnsemble,
    elements: &[ComplexMatrix],
    k: &ComplexMatrix,
) -> Result<KktReport> {
    certificate_from_operator(ensemble, elements, k).map(|(_, report)| report)
}

/// Like [`kkt_check`], also returning the certificate built from the given `K`.
pub fn certificate_from_operator(
    ensemble: &StateEnsemble,
    elements: &[ComplexMatrix],
    k: &ComplexMatrix,
) -> Result<(DualCertificate, KktReport)> {
    check_elements(ensemble, elements)?;
    if k.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.dim(),
            found: k.dim(),
        });
    }
    let deviation = k.hermiticity_deviation();
    if deviation > HERMITIAN_TOLERANCE * k.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(evaluate(ensemble, elements, k))
}

/// Builds the full certificate for a candidate POVM using `K` from [`dual_operator`].
pub fn certificate_for(
    ensemble: &StateEnsemble,
    povm: &Povm,
) -> Result<(DualCertificate, KktReport)> {
    let k = dual_operator(ensemble, povm)?;
    Ok(evaluate(ensemble, povm.elements(), &k))
}
