//! Steering structures read off a dual certificate.
//!
//! Given `K` with `σ_x = K − q_x ρ_x ⪰ 0`, the normalized operator
//! `K̃ = K / tr K` decomposes in N ways as `p_x ρ_x + (1 − p_x) σ̂_x` with
//! `p_x = q_x / tr K`. Every check here measures how far a certificate is
//! from that picture, in trace norm.

use crate::error::{Error, Result};
use crate::quantum::{
    hermitian_trace_norm, validate_density, ComplexMatrix, DensityMatrix, Povm, StateEnsemble,
};
use crate::solver::DualCertificate;
use crate::steering::DetectorStatistics;

/// Complementary operators with trace below this are recorded as absent.
pub const ABSENT_TRACE: f64 = 1e-12;
/// Certificates whose `σ_x` dips below this eigenvalue are rejected outright.
pub const INFEASIBLE_EIGENVALUE: f64 = -1e-6;
/// Certificate-level checks use this multiple of the solver tolerance.
pub const CERTIFICATE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct ComplementaryState {
    /// `1 − p_x`.
    pub weight: f64,
    pub state: DensityMatrix,
}

#[derive(Debug, Clone)]
pub struct SteeringStructure {
    /// `p_x = q_x / tr K`.
    pub p: Vec<f64>,
    pub normalized_k: DensityMatrix,
    /// `None` where `tr σ_x` is below [`ABSENT_TRACE`].
    pub complementary: Vec<Option<ComplementaryState>>,
    /// `1 / Σ_x p_x`.
    pub bound: f64,
    /// `max_x ‖p_x ρ_x + (1 − p_x) σ̂_x − K̃‖`.
    pub ensemble_residual: f64,
    pub trace_k: f64,
    /// Unnormalized `σ_x`.
    pub sigma: Vec<ComplexMatrix>,
}

fn normalize_complementary(sigma: &ComplexMatrix) -> Result<Option<DensityMatrix>> {
    if sigma.real_trace() < ABSENT_TRACE {
        return Ok(None);
    }
    let clipped = sigma.eigh().map(|x| x.max(0.0));
    let tr = clipped.real_trace();
    if tr < ABSENT_TRACE {
        return Ok(None);
    }
    validate_density(clipped.scale(1.0 / tr)).map(Some)
}

pub fn steering_structure(
    ensemble: &StateEnsemble,
    certificate: &DualCertificate,
) -> Result<SteeringStructure> {
    let n = ensemble.len();
    if certificate.sigma.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            found: certificate.sigma.len(),
        });
    }
    for (index, &min_eigenvalue) in certificate.dual_feasibility.iter().enumerate() {
        if min_eigenvalue < INFEASIBLE_EIGENVALUE {
            return Err(Error::InfeasibleCertificate {
                index,
                min_eigenvalue,
            });
        }
    }
    let trace_k = certificate.trace_k;
    let p: Vec<f64> = ensemble.priors().iter().map(|q| q / trace_k).collect();
    let normalized_k = validate_density(certificate.k_operator.scale(1.0 / trace_k))?;

    let mut complementary = Vec::with_capacity(n);
    let mut ensemble_residual: f64 = 0.0;
    for (x, &px) in p.iter().enumerate() {
        let state = normalize_complementary(&certificate.sigma[x])?;
        let mut rebuilt = ensemble.state(x).matrix().scale(px);
        if let Some(s) = &state {
            rebuilt = &rebuilt + &s.matrix().scale(1.0 - px);
        }
        ensemble_residual =
            ensemble_residual.max(hermitian_trace_norm(&(&rebuilt - normalized_k.matrix())));
        complementary.push(state.map(|state| ComplementaryState {
            weight: 1.0 - px,
            state,
        }));
    }
    let total: f64 = p.iter().sum();
    Ok(SteeringStructure {
        p,
        normalized_k,
        complementary,
        bound: 1.0 / total,
        ensemble_residual,
        trace_k,
        sigma: certificate.sigma.clone(),
    })
}

/// `solved_value − 1/Σ_x p_x`; zero when the no-signaling bound is attained.
pub fn proposition_bound_check(structure: &SteeringStructure, solved_value: f64) -> f64 {
    solved_value - structure.bound
}

/// `tr[σ_x M_x]` for each outcome, using the unnormalized `σ_x`.
pub fn slackness_check(structure: &SteeringStructure, povm: &Povm) -> Result<Vec<f64>> {
    if povm.len() != structure.sigma.len() {
        return Err(Error::ArityMismatch {
            expected: structure.sigma.len(),
            found: povm.len(),
        });
    }
    let dim = structure.normalized_k.dim();
    if povm.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: povm.dim(),
        });
    }
    Ok(structure
        .sigma
        .iter()
        .zip(povm.elements())
        .map(|(s, m)| s.trace_product(m).re)
        .collect())
}

/// `Σ_x p_x tr[ρ_x M_x]`, which no-signaling caps at 1 for every POVM.
pub fn steered_success(
    structure: &SteeringStructure,
    ensemble: &StateEnsemble,
    povm: &Povm,
) -> f64 {
    (0..ensemble.len())
        .map(|x| structure.p[x] * ensemble.state(x).matrix().trace_product(povm.element(x)).re)
        .sum()
}

/// Largest pairwise mismatch `| ‖p_xρ_x − p_yρ_y‖ − ‖(1−p_x)σ_x' − (1−p_y)σ_y'‖ |`,
/// where `(1−p_x)σ_x' = σ_x / tr K` is the weighted complementary operator.
pub fn norm_identity_check(structure: &SteeringStructure, ensemble: &StateEnsemble) -> f64 {
    let n = ensemble.len();
    let steered: Vec<ComplexMatrix> = (0..n)
        .map(|x| ensemble.state(x).matrix().scale(structure.p[x]))
        .collect();
    let complementary: Vec<ComplexMatrix> = structure
        .sigma
        .iter()
        .map(|s| s.scale(1.0 / structure.trace_k))
        .collect();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            let lhs = hermitian_trace_norm(&(&steered[x] - &steered[y]));
            let rhs = hermitian_trace_norm(&(&complementary[x] - &complementary[y]));
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// `(Σ_x P_D(x|x), Σ ≤ 1 + tolerance)`.
pub fn detector_nosignaling_check(
    stats: &DetectorStatistics,
    tolerance: f64,
) -> Result<(f64, bool)> {
    let probabilities = stats
        .probabilities
        .as_ref()
        .ok_or_else(|| Error::MalformedStatistics("no shots were taken".into()))?;
    let n = probabilities.len();
    for (x, row) in probabilities.iter().enumerate() {
        if row.len() != n {
            return Err(Error::MalformedStatistics(format!(
                "row {x} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    for col in 0..n {
        let sum: f64 = probabilities.iter().map(|row| row[col]).sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(Error::MalformedStatistics(format!(
                "column {col} sums to {sum}"
            )));
        }
    }
    let diagonal: f64 = (0..n).map(|x| probabilities[x][x]).sum();
    Ok((diagonal, diagonal <= 1.0 + tolerance))
}
