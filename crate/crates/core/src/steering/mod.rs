//! Remote preparation of decompositions through a shared purification.

mod simulate;

pub use simulate::{
    detector_threshold, exact_detector_probabilities, message_dependence, simulate_protocol,
    two_sample_threshold, DetectorStatistics,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nosignaling::SteeringStructure;
use crate::quantum::{
    hermitian_trace_norm, sum_matrices, validate_povm, ComplexMatrix, DensityMatrix, Povm,
    StateEnsemble,
};

/// Eigenvalues of the reduced state below this fraction of the largest are
/// treated as outside its support.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Tolerance on `Σ r_y τ_y = target` and on the steered marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;
/// Pure components of a member with smaller eigenvalue are dropped.
const COMPONENT_CUTOFF: f64 = 1e-15;
/// A completion element with smaller entries is omitted.
const COMPLETION_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SchmidtTerm {
    pub coefficient: f64,
    pub vector_a: Vec<Complex64>,
    pub vector_b: Vec<Complex64>,
}

/// `|ψ⟩ = Σ_{ab} amplitudes[(a, b)] |a⟩|b⟩`.
#[derive(Debug, Clone)]
pub struct BipartitePureState {
    pub dim_a: usize,
    pub dim_b: usize,
    pub amplitudes: DMatrix<Complex64>,
    /// Sorted by descending coefficient.
    pub schmidt: Vec<SchmidtTerm>,
}

impl BipartitePureState {
    /// `tr_A |ψ⟩⟨ψ| = Ψᵀ Ψ̄`.
    pub fn reduced_b(&self) -> ComplexMatrix {
        let psi = &self.amplitudes;
        ComplexMatrix::new(psi.transpose() * psi.conjugate()).expect("finite amplitudes")
    }

    /// `tr_A[(M ⊗ I)|ψ⟩⟨ψ|] = Ψᵀ Mᵀ Ψ̄`, the subnormalized state Bob is left with.
    pub fn steer(&self, alice_element: &ComplexMatrix) -> Result<ComplexMatrix> {
        if alice_element.dim() != self.dim_a {
            return Err(Error::DimensionMismatch {
                expected: self.dim_a,
                found: alice_element.dim(),
            });
        }
        let psi = &self.amplitudes;
        ComplexMatrix::new(
            psi.transpose() * alice_element.as_matrix().transpose() * psi.conjugate(),
        )
    }
}

/// Purification on `A = C^rank`: `ψ_{ab} = √λ_a e_a[b]` for the eigenpairs of `rho`.
pub fn purify(rho: &DensityMatrix) -> BipartitePureState {
    let eig = rho.matrix().eigh();
    let dim_b = rho.dim();
    let largest = eig.max().max(0.0);
    let mut kept: Vec<(f64, Vec<Complex64>)> = (0..dim_b)
        .rev()
        .filter(|&i| eig.values[i] > RANK_CUTOFF * largest)
        .map(|i| (eig.values[i], eig.vector(i)))
        .collect();
    let total: f64 = kept.iter().map(|(l, _)| l).sum();
    for (l, _) in kept.iter_mut() {
        *l /= total;
    }
    let dim_a = kept.len();
    let amplitudes = DMatrix::from_fn(dim_a, dim_b, |a, b| kept[a].1[b] * kept[a].0.sqrt());
    let schmidt = kept
        .into_iter()
        .enumerate()
        .map(|(a, (l, e))| {
            let mut basis = vec![Complex64::new(0.0, 0.0); dim_a];
            basis[a] = Complex64::new(1.0, 0.0);
            SchmidtTerm {
                coefficient: l.sqrt(),
                vector_a: basis,
                vector_b: e,
            }
        })
        .collect();
    BipartitePureState {
        dim_a,
        dim_b,
        amplitudes,
        schmidt,
    }
}

/// `target = Σ_y r_y τ_y`.
#[derive(Debug, Clone)]
pub struct SteeringDecomposition {
    pub target: DensityMatrix,
    pub members: Vec<(f64, DensityMatrix)>,
}

impl SteeringDecomposition {
    pub fn new(target: DensityMatrix, members: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidDecomposition("no members".into()));
        }
        for (y, (r, tau)) in members.iter().enumerate() {
            if r.is_nan() || *r <= 0.0 || r.is_infinite() {
                return Err(Error::InvalidDecomposition(format!("weight {y} is {r}")));
            }
            if tau.dim() != target.dim() {
                return Err(Error::DimensionMismatch {
                    expected: target.dim(),
                    found: tau.dim(),
                });
            }
        }
        let total: f64 = members.iter().map(|(r, _)| r).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDecomposition(format!(
                "weights sum to {total}"
            )));
        }
        let decomposition = Self { target, members };
        let residual = decomposition.residual();
        if residual > MARGINAL_TOLERANCE {
            return Err(Error::TargetMismatch { residual });
        }
        Ok(decomposition)
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// `Σ_y r_y τ_y`.
    pub fn average(&self) -> ComplexMatrix {
        let parts: Vec<ComplexMatrix> = self
            .members
            .iter()
            .map(|(r, tau)| tau.matrix().scale(*r))
            .collect();
        sum_matrices(self.dim(), &parts)
    }

    /// `‖Σ_y r_y τ_y − target‖`.
    pub fn residual(&self) -> f64 {
        hermitian_trace_norm(&(&self.average() - self.target.matrix()))
    }
}

/// Alice's measurement together with the member each outcome steers to.
#[derive(Debug, Clone)]
pub struct SteeringMeasurement {
    pub povm: Povm,
    /// `Some(y)` for a pure component of member `y`, `None` for the completion.
    pub member: Vec<Option<usize>>,
}

impl SteeringMeasurement {
    /// `tr_A[(Σ_{outcomes of y} M ⊗ I)|ψ⟩⟨ψ|]`, which should equal `r_y τ_y`.
    pub fn steered_member(&self, state: &BipartitePureState, y: usize) -> Result<ComplexMatrix> {
        let elements: Vec<&ComplexMatrix> = self
            .povm
            .elements()
            .iter()
            .zip(&self.member)
            .filter(|(_, m)| **m == Some(y))
            .map(|(e, _)| e)
            .collect();
        let combined = sum_matrices(state.dim_a, elements);
        state.steer(&combined)
    }
}

/// GHJW measurement on A steering B to each `τ_y` with probability `r_y`.
///
/// A pure component `w|ω⟩` becomes `v v†` with `v_a = √w ⟨ω|e_a⟩ / √λ_a` in
/// the Schmidt basis; a PSD completion `I − Σ M` is appended if nonzero.
pub fn ghjw_povm(
    state: &BipartitePureState,
    decomposition: &SteeringDecomposition,
) -> Result<SteeringMeasurement> {
    if decomposition.dim() != state.dim_b {
        return Err(Error::DimensionMismatch {
            expected: state.dim_b,
            found: decomposition.dim(),
        });
    }
    let residual = hermitian_trace_norm(&(&state.reduced_b() - decomposition.target.matrix()));
    if residual > MARGINAL_TOLERANCE {
        return Err(Error::MarginalMismatch { residual });
    }

    let mut elements = Vec::new();
    let mut member = Vec::new();
    for (y, (r, tau)) in decomposition.members.iter().enumerate() {
        let eig = tau.matrix().eigh();
        for k in (0..eig.values.len()).rev() {
            let weight = r * eig.values[k];
            if weight <= COMPONENT_CUTOFF {
                continue;
            }
            let omega = eig.vector(k);
            let mut outside = omega.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let v: Vec<Complex64> = state
                .schmidt
                .iter()
                .map(|term| {
                    let overlap: Complex64 = term
                        .vector_b
                        .iter()
                        .zip(&omega)
                        .map(|(e, w)| e.conj() * w)
                        .sum();
                    outside -= overlap.norm_sqr();
                    overlap.conj() * (weight.sqrt() / term.coefficient)
                })
                .collect();
            if weight * outside > MARGINAL_TOLERANCE {
                return Err(Error::UnsteerableWeight {
                    index: y,
                    reason: format!(
                        "weight {:.3e} lies outside the support of the target",
                        weight * outside
                    ),
                });
            }
            elements.push(ComplexMatrix::projector(&v));
            member.push(Some(y));
        }
    }
    let completion = &ComplexMatrix::identity(state.dim_a) - &sum_matrices(state.dim_a, &elements);
    if completion.max_abs() > COMPLETION_CUTOFF {
        let min_eigenvalue = completion.min_eigenvalue();
        if min_eigenvalue < -MARGINAL_TOLERANCE {
            let index = decomposition.members.len();
            return Err(Error::UnsteerableWeight {
                index,
                reason: format!("completion has eigenvalue {min_eigenvalue:.3e}"),
            });
        }
        elements.push(completion.hermitian_part());
        member.push(None);
    }
    let povm = validate_povm(elements)?;
    Ok(SteeringMeasurement { povm, member })
}

/// One decomposition of `K̃` per message: `p_x ρ_x + (1 − p_x) σ̂_x`.
///
/// Members with zero weight are dropped, so a vanishing complement leaves
/// `K̃ = ρ_x`.
pub fn certificate_decompositions(
    structure: &SteeringStructure,
    ensemble: &StateEnsemble,
) -> Result<Vec<SteeringDecomposition>> {
    (0..ensemble.len())
        .map(|x| {
            let mut members = Vec::with_capacity(2);
            if structure.p[x] > 0.0 {
                members.push((structure.p[x], ensemble.state(x).clone()));
            }
            if let Some(c) = &structure.complementary[x] {
                if c.weight > 0.0 {
                    members.push((c.weight, c.state.clone()));
                }
            }
            let total: f64 = members.iter().map(|(r, _)| r).sum();
            for (r, _) in members.iter_mut() {
                *r /= total;
            }
            SteeringDecomposition::new(structure.normalized_k.clone(), members)
        })
        .collect()
}

/// Largest `‖Σ_y r_y τ_y − Σ_y r'_y τ'_y‖` over pairs of decompositions.
pub fn marginal_indistinguishability_check(ensembles: &[SteeringDecomposition]) -> f64 {
    let averages: Vec<ComplexMatrix> = ensembles.iter().map(|d| d.average()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..averages.len() {
        for j in i + 1..averages.len() {
            worst = worst.max(hermitian_trace_norm(&(&averages[i] - &averages[j])));
        }
    }
    worst
}
