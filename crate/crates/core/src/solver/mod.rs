//! Optimal measurement for minimum-error discrimination.
//!
//! The primal problem maximizes `Σ_x q_x tr[ρ_x M_x]` over POVMs. It is
//! solved by the fixed-point map
//!
//! ```text
//!     G    = Σ_y A_y M_y A_y            (A_y = q_y ρ_y)
//!     M_x ← G^{-1/2} A_x M_x A_x G^{-1/2}
//! ```
//!
//! which keeps every iterate a POVM. Each iterate is scored with the dual
//! operator `K = sym(Σ_x A_x M_x)` and its complementary operators
//! `σ_x = K − A_x`; a run is converged once slackness, dual feasibility and
//! the duality gap are all within `kkt_tolerance`.

mod certificate;
mod oracle;

use log::debug;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use certificate::{
    certificate_for, certificate_from_operator, dual_operator, kkt_check, DualCertificate,
    KktReport,
};
pub use oracle::oracle_grid;

use crate::error::{Error, Result};
use crate::quantum::{
    guess_value, sum_matrices, validate_povm, ComplexMatrix, Povm, StateEnsemble,
};

/// Priors below this are dropped before iterating.
pub const ZERO_PRIOR: f64 = 1e-15;
/// Relative eigenvalue cutoff for the pseudo-inverse square root.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Magnitude of the seeded perturbation of the `I/N` start.
pub const INITIAL_NOISE: f64 = 1e-6;
/// After convergence, keep iterating until the score falls below
/// `kkt_tolerance * POLISH_FACTOR` or stops improving for `STALL_WINDOW` steps.
pub const POLISH_FACTOR: f64 = 1e-2;
pub const STALL_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    /// Weight of the previous iterate in the update, in `[0, 1)`.
    pub damping: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            kkt_tolerance: 1e-9,
            damping: 0.0,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.kkt_tolerance.is_nan()
            || self.kkt_tolerance <= 0.0
            || self.kkt_tolerance.is_infinite()
        {
            return Err(Error::InvalidOptions(format!(
                "kkt_tolerance must be positive, got {}",
                self.kkt_tolerance
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidOptions(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidOptions(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DiscriminationResult {
    pub guess_probability: f64,
    pub povm: Povm,
    pub certificate: DualCertificate,
    pub kkt: KktReport,
    pub iterations: usize,
    pub converged: bool,
}

struct Iterate {
    iteration: usize,
    elements: Vec<ComplexMatrix>,
    certificate: DualCertificate,
    kkt: KktReport,
}

fn seeded_noise(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = ComplexMatrix::new(raw).expect("finite").hermitian_part();
    let scale = h.max_abs();
    if scale > 0.0 {
        h.scale(INITIAL_NOISE / scale)
    } else {
        h
    }
}

/// Restores `Σ M_x = I`: congruence by `T^{-1/2}` on the support of the sum,
/// then an even split of whatever is left over.
fn reproject(elements: &mut [ComplexMatrix], dim: usize) {
    let total = sum_matrices(dim, elements.iter());
    let s = total.pinv_sqrt(PINV_CUTOFF);
    for m in elements.iter_mut() {
        *m = (&(&s * m) * &s).hermitian_part();
    }
    let deficit =
        (&ComplexMatrix::identity(dim) - &sum_matrices(dim, elements.iter())).hermitian_part();
    let share = deficit.scale(1.0 / elements.len() as f64);
    for m in elements.iter_mut() {
        *m = &*m + &share;
    }
}

fn fixed_point_step(
    weighted: &[ComplexMatrix],
    elements: &[ComplexMatrix],
    damping: f64,
    dim: usize,
) -> Vec<ComplexMatrix> {
    let sandwiched: Vec<ComplexMatrix> = weighted
        .iter()
        .zip(elements)
        .map(|(a, m)| &(a * m) * a)
        .collect();
    let g = sum_matrices(dim, sandwiched.iter());
    let s = g.pinv_sqrt(PINV_CUTOFF);
    let mut next: Vec<ComplexMatrix> = sandwiched
        .iter()
        .zip(elements)
        .map(|(b, old)| {
            let fresh = (&(&s * b) * &s).hermitian_part();
            if damping > 0.0 {
                &fresh.scale(1.0 - damping) + &old.scale(damping)
            } else {
                fresh
            }
        })
        .collect();
    reproject(&mut next, dim);
    next
}

/// Expands active-state elements back to the full arity with zero blocks.
fn expand(
    active: &[usize],
    n: usize,
    dim: usize,
    elements: &[ComplexMatrix],
) -> Vec<ComplexMatrix> {
    let mut full = vec![ComplexMatrix::zeros(dim); n];
    for (k, &x) in active.iter().enumerate() {
        full[x] = elements[k].clone();
    }
    full
}

/// Computes the optimal guessing probability and its certificate.
///
/// A run that exhausts `max_iterations` still returns the best iterate seen,
/// with `converged = false`.
pub fn solve(ensemble: &StateEnsemble, options: &SolverOptions) -> Result<DiscriminationResult> {
    options.validate()?;
    let n = ensemble.len();
    let dim = ensemble.dim();
    let active: Vec<usize> = (0..n)
        .filter(|&x| ensemble.prior(x) >= ZERO_PRIOR)
        .collect();
    let weighted: Vec<ComplexMatrix> = active.iter().map(|&x| ensemble.weighted_state(x)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let uniform = ComplexMatrix::identity(dim).scale(1.0 / active.len() as f64);
    let mut current: Vec<ComplexMatrix> = active
        .iter()
        .map(|_| &uniform + &seeded_noise(dim, &mut rng))
        .collect();
    reproject(&mut current, dim);

    let score_of = |iteration: usize, elements: &[ComplexMatrix]| {
        let full = expand(&active, n, dim, elements);
        let k = certificate::dual_operator_from_elements(ensemble, &full);
        let (certificate, kkt) = certificate::evaluate(ensemble, &full, &k);
        Iterate {
            iteration,
            elements: full,
            certificate,
            kkt,
        }
    };

    let tolerance = options.kkt_tolerance;
    let mut best = score_of(0, &current);
    let mut iterations = 0;
    if !(active.len() == 1 || best.kkt.score() <= tolerance * POLISH_FACTOR) {
        let mut converged_at = None;
        for it in 1..=options.max_iterations {
            iterations = it;
            current = fixed_point_step(&weighted, &current, options.damping, dim);
            let candidate = score_of(it, &current);
            let score = candidate.kkt.score();
            if score < best.kkt.score() {
                best = candidate;
            }
            if converged_at.is_none() && score <= tolerance {
                converged_at = Some(it);
            }
            if converged_at.is_some() {
                let polished = best.kkt.score() <= tolerance * POLISH_FACTOR;
                let stalled = it - best.iteration >= STALL_WINDOW;
                if polished || stalled {
                    break;
                }
            }
        }
        debug!(
            "fixed point: {} iterations, converged at {:?}, best score {:e} at iteration {}",
            iterations,
            converged_at,
            best.kkt.score(),
            best.iteration
        );
    }

    let converged = best.kkt.certifies(tolerance);
    let povm = validate_povm(best.elements)?;
    let guess_probability = guess_value(ensemble, &povm)?;
    Ok(DiscriminationResult {
        guess_probability,
        povm,
        certificate: best.certificate,
        kkt: best.kkt,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helstrom::helstrom;
    use crate::quantum::random::{random_ensemble, random_ket};
    use crate::quantum::DensityMatrix;
    use std::f64::consts::PI;

    fn real_ket(a: f64, b: f64) -> Vec<Complex64> {
        vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
    }

    fn trine() -> StateEnsemble {
        StateEnsemble::uniform(
            (0..3)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 3.0;
                    DensityMatrix::pure(&real_ket((t / 2.0).cos(), (t / 2.0).sin())).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn options_are_validated() {
        let bad = SolverOptions {
            kkt_tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            damping: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn orthogonal_states_are_discriminated_perfectly() {
        let basis: Vec<Vec<Complex64>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        let ens = StateEnsemble::new(
            vec![0.1, 0.6, 0.3],
            basis
                .iter()
                .map(|k| DensityMatrix::pure(k).unwrap())
                .collect(),
        )
        .unwrap();
        let r = solve(&ens, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.guess_probability - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trine_reaches_two_thirds() {
        let r = solve(&trine(), &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.guess_probability - 2.0 / 3.0).abs() < 1e-6);
        assert!((r.certificate.trace_k - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn two_state_instances_match_helstrom() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..40 {
            let ens = random_ensemble(2, 2 + k % 3, &mut rng);
            let r = solve(&ens, &SolverOptions::default()).unwrap();
            assert!(r.converged);
            let h = helstrom(&ens).unwrap();
            assert!((r.guess_probability - h.value).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_priors_get_zero_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let states: Vec<DensityMatrix> = (0..3)
            .map(|_| DensityMatrix::pure(&random_ket(2, &mut rng)).unwrap())
            .collect();
        let ens = StateEnsemble::new(vec![0.4, 0.0, 0.6], states).unwrap();
        let r = solve(&ens, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.povm.element(1).max_abs(), 0.0);
        let two = StateEnsemble::new(
            vec![0.4, 0.6],
            vec![ens.state(0).clone(), ens.state(2).clone()],
        )
        .unwrap();
        assert!((r.guess_probability - helstrom(&two).unwrap().value).abs() < 1e-6);
    }

    #[test]
    fn single_active_state_takes_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ens = StateEnsemble::new(
            vec![1.0, 0.0],
            vec![
                DensityMatrix::pure(&random_ket(3, &mut rng)).unwrap(),
                DensityMatrix::pure(&random_ket(3, &mut rng)).unwrap(),
            ],
        )
        .unwrap();
        let r = solve(&ens, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.guess_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_states_fall_back_to_largest_prior() {
        let rho = DensityMatrix::maximally_mixed(2);
        let ens =
            StateEnsemble::new(vec![0.2, 0.5, 0.3], vec![rho.clone(), rho.clone(), rho]).unwrap();
        let r = solve(&ens, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.guess_probability - 0.5).abs() < 1e-9);
    }

    #[test]
    fn runs_are_deterministic_for_a_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ens = random_ensemble(4, 3, &mut rng);
        let opts = SolverOptions {
            seed: 99,
            ..Default::default()
        };
        let a = solve(&ens, &opts).unwrap();
        let b = solve(&ens, &opts).unwrap();
        assert_eq!(a.povm, b.povm);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.guess_probability.to_bits(), b.guess_probability.to_bits());
    }

    #[test]
    fn exhausted_budget_is_flagged_not_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ens = random_ensemble(5, 3, &mut rng);
        let opts = SolverOptions {
            max_iterations: 1,
            kkt_tolerance: 1e-14,
            ..Default::default()
        };
        let r = solve(&ens, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.kkt.score() > 0.0);
    }

    #[test]
    fn damping_still_converges() {
        let opts = SolverOptions {
            damping: 0.3,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ens = random_ensemble(3, 2, &mut rng);
        let r = solve(&ens, &opts).unwrap();
        let plain = solve(&ens, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.guess_probability - plain.guess_probability).abs() < 1e-8);
    }
}
