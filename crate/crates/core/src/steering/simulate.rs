//! Monte Carlo run of the message protocol.
//!
//! For message `x'` Alice measures her half of the shared purification with
//! the GHJW measurement for decomposition `x'`; Bob then measures the state
//! he is left with using his detector POVM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ghjw_povm, purify, SteeringDecomposition, MARGINAL_TOLERANCE};
use crate::error::{Error, Result};
use crate::quantum::{hermitian_trace_norm, Povm};

/// Detector statistics, indexed `[outcome x][message x']`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorStatistics {
    pub counts: Vec<Vec<u64>>,
    pub shots_per_message: u64,
    /// `counts / shots_per_message`; `None` when no shots were taken.
    pub probabilities: Option<Vec<Vec<f64>>>,
    /// Per message, how often Alice's outcome steered to the first member.
    pub first_member_hits: Vec<u64>,
}

impl DetectorStatistics {
    pub fn diagonal_sum(&self) -> Option<f64> {
        self.probabilities
            .as_ref()
            .map(|p| (0..p.len()).map(|x| p[x][x]).sum())
    }
}

/// Statistical allowance on `Σ_x P_D(x|x)`: three standard deviations of N
/// independent proportions, each with variance at most `1/(4·shots)`.
pub fn detector_threshold(n: usize, shots: u64) -> f64 {
    3.0 * (n as f64 / (4.0 * shots as f64)).sqrt()
}

/// Two-sided 99.9% allowance for the difference of two proportions estimated
/// from `shots` samples each.
pub fn two_sample_threshold(shots: u64) -> f64 {
    3.29 * (0.5 / shots as f64).sqrt()
}

/// Largest `|P_D(x|x') − P_D(x|x'')|` over outcomes and pairs of messages.
pub fn message_dependence(stats: &DetectorStatistics) -> Option<f64> {
    let p = stats.probabilities.as_ref()?;
    let mut worst: f64 = 0.0;
    for row in p {
        for i in 0..row.len() {
            for j in i + 1..row.len() {
                worst = worst.max((row[i] - row[j]).abs());
            }
        }
    }
    Some(worst)
}

fn check_inputs(ensembles: &[SteeringDecomposition], bob_povm: &Povm) -> Result<()> {
    let n = ensembles.len();
    if n == 0 {
        return Err(Error::InvalidDecomposition("no messages".into()));
    }
    if bob_povm.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            found: bob_povm.len(),
        });
    }
    let dim = ensembles[0].dim();
    for d in ensembles.iter().chain(std::iter::once(&ensembles[0])) {
        if d.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d.dim(),
            });
        }
    }
    if bob_povm.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bob_povm.dim(),
        });
    }
    for d in &ensembles[1..] {
        let residual = hermitian_trace_norm(&(d.target.matrix() - ensembles[0].target.matrix()));
        if residual > MARGINAL_TOLERANCE {
            return Err(Error::TargetMismatch { residual });
        }
    }
    Ok(())
}

/// `P(x|x') = Σ_y r_y tr[τ_y M_x]`, indexed `[x][x']`.
pub fn exact_detector_probabilities(
    ensembles: &[SteeringDecomposition],
    bob_povm: &Povm,
) -> Result<Vec<Vec<f64>>> {
    check_inputs(ensembles, bob_povm)?;
    let n = ensembles.len();
    Ok((0..n)
        .map(|x| {
            ensembles
                .iter()
                .map(|d| {
                    d.members
                        .iter()
                        .map(|(r, tau)| r * tau.matrix().trace_product(bob_povm.element(x)).re)
                        .sum()
                })
                .collect()
        })
        .collect())
}

fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut total = 0.0;
    weights
        .into_iter()
        .map(|w| {
            total += w.max(0.0);
            total
        })
        .collect()
}

/// Inverse CDF: first index with `u < cdf[i]`, the last index if none.
fn sample(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("non-empty distribution");
    let u = u * total;
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Alice's outcome distribution for one message, with Bob's conditional
/// detector distribution and the member steered to for each outcome.
struct MessageSampler {
    alice: Vec<f64>,
    bob: Vec<Vec<f64>>,
    steers_first: Vec<bool>,
}

/// Samples `shots` rounds per message from a single seeded stream.
pub fn simulate_protocol(
    ensembles: &[SteeringDecomposition],
    bob_povm: &Povm,
    shots: u64,
    seed: u64,
) -> Result<DetectorStatistics> {
    check_inputs(ensembles, bob_povm)?;
    let n = ensembles.len();
    let state = purify(&ensembles[0].target);

    let mut samplers = Vec::with_capacity(n);
    for d in ensembles {
        let measurement = ghjw_povm(&state, d)?;
        let mut alice = Vec::new();
        let mut bob = Vec::new();
        for element in measurement.povm.elements() {
            let steered = state.steer(element)?;
            let weight = steered.real_trace().max(0.0);
            alice.push(weight);
            let born = bob_povm.elements().iter().map(|m| {
                if weight > 0.0 {
                    steered.trace_product(m).re / weight
                } else {
                    1.0 / n as f64
                }
            });
            bob.push(cumulative(born));
        }
        samplers.push(MessageSampler {
            alice: cumulative(alice),
            bob,
            steers_first: measurement.member.iter().map(|m| *m == Some(0)).collect(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; n]; n];
    let mut first_member_hits = vec![0u64; n];
    for (message, sampler) in samplers.iter().enumerate() {
        for _ in 0..shots {
            let outcome = sample(&sampler.alice, rng.gen::<f64>());
            if sampler.steers_first[outcome] {
                first_member_hits[message] += 1;
            }
            let detected = sample(&sampler.bob[outcome], rng.gen::<f64>());
            counts[detected][message] += 1;
        }
    }
    let probabilities = (shots > 0).then(|| {
        counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / shots as f64).collect())
            .collect()
    });
    log::debug!("simulated {shots} shots for each of {n} messages");
    Ok(DetectorStatistics {
        counts,
        shots_per_message: shots,
        probabilities,
        first_member_hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nosignaling::{detector_nosignaling_check, steering_structure};
    use crate::quantum::random::{random_ensemble, random_povm};
    use crate::quantum::{DensityMatrix, StateEnsemble};
    use crate::solver::{solve, SolverOptions};
    use crate::steering::certificate_decompositions;
    use num_complex::Complex64;

    fn pure(a: f64, b: f64) -> DensityMatrix {
        DensityMatrix::pure(&[Complex64::new(a, 0.0), Complex64::new(b, 0.0)]).unwrap()
    }

    fn setup(ens: &StateEnsemble) -> (Vec<SteeringDecomposition>, Povm) {
        let r = solve(ens, &SolverOptions::default()).unwrap();
        let s = steering_structure(ens, &r.certificate).unwrap();
        (certificate_decompositions(&s, ens).unwrap(), r.povm)
    }

    #[test]
    fn inverse_cdf_uses_strict_comparison() {
        let cdf = [0.25, 0.5, 1.0];
        assert_eq!(sample(&cdf, 0.0), 0);
        assert_eq!(sample(&cdf, 0.25), 1);
        assert_eq!(sample(&cdf, 0.49), 1);
        assert_eq!(sample(&cdf, 0.5), 2);
        assert_eq!(sample(&[0.0, 1.0], 0.0), 1);
    }

    #[test]
    fn orthogonal_pair_saturates() {
        let ens = StateEnsemble::uniform(vec![pure(1.0, 0.0), pure(0.0, 1.0)]).unwrap();
        let (decompositions, povm) = setup(&ens);
        let shots = 100_000;
        let stats = simulate_protocol(&decompositions, &povm, shots, 11).unwrap();
        for column in 0..2 {
            assert_eq!(stats.counts[0][column] + stats.counts[1][column], shots);
        }
        // p = (½, ½): message x steers to ρ_x half the time, otherwise to the other state.
        let p = stats.probabilities.as_ref().unwrap();
        let sd = (0.25 / shots as f64).sqrt();
        assert!((p[0][0] - 0.5).abs() < 3.0 * sd);
        assert!((p[1][1] - 0.5).abs() < 3.0 * sd);
        let sum = stats.diagonal_sum().unwrap();
        assert!((sum - 1.0).abs() <= detector_threshold(2, shots));
        let exact = exact_detector_probabilities(&decompositions, &povm).unwrap();
        assert!((exact[0][0] + exact[1][1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_detector_sees_one_over_n() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(3);
        let ens = random_ensemble(3, 2, &mut rng);
        let (decompositions, _) = setup(&ens);
        let shots = 60_000;
        let stats = simulate_protocol(&decompositions, &Povm::uniform(3, 2), shots, 4).unwrap();
        let sd = (0.25 / shots as f64).sqrt();
        for row in stats.probabilities.as_ref().unwrap() {
            for &v in row {
                assert!((v - 1.0 / 3.0).abs() < 4.0 * sd);
            }
        }
    }

    #[test]
    fn zero_shots_leave_probabilities_undefined() {
        let ens = StateEnsemble::uniform(vec![pure(1.0, 0.0), pure(0.0, 1.0)]).unwrap();
        let (decompositions, povm) = setup(&ens);
        let stats = simulate_protocol(&decompositions, &povm, 0, 0).unwrap();
        assert!(stats.counts.iter().flatten().all(|&c| c == 0));
        assert!(stats.probabilities.is_none());
        assert!(detector_nosignaling_check(&stats, 1e-9).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(8);
        let ens = random_ensemble(3, 3, &mut rng);
        let (decompositions, povm) = setup(&ens);
        let a = simulate_protocol(&decompositions, &povm, 5_000, 99).unwrap();
        let b = simulate_protocol(&decompositions, &povm, 5_000, 99).unwrap();
        let c = simulate_protocol(&decompositions, &povm, 5_000, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn statistics_do_not_depend_on_the_message() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(9);
        let ens = random_ensemble(4, 3, &mut rng);
        let (decompositions, _) = setup(&ens);
        let shots = 50_000;
        for seed in 0..3 {
            let povm = random_povm(4, 3, &mut rng);
            let stats = simulate_protocol(&decompositions, &povm, shots, seed).unwrap();
            assert!(message_dependence(&stats).unwrap() <= two_sample_threshold(shots));
            let (sum, _) = detector_nosignaling_check(&stats, 1e-9).unwrap();
            assert!(sum <= 1.0 + detector_threshold(4, shots));
            let exact = exact_detector_probabilities(&decompositions, &povm).unwrap();
            let exact_sum: f64 = (0..4).map(|x| exact[x][x]).sum();
            assert!(exact_sum <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn first_member_frequency_tracks_steering_probability() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(10);
        let ens = random_ensemble(3, 2, &mut rng);
        let (decompositions, povm) = setup(&ens);
        let shots = 40_000;
        let stats = simulate_protocol(&decompositions, &povm, shots, 1).unwrap();
        for (x, d) in decompositions.iter().enumerate() {
            let freq = stats.first_member_hits[x] as f64 / shots as f64;
            assert!((freq - d.members[0].0).abs() < 4.0 * (0.25 / shots as f64).sqrt());
        }
    }

    #[test]
    fn input_errors() {
        let target = DensityMatrix::maximally_mixed(2);
        let zd = SteeringDecomposition::new(
            target.clone(),
            vec![(0.5, pure(1.0, 0.0)), (0.5, pure(0.0, 1.0))],
        )
        .unwrap();
        let other =
            SteeringDecomposition::new(pure(1.0, 0.0), vec![(1.0, pure(1.0, 0.0))]).unwrap();
        let povm = Povm::uniform(2, 2);
        assert!(matches!(
            simulate_protocol(&[zd.clone(), other], &povm, 10, 0),
            Err(Error::TargetMismatch { .. })
        ));
        assert!(matches!(
            simulate_protocol(&[zd.clone(), zd], &Povm::uniform(3, 2), 10, 0),
            Err(Error::ArityMismatch { .. })
        ));
    }
}
