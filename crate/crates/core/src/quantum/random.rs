//! Seeded generators for random states and instances.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::matrix::{sum_matrices, ComplexMatrix};
use super::states::{validate_density, validate_povm, DensityMatrix, Povm, StateEnsemble};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling in rand_distr for one distribution.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Haar-random pure state as a normalized ket.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Random density matrix `G G† / tr(G G†)` with `G` a `dim × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = DMatrix::from_fn(dim, rank.max(1), |_, _| {
        Complex64::new(gaussian(rng), gaussian(rng))
    });
    let rho = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| rho[(i, i)].re).sum();
    let m = ComplexMatrix::new(rho.map(|z| z / tr)).expect("finite by construction");
    validate_density(m).expect("Ginibre construction is a density matrix")
}

/// Random probability vector with strictly positive entries.
pub fn random_priors<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut priors: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // Push the rounding remainder into the last entry.
    let head: f64 = priors[..count - 1].iter().sum();
    priors[count - 1] = 1.0 - head;
    priors
}

/// Random instance with random priors and random ranks in `1..=dim`.
pub fn random_ensemble<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> StateEnsemble {
    let priors = random_priors(count, rng);
    let states = (0..count)
        .map(|_| {
            let rank = rng.gen_range(1..=dim);
            random_density(dim, rank, rng)
        })
        .collect();
    StateEnsemble::new(priors, states).expect("valid by construction")
}

/// Random instance made of pure states.
pub fn random_pure_ensemble<R: Rng + ?Sized>(
    count: usize,
    dim: usize,
    rng: &mut R,
) -> StateEnsemble {
    let priors = random_priors(count, rng);
    let states = (0..count)
        .map(|_| DensityMatrix::pure(&random_ket(dim, rng)).expect("normalized ket"))
        .collect();
    StateEnsemble::new(priors, states).expect("valid by construction")
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(gaussian(rng), gaussian(rng))
    });
    ComplexMatrix::new(g).expect("finite").hermitian_part()
}

/// Random POVM: random PSD operators `W_x` pushed to `S^{-1/2} W_x S^{-1/2}`
/// with `S = Σ W_x`. If `S` is singular its kernel projector goes to the last
/// outcome.
pub fn random_povm<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Povm {
    let raw: Vec<ComplexMatrix> = (0..count)
        .map(|_| {
            let rank = rng.gen_range(1..=dim);
            random_density(dim, rank, rng).into_matrix()
        })
        .collect();
    let s = sum_matrices(dim, &raw).pinv_sqrt(1e-12);
    let mut elements: Vec<ComplexMatrix> = raw
        .iter()
        .map(|w| (&(&s * w) * &s).hermitian_part())
        .collect();
    let kernel = &ComplexMatrix::identity(dim) - &sum_matrices(dim, &elements);
    let last = elements.len() - 1;
    elements[last] = (&elements[last] + &kernel).hermitian_part();
    validate_povm(elements).expect("square-root normalization yields a POVM")
}
