//! Brute-force grid lower bound for qubit instances.
//!
//! Every candidate evaluated here is an explicit valid POVM, so the best
//! value found is a certified lower bound on the optimum. Two families are
//! searched:
//!
//! * projective measurements `{P_n, I − P_n}` on a polar/azimuthal grid with
//!   step at most `GRID_STEP`, each outcome assigned to its best label;
//! * (N = 3) rank-1 three-outcome POVMs `{(c_k/2)(I + u_k·σ)}` with coplanar
//!   Bloch vectors and closure weights `Σ c_k u_k = 0`, searched on a coarse
//!   grid and refined by local grid search down to `GRID_STEP`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quantum::StateEnsemble;

pub const GRID_STEP: f64 = 0.002;

type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalized(a: Vec3) -> Vec3 {
    let n = dot(&a, &a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// `q_x ρ_x = (t_x I + a_x·σ)/2`.
struct BlochTerm {
    t: f64,
    a: Vec3,
}

fn bloch_terms(ensemble: &StateEnsemble) -> Vec<BlochTerm> {
    (0..ensemble.len())
        .map(|x| {
            let m = ensemble.weighted_state(x);
            let (m00, m01, m10, m11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
            BlochTerm {
                t: m00.re + m11.re,
                // a_k = tr[A σ_k]
                a: [(m01 + m10).re, (m10 - m01).im, m00.re - m11.re],
            }
        })
        .collect()
}

fn direction(theta: f64, phi: f64) -> Vec3 {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

fn projective_best(terms: &[BlochTerm]) -> f64 {
    let polar_steps = (PI / GRID_STEP).ceil() as usize;
    let azimuth_steps = (2.0 * PI / GRID_STEP).ceil() as usize;
    let azimuth: Vec<(f64, f64)> = (0..azimuth_steps)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / azimuth_steps as f64;
            (phi.cos(), phi.sin())
        })
        .collect();
    let mut best = terms.iter().map(|b| b.t).fold(f64::NEG_INFINITY, f64::max);
    for i in 0..=polar_steps {
        let theta = PI * i as f64 / polar_steps as f64;
        let (st, ct) = (theta.sin(), theta.cos());
        for &(cp, sp) in &azimuth {
            let n = [st * cp, st * sp, ct];
            let mut plus = f64::NEG_INFINITY;
            let mut minus = f64::NEG_INFINITY;
            for b in terms {
                let v = 0.5 * (b.t + dot(&b.a, &n));
                plus = plus.max(v);
                minus = minus.max(b.t - v);
            }
            best = best.max(plus + minus);
            if i == 0 || i == polar_steps {
                break;
            }
        }
    }
    best
}

/// Parameters: plane normal (polar, azimuth) and three in-plane angles.
type Params = [f64; 5];

fn three_outcome_value(terms: &[BlochTerm], p: &Params) -> Option<f64> {
    let m = direction(p[0], p[1]);
    let reference = if m[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = normalized(cross(&m, &reference));
    let e2 = cross(&m, &e1);
    let alpha = [p[2], p[3], p[4]];
    let mut c = [
        (alpha[2] - alpha[1]).sin(),
        (alpha[0] - alpha[2]).sin(),
        (alpha[1] - alpha[0]).sin(),
    ];
    let sign = if c[0] + c[1] + c[2] < 0.0 { -1.0 } else { 1.0 };
    for ck in c.iter_mut() {
        *ck *= sign;
        if *ck < 0.0 {
            return None;
        }
    }
    let total = c[0] + c[1] + c[2];
    if total.is_nan() || total <= 1e-12 {
        return None;
    }
    let mut value = 0.0;
    for k in 0..3 {
        let weight = 2.0 * c[k] / total;
        let (ca, sa) = (alpha[k].cos(), alpha[k].sin());
        let u = [
            ca * e1[0] + sa * e2[0],
            ca * e1[1] + sa * e2[1],
            ca * e1[2] + sa * e2[2],
        ];
        value += 0.5 * weight * (terms[k].t + dot(&terms[k].a, &u));
    }
    Some(value)
}

fn three_outcome_best(terms: &[BlochTerm]) -> f64 {
    const COARSE: usize = 24;
    const KEEP: usize = 8;
    let angle_step = 2.0 * PI / COARSE as f64;
    let normal_polar_steps = 8;
    let polar_step = 0.5 * PI / normal_polar_steps as f64;

    let mut candidates: Vec<(f64, Params)> = Vec::new();
    for i in 0..=normal_polar_steps {
        let theta = polar_step * i as f64;
        let azimuths = if i == 0 { 1 } else { 16 };
        for j in 0..azimuths {
            let phi = 2.0 * PI * j as f64 / 16.0;
            for a in 0..COARSE {
                for b in 0..COARSE {
                    for c in 0..COARSE {
                        let p = [
                            theta,
                            phi,
                            angle_step * a as f64,
                            angle_step * b as f64,
                            angle_step * c as f64,
                        ];
                        if let Some(v) = three_outcome_value(terms, &p) {
                            candidates.push((v, p));
                            if candidates.len() >= 4096 {
                                candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
                                candidates.truncate(KEEP);
                            }
                        }
                    }
                }
            }
        }
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
    candidates.truncate(KEEP);

    let mut best = f64::NEG_INFINITY;
    for (mut value, mut params) in candidates {
        let mut steps = [
            polar_step,
            2.0 * PI / 16.0,
            angle_step,
            angle_step,
            angle_step,
        ];
        while steps.iter().any(|&s| s > GRID_STEP / 2.0) {
            let mut improved = false;
            for code in 0..243usize {
                let mut trial = params;
                let mut rest = code;
                for (k, step) in steps.iter().enumerate() {
                    trial[k] += (rest % 3) as f64 * step - step;
                    rest /= 3;
                }
                if let Some(v) = three_outcome_value(terms, &trial) {
                    if v > value {
                        value = v;
                        params = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                for s in steps.iter_mut() {
                    *s *= 0.5;
                }
            }
        }
        best = best.max(value);
    }
    best
}

/// Best guessing probability over the grid families; a lower bound on the optimum.
pub fn oracle_grid(ensemble: &StateEnsemble) -> Result<f64> {
    if ensemble.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: ensemble.dim(),
            reason: "the grid oracle only handles qubits",
        });
    }
    let terms = bloch_terms(ensemble);
    let mut best = projective_best(&terms);
    if terms.len() == 3 {
        best = best.max(three_outcome_best(&terms));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::DensityMatrix;
    use num_complex::Complex64;

    fn ket(a: f64, b: f64) -> Vec<Complex64> {
        vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
    }

    #[test]
    fn bloch_terms_reproduce_expectations() {
        // |+i⟩ has Bloch vector (0, 1, 0).
        let s = 0.5f64.sqrt();
        let plus_i =
            DensityMatrix::pure(&[Complex64::new(s, 0.0), Complex64::new(0.0, s)]).unwrap();
        let ens = StateEnsemble::uniform(vec![plus_i, DensityMatrix::maximally_mixed(2)]).unwrap();
        let terms = bloch_terms(&ens);
        assert!((terms[0].t - 0.5).abs() < 1e-15);
        let a = terms[0].a;
        assert!(a[0].abs() < 1e-15 && (a[1] - 0.5).abs() < 1e-15 && a[2].abs() < 1e-15);
    }

    #[test]
    fn orthogonal_pair() {
        let ens = StateEnsemble::uniform(vec![
            DensityMatrix::pure(&ket(1.0, 0.0)).unwrap(),
            DensityMatrix::pure(&ket(0.0, 1.0)).unwrap(),
        ])
        .unwrap();
        assert!((oracle_grid(&ens).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_versus_plus() {
        let s = 0.5f64.sqrt();
        let ens = StateEnsemble::uniform(vec![
            DensityMatrix::pure(&ket(1.0, 0.0)).unwrap(),
            DensityMatrix::pure(&ket(s, s)).unwrap(),
        ])
        .unwrap();
        let v = oracle_grid(&ens).unwrap();
        assert!((v - 0.8536).abs() < 1e-3);
        assert!(v <= 0.5 * (1.0 + 2.0 * 0.125f64.sqrt()) + 1e-12);
    }

    #[test]
    fn trine() {
        let ens = StateEnsemble::uniform(
            (0..3)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 3.0;
                    DensityMatrix::pure(&ket((t / 2.0).cos(), (t / 2.0).sin())).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let v = oracle_grid(&ens).unwrap();
        assert!((v - 0.6667).abs() < 1e-3, "{v}");
        assert!(v <= 2.0 / 3.0 + 1e-12);
    }

    #[test]
    fn rejects_qutrits() {
        let r = DensityMatrix::maximally_mixed(3);
        let ens = StateEnsemble::uniform(vec![r.clone(), r]).unwrap();
        assert!(matches!(
            oracle_grid(&ens),
            Err(Error::UnsupportedDimension { dim: 3, .. })
        ));
    }
}
