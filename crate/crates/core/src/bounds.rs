//! Closed-form cyclic lower bound on the guessing probability.
//!
//! For any cyclic ordering `x_1, …, x_N` of the states,
//!
//! ```text
//!     P_guess ≥ (1/N) (1 + ½ Σ_k ‖q_{x_k} ρ_{x_k} − q_{x_{k+1}} ρ_{x_{k+1}}‖)
//! ```
//!
//! with indices taken cyclically. For two states it is the Helstrom value.

use crate::error::{Error, Result};
use crate::quantum::{hermitian_trace_norm, is_permutation, StateEnsemble};

/// Largest ensemble for which all cyclic orderings are enumerated.
pub const MAX_CYCLIC_STATES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub lower_bound: f64,
    pub ordering: Vec<usize>,
    /// `‖q_{x_k} ρ_{x_k} − q_{x_{k+1}} ρ_{x_{k+1}}‖` along the ordering.
    pub pair_terms: Vec<f64>,
    pub optimal_value: Option<f64>,
}

impl BoundReport {
    fn from_terms(ordering: Vec<usize>, pair_terms: Vec<f64>) -> Self {
        let n = ordering.len() as f64;
        let lower_bound = (1.0 + 0.5 * pair_terms.iter().sum::<f64>()) / n;
        Self {
            lower_bound,
            ordering,
            pair_terms,
            optimal_value: None,
        }
    }

    pub fn with_optimal_value(mut self, value: f64) -> Self {
        self.optimal_value = Some(value);
        self
    }
}

fn pair_norm_table(ensemble: &StateEnsemble) -> Vec<Vec<f64>> {
    let n = ensemble.len();
    let weighted: Vec<_> = (0..n).map(|x| ensemble.weighted_state(x)).collect();
    let mut table = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let v = hermitian_trace_norm(&(&weighted[x] - &weighted[y]));
            table[x][y] = v;
            table[y][x] = v;
        }
    }
    table
}

fn cyclic_terms(table: &[Vec<f64>], ordering: &[usize]) -> Vec<f64> {
    let n = ordering.len();
    (0..n)
        .map(|k| table[ordering[k]][ordering[(k + 1) % n]])
        .collect()
}

/// The cyclic bound in the given ordering, input order by default.
pub fn lower_bound(ensemble: &StateEnsemble, ordering: Option<&[usize]>) -> Result<BoundReport> {
    let n = ensemble.len();
    let ordering: Vec<usize> = match ordering {
        Some(o) if !is_permutation(o, n) => return Err(Error::BadPermutation { n }),
        Some(o) => o.to_vec(),
        None => (0..n).collect(),
    };
    let table = pair_norm_table(ensemble);
    let terms = cyclic_terms(&table, &ordering);
    Ok(BoundReport::from_terms(ordering, terms))
}

/// Advances `perm` to the next lexicographic permutation; false when exhausted.
fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Maximizes [`lower_bound`] over cyclic orderings up to rotation and reflection.
///
/// Orderings start at state 0 and satisfy `ordering[1] < ordering[N-1]`; they
/// are visited in lexicographic order and only a strictly larger bound
/// replaces the incumbent, so ties go to the lexicographically smallest.
pub fn best_cyclic_bound(ensemble: &StateEnsemble) -> Result<BoundReport> {
    let n = ensemble.len();
    if n > MAX_CYCLIC_STATES {
        return Err(Error::TooLarge {
            max: MAX_CYCLIC_STATES,
            found: n,
        });
    }
    let table = pair_norm_table(ensemble);
    let mut tail: Vec<usize> = (1..n).collect();
    let mut best: Option<BoundReport> = None;
    loop {
        let reflected_duplicate = tail.len() >= 2 && tail[0] > tail[tail.len() - 1];
        if !reflected_duplicate {
            let mut ordering = Vec::with_capacity(n);
            ordering.push(0);
            ordering.extend_from_slice(&tail);
            let report = BoundReport::from_terms(ordering.clone(), cyclic_terms(&table, &ordering));
            if best
                .as_ref()
                .is_none_or(|b| report.lower_bound > b.lower_bound)
            {
                best = Some(report);
            }
        }
        if !next_permutation(&mut tail) {
            break;
        }
    }
    Ok(best.expect("at least one ordering"))
}
