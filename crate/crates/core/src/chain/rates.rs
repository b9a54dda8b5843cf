use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use super::enumerate_moves;
use crate::tree::{enumerate_cladograms_with_cap, LabelledShape};
use crate::{Error, Result};

pub const RATE_MATRIX_CAP: usize = 7;

/// Generator of the chain on labelled m-cladograms.
#[derive(Clone, Debug)]
pub struct RateMatrix {
    pub m: usize,
    /// Canonical shapes, sorted by key.
    pub states: Vec<LabelledShape>,
    /// `rates[s][s']` = number of moves from `s` landing on `s'`; diagonal
    /// is minus the row total.
    pub rates: Vec<Vec<i64>>,
}

impl RateMatrix {
    pub fn index_of(&self, s: &LabelledShape) -> Option<usize> {
        self.states.binary_search(s).ok()
    }

    pub fn is_symmetric(&self) -> bool {
        let k = self.states.len();
        (0..k).all(|i| (0..k).all(|j| self.rates[i][j] == self.rates[j][i]))
    }

    pub fn row_sums_zero(&self) -> bool {
        self.rates.iter().all(|r| r.iter().sum::<i64>() == 0)
    }

    /// Whether `prod_i (-Q - lambda_i I) = 0` in exact integer arithmetic,
    /// i.e. the spectrum of `-Q` lies in `lambdas`.
    pub fn spectrum_within(&self, lambdas: &[i64]) -> bool {
        let k = self.states.len();
        let neg: Vec<Vec<i128>> = self
            .rates
            .iter()
            .map(|r| r.iter().map(|&x| -(x as i128)).collect())
            .collect();
        let mut acc: Vec<Vec<i128>> = (0..k)
            .map(|i| (0..k).map(|j| i128::from(i == j)).collect())
            .collect();
        for &l in lambdas {
            let mut f = neg.clone();
            for (i, row) in f.iter_mut().enumerate() {
                row[i] -= l as i128;
            }
            let mut next = vec![vec![0i128; k]; k];
            for i in 0..k {
                for t in 0..k {
                    if acc[i][t] == 0 {
                        continue;
                    }
                    for j in 0..k {
                        next[i][j] += acc[i][t] * f[t][j];
                    }
                }
            }
            acc = next;
        }
        acc.iter().all(|r| r.iter().all(|&x| x == 0))
    }
}

/// Exact integer generator over canonical m-cladograms, `3 <= m <= 7`.
pub fn rate_matrix(m: usize) -> Result<RateMatrix> {
    if m > RATE_MATRIX_CAP {
        return Err(Error::CapExceeded {
            what: "m",
            value: m as u128,
            cap: RATE_MATRIX_CAP as u128,
        });
    }
    if m < 3 {
        return Err(Error::TooSmall(format!(
            "rate matrix needs m >= 3, got {m}"
        )));
    }
    let states = enumerate_cladograms_with_cap(m, RATE_MATRIX_CAP)?;
    let index: HashMap<&str, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.key(), i))
        .collect();
    let k = states.len();
    let mut rates = vec![vec![0i64; k]; k];
    for (i, s) in states.iter().enumerate() {
        let t = s.to_cladogram()?;
        for (_, next) in enumerate_moves(&t) {
            let j = index[next.full_shape().key()];
            if j != i {
                rates[i][j] += 1;
                rates[i][i] -= 1;
            }
        }
    }
    Ok(RateMatrix { m, states, rates })
}

/// Smallest non-zero eigenvalue of `-Q` (symmetric eigen-decomposition).
pub fn spectral_gap(q: &RateMatrix) -> Result<f64> {
    if !q.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let eig = eigenvalues(q);
    eig.get(1)
        .copied()
        .ok_or_else(|| Error::TooSmall("one-state chain has no gap".into()))
}

/// Eigenvalues of `-Q`, ascending.
pub fn eigenvalues(q: &RateMatrix) -> Vec<f64> {
    let k = q.states.len();
    let a = DMatrix::from_fn(k, k, |i, j| -(q.rates[i][j] as f64));
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}
