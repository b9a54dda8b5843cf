use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{rate_matrix, ChainState};
use crate::mass_poly::mean_distance;
use crate::rng::{replicate_rng, sub_seed};
use crate::shape_poly::{closedform_count_state, deletions, phi_count, phi_count_state};
use crate::stats::{compensated_sum, Estimate};
use crate::tree::{
    balanced_cladogram, comb_cladogram, count_cladograms, enumerate_cladograms, uniform_cladogram,
    Cladogram, IntrinsicMetric, LabelledShape, Topology,
};
use crate::{Error, Rational, Result};

/// Where a chain starts.
#[derive(Clone, Debug)]
pub enum Start {
    Comb,
    Balanced,
    Tree(Cladogram),
}

impl Start {
    pub fn tree(&self, n: usize) -> Result<Cladogram> {
        match self {
            Start::Comb => comb_cladogram(n),
            Start::Balanced => balanced_cladogram(n),
            Start::Tree(t) if t.n() == n => Ok(t.clone()),
            Start::Tree(t) => Err(Error::InvalidArgument(format!(
                "start tree has {} leaves, expected {n}",
                t.n()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Start::Comb => "comb",
            Start::Balanced => "balanced",
            Start::Tree(_) => "file",
        }
    }
}

fn n_pow(n: usize, m: usize) -> f64 {
    (n as f64).powi(m as i32)
}

/// `E Phi^{m,s}` under the uniform law, exactly:
/// `(1 / #Clad_m) N! / ((N - m)! N^m)` by exchangeability.
pub fn stationary_phi(n: usize, m: usize) -> f64 {
    let falling: f64 = (0..m).map(|i| (n - i) as f64).product();
    falling / n_pow(n, m) / count_cladograms(m).to_f64().unwrap_or(f64::NAN)
}

/// `E Phi^{m,s}` under the uniform law by averaging over every N-cladogram,
/// as an exact count ratio `(sum_t count(t, s), #Clad_N N^m)`.
pub fn stationary_phi_exhaustive(n: usize, s: &LabelledShape) -> Result<(BigUint, BigUint)> {
    let mut total = BigUint::from(0u32);
    for t in enumerate_cladograms(n)? {
        total += BigUint::from(phi_count(&t.to_cladogram()?, s)?);
    }
    Ok((
        total,
        count_cladograms(n) * BigUint::from(n).pow(s.m() as u32),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingRow {
    pub t: f64,
    pub shape_key: String,
    pub estimate: Estimate,
    pub target: f64,
    pub within_3se: bool,
}

/// Time series of `E Phi^{m,s}(X_t)` for every `s` in `Clad_m`, averaged over
/// independent chains from `start`.
pub fn mixing_experiment(
    n: usize,
    start: &Start,
    m: usize,
    grid: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<MixingRow>> {
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "horizon grid must be ascending and nonnegative".into(),
        ));
    }
    let x0 = start.tree(n)?;
    let shapes = enumerate_cladograms(m)?;
    let master = sub_seed(seed, 0x6d69_78);
    let per_rep: Result<Vec<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(master, r as u64);
            let mut st = ChainState::new(&x0);
            let mut now = 0.0;
            let mut vals = Vec::with_capacity(grid.len() * shapes.len());
            for &t in grid {
                st.advance(t - now, &mut rng);
                now = t;
                for s in &shapes {
                    vals.push(phi_count_state(&st, s)? as f64 / n_pow(n, m));
                }
            }
            Ok(vals)
        })
        .collect();
    let per_rep = per_rep?;
    let target = stationary_phi(n, m);
    let mut rows = vec![];
    for (gi, &t) in grid.iter().enumerate() {
        for (si, s) in shapes.iter().enumerate() {
            let xs: Vec<f64> = per_rep.iter().map(|v| v[gi * shapes.len() + si]).collect();
            let estimate = Estimate::from_samples(&xs);
            rows.push(MixingRow {
                t,
                shape_key: s.key().to_string(),
                estimate,
                target,
                within_3se: estimate.within(target, 3.0, 1e-12),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub start_shape: String,
    pub horizon: f64,
    /// `E_x[Phi^{m,s}(X_t)]` over N-chains from x.
    pub lhs: Estimate,
    /// `E_s[Phi^{m,Y_t}(x)]` over m-chains from s.
    pub rhs: Estimate,
    /// `sum_r Phi^{m,r}(x) P_s(Y_t = r)` through the m-chain semigroup.
    pub semigroup: f64,
    pub replicates: usize,
}

pub const DUALITY_CAP: usize = 6;

/// Both sides of the duality between the tree-valued chain and the chain on
/// m-cladograms.
pub fn duality_check(
    x: &Cladogram,
    s: &LabelledShape,
    horizon: f64,
    replicates: usize,
    seed: u64,
) -> Result<DualityReport> {
    let m = s.m();
    if m > DUALITY_CAP {
        return Err(Error::CapExceeded {
            what: "m",
            value: m as u128,
            cap: DUALITY_CAP as u128,
        });
    }
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon}")));
    }
    let n = x.n();
    let q = rate_matrix(m)?;
    let j = q
        .index_of(s)
        .ok_or_else(|| Error::InvalidArgument(format!("{s} is not an m-cladogram")))?;
    let phi: Vec<f64> = q
        .states
        .iter()
        .map(|r| Ok(phi_count(x, r)? as f64 / n_pow(n, m)))
        .collect::<Result<_>>()?;
    let index: HashMap<&str, usize> = q
        .states
        .iter()
        .enumerate()
        .map(|(i, r)| (r.key(), i))
        .collect();

    let lhs_master = sub_seed(seed, 1);
    let lhs: Result<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut st = ChainState::new(x);
            st.advance(horizon, &mut replicate_rng(lhs_master, r as u64));
            Ok(phi_count_state(&st, s)? as f64 / n_pow(n, m))
        })
        .collect();
    let y0 = s.to_cladogram()?;
    let rhs_master = sub_seed(seed, 2);
    let rhs: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut st = ChainState::new(&y0);
            st.advance(horizon, &mut replicate_rng(rhs_master, r as u64));
            phi[index[st.to_cladogram().full_shape().key()]]
        })
        .collect();

    let k = q.states.len();
    let a = DMatrix::from_fn(k, k, |i, j| q.rates[i][j] as f64);
    let eig = SymmetricEigen::new(a);
    let mut semigroup = 0.0;
    for (i, &p) in phi.iter().enumerate() {
        let mut pij = 0.0;
        for l in 0..k {
            pij += eig.eigenvectors[(i, l)]
                * (horizon * eig.eigenvalues[l]).exp()
                * eig.eigenvectors[(j, l)];
        }
        semigroup += p * pij;
    }
    Ok(DualityReport {
        n,
        m,
        start_shape: s.key().to_string(),
        horizon,
        lhs: Estimate::from_samples(&lhs?),
        rhs: Estimate::from_samples(&rhs),
        semigroup,
        replicates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynkinReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub shape_key: String,
    pub horizon: f64,
    pub phi0: f64,
    pub strata: usize,
    /// Per-replicate `Phi(X_t) - Phi(x0) - int_0^t Omega_N Phi(X_s) ds`.
    pub residual: Estimate,
    pub mean_phi_t: f64,
    pub mean_integral: f64,
}

/// Dynkin's formula for `Phi^{m,s}`: the compensated increment has mean 0.
/// The time integral is estimated without bias by stratified uniform times,
/// one per stratum of length `horizon / strata`.
pub fn dynkin_check(
    x0: &Cladogram,
    s: &LabelledShape,
    horizon: f64,
    replicates: usize,
    strata: usize,
    seed: u64,
) -> Result<DynkinReport> {
    if strata == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidArgument(
            "need strata >= 1 and a positive horizon".into(),
        ));
    }
    let n = x0.n();
    let m = s.m();
    let dels = deletions(s)?;
    let scale = n_pow(n, m);
    let phi0 = phi_count(x0, s)? as f64 / scale;
    let master = sub_seed(seed, 0x64796e);
    let h = horizon / strata as f64;
    let reps: Result<Vec<(f64, f64)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(master, r as u64);
            let mut st = ChainState::new(x0);
            let mut now = 0.0;
            let mut integral = vec![];
            for k in 0..strata {
                let tau = (k as f64 + rng.random::<f64>()) * h;
                st.advance(tau - now, &mut rng);
                now = tau;
                integral.push(closedform_count_state(&st, s, &dels)? as f64 / scale * h);
            }
            st.advance(horizon - now, &mut rng);
            Ok((
                phi_count_state(&st, s)? as f64 / scale,
                compensated_sum(integral),
            ))
        })
        .collect();
    let reps = reps?;
    let residuals: Vec<f64> = reps.iter().map(|(p, i)| p - phi0 - i).collect();
    let nr = reps.len().max(1) as f64;
    Ok(DynkinReport {
        n,
        shape_key: s.key().to_string(),
        horizon,
        phi0,
        strata,
        residual: Estimate::from_samples(&residuals),
        mean_phi_t: compensated_sum(reps.iter().map(|r| r.0)) / nr,
        mean_integral: compensated_sum(reps.iter().map(|r| r.1)) / nr,
    })
}

/// One sampled distance matrix: numerators of `r_mu` over `2 N^3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceSample {
    pub leaves: Vec<usize>,
    pub numerators: Vec<Vec<i128>>,
    pub denominator: i128,
}

impl DistanceSample {
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        let d = self.denominator as f64;
        self.numerators
            .iter()
            .map(|r| r.iter().map(|&x| x as f64 / d).collect())
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        Rational::new(self.numerators[i][j], self.denominator)
    }

    /// Four-point condition on every quadruple, exactly.
    pub fn four_point_holds(&self) -> bool {
        let d = &self.numerators;
        let m = d.len();
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    for l in k + 1..m {
                        let mut s = [d[i][j] + d[k][l], d[i][k] + d[j][l], d[i][l] + d[j][k]];
                        s.sort();
                        if s[1] != s[2] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Matrices `(r_mu(U_i, U_j))` for i.i.d. uniform leaf m-tuples.
pub fn distance_matrix_mc<R: Rng + ?Sized>(
    t: &Cladogram,
    m: usize,
    n_samples: usize,
    rng: &mut R,
) -> Vec<DistanceSample> {
    let metric = IntrinsicMetric::new(t);
    let denominator = 2 * metric.denominator();
    (0..n_samples)
        .map(|_| {
            let leaves: Vec<usize> = (0..m).map(|_| rng.random_range(1..=t.n_leaves())).collect();
            let numerators = leaves
                .iter()
                .map(|&x| leaves.iter().map(|&y| metric.numerator(x, y)).collect())
                .collect();
            DistanceSample {
                leaves,
                numerators,
                denominator,
            }
        })
        .collect()
}

/// Exact per-tree mean distance averaged over uniform N-cladograms.
pub fn mean_distance_average(n: usize, trees: usize, seed: u64) -> Result<Estimate> {
    let master = sub_seed(seed, 0x6d64);
    let vals: Result<Vec<f64>> = (0..trees)
        .into_par_iter()
        .map(|r| {
            let d = mean_distance(&uniform_cladogram(n, &mut replicate_rng(master, r as u64))?);
            Ok(*d.numer() as f64 / *d.denom() as f64)
        })
        .collect();
    Ok(Estimate::from_samples(&vals?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_value_is_exact() {
        for n in [5, 6] {
            for m in [4, 5] {
                for s in enumerate_cladograms(m).unwrap().iter().take(4) {
                    let (num, den) = stationary_phi_exhaustive(n, s).unwrap();
                    // (1/#Clad_m) N!/(N-m)! / N^m  <=>  num #Clad_m = #Clad_N N!/(N-m)!
                    let falling: u64 = (0..m as u64).map(|i| n as u64 - i).product();
                    assert_eq!(
                        num * count_cladograms(m) * BigUint::from(n).pow(m as u32),
                        den * BigUint::from(falling)
                    );
                }
            }
        }
        assert!(
            (stationary_phi(200, 4)
                - (1.0 / 3.0) * (1.0 - 1.0 / 200.0) * (1.0 - 2.0 / 200.0) * (1.0 - 3.0 / 200.0))
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn mixing_at_time_zero() {
        let shapes = enumerate_cladograms(4).unwrap();
        let rows = mixing_experiment(12, &Start::Comb, 4, &[0.0, 0.5], 20, 3).unwrap();
        let comb = comb_cladogram(12).unwrap();
        for (row, s) in rows.iter().zip(&shapes) {
            assert_eq!(row.t, 0.0);
            assert_eq!(
                row.estimate.mean,
                phi_count(&comb, s).unwrap() as f64 / 12f64.powi(4)
            );
            assert_eq!(row.estimate.std_error, 0.0);
        }
        assert_eq!(rows.len(), 6);
        assert!(mixing_experiment(12, &Start::Balanced, 4, &[1.0, 0.5], 2, 3).is_err());
    }

    #[test]
    fn mixing_reaches_target() {
        let rows = mixing_experiment(20, &Start::Balanced, 4, &[3.0], 400, 4).unwrap();
        assert!(rows.iter().all(
            |r| r.within_3se || (r.estimate.mean - r.target).abs() < 4.0 * r.estimate.std_error
        ));
    }

    #[test]
    fn duality_at_zero_and_later() {
        let mut rng = replicate_rng(41, 0);
        let x = uniform_cladogram(30, &mut rng).unwrap();
        let s = enumerate_cladograms(4).unwrap()[2].clone();
        let r0 = duality_check(&x, &s, 0.0, 10, 1).unwrap();
        let exact = phi_count(&x, &s).unwrap() as f64 / 30f64.powi(4);
        assert_eq!(r0.lhs.mean, exact);
        assert_eq!(r0.rhs.mean, exact);
        assert!((r0.semigroup - exact).abs() < 1e-12);
        let r = duality_check(&x, &s, 0.05, 2000, 2).unwrap();
        for side in [r.lhs, r.rhs] {
            assert!(
                side.within(r.semigroup, 4.0, 1e-12),
                "{side:?} vs {}",
                r.semigroup
            );
            assert!((0.0..=1.0).contains(&side.mean));
        }
        let long = duality_check(&x, &s, 50.0, 1, 2).unwrap();
        assert!((long.semigroup - stationary_phi(30, 4)).abs() < 1e-9);
    }

    #[test]
    fn dynkin_mean_zero() {
        let mut rng = replicate_rng(42, 0);
        let x = uniform_cladogram(15, &mut rng).unwrap();
        let s = enumerate_cladograms(4).unwrap()[0].clone();
        let d = dynkin_check(&x, &s, 0.3, 600, 8, 5).unwrap();
        assert!(d.residual.within(0.0, 4.0, 1e-12), "{d:?}");
    }

    #[test]
    fn distance_samples() {
        let star = Cladogram::star();
        let mut rng = replicate_rng(43, 0);
        let samples = distance_matrix_mc(&star, 2, 3000, &mut rng);
        let far = samples
            .iter()
            .filter(|s| s.get(0, 1) == Rational::new(13, 27))
            .count();
        let zero = samples
            .iter()
            .filter(|s| s.get(0, 1) == Rational::from_integer(0))
            .count();
        assert_eq!(far + zero, 3000);
        assert!((far as f64 / 3000.0 - 6.0 / 9.0).abs() < 0.04);
        let t = uniform_cladogram(40, &mut rng).unwrap();
        for s in distance_matrix_mc(&t, 5, 200, &mut rng) {
            for i in 0..5 {
                assert_eq!(s.numerators[i][i], 0);
                for j in 0..5 {
                    assert_eq!(s.numerators[i][j], s.numerators[j][i]);
                }
            }
            assert!(s.four_point_holds());
        }
    }

    #[test]
    fn mean_distance_average_is_reproducible() {
        let a = mean_distance_average(50, 40, 9).unwrap();
        assert_eq!(a, mean_distance_average(50, 40, 9).unwrap());
        assert!((a.mean - 0.4).abs() < 0.1);
    }
}
