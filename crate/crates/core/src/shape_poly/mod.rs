//! Shape polynomials `Phi^{m,s}(x)`: the probability that m independent
//! uniform leaves span the labelled cladogram `s`, and the generators acting
//! on them.
//!
//! Counts are exact integers over `N^m`; conversion to `f64` happens last.

mod count;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainState, RateMatrix};
use crate::rng::{replicate_rng, sub_seed};
use crate::stats::compensated_sum;
use crate::tree::{
    delete_leaf_label, shape, uniform_cladogram, Cladogram, LabelledShape, RootedView, Topology,
};
use crate::{Error, Result};

pub use count::{phi_count_all_tuples, phi_count_enumerate, DP_CAP, ENUMERATION_CAP};

/// `N^m Phi^{m,s}(t)`; zero for shapes with a multi-labelled leaf.
pub fn phi_count(t: &Cladogram, s: &LabelledShape) -> Result<u128> {
    if !s.is_cladogram() {
        return Ok(0);
    }
    count::phi_count(t, t.rooted(), s)
}

pub(crate) fn phi_count_state(t: &ChainState, s: &LabelledShape) -> Result<u128> {
    let rv = RootedView::build(t, 1);
    count::phi_count(t, &rv, s)
}

fn check_m(m: usize, s: &LabelledShape) -> Result<()> {
    if s.m() != m {
        return Err(Error::InvalidArgument(format!(
            "shape has {} labels, expected m = {m}",
            s.m()
        )));
    }
    Ok(())
}

fn n_pow(n: usize, m: usize) -> f64 {
    (n as f64).powi(m as i32)
}

/// `Phi^{m,s}(t)` exactly, as ordered distinct m-tuples with shape `s` over `N^m`.
pub fn phi_exact(t: &Cladogram, m: usize, s: &LabelledShape) -> Result<f64> {
    check_m(m, s)?;
    Ok(phi_count(t, s)? as f64 / n_pow(t.n(), m))
}

/// Monte Carlo estimate of `Phi^{m,s}(t)` from i.i.d. uniform leaf tuples.
pub fn phi_mc<R: Rng + ?Sized>(
    t: &Cladogram,
    m: usize,
    s: &LabelledShape,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check_m(m, s)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "n_samples must be at least 1".into(),
        ));
    }
    let mut hits = 0usize;
    let mut tuple = vec![0usize; m];
    for _ in 0..n_samples {
        for x in tuple.iter_mut() {
            *x = rng.random_range(1..=t.n());
        }
        if shape(t, &tuple)? == *s {
            hits += 1;
        }
    }
    let n = n_samples as f64;
    let p = hits as f64 / n;
    let se = if n_samples < 2 {
        0.0
    } else {
        (p * (1.0 - p) * n / (n - 1.0)).sqrt() / n.sqrt()
    };
    Ok((p, se))
}

/// A finite linear combination of shape indicators.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShapePolynomial {
    pub terms: Vec<(f64, LabelledShape)>,
}

impl ShapePolynomial {
    pub fn single(s: LabelledShape) -> Self {
        ShapePolynomial {
            terms: vec![(1.0, s)],
        }
    }

    pub fn constant(c: f64) -> Self {
        // the 1-label shape spans every single-point sample: Phi = 1
        let one = LabelledShape::from_tree(&[vec![]], &[vec![1]], 1)
            .unwrap()
            .0;
        ShapePolynomial {
            terms: vec![(c, one)],
        }
    }

    pub fn push(&mut self, c: f64, s: LabelledShape) {
        self.terms.push((c, s));
    }

    pub fn evaluate(&self, t: &Cladogram) -> Result<f64> {
        let vals: Result<Vec<f64>> = self
            .terms
            .iter()
            .map(|(c, s)| Ok(c * phi_term(t, s)?))
            .collect();
        Ok(compensated_sum(vals?))
    }
}

/// Phi for a term that may be the constant shape.
fn phi_term(t: &Cladogram, s: &LabelledShape) -> Result<f64> {
    if s.m() == 1 {
        return Ok(1.0);
    }
    Ok(phi_count(t, s)? as f64 / n_pow(t.n(), s.m()))
}

/// `sum_{(u,e)} [count(t^{(u,e)}) - count(t)]`, the generator in count units.
pub fn omega_n_bruteforce_count(t: &Cladogram, s: &LabelledShape) -> Result<i128> {
    if s.m() == 1 || !s.is_cladogram() {
        return Ok(0);
    }
    let before = phi_count(t, s)? as i128;
    let base = ChainState::new(t);
    let per_leaf: Result<Vec<i128>> = (1..=t.n())
        .into_par_iter()
        .map(|u| {
            let mut st = base.clone();
            let mut acc = 0i128;
            for e in 0..st.n_edges() {
                if let Some(back) = st.apply(u, e) {
                    acc += phi_count_state(&st, s)? as i128 - before;
                    st.apply(u, back);
                }
            }
            Ok(acc)
        })
        .collect();
    Ok(per_leaf?.into_iter().sum())
}

/// `Omega_N P(t)` by summing over all `N (2N - 3)` moves.
pub fn omega_n_bruteforce(t: &Cladogram, p: &ShapePolynomial) -> Result<f64> {
    let vals: Result<Vec<f64>> = p
        .terms
        .iter()
        .map(|(c, s)| Ok(c * omega_n_bruteforce_count(t, s)? as f64 / n_pow(t.n(), s.m())))
        .collect();
    Ok(compensated_sum(vals?))
}

/// Sum over k of the counts of `s` with leaf k deleted, each in units of
/// `N^{m-1}`.
fn deletion_counts(t: &Cladogram, s: &LabelledShape) -> Result<i128> {
    let mut total = 0i128;
    for k in 1..=s.m() as u32 {
        total += phi_count(t, &delete_leaf_label(s, k)?)? as i128;
    }
    Ok(total)
}

fn check_generator_shape(m: usize, s: &LabelledShape) -> Result<()> {
    check_m(m, s)?;
    if m < 3 {
        return Err(Error::TooSmall(format!("generator needs m >= 3, got {m}")));
    }
    if !s.is_cladogram() {
        return Err(Error::NotACladogram);
    }
    Ok(())
}

/// Exact discrete generator in units of `N^{-m}`:
/// `(N - m + 1) sum_k c(s_k) - m (2m - 5) c(s)`, with `s_k` the deletion of
/// label k. In probability units this is
/// `(1 - (m-1)/N) sum_k Phi^{m-1,s_k} - m(2m-5) Phi^{m,s}`.
pub fn omega_n_closedform_count(t: &Cladogram, s: &LabelledShape) -> Result<i128> {
    check_generator_shape(s.m(), s)?;
    let m = s.m() as i128;
    let n = t.n() as i128;
    Ok((n - m + 1) * deletion_counts(t, s)? - m * (2 * m - 5) * phi_count(t, s)? as i128)
}

/// Closed form on a chain state, given the deletions `s_k` of `s`.
pub(crate) fn closedform_count_state(
    st: &ChainState,
    s: &LabelledShape,
    deletions: &[LabelledShape],
) -> Result<i128> {
    let rv = RootedView::build(st, 1);
    let m = s.m() as i128;
    let n = st.n_leaves() as i128;
    let mut del = 0i128;
    for d in deletions {
        del += count::phi_count(st, &rv, d)? as i128;
    }
    Ok((n - m + 1) * del - m * (2 * m - 5) * count::phi_count(st, &rv, s)? as i128)
}

pub(crate) fn deletions(s: &LabelledShape) -> Result<Vec<LabelledShape>> {
    (1..=s.m() as u32)
        .map(|k| delete_leaf_label(s, k))
        .collect()
}

pub fn omega_n_closedform(t: &Cladogram, m: usize, s: &LabelledShape) -> Result<f64> {
    check_generator_shape(m, s)?;
    Ok(omega_n_closedform_count(t, s)? as f64 / n_pow(t.n(), m))
}

/// The limit generator `sum_k Phi^{m-1,s_k} - m(2m-5) Phi^{m,s}`.
pub fn omega_ald(t: &Cladogram, m: usize, s: &LabelledShape) -> Result<f64> {
    check_generator_shape(m, s)?;
    let n = t.n();
    let del = deletion_counts(t, s)? as f64 / n_pow(n, m - 1);
    let own = phi_count(t, s)? as f64 / n_pow(n, m);
    let c = (m * (2 * m - 5)) as f64;
    Ok(del - c * own)
}

/// `Omega_Ald P` as a shape polynomial.
pub fn omega_ald_terms(p: &ShapePolynomial) -> Result<ShapePolynomial> {
    let mut out = ShapePolynomial::default();
    for (c, s) in &p.terms {
        if s.m() == 1 {
            continue;
        }
        let m = s.m();
        check_generator_shape(m, s)?;
        for k in 1..=m as u32 {
            out.push(*c, delete_leaf_label(s, k)?);
        }
        out.push(-c * (m * (2 * m - 5)) as f64, s.clone());
    }
    Ok(out)
}

/// Secondary route, in units of `N^{-m}`: the m-cladogram generator acting on
/// the sampled shape, `sum_r c(r) Q[r][s]`. Tuples with a repeated leaf span
/// no cladogram and contribute nothing.
pub fn omega_ald_dual_count(t: &Cladogram, s: &LabelledShape, q: &RateMatrix) -> Result<i128> {
    let j = q
        .index_of(s)
        .ok_or_else(|| Error::InvalidArgument(format!("{s} is not a state of the rate matrix")))?;
    let mut total = 0i128;
    for (i, r) in q.states.iter().enumerate() {
        let rate = q.rates[i][j] as i128;
        if rate != 0 {
            total += rate * phi_count(t, r)? as i128;
        }
    }
    Ok(total)
}

pub fn omega_ald_dual(t: &Cladogram, s: &LabelledShape, q: &RateMatrix) -> Result<f64> {
    Ok(omega_ald_dual_count(t, s, q)? as f64 / n_pow(t.n(), s.m()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub shape_key: String,
    /// Max over sampled trees of `|Omega_N Phi - Omega_Ald Phi|`.
    pub gap: f64,
    pub mean_gap: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Generator gap against the bound `7 m (m - 1) / N` on uniform trees. Tree
/// `i` at size N is drawn from stream `i` of `sub_seed(seed, N)`.
pub fn generator_gap(
    n_list: &[usize],
    m: usize,
    shapes: &[LabelledShape],
    trees_per_n: usize,
    seed: u64,
) -> Result<Vec<GapRow>> {
    let mut rows = vec![];
    for &n in n_list {
        let trees: Result<Vec<Cladogram>> = (0..trees_per_n)
            .map(|i| uniform_cladogram(n, &mut replicate_rng(sub_seed(seed, n as u64), i as u64)))
            .collect();
        let trees = trees?;
        for s in shapes {
            let gaps: Result<Vec<f64>> = trees
                .par_iter()
                .map(|t| Ok((omega_n_closedform(t, m, s)? - omega_ald(t, m, s)?).abs()))
                .collect();
            let gaps = gaps?;
            let gap = gaps.iter().copied().fold(0.0, f64::max);
            let bound = (7 * m * (m - 1)) as f64 / n as f64;
            rows.push(GapRow {
                n,
                m,
                shape_key: s.key().to_string(),
                gap,
                mean_gap: compensated_sum(gaps.iter().copied()) / gaps.len().max(1) as f64,
                bound,
                pass: gap <= bound,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::rate_matrix;
    use crate::tree::{enumerate_cladograms, validate_cladogram};

    fn cherry() -> Cladogram {
        validate_cladogram(4, &[(1, 5), (2, 5), (5, 6), (3, 6), (4, 6)]).unwrap()
    }

    fn falling(n: u128, m: u128) -> u128 {
        (0..m).map(|i| n - i).product()
    }

    #[test]
    fn three_point_total() {
        let mut rng = replicate_rng(1, 0);
        for n in 3..20 {
            let t = uniform_cladogram(n, &mut rng).unwrap();
            let c = phi_count(&t, &LabelledShape::tripod()).unwrap();
            assert_eq!(c, falling(n as u128, 3));
            let p = phi_exact(&t, 3, &LabelledShape::tripod()).unwrap();
            let want = (1.0 - 1.0 / n as f64) * (1.0 - 2.0 / n as f64);
            assert!((p - want).abs() < 1e-15);
        }
    }

    #[test]
    fn cherry_against_all_tuples() {
        let t = cherry();
        let s = t.full_shape();
        let c = phi_count(&t, &s).unwrap();
        assert_eq!(c, phi_count_all_tuples(&t, &s).unwrap());
        assert_eq!(c, 8);
        assert_eq!(phi_exact(&t, 4, &s).unwrap(), 8.0 / 256.0);
    }

    #[test]
    fn multi_labelled_is_zero() {
        let t = cherry();
        let s = shape(&t, &[1, 1, 2]).unwrap();
        assert_eq!(phi_exact(&t, 3, &s).unwrap(), 0.0);
    }

    #[test]
    fn dp_matches_enumeration() {
        let mut rng = replicate_rng(2, 0);
        for n in [5usize, 7, 9, 11] {
            let t = uniform_cladogram(n, &mut rng).unwrap();
            for m in 2..=6.min(n) {
                let mut total = 0u128;
                for s in enumerate_cladograms(m).unwrap() {
                    let dp = phi_count(&t, &s).unwrap();
                    assert_eq!(
                        dp,
                        phi_count_enumerate(&t, &s, ENUMERATION_CAP).unwrap(),
                        "n={n} m={m} {s}"
                    );
                    total += dp;
                }
                assert_eq!(total, falling(n as u128, m as u128));
            }
        }
    }

    #[test]
    fn dp_matches_all_tuples_small() {
        let mut rng = replicate_rng(3, 0);
        let t = uniform_cladogram(6, &mut rng).unwrap();
        for s in enumerate_cladograms(4).unwrap() {
            assert_eq!(
                phi_count(&t, &s).unwrap(),
                phi_count_all_tuples(&t, &s).unwrap()
            );
        }
    }

    #[test]
    fn generator_routes_agree() {
        let mut rng = replicate_rng(4, 0);
        for n in [3usize, 5, 8, 11] {
            let t = uniform_cladogram(n, &mut rng).unwrap();
            for m in 3..=6.min(n + 1) {
                for s in enumerate_cladograms(m).unwrap().iter().take(12) {
                    let brute = omega_n_bruteforce_count(&t, s).unwrap();
                    let closed = omega_n_closedform_count(&t, s).unwrap();
                    assert_eq!(brute, closed, "n={n} m={m} {s}");
                    if n == 3 {
                        assert_eq!(brute, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn dual_route_is_the_closed_form() {
        let mut rng = replicate_rng(5, 0);
        for m in 4..=6 {
            let q = rate_matrix(m).unwrap();
            for n in [6usize, 9, 13] {
                let t = uniform_cladogram(n, &mut rng).unwrap();
                for s in q.states.iter().take(10) {
                    let dual = omega_ald_dual_count(&t, s, &q).unwrap();
                    assert_eq!(dual, omega_n_closedform_count(&t, s).unwrap());
                    // primary - dual = (m - 1) sum_k c(s_k), in units of N^{-m}
                    let n_i = n as i128;
                    let del = deletion_counts(&t, s).unwrap();
                    let primary =
                        n_i * del - (m * (2 * m - 5)) as i128 * phi_count(&t, s).unwrap() as i128;
                    assert_eq!(primary - dual, (m as i128 - 1) * del);
                }
            }
        }
    }

    #[test]
    fn constants_are_killed() {
        let t = cherry();
        let p = ShapePolynomial::constant(2.5);
        assert_eq!(p.evaluate(&t).unwrap(), 2.5);
        assert_eq!(omega_n_bruteforce(&t, &p).unwrap(), 0.0);
        assert!(omega_ald_terms(&p).unwrap().terms.is_empty());
    }

    #[test]
    fn term_list_evaluates_to_omega_ald() {
        let mut rng = replicate_rng(6, 0);
        let t = uniform_cladogram(14, &mut rng).unwrap();
        let shapes = enumerate_cladograms(5).unwrap();
        let mut p = ShapePolynomial::default();
        p.push(0.5, shapes[0].clone());
        p.push(-2.0, shapes[7].clone());
        let direct = 0.5 * omega_ald(&t, 5, &shapes[0]).unwrap()
            - 2.0 * omega_ald(&t, 5, &shapes[7]).unwrap();
        let via_terms = omega_ald_terms(&p).unwrap().evaluate(&t).unwrap();
        assert!((direct - via_terms).abs() < 1e-12);
        // linearity of the brute-force generator
        let lin = 0.5
            * omega_n_bruteforce(&t, &ShapePolynomial::single(shapes[0].clone())).unwrap()
            - 2.0 * omega_n_bruteforce(&t, &ShapePolynomial::single(shapes[7].clone())).unwrap();
        assert!((lin - omega_n_bruteforce(&t, &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn limit_generator_at_three_points() {
        let mut rng = replicate_rng(7, 0);
        let t = uniform_cladogram(50, &mut rng).unwrap();
        let s = LabelledShape::tripod();
        let a = omega_ald(&t, 3, &s).unwrap();
        // 3 Phi^2 - 3 Phi^3 = 3 (1 - 1/N) (2/N)
        let n = 50.0;
        assert!((a - 3.0 * (1.0 - 1.0 / n) * (2.0 / n)).abs() < 1e-12);
        assert_eq!(omega_n_closedform(&t, 3, &s).unwrap(), 0.0);
    }

    #[test]
    fn monte_carlo_estimate() {
        let mut rng = replicate_rng(8, 0);
        let t = uniform_cladogram(30, &mut rng).unwrap();
        let shapes = enumerate_cladograms(6).unwrap();
        for s in shapes.iter().take(5) {
            let exact = phi_exact(&t, 6, s).unwrap();
            let (est, se) = phi_mc(&t, 6, s, 20_000, &mut rng).unwrap();
            assert!(
                (est - exact).abs() <= 4.0 * se + 1e-12,
                "{est} {exact} {se}"
            );
        }
        assert!(phi_mc(&t, 6, &shapes[0], 0, &mut rng).is_err());
        let a = phi_mc(&t, 6, &shapes[0], 100, &mut replicate_rng(1, 1)).unwrap();
        let b = phi_mc(&t, 6, &shapes[0], 100, &mut replicate_rng(1, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gap_within_bound() {
        let shapes = enumerate_cladograms(4).unwrap();
        let rows = generator_gap(&[8, 16], 4, &shapes, 3, 1).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.pass));
    }
}
