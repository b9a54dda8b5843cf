use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;

use crate::tree::{
    count_cladograms, edge_mass_profile, enumerate_cladograms, EdgeMassProfile, LabelledShape,
};
use crate::{Error, Rational, Result};

/// `#Clad_k` and `k!` for `k <= max`.
pub struct QnTables {
    clad: Vec<BigUint>,
    fact: Vec<BigUint>,
}

impl QnTables {
    pub fn new(max: usize) -> QnTables {
        let mut clad = vec![BigUint::one(); max.max(3) + 1];
        for k in 3..clad.len() {
            // #Clad_k = #Clad_{k-1} (2k - 5)
            clad[k] = &clad[k - 1] * BigUint::from(2 * k as u64 - 5);
        }
        let mut fact = vec![BigUint::one(); max + 1];
        for k in 1..=max {
            fact[k] = &fact[k - 1] * BigUint::from(k as u64);
        }
        QnTables { clad, fact }
    }

    pub fn clad(&self, k: usize) -> &BigUint {
        &self.clad[k]
    }

    /// `#Clad_N q_N(profile)`: the number of N-cladograms whose first m
    /// leaves span `s` with the given leaf counts per edge.
    pub fn count(&self, p: &EdgeMassProfile) -> Result<BigUint> {
        let n = p.n();
        let m = p.shape.m();
        if n + 2 >= self.clad.len() || n >= self.fact.len() {
            return Err(Error::InvalidArgument(format!(
                "tables too small for N = {n}"
            )));
        }
        let mut num = self.fact[n - m].clone();
        let mut den = BigUint::one();
        for (e, &c) in p.counts.iter().enumerate() {
            let c = c as usize;
            if p.shape.edge_is_external(e) {
                num *= &self.clad[c + 1];
                den *= &self.fact[c - 1];
            } else {
                num *= &self.clad[c + 2];
                den *= &self.fact[c];
            }
        }
        let (q, r) = num.div_rem(&den);
        if !r.is_zero() {
            return Err(Error::InternalInconsistency(
                "profile count is not an integer".into(),
            ));
        }
        Ok(q)
    }
}

fn big_ratio(num: BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den.clone()))
}

/// Probability that the first m leaves of a uniform N-cladogram span
/// `profile.shape` with leaf counts `profile.counts` per edge.
pub fn q_n_exact(profile: &EdgeMassProfile) -> Result<BigRational> {
    let n = profile.n();
    let tables = QnTables::new(n + 2);
    Ok(big_ratio(tables.count(profile)?, tables.clad(n)))
}

/// Every admissible profile of `s` with total N: external edges at least 1,
/// internal edges at least 0.
pub fn profiles(n: usize, s: &LabelledShape) -> Result<Vec<EdgeMassProfile>> {
    if !s.is_cladogram() {
        return Err(Error::BadProfile("shape is not a cladogram".into()));
    }
    let k = s.n_edges();
    let low: Vec<u32> = (0..k).map(|e| u32::from(s.edge_is_external(e))).collect();
    let min: usize = low.iter().map(|&x| x as usize).sum();
    if n < min {
        return Ok(vec![]);
    }
    let mut out = vec![];
    let mut cur = low.clone();
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, low: &[u32], out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = low[i] + left;
            out.push(cur.clone());
            return;
        }
        for extra in 0..=left {
            cur[i] = low[i] + extra;
            rec(i + 1, left - extra, cur, low, out);
        }
    }
    let mut raw = vec![];
    rec(0, (n - min) as u32, &mut cur, &low, &mut raw);
    for counts in raw {
        out.push(EdgeMassProfile::new(s.clone(), counts, n)?);
    }
    Ok(out)
}

/// `sum over profiles of q_N`, exactly.
pub fn q_n_profile_sum(n: usize, s: &LabelledShape) -> Result<BigRational> {
    let tables = QnTables::new(n + 2);
    let mut total = BigUint::zero();
    for p in profiles(n, s)? {
        total += tables.count(&p)?;
    }
    Ok(big_ratio(total, tables.clad(n)))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct QnRow {
    pub counts: Vec<u32>,
    /// `#Clad_N q_N`, an integer.
    pub trees: String,
    pub q: String,
    pub value: f64,
}

/// Every profile of `s` at size N with its exact probability, and the exact
/// total as a reduced fraction.
pub fn q_n_table(n: usize, s: &LabelledShape) -> Result<(Vec<QnRow>, BigRational)> {
    let tables = QnTables::new(n + 2);
    let den = tables.clad(n);
    let mut total = BigUint::zero();
    let mut rows = vec![];
    for p in profiles(n, s)? {
        let c = tables.count(&p)?;
        rows.push(QnRow {
            q: big_ratio(c.clone(), den).to_string(),
            value: ratio_to_f64(&c, den),
            trees: c.to_string(),
            counts: p.counts,
        });
        total += c;
    }
    Ok((rows, big_ratio(total, den)))
}

/// Compare `#Clad_N q_N` with a census of all N-cladograms for every shape
/// in `Clad_m` and every profile. Returns (profiles compared, mismatches).
pub fn q_n_exhaustive_check(n: usize, m: usize) -> Result<(usize, usize)> {
    let trees = enumerate_cladograms(n)?;
    let mut census: HashMap<(String, Vec<u32>), u64> = HashMap::new();
    for s in &trees {
        let p = edge_mass_profile(&s.to_cladogram()?, m)?;
        *census
            .entry((p.shape.key().to_string(), p.counts))
            .or_default() += 1;
    }
    let tables = QnTables::new(n + 2);
    let (mut compared, mut bad) = (0, 0);
    for s in enumerate_cladograms(m)? {
        for p in profiles(n, &s)? {
            let want = tables.count(&p)?;
            let got = census
                .get(&(s.key().to_string(), p.counts.clone()))
                .copied()
                .unwrap_or(0);
            compared += 1;
            if BigUint::from(got) != want {
                bad += 1;
            }
        }
    }
    Ok((compared, bad))
}

/// Ratio of big integers as a float, safe beyond the f64 range of each.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    let sa = num.bits().saturating_sub(60);
    let sb = den.bits().saturating_sub(60);
    let a = (num >> sa).to_f64().unwrap_or(f64::NAN);
    let b = (den >> sb).to_f64().unwrap_or(f64::NAN);
    a / b * 2f64.powi(sa as i32 - sb as i32)
}

/// Density of `Dir(1/2, ..., 1/2)` on the simplex with `eta.len()`
/// components, against Lebesgue measure on the first `K - 1` coordinates.
pub fn dirichlet_density(eta: &[f64]) -> f64 {
    let k = eta.len() as f64;
    let log_c = ln_gamma(k / 2.0) - k * ln_gamma(0.5);
    (log_c - 0.5 * eta.iter().map(|x| x.ln()).sum::<f64>()).exp()
}

/// `E prod eta_i^{a_i}` under `Dir(1/2, ..., 1/2)` with `exponents.len()`
/// components: `prod_i prod_{j < a_i} (2j + 1) / prod_{j < A} (K + 2j)`.
pub fn dirichlet_moment(exponents: &[u32]) -> Result<Rational> {
    let k = exponents.len() as i128;
    if k < 2 {
        return Err(Error::InvalidArgument(
            "need at least two components".into(),
        ));
    }
    let mut num = 1i128;
    for &a in exponents {
        for j in 0..a as i128 {
            num = num.checked_mul(2 * j + 1).ok_or_else(overflow)?;
        }
    }
    let total: i128 = exponents.iter().map(|&a| a as i128).sum();
    let mut den = 1i128;
    for j in 0..total {
        den = den.checked_mul(k + 2 * j).ok_or_else(overflow)?;
    }
    Ok(Rational::new(num, den))
}

fn overflow() -> Error {
    Error::InvalidArgument("moment order overflows 128-bit arithmetic".into())
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct LocalLimit {
    pub n: usize,
    pub counts: [u32; 3],
    /// `N^2 q_N(counts)`.
    pub scaled: f64,
    /// Dirichlet density at `counts / N`.
    pub target: f64,
    pub rel_error: f64,
}

/// Three-leaf local limit: `N^2 q_N(n)` against `(1/(2 pi)) (eta1 eta2
/// eta3)^{-1/2}` along `n = (floor(N eta1), floor(N eta2), rest)`.
pub fn local_limit(n: usize, eta: [f64; 2]) -> Result<LocalLimit> {
    let n1 = (n as f64 * eta[0]).floor() as u32;
    let n2 = (n as f64 * eta[1]).floor() as u32;
    if n1 == 0 || n2 == 0 || (n1 + n2) as usize >= n {
        return Err(Error::InvalidArgument(format!(
            "eta {eta:?} is not interior at N = {n}"
        )));
    }
    let counts = [n1, n2, n as u32 - n1 - n2];
    let p = EdgeMassProfile::new(LabelledShape::tripod(), counts.to_vec(), n)?;
    let tables = QnTables::new(n + 2);
    let q = ratio_to_f64(&tables.count(&p)?, tables.clad(n));
    let scaled = q * (n as f64).powi(2);
    let target = dirichlet_density(&counts.map(|c| c as f64 / n as f64));
    Ok(LocalLimit {
        n,
        counts,
        scaled,
        target,
        rel_error: (scaled / target - 1.0).abs(),
    })
}

/// `1 / #Clad_m` as an exact rational.
pub fn uniform_shape_probability(m: usize) -> BigRational {
    big_ratio(BigUint::one(), &count_cladograms(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn four_leaf_example() {
        let p = EdgeMassProfile::new(LabelledShape::tripod(), vec![2, 1, 1], 4).unwrap();
        assert_eq!(q_n_exact(&p).unwrap(), rat(1, 3));
    }

    #[test]
    fn profile_sums() {
        let shapes4 = enumerate_cladograms(4).unwrap();
        for n in [3, 4, 7, 12, 30] {
            assert_eq!(
                q_n_profile_sum(n, &LabelledShape::tripod()).unwrap(),
                rat(1, 1)
            );
            if n >= 4 {
                for s in &shapes4 {
                    assert_eq!(q_n_profile_sum(n, s).unwrap(), rat(1, 3));
                }
            }
        }
    }

    #[test]
    fn census_agrees() {
        for n in 4..=7 {
            for m in 3..=4.min(n) {
                let (compared, bad) = q_n_exhaustive_check(n, m).unwrap();
                assert!(compared > 0);
                assert_eq!(bad, 0, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn relabelling_invariance() {
        // a relabelling permutes leaves, hence the counts on external edges
        for s in enumerate_cladograms(4).unwrap() {
            let ext: Vec<usize> = (0..5).filter(|&e| s.edge_is_external(e)).collect();
            for p in profiles(9, &s).unwrap() {
                let mut counts = p.counts.clone();
                let vals: Vec<u32> = ext.iter().rev().map(|&e| p.counts[e]).collect();
                for (&e, v) in ext.iter().zip(vals) {
                    counts[e] = v;
                }
                let q = EdgeMassProfile::new(s.clone(), counts, 9).unwrap();
                assert_eq!(q_n_exact(&q).unwrap(), q_n_exact(&p).unwrap());
            }
        }
    }

    #[test]
    fn table_matches_sum() {
        let s = LabelledShape::tripod();
        let (rows, total) = q_n_table(6, &s).unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(total, BigRational::one());
        assert_eq!(total, q_n_profile_sum(6, &s).unwrap());
        let row = rows.iter().find(|r| r.counts == [4, 1, 1]).unwrap();
        assert_eq!(
            row.q,
            q_n_exact(&EdgeMassProfile::new(s, vec![4, 1, 1], 6).unwrap())
                .unwrap()
                .to_string()
        );
    }

    #[test]
    fn bad_profiles() {
        assert!(EdgeMassProfile::new(LabelledShape::tripod(), vec![0, 2, 2], 4).is_err());
        assert!(EdgeMassProfile::new(LabelledShape::tripod(), vec![1, 1, 1], 4).is_err());
        assert!(EdgeMassProfile::new(LabelledShape::tripod(), vec![1, 1], 2).is_err());
    }

    #[test]
    fn moments() {
        assert_eq!(dirichlet_moment(&[1, 0, 0]).unwrap(), Rational::new(1, 3));
        assert_eq!(dirichlet_moment(&[1, 1, 0]).unwrap(), Rational::new(1, 15));
        let pairs = dirichlet_moment(&[1, 1, 0]).unwrap() * 3;
        assert_eq!(pairs, Rational::new(1, 5));
        assert_eq!(dirichlet_moment(&[2, 0, 0]).unwrap(), Rational::new(1, 5));
        assert!(dirichlet_moment(&[1]).is_err());
    }

    #[test]
    fn density_normalised() {
        let c = dirichlet_density(&[1.0 / 3.0; 3]);
        assert!((c - (1.0 / (2.0 * std::f64::consts::PI)) * 27f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn local_limit_improves() {
        let a = local_limit(100, [0.2, 0.3]).unwrap();
        let b = local_limit(1000, [0.2, 0.3]).unwrap();
        assert!(b.rel_error < a.rel_error);
        assert!(local_limit(100, [0.0, 0.3]).is_err());
    }

    #[test]
    fn big_ratio_float() {
        let a = BigUint::from(3u32) << 2000usize;
        let b = BigUint::from(4u32) << 2000usize;
        assert!((ratio_to_f64(&a, &b) - 0.75).abs() < 1e-15);
    }
}
