use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::function::{MassFunction, Point, Symmetrized};
use crate::rng::{replicate_rng, sub_seed};
use crate::stats::compensated_sum;
use crate::tree::{
    edge_projection_identity, internal_counts_with, total_length_routes, uniform_cladogram,
    Cladogram, IntrinsicMetric, Topology, Vertex,
};
use crate::{Error, Rational, Result};

/// Mean intrinsic distance `int r_mu d mu^2` through branch points:
/// `2 sum_v nu{v} (ab + bc + ca)` over internal vertices plus the half-atom
/// terms of the leaves, which are endpoints of `2(N - 1)` ordered pairs.
pub fn mean_distance(t: &Cladogram) -> Rational {
    let n = t.n() as i128;
    let mut num = 0i128;
    for (_, c) in internal_counts_with(t, t.rooted()) {
        let [a, b, c] = c.map(i128::from);
        num += 12 * a * b * c * (a * b + b * c + a * c);
    }
    num += n * (3 * n - 2) * (n - 1);
    Rational::new(num, n.pow(5))
}

/// Mean intrinsic distance as the plain average over ordered leaf pairs.
pub fn mean_distance_direct(t: &Cladogram) -> Rational {
    let n = t.n();
    let metric = IntrinsicMetric::new(t);
    let mut num = 0i128;
    for x in 1..=n {
        for y in x + 1..=n {
            num += 2 * metric.numerator(x, y);
        }
    }
    let n = n as i128;
    Rational::new(num, 2 * n.pow(5))
}

pub fn mean_distance_routes(t: &Cladogram) -> (Rational, Rational) {
    (mean_distance(t), mean_distance_direct(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LambdaCheck {
    pub lhs: Rational,
    pub rhs: Rational,
    pub equal: bool,
}

/// Edge fraction of `S_v(u)` (counting the edge to `v`) against
/// `mu(S) (1 + 3 delta) - delta`, `delta = 1/(2N - 3)`.
pub fn lemma_lambda_check(t: &Cladogram, v: Vertex, u: Vertex) -> Result<LambdaCheck> {
    if !t.contains(v) || t.is_leaf(v) {
        return Err(Error::InvalidArgument(format!(
            "{v} is not an internal vertex"
        )));
    }
    if !t.contains(u) {
        return Err(Error::InvalidVertex(u));
    }
    if u == v {
        return Err(Error::SameVertex);
    }
    let rv = t.rooted();
    let start = if rv.is_ancestor(v, u) {
        rv.child_toward(v, u)
    } else {
        rv.parent[v] as usize
    };
    let mut seen = vec![false; t.n_vertices() + 1];
    seen[v] = true;
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let (mut degree_sum, mut leaves) = (0i128, 0i128);
    while let Some(w) = queue.pop_front() {
        degree_sum += t.degree(w) as i128;
        leaves += i128::from(t.is_leaf(w));
        for &x in t.neighbors(w) {
            let x = x as usize;
            if !seen[x] {
                seen[x] = true;
                queue.push_back(x);
            }
        }
    }
    // inner edges are seen from both ends, the edge to v from one
    let edges = (degree_sum + 1) / 2;
    let m = 2 * t.n() as i128 - 3;
    let lhs = Rational::new(edges, m);
    let delta = Rational::new(1, m);
    let rhs =
        Rational::new(leaves, t.n() as i128) * (Rational::from_integer(1) + delta * 3) - delta;
    Ok(LambdaCheck {
        lhs,
        rhs,
        equal: lhs == rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchingCheck {
    pub lhs: Rational,
    pub rhs: Rational,
    pub gap: Rational,
}

/// Both sides of the edge matching identity for a symmetric `g`: the sum
/// over edges of `g` at the two side masses, against half the sum over
/// internal vertices and components plus the external-edge correction.
pub fn matching_lemma_check(
    t: &Cladogram,
    g: &dyn Fn(Rational, Rational) -> Rational,
) -> Result<MatchingCheck> {
    let n = t.n() as i128;
    let one = Rational::from_integer(1);
    let sym = |a: Rational, b: Rational| -> Result<Rational> {
        let v = g(a, b);
        if v != g(b, a) {
            return Err(Error::NotSymmetric);
        }
        Ok(v)
    };
    let rv = t.rooted();
    let mut lhs = Rational::from_integer(0);
    for (a, b) in t.edges() {
        let child = if rv.parent[b] as usize == a { b } else { a };
        let s = Rational::new(rv.below[child] as i128, n);
        lhs += sym(s, one - s)?;
    }
    let mut inner = Rational::from_integer(0);
    for (_, c) in internal_counts_with(t, rv) {
        for k in c {
            let s = Rational::new(k as i128, n);
            inner += sym(s, one - s)?;
        }
    }
    let eps = Rational::new(1, n);
    let rhs = inner / 2 + Rational::new(n, 2) * sym(one - eps, eps)?;
    Ok(MatchingCheck {
        lhs,
        rhs,
        gap: lhs - rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WrightFisher {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// The move sum restricted to mass changes at the existing branch points,
/// `sum_z sum_v nu{v} (f(eta^z(v)) - f(eta(v)))`, against the integrated
/// Wright-Fisher operator with drift `-(1 - 3 eta_i)`. A move of a leaf from
/// component i of v onto an edge of component j shifts `1/N` of mass from i
/// to j; moves inside one component leave `eta(v)` alone.
pub fn wright_fisher_check(t: &Cladogram, f: &dyn MassFunction) -> WrightFisher {
    let sym;
    let f: &dyn MassFunction = if f.is_symmetric() {
        f
    } else {
        sym = Symmetrized(f);
        &sym
    };
    let n = t.n();
    let nf = n as f64;
    let eps = 1.0 / nf;
    let rv = t.rooted();
    // edges below each vertex, counted over the rooted view
    let mut below_edges = vec![0u32; t.n_vertices() + 1];
    for &v in rv.preorder.iter().rev() {
        let v = v as usize;
        below_edges[v] = rv.children(t, v).map(|c| below_edges[c] + 1).sum();
    }
    let total_edges = t.n_edges() as u32;
    let mut lhs_terms = vec![];
    let mut rhs_terms = vec![];
    for &v in &rv.preorder {
        let v = v as usize;
        if t.is_leaf(v) {
            continue;
        }
        let kids: Vec<usize> = rv.children(t, v).collect();
        let counts = [rv.below[kids[0]], rv.below[kids[1]], n as u32 - rv.below[v]];
        let e0 = below_edges[kids[0]] + 1;
        let e1 = below_edges[kids[1]] + 1;
        let edges = [e0, e1, total_edges - e0 - e1];
        let x: Point = counts.map(|k| k as f64 / nf);
        let nu = 6.0 * x[0] * x[1] * x[2];
        let fx = f.value(x);
        let mut a = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let mut y = x;
                    y[i] -= eps;
                    y[j] += eps;
                    a += counts[i] as f64 * edges[j] as f64 * (f.value(y) - fx);
                }
            }
        }
        lhs_terms.push(nu * a);
        let g = f.gradient(x);
        let h = f.hessian(x);
        let mut b = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                b += 2.0 * x[i] * (d - x[j]) * h[i][j];
            }
            b -= (1.0 - 3.0 * x[i]) * g[i];
        }
        rhs_terms.push(nu * b);
    }
    let lhs = compensated_sum(lhs_terms);
    let rhs = compensated_sum(rhs_terms);
    WrightFisher {
        n,
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityRow {
    pub identity: String,
    pub cases: usize,
    pub failures: usize,
}

pub const IDENTITIES: [&str; 5] = [
    "lambda",
    "matching",
    "edge_projection",
    "total_length_routes",
    "mean_distance_routes",
];

fn symmetric_field(k: usize) -> impl Fn(Rational, Rational) -> Rational {
    move |a: Rational, b: Rational| match k % 4 {
        0 => a * b,
        1 => a * a * b * b,
        2 => a * a + b * b,
        _ => Rational::from_integer(1),
    }
}

fn identity_case(name: &str, t: &Cladogram, k: usize, rng: &mut impl Rng) -> Result<bool> {
    let n = t.n();
    let last = t.n_vertices();
    let distinct = |rng: &mut dyn rand::RngCore, v: Vertex| loop {
        let u = rng.random_range(1..=last);
        if u != v {
            break u;
        }
    };
    Ok(match name {
        "lambda" => {
            let v = rng.random_range(n + 1..=last);
            lemma_lambda_check(t, v, distinct(rng, v))?.equal
        }
        "matching" => {
            matching_lemma_check(t, &symmetric_field(k))?.gap == Rational::from_integer(0)
        }
        "edge_projection" => {
            let z = rng.random_range(1..=last);
            let (a, b) = edge_projection_identity(t, z, distinct(rng, z))?;
            a == b
        }
        "total_length_routes" => {
            let (a, b) = total_length_routes(t);
            a == b
        }
        "mean_distance_routes" => {
            let (a, b) = mean_distance_routes(t);
            a == b
        }
        _ => return Err(Error::InvalidArgument(format!("unknown identity {name:?}"))),
    })
}

/// Random instances of each exact identity on uniform trees with
/// `3 <= N <= n_max`, in rational arithmetic.
pub fn identity_suite(n_max: usize, cases: usize, seed: u64) -> Result<Vec<IdentityRow>> {
    if n_max < 3 {
        return Err(Error::TooSmall(format!("n_max = {n_max}")));
    }
    let mut rows = vec![];
    for (tag, name) in IDENTITIES.iter().enumerate() {
        let master = sub_seed(seed, 0x6964_0000 + tag as u64);
        let results: Result<Vec<bool>> = (0..cases)
            .into_par_iter()
            .map(|k| {
                let mut rng = replicate_rng(master, k as u64);
                let n = rng.random_range(3..=n_max);
                let t = uniform_cladogram(n, &mut rng)?;
                identity_case(name, &t, k, &mut rng)
            })
            .collect();
        rows.push(IdentityRow {
            identity: name.to_string(),
            cases,
            failures: results?.iter().filter(|ok| !**ok).count(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mass_poly::{mass_function, sym_pairs};
    use crate::rng::replicate_rng;
    use crate::tree::{uniform_cladogram, validate_cladogram};
    use rand::Rng;

    fn cherry() -> Cladogram {
        validate_cladogram(4, &[(1, 5), (2, 5), (5, 6), (3, 6), (4, 6)]).unwrap()
    }

    #[test]
    fn star_mean_distance() {
        let t = Cladogram::star();
        assert_eq!(mean_distance(&t), Rational::new(26, 81));
        assert_eq!(mean_distance_direct(&t), Rational::new(26, 81));
    }

    #[test]
    fn mean_distance_routes_agree() {
        let mut rng = replicate_rng(31, 0);
        for n in [4, 5, 9, 33, 120, 200] {
            let t = uniform_cladogram(n, &mut rng).unwrap();
            let (a, b) = mean_distance_routes(&t);
            assert_eq!(a, b, "n={n}");
        }
    }

    #[test]
    fn mean_distance_is_shape_free() {
        for n in [5, 9, 16] {
            let comb = mean_distance(&crate::tree::comb_cladogram(n).unwrap());
            assert_eq!(
                comb,
                mean_distance(&crate::tree::balanced_cladogram(n).unwrap())
            );
        }
    }

    #[test]
    fn suite_is_clean() {
        let rows = identity_suite(20, 60, 3).unwrap();
        assert_eq!(rows.len(), IDENTITIES.len());
        assert!(
            rows.iter().all(|r| r.failures == 0 && r.cases == 60),
            "{rows:?}"
        );
        assert_eq!(rows, identity_suite(20, 60, 3).unwrap());
        assert!(identity_suite(2, 1, 3).is_err());
    }

    #[test]
    fn lambda_examples() {
        let t = cherry();
        let c = lemma_lambda_check(&t, 5, 3).unwrap();
        assert_eq!(c.lhs, Rational::new(3, 5));
        assert!(c.equal);
        let leaf = lemma_lambda_check(&t, 5, 1).unwrap();
        assert_eq!(leaf.lhs, Rational::new(1, 5));
        assert!(leaf.equal);
        assert!(lemma_lambda_check(&t, 1, 5).is_err());
        assert!(lemma_lambda_check(&t, 5, 5).is_err());
    }

    #[test]
    fn lambda_random() {
        let mut rng = replicate_rng(32, 0);
        for _ in 0..300 {
            let n = rng.random_range(4..=64);
            let t = uniform_cladogram(n, &mut rng).unwrap();
            let v = rng.random_range(n + 1..=2 * n - 2);
            let u = loop {
                let u = rng.random_range(1..=2 * n - 2);
                if u != v {
                    break u;
                }
            };
            assert!(lemma_lambda_check(&t, v, u).unwrap().equal);
        }
    }

    #[test]
    fn matching_identity() {
        let mut rng = replicate_rng(33, 0);
        let prod = |a: Rational, b: Rational| a * b;
        let ones = |_: Rational, _: Rational| Rational::from_integer(1);
        let sq = |a: Rational, b: Rational| a * a * b * b;
        for n in [3, 4, 10, 40, 64] {
            let t = uniform_cladogram(n, &mut rng).unwrap();
            for g in [&prod as &dyn Fn(Rational, Rational) -> Rational, &ones, &sq] {
                let c = matching_lemma_check(&t, g).unwrap();
                assert_eq!(c.gap, Rational::from_integer(0));
            }
            let c = matching_lemma_check(&t, &ones).unwrap();
            assert_eq!(c.lhs, Rational::from_integer(2 * n as i128 - 3));
        }
        let skew = |a: Rational, _: Rational| a;
        assert!(matches!(
            matching_lemma_check(&cherry(), &skew),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn wright_fisher_trend() {
        let mut rng = replicate_rng(34, 0);
        for f in [
            Box::new(sym_pairs()) as Box<dyn MassFunction>,
            mass_function("entropy_like").unwrap(),
        ] {
            let gaps: Vec<f64> = [16, 64, 256]
                .iter()
                .map(|&n| {
                    wright_fisher_check(&uniform_cladogram(n, &mut rng).unwrap(), f.as_ref()).gap
                })
                .collect();
            assert!(gaps[2] < gaps[0], "{}: {gaps:?}", f.name());
        }
    }
}
