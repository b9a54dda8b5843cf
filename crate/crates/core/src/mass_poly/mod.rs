//! Degree-3 mass polynomials `Phi^f(x) = E f(eta(U1, U2, U3))`, the limit
//! generator acting on them and its finite-N counterpart.
//!
//! Integrals over `mu^3` are computed by grouping tuples by branch point: an
//! internal vertex with component leaf counts `(a, b, c)` is the branch point
//! of `6abc` ordered tuples, `abc` for each assignment of the samples to
//! components. Tuples with a repeated leaf have a leaf as branch point; the
//! coordinates sitting on it get mass 0 and the remaining one gets
//! `(N - 1)/N`. That part depends only on N.

mod function;
mod lemmas;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{enumerate_moves, ChainState};
use crate::rng::{replicate_rng, sub_seed};
use crate::stats::{compensated_sum, log_log_slope};
use crate::tree::{
    branch_point, internal_counts_with, uniform_cladogram, Cladogram, RootedView, Topology, Vertex,
};
use crate::{Error, Rational, Result};

pub use function::{
    derivative_error, mass_function, sym_pairs, symmetry_holds, theta_migration, EntropyLike,
    MassFunction, Point, Polynomial, Symmetrized, BUILTIN_NAMES, FD_STEP, FD_TOLERANCE, MAX_DEGREE,
    PERMUTATIONS,
};
pub use lemmas::{
    identity_suite, lemma_lambda_check, matching_lemma_check, mean_distance, mean_distance_direct,
    mean_distance_routes, wright_fisher_check, IdentityRow, LambdaCheck, MatchingCheck,
    WrightFisher, IDENTITIES,
};

use function::{permute, theta};

/// Masses of the three components at the branch point of a 3-sample, in
/// sample order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MassVector(pub [Rational; 3]);

impl MassVector {
    pub fn decreasing(&self) -> [Rational; 3] {
        let mut v = self.0;
        v.sort_by(|a, b| b.cmp(a));
        v
    }

    pub fn to_f64(&self) -> Point {
        self.0.map(|r| *r.numer() as f64 / *r.denom() as f64)
    }
}

/// `eta(u1, u2, u3)`. Coordinates equal to the branch point (repeated
/// samples) get mass 0.
pub fn eta(t: &Cladogram, u1: Vertex, u2: Vertex, u3: Vertex) -> Result<MassVector> {
    for u in [u1, u2, u3] {
        if !t.contains(u) || !t.is_leaf(u) {
            return Err(Error::BadLeaf(u));
        }
    }
    let v = branch_point(t, u1, u2, u3)?;
    let n = t.n();
    let rv = t.rooted();
    Ok(MassVector([u1, u2, u3].map(|u| {
        if u == v {
            Rational::from_integer(0)
        } else {
            Rational::new(rv.component_count(n, v, u) as i128, n as i128)
        }
    })))
}

/// An integral over `mu^3` split into the internal branch points and the
/// repeated-sample tuples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassIntegral {
    pub internal: f64,
    pub degenerate: f64,
}

impl MassIntegral {
    pub fn total(&self) -> f64 {
        self.internal + self.degenerate
    }
}

fn masses(n: usize, c: [u32; 3]) -> Point {
    c.map(|k| k as f64 / n as f64)
}

/// `sum_v abc sum_pi g(pi eta(v))`, i.e. `N^3` times the internal part.
fn internal_sum<G: Fn(Point) -> f64>(
    n: usize,
    counts: &[(Vertex, [u32; 3])],
    symmetric: bool,
    g: &G,
) -> f64 {
    compensated_sum(counts.iter().map(|&(_, c)| {
        let w = c[0] as f64 * c[1] as f64 * c[2] as f64;
        let x = masses(n, c);
        let s = if symmetric {
            6.0 * g(x)
        } else {
            PERMUTATIONS.iter().map(|&p| g(permute(x, p))).sum()
        };
        w * s
    }))
}

fn degenerate_part<G: Fn(Point) -> f64>(n: usize, g: &G) -> f64 {
    let b = (n - 1) as f64 / n as f64;
    let nf = n as f64;
    (g([0.0; 3]) + (nf - 1.0) * (g([0.0, 0.0, b]) + g([0.0, b, 0.0]) + g([b, 0.0, 0.0])))
        / (nf * nf)
}

fn integrate<G: Fn(Point) -> f64>(t: &Cladogram, symmetric: bool, g: G) -> MassIntegral {
    let n = t.n();
    let counts = internal_counts_with(t, t.rooted());
    let n3 = (n as f64).powi(3);
    MassIntegral {
        internal: internal_sum(n, &counts, symmetric, &g) / n3,
        degenerate: degenerate_part(n, &g),
    }
}

pub fn phi_f_parts(t: &Cladogram, f: &dyn MassFunction) -> MassIntegral {
    integrate(t, f.is_symmetric(), |x| f.value(x))
}

/// `Phi^f(t)` by grouping over branch points.
pub fn phi_f_exact(t: &Cladogram, f: &dyn MassFunction) -> f64 {
    phi_f_parts(t, f).total()
}

/// `Phi^f(t)` as the plain average over all `N^3` leaf tuples.
pub fn phi_f_bruteforce(t: &Cladogram, f: &dyn MassFunction) -> Result<f64> {
    let n = t.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::CapExceeded {
            what: "N",
            value: n as u128,
            cap: BRUTE_FORCE_CAP as u128,
        });
    }
    let mut vals = Vec::with_capacity(n * n * n);
    for a in 1..=n {
        for b in 1..=n {
            for c in 1..=n {
                vals.push(f.value(eta(t, a, b, c)?.to_f64()));
            }
        }
    }
    Ok(compensated_sum(vals) / (n as f64).powi(3))
}

pub const BRUTE_FORCE_CAP: usize = 40;

/// Integrand of the limit generator at `eta`.
pub fn generator_integrand(f: &dyn MassFunction, x: Point) -> f64 {
    let g = f.gradient(x);
    let h = f.hessian(x);
    let fx = f.value(x);
    let mut diffusion = 0.0;
    let mut drift = 0.0;
    let mut migration = 0.0;
    let mut jumps = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d = if i == j { 1.0 } else { 0.0 };
            diffusion += x[i] * (d - x[j]) * h[i][j];
            if i != j {
                migration += theta(f, i, j, x);
            }
        }
        drift += (1.0 - 3.0 * x[i]) * g[i];
        let mut e = [0.0; 3];
        e[i] = 1.0;
        jumps += f.value(e) - fx;
    }
    2.0 * diffusion + 3.0 * drift + 0.5 * migration + jumps
}

/// Reduced integrand for symmetric `f`. It agrees with
/// [`generator_integrand`] only after averaging over coordinate permutations.
pub fn generator_integrand_symmetric(f: &dyn MassFunction, x: Point) -> f64 {
    let g = f.gradient(x);
    let h = f.hessian(x);
    3.0 * (2.0 * x[0] * (1.0 - x[0]) * h[0][0] - 4.0 * x[0] * x[1] * h[0][1]
        + 3.0 * (1.0 - 3.0 * x[0]) * g[0]
        + theta(f, 0, 1, x)
        + f.value([1.0, 0.0, 0.0])
        - f.value(x))
}

pub fn omega_ald_mass_parts(t: &Cladogram, f: &dyn MassFunction) -> MassIntegral {
    if f.is_symmetric() {
        // every permutation is evaluated: the reduced integrand is not symmetric
        integrate(t, false, |x| generator_integrand_symmetric(f, x))
    } else {
        integrate(t, false, |x| generator_integrand(f, x))
    }
}

/// `Omega_Ald Phi^f(t)`, the limit generator integrated exactly over `mu^3`.
pub fn omega_ald_mass(t: &Cladogram, f: &dyn MassFunction) -> f64 {
    omega_ald_mass_parts(t, f).total()
}

/// Same value through the full integrand regardless of symmetry.
pub fn omega_ald_mass_generic(t: &Cladogram, f: &dyn MassFunction) -> f64 {
    integrate(t, false, |x| generator_integrand(f, x)).total()
}

pub const OMEGA_N_MASS_CAP: usize = 1024;

fn state_internal_sum(st: &ChainState, f: &dyn MassFunction) -> f64 {
    let rv = RootedView::build(st, 1);
    let counts = internal_counts_with(st, &rv);
    internal_sum(st.n_leaves(), &counts, f.is_symmetric(), &|x| f.value(x))
}

/// `Omega_N Phi^f(t)`: sum over all `N (2N - 3)` moves of the change in
/// `Phi^f`. Repeated-sample tuples contribute a constant and cancel.
pub fn omega_n_mass(t: &Cladogram, f: &dyn MassFunction) -> Result<f64> {
    let n = t.n();
    if n > OMEGA_N_MASS_CAP {
        return Err(Error::CapExceeded {
            what: "N",
            value: n as u128,
            cap: OMEGA_N_MASS_CAP as u128,
        });
    }
    let base = ChainState::new(t);
    let before = state_internal_sum(&base, f);
    let per_leaf: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|u| {
            let mut st = base.clone();
            let mut diffs = vec![];
            for e in 0..st.n_edges() {
                if let Some(back) = st.apply(u, e) {
                    diffs.push(state_internal_sum(&st, f) - before);
                    st.apply(u, back);
                }
            }
            compensated_sum(diffs)
        })
        .collect();
    Ok(compensated_sum(per_leaf) / (n as f64).powi(3))
}

/// Independent oracle: recompute `Phi^f` by the `N^3` tuple sum on every
/// moved tree.
pub fn omega_n_mass_bruteforce(t: &Cladogram, f: &dyn MassFunction) -> Result<f64> {
    let before = phi_f_bruteforce(t, f)?;
    let diffs: Result<Vec<f64>> = enumerate_moves(t)
        .map(|(_, next)| Ok(phi_f_bruteforce(&next, f)? - before))
        .collect();
    Ok(compensated_sum(diffs?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassGapRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub function: String,
    /// Max over sampled trees of `|Omega_N Phi^f - Omega_Ald Phi^f|`.
    pub gap: f64,
    pub mean_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassGap {
    pub rows: Vec<MassGapRow>,
    /// Least-squares slope of `log gap` against `log N`.
    pub slope: f64,
    pub decreasing: bool,
}

/// Finite-N against limit generator on mass polynomials. Tree `i` at size N
/// is drawn from stream `i` of `sub_seed(seed, N)`.
pub fn mass_generator_gap(
    n_list: &[usize],
    f: &dyn MassFunction,
    trees_per_n: usize,
    seed: u64,
) -> Result<MassGap> {
    if trees_per_n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one tree per N".into(),
        ));
    }
    let mut rows = vec![];
    for &n in n_list {
        let mut gaps = vec![];
        for i in 0..trees_per_n {
            let t = uniform_cladogram(n, &mut replicate_rng(sub_seed(seed, n as u64), i as u64))?;
            gaps.push((omega_n_mass(&t, f)? - omega_ald_mass(&t, f)).abs());
        }
        rows.push(MassGapRow {
            n,
            function: f.name().to_string(),
            gap: gaps.iter().copied().fold(0.0, f64::max),
            mean_gap: compensated_sum(gaps.iter().copied()) / gaps.len() as f64,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let slope = if rows.len() >= 2 {
        log_log_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    let decreasing = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    Ok(MassGap {
        rows,
        slope,
        decreasing,
    })
}
