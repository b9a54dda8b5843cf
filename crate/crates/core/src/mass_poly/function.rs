use std::collections::BTreeMap;

use rand::Rng;

use crate::{Error, Result};

pub type Point = [f64; 3];

/// A `C^2` function on `[0,1]^3` with its first and second derivatives.
pub trait MassFunction: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> Point;
    fn hessian(&self, x: Point) -> [Point; 3];
    /// Whether `value` is invariant under permutations of the coordinates.
    fn is_symmetric(&self) -> bool;
}

/// The six permutations of three coordinates.
pub const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

pub fn permute(x: Point, p: [usize; 3]) -> Point {
    [x[p[0]], x[p[1]], x[p[2]]]
}

/// Polynomial `sum c x1^i x2^j x3^k` of total degree at most 4.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    name: String,
    terms: Vec<(f64, [u32; 3])>,
    symmetric: bool,
}

pub const MAX_DEGREE: u32 = 4;

fn powi(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl Polynomial {
    pub fn new(name: &str, terms: &[(f64, [u32; 3])]) -> Result<Polynomial> {
        let mut merged: BTreeMap<[u32; 3], f64> = BTreeMap::new();
        for &(c, e) in terms {
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("coefficient {c}")));
            }
            if e.iter().sum::<u32>() > MAX_DEGREE {
                return Err(Error::InvalidArgument(format!(
                    "term {e:?} exceeds degree {MAX_DEGREE}"
                )));
            }
            *merged.entry(e).or_default() += c;
        }
        merged.retain(|_, c| *c != 0.0);
        let symmetric = merged.iter().all(|(e, c)| {
            PERMUTATIONS
                .iter()
                .all(|&p| merged.get(&[e[p[0]], e[p[1]], e[p[2]]]) == Some(c))
        });
        Ok(Polynomial {
            name: name.to_string(),
            terms: merged.into_iter().map(|(e, c)| (c, e)).collect(),
            symmetric,
        })
    }

    /// Parse `"c:i,j,k;c:i,j,k;..."`, e.g. `"1:1,1,0;-0.5:0,0,2"`.
    pub fn parse(text: &str) -> Result<Polynomial> {
        let mut terms = vec![];
        for (n, part) in text
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .enumerate()
        {
            let bad = |m: &str| Error::Parse {
                line: 1,
                column: n + 1,
                message: format!("term {:?}: {m}", part),
            };
            let (c, e) = part
                .split_once(':')
                .ok_or_else(|| bad("expected c:i,j,k"))?;
            let c: f64 = c.trim().parse().map_err(|_| bad("bad coefficient"))?;
            let e: Vec<u32> = e
                .split(',')
                .map(|s| s.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad exponent"))?;
            if e.len() != 3 {
                return Err(bad("need three exponents"));
            }
            terms.push((c, [e[0], e[1], e[2]]));
        }
        if terms.is_empty() {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty polynomial".into(),
            });
        }
        Polynomial::new(text.trim(), &terms)
    }

    pub fn terms(&self) -> &[(f64, [u32; 3])] {
        &self.terms
    }

    fn monomial_partial(x: Point, e: [u32; 3], d: [u32; 3]) -> f64 {
        let mut v = 1.0;
        for k in 0..3 {
            if d[k] > e[k] {
                return 0.0;
            }
            let falling: u32 = (0..d[k]).map(|i| e[k] - i).product();
            v *= falling as f64 * powi(x[k], e[k] - d[k]);
        }
        v
    }

    fn partial(&self, x: Point, d: [u32; 3]) -> f64 {
        self.terms
            .iter()
            .map(|&(c, e)| c * Self::monomial_partial(x, e, d))
            .sum()
    }
}

impl MassFunction for Polynomial {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn value(&self, x: Point) -> f64 {
        self.partial(x, [0, 0, 0])
    }
    fn gradient(&self, x: Point) -> Point {
        [
            self.partial(x, [1, 0, 0]),
            self.partial(x, [0, 1, 0]),
            self.partial(x, [0, 0, 1]),
        ]
    }
    fn hessian(&self, x: Point) -> [Point; 3] {
        let mut h = [[0.0; 3]; 3];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, hij) in row.iter_mut().enumerate() {
                let mut d = [0u32; 3];
                d[i] += 1;
                d[j] += 1;
                *hij = self.partial(x, d);
            }
        }
        h
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// `-sum x_i log(x_i + 1e-9)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct EntropyLike;

const ENTROPY_SHIFT: f64 = 1e-9;

impl MassFunction for EntropyLike {
    fn name(&self) -> String {
        "entropy_like".into()
    }
    fn value(&self, x: Point) -> f64 {
        -x.iter()
            .map(|&xi| xi * (xi + ENTROPY_SHIFT).ln())
            .sum::<f64>()
    }
    fn gradient(&self, x: Point) -> Point {
        x.map(|xi| -(xi + ENTROPY_SHIFT).ln() - xi / (xi + ENTROPY_SHIFT))
    }
    fn hessian(&self, x: Point) -> [Point; 3] {
        let mut h = [[0.0; 3]; 3];
        for i in 0..3 {
            let s = x[i] + ENTROPY_SHIFT;
            h[i][i] = -1.0 / s - ENTROPY_SHIFT / (s * s);
        }
        h
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `f~ = (1/6) sum_pi f(x_pi)`.
pub struct Symmetrized<'a>(pub &'a dyn MassFunction);

impl MassFunction for Symmetrized<'_> {
    fn name(&self) -> String {
        format!("sym({})", self.0.name())
    }
    fn value(&self, x: Point) -> f64 {
        PERMUTATIONS
            .iter()
            .map(|&p| self.0.value(permute(x, p)))
            .sum::<f64>()
            / 6.0
    }
    fn gradient(&self, x: Point) -> Point {
        let mut g = [0.0; 3];
        for p in PERMUTATIONS {
            let gp = self.0.gradient(permute(x, p));
            // d/dx_{p[a]} f(x_p) = (d_a f)(x_p)
            for a in 0..3 {
                g[p[a]] += gp[a] / 6.0;
            }
        }
        g
    }
    fn hessian(&self, x: Point) -> [Point; 3] {
        let mut h = [[0.0; 3]; 3];
        for p in PERMUTATIONS {
            let hp = self.0.hessian(permute(x, p));
            for a in 0..3 {
                for b in 0..3 {
                    h[p[a]][p[b]] += hp[a][b] / 6.0;
                }
            }
        }
        h
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["sym_pairs", "one", "coord_mean", "entropy_like"];

pub fn sym_pairs() -> Polynomial {
    Polynomial::new(
        "sym_pairs",
        &[(1.0, [1, 1, 0]), (1.0, [0, 1, 1]), (1.0, [1, 0, 1])],
    )
    .unwrap()
}

/// Look up a built-in by name, or parse a user polynomial `c:i,j,k;...`.
pub fn mass_function(name: &str) -> Result<Box<dyn MassFunction>> {
    Ok(match name {
        "sym_pairs" => Box::new(sym_pairs()),
        "one" => Box::new(Polynomial::new("one", &[(1.0, [0, 0, 0])])?),
        "coord_mean" => {
            let t = 1.0 / 3.0;
            Box::new(Polynomial::new(
                "coord_mean",
                &[(t, [1, 0, 0]), (t, [0, 1, 0]), (t, [0, 0, 1])],
            )?)
        }
        "entropy_like" => Box::new(EntropyLike),
        s if s.contains(':') => Box::new(Polynomial::parse(s)?),
        s => {
            return Err(Error::InvalidArgument(format!(
                "unknown mass function {s:?}; expected one of {BUILTIN_NAMES:?} or c:i,j,k;..."
            )))
        }
    })
}

/// Migration operator `Theta_{from,to}` (0-based coordinates): move all mass
/// of `from` onto `to`, as a difference quotient, or its derivative limit when
/// `x[from] = 0`.
pub fn theta_migration(f: &dyn MassFunction, from: usize, to: usize, x: Point) -> Result<f64> {
    if from == to || from > 2 || to > 2 {
        return Err(Error::InvalidArgument(format!(
            "theta needs distinct indices in 0..3, got {from}, {to}"
        )));
    }
    Ok(theta(f, from, to, x))
}

pub(crate) fn theta(f: &dyn MassFunction, from: usize, to: usize, x: Point) -> f64 {
    if x[from] > 0.0 {
        let mut y = x;
        y[to] += y[from];
        y[from] = 0.0;
        (f.value(y) - f.value(x)) / x[from]
    } else {
        let g = f.gradient(x);
        g[to] - g[from]
    }
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-5;

/// Largest disagreement between the analytic gradient/Hessian and central
/// differences at `points` random interior points. Entries are compared
/// relative to `max(1, |value|)`.
pub fn derivative_error<R: Rng + ?Sized>(f: &dyn MassFunction, points: usize, rng: &mut R) -> f64 {
    let h = FD_STEP;
    let mut worst = 0.0f64;
    let scaled = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
    for _ in 0..points {
        let x: Point = [0; 3].map(|_| rng.random_range(0.1..0.9));
        let g = f.gradient(x);
        let hess = f.hessian(x);
        for i in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[i] += h;
            xm[i] -= h;
            worst = worst.max(scaled(g[i], (f.value(xp) - f.value(xm)) / (2.0 * h)));
            let (gp, gm) = (f.gradient(xp), f.gradient(xm));
            for j in 0..3 {
                worst = worst.max(scaled(hess[j][i], (gp[j] - gm[j]) / (2.0 * h)));
            }
        }
    }
    worst
}

/// Whether the value is permutation invariant at `points` random points.
pub fn symmetry_holds<R: Rng + ?Sized>(f: &dyn MassFunction, points: usize, rng: &mut R) -> bool {
    (0..points).all(|_| {
        let x: Point = [0; 3].map(|_| rng.random::<f64>());
        let v = f.value(x);
        PERMUTATIONS
            .iter()
            .all(|&p| (f.value(permute(x, p)) - v).abs() <= 1e-12 * v.abs().max(1.0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn builtins_are_consistent() {
        let mut rng = replicate_rng(11, 0);
        for name in BUILTIN_NAMES {
            let f = mass_function(name).unwrap();
            assert!(
                derivative_error(f.as_ref(), 50, &mut rng) < FD_TOLERANCE,
                "{name}"
            );
            assert!(f.is_symmetric());
            assert!(symmetry_holds(f.as_ref(), 50, &mut rng));
        }
    }

    #[test]
    fn user_polynomials() {
        let p = Polynomial::parse("2:2,1,0; -1:0,0,3 ;0.5:1,1,2").unwrap();
        assert!(!p.is_symmetric());
        let x = [0.3, 0.5, 0.7];
        let want = 2.0 * 0.09 * 0.5 - 0.343 + 0.5 * 0.3 * 0.5 * 0.49;
        assert!((p.value(x) - want).abs() < 1e-14);
        let mut rng = replicate_rng(12, 0);
        assert!(derivative_error(&p, 50, &mut rng) < FD_TOLERANCE);
        assert!(!symmetry_holds(&p, 20, &mut rng));
        assert!(Polynomial::parse("1:1,1,3").is_err());
        assert!(Polynomial::parse("1:1,1").is_err());
        assert!(Polynomial::parse("x:1,1,1").is_err());
        assert!(Polynomial::parse("").is_err());
        assert!(mass_function("nope").is_err());
        assert!(Polynomial::parse("1:1,0,0;1:0,1,0;1:0,0,1")
            .unwrap()
            .is_symmetric());
    }

    #[test]
    fn symmetrized_derivatives() {
        let p = Polynomial::parse("1:3,1,0;2:0,1,1;-1:1,0,0").unwrap();
        let s = Symmetrized(&p);
        let mut rng = replicate_rng(13, 0);
        assert!(derivative_error(&s, 50, &mut rng) < FD_TOLERANCE);
        assert!(symmetry_holds(&s, 50, &mut rng));
    }

    #[test]
    fn migration() {
        let x2 = Polynomial::new("x2", &[(1.0, [0, 1, 0])]).unwrap();
        let x1 = Polynomial::new("x1", &[(1.0, [1, 0, 0])]).unwrap();
        for x in [[0.2, 0.3, 0.5], [0.0, 0.4, 0.6]] {
            assert!((theta_migration(&x2, 0, 1, x).unwrap() - 1.0).abs() < 1e-12);
            assert!((theta_migration(&x1, 0, 1, x).unwrap() + 1.0).abs() < 1e-12);
        }
        assert!(theta_migration(&x1, 1, 1, [0.1; 3]).is_err());
        let cubic = Polynomial::parse("1:1,1,0;1:0,1,1;1:1,0,1;3:2,0,1;-2:0,3,0").unwrap();
        for h in [&sym_pairs() as &dyn MassFunction, &cubic] {
            let near = theta(h, 0, 2, [1e-6, 0.3, 0.7 - 1e-6]);
            let at = theta(h, 0, 2, [0.0, 0.3, 0.7]);
            assert!((near - at).abs() < 1e-4, "{}", h.name());
        }
    }
}
