use rand::Rng;

use super::{Cladogram, Vertex};
use crate::{Error, Result};

/// Uniform labelled N-cladogram by sequential insertion: leaf `k` goes on a
/// uniformly chosen edge of the current (k-1)-cladogram. There are `2k-5`
/// choices at step k, matching `(2N-5)!! = prod (2k-5)`.
pub fn uniform_cladogram<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Cladogram> {
    if n < 3 {
        return Err(Error::TooSmall(format!("N = {n}")));
    }
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(2 * n - 3);
    let centre = n as u32 + 1;
    edges.extend([(1, centre), (2, centre), (3, centre)]);
    for k in 4..=n {
        let i = rng.random_range(0..edges.len());
        let (x, y) = edges[i];
        let w = (n + k - 2) as u32;
        edges[i] = (x, w);
        edges.push((w, y));
        edges.push((w, k as u32));
    }
    let es: Vec<(Vertex, Vertex)> = edges
        .into_iter()
        .map(|(a, b)| (a as usize, b as usize))
        .collect();
    Cladogram::new(n, &es)
}

/// Caterpillar: leaves `1..=N` hang in order off a spine of internal vertices.
pub fn comb_cladogram(n: usize) -> Result<Cladogram> {
    if n < 3 {
        return Err(Error::TooSmall(format!("N = {n}")));
    }
    if n == 3 {
        return Ok(Cladogram::star());
    }
    let spine: Vec<usize> = (n + 1..=2 * n - 2).collect();
    let mut edges = Vec::with_capacity(2 * n - 3);
    edges.push((1, spine[0]));
    edges.push((2, spine[0]));
    for i in 3..n - 1 {
        edges.push((i, spine[i - 2]));
    }
    edges.push((n - 1, spine[n - 3]));
    edges.push((n, spine[n - 3]));
    for w in spine.windows(2) {
        edges.push((w[0], w[1]));
    }
    Cladogram::new(n, &edges)
}

/// Three near-equal subtrees around a central vertex, each split recursively
/// in halves.
pub fn balanced_cladogram(n: usize) -> Result<Cladogram> {
    if n < 3 {
        return Err(Error::TooSmall(format!("N = {n}")));
    }
    let mut edges = Vec::with_capacity(2 * n - 3);
    let mut next = n + 1;
    let centre = next;
    next += 1;
    let sizes = [
        n / 3 + usize::from(n % 3 > 0),
        n / 3 + usize::from(n % 3 > 1),
        n / 3,
    ];
    let mut start = 1;
    for s in sizes {
        let root = build_balanced(start, start + s, &mut next, &mut edges);
        edges.push((centre, root));
        start += s;
    }
    Cladogram::new(n, &edges)
}

fn build_balanced(
    lo: usize,
    hi: usize,
    next: &mut usize,
    edges: &mut Vec<(usize, usize)>,
) -> usize {
    if hi - lo == 1 {
        return lo;
    }
    let mid = lo + (hi - lo + 1) / 2;
    let v = *next;
    *next += 1;
    let a = build_balanced(lo, mid, next, edges);
    let b = build_balanced(mid, hi, next, edges);
    edges.push((v, a));
    edges.push((v, b));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use crate::tree::{enumerate_cladograms, Topology};
    use std::collections::HashMap;

    #[test]
    fn small_n_is_the_star() {
        let mut rng = replicate_rng(1, 0);
        for _ in 0..5 {
            assert_eq!(uniform_cladogram(3, &mut rng).unwrap(), Cladogram::star());
        }
        assert_eq!(comb_cladogram(3).unwrap(), Cladogram::star());
        assert_eq!(balanced_cladogram(3).unwrap(), Cladogram::star());
    }

    #[test]
    fn structured_trees_are_valid() {
        for n in 3..40 {
            comb_cladogram(n).unwrap();
            let b = balanced_cladogram(n).unwrap();
            let depth = b.rooted().depth.iter().copied().max().unwrap();
            assert!((depth as f64) <= 2.0 * (n as f64).log2() + 3.0);
        }
        let c = comb_cladogram(6).unwrap();
        assert_eq!(c.full_shape().key(), "1>(2,(3,(4,(5,6))))");
    }

    fn frequencies(n: usize, draws: usize) -> (Vec<u64>, usize) {
        let support = enumerate_cladograms(n).unwrap();
        let index: HashMap<String, usize> = support
            .iter()
            .enumerate()
            .map(|(i, s)| (s.key().to_string(), i))
            .collect();
        let mut rng = replicate_rng(20, n as u64);
        let mut counts = vec![0u64; support.len()];
        for _ in 0..draws {
            let t = uniform_cladogram(n, &mut rng).unwrap();
            assert_eq!(t.n_vertices(), 2 * n - 2);
            counts[index[t.full_shape().key()]] += 1;
        }
        (counts, support.len())
    }

    #[test]
    fn uniform_on_four_leaves() {
        let (counts, k) = frequencies(4, 30_000);
        assert_eq!(k, 3);
        let (_, _, p) = crate::stats::chi_square(&counts, &[1.0; 3], 5.0);
        assert!(p > 0.001, "{counts:?}");
    }

    #[test]
    fn uniform_on_five_leaves() {
        let (counts, k) = frequencies(5, 150_000);
        assert_eq!(k, 15);
        assert!(counts.iter().all(|&c| c > 0));
        let (_, _, p) = crate::stats::chi_square(&counts, &[1.0; 15], 5.0);
        assert!(p > 0.001, "{counts:?}");
    }
}
