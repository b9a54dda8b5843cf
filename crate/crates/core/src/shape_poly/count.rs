//! Exact counts of ordered distinct leaf tuples spanning a given shape.

use std::collections::HashSet;

use crate::tree::{shape, Cladogram, LabelledShape, RootedView, Topology};
use crate::{Error, Result};

/// Largest m handled by the clade dynamic programme.
pub const DP_CAP: usize = 16;

/// Clades of a cladogram rooted at its label-1 leaf; clade `i` is the set of
/// labels below node `i + 1`.
struct Clades {
    n: usize,
    leaf: Vec<bool>,
    split: Vec<Option<(usize, usize)>>,
    top: usize,
}

impl Clades {
    fn new(s: &LabelledShape) -> Clades {
        let n = s.n_nodes() - 1;
        let mut leaf = vec![false; n];
        let mut split = vec![None; n];
        for node in 1..=n {
            let ch = s.children(node);
            if ch.is_empty() {
                leaf[node - 1] = true;
            } else {
                split[node - 1] = Some((ch[0] - 1, ch[1] - 1));
            }
        }
        Clades {
            n,
            leaf,
            split,
            top: s.children(0)[0] - 1,
        }
    }

    fn combine(&self, a: &[u128], b: &[u128], out: &mut [u128]) {
        for c in 0..self.n {
            let mut v = a[c] + b[c];
            if let Some((x, y)) = self.split[c] {
                v += a[x] * b[y] + a[y] * b[x];
            }
            out[c] = v;
        }
    }
}

/// Number of injective maps from labels `1..=m` to leaves whose spanned shape
/// is `s`, i.e. `N^m * Phi^{m,s}`.
///
/// Rerooting dynamic programme over the tree hung from leaf 1: `down[v]`
/// counts placements of each clade inside the subtree of `v`, `up[v]` inside
/// the complementary side seen from `v`'s parent. Summing the top clade over
/// every choice of the leaf carrying label 1 costs `O(N m)`.
pub fn phi_count<T: Topology + ?Sized>(t: &T, rv: &RootedView, s: &LabelledShape) -> Result<u128> {
    if !s.is_cladogram() {
        return Err(Error::NotACladogram);
    }
    let m = s.m();
    if m > DP_CAP {
        return Err(Error::CapExceeded {
            what: "m",
            value: m as u128,
            cap: DP_CAP as u128,
        });
    }
    if m < 2 {
        return Err(Error::TooSmall(format!("m = {m}")));
    }
    let n = t.n_leaves();
    if m > n {
        return Ok(0);
    }
    let cl = Clades::new(s);
    let k = cl.n;
    let nv = t.n_vertices();
    let unit: Vec<u128> = cl.leaf.iter().map(|&l| u128::from(l)).collect();
    let mut down = vec![0u128; (nv + 1) * k];
    let mut up = vec![0u128; (nv + 1) * k];
    let root = rv.root;
    let mut scratch = vec![0u128; k];

    for &v in rv.preorder.iter().rev() {
        let v = v as usize;
        if v == root {
            continue;
        }
        if t.is_leaf(v) {
            down[v * k..(v + 1) * k].copy_from_slice(&unit);
        } else {
            let mut kids = rv.children(t, v);
            let (c1, c2) = (kids.next().unwrap(), kids.next().unwrap());
            cl.combine(
                &down[c1 * k..(c1 + 1) * k],
                &down[c2 * k..(c2 + 1) * k],
                &mut scratch,
            );
            down[v * k..(v + 1) * k].copy_from_slice(&scratch);
        }
    }
    let mut total: u128 = 0;
    for &v in rv.preorder.iter() {
        let v = v as usize;
        if v == root {
            continue;
        }
        let p = rv.parent[v] as usize;
        if p == root {
            up[v * k..(v + 1) * k].copy_from_slice(&unit);
            total += down[v * k + cl.top];
        } else {
            let sib = rv.children(t, p).find(|&w| w != v).unwrap();
            cl.combine(
                &up[p * k..(p + 1) * k],
                &down[sib * k..(sib + 1) * k],
                &mut scratch,
            );
            up[v * k..(v + 1) * k].copy_from_slice(&scratch);
        }
        if t.is_leaf(v) {
            total += up[v * k + cl.top];
        }
    }
    Ok(total)
}

/// Default bound on the number of leaf subsets the enumeration route visits.
pub const ENUMERATION_CAP: u128 = 5_000_000;

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Label-preserving automorphism class of `s`: the set of keys of all its
/// relabellings, and `|Aut(s)| = m! / |orbit|`.
fn orbit(s: &LabelledShape) -> (HashSet<String>, u128) {
    let m = s.m();
    let mut perm: Vec<u32> = (1..=m as u32).collect();
    let mut keys = HashSet::new();
    let mut count = 0u128;
    loop {
        keys.insert(s.relabel(&perm).key().to_string());
        count += 1;
        // next lexicographic permutation
        let Some(i) = (0..m.saturating_sub(1))
            .rev()
            .find(|&i| perm[i] < perm[i + 1])
        else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    let aut = count / keys.len() as u128;
    (keys, aut)
}

/// Same count as [`phi_count`] by brute force: every unordered leaf subset,
/// labelled in increasing order, contributes `|Aut(s)|` when its spanned
/// shape is a relabelling of `s`.
pub fn phi_count_enumerate(t: &Cladogram, s: &LabelledShape, cap: u128) -> Result<u128> {
    if !s.is_cladogram() {
        return Err(Error::NotACladogram);
    }
    let m = s.m();
    let n = t.n();
    let subsets = binomial(n as u128, m as u128);
    if subsets > cap {
        return Err(Error::CapExceeded {
            what: "leaf subsets",
            value: subsets,
            cap,
        });
    }
    if m > n {
        return Ok(0);
    }
    let (keys, aut) = orbit(s);
    let mut idx: Vec<usize> = (1..=m).collect();
    let mut total = 0u128;
    loop {
        if keys.contains(shape(t, &idx)?.key()) {
            total += aut;
        }
        // next combination of 1..=n
        let Some(i) = (0..m).rev().find(|&i| idx[i] < n - (m - 1 - i)) else {
            break;
        };
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(total)
}

/// Count by summing the indicator over all `N^m` tuples; tiny trees only.
pub fn phi_count_all_tuples(t: &Cladogram, s: &LabelledShape) -> Result<u128> {
    let m = s.m();
    let n = t.n();
    let mut tuple = vec![1usize; m];
    let mut total = 0u128;
    loop {
        if shape(t, &tuple)? == *s {
            total += 1;
        }
        let Some(i) = (0..m).rev().find(|&i| tuple[i] < n) else {
            break;
        };
        tuple[i] += 1;
        for x in tuple.iter_mut().skip(i + 1) {
            *x = 1;
        }
    }
    Ok(total)
}
