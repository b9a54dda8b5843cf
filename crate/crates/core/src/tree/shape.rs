use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigUint;

use super::{Cladogram, RootedView, Topology, Vertex};
use crate::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 8;

const NO_PARENT: usize = usize::MAX;

/// An m-labelled cladogram up to label-preserving isomorphism.
///
/// Nodes are numbered canonically: node 0 is the leaf carrying label 1, the
/// rest follow in preorder with siblings ordered by their smallest label.
/// Edge `i` joins node `i + 1` to its parent, so edges are indexed
/// `0..2m-3` for a cladogram.
#[derive(Clone)]
pub struct LabelledShape {
    m: usize,
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    labels: Vec<Vec<u32>>,
    key: String,
    is_cladogram: bool,
}

impl PartialEq for LabelledShape {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for LabelledShape {}
impl Hash for LabelledShape {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}
impl PartialOrd for LabelledShape {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for LabelledShape {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.m, &self.key).cmp(&(other.m, &other.key))
    }
}
impl fmt::Debug for LabelledShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LabelledShape({})", self.key)
    }
}
impl fmt::Display for LabelledShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

impl LabelledShape {
    /// Canonicalise a small tree given as an adjacency list with label sets.
    /// Returns the shape and the map from input node to canonical node.
    pub fn from_tree(
        adj: &[Vec<usize>],
        labels: &[Vec<u32>],
        m: usize,
    ) -> Result<(LabelledShape, Vec<usize>)> {
        let k = adj.len();
        if k == 0 || labels.len() != k {
            return Err(Error::InvalidArgument(
                "empty tree or label list of wrong length".into(),
            ));
        }
        let mut seen = vec![false; m + 1];
        let mut root = None;
        for (i, ls) in labels.iter().enumerate() {
            for &l in ls {
                let l = l as usize;
                if l == 0 || l > m || seen[l] {
                    return Err(Error::BadLabels(format!(
                        "label {l} out of range or repeated"
                    )));
                }
                seen[l] = true;
                if l == 1 {
                    root = Some(i);
                }
            }
        }
        if seen[1..].iter().any(|s| !s) {
            return Err(Error::BadLabels(format!("labels do not cover 1..={m}")));
        }
        let degsum: usize = adj.iter().map(Vec::len).sum();
        if degsum != 2 * (k - 1) {
            return Err(Error::NotATree("edge count is not node count - 1".into()));
        }
        for (i, a) in adj.iter().enumerate() {
            let want = if labels[i].is_empty() {
                3
            } else if k == 1 {
                0
            } else {
                1
            };
            if a.len() != want {
                return Err(Error::BadDegree {
                    vertex: i,
                    degree: a.len(),
                    expected: want,
                });
            }
        }
        let root = root.expect("label 1 present");

        // DFS from the root
        let mut parent = vec![NO_PARENT; k];
        let mut order = Vec::with_capacity(k);
        let mut visited = vec![false; k];
        let mut stack = vec![root];
        visited[root] = true;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        if order.len() != k {
            return Err(Error::NotATree("disconnected".into()));
        }
        let mut min_label = vec![u32::MAX; k];
        let mut kids: Vec<Vec<usize>> = vec![vec![]; k];
        for &v in order.iter().rev() {
            let own = labels[v].iter().copied().min().unwrap_or(u32::MAX);
            let mut ch: Vec<usize> = adj[v].iter().copied().filter(|&w| w != parent[v]).collect();
            ch.sort_by_key(|&w| min_label[w]);
            let sub = ch.iter().map(|&w| min_label[w]).min().unwrap_or(u32::MAX);
            min_label[v] = own.min(sub);
            kids[v] = ch;
        }
        // canonical preorder
        let mut new_id = vec![0usize; k];
        let mut canon_order = Vec::with_capacity(k);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            new_id[v] = canon_order.len();
            canon_order.push(v);
            for &w in kids[v].iter().rev() {
                stack.push(w);
            }
        }
        let mut c_parent = vec![NO_PARENT; k];
        let mut c_children = vec![vec![]; k];
        let mut c_labels = vec![vec![]; k];
        for &v in &canon_order {
            let nv = new_id[v];
            c_parent[nv] = if parent[v] == NO_PARENT {
                NO_PARENT
            } else {
                new_id[parent[v]]
            };
            c_children[nv] = kids[v].iter().map(|&w| new_id[w]).collect();
            let mut ls = labels[v].clone();
            ls.sort_unstable();
            c_labels[nv] = ls;
        }
        let is_cladogram = c_labels.iter().all(|l| l.len() <= 1);
        let mut shape = LabelledShape {
            m,
            parent: c_parent,
            children: c_children,
            labels: c_labels,
            key: String::new(),
            is_cladogram,
        };
        shape.key = shape.encode();
        Ok((shape, new_id))
    }

    fn encode(&self) -> String {
        fn leaf(ls: &[u32], out: &mut String) {
            for (i, l) in ls.iter().enumerate() {
                if i > 0 {
                    out.push('+');
                }
                out.push_str(&l.to_string());
            }
        }
        fn rec(s: &LabelledShape, v: usize, out: &mut String) {
            if s.children[v].is_empty() {
                leaf(&s.labels[v], out);
                return;
            }
            out.push('(');
            for (i, &c) in s.children[v].iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                rec(s, c, out);
            }
            out.push(')');
        }
        let mut out = String::new();
        leaf(&self.labels[0], &mut out);
        if let Some(&c) = self.children[0].first() {
            out.push('>');
            rec(self, c, &mut out);
        }
        out
    }

    /// The 2-cladogram: two leaves joined by one edge.
    pub fn pair() -> LabelledShape {
        Self::from_tree(&[vec![1], vec![0]], &[vec![1], vec![2]], 2)
            .unwrap()
            .0
    }

    /// The unique 3-cladogram.
    pub fn tripod() -> LabelledShape {
        let adj = vec![vec![3], vec![3], vec![3], vec![0, 1, 2]];
        Self::from_tree(&adj, &[vec![1], vec![2], vec![3], vec![]], 3)
            .unwrap()
            .0
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn key(&self) -> &str {
        &self.key
    }
    pub fn is_cladogram(&self) -> bool {
        self.is_cladogram
    }
    pub fn n_nodes(&self) -> usize {
        self.parent.len()
    }
    pub fn n_edges(&self) -> usize {
        self.parent.len() - 1
    }
    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.parent[v] != NO_PARENT).then_some(self.parent[v])
    }
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }
    pub fn labels(&self, v: usize) -> &[u32] {
        &self.labels[v]
    }
    pub fn is_leaf_node(&self, v: usize) -> bool {
        !self.labels[v].is_empty()
    }
    /// Edge `i` as (parent node, child node).
    pub fn edge(&self, i: usize) -> (usize, usize) {
        (self.parent[i + 1], i + 1)
    }
    /// An edge is external when it ends in a leaf.
    pub fn edge_is_external(&self, i: usize) -> bool {
        self.is_leaf_node(i + 1) || self.is_leaf_node(self.parent[i + 1])
    }
    pub fn node_of_label(&self, label: u32) -> usize {
        self.labels
            .iter()
            .position(|l| l.contains(&label))
            .expect("label present")
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![vec![]; self.n_nodes()];
        for c in 1..self.n_nodes() {
            let p = self.parent[c];
            adj[p].push(c);
            adj[c].push(p);
        }
        adj
    }

    /// Apply a label permutation: label `l` becomes `perm[l - 1]`.
    pub fn relabel(&self, perm: &[u32]) -> LabelledShape {
        let labels: Vec<Vec<u32>> = self
            .labels
            .iter()
            .map(|ls| ls.iter().map(|&l| perm[l as usize - 1]).collect())
            .collect();
        Self::from_tree(&self.adjacency(), &labels, self.m)
            .expect("relabelled shape")
            .0
    }

    /// The cladogram with leaf `i` carrying label `i`, internal vertices in
    /// canonical order after the leaves.
    pub fn to_cladogram(&self) -> Result<Cladogram> {
        if !self.is_cladogram {
            return Err(Error::NotACladogram);
        }
        let m = self.m;
        if m < 3 {
            return Err(Error::TooSmall(format!(
                "{m}-cladogram has no Cladogram form"
            )));
        }
        let mut id = vec![0usize; self.n_nodes()];
        let mut next = m + 1;
        for v in 0..self.n_nodes() {
            id[v] = match self.labels[v].first() {
                Some(&l) => l as usize,
                None => {
                    next += 1;
                    next - 1
                }
            };
        }
        let edges: Vec<(Vertex, Vertex)> = (1..self.n_nodes())
            .map(|c| (id[self.parent[c]], id[c]))
            .collect();
        Cladogram::new(m, &edges)
    }
}

/// Drop unlabelled nodes of degree 2 by joining their neighbours, then compact.
fn suppress_degree_two(
    mut adj: Vec<Vec<usize>>,
    labels: Vec<Vec<u32>>,
) -> (Vec<Vec<usize>>, Vec<Vec<u32>>) {
    let k = adj.len();
    let mut alive = vec![true; k];
    for v in 0..k {
        if labels[v].is_empty() && adj[v].len() == 2 {
            let (a, b) = (adj[v][0], adj[v][1]);
            for (x, y) in [(a, b), (b, a)] {
                let slot = adj[x].iter().position(|&w| w == v).unwrap();
                adj[x][slot] = y;
            }
            adj[v].clear();
            alive[v] = false;
        }
    }
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for v in 0..k {
        if alive[v] {
            map[v] = next;
            next += 1;
        }
    }
    let mut out_adj = Vec::with_capacity(next);
    let mut out_labels = Vec::with_capacity(next);
    for v in 0..k {
        if alive[v] {
            out_adj.push(adj[v].iter().map(|&w| map[w]).collect());
            out_labels.push(labels[v].clone());
        }
    }
    (out_adj, out_labels)
}

/// Shape spanned by `sample` (leaf vertices, position `i` carrying label
/// `i + 1`). Repeated leaves give one leaf with several labels.
pub fn shape(t: &Cladogram, sample: &[Vertex]) -> Result<LabelledShape> {
    for &v in sample {
        t.check_leaf(v)?;
    }
    Ok(shape_with(t.rooted(), sample))
}

pub(crate) fn shape_with(rv: &RootedView, sample: &[Vertex]) -> LabelledShape {
    let m = sample.len();
    assert!(m >= 1);
    let mut distinct: Vec<(Vertex, Vec<u32>)> = Vec::with_capacity(m);
    for (i, &v) in sample.iter().enumerate() {
        match distinct.iter_mut().find(|(w, _)| *w == v) {
            Some((_, ls)) => ls.push(i as u32 + 1),
            None => distinct.push((v, vec![i as u32 + 1])),
        }
    }
    if distinct.len() == 1 {
        let labels = vec![distinct.pop().unwrap().1];
        return LabelledShape::from_tree(&[vec![]], &labels, m).unwrap().0;
    }
    distinct.sort_by_key(|(v, _)| rv.tin(*v));
    let mut nodes: Vec<Vertex> = distinct.iter().map(|(v, _)| *v).collect();
    for i in 1..distinct.len() {
        nodes.push(rv.lca(distinct[i - 1].0, distinct[i].0));
    }
    nodes.sort_by_key(|&v| rv.tin(v));
    nodes.dedup();
    let index = |v: Vertex| {
        nodes
            .binary_search_by_key(&rv.tin(v), |&w| rv.tin(w))
            .unwrap()
    };
    let mut adj = vec![vec![]; nodes.len()];
    let mut labels = vec![vec![]; nodes.len()];
    for (v, ls) in &distinct {
        labels[index(*v)] = ls.clone();
    }
    let mut stack: Vec<usize> = vec![];
    for i in 0..nodes.len() {
        while let Some(&top) = stack.last() {
            if rv.is_ancestor(nodes[top], nodes[i]) {
                break;
            }
            stack.pop();
        }
        if let Some(&top) = stack.last() {
            adj[top].push(i);
            adj[i].push(top);
        }
        stack.push(i);
    }
    let (adj, labels) = suppress_degree_two(adj, labels);
    LabelledShape::from_tree(&adj, &labels, m)
        .expect("spanned shape")
        .0
}

/// Remove the leaf labelled `k`, suppress its branch point, shift labels
/// above `k` down by one.
pub fn delete_leaf_label(s: &LabelledShape, k: u32) -> Result<LabelledShape> {
    if !s.is_cladogram {
        return Err(Error::NotACladogram);
    }
    if s.m < 3 {
        return Err(Error::TooSmall(format!(
            "cannot delete a leaf from a {}-cladogram",
            s.m
        )));
    }
    if k == 0 || k as usize > s.m {
        return Err(Error::InvalidArgument(format!(
            "label {k} not in 1..={}",
            s.m
        )));
    }
    let mut adj = s.adjacency();
    let mut labels = s.labels.clone();
    let leaf = s.node_of_label(k);
    let b = adj[leaf][0];
    adj[b].retain(|&w| w != leaf);
    adj[leaf].clear();
    labels[leaf].clear();
    for ls in labels.iter_mut() {
        for l in ls.iter_mut() {
            if *l > k {
                *l -= 1;
            }
        }
    }
    // drop the isolated leaf node, then the degree-2 branch point
    let keep: Vec<usize> = (0..adj.len()).filter(|&v| v != leaf).collect();
    let mut map = vec![usize::MAX; adj.len()];
    for (i, &v) in keep.iter().enumerate() {
        map[v] = i;
    }
    let adj2: Vec<Vec<usize>> = keep
        .iter()
        .map(|&v| adj[v].iter().map(|&w| map[w]).collect())
        .collect();
    let labels2: Vec<Vec<u32>> = keep.iter().map(|&v| labels[v].clone()).collect();
    let (adj3, labels3) = suppress_degree_two(adj2, labels2);
    Ok(LabelledShape::from_tree(&adj3, &labels3, s.m - 1)?.0)
}

/// Insert a new leaf labelled `k` on edge `e` of `s`; existing labels `>= k`
/// move up by one.
pub fn insert_leaf(s: &LabelledShape, k: u32, e: usize) -> Result<LabelledShape> {
    if !s.is_cladogram {
        return Err(Error::NotACladogram);
    }
    if e >= s.n_edges() {
        return Err(Error::BadEdge(format!(
            "edge index {e} of a shape with {} edges",
            s.n_edges()
        )));
    }
    if k == 0 || k as usize > s.m + 1 {
        return Err(Error::InvalidArgument(format!(
            "label {k} not in 1..={}",
            s.m + 1
        )));
    }
    let mut adj = s.adjacency();
    let mut labels = s.labels.clone();
    for ls in labels.iter_mut() {
        for l in ls.iter_mut() {
            if *l >= k {
                *l += 1;
            }
        }
    }
    let (p, c) = s.edge(e);
    let w = adj.len();
    let leaf = w + 1;
    for (x, y) in [(p, c), (c, p)] {
        let slot = adj[x].iter().position(|&z| z == y).unwrap();
        adj[x][slot] = w;
    }
    adj.push(vec![p, c, leaf]);
    adj.push(vec![w]);
    labels.push(vec![]);
    labels.push(vec![k]);
    Ok(LabelledShape::from_tree(&adj, &labels, s.m + 1)?.0)
}

/// `(2m-5)!!`, with the 2-cladogram counted once.
pub fn count_cladograms(m: usize) -> BigUint {
    let mut c = BigUint::from(1u32);
    for k in 3..=m {
        c *= BigUint::from(2 * k - 5);
    }
    c
}

pub fn enumerate_cladograms(m: usize) -> Result<Vec<LabelledShape>> {
    enumerate_cladograms_with_cap(m, DEFAULT_ENUMERATION_CAP)
}

/// All labelled m-cladograms, sorted by canonical key.
pub fn enumerate_cladograms_with_cap(m: usize, cap: usize) -> Result<Vec<LabelledShape>> {
    if m > cap {
        return Err(Error::CapExceeded {
            what: "m",
            value: m as u128,
            cap: cap as u128,
        });
    }
    if m < 2 {
        return Err(Error::TooSmall(format!("m = {m}")));
    }
    let mut level = vec![LabelledShape::pair()];
    for k in 3..=m {
        let mut next = Vec::with_capacity(level.len() * (2 * k - 5));
        for s in &level {
            for e in 0..s.n_edges() {
                next.push(insert_leaf(s, k as u32, e)?);
            }
        }
        level = next;
    }
    level.sort();
    let distinct: HashSet<&str> = level.iter().map(|s| s.key()).collect();
    if distinct.len() != level.len() {
        return Err(Error::InternalInconsistency(
            "duplicate cladograms in enumeration".into(),
        ));
    }
    Ok(level)
}

/// Leaf counts per edge of the shape spanned by leaves `1..=m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMassProfile {
    pub shape: LabelledShape,
    /// Indexed by shape edge; external edges count their own leaf.
    pub counts: Vec<u32>,
}

impl EdgeMassProfile {
    pub fn new(shape: LabelledShape, counts: Vec<u32>, n: usize) -> Result<EdgeMassProfile> {
        if !shape.is_cladogram() {
            return Err(Error::BadProfile("shape is not a cladogram".into()));
        }
        if counts.len() != shape.n_edges() {
            return Err(Error::BadProfile(format!(
                "{} counts for {} edges",
                counts.len(),
                shape.n_edges()
            )));
        }
        for (e, &c) in counts.iter().enumerate() {
            if shape.edge_is_external(e) && c == 0 {
                return Err(Error::BadProfile(format!("external edge {e} has count 0")));
            }
        }
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total != n {
            return Err(Error::BadProfile(format!("counts sum to {total}, not {n}")));
        }
        Ok(EdgeMassProfile { shape, counts })
    }

    pub fn n(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }
}

/// Profile of the first `m` leaves of `t`.
pub fn edge_mass_profile(t: &Cladogram, m: usize) -> Result<EdgeMassProfile> {
    let n = t.n();
    if m < 2 || m > n {
        return Err(Error::InvalidArgument(format!("m = {m} with N = {n}")));
    }
    let rv = t.rooted();
    let nv = t.n_vertices();
    let mut marked = vec![0u32; nv + 1];
    for &v in rv.preorder.iter().rev() {
        let v = v as usize;
        let mut c = u32::from(v <= m);
        for w in rv.children(t, v) {
            c += marked[w];
        }
        marked[v] = c;
    }
    let is_node = |v: Vertex| -> bool {
        if v <= m {
            return true;
        }
        marked[v] > 0 && rv.children(t, v).filter(|&w| marked[w] > 0).count() == 2
    };
    let mut low = vec![0usize; nv + 1];
    for &v in rv.preorder.iter().rev() {
        let v = v as usize;
        if marked[v] == 0 {
            continue;
        }
        low[v] = if is_node(v) && v != 1 {
            v
        } else {
            rv.children(t, v)
                .find(|&w| marked[w] > 0)
                .map(|w| low[w])
                .unwrap_or(v)
        };
    }
    let mut count = vec![0u32; nv + 1];
    let mut anc = vec![0usize; nv + 1];
    let mut skel_nodes = vec![1usize];
    for &v in &rv.preorder {
        let v = v as usize;
        if marked[v] == 0 {
            continue;
        }
        if v != 1 {
            let p = rv.parent[v] as usize;
            anc[v] = if p == 1 || is_node(p) { p } else { anc[p] };
            if is_node(v) {
                skel_nodes.push(v);
            }
        }
        let target = if v == 1 {
            low[rv.children(t, 1).next().unwrap()]
        } else {
            low[v]
        };
        if v <= m {
            count[target] += 1;
        }
        for w in rv.children(t, v) {
            if marked[w] == 0 {
                count[target] += rv.below[w];
            }
        }
    }
    let mut local = vec![usize::MAX; nv + 1];
    for (i, &v) in skel_nodes.iter().enumerate() {
        local[v] = i;
    }
    let mut adj = vec![vec![]; skel_nodes.len()];
    let mut labels = vec![vec![]; skel_nodes.len()];
    for (i, &v) in skel_nodes.iter().enumerate() {
        if v <= m {
            labels[i] = vec![v as u32];
        }
        if v != 1 {
            let j = local[anc[v]];
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let (shape, map) = LabelledShape::from_tree(&adj, &labels, m)?;
    let mut counts = vec![0u32; shape.n_edges()];
    for (i, &v) in skel_nodes.iter().enumerate() {
        if v != 1 {
            counts[map[i] - 1] = count[v];
        }
    }
    EdgeMassProfile::new(shape, counts, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::validate_cladogram;

    fn cherry() -> Cladogram {
        validate_cladogram(4, &[(1, 5), (2, 5), (5, 6), (3, 6), (4, 6)]).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(count_cladograms(2), BigUint::from(1u32));
        assert_eq!(count_cladograms(3), BigUint::from(1u32));
        assert_eq!(count_cladograms(4), BigUint::from(3u32));
        assert_eq!(count_cladograms(8), BigUint::from(10395u32));
    }

    #[test]
    fn enumeration_sizes() {
        for (m, c) in [(2, 1), (3, 1), (4, 3), (5, 15), (6, 105), (7, 945)] {
            let all = enumerate_cladograms(m).unwrap();
            assert_eq!(all.len(), c);
            assert!(all
                .iter()
                .all(|s| s.is_cladogram() && s.n_edges() == 2 * m - 3));
        }
        assert!(matches!(
            enumerate_cladograms(9),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn three_leaf_sample() {
        let s = shape(&cherry(), &[4, 1, 2]).unwrap();
        assert!(s.is_cladogram());
        assert_eq!(s, LabelledShape::tripod());
    }

    #[test]
    fn cherry_shape() {
        let s = shape(&cherry(), &[1, 2, 3, 4]).unwrap();
        assert_eq!(s.key(), "1>(2,(3,4))");
        let s = shape(&cherry(), &[1, 3, 2, 4]).unwrap();
        assert_eq!(s.key(), "1>((2,4),3)");
    }

    #[test]
    fn repeated_sample() {
        let s = shape(&cherry(), &[1, 1, 3]).unwrap();
        assert!(!s.is_cladogram());
        assert_eq!(s.n_nodes(), 2);
        assert_eq!(s.labels(0), &[1, 2]);
        assert_eq!(s.labels(1), &[3]);
        let s = shape(&cherry(), &[2, 2]).unwrap();
        assert_eq!(s.key(), "1+2");
    }

    #[test]
    fn delete_and_insert() {
        let s = shape(&cherry(), &[1, 2, 3, 4]).unwrap();
        let d = delete_leaf_label(&s, 4).unwrap();
        assert_eq!(d, LabelledShape::tripod());
        assert_eq!(d.n_edges(), 3);
        let back: Vec<LabelledShape> = (0..3).map(|e| insert_leaf(&d, 4, e).unwrap()).collect();
        assert!(back.contains(&s));
        let keys: HashSet<_> = back.iter().map(|x| x.key().to_string()).collect();
        assert_eq!(keys.len(), 3);
        assert_eq!(
            delete_leaf_label(&LabelledShape::tripod(), 2).unwrap(),
            LabelledShape::pair()
        );
        assert!(matches!(
            delete_leaf_label(&LabelledShape::pair(), 1),
            Err(Error::TooSmall(_))
        ));
    }

    #[test]
    fn insert_next_to_leaf_one_makes_cherry() {
        let t3 = LabelledShape::tripod();
        let e = (0..t3.n_edges()).find(|&e| t3.edge(e).0 == 0).unwrap();
        let s = insert_leaf(&t3, 4, e).unwrap();
        // cherry {1,4}
        let t = s.to_cladogram().unwrap();
        let p = t.neighbors(1)[0] as usize;
        assert!(t.neighbors(p).contains(&4));
    }

    #[test]
    fn round_trips_exhaustive() {
        for m in 3..=6 {
            for s in enumerate_cladograms(m).unwrap() {
                for k in 1..=m as u32 {
                    let d = delete_leaf_label(&s, k).unwrap();
                    let hits = (0..d.n_edges())
                        .filter(|&e| insert_leaf(&d, k, e).unwrap() == s)
                        .count();
                    assert_eq!(hits, 1);
                }
                let t = s.to_cladogram().unwrap();
                assert_eq!(t.full_shape(), s);
            }
        }
    }

    #[test]
    fn keys_distinguish_all_pairs() {
        // distinct cladograms are non-isomorphic as labelled trees: compare
        // against an independent invariant, the set of splits.
        fn splits(s: &LabelledShape) -> Vec<Vec<u32>> {
            let t = s.to_cladogram().unwrap();
            let rv = t.rooted();
            let mut out = vec![];
            for v in t.internal_vertices() {
                let mut below: Vec<u32> = t
                    .leaves()
                    .filter(|&l| rv.is_ancestor(v, l))
                    .map(|l| l as u32)
                    .collect();
                below.sort();
                out.push(below);
            }
            out.sort();
            out
        }
        for m in 3..=5 {
            let all = enumerate_cladograms(m).unwrap();
            for a in &all {
                for b in &all {
                    assert_eq!(a == b, splits(a) == splits(b));
                }
            }
        }
    }

    #[test]
    fn profile_of_cherry() {
        let t = cherry();
        let p = edge_mass_profile(&t, 3).unwrap();
        assert_eq!(p.shape, LabelledShape::tripod());
        let mut by_label = vec![0; 4];
        for e in 0..3 {
            let (a, b) = p.shape.edge(e);
            let leaf = if p.shape.is_leaf_node(b) { b } else { a };
            by_label[p.shape.labels(leaf)[0] as usize] = p.counts[e];
        }
        assert_eq!(&by_label[1..], &[1, 1, 2]);
        let p = edge_mass_profile(&t, 4).unwrap();
        assert_eq!(p.counts.iter().sum::<u32>(), 4);
        assert_eq!(p.counts.iter().filter(|&&c| c == 0).count(), 1);
    }
}
