//! Finite binary cladograms as algebraic measure trees.
//!
//! Vertices `1..=N` are the leaves, `N+1..=2N-2` the internal vertices. The
//! sampling measure is uniform on the leaves and is never stored.

mod generate;
mod io;
mod metric;
mod rooted;
mod shape;

use std::sync::OnceLock;

use num_bigint::BigUint;

use crate::{Error, Result};

pub use generate::{balanced_cladogram, comb_cladogram, uniform_cladogram};
pub use io::{parse, parse_json, parse_newick, to_json, to_newick};
pub(crate) use metric::internal_counts_with;
pub use metric::{
    branch_point, component_count, component_mass, edge_projection_count, edge_projection_identity,
    internal_component_counts, nu_atom, nu_atoms, r_mu, total_length, total_length_routes,
    IntrinsicMetric,
};
pub use rooted::RootedView;
pub use shape::{
    count_cladograms, delete_leaf_label, edge_mass_profile, enumerate_cladograms,
    enumerate_cladograms_with_cap, insert_leaf, shape, EdgeMassProfile, LabelledShape,
    DEFAULT_ENUMERATION_CAP,
};

pub type Vertex = usize;

/// Adjacency access shared by the immutable [`Cladogram`] and the mutable
/// chain state.
pub trait Topology {
    fn n_leaves(&self) -> usize;
    /// Neighbours of `v`: one for a leaf, three for an internal vertex.
    fn neighbors(&self, v: Vertex) -> &[u32];

    fn n_vertices(&self) -> usize {
        2 * self.n_leaves() - 2
    }
    fn is_leaf(&self, v: Vertex) -> bool {
        v >= 1 && v <= self.n_leaves()
    }
    fn contains(&self, v: Vertex) -> bool {
        v >= 1 && v <= self.n_vertices()
    }
}

/// A labelled binary unrooted tree with `N >= 3` leaves.
#[derive(Debug)]
pub struct Cladogram {
    n: usize,
    adj: Vec<[u32; 3]>,
    edges: Vec<(u32, u32)>,
    rooted: OnceLock<RootedView>,
}

impl Clone for Cladogram {
    fn clone(&self) -> Self {
        Cladogram {
            n: self.n,
            adj: self.adj.clone(),
            edges: self.edges.clone(),
            rooted: OnceLock::new(),
        }
    }
}

impl PartialEq for Cladogram {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}
impl Eq for Cladogram {}

impl Topology for Cladogram {
    fn n_leaves(&self) -> usize {
        self.n
    }
    fn neighbors(&self, v: Vertex) -> &[u32] {
        let d = if v <= self.n { 1 } else { 3 };
        &self.adj[v][..d]
    }
}

/// Check an edge list and build the cladogram.
pub fn validate_cladogram(n_leaves: usize, edges: &[(Vertex, Vertex)]) -> Result<Cladogram> {
    let n = n_leaves;
    if n < 3 {
        return Err(Error::TooSmall(format!(
            "a cladogram needs 3 leaves, got {n}"
        )));
    }
    let nv = 2 * n - 2;
    if edges.len() != 2 * n - 3 {
        return Err(Error::WrongEdgeCount {
            expected: 2 * n - 3,
            found: edges.len(),
        });
    }
    let mut adj = vec![[0u32; 3]; nv + 1];
    let mut deg = vec![0usize; nv + 1];
    for &(a, b) in edges {
        for v in [a, b] {
            if v == 0 || v > nv {
                return Err(Error::BadLabels(format!(
                    "vertex id {v} outside 1..={nv} (leaves 1..={n})"
                )));
            }
        }
        if a == b {
            return Err(Error::NotATree(format!("loop at {a}")));
        }
        for (v, w) in [(a, b), (b, a)] {
            let cap = if v <= n { 1 } else { 3 };
            if deg[v] >= cap {
                return Err(Error::BadDegree {
                    vertex: v,
                    degree: deg[v] + 1,
                    expected: cap,
                });
            }
            adj[v][deg[v]] = w as u32;
            deg[v] += 1;
        }
    }
    for v in 1..=nv {
        let want = if v <= n { 1 } else { 3 };
        if deg[v] != want {
            return Err(Error::BadDegree {
                vertex: v,
                degree: deg[v],
                expected: want,
            });
        }
    }
    // 2N-3 edges on 2N-2 vertices: connected iff acyclic.
    let mut seen = vec![false; nv + 1];
    let mut stack = vec![1usize];
    seen[1] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        let d = if v <= n { 1 } else { 3 };
        for &w in &adj[v][..d] {
            let w = w as usize;
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    if count != nv {
        return Err(Error::NotATree(
            "graph is disconnected or has a cycle".into(),
        ));
    }
    let mut es: Vec<(u32, u32)> = edges
        .iter()
        .map(|&(a, b)| (a.min(b) as u32, a.max(b) as u32))
        .collect();
    es.sort_unstable();
    Ok(Cladogram {
        n,
        adj,
        edges: es,
        rooted: OnceLock::new(),
    })
}

impl Cladogram {
    pub fn new(n_leaves: usize, edges: &[(Vertex, Vertex)]) -> Result<Cladogram> {
        validate_cladogram(n_leaves, edges)
    }

    /// Build from an adjacency already known to be a valid cladogram.
    pub(crate) fn from_adjacency_unchecked(n: usize, adj: Vec<[u32; 3]>) -> Cladogram {
        let mut edges = Vec::with_capacity(2 * n - 3);
        for v in 1..adj.len() {
            let d = if v <= n { 1 } else { 3 };
            for &w in &adj[v][..d] {
                if (v as u32) < w {
                    edges.push((v as u32, w));
                }
            }
        }
        edges.sort_unstable();
        let mut adj = adj;
        for a in adj.iter_mut().skip(n + 1) {
            a.sort_unstable();
        }
        Cladogram {
            n,
            adj,
            edges,
            rooted: OnceLock::new(),
        }
    }

    /// The star on leaves 1, 2, 3 and centre 4.
    pub fn star() -> Cladogram {
        validate_cladogram(3, &[(1, 4), (2, 4), (3, 4)]).expect("star")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (Vertex, Vertex)> + '_ {
        self.edges.iter().map(|&(a, b)| (a as usize, b as usize))
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, i: usize) -> (Vertex, Vertex) {
        let (a, b) = self.edges[i];
        (a as usize, b as usize)
    }

    pub fn edge_index(&self, a: Vertex, b: Vertex) -> Option<usize> {
        let key = (a.min(b) as u32, a.max(b) as u32);
        self.edges.binary_search(&key).ok()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        if v <= self.n {
            1
        } else {
            3
        }
    }

    pub fn leaves(&self) -> std::ops::RangeInclusive<Vertex> {
        1..=self.n
    }

    pub fn internal_vertices(&self) -> std::ops::RangeInclusive<Vertex> {
        self.n + 1..=2 * self.n - 2
    }

    /// The tree rooted at leaf 1, computed once.
    pub fn rooted(&self) -> &RootedView {
        self.rooted.get_or_init(|| RootedView::build(self, 1))
    }

    pub(crate) fn check_vertex(&self, v: Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v))
        }
    }

    pub(crate) fn check_leaf(&self, v: Vertex) -> Result<()> {
        if self.is_leaf(v) {
            Ok(())
        } else {
            Err(Error::BadLeaf(v))
        }
    }

    /// Shape spanned by all N leaves in label order.
    pub fn full_shape(&self) -> LabelledShape {
        let sample: Vec<Vertex> = (1..=self.n).collect();
        shape(self, &sample).expect("leaves")
    }

    /// Number of labelled N-cladograms, `(2N-5)!!`.
    pub fn count(n: usize) -> BigUint {
        count_cladograms(n)
    }
}
