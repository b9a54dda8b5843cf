use super::{Topology, Vertex};

const NONE: u32 = 0;

/// A cladogram hung from one vertex: parents, depths, Euler intervals and
/// leaf counts below every vertex. Vertex ids index directly; slot 0 is unused.
#[derive(Clone, Debug)]
pub struct RootedView {
    pub root: Vertex,
    pub parent: Vec<u32>,
    pub depth: Vec<u32>,
    tin: Vec<u32>,
    tout: Vec<u32>,
    /// Leaves in the subtree of each vertex (the root counts all N).
    pub below: Vec<u32>,
    /// Vertices in preorder, root first.
    pub preorder: Vec<u32>,
}

impl RootedView {
    pub fn build<T: Topology + ?Sized>(t: &T, root: Vertex) -> RootedView {
        let nv = t.n_vertices();
        let n = t.n_leaves();
        let mut parent = vec![NONE; nv + 1];
        let mut depth = vec![0u32; nv + 1];
        let mut tin = vec![0u32; nv + 1];
        let mut tout = vec![0u32; nv + 1];
        let mut below = vec![0u32; nv + 1];
        let mut preorder = Vec::with_capacity(nv);
        let mut stack: Vec<(u32, bool)> = vec![(root as u32, false)];
        let mut clock = 0u32;
        while let Some((v, done)) = stack.pop() {
            let vu = v as usize;
            if done {
                tout[vu] = clock;
                let mut b = u32::from(vu <= n);
                for &w in t.neighbors(vu) {
                    if w != parent[vu] {
                        b += below[w as usize];
                    }
                }
                below[vu] = b;
                continue;
            }
            tin[vu] = clock;
            clock += 1;
            preorder.push(v);
            stack.push((v, true));
            for &w in t.neighbors(vu).iter().rev() {
                if w != parent[vu] {
                    parent[w as usize] = v;
                    depth[w as usize] = depth[vu] + 1;
                    stack.push((w, false));
                }
            }
        }
        RootedView {
            root,
            parent,
            depth,
            tin,
            tout,
            below,
            preorder,
        }
    }

    pub fn parent_of(&self, v: Vertex) -> Option<Vertex> {
        match self.parent[v] {
            NONE => None,
            p => Some(p as usize),
        }
    }

    /// Children of `v` in the rooted view.
    pub fn children<'a, T: Topology + ?Sized>(
        &'a self,
        t: &'a T,
        v: Vertex,
    ) -> impl Iterator<Item = Vertex> + 'a {
        let p = self.parent[v];
        t.neighbors(v)
            .iter()
            .filter(move |&&w| w != p)
            .map(|&w| w as usize)
    }

    /// `a` is an ancestor of `b` (or equal).
    pub fn is_ancestor(&self, a: Vertex, b: Vertex) -> bool {
        self.tin[a] <= self.tin[b] && self.tout[b] <= self.tout[a]
    }

    pub fn lca(&self, mut a: Vertex, mut b: Vertex) -> Vertex {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a] as usize;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b] as usize;
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
        }
        a
    }

    /// Median of three vertices: the deepest of the three pairwise LCAs.
    pub fn median(&self, x: Vertex, y: Vertex, z: Vertex) -> Vertex {
        let a = self.lca(x, y);
        let b = self.lca(y, z);
        let c = self.lca(x, z);
        let mut best = a;
        for v in [b, c] {
            if self.depth[v] > self.depth[best] {
                best = v;
            }
        }
        best
    }

    /// The child of `v` on the path down to its strict descendant `u`.
    pub fn child_toward(&self, v: Vertex, mut u: Vertex) -> Vertex {
        debug_assert!(v != u && self.is_ancestor(v, u));
        while self.parent[u] as usize != v {
            u = self.parent[u] as usize;
        }
        u
    }

    /// Leaf count of the component of `T - {v}` containing `u`.
    pub fn component_count(&self, n: usize, v: Vertex, u: Vertex) -> usize {
        debug_assert_ne!(u, v);
        if self.is_ancestor(v, u) {
            self.below[self.child_toward(v, u)] as usize
        } else {
            n - self.below[v] as usize
        }
    }

    /// Vertices on the path from `x` to `y`, both included, in order.
    pub fn path(&self, x: Vertex, y: Vertex) -> Vec<Vertex> {
        let l = self.lca(x, y);
        let mut left = vec![];
        let mut v = x;
        while v != l {
            left.push(v);
            v = self.parent[v] as usize;
        }
        left.push(l);
        let mut right = vec![];
        let mut v = y;
        while v != l {
            right.push(v);
            v = self.parent[v] as usize;
        }
        left.extend(right.into_iter().rev());
        left
    }

    pub fn tin(&self, v: Vertex) -> u32 {
        self.tin[v]
    }
}
