use rand::Rng;

use crate::tree::{Cladogram, Topology, Vertex};

/// Mutable cladogram with indexed edges, for O(1) moves.
///
/// Each incidence stores the neighbour and the index of the shared edge. A
/// move frees one edge index when the branch point of the moving leaf is
/// suppressed and reuses it when the target edge is split, so indices stay
/// in `0..2N-3` and the vertex id of the branch point is recycled.
#[derive(Clone, Debug)]
pub struct ChainState {
    n: usize,
    nbr: Vec<[u32; 3]>,
    inc: Vec<[u32; 3]>,
    edges: Vec<[u32; 2]>,
}

impl Topology for ChainState {
    fn n_leaves(&self) -> usize {
        self.n
    }
    fn neighbors(&self, v: Vertex) -> &[u32] {
        let d = if v <= self.n { 1 } else { 3 };
        &self.nbr[v][..d]
    }
}

impl ChainState {
    pub fn new(t: &Cladogram) -> ChainState {
        let n = t.n();
        let nv = t.n_vertices();
        let mut nbr = vec![[0u32; 3]; nv + 1];
        let mut inc = vec![[0u32; 3]; nv + 1];
        let mut deg = vec![0usize; nv + 1];
        let mut edges = Vec::with_capacity(t.n_edges());
        for (i, (a, b)) in t.edges().enumerate() {
            edges.push([a as u32, b as u32]);
            for (x, y) in [(a, b), (b, a)] {
                nbr[x][deg[x]] = y as u32;
                inc[x][deg[x]] = i as u32;
                deg[x] += 1;
            }
        }
        ChainState { n, nbr, inc, edges }
    }

    pub fn to_cladogram(&self) -> Cladogram {
        Cladogram::from_adjacency_unchecked(self.n, self.nbr.clone())
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints of edge index `i`.
    pub fn edge(&self, i: usize) -> (Vertex, Vertex) {
        let [a, b] = self.edges[i];
        (a as usize, b as usize)
    }

    /// Index of the edge between `a` and `b`, if adjacent.
    pub fn edge_index(&self, a: Vertex, b: Vertex) -> Option<usize> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        let d = if a <= self.n { 1 } else { 3 };
        (0..d)
            .find(|&k| self.nbr[a][k] as usize == b)
            .map(|k| self.inc[a][k] as usize)
    }

    /// Whether moving leaf `u` onto edge index `e` leaves the tree unchanged:
    /// `e` is one of the three edges at the branch point of `u`.
    pub fn is_noop(&self, u: Vertex, e: usize) -> bool {
        let p = self.nbr[u][0] as usize;
        self.inc[p].contains(&(e as u32))
    }

    fn replace(&mut self, v: usize, old: u32, new_nbr: u32, new_inc: u32) {
        let d = if v <= self.n { 1 } else { 3 };
        let k = (0..d)
            .find(|&k| self.nbr[v][k] == old)
            .expect("incidence present");
        self.nbr[v][k] = new_nbr;
        self.inc[v][k] = new_inc;
    }

    /// Move leaf `u` onto edge index `e`. Returns the index of the edge the
    /// leaf's branch point now replaces on the old site (applying
    /// `(u, returned)` undoes the move), or `None` for a no-op.
    pub fn apply(&mut self, u: Vertex, e: usize) -> Option<usize> {
        if self.is_noop(u, e) {
            return None;
        }
        let p = self.nbr[u][0];
        let pu = p as usize;
        let eu = self.inc[u][0];
        let mut others = [(0u32, 0u32); 2];
        let mut k = 0;
        for j in 0..3 {
            if self.nbr[pu][j] != u as u32 {
                others[k] = (self.nbr[pu][j], self.inc[pu][j]);
                k += 1;
            }
        }
        let [(a, ea), (b, eb)] = others;
        // suppress p: a - b through edge ea; eb becomes free
        self.edges[ea as usize] = [a, b];
        self.replace(a as usize, p, b, ea);
        self.replace(b as usize, p, a, ea);
        // split e = (x, y): e becomes (x, p), eb becomes (p, y)
        let [x, y] = self.edges[e];
        self.edges[e] = [x, p];
        self.edges[eb as usize] = [p, y];
        self.replace(x as usize, y, p, e as u32);
        self.replace(y as usize, x, p, eb);
        self.nbr[pu] = [u as u32, x, y];
        self.inc[pu] = [eu, e as u32, eb];
        Some(ea as usize)
    }

    /// Uniform jump: a uniform pair (leaf, edge) conditioned on changing the tree.
    pub fn random_jump<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (Vertex, (Vertex, Vertex)) {
        loop {
            let u = rng.random_range(1..=self.n);
            let e = rng.random_range(0..self.edges.len());
            if !self.is_noop(u, e) {
                let target = self.edge(e);
                self.apply(u, e);
                return (u, target);
            }
        }
    }

    /// Uniform pair (leaf, edge), possibly a no-op.
    pub fn random_pair<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> (Vertex, (Vertex, Vertex), bool) {
        let u = rng.random_range(1..=self.n);
        let e = rng.random_range(0..self.edges.len());
        let target = self.edge(e);
        let jumped = self.apply(u, e).is_some();
        (u, target, jumped)
    }

    /// Rate of state-changing moves, `N (2N - 6)`.
    pub fn jump_rate(&self) -> f64 {
        (self.n * (2 * self.n - 6)) as f64
    }

    /// Run the chain for time `dt` using only state-changing moves. Returns the
    /// number of jumps. Exponential clocks are memoryless, so stopping at `dt`
    /// and restarting later does not change the law.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> u64 {
        let rate = self.jump_rate();
        if rate == 0.0 || dt <= 0.0 {
            return 0;
        }
        let mut t = 0.0;
        let mut jumps = 0;
        loop {
            t += exp_sample(rng, rate);
            if t > dt {
                return jumps;
            }
            self.random_jump(rng);
            jumps += 1;
        }
    }
}

pub(crate) fn exp_sample<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    // 1 - U lies in (0, 1]
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use crate::tree::uniform_cladogram;

    #[test]
    fn apply_and_undo() {
        let mut rng = replicate_rng(5, 0);
        for n in 4..30 {
            let t = uniform_cladogram(n, &mut rng).unwrap();
            let mut s = ChainState::new(&t);
            for _ in 0..50 {
                let u = rng.random_range(1..=n);
                let e = rng.random_range(0..s.n_edges());
                let before = s.to_cladogram();
                match s.apply(u, e) {
                    None => assert_eq!(s.to_cladogram(), before),
                    Some(back) => {
                        let after = s.to_cladogram();
                        assert_ne!(after, before);
                        Cladogram::new(n, &after.edges().collect::<Vec<_>>()).unwrap();
                        for i in 0..s.n_edges() {
                            let (a, b) = s.edge(i);
                            assert_eq!(s.edge_index(a, b), Some(i));
                        }
                        let mut undo = s.clone();
                        undo.apply(u, back).unwrap();
                        assert_eq!(undo.to_cladogram(), before);
                    }
                }
            }
        }
    }

    #[test]
    fn three_noops_per_leaf() {
        let mut rng = replicate_rng(6, 0);
        let t = uniform_cladogram(9, &mut rng).unwrap();
        let s = ChainState::new(&t);
        for u in 1..=9 {
            assert_eq!((0..s.n_edges()).filter(|&e| s.is_noop(u, e)).count(), 3);
        }
    }
}
