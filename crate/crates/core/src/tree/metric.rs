use super::{Cladogram, RootedView, Topology, Vertex};
use crate::{Error, Rational, Result};

/// The vertex lying on all three pairwise paths.
pub fn branch_point(t: &Cladogram, x: Vertex, y: Vertex, z: Vertex) -> Result<Vertex> {
    for v in [x, y, z] {
        t.check_vertex(v)?;
    }
    Ok(t.rooted().median(x, y, z))
}

/// Number of leaves in the component of `t - {v}` containing `u`.
pub fn component_count(t: &Cladogram, v: Vertex, u: Vertex) -> Result<usize> {
    t.check_vertex(v)?;
    t.check_vertex(u)?;
    if u == v {
        return Err(Error::SameVertex);
    }
    Ok(t.rooted().component_count(t.n(), v, u))
}

/// `mu(S_v(u))`: leaf count over N.
pub fn component_mass(t: &Cladogram, v: Vertex, u: Vertex) -> Result<Rational> {
    Ok(Rational::new(
        component_count(t, v, u)? as i128,
        t.n() as i128,
    ))
}

/// Leaf counts of the three components at every internal vertex, for a tree
/// rooted at leaf 1: (first child, second child, parent side).
pub(crate) fn internal_counts_with<T: Topology + ?Sized>(
    t: &T,
    rv: &RootedView,
) -> Vec<(Vertex, [u32; 3])> {
    let n = t.n_leaves() as u32;
    let mut out = Vec::with_capacity(t.n_leaves() - 2);
    for &v in &rv.preorder {
        let v = v as usize;
        if t.is_leaf(v) {
            continue;
        }
        let mut c = [0u32; 3];
        for (i, w) in rv.children(t, v).enumerate() {
            c[i] = rv.below[w];
        }
        c[2] = n - rv.below[v];
        out.push((v, c));
    }
    out
}

pub fn internal_component_counts(t: &Cladogram) -> Vec<(Vertex, [u32; 3])> {
    internal_counts_with(t, t.rooted())
}

/// Numerator of `nu{v}` over `N^3`.
fn atom_numerator(n: i128, v: Vertex, t: &Cladogram, counts: Option<[u32; 3]>) -> i128 {
    if t.is_leaf(v) {
        // w^3 + 3 w^2 (1 - w), w = 1/N
        1 + 3 * (n - 1)
    } else {
        let c = counts.expect("internal counts");
        6 * c[0] as i128 * c[1] as i128 * c[2] as i128
    }
}

/// `nu{v}` for every vertex as numerators over `N^3` (index 0 unused).
pub fn nu_atoms(t: &Cladogram) -> Vec<i128> {
    let n = t.n() as i128;
    let mut out = vec![0i128; t.n_vertices() + 1];
    for v in t.leaves() {
        out[v] = atom_numerator(n, v, t, None);
    }
    for (v, c) in internal_component_counts(t) {
        out[v] = atom_numerator(n, v, t, Some(c));
    }
    out
}

/// Mass of `{v}` under the branch point distribution.
pub fn nu_atom(t: &Cladogram, v: Vertex) -> Result<Rational> {
    t.check_vertex(v)?;
    let n = t.n() as i128;
    let counts = if t.is_leaf(v) {
        None
    } else {
        let rv = t.rooted();
        let mut c = [0u32; 3];
        for (i, w) in rv.children(t, v).enumerate() {
            c[i] = rv.below[w];
        }
        c[2] = t.n() as u32 - rv.below[v];
        Some(c)
    };
    Ok(Rational::new(atom_numerator(n, v, t, counts), n * n * n))
}

/// Intrinsic metric with ν-prefix sums along the rooted view, so each
/// distance costs one LCA walk.
pub struct IntrinsicMetric<'a> {
    t: &'a Cladogram,
    atoms: Vec<i128>,
    prefix: Vec<i128>,
    denom: i128,
}

impl<'a> IntrinsicMetric<'a> {
    pub fn new(t: &'a Cladogram) -> Self {
        let atoms = nu_atoms(t);
        let rv = t.rooted();
        let mut prefix = vec![0i128; atoms.len()];
        for &v in &rv.preorder {
            let v = v as usize;
            prefix[v] = atoms[v] + rv.parent_of(v).map_or(0, |p| prefix[p]);
        }
        let n = t.n() as i128;
        IntrinsicMetric {
            t,
            atoms,
            prefix,
            denom: n * n * n,
        }
    }

    /// Numerator of `r(x, y)` over `2 N^3`.
    pub fn numerator(&self, x: Vertex, y: Vertex) -> i128 {
        if x == y {
            return 0;
        }
        let l = self.t.rooted().lca(x, y);
        let path = self.prefix[x] + self.prefix[y] - 2 * self.prefix[l] + self.atoms[l];
        2 * path - self.atoms[x] - self.atoms[y]
    }

    pub fn distance(&self, x: Vertex, y: Vertex) -> Rational {
        Rational::new(self.numerator(x, y), 2 * self.denom)
    }

    pub fn atoms(&self) -> &[i128] {
        &self.atoms
    }

    pub fn denominator(&self) -> i128 {
        self.denom
    }
}

/// `r_mu(x, y) = nu([x, y]) - nu{x}/2 - nu{y}/2`.
pub fn r_mu(t: &Cladogram, x: Vertex, y: Vertex) -> Result<Rational> {
    t.check_vertex(x)?;
    t.check_vertex(y)?;
    if x == y {
        return Ok(Rational::from_integer(0));
    }
    // direct path sum, independent of the prefix-sum route
    let atoms = nu_atoms(t);
    let path = t.rooted().path(x, y);
    let s: i128 = path.iter().map(|&v| atoms[v]).sum();
    let n = t.n() as i128;
    Ok(Rational::new(2 * s - atoms[x] - atoms[y], 2 * n * n * n))
}

/// Total length by the degree formula and by summing `r_mu` over edges.
pub fn total_length_routes(t: &Cladogram) -> (Rational, Rational) {
    let atoms = nu_atoms(t);
    let n = t.n() as i128;
    let d = n * n * n;
    let by_degree: i128 = (1..atoms.len())
        .map(|v| t.degree(v) as i128 * atoms[v])
        .sum();
    let metric = IntrinsicMetric::new(t);
    let by_edges: i128 = t.edges().map(|(a, b)| metric.numerator(a, b)).sum();
    (
        Rational::new(by_degree, 2 * d),
        Rational::new(by_edges, 2 * d),
    )
}

pub fn total_length(t: &Cladogram) -> Result<Rational> {
    let (a, b) = total_length_routes(t);
    if a != b {
        return Err(Error::InternalInconsistency(format!(
            "total length {a} by degrees, {b} by edges"
        )));
    }
    Ok(a)
}

/// Number of edges whose projection onto the path `[z, z']` falls strictly
/// inside it. Edges on the path project to themselves; a side edge projects
/// to the path vertex it hangs from.
pub fn edge_projection_count(t: &Cladogram, z: Vertex, z2: Vertex) -> Result<usize> {
    t.check_vertex(z)?;
    t.check_vertex(z2)?;
    if z == z2 {
        return Err(Error::SameVertex);
    }
    let rv = t.rooted();
    let mut on_path = vec![false; t.n_vertices() + 1];
    for v in rv.path(z, z2) {
        on_path[v] = true;
    }
    let mut count = 0;
    for (a, b) in t.edges() {
        if on_path[a] && on_path[b] {
            count += 1;
            continue;
        }
        let w = if on_path[a] { b } else { a };
        let p = rv.median(w, z, z2);
        if p != z && p != z2 {
            count += 1;
        }
    }
    Ok(count)
}

/// Both sides of the edge/leaf projection identity:
/// (edge count, 2 * #{leaves projecting strictly inside} + 1).
pub fn edge_projection_identity(t: &Cladogram, z: Vertex, z2: Vertex) -> Result<(usize, usize)> {
    let lhs = edge_projection_count(t, z, z2)?;
    let rv = t.rooted();
    let inside = t
        .leaves()
        .filter(|&x| {
            let p = rv.median(x, z, z2);
            p != z && p != z2
        })
        .count();
    Ok((lhs, 2 * inside + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::validate_cladogram;

    fn cherry() -> Cladogram {
        validate_cladogram(4, &[(1, 5), (2, 5), (5, 6), (3, 6), (4, 6)]).unwrap()
    }

    fn q(a: i128, b: i128) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn branch_points() {
        let t = cherry();
        assert_eq!(branch_point(&t, 1, 2, 3).unwrap(), 5);
        assert_eq!(branch_point(&t, 1, 3, 4).unwrap(), 6);
        assert_eq!(branch_point(&t, 1, 3, 3).unwrap(), 3);
        assert_eq!(branch_point(&t, 2, 2, 2).unwrap(), 2);
        assert!(branch_point(&t, 1, 2, 7).is_err());
    }

    #[test]
    fn component_masses() {
        let s = Cladogram::star();
        assert_eq!(component_mass(&s, 4, 1).unwrap(), q(1, 3));
        let t = cherry();
        assert_eq!(component_mass(&t, 5, 3).unwrap(), q(2, 4));
        assert_eq!(component_mass(&t, 2, 4).unwrap(), q(3, 4));
        assert_eq!(component_mass(&t, 1, 6).unwrap(), q(3, 4));
        assert!(matches!(component_mass(&t, 5, 5), Err(Error::SameVertex)));
    }

    #[test]
    fn star_atoms_match_brute_force() {
        let s = Cladogram::star();
        // brute force over 27 ordered triples
        let mut hits = [0i128; 5];
        for a in 1..=3 {
            for b in 1..=3 {
                for c in 1..=3 {
                    hits[branch_point(&s, a, b, c).unwrap()] += 1;
                }
            }
        }
        assert_eq!(nu_atom(&s, 4).unwrap(), q(hits[4], 27));
        assert_eq!(nu_atom(&s, 4).unwrap(), q(2, 9));
        assert_eq!(nu_atom(&s, 1).unwrap(), q(hits[1], 27));
        assert_eq!(nu_atom(&s, 2).unwrap(), q(7, 27));
    }

    #[test]
    fn star_distances() {
        let s = Cladogram::star();
        assert_eq!(r_mu(&s, 1, 1).unwrap(), q(0, 1));
        assert_eq!(r_mu(&s, 1, 2).unwrap(), q(13, 27));
        assert_eq!(r_mu(&s, 1, 4).unwrap(), q(13, 54));
        assert_eq!(r_mu(&s, 4, 2).unwrap(), q(13, 54));
        let m = IntrinsicMetric::new(&s);
        assert_eq!(m.distance(1, 2), q(13, 27));
    }

    #[test]
    fn total_length_small() {
        assert_eq!(total_length(&Cladogram::star()).unwrap(), q(13, 18));
        let (a, b) = total_length_routes(&cherry());
        assert_eq!(a, b);
        assert!(a <= q(3, 2));
    }

    #[test]
    fn projection_identity_on_cherry() {
        let t = cherry();
        for z in 1..=6 {
            for z2 in 1..=6 {
                if z != z2 {
                    let (a, b) = edge_projection_identity(&t, z, z2).unwrap();
                    assert_eq!(a, b, "z={z} z'={z2}");
                }
            }
        }
    }
}
