use cladoflow_core::chain::{aldous_move, is_noop};
use cladoflow_core::rng::replicate_rng;
use cladoflow_core::shape_poly::{omega_n_bruteforce_count, omega_n_closedform_count, phi_count};
use cladoflow_core::tree::{internal_component_counts, nu_atoms, parse, to_json, to_newick};
use cladoflow_core::{enumerate_cladograms, uniform_cladogram, validate_cladogram};
use proptest::prelude::*;

fn edges(t: &cladoflow_core::Cladogram) -> Vec<(usize, usize)> {
    t.edges().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_trees_are_cladograms(n in 3usize..60, seed: u64) {
        let t = uniform_cladogram(n, &mut replicate_rng(seed, 0)).unwrap();
        prop_assert!(validate_cladogram(n, &edges(&t)).is_ok());
        prop_assert_eq!(parse(&to_json(&t)).unwrap(), t.clone());
        prop_assert_eq!(parse(&to_newick(&t)).unwrap().full_shape(), t.full_shape());
    }

    #[test]
    fn moves_stay_in_the_space(n in 3usize..40, seed: u64, u in 0usize..1000, e in 0usize..1000) {
        let t = uniform_cladogram(n, &mut replicate_rng(seed, 1)).unwrap();
        let u = 1 + u % n;
        let e = t.edge(e % t.n_edges());
        let s = aldous_move(&t, u, e).unwrap();
        prop_assert!(validate_cladogram(n, &edges(&s)).is_ok());
        if is_noop(&t, u, e).unwrap() {
            prop_assert_eq!(s, t);
        }
    }

    #[test]
    fn masses_and_atoms_add_up(n in 3usize..200, seed: u64) {
        let t = uniform_cladogram(n, &mut replicate_rng(seed, 2)).unwrap();
        for (_, c) in internal_component_counts(&t) {
            prop_assert_eq!(c.iter().map(|&x| x as usize).sum::<usize>(), n);
            prop_assert!(c.iter().all(|&x| x > 0));
        }
        let total: i128 = nu_atoms(&t).iter().sum();
        prop_assert_eq!(total, (n as i128).pow(3));
    }

    #[test]
    fn shape_counts_partition_tuples(n in 5usize..14, seed: u64) {
        let t = uniform_cladogram(n, &mut replicate_rng(seed, 3)).unwrap();
        let mut total = 0u128;
        for s in enumerate_cladograms(5).unwrap() {
            total += phi_count(&t, &s).unwrap();
        }
        let falling: u128 = (0..5).map(|i| (n - i) as u128).product();
        prop_assert_eq!(total, falling);
    }

    #[test]
    fn closed_form_generator(n in 5usize..11, seed: u64, pick in 0usize..15) {
        let t = uniform_cladogram(n, &mut replicate_rng(seed, 4)).unwrap();
        let s = &enumerate_cladograms(5).unwrap()[pick];
        prop_assert_eq!(
            omega_n_bruteforce_count(&t, s).unwrap(),
            omega_n_closedform_count(&t, s).unwrap()
        );
    }
}
