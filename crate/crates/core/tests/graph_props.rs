use bapg_core::graph::{
    add_noise, adjacency_matrix, alignment_accuracy, ami_score, format_edge_list, gen_barabasi_albert,
    gen_gaussian_partition, heat_kernel, parse_edge_list, Correspondence, Graph, Labeling,
};
use proptest::prelude::*;

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..3 * n)
            .prop_map(move |pairs| Graph::from_edges(n, pairs.into_iter().filter(|(u, v)| u != v)).unwrap())
    })
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = Labeling> {
    prop::collection::vec(0..k, n).prop_map(|v| Labeling::compact(&v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn representations_are_symmetric(g in graph(15)) {
        prop_assert_eq!(adjacency_matrix(&g).asymmetry(), 0.0);
        let h = heat_kernel(&g).unwrap();
        prop_assert!(h.asymmetry() <= 1e-12);
        prop_assert!((0..g.node_count()).all(|i| h.get(i, i) > 0.0));
    }

    #[test]
    fn noise_keeps_the_source((g, q, seed) in (graph(15), 0.0..60.0f64, any::<u64>())) {
        let (t, gt) = add_noise(&g, q, seed).unwrap();
        prop_assert!(t.node_count() >= g.node_count());
        prop_assert!(g.edges().all(|(u, v)| t.has_edge(u, v)));
        prop_assert_eq!(&gt, &Correspondence::identity(g.node_count()));
        prop_assert_eq!(add_noise(&g, q, seed).unwrap().0, t);
    }

    #[test]
    fn accuracy_is_a_percentage((pred, n) in (1usize..20).prop_flat_map(|n| (prop::collection::vec(0..n, n), Just(n)))) {
        let pred = Correspondence::from_pairs(pred.into_iter().enumerate()).unwrap();
        let acc = alignment_accuracy(&pred, &Correspondence::identity(n)).unwrap();
        prop_assert!((0.0..=100.0).contains(&acc));
    }

    #[test]
    fn ami_is_at_most_one((a, b) in (1usize..25).prop_flat_map(|n| (labels(n, 4), labels(n, 4)))) {
        let s = ami_score(&a, &b).unwrap();
        prop_assert!(s <= 1.0 + 1e-12);
        prop_assert!((s - ami_score(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(ami_score(&a, &a).unwrap(), 1.0);
        let relabeled: Vec<usize> = a.as_slice().iter().map(|&c| 10 - c).collect();
        prop_assert_eq!(ami_score(&a, &Labeling::compact(&relabeled)).unwrap(), 1.0);
    }

    #[test]
    fn generators_follow_their_seed((n, seed) in (4usize..30, any::<u64>())) {
        prop_assert_eq!(gen_gaussian_partition(n, 3, 0.5, 0.1, seed).unwrap(), gen_gaussian_partition(n, 3, 0.5, 0.1, seed).unwrap());
        prop_assert_eq!(gen_barabasi_albert(n, 2, seed).unwrap(), gen_barabasi_albert(n, 2, seed).unwrap());
    }

    #[test]
    fn edge_lists_round_trip(g in graph(15)) {
        prop_assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap(), g);
    }
}
