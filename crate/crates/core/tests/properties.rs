use proptest::prelude::*;

use powercut::graph::{
    cut_weight, induce_with_loops, intercluster_volume, volume, Graph, Partition, VertexSet,
};
use powercut::sketch::{SketchParams, SparseRecoverySketch};

/// Boundary weight, with the trivial sides (which `cut_weight` rejects) at 0.
fn boundary(g: &Graph, s: &VertexSet) -> f64 {
    if s.is_empty() || s.len() == g.n() {
        0.0
    } else {
        cut_weight(g, s).unwrap()
    }
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n, 1u8..4), 0..3 * n).prop_map(move |es| {
            Graph::from_edges(n, es.into_iter().map(|(u, v, w)| (u, v, w as f64))).unwrap()
        })
    })
}

fn with_mask(max_n: usize) -> impl Strategy<Value = (Graph, u64)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), 0..(1u64 << n))
    })
}

proptest! {
    #[test]
    fn cut_weight_is_symmetric((g, mask) in with_mask(10)) {
        let s = VertexSet::from_mask(mask);
        prop_assume!(!s.is_empty() && s.len() < g.n());
        let t = s.complement_in(&VertexSet::full(g.n()));
        prop_assert_eq!(cut_weight(&g, &s).unwrap(), cut_weight(&g, &t).unwrap());
    }

    #[test]
    fn volumes_add_up((g, mask) in with_mask(10)) {
        let s = VertexSet::from_mask(mask);
        let t = s.complement_in(&VertexSet::full(g.n()));
        let total = volume(&g, &s).unwrap() + volume(&g, &t).unwrap();
        prop_assert!((total - g.total_volume()).abs() < 1e-9);
    }

    #[test]
    fn induced_graph_keeps_degrees((g, mask) in with_mask(10)) {
        let c = VertexSet::from_mask(mask);
        prop_assume!(!c.is_empty());
        let h = induce_with_loops(&g, &c).unwrap();
        prop_assert_eq!(h.n(), c.len());
        for (i, v) in c.iter().enumerate() {
            prop_assert!((h.degree(i) - g.degree(v)).abs() < 1e-9);
        }
    }

    /// Peeling `S2` out of `G{V∖S1}` after `S1`: the union's boundary is at
    /// most the sum of the two boundaries, so sparsity composes.
    #[test]
    fn peeled_cuts_compose((g, m1, m2) in with_mask(10).prop_flat_map(|(g, m1)| {
        let n = g.n();
        (Just(g), Just(m1), 0..(1u64 << n))
    })) {
        let n = g.n();
        let full = VertexSet::full(n);
        let s1 = VertexSet::from_mask(m1);
        let rest = s1.complement_in(&full);
        prop_assume!(!rest.is_empty());
        let s2 = VertexSet::from_mask(m2 & !m1);
        let gr = induce_with_loops(&g, &rest).unwrap();
        let local: VertexSet = rest.iter().enumerate().filter(|(_, v)| s2.contains(*v)).map(|(i, _)| i).collect();
        let union = s1.union(&s2);
        let lhs = boundary(&g, &union);
        let rhs = boundary(&g, &s1) + boundary(&gr, &local);
        prop_assert!(lhs <= rhs + 1e-9);

        let phi = 0.3;
        let v1 = volume(&g, &s1).unwrap();
        let v2 = volume(&g, &s2).unwrap();
        if boundary(&g, &s1) <= phi * v1 && boundary(&gr, &local) <= phi * v2 {
            prop_assert!(lhs <= phi * (v1 + v2) + 1e-9);
        }
    }

    #[test]
    fn intercluster_volume_matches_cluster_boundaries(
        (g, labels) in graph_strategy(10).prop_flat_map(|g| {
            let n = g.n();
            (Just(g), proptest::collection::vec(0..4usize, n))
        })
    ) {
        let p = Partition::from_labels(&labels);
        let sum: f64 = p.clusters().iter().map(|c| boundary(&g, c)).sum();
        prop_assert!((intercluster_volume(&g, &p).unwrap() - sum).abs() < 1e-9);
        let vol: f64 = p.clusters().iter().map(|c| volume(&g, c).unwrap()).sum();
        prop_assert!((vol - g.total_volume()).abs() < 1e-9);
    }

    #[test]
    fn sketch_is_linear(
        a in proptest::collection::vec((0..256usize, -3i64..4), 0..40),
        b in proptest::collection::vec((0..256usize, -3i64..4), 0..40),
        seed in any::<u64>(),
    ) {
        let params = SketchParams::new(256, 8, 1e-3, seed).unwrap();
        let mut sa = SparseRecoverySketch::new(params).unwrap();
        let mut sb = SparseRecoverySketch::new(params).unwrap();
        let mut sab = SparseRecoverySketch::new(params).unwrap();
        for &(i, d) in &a {
            sa.update(i, d).unwrap();
            sab.update(i, d).unwrap();
        }
        for &(i, d) in &b {
            sb.update(i, d).unwrap();
            sab.update(i, d).unwrap();
        }
        prop_assert_eq!(sa.merge(&sb).unwrap(), sab);
    }

    #[test]
    fn cancelled_updates_leave_zero_state(
        ups in proptest::collection::vec((0..256usize, 1i64..5), 0..50),
        seed in any::<u64>(),
    ) {
        let params = SketchParams::new(256, 8, 1e-3, seed).unwrap();
        let mut s = SparseRecoverySketch::new(params).unwrap();
        for &(i, d) in &ups {
            s.update(i, d).unwrap();
        }
        for &(i, d) in ups.iter().rev() {
            s.update(i, -d).unwrap();
        }
        prop_assert!(s.is_zero());
        prop_assert_eq!(s, SparseRecoverySketch::new(params).unwrap());
    }
}
