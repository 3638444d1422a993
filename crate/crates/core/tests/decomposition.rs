use powercut::decomp::{decompose, decompose_stream, verify_decomposition, DecompParams, Mode};
use powercut::graph::{conductance, induce_with_loops, min_conductance_bruteforce, Graph};
use powercut::harness::{gen_graph, gen_stream, GraphModel};

fn both_modes(eps: f64, k: usize, seed: u64) -> [DecompParams; 2] {
    [
        DecompParams::exact(eps, k, seed),
        DecompParams::fast(eps, k, seed),
    ]
}

/// Independent check: every cluster's minimum conductance by brute force.
fn min_cluster_conductance(g: &Graph, clusters: &[powercut::graph::VertexSet]) -> f64 {
    clusters
        .iter()
        .filter(|c| c.len() > 1)
        .map(|c| {
            let h = induce_with_loops(g, c).unwrap();
            min_conductance_bruteforce(&h).unwrap().0
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn barbell_splits_at_the_bridge() {
    let g = gen_graph(
        &GraphModel::Barbell {
            c: 2,
            s: 6,
            bridges: 1,
        },
        0,
    )
    .unwrap();
    // ε = 0.9 puts φ_0 above the bridge's conductance 1/31.
    for params in both_modes(0.9, 2, 1) {
        let d = decompose(&g, &params).unwrap();
        assert!(d.report.violations.is_empty(), "{:?}", d.report.violations);
        assert_eq!(d.report.cluster_sizes, vec![6, 6]);
        let side = &d.partition.clusters()[0];
        assert!((conductance(&g, side).unwrap() - 1.0 / 31.0).abs() < 1e-12);
        let v = verify_decomposition(&g, &d.partition, 0.9, d.report.phi_final).unwrap();
        assert!(v.passed);
        assert!(!v.heuristic);
        let phi = min_cluster_conductance(&g, d.partition.clusters());
        assert!(phi >= d.report.phi_final);
    }
}

#[test]
fn clique_stays_whole() {
    let g = Graph::from_pairs(12, (0..12).flat_map(|u| (u + 1..12).map(move |v| (u, v)))).unwrap();
    for params in both_modes(0.2, 3, 5) {
        let d = decompose(&g, &params).unwrap();
        assert_eq!(d.partition.len(), 1);
        assert_eq!(d.report.intercluster_volume, Some(0.0));
        assert_eq!(d.report.depth, 1);
    }
}

#[test]
fn isolated_vertices_become_singletons() {
    let mut g = gen_graph(
        &GraphModel::Barbell {
            c: 1,
            s: 6,
            bridges: 0,
        },
        0,
    )
    .unwrap();
    let mut h = Graph::new(9);
    for e in g.edges() {
        h.add_edge(e.u, e.v, e.w).unwrap();
    }
    g = h;
    let d = decompose(&g, &DecompParams::exact(0.3, 2, 0)).unwrap();
    assert_eq!(d.report.singleton_count, 3);
    assert_eq!(d.partition.len(), 4);
}

#[test]
fn decomposition_is_deterministic() {
    let g = gen_graph(
        &GraphModel::Planted {
            c: 3,
            s: 6,
            p_in: 0.8,
            p_out: 0.05,
        },
        2,
    )
    .unwrap();
    for params in both_modes(0.3, 2, 77) {
        let a = decompose(&g, &params).unwrap();
        let b = decompose(&g, &params).unwrap();
        assert_eq!(a.partition, b.partition);
        assert_eq!(
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap()
        );
    }
}

#[test]
fn stream_matches_offline_on_planted() {
    let g = gen_graph(
        &GraphModel::Planted {
            c: 2,
            s: 8,
            p_in: 0.9,
            p_out: 0.05,
        },
        6,
    )
    .unwrap();
    let ups = gen_stream(&g, 1.0, 6).unwrap();
    for params in both_modes(0.3, 2, 3) {
        let s = decompose_stream(g.n(), &ups, &params, Some(&g)).unwrap();
        let o = decompose(&g, &params).unwrap();
        assert_eq!(s.partition, o.partition);
        assert!(s.report.sketch_memory_bytes.unwrap() > 0);
    }
}

#[test]
fn termination_bounds_hold() {
    for seed in 0..10 {
        let g = gen_graph(
            &GraphModel::Planted {
                c: 4,
                s: 5,
                p_in: 0.9,
                p_out: 0.05,
            },
            seed,
        )
        .unwrap();
        for params in both_modes(0.3, 2, seed) {
            let d = decompose(&g, &params).unwrap();
            let r = &d.report;
            assert!(r.depth <= r.depth_bound);
            assert!(r.outer_max <= params.k + 1);
            assert!(r.violations.is_empty(), "{:?}", r.violations);
        }
    }
}

#[test]
fn verify_rejects_a_bad_partition() {
    let g = gen_graph(
        &GraphModel::Barbell {
            c: 2,
            s: 5,
            bridges: 1,
        },
        0,
    )
    .unwrap();
    // split one clique in half: lots of intercluster volume
    let labels: Vec<usize> = (0..10).map(|v| usize::from(v < 2)).collect();
    let p = powercut::graph::Partition::from_labels(&labels);
    let r = verify_decomposition(&g, &p, 0.1, 0.01).unwrap();
    assert!(!r.volume_ok);
    assert!(!r.passed);
}

#[test]
fn mode_parses() {
    assert_eq!("exact".parse::<Mode>().unwrap(), Mode::Exact);
    assert_eq!("fast".parse::<Mode>().unwrap(), Mode::Fast);
    assert!("slow".parse::<Mode>().is_err());
}
