//! Decompose a planted-partition graph in both modes and verify the result.

use powercut::decomp::{decompose, verify_decomposition, DecompParams};
use powercut::harness::{gen_graph, GraphModel};

fn main() -> powercut::error::Result<()> {
    let g = gen_graph(
        &GraphModel::Planted {
            c: 4,
            s: 8,
            p_in: 0.9,
            p_out: 0.02,
        },
        3,
    )?;
    for params in [
        DecompParams::exact(0.3, 2, 1),
        DecompParams::fast(0.3, 2, 1),
    ] {
        let d = decompose(&g, &params)?;
        let r = &d.report;
        let v = verify_decomposition(&g, &d.partition, params.epsilon, r.phi_final)?;
        println!(
            "{:?}: clusters {:?}, intercluster fraction {:.4}, depth {}/{}, verified {}, violations {}",
            r.mode,
            r.cluster_sizes,
            r.intercluster_fraction.unwrap_or(0.0),
            r.depth,
            r.depth_bound,
            v.passed,
            r.violations.len()
        );
    }
    Ok(())
}
