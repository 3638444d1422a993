//! Sample a cut sparsifier and check the power-cut property on a partition.

use powercut::graph::Partition;
use powercut::harness::{gen_graph, GraphModel};
use powercut::sparsifier::{check_cut_sparsifier, check_power_partition, sample, SparsifierParams};

fn main() -> powercut::error::Result<()> {
    let g = gen_graph(&GraphModel::Regular { n: 16, d: 8 }, 1)?;
    let (delta, eps) = (0.25, 0.5);

    // Full formula: every p_e is 1 at this size, H = G.
    let full = sample(&g, &SparsifierParams::new(delta, eps, 5))?;
    println!("formula Υ: kept {}/{} edges", full.num_edges(), g.num_edges());

    // Scaled Υ keeps roughly 30% of the edges.
    let params = SparsifierParams::new(delta, eps, 5).with_scale(1.2 * delta * eps);
    let h = sample(&g, &params)?;
    println!(
        "scaled Υ = {:.2}: kept {}/{} edges",
        params.upsilon(16),
        h.num_edges(),
        g.num_edges()
    );

    let whole = check_cut_sparsifier(&g, &h, delta, eps)?;
    println!(
        "whole graph: holds = {}, worst violation {:.3} over {} cuts",
        whole.holds, whole.worst_violation, whole.cuts_checked
    );
    let p = Partition::from_labels(&(0..16).map(|v| v % 4).collect::<Vec<_>>());
    let pc = check_power_partition(&g, &h, &p, delta, eps)?;
    println!("4-way partition: holds = {}", pc.holds);
    Ok(())
}
