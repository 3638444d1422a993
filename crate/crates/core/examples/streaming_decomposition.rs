//! Expander decomposition from a dynamic stream, with sparsifiers recovered
//! from sketches instead of sampled from the graph.

use powercut::decomp::{decompose, decompose_stream, DecompParams};
use powercut::harness::{gen_graph, gen_stream, GraphModel};

fn main() -> powercut::error::Result<()> {
    let g = gen_graph(
        &GraphModel::Barbell {
            c: 2,
            s: 8,
            bridges: 1,
        },
        2,
    )?;
    let updates = gen_stream(&g, 0.5, 2)?;
    let params = DecompParams::exact(0.3, 2, 9);

    let streamed = decompose_stream(g.n(), &updates, &params, Some(&g))?;
    let offline = decompose(&g, &params)?;
    println!("{} updates", updates.len());
    println!(
        "stream: {} clusters, {} sparsifiers, {} sketch bytes, {} retries",
        streamed.partition.len(),
        streamed.report.sparsifiers_used,
        streamed.report.sketch_memory_bytes.unwrap_or(0),
        streamed.report.stream_recovery_retries
    );
    println!(
        "same partition as offline: {}",
        streamed.partition == offline.partition
    );
    Ok(())
}
