//! Build a sparsifier from a dynamic stream and compare it with the offline
//! sampler run on the final graph.

use powercut::harness::{gen_graph, gen_stream, GraphModel};
use powercut::sparsifier::SparsifierParams;
use powercut::stream::{sample_offline, StreamState};

fn main() -> powercut::error::Result<()> {
    let g = gen_graph(&GraphModel::Gnp { n: 64, p: 0.3 }, 7)?;
    let updates = gen_stream(&g, 1.0, 7)?;
    let params = SparsifierParams::new(0.5, 0.5, 99).with_scale(2.0);

    let mut state = StreamState::new(g.n(), &params)?;
    state.process_all(&updates)?;
    println!(
        "n = {}, |E| = {}, {} updates, Υ = {:.3}, {} levels, {} sketch bytes",
        g.n(),
        g.num_edges(),
        updates.len(),
        state.upsilon(),
        state.levels(),
        state.memory_bytes()
    );

    let offline = sample_offline(&g, &params)?;
    match state.recover_sparsifier() {
        Some(h) => println!(
            "recovered {} edges (offline sampler: {}), identical: {}",
            h.num_edges(),
            offline.num_edges(),
            h == offline
        ),
        None => println!("recovery FAIL"),
    }
    Ok(())
}
