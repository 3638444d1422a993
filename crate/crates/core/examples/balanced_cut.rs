//! Exhaustive and sweep balanced sparse cuts on a barbell.

use powercut::balanced_cut::{exhaustive_balanced_cut, sweep_balanced_cut};
use powercut::harness::{gen_graph, GraphModel};

fn main() -> powercut::error::Result<()> {
    let g = gen_graph(
        &GraphModel::Barbell {
            c: 2,
            s: 8,
            bridges: 1,
        },
        0,
    )?;
    let deg = g.degrees().to_vec();
    for phi in [0.01, 0.2] {
        let ex = exhaustive_balanced_cut(&g, &deg, phi, 0.0)?;
        let sw = sweep_balanced_cut(&g, &deg, phi, 0.05)?;
        println!("phi = {phi}");
        println!("  exhaustive: {}", serde_json::to_string(&ex)?);
        println!("  sweep:      {}", serde_json::to_string(&sw)?);
    }
    Ok(())
}
