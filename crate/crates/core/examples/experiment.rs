//! Run a small seeded experiment and print the CSV.

use powercut::decomp::DecompParams;
use powercut::harness::{run_experiment, ExperimentConfig, GraphModel, OutputPaths};

fn main() -> powercut::error::Result<()> {
    let cfg = ExperimentConfig {
        generator: GraphModel::Barbell {
            c: 2,
            s: 8,
            bridges: 1,
        },
        stream: None,
        decomp: DecompParams::fast(0.3, 2, 0),
        trials: 8,
        seed: 2024,
        timing: false,
        output: OutputPaths::default(),
    };
    println!("{}", serde_json::to_string_pretty(&cfg)?);
    let r = run_experiment(&cfg)?;
    print!("{}", r.csv()?);
    println!("{}", serde_json::to_string(&r.summary)?);
    Ok(())
}
