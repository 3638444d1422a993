//! Measures the `(α, b)` the sweep actually achieves against the exhaustive
//! oracle on small random clusters.
//!
//! For each instance and each `φ`, the oracle (at δ = 0) gives the most
//! balanced `φ`-sparse cut. We record:
//! - sparsity ratio `Φ(S_sweep)/φ` (the α the sweep needed),
//! - balance ratio `bal(S_sweep)/bal(S_opt)` (the b it delivered),
//! - false expander verdicts (sweep says expander, oracle found a cut).
//!
//! Usage: `cargo run --release --example calibrate_sweep [instances]`

use powercut::balanced_cut::{exhaustive_balanced_cut, sweep_balanced_cut, BalancedCutOutcome};
use powercut::error::Error;
use powercut::graph::min_conductance_bruteforce;
use powercut::harness::{gen_graph, GraphModel};

const DELTA: f64 = 0.05;

fn main() -> powercut::error::Result<()> {
    let instances: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(300);
    let models = [
        GraphModel::Planted {
            c: 2,
            s: 6,
            p_in: 0.8,
            p_out: 0.1,
        },
        GraphModel::Planted {
            c: 3,
            s: 5,
            p_in: 0.8,
            p_out: 0.08,
        },
        GraphModel::Planted {
            c: 2,
            s: 8,
            p_in: 0.6,
            p_out: 0.15,
        },
        GraphModel::Gnp { n: 14, p: 0.35 },
        GraphModel::Gnp { n: 12, p: 0.5 },
        GraphModel::Barbell {
            c: 3,
            s: 5,
            bridges: 3,
        },
        GraphModel::Regular { n: 16, d: 3 },
    ];
    let factors = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0];

    let mut alphas = Vec::new();
    let mut balances = Vec::new();
    let mut false_expander = 0usize;
    let mut with_cut = 0usize;
    let mut trials = 0usize;
    let mut numeric = 0usize;
    let mut numeric_phi = f64::INFINITY;

    for i in 0..instances {
        let model = &models[i % models.len()];
        let g = gen_graph(model, i as u64)?;
        let deg = g.degrees().to_vec();
        if deg.contains(&0.0) || g.components().len() > 1 {
            continue;
        }
        let (phi_min, _) = min_conductance_bruteforce(&g)?;
        for &f in &factors {
            let phi = (phi_min * f).max(1e-3);
            trials += 1;
            let oracle = exhaustive_balanced_cut(&g, &deg, phi, 0.0)?;
            let sweep = match sweep_balanced_cut(&g, &deg, phi, DELTA) {
                Ok(s) => s,
                Err(Error::NumericFailure { .. }) => {
                    numeric += 1;
                    numeric_phi = numeric_phi.min(phi);
                    continue;
                }
                Err(e) => return Err(e),
            };
            if let BalancedCutOutcome::Cut { sparsity, .. } = &sweep {
                alphas.push(sparsity / phi);
            }
            if let BalancedCutOutcome::Cut { balance: best, .. } = oracle {
                with_cut += 1;
                match sweep {
                    BalancedCutOutcome::Expander => {
                        false_expander += 1;
                        balances.push(0.0);
                    }
                    BalancedCutOutcome::Cut { balance, .. } => balances.push(balance / best),
                }
            }
        }
    }

    let found: Vec<f64> = balances.iter().copied().filter(|&b| b > 0.0).collect();
    alphas.sort_by(f64::total_cmp);
    balances.sort_by(f64::total_cmp);
    let q = |v: &[f64], p: f64| {
        if v.is_empty() {
            f64::NAN
        } else {
            v[((v.len() - 1) as f64 * p).round() as usize]
        }
    };
    println!("trials {trials}, oracle found a cut in {with_cut}");
    println!("power iteration hit its cap: {numeric} (smallest such phi {numeric_phi:.3})");
    println!("false expander verdicts: {false_expander}");
    println!(
        "sparsity ratio: median {:.3}  p95 {:.3}  max {:.3}",
        q(&alphas, 0.5),
        q(&alphas, 0.95),
        q(&alphas, 1.0)
    );
    println!(
        "balance ratio:  min {:.3}  p05 {:.3}  median {:.3}",
        q(&balances, 0.0),
        q(&balances, 0.05),
        q(&balances, 0.5)
    );
    println!(
        "balance ratio when a cut was returned: min {:.3}",
        found.iter().copied().fold(f64::INFINITY, f64::min)
    );
    Ok(())
}
