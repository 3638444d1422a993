//! Instance generators and the experiment runner.

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{decompose, decompose_stream, DecompParams, Decomposition, Mode, RunReport};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::write_string;
use crate::prf::{self, derive};
use crate::stream::StreamUpdate;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PCS_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GraphModel {
    /// Uniform-ish `d`-regular simple graph (configuration model).
    Regular { n: usize, d: usize },
    /// Erdős–Rényi `G(n, p)`.
    Gnp { n: usize, p: f64 },
    /// `c` copies of `K_s` with `bridges` edges between consecutive copies.
    Barbell { c: usize, s: usize, bridges: usize },
    /// `c` blocks of `s` vertices; edges inside blocks with `p_in`, across
    /// with `p_out`.
    Planted {
        c: usize,
        s: usize,
        p_in: f64,
        p_out: f64,
    },
}

impl GraphModel {
    pub fn n(&self) -> usize {
        match *self {
            GraphModel::Regular { n, .. } | GraphModel::Gnp { n, .. } => n,
            GraphModel::Barbell { c, s, .. } | GraphModel::Planted { c, s, .. } => c * s,
        }
    }
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "{what} = {p} is not a probability"
        )))
    }
}

pub fn gen_graph(model: &GraphModel, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *model {
        GraphModel::Regular { n, d } => regular(n, d, &mut rng),
        GraphModel::Gnp { n, p } => {
            check_prob(p, "p")?;
            let mut pairs = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen::<f64>() < p {
                        pairs.push((u, v));
                    }
                }
            }
            Graph::from_pairs(n, pairs)
        }
        GraphModel::Barbell { c, s, bridges } => barbell(c, s, bridges, &mut rng),
        GraphModel::Planted { c, s, p_in, p_out } => {
            check_prob(p_in, "p_in")?;
            check_prob(p_out, "p_out")?;
            let n = c * s;
            let mut pairs = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    let p = if u / s == v / s { p_in } else { p_out };
                    if rng.gen::<f64>() < p {
                        pairs.push((u, v));
                    }
                }
            }
            Graph::from_pairs(n, pairs)
        }
    }
}

/// Configuration model: stubs are paired one at a time, redrawing a partner
/// that would create a loop or a parallel edge. A dead end restarts the
/// whole pairing.
fn regular(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Graph> {
    if (d > 0 && d >= n) || (n * d) % 2 == 1 {
        return Err(Error::Infeasible(format!(
            "no simple {d}-regular graph on {n} vertices"
        )));
    }
    'restart: for _ in 0..1000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        stubs.shuffle(rng);
        let mut present = HashSet::new();
        let mut pairs = Vec::with_capacity(n * d / 2);
        while let Some(u) = stubs.pop() {
            let mut tries = 0;
            loop {
                if stubs.is_empty() || tries > 100 {
                    continue 'restart;
                }
                let i = rng.gen_range(0..stubs.len());
                let v = stubs[i];
                let key = (u.min(v), u.max(v));
                if u != v && !present.contains(&key) {
                    stubs.swap_remove(i);
                    present.insert(key);
                    pairs.push(key);
                    break;
                }
                tries += 1;
            }
        }
        return Graph::from_pairs(n, pairs);
    }
    Err(Error::Infeasible(format!(
        "pairing for a {d}-regular graph on {n} vertices kept failing"
    )))
}

fn barbell(c: usize, s: usize, bridges: usize, rng: &mut ChaCha8Rng) -> Result<Graph> {
    if bridges > 0 && c < 2 {
        return Err(Error::Infeasible(
            "bridges need at least two cliques".into(),
        ));
    }
    let mut pairs = Vec::new();
    for b in 0..c {
        for u in 0..s {
            for v in u + 1..s {
                pairs.push((b * s + u, b * s + v));
            }
        }
    }
    let mut used = HashSet::new();
    for t in 0..bridges {
        let (a, b) = (t % c, (t + 1) % c);
        let mut placed = false;
        for _ in 0..1000 {
            let u = a * s + rng.gen_range(0..s);
            let v = b * s + rng.gen_range(0..s);
            if used.insert((u.min(v), u.max(v))) {
                pairs.push((u, v));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Infeasible(format!(
                "could not place {bridges} distinct bridges"
            )));
        }
    }
    Graph::from_pairs(c * s, pairs)
}

/// Shuffled insert/delete stream whose net graph is `g`, with
/// `round(churn·|E|)` decoy insert-then-delete pairs on non-edges of `g`.
pub fn gen_stream(g: &Graph, churn: f64, seed: u64) -> Result<Vec<StreamUpdate>> {
    if !(churn >= 0.0 && churn.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "churn must be >= 0, got {churn}"
        )));
    }
    if !g.is_loop_free() || !g.is_unweighted() {
        return Err(Error::InvalidParameter(
            "streams carry loop-free unweighted graphs".into(),
        ));
    }
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: HashSet<(usize, usize)> = g
        .edges()
        .iter()
        .map(|e| (e.u.min(e.v), e.u.max(e.v)))
        .collect();
    let decoys = (churn * g.num_edges() as f64).round() as usize;
    let non_edges = n * n.saturating_sub(1) / 2 - edges.len();
    if decoys > 0 && non_edges == 0 {
        return Err(Error::Infeasible(
            "no non-edges available for decoys".into(),
        ));
    }
    let mut decoy_pairs = Vec::with_capacity(decoys);
    while decoy_pairs.len() < decoys {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && !edges.contains(&(u.min(v), u.max(v))) {
            decoy_pairs.push((u, v));
        }
    }
    // tokens: Ok(edge index) or Err(decoy index), each decoy twice
    let mut tokens: Vec<std::result::Result<usize, usize>> = (0..g.num_edges()).map(Ok).collect();
    tokens.extend((0..decoys).flat_map(|i| [Err(i), Err(i)]));
    tokens.shuffle(&mut rng);
    let mut opened = vec![false; decoys];
    Ok(tokens
        .into_iter()
        .map(|t| match t {
            Ok(i) => {
                let e = g.edges()[i];
                StreamUpdate::insert(e.u, e.v)
            }
            Err(i) => {
                let (u, v) = decoy_pairs[i];
                if opened[i] {
                    StreamUpdate::delete(u, v)
                } else {
                    opened[i] = true;
                    StreamUpdate::insert(u, v)
                }
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub churn: f64,
    pub shuffle_seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GraphModel,
    /// When present, sparsifiers are recovered from a generated stream.
    #[serde(default)]
    pub stream: Option<StreamSpec>,
    pub decomp: DecompParams,
    pub trials: usize,
    pub seed: u64,
    /// Record wall time per trial. Off by default so output is reproducible
    /// byte for byte.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

/// CSV column names, in [`TrialRow`] field order.
pub const CSV_HEADER: [&str; 17] = [
    "trial",
    "seed",
    "mode",
    "n",
    "m",
    "epsilon",
    "k",
    "intercluster_fraction",
    "min_cluster_conductance",
    "singleton_count",
    "clusters",
    "depth",
    "outer_max",
    "violations",
    "verified",
    "wall_ms",
    "sketch_memory_bytes",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub k: usize,
    pub intercluster_fraction: Option<f64>,
    pub min_cluster_conductance: Option<f64>,
    pub singleton_count: usize,
    pub clusters: usize,
    pub depth: usize,
    pub outer_max: usize,
    pub violations: usize,
    pub verified: bool,
    pub wall_ms: Option<f64>,
    pub sketch_memory_bytes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub verified: usize,
    pub total_violations: usize,
    pub max_intercluster_fraction: Option<f64>,
    pub min_cluster_conductance: Option<f64>,
    pub max_depth: usize,
    pub max_outer: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub rows: Vec<TrialRow>,
    pub reports: Vec<RunReport>,
}

impl ExperimentResult {
    pub fn all_verified(&self) -> bool {
        self.summary.verified == self.summary.trials
    }

    pub fn csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Seed of trial `t`.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    derive(master, prf::TAG_TRIAL, t as u64)
}

/// Inputs of trial `t`: the graph, the parameters with the trial's seed, and
/// the stream when the config asks for one.
pub struct TrialInstance {
    pub seed: u64,
    pub graph: Graph,
    pub params: DecompParams,
    pub stream: Option<Vec<StreamUpdate>>,
}

pub fn trial_instance(cfg: &ExperimentConfig, t: usize) -> Result<TrialInstance> {
    let seed = trial_seed(cfg.seed, t);
    let graph = gen_graph(&cfg.generator, derive(seed, 1, 0))?;
    let mut params = cfg.decomp.clone();
    params.seed = derive(seed, 2, cfg.decomp.seed);
    let stream = match &cfg.stream {
        None => None,
        Some(s) => Some(gen_stream(
            &graph,
            s.churn,
            derive(s.shuffle_seed, prf::TAG_TRIAL, t as u64),
        )?),
    };
    Ok(TrialInstance {
        seed,
        graph,
        params,
        stream,
    })
}

/// Decomposes one trial instance.
pub fn run_instance(inst: &TrialInstance) -> Result<Decomposition> {
    match &inst.stream {
        None => decompose(&inst.graph, &inst.params),
        Some(ups) => decompose_stream(inst.graph.n(), ups, &inst.params, Some(&inst.graph)),
    }
}

fn run_trial(cfg: &ExperimentConfig, t: usize) -> Result<(TrialRow, RunReport)> {
    let inst = trial_instance(cfg, t)?;
    let (seed, g, params) = (inst.seed, &inst.graph, &inst.params);
    let start = Instant::now();
    let d = run_instance(&inst)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let r = d.report;
    let row = TrialRow {
        trial: t,
        seed,
        mode: params.mode,
        n: g.n(),
        m: g.num_edges(),
        epsilon: params.epsilon,
        k: params.k,
        intercluster_fraction: r.intercluster_fraction,
        min_cluster_conductance: r.min_cluster_conductance(),
        singleton_count: r.singleton_count,
        clusters: r.cluster_sizes.len(),
        depth: r.depth,
        outer_max: r.outer_max,
        violations: r.violations.len(),
        verified: r.violations.is_empty(),
        wall_ms: cfg.timing.then_some(wall),
        sketch_memory_bytes: r.sketch_memory_bytes,
    };
    Ok((row, r))
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{THREADS_ENV}={v:?} is not a count")))?;
        b = b.num_threads(k.max(1));
    }
    b.build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker threads: {e}")))
}

/// Runs every trial (in parallel, results in trial order) and writes the CSV
/// and JSON outputs named in the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.decomp.validate()?;
    let pool = thread_pool()?;
    let results: Vec<Result<(TrialRow, RunReport)>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t))
            .collect()
    });
    let mut rows = Vec::with_capacity(cfg.trials);
    let mut reports = Vec::with_capacity(cfg.trials);
    for r in results {
        let (row, rep) = r?;
        rows.push(row);
        reports.push(rep);
    }
    let fmax = |it: &mut dyn Iterator<Item = f64>| it.max_by(f64::total_cmp);
    let summary = Summary {
        trials: rows.len(),
        verified: rows.iter().filter(|r| r.verified).count(),
        total_violations: rows.iter().map(|r| r.violations).sum(),
        max_intercluster_fraction: fmax(&mut rows.iter().filter_map(|r| r.intercluster_fraction)),
        min_cluster_conductance: rows
            .iter()
            .filter_map(|r| r.min_cluster_conductance)
            .min_by(f64::total_cmp),
        max_depth: rows.iter().map(|r| r.depth).max().unwrap_or(0),
        max_outer: rows.iter().map(|r| r.outer_max).max().unwrap_or(0),
    };
    let result = ExperimentResult {
        config: cfg.clone(),
        summary,
        rows,
        reports,
    };
    if let Some(p) = &cfg.output.csv {
        write_string(p, &result.csv()?)?;
    }
    if let Some(p) = &cfg.output.json {
        write_string(p, &result.json()?)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::replay;

    #[test]
    fn barbell_volume() {
        let g = gen_graph(
            &GraphModel::Barbell {
                c: 2,
                s: 4,
                bridges: 1,
            },
            3,
        )
        .unwrap();
        assert_eq!(g.total_volume(), 26.0);
        assert_eq!(g.num_edges(), 13);
    }

    #[test]
    fn gnp_zero_is_empty() {
        let g = gen_graph(&GraphModel::Gnp { n: 10, p: 0.0 }, 3).unwrap();
        assert_eq!(g.num_edges(), 0);
        assert!(gen_graph(&GraphModel::Gnp { n: 10, p: 1.5 }, 3).is_err());
    }

    #[test]
    fn regular_degrees() {
        for seed in 0..20 {
            let g = gen_graph(&GraphModel::Regular { n: 16, d: 8 }, seed).unwrap();
            assert!(g.degrees().iter().all(|&d| d == 8.0));
            assert!(!g.has_parallel_edges());
            assert!(g.is_loop_free());
        }
        assert!(gen_graph(&GraphModel::Regular { n: 5, d: 3 }, 0).is_err());
        assert!(gen_graph(&GraphModel::Regular { n: 4, d: 4 }, 0).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let m = GraphModel::Planted {
            c: 4,
            s: 8,
            p_in: 0.9,
            p_out: 0.02,
        };
        assert_eq!(gen_graph(&m, 9).unwrap(), gen_graph(&m, 9).unwrap());
        assert_ne!(gen_graph(&m, 9).unwrap(), gen_graph(&m, 10).unwrap());
    }

    #[test]
    fn stream_counts_and_net_graph() {
        let g = gen_graph(&GraphModel::Gnp { n: 20, p: 0.3 }, 1).unwrap();
        let s0 = gen_stream(&g, 0.0, 1).unwrap();
        assert_eq!(s0.len(), g.num_edges());
        let s1 = gen_stream(&g, 1.0, 1).unwrap();
        assert_eq!(s1.len(), 3 * g.num_edges());
        let net = replay(20, &s1).unwrap();
        let key = |g: &Graph| {
            let mut v: Vec<_> = g
                .edges()
                .iter()
                .map(|e| (e.u.min(e.v), e.u.max(e.v)))
                .collect();
            v.sort();
            v
        };
        assert_eq!(key(&net), key(&g));
    }

    #[test]
    fn zero_trials_header_only() {
        let cfg = ExperimentConfig {
            generator: GraphModel::Barbell {
                c: 2,
                s: 4,
                bridges: 1,
            },
            stream: None,
            decomp: DecompParams::exact(0.3, 2, 0),
            trials: 0,
            seed: 1,
            timing: false,
            output: OutputPaths::default(),
        };
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.csv().unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig {
            generator: GraphModel::Planted {
                c: 4,
                s: 8,
                p_in: 0.9,
                p_out: 0.02,
            },
            stream: Some(StreamSpec {
                churn: 0.5,
                shuffle_seed: 4,
            }),
            decomp: DecompParams::fast(0.3, 2, 7),
            trials: 3,
            seed: 11,
            timing: true,
            output: OutputPaths {
                csv: Some("a.csv".into()),
                json: None,
            },
        };
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }
}
