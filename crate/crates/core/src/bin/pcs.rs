use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use powercut::decomp::{decompose, decompose_stream, verify_decomposition, DecompParams, Mode};
use powercut::error::{Error, Result};
use powercut::harness::{gen_graph, gen_stream, run_experiment, ExperimentConfig, GraphModel};
use powercut::io::{self, graph_to_string, partition_to_string, stream_to_string};
use powercut::sparsifier::{sample, SparsifierParams};
use powercut::stream::{sample_offline, StreamState};

#[derive(Parser)]
#[command(
    name = "pcs",
    version,
    about = "Power cut sparsifiers and expander decomposition"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random graph.
    GenGraph {
        #[arg(value_enum)]
        model: ModelKind,
        /// Vertices (regular, gnp).
        #[arg(long)]
        n: Option<usize>,
        /// Degree (regular).
        #[arg(long)]
        d: Option<usize>,
        /// Edge probability (gnp).
        #[arg(long)]
        p: Option<f64>,
        /// Number of blocks (barbell, planted).
        #[arg(long)]
        c: Option<usize>,
        /// Block size (barbell, planted).
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value_t = 1)]
        bridges: usize,
        #[arg(long)]
        p_in: Option<f64>,
        #[arg(long)]
        p_out: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Turn a graph into a shuffled insert/delete stream.
    GenStream {
        graph: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        churn: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Sample a sparsifier offline.
    Sparsify {
        graph: PathBuf,
        #[command(flatten)]
        sp: SparsifyArgs,
        /// Emit the level-sampled graph that `sketch` recovers instead of the
        /// importance-sampled sparsifier.
        #[arg(long)]
        levels: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Feed a stream through the sketches and dump the recovered sparsifier.
    Sketch {
        stream: PathBuf,
        #[command(flatten)]
        sp: SparsifyArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Expander decomposition of a graph (or of a stream with --stream).
    Decompose {
        input: PathBuf,
        /// Treat the input as a stream file.
        #[arg(long)]
        stream: bool,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        delta: Option<f64>,
        /// Use Υ = scale/(δε) instead of the full formula.
        #[arg(long)]
        upsilon_scale: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Partition output.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// JSON run report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check that a partition is an (ε, φ) expander decomposition.
    Verify {
        graph: PathBuf,
        partition: PathBuf,
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        eps: f64,
        /// JSON verification report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run an experiment described by a JSON config.
    Run { config: PathBuf },
}

#[derive(Args)]
struct SparsifyArgs {
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long)]
    upsilon_scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SparsifyArgs {
    fn params(&self) -> SparsifierParams {
        let p = SparsifierParams::new(self.delta, self.eps, self.seed);
        match self.upsilon_scale {
            Some(c) => p.with_scale(c),
            None => p,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Regular,
    Gnp,
    Barbell,
    Planted,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Fast,
}

enum Failure {
    Verification(String),
    Config(Error),
    Recovery(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::RecoveryExhausted(m) => Failure::Recovery(m),
            e => Failure::Config(e),
        }
    }
}

fn need<T>(v: Option<T>, flag: &str, model: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("{model} needs --{flag}")))
}

fn emit(out: Option<&Path>, s: &str) -> Result<()> {
    match out {
        Some(p) => io::write_string(p, s),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(s.as_bytes()).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
    }
}

fn run(cmd: Cmd) -> std::result::Result<(), Failure> {
    match cmd {
        Cmd::GenGraph {
            model,
            n,
            d,
            p,
            c,
            s,
            bridges,
            p_in,
            p_out,
            seed,
            out,
        } => {
            let m = match model {
                ModelKind::Regular => GraphModel::Regular {
                    n: need(n, "n", "regular")?,
                    d: need(d, "d", "regular")?,
                },
                ModelKind::Gnp => GraphModel::Gnp {
                    n: need(n, "n", "gnp")?,
                    p: need(p, "p", "gnp")?,
                },
                ModelKind::Barbell => GraphModel::Barbell {
                    c: need(c, "c", "barbell")?,
                    s: need(s, "s", "barbell")?,
                    bridges,
                },
                ModelKind::Planted => GraphModel::Planted {
                    c: need(c, "c", "planted")?,
                    s: need(s, "s", "planted")?,
                    p_in: need(p_in, "p-in", "planted")?,
                    p_out: need(p_out, "p-out", "planted")?,
                },
            };
            let g = gen_graph(&m, seed)?;
            emit(out.as_deref(), &graph_to_string(&g))?;
        }
        Cmd::GenStream {
            graph,
            churn,
            seed,
            out,
        } => {
            let g = io::read_graph(&graph)?;
            let ups = gen_stream(&g, churn, seed)?;
            emit(out.as_deref(), &stream_to_string(g.n(), &ups))?;
        }
        Cmd::Sparsify {
            graph,
            sp,
            levels,
            out,
        } => {
            let g = io::read_graph(&graph)?;
            let h = if levels {
                sample_offline(&g, &sp.params())?
            } else {
                sample(&g, &sp.params())?
            };
            emit(out.as_deref(), &graph_to_string(&h))?;
        }
        Cmd::Sketch { stream, sp, out } => {
            let (n, ups) = io::read_stream(&stream)?;
            let mut st = StreamState::new(n, &sp.params())?;
            st.process_all(&ups)?;
            match st.recover_sparsifier() {
                Some(h) => emit(out.as_deref(), &graph_to_string(&h))?,
                None => return Err(Failure::Recovery("sketch recovery returned FAIL".into())),
            }
        }
        Cmd::Decompose {
            input,
            stream,
            mode,
            eps,
            k,
            delta,
            upsilon_scale,
            seed,
            out,
            report,
        } => {
            let mut params = match mode {
                ModeArg::Exact => DecompParams::exact(eps, k, seed),
                ModeArg::Fast => DecompParams::fast(eps, k, seed),
            };
            if let Some(d) = delta {
                params.delta = d;
                if params.mode == Mode::Exact {
                    params.alpha = 1.0 + 5.0 * d;
                }
            }
            if let Some(c) = upsilon_scale {
                params.upsilon = powercut::sparsifier::UpsilonRule::Scaled(c);
            }
            let d = if stream {
                let (n, ups) = io::read_stream(&input)?;
                decompose_stream(n, &ups, &params, None)?
            } else {
                decompose(&io::read_graph(&input)?, &params)?
            };
            emit(out.as_deref(), &partition_to_string(&d.partition))?;
            if let Some(r) = report {
                io::write_string(
                    &r,
                    &serde_json::to_string_pretty(&d.report).map_err(Error::from)?,
                )?;
            }
            if !d.report.violations.is_empty() {
                return Err(Failure::Verification(format!(
                    "{} runtime check(s) failed: {}",
                    d.report.violations.len(),
                    d.report.violations.join("; ")
                )));
            }
        }
        Cmd::Verify {
            graph,
            partition,
            phi,
            eps,
            report,
        } => {
            let g = io::read_graph(&graph)?;
            let p = io::read_partition(&partition)?;
            let r = verify_decomposition(&g, &p, eps, phi)?;
            if let Some(path) = report {
                io::write_string(
                    &path,
                    &serde_json::to_string_pretty(&r).map_err(Error::from)?,
                )?;
            }
            println!(
                "{} intercluster={} limit={} clusters={} heuristic={}",
                if r.passed { "PASS" } else { "FAIL" },
                r.intercluster_volume,
                r.volume_limit,
                r.clusters.len(),
                r.heuristic
            );
            if !r.passed {
                return Err(Failure::Verification(
                    "not an expander decomposition".into(),
                ));
            }
        }
        Cmd::Run { config } => {
            let text = io::read_to_string(&config)?;
            let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(Error::from)?;
            let r = run_experiment(&cfg)?;
            if cfg.output.csv.is_none() {
                emit(None, &r.csv()?)?;
            }
            if !r.all_verified() {
                return Err(Failure::Verification(format!(
                    "{} of {} trials had runtime check violations",
                    r.summary.trials - r.summary.verified,
                    r.summary.trials
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(m)) => {
            eprintln!("pcs: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("pcs: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Recovery(m)) => {
            eprintln!("pcs: {m}");
            ExitCode::from(3)
        }
    }
}
