//! Two-phase expander decomposition.
//!
//! [`decompose`] runs the low-depth recursion: each cluster is handed to a
//! balanced sparse cut routine on a fresh sparsifier. Balanced cuts split the
//! cluster and recurse; an unbalanced sparse cut hands the cluster to the
//! unbalanced phase, which trims sparse pieces into singletons under a
//! decreasing volume threshold `m_j` and conductance target `φ_j`.
//!
//! Every bound the analysis relies on is checked while the algorithm runs and
//! recorded in [`RunReport::violations`] instead of aborting.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::balanced_cut::{exhaustive_balanced_cut, sweep_balanced_cut, SWEEP_ALPHA, SWEEP_B};
use crate::error::{Error, Result};
use crate::graph::{
    approx_le, induce_with_loops, intercluster_volume, min_conductance_bruteforce,
    sparsest_cut_below, Graph, Partition, VertexSet, BRUTE_FORCE_LIMIT, MASK_LIMIT,
};
use crate::prf::{self, derive};
use crate::sparsifier::{sample, SparsifierParams, UpsilonRule};
use crate::stream::{StreamState, StreamUpdate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exhaustive balanced cut; `b = 1`.
    Exact,
    /// Spectral sweep with injected `(α, b)`.
    Fast,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "fast" => Ok(Mode::Fast),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

fn default_c() -> f64 {
    1.0
}

fn default_upsilon() -> UpsilonRule {
    UpsilonRule::Formula
}

fn default_spares() -> usize {
    4
}

/// Serialized form: `delta`, `alpha` and `b` default to the mode's values.
#[derive(Deserialize)]
struct RawDecompParams {
    epsilon: f64,
    k: usize,
    #[serde(default)]
    mode: Option<Mode>,
    seed: u64,
    delta: Option<f64>,
    #[serde(default = "default_c")]
    c: f64,
    alpha: Option<f64>,
    b: Option<f64>,
    #[serde(default)]
    volume_bound: Option<f64>,
    #[serde(default = "default_upsilon")]
    upsilon: UpsilonRule,
    #[serde(default = "default_spares")]
    spare_states: usize,
}

impl From<RawDecompParams> for DecompParams {
    fn from(r: RawDecompParams) -> Self {
        let mut p = match r.mode.unwrap_or(Mode::Exact) {
            Mode::Exact => DecompParams::exact(r.epsilon, r.k, r.seed),
            Mode::Fast => DecompParams::fast(r.epsilon, r.k, r.seed),
        };
        if let Some(d) = r.delta {
            p.delta = d;
            if p.mode == Mode::Exact {
                p.alpha = 1.0 + 5.0 * d;
            }
        }
        p.c = r.c;
        p.alpha = r.alpha.unwrap_or(p.alpha);
        p.b = r.b.unwrap_or(p.b);
        p.volume_bound = r.volume_bound;
        p.upsilon = r.upsilon;
        p.spare_states = r.spare_states;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawDecompParams")]
pub struct DecompParams {
    /// Intercluster budget. The volume-trimming analysis assumes `ε < 1/4`;
    /// larger values up to 1 are accepted and checked at run time like any
    /// other.
    pub epsilon: f64,
    pub k: usize,
    pub delta: f64,
    /// Failure exponent `C` of the sparsifiers.
    pub c: f64,
    pub alpha: f64,
    pub b: f64,
    /// Upper bound `O` on `Vol(G)`; `n²` when absent.
    pub volume_bound: Option<f64>,
    pub mode: Mode,
    pub upsilon: UpsilonRule,
    pub seed: u64,
    /// Extra stream states available to replace ones whose recovery fails.
    pub spare_states: usize,
}

impl DecompParams {
    /// Exhaustive balanced cuts with `δ = 0.05`, `α = 1 + 5δ`, `b = 1`.
    pub fn exact(epsilon: f64, k: usize, seed: u64) -> Self {
        let delta = 0.05;
        DecompParams {
            epsilon,
            k,
            delta,
            c: 1.0,
            alpha: 1.0 + 5.0 * delta,
            b: 1.0,
            volume_bound: None,
            mode: Mode::Exact,
            upsilon: UpsilonRule::Formula,
            seed,
            spare_states: default_spares(),
        }
    }

    /// Sweep balanced cuts with the calibrated `(α, b)`.
    pub fn fast(epsilon: f64, k: usize, seed: u64) -> Self {
        DecompParams {
            alpha: SWEEP_ALPHA,
            b: SWEEP_B,
            mode: Mode::Fast,
            ..Self::exact(epsilon, k, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(0.0..1.0 / 16.0).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 1/16), got {}", self.delta));
        }
        if !(self.c > 0.0) {
            return bad(format!("failure exponent must be positive, got {}", self.c));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be >= 1, got {}", self.alpha));
        }
        if !(self.b > 0.0 && self.b <= 1.0) {
            return bad(format!("b must lie in (0, 1], got {}", self.b));
        }
        if let Some(o) = self.volume_bound {
            if !(o > 1.0 && o.is_finite()) {
                return bad(format!("volume bound must exceed 1, got {o}"));
            }
        }
        if let UpsilonRule::Scaled(s) = self.upsilon {
            if !(s > 0.0) {
                return bad(format!("upsilon scale must be positive, got {s}"));
            }
        }
        Ok(())
    }

    /// Factor `a` such that every returned cut should satisfy
    /// `Φ_{G{C}}(S) ≤ a·φ`: `1+5δ` for exhaustive, `(1+6δ)α` for the sweep.
    pub fn cut_sparsity_factor(&self) -> f64 {
        match self.mode {
            Mode::Exact => 1.0 + 5.0 * self.delta,
            Mode::Fast => (1.0 + 6.0 * self.delta) * self.alpha,
        }
    }

    fn volume_bound_for(&self, n: usize) -> f64 {
        self.volume_bound
            .unwrap_or((n as f64) * (n as f64))
            .max(4.0)
    }
}

/// Global parameter schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub epsilon: f64,
    pub k: usize,
    pub b: f64,
    pub volume_bound: f64,
    /// `φ_0, …, φ_{k+1}`.
    pub phi: Vec<f64>,
    /// `ψ_j = δ·φ_j`.
    pub psi: Vec<f64>,
    /// `T = ceil((ε·Vol)^{1/k})`.
    pub t: usize,
    /// Low-depth pool size `D`.
    pub alg1_pool: usize,
    /// Per-`j` unbalanced pool size.
    pub alg2_pool: usize,
}

/// Per-call constants of the unbalanced phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbalancedSchedule {
    pub tau: f64,
    /// `m_1, …, m_{k+1}` at indices `1..=k+1`; index 0 unused.
    pub m: Vec<f64>,
    /// `floor(τ/b) + 1`.
    pub inner_bound: usize,
}

impl Schedule {
    /// `vol` sizes `T`: the true `Vol(G)` offline, the bound `O` when the
    /// pools must exist before the stream is read.
    pub fn new(params: &DecompParams, n: usize, vol: f64) -> Result<Self> {
        params.validate()?;
        let o = params.volume_bound_for(n);
        let (eps, k, alpha) = (params.epsilon, params.k, params.alpha);
        let phi0 = eps / (2.0 * o.log2() * alpha);
        let phi: Vec<f64> = (0..=k + 1).map(|j| phi0 / alpha.powi(j as i32)).collect();
        let psi = phi.iter().map(|p| params.delta * p).collect();
        let t = (eps * vol).max(1.0).powf(1.0 / k as f64).ceil() as usize;
        let shrink = (1.0 / (1.0 - eps * params.b / 4.0)).log2();
        let alg1_pool = (o.log2() / shrink).ceil() as usize + 2;
        let alg2_pool = (t as f64 / params.b).floor() as usize + 2;
        Ok(Schedule {
            epsilon: eps,
            k,
            b: params.b,
            volume_bound: o,
            phi,
            psi,
            t,
            alg1_pool,
            alg2_pool,
        })
    }

    pub fn phi_final(&self) -> f64 {
        self.phi[self.k + 1]
    }

    pub fn unbalanced(&self, vol_c0: f64) -> UnbalancedSchedule {
        let k = self.k;
        let m1 = self.epsilon * vol_c0;
        let tau = m1.powf(1.0 / k as f64);
        let mut m = vec![f64::NAN; k + 2];
        for (j, mj) in m.iter_mut().enumerate().take(k + 1).skip(1) {
            *mj = m1 / tau.powi(j as i32 - 1);
        }
        m[k + 1] = 1.0;
        UnbalancedSchedule {
            tau,
            m,
            inner_bound: (tau / self.b).floor() as usize + 1,
        }
    }

    /// Recursion-depth bound `floor(log Vol / log(1/(1-εb/4))) + 1`.
    pub fn depth_bound(&self, vol: f64) -> usize {
        let shrink = (1.0 / (1.0 - self.epsilon * self.b / 4.0)).ln();
        (vol.max(1.0).ln() / shrink).floor() as usize + 1
    }
}

struct Slot {
    params: SparsifierParams,
    graph: Option<Rc<Graph>>,
    uses: usize,
}

/// Independent sparsifiers, one per recursion depth and one per `(j, h)`.
struct SparsifierPool<'a> {
    source: Option<&'a Graph>,
    alg1: Vec<Slot>,
    alg2: Vec<Vec<Slot>>,
}

impl<'a> SparsifierPool<'a> {
    fn new(params: &DecompParams, sched: &Schedule, source: Option<&'a Graph>) -> Self {
        let sp = |eps: f64, seed: u64| SparsifierParams {
            delta: params.delta,
            epsilon: eps,
            c: params.c,
            upsilon: params.upsilon,
            seed,
        };
        let slot = |p| Slot {
            params: p,
            graph: None,
            uses: 0,
        };
        let alg1 = (1..=sched.alg1_pool)
            .map(|i| {
                slot(sp(
                    sched.psi[0],
                    derive(params.seed, prf::TAG_POOL_ALG1, i as u64),
                ))
            })
            .collect();
        let alg2 = (1..=sched.k + 1)
            .map(|j| {
                let base = derive(params.seed, prf::TAG_POOL_ALG2, j as u64);
                (1..=sched.alg2_pool)
                    .map(|h| slot(sp(sched.psi[j], derive(base, prf::TAG_POOL_ALG2, h as u64))))
                    .collect()
            })
            .collect();
        SparsifierPool { source, alg1, alg2 }
    }

    fn slots_mut(&mut self) -> impl Iterator<Item = &mut Slot> {
        self.alg1.iter_mut().chain(self.alg2.iter_mut().flatten())
    }

    fn fetch(source: Option<&Graph>, slot: &mut Slot) -> Result<Rc<Graph>> {
        if slot.graph.is_none() {
            let g = source.ok_or_else(|| {
                Error::PoolExhausted("streamed sparsifier slot was never filled".into())
            })?;
            slot.graph = Some(Rc::new(sample(g, &slot.params)?));
        }
        slot.uses += 1;
        Ok(slot.graph.clone().expect("filled above"))
    }

    fn alg1(&mut self, depth: usize) -> Result<Rc<Graph>> {
        let len = self.alg1.len();
        let slot = self.alg1.get_mut(depth - 1).ok_or_else(|| {
            Error::PoolExhausted(format!(
                "recursion depth {depth} exceeds the {len} low-depth sparsifiers"
            ))
        })?;
        Self::fetch(self.source, slot)
    }

    fn alg2(&mut self, j: usize, h: usize) -> Result<Rc<Graph>> {
        let k1 = self.alg2.len();
        let row = self.alg2.get_mut(j - 1).ok_or_else(|| {
            Error::PoolExhausted(format!("outer iteration {j} exceeds k+1 = {k1}"))
        })?;
        let len = row.len();
        let slot = row.get_mut(h - 1).ok_or_else(|| {
            Error::PoolExhausted(format!(
                "inner iteration {h} at j = {j} exceeds the {len} sparsifiers"
            ))
        })?;
        Self::fetch(self.source, slot)
    }

    fn used(&self) -> usize {
        self.alg1
            .iter()
            .chain(self.alg2.iter().flatten())
            .filter(|s| s.uses > 0)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMethod {
    /// Fewer than two vertices, or no cut with positive volume on both sides.
    Trivial,
    /// Every cut considered: enumeration up to 22 vertices, weight-bounded
    /// enumeration up to 64.
    Exact,
    /// Only cuts found by the spectral sweep.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterVerdict {
    pub size: usize,
    /// Exact minimum conductance of `G{C}` when enumerated in full, or the
    /// conductance of a violating cut when one was found.
    pub min_conductance: Option<f64>,
    pub method: CheckMethod,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub epsilon: f64,
    pub phi: f64,
    pub intercluster_volume: f64,
    pub volume_limit: f64,
    pub volume_ok: bool,
    pub clusters: Vec<ClusterVerdict>,
    pub expansion_ok: bool,
    /// True when some cluster could only be checked heuristically.
    pub heuristic: bool,
    pub passed: bool,
}

fn check_cluster(g: &Graph, c: &VertexSet, phi: f64) -> Result<ClusterVerdict> {
    let trivial = |size| ClusterVerdict {
        size,
        min_conductance: None,
        method: CheckMethod::Trivial,
        passed: true,
    };
    if c.len() < 2 {
        return Ok(trivial(c.len()));
    }
    let gc = induce_with_loops(g, c)?;
    if c.len() <= BRUTE_FORCE_LIMIT {
        return match min_conductance_bruteforce(&gc) {
            Ok((m, _)) => Ok(ClusterVerdict {
                size: c.len(),
                min_conductance: Some(m),
                method: CheckMethod::Exact,
                passed: approx_le(phi, m),
            }),
            Err(Error::DegenerateCut) => Ok(trivial(c.len())),
            Err(e) => Err(e),
        };
    }
    if c.len() <= MASK_LIMIT {
        match sparsest_cut_below(&gc, phi) {
            Ok(found) => {
                return Ok(ClusterVerdict {
                    size: c.len(),
                    min_conductance: found.as_ref().map(|(m, _)| *m),
                    method: CheckMethod::Exact,
                    passed: found.is_none_or(|(m, _)| approx_le(phi, m)),
                })
            }
            Err(Error::EnumerationBudget { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let out = sweep_balanced_cut(&gc, gc.degrees(), phi, 0.0)?;
    let found = match out.side() {
        Some(s) => Some(crate::graph::conductance(&gc, s)?),
        None => None,
    };
    Ok(ClusterVerdict {
        size: c.len(),
        min_conductance: found,
        method: CheckMethod::Heuristic,
        passed: found.is_none_or(|m| approx_le(phi, m)),
    })
}

/// Checks `Σ_C w(C, C̄) ≤ ε·Vol(V)` and that every `G{C}` is a `φ`-expander.
pub fn verify_decomposition(
    g: &Graph,
    p: &Partition,
    epsilon: f64,
    phi: f64,
) -> Result<VerifyReport> {
    let icv = intercluster_volume(g, p)?;
    let limit = epsilon * g.total_volume();
    let volume_ok = approx_le(icv, limit);
    let clusters = p
        .clusters()
        .iter()
        .map(|c| check_cluster(g, c, phi))
        .collect::<Result<Vec<_>>>()?;
    let expansion_ok = clusters.iter().all(|c| c.passed);
    let heuristic = clusters.iter().any(|c| c.method == CheckMethod::Heuristic);
    Ok(VerifyReport {
        epsilon,
        phi,
        intercluster_volume: icv,
        volume_limit: limit,
        volume_ok,
        clusters,
        expansion_ok,
        heuristic,
        passed: volume_ok && expansion_ok,
    })
}

/// Counters and runtime checks of one decomposition run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbalancedTrace {
    /// `Vol(C_0)`.
    pub volume: f64,
    pub inner_bound: usize,
    /// Inner iterations run at each outer iteration `j = 1, 2, …`.
    pub inner: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub n: usize,
    pub epsilon: f64,
    pub k: usize,
    pub delta: f64,
    pub alpha: f64,
    pub b: f64,
    pub volume_bound: f64,
    pub phi: Vec<f64>,
    pub phi_final: f64,
    pub alg1_pool: usize,
    pub alg2_pool: usize,
    /// Deepest low-depth recursion level reached (root = 1).
    pub depth: usize,
    pub depth_bound: usize,
    /// Largest inner iteration count seen for each `j = 1..=k+1`.
    pub iterations: Vec<usize>,
    /// Largest outer iteration reached by the unbalanced phase.
    pub outer_max: usize,
    pub unbalanced_calls: usize,
    /// One entry per unbalanced-phase call.
    pub unbalanced: Vec<UnbalancedTrace>,
    pub sweep_fallbacks: usize,
    pub sparsifiers_used: usize,
    pub stream_recovery_retries: usize,
    pub sketch_memory_bytes: Option<usize>,
    pub cluster_sizes: Vec<usize>,
    pub singleton_count: usize,
    pub intercluster_volume: Option<f64>,
    pub intercluster_fraction: Option<f64>,
    pub verdicts: Vec<ClusterVerdict>,
    pub violations: Vec<String>,
}

impl RunReport {
    pub fn min_cluster_conductance(&self) -> Option<f64> {
        self.verdicts
            .iter()
            .filter(|v| v.method == CheckMethod::Exact && v.size > 1)
            .filter_map(|v| v.min_conductance)
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub partition: Partition,
    pub report: RunReport,
}

struct Driver<'a> {
    oracle: Option<&'a Graph>,
    deg: Vec<f64>,
    params: &'a DecompParams,
    sched: Schedule,
    pool: SparsifierPool<'a>,
    report: RunReport,
}

impl<'a> Driver<'a> {
    fn volume(&self, s: &VertexSet) -> f64 {
        s.iter().map(|v| self.deg[v]).sum()
    }

    /// `Φ` of `S` inside `G{U}`.
    fn conductance_within(&self, s: &VertexSet, universe: &VertexSet) -> Option<f64> {
        let g = self.oracle?;
        let mut side = vec![0u8; g.n()];
        for v in universe.iter() {
            side[v] = 1;
        }
        for v in s.iter() {
            side[v] = 2;
        }
        let w: f64 = g
            .edges()
            .iter()
            .filter(|e| side[e.u] != 0 && side[e.v] != 0 && side[e.u] != side[e.v])
            .map(|e| e.w)
            .sum();
        let vs = self.volume(s);
        let denom = vs.min(self.volume(universe) - vs);
        Some(if denom > 0.0 {
            w / denom
        } else {
            f64::INFINITY
        })
    }

    fn violation(&mut self, msg: String) {
        self.report.violations.push(msg);
    }

    /// Runs the configured balanced-cut routine on `H{C}` and lifts the side
    /// back to global ids.
    fn balanced_cut(&mut self, h: &Graph, c: &VertexSet, phi: f64) -> Result<Option<VertexSet>> {
        if c.len() < 2 {
            return Ok(None);
        }
        let hc = induce_with_loops(h, c)?;
        let dg: Vec<f64> = c.iter().map(|v| self.deg[v]).collect();
        let delta = self.params.delta;
        let out = match self.params.mode {
            Mode::Exact => exhaustive_balanced_cut(&hc, &dg, phi, delta)?,
            Mode::Fast => match sweep_balanced_cut(&hc, &dg, phi, delta) {
                Err(Error::NumericFailure { .. }) if c.len() <= MASK_LIMIT => {
                    self.report.sweep_fallbacks += 1;
                    exhaustive_balanced_cut(&hc, &dg, phi, delta)?
                }
                r => r?,
            },
        };
        let Some(side) = out.side() else {
            return Ok(None);
        };
        let s = side.lift(c);
        let vs = self.volume(&s);
        if !approx_le(2.0 * vs, self.volume(c)) {
            self.violation(format!(
                "balanced cut returned a side above half volume ({vs})"
            ));
        }
        let bound = self.params.cut_sparsity_factor() * phi;
        if let Some(cond) = self.conductance_within(&s, c) {
            if !approx_le(cond, bound) {
                self.violation(format!(
                    "returned cut has conductance {cond} in G{{C}}, above {bound}"
                ));
            }
        }
        Ok(Some(s))
    }

    fn low_depth(&mut self, c: VertexSet, depth: usize) -> Result<Vec<VertexSet>> {
        self.report.depth = self.report.depth.max(depth);
        if depth > self.report.depth_bound {
            let b = self.report.depth_bound;
            self.violation(format!("recursion depth {depth} exceeds the bound {b}"));
        }
        if c.len() < 2 {
            return Ok(vec![c]);
        }
        let h = self.pool.alg1(depth)?;
        let phi0 = self.sched.phi[0];
        let Some(s) = self.balanced_cut(&h, &c, phi0)? else {
            return Ok(vec![c]);
        };
        let p = self.params;
        if self.volume(&s) >= p.epsilon * p.b / 4.0 * self.volume(&c) {
            let rest = s.complement_in(&c);
            let mut out = self.low_depth(s, depth + 1)?;
            out.extend(self.low_depth(rest, depth + 1)?);
            Ok(out)
        } else {
            self.unbalanced(c)
        }
    }

    fn unbalanced(&mut self, c0: VertexSet) -> Result<Vec<VertexSet>> {
        self.report.unbalanced_calls += 1;
        let k = self.params.k;
        let b = self.params.b;
        let vol_c0 = self.volume(&c0);
        let us = self.sched.unbalanced(vol_c0);
        let call = self.report.unbalanced.len();
        self.report.unbalanced.push(UnbalancedTrace {
            volume: vol_c0,
            inner_bound: us.inner_bound,
            inner: Vec::new(),
        });
        let mut c = c0.clone();
        let mut j = 1;
        loop {
            self.report.unbalanced[call].inner.push(0);
            if j > k + 1 {
                self.violation(format!(
                    "unbalanced phase reached outer iteration {j} > k+1"
                ));
            }
            self.report.outer_max = self.report.outer_max.max(j);
            let start = c.clone();
            let vol_start = self.volume(&start);
            let mut removed = VertexSet::empty();
            let phi_j = self.sched.phi.get(j).copied().unwrap_or(f64::NAN);
            let m_j = us.m.get(j).copied().unwrap_or(1.0);
            let mut h = 1;
            loop {
                if h > us.inner_bound {
                    self.violation(format!(
                        "inner iteration {h} at j = {j} exceeds floor(tau/b)+1 = {}",
                        us.inner_bound
                    ));
                }
                if let Some(slot) = self.report.iterations.get_mut(j - 1) {
                    *slot = (*slot).max(h);
                }
                self.report.unbalanced[call].inner[j - 1] = h;
                let hg = self.pool.alg2(j, h)?;
                let Some(s) = self.balanced_cut(&hg, &c, phi_j)? else {
                    return Ok(self.finish_unbalanced(&c0, c, vol_c0));
                };
                if self.volume(&s) < b / 2.0 * m_j {
                    break;
                }
                c = s.complement_in(&c);
                removed = removed.union(&s);
                let vol_removed = self.volume(&removed);
                if approx_le(2.0 * vol_removed, vol_start) {
                    let bound =
                        (self.params.cut_sparsity_factor() * phi_j).max(self.sched.phi[j - 1]);
                    if let Some(cond) = self.conductance_within(&removed, &start) {
                        if !approx_le(cond, bound) {
                            self.violation(format!(
                                "union of cuts removed at j = {j} has conductance {cond} > {bound}"
                            ));
                        }
                    }
                }
                h += 1;
            }
            j += 1;
        }
    }

    fn finish_unbalanced(&mut self, c0: &VertexSet, c: VertexSet, vol_c0: f64) -> Vec<VertexSet> {
        let trimmed = c.complement_in(c0);
        let vol_trimmed = self.volume(&trimmed);
        let limit = self.params.epsilon / 2.0 * vol_c0;
        if !approx_le(vol_trimmed, limit) {
            self.violation(format!(
                "unbalanced phase trimmed volume {vol_trimmed} > (eps/2)·Vol(C0) = {limit}"
            ));
        }
        let mut out = vec![c];
        out.extend(trimmed.iter().map(VertexSet::singleton));
        out
    }
}

fn empty_report(params: &DecompParams, sched: &Schedule, n: usize, vol: f64) -> RunReport {
    RunReport {
        mode: params.mode,
        n,
        epsilon: params.epsilon,
        k: params.k,
        delta: params.delta,
        alpha: params.alpha,
        b: params.b,
        volume_bound: sched.volume_bound,
        phi: sched.phi.clone(),
        phi_final: sched.phi_final(),
        alg1_pool: sched.alg1_pool,
        alg2_pool: sched.alg2_pool,
        depth: 0,
        depth_bound: sched.depth_bound(vol),
        iterations: vec![0; params.k + 1],
        outer_max: 0,
        unbalanced_calls: 0,
        unbalanced: Vec::new(),
        sweep_fallbacks: 0,
        sparsifiers_used: 0,
        stream_recovery_retries: 0,
        sketch_memory_bytes: None,
        cluster_sizes: Vec::new(),
        singleton_count: 0,
        intercluster_volume: None,
        intercluster_fraction: None,
        verdicts: Vec::new(),
        violations: Vec::new(),
    }
}

fn guard_size(params: &DecompParams, n: usize) -> Result<()> {
    if params.mode == Mode::Exact && n > MASK_LIMIT {
        return Err(Error::TooLarge {
            what: "exact-mode decomposition",
            limit: MASK_LIMIT,
            got: n,
        });
    }
    Ok(())
}

fn run(mut driver: Driver<'_>, n: usize) -> Result<Decomposition> {
    let mut active = Vec::new();
    let mut clusters = Vec::new();
    for v in 0..n {
        if driver.deg[v] > 0.0 {
            active.push(v);
        } else {
            clusters.push(VertexSet::singleton(v));
        }
    }
    if !active.is_empty() {
        clusters.extend(driver.low_depth(VertexSet::new(active), 1)?);
    }
    let partition = Partition::new(n, clusters)?.canonical();
    let mut report = driver.report;
    report.sparsifiers_used = driver.pool.used();
    report.cluster_sizes = partition.clusters().iter().map(|c| c.len()).collect();
    report.singleton_count = report.cluster_sizes.iter().filter(|&&s| s == 1).count();
    if let Some(g) = driver.oracle {
        let phi = driver.sched.phi_final();
        let v = verify_decomposition(g, &partition, driver.params.epsilon, phi)?;
        let vol = g.total_volume();
        report.intercluster_volume = Some(v.intercluster_volume);
        report.intercluster_fraction = Some(if vol > 0.0 {
            v.intercluster_volume / vol
        } else {
            0.0
        });
        if !v.volume_ok {
            report.violations.push(format!(
                "intercluster volume {} exceeds eps·Vol = {}",
                v.intercluster_volume, v.volume_limit
            ));
        }
        for (c, verdict) in partition.clusters().iter().zip(&v.clusters) {
            if !verdict.passed {
                report.violations.push(format!(
                    "cluster starting at {} ({} vertices) is not a {phi}-expander: conductance {:?}",
                    c.as_slice()[0],
                    c.len(),
                    verdict.min_conductance
                ));
            }
        }
        report.verdicts = v.clusters;
    }
    Ok(Decomposition { partition, report })
}

/// Expander decomposition of `g` with offline-sampled sparsifiers.
pub fn decompose(g: &Graph, params: &DecompParams) -> Result<Decomposition> {
    params.validate()?;
    let n = g.n();
    guard_size(params, n)?;
    let vol = g.total_volume();
    let o = params.volume_bound_for(n);
    if vol > o {
        return Err(Error::InvalidParameter(format!(
            "Vol(G) = {vol} exceeds the volume bound {o}"
        )));
    }
    let sched = Schedule::new(params, n, vol)?;
    let driver = Driver {
        oracle: Some(g),
        deg: g.degrees().to_vec(),
        params,
        pool: SparsifierPool::new(params, &sched, Some(g)),
        report: empty_report(params, &sched, n, vol),
        sched,
    };
    run(driver, n)
}

/// Expander decomposition from a dynamic edge stream. One independent
/// [`StreamState`] per pool slot is fed the whole stream; a slot whose
/// recovery fails is replaced by a spare state, up to
/// `params.spare_states` replacements. `oracle`, when given, must be the net
/// graph of the stream and enables the checks that need edge weights.
pub fn decompose_stream(
    n: usize,
    updates: &[StreamUpdate],
    params: &DecompParams,
    oracle: Option<&Graph>,
) -> Result<Decomposition> {
    params.validate()?;
    guard_size(params, n)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "stream needs n >= 2, got {n}"
        )));
    }
    let o = params.volume_bound_for(n);
    let sched = Schedule::new(params, n, o)?;
    let mut pool = SparsifierPool::new(params, &sched, None);
    let mut spares_left = params.spare_states;
    let mut spare_index = 0u64;
    let mut retries = 0;
    let mut memory = 0usize;
    let mut deg: Option<Vec<i64>> = None;
    for slot in pool.slots_mut() {
        let mut sp = slot.params;
        loop {
            let mut state = StreamState::new(n, &sp)?;
            state.process_all(updates)?;
            memory += state.memory_bytes();
            if deg.is_none() {
                deg = Some(state.degrees().to_vec());
            }
            if let Some(h) = state.recover_sparsifier() {
                slot.graph = Some(Rc::new(h));
                break;
            }
            if spares_left == 0 {
                return Err(Error::RecoveryExhausted(format!(
                    "sketch recovery failed after {retries} replacement states"
                )));
            }
            spares_left -= 1;
            retries += 1;
            spare_index += 1;
            sp.seed = derive(params.seed, prf::TAG_POOL_SPARE, spare_index);
        }
    }
    let deg: Vec<f64> = deg
        .unwrap_or_else(|| vec![0; n])
        .into_iter()
        .map(|d| d as f64)
        .collect();
    let vol: f64 = deg.iter().sum();
    if vol > o {
        return Err(Error::InvalidParameter(format!(
            "Vol(G) = {vol} exceeds the volume bound {o}"
        )));
    }
    let mut report = empty_report(params, &sched, n, vol);
    report.stream_recovery_retries = retries;
    report.sketch_memory_bytes = Some(memory);
    let driver = Driver {
        oracle,
        deg,
        params,
        pool,
        report,
        sched,
    };
    run(driver, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Graph {
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                pairs.push((u, v));
            }
        }
        Graph::from_pairs(n, pairs).unwrap()
    }

    #[test]
    fn schedule_examples() {
        let mut p = DecompParams::exact(0.1, 3, 0);
        p.alpha = 2.0;
        p.volume_bound = Some(256.0);
        let s = Schedule::new(&p, 16, 100.0).unwrap();
        assert_eq!(s.phi[0], 0.003125);
        assert!((s.phi_final() - s.phi[0] * 2f64.powi(-4)).abs() < 1e-18);
        let u = s.unbalanced(500.0);
        assert_eq!(u.m[1], 50.0);
        assert_eq!(u.m[4], 1.0);
        assert!((u.m[3] - 50.0 / u.tau.powi(2)).abs() < 1e-9);
        p.k = 1;
        let u = Schedule::new(&p, 16, 100.0).unwrap().unbalanced(500.0);
        assert_eq!(u.tau, 50.0);
        assert_eq!(u.m[2], 1.0);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = DecompParams::exact(0.3, 2, 0);
        p.epsilon = 1.0;
        assert!(p.validate().is_err());
        let mut p = DecompParams::exact(0.1, 2, 0);
        p.delta = 1.0 / 16.0;
        assert!(p.validate().is_err());
        let mut p = DecompParams::exact(0.1, 0, 0);
        assert!(p.validate().is_err());
        p.k = 1;
        p.b = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn k16_is_one_cluster() {
        let g = complete(16);
        let d = decompose(&g, &DecompParams::exact(0.2, 2, 1)).unwrap();
        assert_eq!(d.partition.len(), 1);
        assert!(d.report.violations.is_empty(), "{:?}", d.report.violations);
        assert_eq!(d.report.depth, 1);
    }

    #[test]
    fn disjoint_cliques_split_once() {
        let mut pairs = Vec::new();
        for b in 0..2 {
            for u in 0..8 {
                for v in u + 1..8 {
                    pairs.push((b * 8 + u, b * 8 + v));
                }
            }
        }
        let g = Graph::from_pairs(16, pairs).unwrap();
        for params in [
            DecompParams::exact(0.2, 2, 5),
            DecompParams::fast(0.2, 2, 5),
        ] {
            let d = decompose(&g, &params).unwrap();
            assert_eq!(d.partition.len(), 2);
            assert_eq!(d.report.depth, 2);
            assert_eq!(d.report.intercluster_volume, Some(0.0));
            assert!(d.report.violations.is_empty(), "{:?}", d.report.violations);
        }
    }

    #[test]
    fn tiny_component_goes_through_unbalanced_phase() {
        let mut pairs = Vec::new();
        for u in 0..20 {
            for v in u + 1..20 {
                pairs.push((u, v));
            }
        }
        pairs.push((20, 21));
        let g = Graph::from_pairs(22, pairs).unwrap();
        let d = decompose(&g, &DecompParams::exact(0.2, 2, 2)).unwrap();
        assert!(d.report.violations.is_empty(), "{:?}", d.report.violations);
        assert_eq!(d.report.unbalanced_calls, 1);
        assert_eq!(d.report.outer_max, 3);
        assert_eq!(d.report.iterations, vec![1, 1, 2]);
        assert_eq!(d.partition.len(), 3);
        assert_eq!(d.report.singleton_count, 2);
        assert_eq!(d.report.intercluster_volume, Some(2.0));
    }

    #[test]
    fn empty_graph_gives_singletons() {
        let g = Graph::new(5);
        let d = decompose(&g, &DecompParams::exact(0.2, 2, 2)).unwrap();
        assert_eq!(d.partition.len(), 5);
        assert_eq!(d.report.intercluster_volume, Some(0.0));
    }

    #[test]
    fn verify_examples() {
        let g = complete(16);
        let v = verify_decomposition(&g, &Partition::whole(16), 0.1, 0.5).unwrap();
        assert!(v.passed);
        assert!((v.clusters[0].min_conductance.unwrap() - 64.0 / 120.0).abs() < 1e-12);
        let v = verify_decomposition(&g, &Partition::singletons(16), 0.9, 0.5).unwrap();
        assert!(!v.volume_ok);
        assert!(!v.passed);
    }

    #[test]
    fn stream_decomposition_matches_offline_partition() {
        let mut pairs = Vec::new();
        for b in 0..2 {
            for u in 0..6 {
                for v in u + 1..6 {
                    pairs.push((b * 6 + u, b * 6 + v));
                }
            }
        }
        let g = Graph::from_pairs(12, pairs.iter().copied()).unwrap();
        let ups: Vec<_> = pairs
            .iter()
            .map(|&(u, v)| StreamUpdate::insert(u, v))
            .collect();
        let params = DecompParams::exact(0.2, 1, 3);
        let s = decompose_stream(12, &ups, &params, Some(&g)).unwrap();
        let o = decompose(&g, &params).unwrap();
        assert_eq!(s.partition, o.partition);
        assert!(s.report.violations.is_empty());
        assert!(s.report.sketch_memory_bytes.unwrap() > 0);
    }
}
