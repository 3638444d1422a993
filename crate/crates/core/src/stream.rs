//! Dynamic-stream construction of the sampled graph `G′`.
//!
//! Every edge gets a geometric level from a keyed PRF. The state keeps exact
//! degree counters and, for each level `i` and vertex `v`, a sparse-recovery
//! sketch of `v`'s neighbourhood among edges of level `≥ i`. At the end of the
//! stream vertex `v` decodes its level `j_v` sketch, and each recovered edge
//! gets weight `2^min(j_u, j_v)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::prf::{self, derive, prf2};
use crate::sketch::{SketchParams, SparseRecoverySketch};
use crate::sparsifier::SparsifierParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamUpdate {
    pub op: Op,
    pub u: usize,
    pub v: usize,
}

impl StreamUpdate {
    pub fn insert(u: usize, v: usize) -> Self {
        StreamUpdate {
            op: Op::Insert,
            u,
            v,
        }
    }

    pub fn delete(u: usize, v: usize) -> Self {
        StreamUpdate {
            op: Op::Delete,
            u,
            v,
        }
    }

    fn delta(&self) -> i64 {
        match self.op {
            Op::Insert => 1,
            Op::Delete => -1,
        }
    }
}

/// Level of edge `{u, v}`: the number of leading one bits of its PRF value.
/// The edge belongs to level graph `G_i` iff its level is at least `i`.
pub fn edge_level(seed: u64, u: usize, v: usize) -> usize {
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    let key = derive(seed, prf::TAG_EDGE_LEVEL, 0);
    prf2(key, a as u64, b as u64).leading_ones() as usize
}

/// Highest level that any vertex of a simple `n`-vertex graph can decode from:
/// `max(0, floor(log2((n-1)/(2Υ))))`. Levels above it are never allocated.
pub fn top_level(n: usize, upsilon: f64) -> usize {
    level_for_degree(n.saturating_sub(1) as i64, upsilon, usize::MAX)
}

/// `j_v = max(0, floor(log2(deg/(2Υ))))`, capped at `top`.
pub fn level_for_degree(deg: i64, upsilon: f64, top: usize) -> usize {
    if deg <= 0 {
        return 0;
    }
    let r = deg as f64 / (2.0 * upsilon);
    if !(r >= 2.0) {
        return 0;
    }
    (r.log2().floor() as usize).min(top)
}

/// Sketch parameters `k = min(ceil(8Υ), n)`, `p = n^(-C-3)` for level `i`.
fn sketch_params(n: usize, upsilon: f64, c: f64, seed: u64, level: usize) -> Result<SketchParams> {
    let k8 = 8.0 * upsilon;
    let k = if k8 >= n as f64 {
        n
    } else {
        (k8.ceil() as usize).max(1)
    };
    let p = (n as f64).powf(-(c + 3.0));
    SketchParams::new(n, k, p, derive(seed, prf::TAG_SKETCH_LEVEL, level as u64))
}

/// Complete memory of the streaming algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamState {
    n: usize,
    params: SparsifierParams,
    upsilon: f64,
    top: usize,
    deg: Vec<i64>,
    // index: level * n + v
    sketches: Vec<SparseRecoverySketch>,
}

impl StreamState {
    pub fn new(n: usize, params: &SparsifierParams) -> Result<Self> {
        params.validate()?;
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "stream needs n >= 2, got {n}"
            )));
        }
        let upsilon = params.upsilon(n);
        let top = top_level(n, upsilon);
        let mut sketches = Vec::with_capacity((top + 1) * n);
        for level in 0..=top {
            let sp = sketch_params(n, upsilon, params.c, params.seed, level)?;
            let proto = SparseRecoverySketch::new(sp)?;
            sketches.extend(std::iter::repeat_n(proto, n));
        }
        Ok(StreamState {
            n,
            params: *params,
            upsilon,
            top,
            deg: vec![0; n],
            sketches,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &SparsifierParams {
        &self.params
    }

    pub fn upsilon(&self) -> f64 {
        self.upsilon
    }

    /// Number of allocated levels (`top + 1`).
    pub fn levels(&self) -> usize {
        self.top + 1
    }

    pub fn degrees(&self) -> &[i64] {
        &self.deg
    }

    pub fn sketch_params(&self, level: usize) -> &SketchParams {
        self.sketches[level * self.n].params()
    }

    pub fn edge_level(&self, u: usize, v: usize) -> usize {
        edge_level(self.params.seed, u, v)
    }

    pub fn process(&mut self, upd: StreamUpdate) -> Result<()> {
        let (u, v) = (upd.u, upd.v);
        for x in [u, v] {
            if x >= self.n {
                return Err(Error::VertexOutOfRange {
                    vertex: x,
                    n: self.n,
                });
            }
        }
        if u == v {
            return Err(Error::InvalidParameter(format!(
                "stream update on self-loop at {u}"
            )));
        }
        let d = upd.delta();
        self.deg[u] += d;
        self.deg[v] += d;
        let lvl = self.edge_level(u, v).min(self.top);
        for i in 0..=lvl {
            self.sketches[i * self.n + u].update(v, d)?;
            self.sketches[i * self.n + v].update(u, d)?;
        }
        Ok(())
    }

    pub fn process_all<'a, I>(&mut self, updates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a StreamUpdate>,
    {
        for u in updates {
            self.process(*u)?;
        }
        Ok(())
    }

    /// Adds another state fed from a disjoint part of the same stream.
    pub fn merge_from(&mut self, other: &StreamState) -> Result<()> {
        if self.n != other.n || self.params != other.params {
            return Err(Error::SketchMismatch);
        }
        for (a, b) in self.deg.iter_mut().zip(&other.deg) {
            *a += b;
        }
        for (a, b) in self.sketches.iter_mut().zip(&other.sketches) {
            a.merge_from(b)?;
        }
        Ok(())
    }

    /// `j_v` for every vertex.
    pub fn vertex_levels(&self) -> Vec<usize> {
        self.deg
            .iter()
            .map(|&d| level_for_degree(d, self.upsilon, self.top))
            .collect()
    }

    /// Decodes `G′`, or `None` if any vertex's sketch fails to decode.
    pub fn recover_sparsifier(&self) -> Option<Graph> {
        let j = self.vertex_levels();
        let mut found: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for v in 0..self.n {
            let nbrs = self.sketches[j[v] * self.n + v].recover()?;
            for (u, c) in nbrs {
                if c < 1 || u == v {
                    return None;
                }
                let key = (u.min(v), u.max(v));
                match found.get(&key) {
                    Some(&prev) if prev != c => return None,
                    _ => {
                        found.insert(key, c);
                    }
                }
            }
        }
        Some(build_weighted(self.n, &found, &j))
    }

    /// Buckets across all sketches.
    pub fn num_buckets(&self) -> usize {
        self.sketches.iter().map(|s| s.num_buckets()).sum()
    }

    /// The bucket budget `n · (ceil(log2 n) + 1) · 2·ceil(8Υ) · R`.
    pub fn bucket_budget(&self) -> usize {
        let sp = self.sketch_params(0);
        let levels = (self.n as f64).log2().ceil() as usize + 1;
        let k = (8.0 * self.upsilon).ceil().min(usize::MAX as f64 / 4.0) as usize;
        self.n
            .saturating_mul(levels)
            .saturating_mul(2 * k.max(1))
            .saturating_mul(sp.rows())
    }

    pub fn memory_bytes(&self) -> usize {
        self.sketches
            .iter()
            .map(|s| s.memory_bytes())
            .sum::<usize>()
            + 8 * self.n
    }

    /// Degrees followed by every sketch snapshot, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.top as u64).to_le_bytes());
        for d in &self.deg {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for s in &self.sketches {
            out.extend_from_slice(&s.to_bytes());
        }
        out
    }
}

fn build_weighted(n: usize, edges: &BTreeMap<(usize, usize), i64>, j: &[usize]) -> Graph {
    let mut g = Graph::new(n);
    for (&(a, b), &c) in edges {
        let w = (2.0f64).powi(j[a].min(j[b]) as i32);
        for _ in 0..c {
            g.add_edge(a, b, w)
                .expect("recovered edge is in range with positive weight");
        }
    }
    g
}

/// `G′` computed directly from the final graph with the same PRF draws as
/// [`StreamState`]. `g` must be loop-free and unweighted.
pub fn sample_offline(g: &Graph, params: &SparsifierParams) -> Result<Graph> {
    params.validate()?;
    if !g.is_loop_free() || !g.is_unweighted() {
        return Err(Error::InvalidParameter(
            "offline stream sampler needs a loop-free unweighted graph".into(),
        ));
    }
    let n = g.n();
    let upsilon = params.upsilon(n.max(2));
    let top = top_level(n.max(2), upsilon);
    let j: Vec<usize> = g
        .degrees()
        .iter()
        .map(|&d| level_for_degree(d.round() as i64, upsilon, top))
        .collect();
    let mut kept: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for e in g.edges() {
        let (a, b) = (e.u.min(e.v), e.u.max(e.v));
        if edge_level(params.seed, a, b) >= j[a].min(j[b]) {
            *kept.entry((a, b)).or_insert(0) += 1;
        }
    }
    Ok(build_weighted(n, &kept, &j))
}

/// Replays `updates` and returns the net graph, failing on any delete of an
/// absent edge or any self-loop.
pub fn replay(n: usize, updates: &[StreamUpdate]) -> Result<Graph> {
    let mut live: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for (i, upd) in updates.iter().enumerate() {
        for x in [upd.u, upd.v] {
            if x >= n {
                return Err(Error::VertexOutOfRange { vertex: x, n });
            }
        }
        if upd.u == upd.v {
            return Err(Error::InvalidParameter(format!(
                "update {i} is a self-loop"
            )));
        }
        let key = (upd.u.min(upd.v), upd.u.max(upd.v));
        let c = live.entry(key).or_insert(0);
        *c += upd.delta();
        if *c < 0 {
            return Err(Error::InvalidParameter(format!(
                "update {i} deletes absent edge {{{},{}}}",
                key.0, key.1
            )));
        }
    }
    let mut g = Graph::new(n);
    for (&(a, b), &c) in &live {
        for _ in 0..c {
            g.add_edge(a, b, 1.0)?;
        }
    }
    Ok(g)
}
