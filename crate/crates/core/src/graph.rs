//! Undirected weighted multigraphs with self-loops, vertex sets, partitions,
//! and exact cut arithmetic.
//!
//! Degree convention: a self-loop of weight `w` adds `w` to its vertex's degree
//! exactly once. Self-loops never cross a cut.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack applied to every float inequality checked by the crate.
pub const REL_SLACK: f64 = 1e-9;

/// Largest vertex count for which plain `2^n` enumeration is attempted.
pub const BRUTE_FORCE_LIMIT: usize = 22;

/// Largest vertex count representable by the `u64` cut masks.
pub const MASK_LIMIT: usize = 64;

/// `a <= b` up to [`REL_SLACK`].
#[inline]
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + REL_SLACK * a.abs().max(b.abs())
}

/// `a >= b` up to [`REL_SLACK`].
#[inline]
pub fn approx_ge(a: f64, b: f64) -> bool {
    approx_le(b, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// Undirected multigraph on vertices `0..n` with positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    deg: Vec<f64>,
    // non-loop incidences only: (neighbor, weight)
    adj: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            deg: vec![0.0; n],
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = Graph::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    /// Unweighted graph from vertex pairs.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges(n, pairs.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "edge {{{u},{v}}} has non-positive or non-finite weight {w}"
            )));
        }
        self.edges.push(Edge { u, v, w });
        if u == v {
            self.deg[u] += w;
        } else {
            self.deg[u] += w;
            self.deg[v] += w;
            self.adj[u].push((v, w));
            self.adj[v].push((u, w));
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn degree(&self, v: usize) -> f64 {
        self.deg[v]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.deg
    }

    /// Non-loop neighbors of `v` with edge weights; parallel edges repeat.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn total_volume(&self) -> f64 {
        self.deg.iter().fold(0.0, |a, d| a + d)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().fold(0.0, |a, e| a + e.w)
    }

    pub fn is_loop_free(&self) -> bool {
        self.edges.iter().all(|e| !e.is_loop())
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|e| e.w == 1.0)
    }

    /// Returns `true` if some pair of vertices is joined by more than one edge.
    pub fn has_parallel_edges(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.edges
            .iter()
            .any(|e| !seen.insert((e.u.min(e.v), e.u.max(e.v))))
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                n: self.n,
            })
        }
    }

    /// Connected components over non-loop edges, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut head = 0;
            while head < members.len() {
                let x = members[head];
                head += 1;
                for &(y, _) in &self.adj[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = id;
                        members.push(y);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// Sorted set of distinct vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        VertexSet(ids)
    }

    pub fn empty() -> Self {
        VertexSet(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        VertexSet((0..n).collect())
    }

    pub fn singleton(v: usize) -> Self {
        VertexSet(vec![v])
    }

    /// Set of the bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        let mut ids = Vec::with_capacity(mask.count_ones() as usize);
        let mut m = mask;
        while m != 0 {
            ids.push(m.trailing_zeros() as usize);
            m &= m - 1;
        }
        VertexSet(ids)
    }

    /// Bitmask form, if every id is below 64.
    pub fn mask(&self) -> Option<u64> {
        let mut m = 0u64;
        for &v in &self.0 {
            if v >= MASK_LIMIT {
                return None;
            }
            m |= 1 << v;
        }
        Some(m)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `universe ∖ self`, where `universe` is a sorted superset.
    pub fn complement_in(&self, universe: &VertexSet) -> VertexSet {
        VertexSet(universe.iter().filter(|&v| !self.contains(v)).collect())
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut ids = self.0.clone();
        ids.extend_from_slice(&other.0);
        VertexSet::new(ids)
    }

    /// Maps local indices `0..universe.len()` back to the ids of `universe`.
    pub fn lift(&self, universe: &VertexSet) -> VertexSet {
        VertexSet(self.iter().map(|i| universe.0[i]).collect())
    }

    fn check_range(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&v) if v >= n => Err(Error::VertexOutOfRange { vertex: v, n }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        VertexSet::new(iter.into_iter().collect())
    }
}

/// Disjoint clusters covering `0..n` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    n: usize,
    clusters: Vec<VertexSet>,
}

impl Partition {
    pub fn new(n: usize, clusters: Vec<VertexSet>) -> Result<Self> {
        let mut seen = vec![false; n];
        for c in &clusters {
            if c.is_empty() {
                return Err(Error::NotAPartition("empty cluster".into()));
            }
            c.check_range(n)?;
            for v in c.iter() {
                if seen[v] {
                    return Err(Error::NotAPartition(format!("vertex {v} in two clusters")));
                }
                seen[v] = true;
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::NotAPartition(format!("vertex {v} not covered")));
        }
        Ok(Partition { n, clusters })
    }

    pub fn whole(n: usize) -> Self {
        let clusters = if n == 0 {
            vec![]
        } else {
            vec![VertexSet::full(n)]
        };
        Partition { n, clusters }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            n,
            clusters: (0..n).map(VertexSet::singleton).collect(),
        }
    }

    /// Clusters from a label per vertex; clusters ordered by first label occurrence.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut index = std::collections::HashMap::new();
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for (v, &l) in labels.iter().enumerate() {
            let i = *index.entry(l).or_insert_with(|| {
                clusters.push(Vec::new());
                clusters.len() - 1
            });
            clusters[i].push(v);
        }
        Partition {
            n: labels.len(),
            clusters: clusters.into_iter().map(VertexSet::new).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clusters(&self) -> &[VertexSet] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Cluster index per vertex.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (i, c) in self.clusters.iter().enumerate() {
            for v in c.iter() {
                labels[v] = i;
            }
        }
        labels
    }

    /// Same clusters in a canonical order (by smallest member).
    pub fn canonical(mut self) -> Self {
        self.clusters.sort();
        self
    }
}

fn check_set(g: &Graph, s: &VertexSet) -> Result<()> {
    s.check_range(g.n())
}

fn check_nontrivial(g: &Graph, s: &VertexSet) -> Result<()> {
    check_set(g, s)?;
    if s.is_empty() {
        return Err(Error::InvalidCut("empty side"));
    }
    if s.len() == g.n() {
        return Err(Error::InvalidCut("side equals the whole vertex set"));
    }
    Ok(())
}

/// `Vol(S)`: sum of weighted degrees over `S`.
pub fn volume(g: &Graph, s: &VertexSet) -> Result<f64> {
    check_set(g, s)?;
    Ok(s.iter().fold(0.0, |a, v| a + g.degree(v)))
}

fn cut_weight_unchecked(g: &Graph, s: &VertexSet) -> f64 {
    let mut inside = vec![false; g.n()];
    for v in s.iter() {
        inside[v] = true;
    }
    g.edges()
        .iter()
        .filter(|e| inside[e.u] != inside[e.v])
        .fold(0.0, |a, e| a + e.w)
}

/// Total weight of edges with exactly one endpoint in `S`.
pub fn cut_weight(g: &Graph, s: &VertexSet) -> Result<f64> {
    check_nontrivial(g, s)?;
    Ok(cut_weight_unchecked(g, s))
}

fn sides_min_volume(g: &Graph, s: &VertexSet) -> Result<f64> {
    let vol_s = volume(g, s)?;
    let denom = vol_s.min(g.total_volume() - vol_s);
    if denom <= 0.0 {
        return Err(Error::DegenerateCut);
    }
    Ok(denom)
}

/// `w(S, S̄) / min(Vol(S), Vol(S̄))`.
pub fn conductance(g: &Graph, s: &VertexSet) -> Result<f64> {
    check_nontrivial(g, s)?;
    let denom = sides_min_volume(g, s)?;
    Ok(cut_weight_unchecked(g, s) / denom)
}

/// `min(Vol(S), Vol(S̄)) / Vol(V)`.
pub fn balance(g: &Graph, s: &VertexSet) -> Result<f64> {
    check_nontrivial(g, s)?;
    let denom = sides_min_volume(g, s)?;
    Ok(denom / g.total_volume())
}

/// `G{C}`: the subgraph induced by `C`, relabelled to `0..|C|` in sorted order,
/// with a self-loop at each vertex carrying the weight of its edges that leave
/// `C`, so every degree matches its degree in `G`.
pub fn induce_with_loops(g: &Graph, c: &VertexSet) -> Result<Graph> {
    check_set(g, c)?;
    let mut local = vec![usize::MAX; g.n()];
    for (i, v) in c.iter().enumerate() {
        local[v] = i;
    }
    let mut h = Graph::new(c.len());
    for e in g.edges() {
        let (a, b) = (local[e.u], local[e.v]);
        if a != usize::MAX && b != usize::MAX {
            h.add_edge(a, b, e.w)?;
        }
    }
    for (i, v) in c.iter().enumerate() {
        let missing = g.degree(v) - h.degree(i);
        if missing > REL_SLACK * g.degree(v) {
            h.add_edge(i, i, missing)?;
        }
    }
    Ok(h)
}

/// Visits every unordered nontrivial cut of an `n`-vertex ground set once, as
/// the side `S` that excludes vertex `n - 1`, in Gray-code order. For each
/// graph in `graphs` the callback receives the current `w(S, S̄)`, and for each
/// weight vector in `weights` the current `Σ_{v∈S} weight[v]`.
pub(crate) fn for_each_cut<F>(
    n: usize,
    graphs: &[&Graph],
    weights: &[&[f64]],
    mut f: F,
) -> Result<()>
where
    F: FnMut(u64, &[f64], &[f64]),
{
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            what: "exhaustive cut enumeration",
            limit: BRUTE_FORCE_LIMIT,
            got: n,
        });
    }
    if n < 2 {
        return Ok(());
    }
    debug_assert!(graphs.iter().all(|g| g.n() == n));
    let mut cuts = vec![0.0; graphs.len()];
    let mut sums = vec![0.0; weights.len()];
    let mut mask = 0u64;
    let total = 1u64 << (n - 1);
    for t in 1..total {
        let v = t.trailing_zeros() as usize;
        let bit = 1u64 << v;
        let entering = mask & bit == 0;
        for (g, cut) in graphs.iter().zip(cuts.iter_mut()) {
            let mut delta = 0.0;
            for &(u, w) in g.neighbors(v) {
                if mask & (1 << u) != 0 {
                    delta -= w;
                } else {
                    delta += w;
                }
            }
            if entering {
                *cut += delta;
            } else {
                *cut -= delta;
            }
        }
        for (wv, s) in weights.iter().zip(sums.iter_mut()) {
            if entering {
                *s += wv[v];
            } else {
                *s -= wv[v];
            }
        }
        mask ^= bit;
        f(mask, &cuts, &sums);
    }
    Ok(())
}

/// Exact minimum conductance over all nontrivial cuts and a witness side.
/// Cuts with a zero-volume side are skipped.
pub fn min_conductance_bruteforce(g: &Graph) -> Result<(f64, VertexSet)> {
    let n = g.n();
    let vol = g.total_volume();
    let mut best: Option<(f64, u64)> = None;
    for_each_cut(n, &[g], &[g.degrees()], |mask, cut, sums| {
        let denom = sums[0].min(vol - sums[0]);
        if denom <= REL_SLACK * vol {
            return;
        }
        let phi = cut[0].max(0.0) / denom;
        if best.is_none_or(|(b, _)| phi < b) {
            best = Some((phi, mask));
        }
    })?;
    let (_, mask) = best.ok_or(Error::DegenerateCut)?;
    // recompute exactly for the witness
    let s = VertexSet::from_mask(mask);
    let phi = conductance(g, &s)?;
    Ok((phi, s))
}

/// Every cut of weight at most `bound`, as masks of the side excluding vertex
/// `n - 1`. Branch-and-bound over vertex assignments, pruning any partial
/// assignment whose minimum separating cut already exceeds `bound`. Each
/// max-flow call counts against `budget`.
pub fn cuts_with_weight_at_most(g: &Graph, bound: f64, budget: usize) -> Result<Vec<u64>> {
    let n = g.n();
    if n > MASK_LIMIT {
        return Err(Error::TooLarge {
            what: "bounded cut enumeration",
            limit: MASK_LIMIT,
            got: n,
        });
    }
    if n < 2 {
        return Ok(Vec::new());
    }
    let mut cap = vec![0.0; n * n];
    for e in g.edges() {
        if !e.is_loop() {
            cap[e.u * n + e.v] += e.w;
            cap[e.v * n + e.u] += e.w;
        }
    }
    let mut search = BoundedCutSearch {
        n,
        cap,
        bound,
        budget,
        calls: 0,
        out: Vec::new(),
    };
    let sink = 1u64 << (n - 1);
    // S = side without vertex n-1; enumerate by its smallest member i
    for i in 0..n - 1 {
        let a = 1u64 << i;
        let b = sink | ((1u64 << i) - 1);
        search.descend(a, b, i + 1)?;
    }
    Ok(search.out)
}

struct BoundedCutSearch {
    n: usize,
    cap: Vec<f64>,
    bound: f64,
    budget: usize,
    calls: usize,
    out: Vec<u64>,
}

impl BoundedCutSearch {
    fn descend(&mut self, a: u64, b: u64, next: usize) -> Result<()> {
        if next == self.n - 1 {
            // every vertex assigned (n-1 is in b)
            let w = self.cut_of(a);
            if approx_le(w, self.bound) {
                self.out.push(a);
            }
            return Ok(());
        }
        if !self.separable_within_bound(a, b)? {
            return Ok(());
        }
        let bit = 1u64 << next;
        self.descend(a | bit, b, next + 1)?;
        self.descend(a, b | bit, next + 1)
    }

    fn cut_of(&self, a: u64) -> f64 {
        let n = self.n;
        let mut w = 0.0;
        for x in 0..n {
            if a & (1 << x) == 0 {
                continue;
            }
            for y in 0..n {
                if a & (1 << y) == 0 {
                    w += self.cap[x * n + y];
                }
            }
        }
        w
    }

    /// Max-flow from `a` to `b` (Edmonds-Karp), stopping once it exceeds the bound.
    fn separable_within_bound(&mut self, a: u64, b: u64) -> Result<bool> {
        self.calls += 1;
        if self.calls > self.budget {
            return Err(Error::EnumerationBudget {
                budget: self.budget,
            });
        }
        let n = self.n;
        let mut flow = vec![0.0; n * n];
        let mut total = 0.0;
        let eps = 1e-12 * (1.0 + self.bound.abs());
        let mut parent = vec![usize::MAX; n];
        let mut queue = Vec::with_capacity(n);
        loop {
            parent.iter_mut().for_each(|p| *p = usize::MAX);
            queue.clear();
            for x in 0..n {
                if a & (1 << x) != 0 {
                    parent[x] = x;
                    queue.push(x);
                }
            }
            let mut head = 0;
            let mut reached = usize::MAX;
            'bfs: while head < queue.len() {
                let x = queue[head];
                head += 1;
                for y in 0..n {
                    if parent[y] == usize::MAX && self.cap[x * n + y] - flow[x * n + y] > eps {
                        parent[y] = x;
                        if b & (1 << y) != 0 {
                            reached = y;
                            break 'bfs;
                        }
                        queue.push(y);
                    }
                }
            }
            if reached == usize::MAX {
                return Ok(approx_le(total, self.bound));
            }
            let mut bottleneck = f64::INFINITY;
            let mut y = reached;
            while parent[y] != y {
                let x = parent[y];
                bottleneck = bottleneck.min(self.cap[x * n + y] - flow[x * n + y]);
                y = x;
            }
            let mut y = reached;
            while parent[y] != y {
                let x = parent[y];
                flow[x * n + y] += bottleneck;
                flow[y * n + x] -= bottleneck;
                y = x;
            }
            total += bottleneck;
            if !approx_le(total, self.bound) {
                return Ok(false);
            }
        }
    }
}

/// Default search-node budget for [`cuts_with_weight_at_most`].
pub const DEFAULT_ENUMERATION_BUDGET: usize = 2_000_000;

/// The minimum-conductance cut among all cuts of conductance at most `phi`,
/// or `None` when `g` is a `phi`-expander. Exact for any `n ≤ 64`: plain
/// enumeration up to [`BRUTE_FORCE_LIMIT`] vertices, weight-bounded
/// enumeration above (a `phi`-sparse cut has weight at most `phi·Vol(V)/2`).
pub fn sparsest_cut_below(g: &Graph, phi: f64) -> Result<Option<(f64, VertexSet)>> {
    if g.n() < 2 {
        return Ok(None);
    }
    if g.n() <= BRUTE_FORCE_LIMIT {
        return match min_conductance_bruteforce(g) {
            Ok((c, s)) if approx_le(c, phi) => Ok(Some((c, s))),
            Ok(_) | Err(Error::DegenerateCut) => Ok(None),
            Err(e) => Err(e),
        };
    }
    let vol = g.total_volume();
    let masks = cuts_with_weight_at_most(g, phi * vol / 2.0, DEFAULT_ENUMERATION_BUDGET)?;
    let mut best: Option<(f64, VertexSet)> = None;
    for m in masks {
        let s = VertexSet::from_mask(m);
        let c = match conductance(g, &s) {
            Ok(c) => c,
            Err(Error::DegenerateCut) => continue,
            Err(e) => return Err(e),
        };
        if approx_le(c, phi) && best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, s));
        }
    }
    Ok(best)
}

/// `Σ_{C∈P} w(C, C̄)`; each inter-cluster edge is counted twice.
pub fn intercluster_volume(g: &Graph, p: &Partition) -> Result<f64> {
    if p.n() != g.n() {
        return Err(Error::NotAPartition(format!(
            "partition covers {} vertices, graph has {}",
            p.n(),
            g.n()
        )));
    }
    let labels = p.labels();
    Ok(2.0
        * g.edges()
            .iter()
            .filter(|e| labels[e.u] != labels[e.v])
            .fold(0.0, |acc, e| acc + e.w))
}
