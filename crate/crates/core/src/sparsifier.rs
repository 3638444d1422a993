//! Degree-based edge sampling and exhaustive cut-sparsifier checks.
//!
//! Edge `{u,v}` of weight `w` is kept independently with probability
//! `p_e = min(1, Υ·(1/deg_u + 1/deg_v))` and reweighted to `w / p_e`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{approx_le, for_each_cut, induce_with_loops, Graph, Partition, VertexSet};
use crate::prf::{derive, prf, unit_f64};

const TAG_SAMPLE: u64 = 0x5a;

/// How `Υ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpsilonRule {
    /// `6(C+2)/(δε) · 2·log2(n) · ln(n)`.
    Formula,
    /// `c / (δε)`.
    Scaled(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsifierParams {
    pub delta: f64,
    pub epsilon: f64,
    /// Failure exponent `C`.
    pub c: f64,
    pub upsilon: UpsilonRule,
    pub seed: u64,
}

impl SparsifierParams {
    pub fn new(delta: f64, epsilon: f64, seed: u64) -> Self {
        SparsifierParams {
            delta,
            epsilon,
            c: 1.0,
            upsilon: UpsilonRule::Formula,
            seed,
        }
    }

    pub fn with_scale(mut self, c: f64) -> Self {
        self.upsilon = UpsilonRule::Scaled(c);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in [0,1), got {}", self.delta));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in [0,1), got {}", self.epsilon));
        }
        if !(self.c > 0.0) {
            return bad(format!("failure exponent must be positive, got {}", self.c));
        }
        if let UpsilonRule::Scaled(s) = self.upsilon {
            if !(s > 0.0) {
                return bad(format!("upsilon scale must be positive, got {s}"));
            }
        }
        Ok(())
    }

    /// `Υ` for an `n`-vertex graph. Infinite when `δε = 0`.
    pub fn upsilon(&self, n: usize) -> f64 {
        match self.upsilon {
            UpsilonRule::Formula => upsilon(n, self.epsilon, self.delta, self.c),
            UpsilonRule::Scaled(s) => s / (self.delta * self.epsilon),
        }
    }
}

/// `6(C+2)/(δε) · 2·log2(n) · ln(n)`.
pub fn upsilon(n: usize, epsilon: f64, delta: f64, c: f64) -> f64 {
    let n = n.max(2) as f64;
    6.0 * (c + 2.0) / (delta * epsilon) * 2.0 * n.log2() * n.ln()
}

/// `min(1, Υ·(1/deg_u + 1/deg_v))`.
pub fn edge_probability(deg_u: f64, deg_v: f64, upsilon: f64) -> Result<f64> {
    if !(deg_u > 0.0 && deg_v > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "edge probability needs positive degrees, got {deg_u} and {deg_v}"
        )));
    }
    Ok((upsilon * (1.0 / deg_u + 1.0 / deg_v)).min(1.0))
}

/// One draw from the sampling distribution. Edge `i` (in `g.edges()` order) is
/// kept iff a keyed uniform for `i` falls below `p_e`.
pub fn sample(g: &Graph, params: &SparsifierParams) -> Result<Graph> {
    params.validate()?;
    let ups = params.upsilon(g.n());
    let key = derive(params.seed, TAG_SAMPLE, 0);
    let mut h = Graph::new(g.n());
    for (i, e) in g.edges().iter().enumerate() {
        let p = edge_probability(g.degree(e.u), g.degree(e.v), ups)?;
        if p >= 1.0 {
            h.add_edge(e.u, e.v, e.w)?;
        } else if unit_f64(prf(key, i as u64)) < p {
            h.add_edge(e.u, e.v, e.w / p)?;
        }
    }
    Ok(h)
}

/// Outcome of checking every cut against both sparsifier inequalities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutCheck {
    pub holds: bool,
    /// Largest violation of either inequality, divided by `max(1, Vol_G(S))`
    /// for the smaller side. Non-positive when the check holds.
    pub worst_violation: f64,
    pub worst_cut: Option<VertexSet>,
    pub cuts_checked: usize,
}

impl CutCheck {
    fn vacuous() -> Self {
        CutCheck {
            holds: true,
            worst_violation: f64::NEG_INFINITY,
            worst_cut: None,
            cuts_checked: 0,
        }
    }
}

/// Whether `H` is a `(δ, ε)`-cut sparsifier of `G`: for every nontrivial `S`,
/// `(1-δ)w_G(S) - ε·Vol_G(S) ≤ w_H(S) ≤ (1+δ)w_G(S) + ε·Vol_G(S)`.
/// Both orientations of each cut are required, so the binding volume is the
/// smaller side's.
pub fn check_cut_sparsifier(g: &Graph, h: &Graph, delta: f64, epsilon: f64) -> Result<CutCheck> {
    if g.n() != h.n() {
        return Err(Error::InvalidParameter(format!(
            "graphs differ in vertex count: {} vs {}",
            g.n(),
            h.n()
        )));
    }
    let mut out = CutCheck::vacuous();
    let vol = g.total_volume();
    let mut worst_mask = None;
    for_each_cut(g.n(), &[g, h], &[g.degrees()], |mask, cuts, sums| {
        let (wg, wh) = (cuts[0].max(0.0), cuts[1].max(0.0));
        let v = sums[0].min(vol - sums[0]).max(0.0);
        let lower = (1.0 - delta) * wg - epsilon * v;
        let upper = (1.0 + delta) * wg + epsilon * v;
        let ok = approx_le(lower, wh) && approx_le(wh, upper);
        let excess = (lower - wh).max(wh - upper) / v.max(1.0);
        out.cuts_checked += 1;
        if !ok {
            out.holds = false;
        }
        if excess > out.worst_violation {
            out.worst_violation = excess;
            worst_mask = Some(mask);
        }
    })?;
    out.worst_cut = worst_mask.map(VertexSet::from_mask);
    Ok(out)
}

/// Per-cluster result of [`check_power_partition`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCheck {
    pub holds: bool,
    pub clusters: Vec<CutCheck>,
}

/// Checks `H{C}` against `G{C}` for every cluster `C` of `P`.
pub fn check_power_partition(
    g: &Graph,
    h: &Graph,
    p: &Partition,
    delta: f64,
    epsilon: f64,
) -> Result<PowerCheck> {
    if p.n() != g.n() || h.n() != g.n() {
        return Err(Error::NotAPartition(format!(
            "partition covers {} vertices, graphs have {} and {}",
            p.n(),
            g.n(),
            h.n()
        )));
    }
    let mut clusters = Vec::with_capacity(p.len());
    for c in p.clusters() {
        if c.len() < 2 {
            clusters.push(CutCheck::vacuous());
            continue;
        }
        let gc = induce_with_loops(g, c)?;
        let hc = induce_with_loops(h, c)?;
        clusters.push(check_cut_sparsifier(&gc, &hc, delta, epsilon)?);
    }
    Ok(PowerCheck {
        holds: clusters.iter().all(|c| c.holds),
        clusters,
    })
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
    fn upsilon_examples() {
        let u = upsilon(16, 0.5, 0.5, 1.0);
        assert!((u - 72.0 * 8.0 * 16f64.ln()).abs() < 1e-9);
        assert!((u - 1597.01).abs() < 0.01);
        let half = upsilon(16, 0.25, 0.5, 1.0);
        assert!((half - 2.0 * u).abs() < 1e-9 * u);
        let two = upsilon(2, 0.5, 0.5, 1.0);
        assert!((two - 6.0 * 3.0 / 0.25 * 2.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn edge_probability_examples() {
        assert_eq!(edge_probability(10.0, 10.0, 5.0).unwrap(), 1.0);
        assert_eq!(edge_probability(40.0, 40.0, 10.0).unwrap(), 0.5);
        assert!(edge_probability(20.0, 1e300, 10.0).unwrap() >= 0.5);
        assert!(edge_probability(0.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn formula_upsilon_keeps_everything() {
        let g = complete(10);
        let h = sample(&g, &SparsifierParams::new(0.5, 0.5, 3)).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn sample_is_deterministic_and_reweights() {
        let g = complete(12);
        let p = SparsifierParams::new(0.5, 0.5, 9).with_scale(0.5);
        let a = sample(&g, &p).unwrap();
        let b = sample(&g, &p).unwrap();
        assert_eq!(a, b);
        // Υ = 0.5 / 0.25 = 2, p_e = 2·(2/11)
        let pe = 4.0 / 11.0;
        assert!(a.num_edges() < g.num_edges());
        assert!(a.edges().iter().all(|e| (e.w - 1.0 / pe).abs() < 1e-12));
    }

    #[test]
    fn check_examples() {
        let g = complete(4);
        assert!(check_cut_sparsifier(&g, &g, 0.0, 0.0).unwrap().holds);
        let empty = Graph::new(4);
        let r = check_cut_sparsifier(&g, &empty, 0.1, 0.1).unwrap();
        assert!(!r.holds);
        assert!(r.worst_violation > 0.0);
        assert_eq!(r.cuts_checked, 7);
        let scaled =
            Graph::from_edges(4, g.edges().iter().map(|e| (e.u, e.v, e.w * 1.05))).unwrap();
        assert!(check_cut_sparsifier(&g, &scaled, 0.1, 0.0).unwrap().holds);
        assert!(!check_cut_sparsifier(&g, &scaled, 0.01, 0.0).unwrap().holds);
    }

    #[test]
    fn power_partition_examples() {
        let g = complete(6);
        assert!(
            check_power_partition(&g, &g, &Partition::whole(6), 0.0, 0.0)
                .unwrap()
                .holds
        );
        let empty = Graph::new(6);
        assert!(
            check_power_partition(&g, &empty, &Partition::singletons(6), 0.1, 0.1)
                .unwrap()
                .holds
        );
        assert!(
            !check_power_partition(&g, &empty, &Partition::whole(6), 0.1, 0.1)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn size_guard() {
        let g = Graph::new(23);
        assert!(matches!(
            check_cut_sparsifier(&g, &g, 0.1, 0.1),
            Err(Error::TooLarge { .. })
        ));
    }
}
