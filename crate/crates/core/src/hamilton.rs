//! Powers of Hamilton cycles: blueprints, ξ-good bijections, completion graphs,
//! edge-count bounds and perturbed-graph trials.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::Range;

use crate::bitset::BitSet;
use crate::blowup::{embed_with, EmbedOptions, ParamSet, TargetSpec};
use crate::classes::ClassSystem;
use crate::error::{Error, Result, Stage};
use crate::graph::{sample_gnp, Graph};
use crate::reduced::RefinedSystem;
use crate::rng::RngState;
use crate::spreadstat::{SpreadReport, SpreadTally};

/// Uniform draws tried before the exact conditional sampler takes over.
pub const REJECTION_BUDGET: usize = 10_000;

/// Largest subgraph order [`check_claim_count_edge`] enumerates.
pub const MAX_CLAIM_ORDER: usize = 12;

/// Symmetric cyclic distance on `[n]`.
pub fn cyclic_distance(n: usize, i: usize, j: usize) -> usize {
    let d = (j + n - i) % n;
    d.min(n - d)
}

/// A 0/1 labelling of `[n]` split into one consecutive segment per star.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blueprint {
    pub n: usize,
    pub k: usize,
    pub labels: Vec<u8>,
    pub segments: Vec<Range<usize>>,
}

impl Blueprint {
    /// Lays out segments of the given lengths and 1-counts: a leading 1, then
    /// 1s every `k` positions, or evenly spread when that does not fit before
    /// the trailing `k−1` zeros.
    pub fn from_counts(lengths: &[usize], ones: &[usize], k: usize) -> Result<Blueprint> {
        if k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        if lengths.len() != ones.len() {
            return Err(Error::Domain("one 1-count per segment required".into()));
        }
        let mut labels = Vec::new();
        let mut segments = Vec::new();
        for (s, (&len, &o)) in lengths.iter().zip(ones).enumerate() {
            let usable = len.saturating_sub(k - 1);
            if o == 0 || o > usable {
                return Err(Error::Infeasible(format!(
                    "segment {s}: {o} ones do not fit a segment of length {len} for k={k}"
                )));
            }
            let start = labels.len();
            let mut seg = vec![0u8; len];
            if (o - 1) * k < usable {
                (0..o).for_each(|i| seg[i * k] = 1);
            } else {
                (0..o).for_each(|i| seg[i * usable / o] = 1);
            }
            labels.extend(seg);
            segments.push(start..start + len);
        }
        let bp = Blueprint { n: labels.len(), k, labels, segments };
        bp.check().map_err(Error::Infeasible)?;
        Ok(bp)
    }

    /// Segment index of every position.
    pub fn segment_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (s, seg) in self.segments.iter().enumerate() {
            seg.clone().for_each(|i| out[i] = s);
        }
        out
    }

    pub fn ones(&self, s: usize) -> Vec<usize> {
        self.segments[s].clone().filter(|&i| self.labels[i] == 1).collect()
    }

    /// The four labelling rules. Spacing of consecutive 1s is checked inside
    /// each segment.
    pub fn check(&self) -> std::result::Result<(), String> {
        let (n, k) = (self.n, self.k);
        if self.labels.len() != n {
            return Err(format!("{} labels for n = {n}", self.labels.len()));
        }
        if self.labels.iter().any(|&l| l > 1) {
            return Err("labels must be 0 or 1".into());
        }
        let mut next = 0;
        for (s, seg) in self.segments.iter().enumerate() {
            if seg.start != next || seg.end <= seg.start {
                return Err(format!("segment {s} does not continue the partition of [n]"));
            }
            next = seg.end;
            if self.labels[seg.start] != 1 {
                return Err(format!("segment {s} does not start with a 1"));
            }
            if seg.len() < k || self.labels[seg.end + 1 - k..seg.end].iter().any(|&l| l != 0) {
                return Err(format!("segment {s} does not end with {} zeros", k - 1));
            }
            let ones = self.ones(s);
            if let Some(w) = ones.windows(2).find(|w| w[1] - w[0] > k) {
                return Err(format!("segment {s}: consecutive 1s at {} and {} are more than {k} apart", w[0], w[1]));
            }
        }
        if next != n {
            return Err("segments do not cover [n]".into());
        }
        for i in (0..n).filter(|&i| self.labels[i] == 1) {
            if !(1..=k.min(n / 2)).any(|d| self.labels[(i + d) % n] == 0 || self.labels[(i + n - d) % n] == 0) {
                return Err(format!("position {i} has no 0 within distance {k}"));
            }
        }
        Ok(())
    }
}

/// Exceptional vertices `A_S` of every star, via the leaf-part assignment.
pub fn star_exceptional(refined: &RefinedSystem) -> Result<Vec<Vec<usize>>> {
    let mut star_of_leaf = BTreeMap::new();
    for (s, st) in refined.stars.iter().enumerate() {
        st.leaves.iter().for_each(|&l| {
            star_of_leaf.insert(l, s);
        });
    }
    let mut out = vec![Vec::new(); refined.stars.len()];
    for &v in &refined.exceptional {
        let part = refined
            .assignment
            .get(&v)
            .ok_or_else(|| Error::Precondition(format!("exceptional vertex {v} has no assigned part")))?;
        let s = star_of_leaf
            .get(part)
            .ok_or_else(|| Error::Precondition(format!("vertex {v} is assigned to part {part}, not a leaf part")))?;
        out[*s].push(v);
    }
    Ok(out)
}

/// Blueprint with `|I_S| = |V_S ∪ A_S|` and `|A_S ∪ Z_S|` ones per segment.
pub fn build_blueprint(refined: &RefinedSystem, k: usize) -> Result<Blueprint> {
    if refined.k != k {
        return Err(Error::Precondition(format!("refined system has k = {}, expected {k}", refined.k)));
    }
    let t = refined.part_size();
    let a = star_exceptional(refined)?;
    let lengths: Vec<usize> = a.iter().map(|a| (k + 1) * t + a.len()).collect();
    let ones: Vec<usize> = a.iter().map(|a| t + a.len()).collect();
    Blueprint::from_counts(&lengths, &ones, k)
}

/// A ξ-good bijection `φ : [n] → V(G)` with the chosen `A′_S` positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XiGoodEmbedding {
    pub phi: Vec<usize>,
    pub a_prime: Vec<Vec<usize>>,
}

/// Independent check of the four ξ-good rules.
pub fn check_xi_good(
    host: &Graph,
    refined: &RefinedSystem,
    bp: &Blueprint,
    phi: &[usize],
) -> std::result::Result<(), String> {
    let n = bp.n;
    if phi.len() != n || host.n() != n {
        return Err(format!("φ has {} entries for n = {n} and host order {}", phi.len(), host.n()));
    }
    let mut seen = vec![false; n];
    for &v in phi {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(format!("φ is not a bijection (image {v})"));
        }
    }
    let a = star_exceptional(refined).map_err(|e| e.to_string())?;
    let is_exceptional = BitSet::from_indices(n, refined.exceptional.iter().copied());
    for (s, (seg, st)) in bp.segments.iter().zip(&refined.stars).enumerate() {
        let mut want: Vec<usize> = a[s].clone();
        st.leaves.iter().chain([&st.center]).for_each(|&p| want.extend(&refined.parts[p]));
        want.sort_unstable();
        let mut got: Vec<usize> = phi[seg.clone()].to_vec();
        got.sort_unstable();
        if got != want {
            return Err(format!("φ(I_{s}) differs from A_S ∪ V_S"));
        }
        let center = BitSet::from_indices(n, refined.parts[st.center].iter().copied());
        for i in seg.clone() {
            let one = center.contains(phi[i]) || is_exceptional.contains(phi[i]);
            if one != (bp.labels[i] == 1) {
                return Err(format!("position {i} has label {} but image {}", bp.labels[i], phi[i]));
            }
        }
        for i in seg.clone() {
            for j in seg.clone().filter(|&j| j > i && cyclic_distance(n, i, j) <= bp.k) {
                if bp.labels[i] != bp.labels[j] && !host.has_edge(phi[i], phi[j]) {
                    return Err(format!("positions {i}, {j} are within distance {} but not adjacent", bp.k));
                }
            }
        }
    }
    let pos: Vec<usize> = (0..n).filter(|&i| is_exceptional.contains(phi[i])).collect();
    for (x, &i) in pos.iter().enumerate() {
        if let Some(&j) = pos[x + 1..].iter().find(|&&j| cyclic_distance(n, i, j) <= 2 * bp.k) {
            return Err(format!("exceptional images at positions {i} and {j} are within distance {}", 2 * bp.k));
        }
    }
    Ok(())
}

/// `H̄_φ` (cross-label pairs within a segment) and `H_φ = E(C^k) ∖ H̄_φ`, both
/// on host vertex labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionGraph {
    pub hbar: Vec<(usize, usize)>,
    pub graph: Graph,
}

/// Edges `{φ(i), φ(i+δ)}` of the `k`-th power of the cycle, `1 ≤ δ ≤ k`.
fn power_edges(phi: &[usize], k: usize) -> Vec<(usize, usize)> {
    let n = phi.len();
    let mut out: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (1..=k.min(n / 2)).map(move |d| (i, (i + d) % n)))
        .map(|(i, j)| (phi[i].min(phi[j]), phi[i].max(phi[j])))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Builds the completion graph, asserting the partition identity and that
/// every `H̄_φ` edge lies in the host.
pub fn completion_graph(host: &Graph, phi: &[usize], bp: &Blueprint) -> CompletionGraph {
    let n = bp.n;
    let seg = bp.segment_of();
    let mut preimage = vec![0; n];
    phi.iter().enumerate().for_each(|(i, &v)| preimage[v] = i);
    let mut graph = Graph::empty(n);
    let mut hbar = Vec::new();
    let all = power_edges(phi, bp.k);
    for &(u, v) in &all {
        let (i, j) = (preimage[u], preimage[v]);
        if seg[i] == seg[j] && bp.labels[i] != bp.labels[j] {
            assert!(host.has_edge(u, v), "H̄_φ edge ({u},{v}) is not a host edge");
            hbar.push((u, v));
        } else {
            graph.add_edge(u, v);
        }
    }
    assert_eq!(hbar.len() + graph.edge_count(), all.len(), "H̄_φ and H_φ must partition E(C^k)");
    assert!(hbar.iter().all(|&(u, v)| !graph.has_edge(u, v)), "H̄_φ and H_φ overlap");
    CompletionGraph { hbar, graph }
}

/// True iff every `{φ(i), φ(i+δ mod n)}` with `1 ≤ δ ≤ k` is a host edge.
pub fn verify_power_ham(host: &Graph, phi: &[usize], k: usize) -> bool {
    let n = phi.len();
    if n != host.n() {
        return false;
    }
    let mut seen = vec![false; n];
    if phi.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
        return false;
    }
    (0..n).all(|i| {
        (1..=k).all(|d| {
            let j = (i + d) % n;
            j == i || host.has_edge(phi[i], phi[j])
        })
    })
}

/// `⌊½(2k + (v−1)·2(k−1) − 2·Σ_{1≤i≤min(⌊v/2⌋,k)} (k−i))⌋`.
pub fn count_edges_bound(v: usize, k: usize) -> Result<usize> {
    if v == 0 {
        return Err(Error::Domain("v(T) must be at least 1".into()));
    }
    if k < 3 {
        return Err(Error::Domain(format!("the bound is stated for k ≥ 3, got {k}")));
    }
    let sum: usize = (1..=(v / 2).min(k)).map(|i| k - i).sum();
    Ok((2 * k + (v - 1) * 2 * (k - 1) - 2 * sum) / 2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimViolation {
    pub vertices: Vec<usize>,
    pub edges: usize,
    /// `"formula"` or `"relaxed"`.
    pub bound: &'static str,
    pub limit: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimReport {
    pub k: usize,
    pub vmax: usize,
    /// Largest edge count of a connected subgraph per order `v` (index `v`).
    pub max_edges: Vec<Option<usize>>,
    pub formula_bound: Vec<usize>,
    /// `(v−1)(k−1)`, the `γ = 0` form of the claim.
    pub relaxed_bound: Vec<usize>,
    /// `formula_bound[v] − ((v−1)(k−1))`; positive means the formula is looser.
    pub formula_slack: Vec<i64>,
    pub formula_ok: bool,
    pub relaxed_ok: bool,
    pub sets_enumerated: u64,
    /// First violations found (at most [`MAX_REPORTED_VIOLATIONS`]).
    pub violations: Vec<ClaimViolation>,
}

pub const MAX_REPORTED_VIOLATIONS: usize = 20;

struct Enumerator<'a> {
    g: &'a Graph,
    vmax: usize,
    best: Vec<Option<usize>>,
    formula: Vec<usize>,
    relaxed: Vec<usize>,
    count: u64,
    violations: Vec<ClaimViolation>,
    formula_ok: bool,
    relaxed_ok: bool,
}

impl Enumerator<'_> {
    fn record(&mut self, sub: &[usize], edges: usize) {
        let v = sub.len();
        self.count += 1;
        self.best[v] = Some(self.best[v].map_or(edges, |b| b.max(edges)));
        for (name, limit) in [("formula", self.formula[v]), ("relaxed", self.relaxed[v])] {
            if edges > limit {
                if name == "formula" {
                    self.formula_ok = false;
                } else {
                    self.relaxed_ok = false;
                }
                if self.violations.len() < MAX_REPORTED_VIOLATIONS {
                    let mut vertices = sub.to_vec();
                    vertices.sort_unstable();
                    self.violations.push(ClaimViolation { vertices, edges, bound: name, limit });
                }
            }
        }
    }

    /// ESU expansion: every connected vertex set is visited once, from its
    /// smallest vertex.
    fn extend(&mut self, sub: &mut Vec<usize>, edges: usize, ext: Vec<usize>, closed: &BitSet, root: usize) {
        self.record(sub, edges);
        if sub.len() == self.vmax {
            return;
        }
        let mut ext = ext;
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            let mut closed2 = closed.clone();
            for u in self.g.neighbors(w).iter() {
                if u > root && !closed.contains(u) {
                    next.push(u);
                    closed2.insert(u);
                }
            }
            let added = sub.iter().filter(|&&x| self.g.has_edge(x, w)).count();
            sub.push(w);
            self.extend(sub, edges + added, next, &closed2, root);
            sub.pop();
        }
    }
}

/// Enumerates every connected subgraph of `h` with at most `vmax` vertices
/// (induced subgraphs suffice for the edge maximum) and checks both bounds.
pub fn check_claim_count_edge(h: &Graph, k: usize, vmax: usize) -> Result<ClaimReport> {
    if vmax > MAX_CLAIM_ORDER {
        return Err(Error::Capability(format!("vmax = {vmax} exceeds {MAX_CLAIM_ORDER}")));
    }
    let formula: Vec<usize> =
        (0..=vmax).map(|v| if v == 0 { Ok(0) } else { count_edges_bound(v, k) }).collect::<Result<_>>()?;
    let relaxed: Vec<usize> = (0..=vmax).map(|v| v.saturating_sub(1) * (k - 1)).collect();
    let mut e = Enumerator {
        g: h,
        vmax,
        best: vec![None; vmax + 1],
        formula: formula.clone(),
        relaxed: relaxed.clone(),
        count: 0,
        violations: Vec::new(),
        formula_ok: true,
        relaxed_ok: true,
    };
    if vmax > 0 {
        for root in 0..h.n() {
            let mut closed = h.neighbors(root).clone();
            closed.insert(root);
            let ext: Vec<usize> = h.neighbors(root).iter().filter(|&u| u > root).collect();
            let mut closed_hi = BitSet::new(h.n());
            closed.iter().filter(|&u| u >= root).for_each(|u| closed_hi.insert(u));
            e.extend(&mut vec![root], 0, ext, &closed_hi, root);
        }
    }
    let formula_slack = (0..=vmax).map(|v| formula[v] as i64 - relaxed[v] as i64).collect();
    Ok(ClaimReport {
        k,
        vmax,
        max_edges: e.best,
        formula_bound: formula,
        relaxed_bound: relaxed,
        formula_slack,
        formula_ok: e.formula_ok,
        relaxed_ok: e.relaxed_ok,
        sets_enumerated: e.count,
        violations: e.violations,
    })
}

/// Cyclically consecutive sorted positions all more than `gap` apart.
fn separated(pos: &[usize], gap: usize, n: usize) -> bool {
    pos.windows(2).all(|w| cyclic_distance(n, w[0], w[1]) > gap)
        && (pos.len() < 2 || cyclic_distance(n, pos[0], pos[pos.len() - 1]) > gap)
}

/// Uniform `a`-subset of the sorted positions `ones` with pairwise cyclic
/// distance above `gap`: rejection first, then exact conditional sampling
/// from subset counts.
pub fn sample_separated(ones: &[usize], a: usize, gap: usize, n: usize, rng: RngState) -> Result<Vec<usize>> {
    if a == 0 {
        return Ok(Vec::new());
    }
    if a > ones.len() {
        return Err(Error::embedding(
            Stage::XiGood,
            format!("{a} exceptional vertices but only {} 1-positions", ones.len()),
        ));
    }
    let mut r = rng.rng();
    for _ in 0..REJECTION_BUDGET {
        let mut pick: Vec<usize> = index::sample(&mut r, ones.len(), a).into_iter().map(|i| ones[i]).collect();
        pick.sort_unstable();
        if separated(&pick, gap, n) {
            return Ok(pick);
        }
    }
    conditional_separated(ones, a, gap, n, &mut r)
}

/// Exact left-to-right sampling from subset counts (`count[i][c]`: c-subsets
/// of `ones[i..]` with consecutive gaps above `gap`), conditioned on the
/// wrap-around pair by rejection.
fn conditional_separated(ones: &[usize], a: usize, gap: usize, n: usize, r: &mut impl Rng) -> Result<Vec<usize>> {
    let len = ones.len();
    let next: Vec<usize> = (0..len).map(|i| (i + 1..len).find(|&j| ones[j] - ones[i] > gap).unwrap_or(len)).collect();
    let mut count = vec![vec![0u128; a + 1]; len + 1];
    count[len][0] = 1;
    for i in (0..len).rev() {
        count[i][0] = 1;
        for c in 1..=a {
            count[i][c] = count[i + 1][c]
                .checked_add(count[next[i]][c - 1])
                .ok_or_else(|| Error::Capability("admissible-subset count overflows u128".into()))?;
        }
    }
    if count[0][a] == 0 {
        return Err(Error::embedding(Stage::XiGood, format!("no {a} 1-positions are pairwise more than {gap} apart")));
    }
    for _ in 0..REJECTION_BUDGET {
        let (mut i, mut c, mut pick) = (0, a, Vec::with_capacity(a));
        while c > 0 {
            if r.gen_range(0..count[i][c]) < count[next[i]][c - 1] {
                pick.push(ones[i]);
                i = next[i];
                c -= 1;
            } else {
                i += 1;
            }
        }
        if separated(&pick, gap, n) {
            return Ok(pick);
        }
    }
    Err(Error::embedding(Stage::XiGood, "rejection budget exhausted for A′_S"))
}

/// Samples ξ-good bijections for a fixed host, refined system and blueprint.
/// The blow-up runs on the star pairs of the host with parts as classes.
#[derive(Debug, Clone)]
pub struct XiGoodSampler {
    host: Graph,
    refined: RefinedSystem,
    blueprint: Blueprint,
    params: ParamSet,
    options: EmbedOptions,
    system: ClassSystem,
    a_sets: Vec<Vec<usize>>,
}

impl XiGoodSampler {
    pub fn new(
        host: &Graph,
        refined: &RefinedSystem,
        blueprint: &Blueprint,
        params: ParamSet,
        options: EmbedOptions,
    ) -> Result<Self> {
        blueprint.check().map_err(Error::Precondition)?;
        if blueprint.n != host.n() || blueprint.segments.len() != refined.stars.len() {
            return Err(Error::Precondition("blueprint does not match the host and star count".into()));
        }
        let a_sets = star_exceptional(refined)?;
        let t = refined.part_size();
        for (s, seg) in blueprint.segments.iter().enumerate() {
            let ones = blueprint.ones(s).len();
            if seg.len() != (refined.k + 1) * t + a_sets[s].len() || ones != t + a_sets[s].len() {
                return Err(Error::Precondition(format!("segment {s} sizes disagree with the refined system")));
            }
        }
        let mut star_host = Graph::empty(host.n());
        let mut reduced = Vec::new();
        for st in &refined.stars {
            for &l in &st.leaves {
                reduced.push((st.center, l));
                for &u in &refined.parts[st.center] {
                    for &v in refined.parts[l].iter().filter(|&&v| host.has_edge(u, v)) {
                        star_host.add_edge(u, v);
                    }
                }
            }
        }
        let system = ClassSystem::new(star_host, refined.parts.clone(), reduced)?;
        Ok(XiGoodSampler {
            host: host.clone(),
            refined: refined.clone(),
            blueprint: blueprint.clone(),
            params,
            options,
            system,
            a_sets,
        })
    }

    pub fn host(&self) -> &Graph {
        &self.host
    }

    pub fn refined(&self) -> &RefinedSystem {
        &self.refined
    }

    pub fn blueprint(&self) -> &Blueprint {
        &self.blueprint
    }

    /// The class system the blow-up runs on.
    pub fn system(&self) -> &ClassSystem {
        &self.system
    }

    /// Draws `A′_S`, the bijection `A′_S → A_S`, builds `H` on the remaining
    /// positions with its homomorphism and restrictions, and embeds it.
    pub fn sample(&self, rng: RngState) -> Result<XiGoodEmbedding> {
        let bp = &self.blueprint;
        let (n, k) = (bp.n, bp.k);
        let seg_of = bp.segment_of();
        let mut phi = vec![usize::MAX; n];
        let mut a_prime = Vec::with_capacity(bp.segments.len());
        for s in 0..bp.segments.len() {
            let chosen =
                sample_separated(&bp.ones(s), self.a_sets[s].len(), 2 * k, n, rng.split("a-prime").child(s as u64))?;
            let mut targets = self.a_sets[s].clone();
            targets.shuffle(&mut rng.split("a-bijection").child(s as u64).rng());
            chosen.iter().zip(&targets).for_each(|(&i, &v)| phi[i] = v);
            a_prime.push(chosen);
        }
        let positions: Vec<usize> = (0..n).filter(|&i| phi[i] == usize::MAX).collect();
        let mut vertex_of = vec![usize::MAX; n];
        positions.iter().enumerate().for_each(|(x, &i)| vertex_of[i] = x);
        let mut h = Graph::empty(positions.len());
        for &i in &positions {
            for d in 1..=k.min(n / 2) {
                let j = (i + d) % n;
                if vertex_of[j] != usize::MAX && seg_of[i] == seg_of[j] && bp.labels[i] != bp.labels[j] {
                    h.add_edge(vertex_of[i], vertex_of[j]);
                }
            }
        }
        let t = self.refined.part_size();
        let mut hom = vec![usize::MAX; positions.len()];
        let mut restrictions: Vec<(usize, Vec<usize>)> = Vec::new();
        for (s, st) in self.refined.stars.iter().enumerate() {
            let mut room: BTreeMap<usize, usize> = st.leaves.iter().map(|&l| (l, t)).collect();
            let mut free = Vec::new();
            let mut centers = 0;
            for i in bp.segments[s].clone().filter(|&i| vertex_of[i] != usize::MAX) {
                let x = vertex_of[i];
                if bp.labels[i] == 1 {
                    hom[x] = st.center;
                    centers += 1;
                    continue;
                }
                let Some(&j) = a_prime[s].iter().find(|&&j| cyclic_distance(n, i, j) <= k) else {
                    free.push(x);
                    continue;
                };
                let part = self.refined.assignment[&phi[j]];
                let slot = room.get_mut(&part).expect("assigned part is a leaf of this star");
                if *slot == 0 {
                    return Err(Error::embedding(
                        Stage::XiGood,
                        format!("homomorphism balancing: part {part} needs more than {t} restricted vertices"),
                    ));
                }
                *slot -= 1;
                hom[x] = part;
                let allowed: Vec<usize> =
                    self.refined.parts[part].iter().copied().filter(|&v| self.host.has_edge(phi[j], v)).collect();
                restrictions.push((x, allowed));
            }
            if centers != t {
                return Err(Error::embedding(
                    Stage::XiGood,
                    format!("segment {s} keeps {centers} 1-positions, expected {t}"),
                ));
            }
            let mut leaves = st.leaves.iter().cycle();
            for x in free {
                let part = *leaves.by_ref().find(|l| room[l] > 0).expect("leaf capacity matches the 0-count");
                *room.get_mut(&part).unwrap() -= 1;
                hom[x] = part;
            }
        }
        let spec = restrictions.into_iter().fold(TargetSpec::new(h, hom), |sp, (x, a)| sp.with_restriction(x, a));
        let emb = embed_with(&spec, &self.system, &self.params, self.options, rng.split("embed"))?;
        positions.iter().enumerate().for_each(|(x, &i)| phi[i] = emb.phi[x]);
        Ok(XiGoodEmbedding { phi, a_prime })
    }
}

/// Empirical law of `|E(probe) ∩ E(H_φ)|` and of nested probe containment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub failures: u64,
    pub probe: Vec<(usize, usize)>,
    /// `freq_exact[t]`: fraction with exactly `t` probe edges in `H_φ`.
    pub freq_exact: Vec<f64>,
    /// `freq_nested[t]`: fraction containing the first `t` probe edges.
    pub freq_nested: Vec<f64>,
    pub log_freq_nested: Vec<Option<f64>>,
    /// `log(1/n)/(k−1)`, the per-edge slope of `(C′/n)^{t/(k−1)}` at `C′ = 1`.
    pub reference_slope: f64,
    /// True when some requested `t` had zero hits.
    pub partial: bool,
}

/// Draws `samples` fresh ξ-good bijections (in parallel, one child stream
/// each) and tallies how many probe edges land in `H_φ`.
pub fn estimate_edge_spread(
    sampler: &XiGoodSampler,
    probe: &[(usize, usize)],
    tmax: usize,
    samples: usize,
    rng: RngState,
) -> Result<DecayReport> {
    if tmax > probe.len() {
        return Err(Error::Domain(format!("tmax = {tmax} exceeds the probe size {}", probe.len())));
    }
    if samples == 0 {
        return Err(Error::Domain("at least one sample required".into()));
    }
    let bp = sampler.blueprint();
    let (exact, nested, failures) = (0..samples as u64)
        .into_par_iter()
        .map(|s| match sampler.sample(rng.child(s)) {
            Ok(e) => {
                let g = completion_graph(sampler.host(), &e.phi, bp).graph;
                let hits: Vec<bool> = probe.iter().map(|&(u, v)| g.has_edge(u, v)).collect();
                let mut ex = vec![0u64; probe.len() + 1];
                ex[hits.iter().filter(|&&h| h).count()] = 1;
                let prefix = hits.iter().take_while(|&&h| h).count();
                let ne: Vec<u64> = (0..=tmax).map(|t| u64::from(prefix >= t)).collect();
                (ex, ne, 0u64)
            }
            Err(_) => (vec![0; probe.len() + 1], vec![0; tmax + 1], 1),
        })
        .reduce(
            || (vec![0; probe.len() + 1], vec![0; tmax + 1], 0),
            |a, b| (add(a.0, &b.0), add(a.1, &b.1), a.2 + b.2),
        );
    let ok = samples as u64 - failures;
    if ok == 0 {
        return Err(Error::embedding(Stage::XiGood, format!("all {samples} ξ-good draws failed")));
    }
    let freq = |c: &u64| *c as f64 / ok as f64;
    let freq_nested: Vec<f64> = nested.iter().map(freq).collect();
    Ok(DecayReport {
        n: bp.n,
        k: bp.k,
        samples,
        failures,
        probe: probe.to_vec(),
        freq_exact: exact[..=tmax].iter().map(freq).collect(),
        log_freq_nested: freq_nested.iter().map(|&f| (f > 0.0).then(|| f.ln())).collect(),
        partial: freq_nested.contains(&0.0),
        freq_nested,
        reference_slope: (1.0 / bp.n as f64).ln() / (bp.k as f64 - 1.0),
    })
}

fn add(mut a: Vec<u64>, b: &[u64]) -> Vec<u64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

/// Outcome of one perturbed-graph trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub p: f64,
    pub success: bool,
    /// Index (1-based) of the first successful draw, else the draws made.
    pub tries_used: usize,
    /// Per-draw containment results, in order.
    pub per_try: Vec<bool>,
    pub failures: u64,
    /// Largest single-position pin frequency over the drawn bijections.
    pub max_pin_estimate: f64,
}

/// Samples `G(n, p)` once, then draws up to `phi_tries` independent ξ-good
/// bijections and stops at the first whose `k`-th power cycle lies in
/// `G ∪ G(n, p)`. Finitely many draws only lower-bound the event that some
/// `H_φ` in the support of the law is covered.
pub fn perturbed_trial(sampler: &XiGoodSampler, p: f64, phi_tries: usize, rng: RngState) -> Result<TrialOutcome> {
    let host = sampler.host();
    let random = sample_gnp(host.n(), p, rng.split("gnp"))?;
    let mut union = host.clone();
    random.edges().for_each(|(u, v)| union.add_edge(u, v));
    let mut tally = SpreadTally::new(Vec::new());
    let mut per_try = Vec::new();
    let mut first_error = None;
    let draws = rng.split("phi");
    for t in 0..phi_tries {
        match sampler.sample(draws.child(t as u64)) {
            Ok(e) => {
                tally.record(&e.phi);
                let hit = verify_power_ham(&union, &e.phi, sampler.blueprint().k);
                per_try.push(hit);
                if hit {
                    break;
                }
            }
            Err(err) => {
                tally.record_failure();
                per_try.push(false);
                first_error.get_or_insert(err);
            }
        }
    }
    if tally.successes == 0 {
        if let Some(err) = first_error {
            return Err(Error::embedding(
                Stage::XiGood,
                format!("all {} ξ-good draws failed; first: {err}", tally.failures),
            ));
        }
    }
    let success = per_try.last() == Some(&true);
    Ok(TrialOutcome {
        p,
        success,
        tries_used: per_try.len(),
        per_try,
        failures: tally.failures,
        max_pin_estimate: tally.report(host.n() as f64).k1_max_freq,
    })
}

/// Single-position pin statistics over stored bijections.
pub fn pin_report(samples: &[Vec<usize>]) -> SpreadReport {
    let n = samples.first().map_or(0, Vec::len);
    samples
        .iter()
        .fold(SpreadTally::new(Vec::new()), |mut t, s| {
            t.record(s);
            t
        })
        .report(n as f64)
}

/// Knobs of the pipeline from a [`HamiltonHost`] to a [`XiGoodSampler`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonConfig {
    pub k: usize,
    pub alpha: f64,
    /// `δ′`: exceptional vertices need `δ′n` leaf-part neighbours and
    /// `δ′|V_x|/2` inside their assigned part.
    pub delta_p: f64,
    /// `ε` and the constant of the per-part cap `C·ε|V_x|/δ′`.
    pub eps: f64,
    pub cap_constant: f64,
    /// Blow-up constants; `d = 1` since star pairs are complete.
    pub params: ParamSet,
}

impl HamiltonConfig {
    /// `δ′ = α`, `ε = 0.05`, `C = 2`; the blow-up chain tops out at `δ₀ = 0.02`
    /// with `α_W = δ′/2` and `Δ = 2k`.
    pub fn new(k: usize, alpha: f64) -> Self {
        HamiltonConfig {
            k,
            alpha,
            delta_p: alpha,
            eps: 0.05,
            cap_constant: 2.0,
            params: ParamSet::scaled_chain(0.02, 1.0, alpha / 2.0, 2 * k),
        }
    }
}

/// Star partition of the template, refinement to `K_{1,k}` stars,
/// exceptional assignment and blueprint.
pub fn prepare_hamilton(
    host: &crate::instances::HamiltonHost,
    cfg: &HamiltonConfig,
    rng: RngState,
) -> Result<(Graph, RefinedSystem, Blueprint)> {
    let g = host.graph()?;
    let template = host.template()?;
    let partition = crate::reduced::star_partition(&template, cfg.k, cfg.alpha, rng.split("stars"))?;
    let mut refined =
        crate::reduced::refine_to_k_stars(&partition, &host.classes, &host.exceptional, cfg.k, rng.split("refine"))?;
    refined.assignment = crate::reduced::assign_exceptional(&g, &refined, cfg.delta_p, cfg.eps, cfg.cap_constant)?;
    let bp = build_blueprint(&refined, cfg.k)?;
    Ok((g, refined, bp))
}

/// [`prepare_hamilton`] followed by [`XiGoodSampler::new`] with the
/// hypothesis check disabled (star pairs are complete).
pub fn hamilton_sampler(
    host: &crate::instances::HamiltonHost,
    cfg: &HamiltonConfig,
    rng: RngState,
) -> Result<XiGoodSampler> {
    let (g, refined, bp) = prepare_hamilton(host, cfg, rng)?;
    let options = EmbedOptions { hypothesis: None, ..EmbedOptions::default() };
    XiGoodSampler::new(&g, &refined, &bp, cfg.params, options)
}
