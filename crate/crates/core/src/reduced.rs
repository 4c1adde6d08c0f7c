//! Reduced-graph machinery: star partitions with at most `k` leaves, their
//! refinement to uniform `K_{1,k}` stars, and exceptional-vertex assignment.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::graph::Graph;
use crate::rng::RngState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Star {
    pub center: usize,
    pub leaves: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StarPartition {
    pub stars: Vec<Star>,
}

impl StarPartition {
    /// Disjoint cover of `V(r)` by stars with `1..=k` leaves along edges of `r`.
    pub fn validate(&self, r: &Graph, k: usize) -> std::result::Result<(), String> {
        let mut seen = vec![false; r.n()];
        for s in &self.stars {
            if s.leaves.is_empty() || s.leaves.len() > k {
                return Err(format!("star at {} has {} leaves", s.center, s.leaves.len()));
            }
            for &v in std::iter::once(&s.center).chain(&s.leaves) {
                if v >= r.n() || std::mem::replace(&mut seen[v], true) {
                    return Err(format!("vertex {v} is out of range or covered twice"));
                }
            }
            if let Some(&l) = s.leaves.iter().find(|&&l| !r.has_edge(s.center, l)) {
                return Err(format!("({}, {l}) is not an edge", s.center));
            }
        }
        match seen.iter().position(|&c| !c) {
            Some(v) => Err(format!("vertex {v} is uncovered")),
            None => Ok(()),
        }
    }
}

/// Intermediate state of the Lemma 3.1 construction: the matching, the
/// `K_{1,2}` triples built from `U₁`, and the flow instance `H → Ũ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowStage {
    pub matching: Vec<(usize, usize)>,
    pub triples: Vec<Star>,
    /// Remaining matching edges `M̃`, oriented so that any `H`-vertex comes first.
    pub rest: Vec<(usize, usize)>,
    pub h: Vec<usize>,
    pub u_tilde: Vec<usize>,
}

fn u_neighbors(r: &Graph, v: usize, unmatched: &BitSet) -> Vec<usize> {
    r.neighbors(v).iter().filter(|&u| unmatched.contains(u)).collect()
}

/// Greedy maximal matching over a seeded edge order, then removal of
/// augmenting paths of length 3 (`u₁–a–b–u₂`), which the construction needs.
pub fn structured_matching(r: &Graph, rng: RngState) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = r.edges().collect();
    edges.shuffle(&mut rng.rng());
    let mut mate = vec![usize::MAX; r.n()];
    for (u, v) in edges {
        if mate[u] == usize::MAX && mate[v] == usize::MAX {
            mate[u] = v;
            mate[v] = u;
        }
    }
    loop {
        let unmatched = BitSet::from_indices(r.n(), (0..r.n()).filter(|&v| mate[v] == usize::MAX));
        let mut improved = false;
        'scan: for a in 0..r.n() {
            let b = mate[a];
            if b == usize::MAX || b < a {
                continue;
            }
            for u1 in u_neighbors(r, a, &unmatched) {
                if let Some(u2) = u_neighbors(r, b, &unmatched).into_iter().find(|&u2| u2 != u1) {
                    mate[a] = u1;
                    mate[u1] = a;
                    mate[b] = u2;
                    mate[u2] = b;
                    improved = true;
                    break 'scan;
                }
            }
        }
        if !improved {
            break;
        }
    }
    (0..r.n()).filter(|&v| mate[v] != usize::MAX && v < mate[v]).map(|v| (v, mate[v])).collect()
}

/// Builds the flow stage of the Lemma 3.1 construction.
pub fn flow_stage(r: &Graph, rng: RngState) -> Result<FlowStage> {
    if let Some(v) = (0..r.n()).find(|&v| r.degree(v) == 0) {
        return Err(Error::Precondition(format!("reduced vertex {v} is isolated")));
    }
    let matching = structured_matching(r, rng);
    let mut unmatched = BitSet::full(r.n());
    for &(a, b) in &matching {
        unmatched.remove(a);
        unmatched.remove(b);
    }
    for u in unmatched.iter() {
        assert!(r.neighbors(u).and_count(&unmatched) == 0, "unmatched vertices must be independent");
    }
    let mut triples = Vec::new();
    let mut rest = Vec::new();
    let mut in_u1 = BitSet::new(r.n());
    for &(a, b) in &matching {
        let (na, nb) = (u_neighbors(r, a, &unmatched), u_neighbors(r, b, &unmatched));
        if na.len() == 1 && nb.len() == 1 && na[0] == nb[0] && !in_u1.contains(na[0]) {
            in_u1.insert(na[0]);
            triples.push(Star { center: a, leaves: vec![b, na[0]] });
        } else {
            rest.push((a, b));
        }
    }
    let mut u_tilde_set = unmatched.clone();
    u_tilde_set.difference_with(&in_u1);
    let mut h = Vec::new();
    for e in rest.iter_mut() {
        let (da, db) = (r.neighbors(e.0).and_count(&u_tilde_set), r.neighbors(e.1).and_count(&u_tilde_set));
        assert!(da == 0 || db == 0, "both endpoints of a matching edge see the unmatched set");
        if db > 0 {
            *e = (e.1, e.0);
        }
        if da.max(db) > 0 {
            h.push(e.0);
        }
    }
    Ok(FlowStage { matching, triples, rest, h, u_tilde: u_tilde_set.to_vec() })
}

impl FlowStage {
    fn network(&self, r: &Graph, k: usize) -> (FlowNetwork, Vec<(usize, usize, usize)>) {
        let (nh, nu) = (self.h.len(), self.u_tilde.len());
        let (s, t) = (nh + nu, nh + nu + 1);
        let mut net = FlowNetwork::new(nh + nu + 2);
        let mut arcs = Vec::new();
        for (a, &hv) in self.h.iter().enumerate() {
            net.add_arc(s, a, (k - 1) as u64);
            for (b, &u) in self.u_tilde.iter().enumerate() {
                if r.has_edge(hv, u) {
                    arcs.push((net.add_arc(a, nh + b, 1), hv, u));
                }
            }
        }
        for b in 0..nu {
            net.add_arc(nh + b, t, 1);
        }
        (net, arcs)
    }

    /// Maximum flow from `H` (capacity `k − 1` each) to `Ũ` (demand 1 each).
    pub fn flow_value(&self, r: &Graph, k: usize) -> u64 {
        let (mut net, _) = self.network(r, k);
        let n = net.n();
        net.max_flow(n - 2, n - 1)
    }

    /// Exhaustive search for `H' ⊆ H`, `U' ⊆ Ũ` with
    /// `(k−1)|H'| + e(H', Ũ∖U') + e(H∖H', U') < |U'|`.
    pub fn cut_violation(&self, r: &Graph, k: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let (nh, nu) = (self.h.len(), self.u_tilde.len());
        assert!(nh + nu <= 24, "exhaustive cut search is limited to 24 vertices");
        for hm in 0u32..1 << nh {
            for um in 0u32..1 << nu {
                let mut lhs = (k - 1) * hm.count_ones() as usize;
                for (a, &hv) in self.h.iter().enumerate() {
                    for (b, &u) in self.u_tilde.iter().enumerate() {
                        if r.has_edge(hv, u) && ((hm >> a & 1 == 1) != (um >> b & 1 == 1)) {
                            lhs += 1;
                        }
                    }
                }
                if lhs < um.count_ones() as usize {
                    let pick = |m: u32, v: &[usize]| {
                        v.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|p| *p.1).collect()
                    };
                    return Some((pick(hm, &self.h), pick(um, &self.u_tilde)));
                }
            }
        }
        None
    }

    /// Assembles the stars: matching edges (with flow-assigned leaves on the
    /// `H` side) and the `K_{1,2}` triples.
    pub fn solve(&self, r: &Graph, k: usize) -> Result<StarPartition> {
        let (mut net, arcs) = self.network(r, k);
        let n = net.n();
        let value = net.max_flow(n - 2, n - 1);
        if value < self.u_tilde.len() as u64 {
            return Err(Error::Infeasible(format!(
                "star partition flow routes {value} of {} unmatched vertices",
                self.u_tilde.len()
            )));
        }
        let mut extra: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (id, hv, u) in arcs {
            if net.flow_on(id) == 1 {
                extra.entry(hv).or_default().push(u);
            }
        }
        let mut stars: Vec<Star> = self
            .rest
            .iter()
            .map(|&(a, b)| {
                let mut leaves = vec![b];
                leaves.extend(extra.remove(&a).unwrap_or_default());
                Star { center: a, leaves }
            })
            .collect();
        stars.extend(self.triples.iter().cloned());
        stars.sort_by_key(|s| s.center);
        Ok(StarPartition { stars })
    }
}

/// Minimum degree floor `⌈(1/(k+1) + α/4)m⌉` of the Lemma 3.1 hypothesis.
pub fn star_degree_floor(m: usize, k: usize, alpha: f64) -> usize {
    (((1.0 / (k as f64 + 1.0) + alpha / 4.0) * m as f64) - 1e-9).ceil() as usize
}

/// Lemma 3.1: vertex-disjoint stars with at most `k` leaves covering `R`.
pub fn star_partition(r: &Graph, k: usize, alpha: f64, rng: RngState) -> Result<StarPartition> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let floor = star_degree_floor(r.n(), k, alpha);
    if r.n() > 0 && r.min_degree() < floor {
        return Err(Error::Precondition(format!(
            "reduced graph has minimum degree {} < (1/(k+1) + alpha/4)m = {floor}",
            r.min_degree()
        )));
    }
    construct_star_partition(r, k, rng)
}

/// Matchings (independent seeded edge orders) tried before reporting infeasibility.
pub const MATCHING_RESTARTS: u64 = 16;

/// The Lemma 3.1 construction without the minimum-degree hypothesis. A
/// matching whose flow cannot route every unmatched vertex is redrawn up to
/// [`MATCHING_RESTARTS`] times.
pub fn construct_star_partition(r: &Graph, k: usize, rng: RngState) -> Result<StarPartition> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let mut last = None;
    for attempt in 0..MATCHING_RESTARTS {
        let stage = flow_stage(r, if attempt == 0 { rng } else { rng.child(attempt) })?;
        if k == 1 && !stage.u_tilde.is_empty() {
            last = Some(Error::Infeasible("k = 1 requires a perfect matching".into()));
            continue;
        }
        match stage.solve(r, k.max(2)) {
            Ok(out) => {
                debug_assert!(out.validate(r, k).is_ok());
                return Ok(out);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Exhaustive oracle: some star partition with `1..=k` leaves per star.
pub fn exhaustive_star_partition(r: &Graph, k: usize) -> Option<StarPartition> {
    fn subsets(pool: &[usize], max: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for m in 1u32..1 << pool.len() {
            if m.count_ones() as usize <= max {
                out.push(pool.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|p| *p.1).collect());
            }
        }
        out
    }
    fn rec(r: &Graph, k: usize, free: &mut Vec<bool>, acc: &mut Vec<Star>) -> bool {
        let Some(v) = free.iter().position(|&f| f) else { return true };
        let open = |free: &Vec<bool>, c: usize, skip: usize| -> Vec<usize> {
            r.neighbors(c).iter().filter(|&u| free[u] && u != skip).collect()
        };
        let mut options: Vec<Star> = Vec::new();
        for s in subsets(&open(free, v, v), k) {
            options.push(Star { center: v, leaves: s });
        }
        for c in open(free, v, v) {
            let others = open(free, c, v);
            options.push(Star { center: c, leaves: vec![v] });
            for s in subsets(&others, k - 1) {
                options.push(Star { center: c, leaves: [vec![v], s].concat() });
            }
        }
        for star in options {
            let verts: Vec<usize> = std::iter::once(star.center).chain(star.leaves.iter().copied()).collect();
            verts.iter().for_each(|&x| free[x] = false);
            acc.push(star);
            if rec(r, k, free, acc) {
                return true;
            }
            let star = acc.pop().unwrap();
            std::iter::once(star.center).chain(star.leaves).for_each(|x| free[x] = true);
        }
        false
    }
    let mut free = vec![true; r.n()];
    let mut acc = Vec::new();
    rec(r, k, &mut free, &mut acc).then_some(StarPartition { stars: acc })
}

/// A `K_{1,k}` star over refined parts (indices into [`RefinedSystem::parts`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedStar {
    pub center: usize,
    pub leaves: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedSystem {
    pub k: usize,
    /// Host vertices of each part; all parts have the same size.
    pub parts: Vec<Vec<usize>>,
    /// Reduced vertex each part was cut from.
    pub origin: Vec<usize>,
    pub stars: Vec<RefinedStar>,
    /// `V₀`: the input exceptional vertices plus those moved for divisibility.
    pub exceptional: Vec<usize>,
    /// Vertices moved to `V₀` by the refinement.
    pub moved: usize,
    /// Exceptional vertex → assigned leaf part.
    pub assignment: BTreeMap<usize, usize>,
}

impl RefinedSystem {
    pub fn part_size(&self) -> usize {
        self.parts.first().map_or(0, Vec::len)
    }

    /// Star invariants: exactly `k` leaves, equal sizes, every part in exactly one star.
    pub fn validate(&self, reduced: &Graph) -> std::result::Result<(), String> {
        let t = self.part_size();
        if self.parts.iter().any(|p| p.len() != t) {
            return Err("parts differ in size".into());
        }
        let mut used = vec![0usize; self.parts.len()];
        for s in &self.stars {
            if s.leaves.len() != self.k {
                return Err(format!("star at part {} has {} leaves", s.center, s.leaves.len()));
            }
            for &p in std::iter::once(&s.center).chain(&s.leaves) {
                used[p] += 1;
            }
            for &l in &s.leaves {
                if !reduced.has_edge(self.origin[s.center], self.origin[l]) {
                    return Err(format!("parts {} and {l} come from non-adjacent reduced vertices", s.center));
                }
            }
        }
        if let Some(p) = used.iter().position(|&u| u != 1) {
            return Err(format!("part {p} is used {} times", used[p]));
        }
        Ok(())
    }

    pub fn leaf_parts(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.stars.iter().flat_map(|s| s.leaves.iter().copied()).collect();
        v.sort_unstable();
        v
    }
}

fn chunks(block: &[usize], pieces: usize) -> Vec<Vec<usize>> {
    let size = block.len() / pieces;
    (0..pieces).map(|q| block[q * size..(q + 1) * size].to_vec()).collect()
}

struct Builder {
    k: usize,
    t: usize,
    parts: Vec<Vec<usize>>,
    origin: Vec<usize>,
    stars: Vec<RefinedStar>,
}

impl Builder {
    /// Splits a `K_{1,k}` over equal blocks into stars over parts of size `t`.
    fn emit(&mut self, center: (usize, &[usize]), leaves: &[(usize, Vec<usize>)]) {
        let pieces = center.1.len() / self.t;
        for q in 0..pieces {
            let mut add = |o: usize, b: &[usize]| {
                self.parts.push(b[q * self.t..(q + 1) * self.t].to_vec());
                self.origin.push(o);
                self.parts.len() - 1
            };
            let c = add(center.0, center.1);
            let ls = leaves.iter().map(|(o, b)| add(*o, b)).collect();
            self.stars.push(RefinedStar { center: c, leaves: ls });
        }
    }

    /// `(k+1)`-subdivision of a one-leaf star `(S₀, S₁)` into two `K_{1,k}`.
    fn subdivide(&mut self, s0: (usize, &[usize]), s1: (usize, &[usize])) {
        let k = self.k;
        let a = chunks(s0.1, k + 1);
        let b = chunks(s1.1, k + 1);
        let first: Vec<(usize, Vec<usize>)> = b[..k].iter().map(|x| (s1.0, x.clone())).collect();
        self.emit((s0.0, &a[0]), &first);
        let second: Vec<(usize, Vec<usize>)> = a[1..].iter().map(|x| (s0.0, x.clone())).collect();
        self.emit((s1.0, &b[k]), &second);
    }
}

/// Refines stars with `1..=k` leaves into `K_{1,k}` stars over equal parts.
/// Classes are shuffled, trimmed to a multiple of the common divisor (the
/// excess joins `V₀`), split, and every star is finally cut to the common
/// part size.
pub fn refine_to_k_stars(
    partition: &StarPartition,
    classes: &[Vec<usize>],
    exceptional: &[usize],
    k: usize,
    rng: RngState,
) -> Result<RefinedSystem> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let s = classes.first().map_or(0, Vec::len);
    if classes.iter().any(|c| c.len() != s) {
        return Err(Error::Precondition("classes must have equal size".into()));
    }
    let divisor = partition
        .stars
        .iter()
        .map(|st| match st.leaves.len() {
            l if l == k => 1,
            1 => k + 1,
            _ => (k - 1) * (k + 1),
        })
        .fold(1, lcm);
    let t = s / divisor;
    if t == 0 {
        return Err(Error::Infeasible(format!("class size {s} is below the refinement divisor {divisor}")));
    }
    let mut rand = rng.rng();
    let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(classes.len());
    let mut v0: Vec<usize> = exceptional.to_vec();
    let mut moved = 0;
    for c in classes {
        let mut c = c.clone();
        c.shuffle(&mut rand);
        moved += c.len() - divisor * t;
        v0.extend(c.drain(divisor * t..));
        blocks.push(c);
    }
    let mut b = Builder { k, t, parts: Vec::new(), origin: Vec::new(), stars: Vec::new() };
    for st in &partition.stars {
        let kp = st.leaves.len();
        let center = (st.center, blocks[st.center].as_slice());
        if kp == k {
            let leaves: Vec<(usize, Vec<usize>)> = st.leaves.iter().map(|&l| (l, blocks[l].clone())).collect();
            b.emit(center, &leaves);
        } else if kp == 1 {
            b.subdivide(center, (st.leaves[0], &blocks[st.leaves[0]]));
        } else {
            let cs = chunks(center.1, k - 1);
            let ps: Vec<(usize, Vec<usize>)> =
                st.leaves.iter().flat_map(|&l| chunks(&blocks[l], k - 1).into_iter().map(move |p| (l, p))).collect();
            for j in 0..kp - 1 {
                b.emit((st.center, &cs[j]), &ps[j * k..(j + 1) * k]);
            }
            for (i, p) in ps[(kp - 1) * k..].iter().enumerate() {
                b.subdivide((st.center, &cs[kp - 1 + i]), (p.0, &p.1));
            }
        }
    }
    v0.sort_unstable();
    Ok(RefinedSystem {
        k,
        parts: b.parts,
        origin: b.origin,
        stars: b.stars,
        exceptional: v0,
        moved,
        assignment: BTreeMap::new(),
    })
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Assigns every exceptional vertex to a leaf part where it has at least
/// `δ′|V_x|/2` neighbours, choosing the least-loaded eligible part, with at most
/// `capConstant·ε|V_x|/δ′` vertices per part.
pub fn assign_exceptional(
    host: &Graph,
    refined: &RefinedSystem,
    delta_p: f64,
    eps: f64,
    cap_constant: f64,
) -> Result<BTreeMap<usize, usize>> {
    let t = refined.part_size();
    let leaf_parts = refined.leaf_parts();
    let sets: Vec<BitSet> =
        leaf_parts.iter().map(|&p| BitSet::from_indices(host.n(), refined.parts[p].iter().copied())).collect();
    let mut leaf_union = BitSet::new(host.n());
    sets.iter().for_each(|s| leaf_union.union_with(s));
    let need = delta_p * t as f64 / 2.0;
    let cap = ((cap_constant * eps * t as f64 / delta_p) + 1e-9).floor() as usize;
    let mut load = vec![0usize; leaf_parts.len()];
    let mut out = BTreeMap::new();
    for &v in &refined.exceptional {
        let total = host.neighbors(v).and_count(&leaf_union);
        if (total as f64) + 1e-9 < delta_p * host.n() as f64 {
            return Err(Error::Precondition(format!(
                "exceptional vertex {v} has {total} neighbours in leaf parts, below delta'·n"
            )));
        }
        let eligible: Vec<usize> =
            (0..leaf_parts.len()).filter(|&x| host.neighbors(v).and_count(&sets[x]) as f64 + 1e-9 >= need).collect();
        if eligible.is_empty() {
            return Err(Error::Infeasible(format!("exceptional vertex {v} has no eligible leaf part")));
        }
        let best = *eligible.iter().min_by_key(|&&x| (load[x], x)).unwrap();
        if load[best] >= cap {
            return Err(Error::Infeasible(format!(
                "exceptional vertex {v}: every eligible leaf part is at its cap {cap}"
            )));
        }
        load[best] += 1;
        out.insert(v, leaf_parts[best]);
    }
    Ok(out)
}
