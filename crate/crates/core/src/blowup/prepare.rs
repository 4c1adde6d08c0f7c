use rand::seq::SliceRandom;
use rand::Rng;

use crate::bitset::BitSet;
use crate::blowup::{ParamSet, TargetSpec};
use crate::classes::ClassSystem;
use crate::error::{Error, Result, Stage};
use crate::graph::Graph;
use crate::rng::RngState;

/// Padded, augmented target with buffer sets and the initial ordering.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    /// Padded target plus augmentation edges; vertices `0..original_n` are the
    /// vertices of the input target.
    pub graph: Graph,
    pub original_n: usize,
    pub hom: Vec<usize>,
    /// `W_x` as host bitsets; `V_{h(x)}` for `x ∉ W`.
    pub allowed: Vec<BitSet>,
    pub in_w: BitSet,
    pub b_sets: Vec<Vec<usize>>,
    pub d_sets: Vec<Vec<usize>>,
    pub added_edges: Vec<(usize, usize)>,
    pub ordering: Vec<usize>,
    /// `|N_H(B)|`: the prefix of the ordering occupied by neighbours of `B`.
    pub nb_len: usize,
    pub class_size: usize,
    pub max_degree: usize,
}

impl PreparedInstance {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn r(&self) -> usize {
        self.b_sets.len()
    }

    pub fn in_b(&self) -> BitSet {
        BitSet::from_indices(self.n(), self.b_sets.iter().flatten().copied())
    }

    pub fn in_d(&self) -> BitSet {
        BitSet::from_indices(self.n(), self.d_sets.iter().flatten().copied())
    }

    pub fn neighborhood_of(&self, set: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.n());
        for v in set.iter() {
            out.union_with(self.graph.neighbors(v));
        }
        out
    }

    /// Machine check of the preprocessing contract.
    pub fn check_invariants(&self, system: &ClassSystem) -> std::result::Result<(), String> {
        let n = self.class_size;
        let mut load = vec![0usize; self.r()];
        for &i in &self.hom {
            load[i] += 1;
        }
        if load.iter().any(|&l| l != n) {
            return Err(format!("padded class loads {load:?} differ from N = {n}"));
        }
        for (u, v) in self.graph.edges() {
            if !system.is_reduced_edge(self.hom[u], self.hom[v]) {
                return Err(format!("edge ({u},{v}) does not map to a reduced edge"));
            }
        }
        let buffers: Vec<usize> = self.b_sets.iter().chain(&self.d_sets).flatten().copied().collect();
        let nw = self.neighborhood_of(&self.in_w);
        for &b in &buffers {
            if self.in_w.contains(b) || nw.contains(b) {
                return Err(format!("buffer vertex {b} lies in or next to W"));
            }
            let dist = self.graph.bfs_distances(b, 3);
            if let Some(&c) = buffers.iter().find(|&&c| c != b && dist[c] <= 3) {
                return Err(format!("buffer vertices {b} and {c} are at distance {}", dist[c]));
            }
        }
        for &b in self.b_sets.iter().flatten() {
            if self.graph.degree(b) != self.max_degree {
                return Err(format!("B-vertex {b} has degree {} != Delta", self.graph.degree(b)));
            }
        }
        if self.graph.max_degree() > self.max_degree + 1 {
            return Err("a vertex exceeds degree Delta + 1".into());
        }
        let in_b = self.in_b();
        let nb = self.neighborhood_of(&in_b);
        let k = nb.count();
        if k != self.nb_len || !self.ordering[..k].iter().all(|&x| nb.contains(x)) {
            return Err("ordering does not start with N_H(B)".into());
        }
        let nbset = in_b.count();
        if !self.ordering[self.n() - nbset..].iter().all(|&x| in_b.contains(x)) {
            return Err("ordering does not end with B".into());
        }
        Ok(())
    }
}

fn err(msg: String) -> Error {
    Error::embedding(Stage::Preprocess, msg)
}

/// Pads the target to `N` vertices per class, selects the buffer sets `B_i`
/// and `D_i`, raises every `B`-vertex to degree `Δ` and fixes the ordering.
pub fn preprocess(
    spec: &TargetSpec,
    system: &ClassSystem,
    params: &ParamSet,
    rng: RngState,
) -> Result<PreparedInstance> {
    params.validate()?;
    spec.validate(system, params)?;
    let n_cls = system.class_size();
    let r = system.r();
    let original_n = spec.n();
    let mut hom = spec.hom.clone();
    let mut load = vec![0usize; r];
    for &i in &hom {
        load[i] += 1;
    }
    for (i, &l) in load.iter().enumerate() {
        hom.extend(std::iter::repeat_n(i, n_cls - l));
    }
    let n = hom.len();
    let mut graph = Graph::empty(n);
    for (u, v) in spec.graph.edges() {
        graph.add_edge(u, v);
    }

    let host_n = system.host().n();
    let class_sets: Vec<BitSet> =
        (0..r).map(|i| BitSet::from_indices(host_n, system.class(i).iter().copied())).collect();
    let mut in_w = BitSet::new(n);
    let mut allowed: Vec<BitSet> = hom.iter().map(|&i| class_sets[i].clone()).collect();
    for (&x, w) in &spec.restrictions {
        in_w.insert(x);
        allowed[x] = BitSet::from_indices(host_n, w.iter().copied());
    }
    let mut forbidden = in_w.clone();
    for x in in_w.iter() {
        forbidden.union_with(spec.graph.neighbors(x));
    }

    let nb_target = ParamSet::ceil_frac(params.delta0, n_cls);
    let nd_target = ParamSet::ceil_frac(params.beta, n_cls);
    let mut b_sets = vec![Vec::new(); r];
    let mut d_sets = vec![Vec::new(); r];
    let mut is_buffer = BitSet::new(n);
    let mut added_edges = Vec::new();
    let mut rand = rng.split("buffers").rng();

    let far_from_buffers = |g: &Graph, v: usize, is_buffer: &BitSet| {
        let dist = g.bfs_distances(v, 3);
        is_buffer.iter().all(|c| c == v || dist[c] > 3)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rand);
    for &v in &order {
        let i = hom[v];
        if b_sets[i].len() >= nb_target || forbidden.contains(v) || is_buffer.contains(v) {
            continue;
        }
        if graph.degree(v) > params.max_degree || !far_from_buffers(&graph, v, &is_buffer) {
            continue;
        }
        is_buffer.insert(v);
        match augment(&mut graph, v, &hom, system, params.max_degree, &forbidden, &is_buffer, &mut rand) {
            Some(edges) => {
                b_sets[i].push(v);
                added_edges.extend(edges);
            }
            None => is_buffer.remove(v),
        }
    }
    if let Some(i) = (0..r).find(|&i| b_sets[i].len() < nb_target) {
        return Err(err(format!(
            "class {i}: only {} of {nb_target} B-vertices could be placed at pairwise distance >= 4 with degree Delta",
            b_sets[i].len()
        )));
    }
    order.shuffle(&mut rand);
    for &v in &order {
        let i = hom[v];
        if d_sets[i].len() >= nd_target || forbidden.contains(v) || is_buffer.contains(v) {
            continue;
        }
        if far_from_buffers(&graph, v, &is_buffer) {
            is_buffer.insert(v);
            d_sets[i].push(v);
        }
    }
    if let Some(i) = (0..r).find(|&i| d_sets[i].len() < nd_target) {
        return Err(err(format!(
            "class {i}: only {} of {nd_target} D-vertices could be placed at pairwise distance >= 4",
            d_sets[i].len()
        )));
    }
    for s in b_sets.iter_mut().chain(d_sets.iter_mut()) {
        s.sort_unstable();
    }

    let in_b = BitSet::from_indices(n, b_sets.iter().flatten().copied());
    let mut nb = BitSet::new(n);
    for b in in_b.iter() {
        nb.union_with(graph.neighbors(b));
    }
    let mut first: Vec<usize> = nb.to_vec();
    let mut middle: Vec<usize> = (0..n).filter(|&x| !nb.contains(x) && !in_b.contains(x)).collect();
    let mut last: Vec<usize> = in_b.to_vec();
    let mut ord_rng = rng.split("ordering").rng();
    first.shuffle(&mut ord_rng);
    middle.shuffle(&mut ord_rng);
    last.shuffle(&mut ord_rng);
    let nb_len = first.len();
    let ordering = [first, middle, last].concat();

    Ok(PreparedInstance {
        graph,
        original_n,
        hom,
        allowed,
        in_w,
        b_sets,
        d_sets,
        added_edges,
        ordering,
        nb_len,
        class_size: n_cls,
        max_degree: params.max_degree,
    })
}

/// Adds edges at `b` until it has degree `Δ`, keeping other buffer vertices at
/// distance ≥ 4. Rolls back and returns `None` when no eligible endpoint is left.
#[allow(clippy::too_many_arguments)]
fn augment(
    graph: &mut Graph,
    b: usize,
    hom: &[usize],
    system: &ClassSystem,
    max_degree: usize,
    forbidden: &BitSet,
    is_buffer: &BitSet,
    rand: &mut impl Rng,
) -> Option<Vec<(usize, usize)>> {
    let mut added = Vec::new();
    while graph.degree(b) < max_degree {
        let mut near_buffer = BitSet::new(graph.n());
        for c in is_buffer.iter() {
            near_buffer.insert(c);
            near_buffer.union_with(graph.neighbors(c));
        }
        let mut pool: Vec<usize> = (0..graph.n())
            .filter(|&u| {
                !forbidden.contains(u)
                    && !near_buffer.contains(u)
                    && graph.degree(u) <= max_degree
                    && system.is_reduced_edge(hom[b], hom[u])
            })
            .collect();
        pool.shuffle(rand);
        let mut placed = false;
        for u in pool {
            graph.add_edge(b, u);
            let dist = graph.bfs_distances(b, 3);
            if is_buffer.iter().all(|c| c == b || dist[c] > 3) {
                added.push((b.min(u), b.max(u)));
                placed = true;
                break;
            }
            graph.remove_edge(b, u);
        }
        if !placed {
            for &(u, v) in &added {
                graph.remove_edge(u, v);
            }
            return None;
        }
    }
    Some(added)
}
