use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitset::BitSet;
use crate::blowup::{ParamSet, PreparedInstance};
use crate::classes::ClassSystem;
use crate::error::{Error, Result, Stage};
use crate::graph::{BipartitePair, Graph};
use crate::matchings::sample_spread_matching;
use crate::regularity::{is_quasirandom, xi_for};
use crate::rng::RngState;

/// Pairs examined per step by the sampled (P2) check.
pub const DEFAULT_P2_SAMPLE_PAIRS: usize = 10_000;

/// Run-time switches for [`crate::blowup::embed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedOptions {
    /// Check (P2) on a uniform pair sample instead of exactly.
    pub relaxed_p2: bool,
    pub p2_sample_pairs: usize,
    /// Recompute caches and bounds during the run and fail on any mismatch.
    pub audit: bool,
    /// `(ε, δ)` for the super-regularity check of every reduced pair, or `None`
    /// to skip the hypothesis check.
    pub hypothesis: Option<(f64, f64)>,
    /// Regularity parameter for the Phase II matching graphs; `ε''` when `None`.
    pub phase_two_eps: Option<f64>,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            relaxed_p2: false,
            p2_sample_pairs: DEFAULT_P2_SAMPLE_PAIRS,
            audit: cfg!(debug_assertions),
            hypothesis: Some((0.2, 0.3)),
            phase_two_eps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReorderEvent {
    pub j: usize,
    pub moved: Vec<usize>,
}

/// Diagnostics of one embedding run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunLog {
    pub reorder_events: Vec<ReorderEvent>,
    pub total_moved: usize,
    /// `(1/δ₂)·r(Δ+1)δ₃N + |W| + |N_H(D)|`.
    pub moved_bound: f64,
    pub a_min: Option<usize>,
    pub a_min_j: Option<usize>,
    pub e_sizes: Vec<usize>,
    pub t: Option<usize>,
    /// Largest observed ratio of (P2) exceptions to the budget `ε′·j·N`.
    pub p2_max_ratio: f64,
    pub claim25_checked: usize,
    pub claim25_failed: usize,
    pub phase_two_sizes: Vec<usize>,
}

/// Partial embedding with candidate sets and (P2) bookkeeping.
#[derive(Debug, Clone)]
pub struct EmbedState<'a> {
    inst: &'a PreparedInstance,
    host: &'a Graph,
    params: ParamSet,
    opts: EmbedOptions,
    phi: Vec<Option<usize>>,
    used: BitSet,
    ordering: Vec<usize>,
    j: usize,
    cand: Vec<BitSet>,
    ell: Vec<usize>,
    embedded: BitSet,
    /// `N_H(D)`, excluded from the (P2) pair set.
    nhd: BitSet,
    in_b: BitSet,
    members: Vec<Vec<usize>>,
    host_classes: Vec<BitSet>,
    p2_counts: Vec<f64>,
    d_minus: Vec<f64>,
    d_plus: Vec<f64>,
    s: usize,
    t: Option<usize>,
    exceptional_done: bool,
    last_low: Option<usize>,
    non_b_left: usize,
    log: RunLog,
}

fn pool_min_ell(ell: &[usize], zs: &[usize]) -> usize {
    zs.iter().map(|&z| ell[z]).min().unwrap_or(0)
}

/// Outcome of evaluating one candidate image.
struct Extension {
    ok: bool,
    p2_delta: Vec<(usize, f64)>,
}

impl<'a> EmbedState<'a> {
    pub fn new(inst: &'a PreparedInstance, system: &'a ClassSystem, params: ParamSet, opts: EmbedOptions) -> Self {
        let n = inst.n();
        let host = system.host();
        let r = inst.r();
        let nc = inst.class_size;
        let mut members = vec![Vec::new(); r];
        for x in 0..n {
            members[inst.hom[x]].push(x);
        }
        let host_classes = (0..r).map(|i| BitSet::from_indices(host.n(), system.class(i).iter().copied())).collect();
        let in_b = inst.in_b();
        let nhd = inst.neighborhood_of(&inst.in_d());
        let top = 2 * inst.max_degree + 4;
        let d_minus = (0..=top).map(|l| (params.d - params.eps).powi(l as i32)).collect();
        let d_plus = (0..=top).map(|l| (params.d + params.eps).powi(l as i32)).collect();
        let w = inst.in_w.count() as f64;
        let moved_bound = (1.0 / params.delta2) * (r * (inst.max_degree + 1)) as f64 * params.delta3 * nc as f64
            + w
            + nhd.count() as f64;
        let mut st = EmbedState {
            inst,
            host,
            params,
            opts,
            phi: vec![None; n],
            used: BitSet::new(host.n()),
            ordering: inst.ordering.clone(),
            j: 0,
            cand: inst.allowed.clone(),
            ell: vec![0; n],
            embedded: BitSet::new(n),
            nhd,
            non_b_left: n - in_b.count(),
            in_b,
            members,
            host_classes,
            p2_counts: vec![0.0; r],
            d_minus,
            d_plus,
            s: params.period(nc),
            t: None,
            exceptional_done: false,
            last_low: None,
            log: RunLog { moved_bound, ..RunLog::default() },
        };
        st.p2_counts = (0..r).map(|i| st.p2_exact_count(i) as f64).collect();
        st
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn period(&self) -> usize {
        self.s
    }

    pub fn termination_index(&self) -> Option<usize> {
        self.t
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn phi(&self) -> &[Option<usize>] {
        &self.phi
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn is_embedded(&self, x: usize) -> bool {
        self.embedded.contains(x)
    }

    /// Cached `C_φ(x)`; exposed for fault-injection tests of the audits.
    #[doc(hidden)]
    pub fn candidate_cache_mut(&mut self, x: usize) -> &mut BitSet {
        &mut self.cand[x]
    }

    /// `C_φ(x) = W_x ∩ ⋂_{y ∈ N_H(x) ∩ X_j} N_G(φ(y))`, recomputed from `φ`.
    pub fn candidate_set(&self, x: usize) -> Result<BitSet> {
        if self.embedded.contains(x) {
            return Err(Error::Domain(format!("vertex {x} is already embedded")));
        }
        let mut c = self.inst.allowed[x].clone();
        for y in self.inst.graph.neighbors(x).iter() {
            if let Some(v) = self.phi[y] {
                c.intersect_with(self.host.neighbors(v));
            }
        }
        Ok(c)
    }

    fn free_count(&self, x: usize) -> usize {
        self.cand[x].count() - self.cand[x].and_count(&self.used)
    }

    fn in_p2(&self, z: usize) -> bool {
        !self.embedded.contains(z) && !self.nhd.contains(z)
    }

    fn p2_threshold(&self, level: usize) -> f64 {
        self.d_plus[level] * self.inst.class_size as f64 + 1e-9
    }

    fn violates(&self, a: &BitSet, b: &BitSet, level: usize) -> bool {
        a.and_count(b) as f64 > self.p2_threshold(level)
    }

    /// Ordered pairs `(x, y)`, `x ≠ y`, of `H_i ∖ (N_H(D) ∪ X_j)` violating the (P2) bound.
    pub fn p2_exact_count(&self, i: usize) -> usize {
        let u: Vec<usize> = self.members[i].iter().copied().filter(|&z| self.in_p2(z)).collect();
        let mut count = 0;
        for (a, &x) in u.iter().enumerate() {
            for &y in &u[a + 1..] {
                if self.violates(&self.cand[x], &self.cand[y], self.ell[x] + self.ell[y]) {
                    count += 2;
                }
            }
        }
        count
    }

    fn p2_budget(&self, j: usize) -> f64 {
        self.params.eps_p * j as f64 * self.inst.class_size as f64
    }

    /// Evaluates `x ↦ v`: condition (i), (P1) and (P2) for the extension.
    fn evaluate(
        &self,
        x: usize,
        v: usize,
        free: &[(usize, usize)],
        rand: Option<&mut ChaCha8Rng>,
        check: bool,
    ) -> Extension {
        let nv = self.host.neighbors(v);
        let affected: Vec<usize> =
            self.inst.graph.neighbors(x).iter().filter(|&y| !self.embedded.contains(y)).collect();
        let mut new_c: Vec<BitSet> = Vec::with_capacity(affected.len());
        let dm = self.params.d - self.params.eps;
        let mut ok = true;
        for (k, &y) in affected.iter().enumerate() {
            let mut c = self.cand[y].clone();
            c.intersect_with(nv);
            if check && ok {
                let f = free[k].1;
                let hits = self.cand[y].and_count(nv) - self.cand[y].and3_count(nv, &self.used);
                if (hits as f64) + 1e-9 < dm * f as f64 {
                    ok = false;
                }
                let floor = self.d_minus[self.ell[y] + 1] * self.inst.allowed[y].count() as f64;
                if (c.count() as f64) + 1e-9 < floor {
                    ok = false;
                }
            }
            new_c.push(c);
        }
        if check && !ok {
            return Extension { ok, p2_delta: vec![] };
        }
        let mut delta: Vec<(usize, f64)> = Vec::new();
        let mut add = |i: usize, d: f64| match delta.iter_mut().find(|e| e.0 == i) {
            Some(e) => e.1 += d,
            None => delta.push((i, d)),
        };
        let lookup = |z: usize| affected.iter().position(|&y| y == z);
        if self.in_p2(x) && (self.cand[x].count() as f64) > self.p2_threshold(self.ell[x]) {
            let i = self.inst.hom[x];
            let lost = self.members[i]
                .iter()
                .filter(|&&z| z != x && self.in_p2(z))
                .filter(|&&z| self.violates(&self.cand[x], &self.cand[z], self.ell[x] + self.ell[z]))
                .count();
            add(i, -2.0 * lost as f64);
        }
        let mut rand = rand;
        for (k, &y) in affected.iter().enumerate() {
            if !self.in_p2(y) {
                continue;
            }
            let i = self.inst.hom[y];
            let pool: Vec<usize> =
                self.members[i].iter().copied().filter(|&z| z != y && z != x && self.in_p2(z)).collect();
            let sample_k = self.opts.p2_sample_pairs / affected.len().max(1);
            let (zs, scale): (Vec<usize>, f64) = match rand.as_deref_mut() {
                Some(rng) if self.opts.relaxed_p2 && pool.len() > sample_k && sample_k > 0 => {
                    let zs = (0..sample_k).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
                    (zs, pool.len() as f64 / sample_k as f64)
                }
                _ => (pool, 1.0),
            };
            // A pair cannot violate while either side fits under the threshold.
            let low = self.ell[y] + pool_min_ell(&self.ell, &zs);
            if (self.cand[y].count() as f64) <= self.p2_threshold(low)
                && (new_c[k].count() as f64) <= self.p2_threshold(low + 1)
            {
                continue;
            }
            let mut diff = 0i64;
            for z in zs {
                let zk = lookup(z);
                if scale == 1.0 && zk.is_some_and(|zk| zk < k) {
                    continue;
                }
                let old = self.violates(&self.cand[y], &self.cand[z], self.ell[y] + self.ell[z]);
                let (zc, zl) = match zk {
                    Some(zk) => (&new_c[zk], self.ell[z] + 1),
                    None => (&self.cand[z], self.ell[z]),
                };
                let new = self.violates(&new_c[k], zc, self.ell[y] + 1 + zl);
                diff += new as i64 - old as i64;
            }
            add(i, 2.0 * diff as f64 * scale);
        }
        if check {
            let budget = self.p2_budget(self.j + 1);
            for i in 0..self.p2_counts.len() {
                let d = delta.iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
                if self.p2_counts[i] + d > budget + 1e-9 {
                    ok = false;
                }
            }
        }
        Extension { ok, p2_delta: delta }
    }

    fn free_list(&self, x: usize) -> Vec<(usize, usize)> {
        self.inst
            .graph
            .neighbors(x)
            .iter()
            .filter(|&y| !self.embedded.contains(y))
            .map(|y| (y, self.free_count(y)))
            .collect()
    }

    fn admissible_with(&self, x: usize, rand: Option<&mut ChaCha8Rng>) -> Result<Vec<usize>> {
        if self.embedded.contains(x) {
            return Err(Error::Domain(format!("vertex {x} is already embedded")));
        }
        let free = self.free_list(x);
        let mut out = Vec::new();
        let mut rand = rand;
        for v in self.cand[x].iter() {
            if self.used.contains(v) {
                continue;
            }
            if self.evaluate(x, v, &free, rand.as_deref_mut(), true).ok {
                out.push(v);
            }
        }
        Ok(out)
    }

    /// The admissible images `A` of `x`: members of `C_φ(x) ∖ φ(X_j)` meeting
    /// condition (i) whose extension keeps (P1) and (P2).
    pub fn admissible_targets(&self, x: usize) -> Result<Vec<usize>> {
        let mut rng = RngState::new(self.j as u64).split("p2-sample").rng();
        self.admissible_with(x, Some(&mut rng))
    }

    /// Embeds the next vertex `x_{j+1}` at `v`, which must be admissible.
    pub fn extend(&mut self, v: usize) -> Result<()> {
        let x = *self.ordering.get(self.j).ok_or_else(|| Error::Domain("every vertex is embedded".into()))?;
        if !self.admissible_targets(x)?.contains(&v) {
            return Err(Error::Domain(format!("{v} is not an admissible image of {x}")));
        }
        self.commit(x, v, None);
        Ok(())
    }

    /// Sets `φ(x) = v` and updates candidate sets and (P2) counts.
    fn commit(&mut self, x: usize, v: usize, rand: Option<&mut ChaCha8Rng>) {
        let free = self.free_list(x);
        let ext = self.evaluate(x, v, &free, rand, false);
        for (i, d) in ext.p2_delta {
            self.p2_counts[i] += d;
        }
        let nv = self.host.neighbors(v).clone();
        let nbrs: Vec<usize> = self.inst.graph.neighbors(x).iter().filter(|&y| !self.embedded.contains(y)).collect();
        for y in nbrs {
            self.cand[y].intersect_with(&nv);
            self.ell[y] += 1;
        }
        self.phi[x] = Some(v);
        self.used.insert(v);
        self.embedded.insert(x);
        if !self.in_b.contains(x) {
            self.non_b_left -= 1;
        }
        self.j += 1;
        let budget = self.p2_budget(self.j);
        if budget > 0.0 {
            let worst = self.p2_counts.iter().cloned().fold(0.0, f64::max) / budget;
            self.log.p2_max_ratio = self.log.p2_max_ratio.max(worst);
        }
    }

    /// `L_j = {x unembedded : |C_φ(x) ∖ φ(X_j)| < δ₁N}`, moved to the front of
    /// the unembedded tail in stable order.
    pub fn recompute_low_set(&mut self) -> Vec<usize> {
        let thr = self.params.delta1 * self.inst.class_size as f64;
        let tail = &self.ordering[self.j..];
        let (low, rest): (Vec<usize>, Vec<usize>) = tail.iter().partition(|&&x| (self.free_count(x) as f64) < thr);
        if !low.is_empty() {
            self.ordering.truncate(self.j);
            self.ordering.extend(low.iter().copied().chain(rest));
            self.log.total_moved += low.len();
            self.log.reorder_events.push(ReorderEvent { j: self.j, moved: low.clone() });
        }
        low
    }

    /// Maps every poorly covered free host vertex `v ∈ E_i` to a `D_i`-vertex
    /// via a uniform injection `ρ_i`, embedding `ρ_i(E_i)` next.
    pub fn exceptional_step(&mut self, rng: RngState) -> Result<()> {
        let mut rand = rng.rng();
        let mut assignments: Vec<(usize, usize)> = Vec::new();
        let mut sizes = Vec::new();
        for i in 0..self.inst.r() {
            let bs: Vec<usize> = self.inst.b_sets[i].iter().copied().filter(|&b| !self.embedded.contains(b)).collect();
            let thr = self.params.delta1 * self.inst.b_sets[i].len() as f64;
            let mut e: Vec<usize> = self.host_classes[i]
                .iter()
                .filter(|&v| !self.used.contains(v))
                .filter(|&v| (bs.iter().filter(|&&b| self.cand[b].contains(v)).count() as f64) < thr)
                .collect();
            let mut ds: Vec<usize> =
                self.inst.d_sets[i].iter().copied().filter(|&x| !self.embedded.contains(x)).collect();
            sizes.push(e.len());
            if e.len() > ds.len() {
                self.log.e_sizes = sizes;
                return Err(Error::embedding(
                    Stage::Exceptional,
                    format!(
                        "class {i}: |E_i| = {} exceeds the {} available D-vertices (|B_i| = {}, threshold {thr:.2})",
                        e.len(),
                        ds.len(),
                        self.inst.b_sets[i].len()
                    ),
                ));
            }
            ds.shuffle(&mut rand);
            e.shuffle(&mut rand);
            assignments.extend(ds.into_iter().zip(e));
        }
        self.log.e_sizes = sizes;
        let targets: BitSet = BitSet::from_indices(self.inst.n(), assignments.iter().map(|a| a.0));
        let tail = &self.ordering[self.j..];
        let (front, rest): (Vec<usize>, Vec<usize>) = tail.iter().partition(|&&x| targets.contains(x));
        self.ordering.truncate(self.j);
        self.ordering.extend(front.iter().copied().chain(rest));
        for x in front {
            let v = assignments.iter().find(|a| a.0 == x).map(|a| a.1).expect("assigned");
            self.commit(x, v, None);
        }
        Ok(())
    }

    fn fail(&self, x: usize) -> Error {
        let free = self.free_count(x);
        let nbrs: Vec<String> =
            self.free_list(x).iter().map(|(y, f)| format!("{y}(free {f}, ell {})", self.ell[*y])).collect();
        Error::embedding(
            Stage::PhaseOne,
            format!(
                "no admissible image for x = {x} at j = {} (class {}, |C \\ phi(X)| = {free}, unembedded neighbours [{}], P2 counts {:?} vs budget {:.1})",
                self.j,
                self.inst.hom[x],
                nbrs.join(", "),
                self.p2_counts,
                self.p2_budget(self.j + 1)
            ),
        )
    }

    /// Runs Phase I until every vertex outside `B` is embedded.
    pub fn phase_one(&mut self, rng: RngState) -> Result<()> {
        let mut rand = rng.split("steps").rng();
        let mut sampler = rng.split("p2-sample").rng();
        while self.non_b_left > 0 {
            if self.j == self.inst.nb_len && !self.exceptional_done {
                self.exceptional_done = true;
                self.exceptional_step(rng.split("exceptional"))?;
                continue;
            }
            if self.j.is_multiple_of(self.s) && self.last_low != Some(self.j) {
                self.last_low = Some(self.j);
                self.recompute_low_set();
                if self.opts.audit {
                    self.audit_checkpoint()?;
                }
            }
            let x = self.ordering[self.j];
            let a = self.admissible_with(x, Some(&mut sampler))?;
            if a.is_empty() {
                return Err(self.fail(x));
            }
            if self.log.a_min.is_none_or(|m| a.len() < m) {
                self.log.a_min = Some(a.len());
                self.log.a_min_j = Some(self.j);
            }
            let v = a[rand.gen_range(0..a.len())];
            self.commit(x, v, Some(&mut sampler));
            if self.opts.audit {
                self.audit_step(&mut rand)?;
            }
        }
        self.t = Some(self.j);
        self.log.t = self.t;
        Ok(())
    }

    /// Checks cached candidate sets and (P1) on a 5% sample (`all` = every
    /// unembedded vertex) plus the lower bound on free candidates.
    pub fn audit_candidate_sets(&self, all: bool, rand: &mut impl Rng) -> Result<()> {
        let un: Vec<usize> = (0..self.inst.n()).filter(|&x| !self.embedded.contains(x)).collect();
        let picks: Vec<usize> = if all {
            un.clone()
        } else {
            let k = (un.len() / 20).max(1).min(un.len());
            un.choose_multiple(rand, k).copied().collect()
        };
        let audit = |msg: String| Error::embedding(Stage::PhaseOne, format!("audit: {msg}"));
        for x in picks {
            let c = self.candidate_set(x)?;
            if c != self.cand[x] {
                return Err(audit(format!("cached candidate set of {x} is stale at j = {}", self.j)));
            }
            let floor = self.d_minus[self.ell[x]] * self.inst.allowed[x].count() as f64;
            if (c.count() as f64) + 1e-9 < floor {
                return Err(audit(format!("(P1) fails for {x} at j = {}", self.j)));
            }
        }
        let nc = self.inst.class_size as f64;
        let bound = self.d_minus[self.inst.max_degree + 1] * self.params.delta1 * nc - 2.0 * self.s as f64;
        if let Some(&x) = un.iter().find(|&&x| (self.free_count(x) as f64) < bound) {
            return Err(audit(format!("free candidates of {x} fall below {bound:.2} at j = {}", self.j)));
        }
        Ok(())
    }

    fn audit_step(&self, rand: &mut impl Rng) -> Result<()> {
        self.audit_candidate_sets(false, rand)
    }

    /// Exact (P2) recount, the exception budget and the Claim 2.5 quasirandomness
    /// consequence at a checkpoint.
    fn audit_checkpoint(&mut self) -> Result<()> {
        let budget = self.p2_budget(self.j);
        for i in 0..self.inst.r() {
            let exact = self.p2_exact_count(i) as f64;
            if !self.opts.relaxed_p2 && (exact - self.p2_counts[i]).abs() > 1e-6 {
                return Err(Error::embedding(
                    Stage::PhaseOne,
                    format!("audit: tracked (P2) count {} differs from exact {exact} in class {i}", self.p2_counts[i]),
                ));
            }
            if exact > budget + 1e-9 {
                return Err(Error::embedding(
                    Stage::PhaseOne,
                    format!("audit: (P2) exceptions {exact} exceed budget {budget:.1} in class {i}"),
                ));
            }
        }
        self.claim25_check();
        Ok(())
    }

    /// Bipartite graph `xs × ys` with `x ~ v` iff `v ∈ C_φ(x)`.
    fn candidate_graph(&self, xs: &[usize], ys: &[usize]) -> Result<BipartitePair> {
        let mut pair = BipartitePair::empty(xs.len(), ys.len());
        for (a, &x) in xs.iter().enumerate() {
            for (b, &v) in ys.iter().enumerate() {
                if self.cand[x].contains(v) {
                    pair.add_edge(a, b);
                }
            }
        }
        Ok(pair)
    }

    /// For each class and level `ℓ` with at least `δ₃N` unembedded vertices
    /// outside `W ∪ N_H(D)`, tests the candidate graph `U × V_i` with
    /// [`is_quasirandom`] at `ξ = xi_for(ε″, density)`. Results go to the log.
    pub fn claim25_check(&mut self) {
        let nc = self.inst.class_size;
        let min_group = ParamSet::ceil_frac(self.params.delta3, nc).max(1);
        for i in 0..self.inst.r() {
            let mut levels: Vec<Vec<usize>> = Vec::new();
            for &x in &self.members[i] {
                if self.in_p2(x) && !self.inst.in_w.contains(x) {
                    let l = self.ell[x];
                    if levels.len() <= l {
                        levels.resize(l + 1, Vec::new());
                    }
                    levels[l].push(x);
                }
            }
            let cls: Vec<usize> = self.host_classes[i].to_vec();
            for group in levels.iter().filter(|g| g.len() >= min_group) {
                let Ok(pair) = self.candidate_graph(group, &cls) else { continue };
                let Ok(d) = pair.density() else { continue };
                let d = d.to_f64();
                if d <= 0.0 {
                    continue;
                }
                self.log.claim25_checked += 1;
                match is_quasirandom(&pair, xi_for(self.params.eps_pp, d), d) {
                    Ok(v) if v.pass => {}
                    _ => self.log.claim25_failed += 1,
                }
            }
        }
    }

    /// Completes `φ` on the remaining `B`-vertices by one spread perfect
    /// matching per class.
    pub fn phase_two(&mut self, rng: RngState) -> Result<()> {
        if self.t.is_none() {
            return Err(Error::Domain("phase two requires a completed phase one".into()));
        }
        let eps = self.opts.phase_two_eps.unwrap_or(self.params.eps_pp);
        for i in 0..self.inst.r() {
            let xs: Vec<usize> = self.members[i].iter().copied().filter(|&x| !self.embedded.contains(x)).collect();
            let ys: Vec<usize> = self.host_classes[i].iter().filter(|&v| !self.used.contains(v)).collect();
            self.log.phase_two_sizes.push(xs.len());
            if xs.is_empty() {
                continue;
            }
            if xs.len() != ys.len() {
                return Err(Error::embedding(
                    Stage::PhaseTwo,
                    format!("class {i}: {} unembedded vertices for {} free images", xs.len(), ys.len()),
                ));
            }
            let pair = self.candidate_graph(&xs, &ys)?;
            let m = xs.len();
            let min_deg = (0..m).map(|a| pair.x_degree(a)).chain((0..m).map(|b| pair.y_degree(b))).min().unwrap_or(0);
            if min_deg == 0 {
                return Err(Error::embedding(
                    Stage::PhaseTwo,
                    format!("class {i}: matching graph G_i has an isolated vertex"),
                ));
            }
            let delta = min_deg as f64 / m as f64;
            let matching = sample_spread_matching(&pair, eps, delta, rng.child(i as u64))
                .map_err(|e| Error::embedding(Stage::PhaseTwo, format!("class {i} (|B_i \\ X_T| = {m}): {e}")))?;
            for (a, &x) in xs.iter().enumerate() {
                let v = ys[matching.partner[a]];
                self.phi[x] = Some(v);
                self.used.insert(v);
                self.embedded.insert(x);
            }
        }
        Ok(())
    }
}
