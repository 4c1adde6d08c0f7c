//! Synthetic class systems and targets shared by the CLI and the test suites.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blowup::TargetSpec;
use crate::classes::ClassSystem;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::regularity::check_super_regular;
use crate::rng::RngState;

/// All pairs of `0..r`.
pub fn complete_reduced(r: usize) -> Vec<(usize, usize)> {
    (0..r).flat_map(|i| (i + 1..r).map(move |j| (i, j))).collect()
}

/// Host on `r·N` vertices with classes `{iN, .., iN + N − 1}` and independent
/// density-`d` bipartite graphs on the reduced pairs (`d = 1`: complete pairs).
pub fn random_class_system(
    r: usize,
    n: usize,
    d: f64,
    reduced: Vec<(usize, usize)>,
    rng: RngState,
) -> Result<ClassSystem> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain(format!("pair density must lie in (0, 1], got {d}")));
    }
    let mut host = Graph::empty(r * n);
    let mut rand = rng.rng();
    for &(i, j) in &reduced {
        for a in 0..n {
            for b in 0..n {
                if d >= 1.0 || rand.gen::<f64>() < d {
                    host.add_edge(i * n + a, j * n + b);
                }
            }
        }
    }
    let classes = (0..r).map(|i| (i * n..(i + 1) * n).collect()).collect();
    ClassSystem::new(host, classes, reduced)
}

/// Draws of one pair tried by [`super_regular_class_system`].
pub const MAX_PAIR_DRAWS: u64 = 200;

/// Like [`random_class_system`], but each reduced pair is redrawn (from its own
/// stream) until it passes `check_super_regular(eps, delta)`.
pub fn super_regular_class_system(
    r: usize,
    n: usize,
    d: f64,
    reduced: Vec<(usize, usize)>,
    eps: f64,
    delta: f64,
    rng: RngState,
) -> Result<ClassSystem> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain(format!("pair density must lie in (0, 1], got {d}")));
    }
    let mut host = Graph::empty(r * n);
    for &(i, j) in &reduced {
        let stream = rng.split(&format!("pair-{i}-{j}"));
        let mut accepted = None;
        for draw in 0..MAX_PAIR_DRAWS {
            let pair = if d >= 1.0 {
                crate::graph::BipartitePair::complete(n, n)
            } else {
                crate::graph::sample_bipartite(n, n, d, stream.child(draw))?
            };
            if check_super_regular(&pair, eps, delta)? {
                accepted = Some(pair);
                break;
            }
        }
        let pair = accepted.ok_or_else(|| {
            Error::Infeasible(format!(
                "pair ({i},{j}): no ({eps}, {delta})-super-regular draw in {MAX_PAIR_DRAWS} attempts"
            ))
        })?;
        for (a, b) in pair.edges() {
            host.add_edge(i * n + a, j * n + b);
        }
    }
    let classes = (0..r).map(|i| (i * n..(i + 1) * n).collect()).collect();
    ClassSystem::new(host, classes, reduced)
}

/// `K_r`-factor with a fragment of the `(r−1)`-th power of a path, vertex `t`
/// of the fragment in class `t mod r`. The fragment has `fragment` vertices
/// (a multiple of `r`); cliques fill the rest. Maximum degree is `2(r−1)`
/// once the fragment has at least `2r − 1` vertices.
pub fn clique_factor_with_path_power(r: usize, n: usize, fragment: usize) -> Result<TargetSpec> {
    if r < 2 || !fragment.is_multiple_of(r) || fragment > r * n {
        return Err(Error::Domain("fragment length must be a multiple of r and at most rN".into()));
    }
    let total = r * n;
    let mut edges = Vec::new();
    for t in 0..fragment {
        for s in 1..r {
            if t + s < fragment {
                edges.push((t, t + s));
            }
        }
    }
    for c in 0..(total - fragment) / r {
        let base = fragment + c * r;
        for a in 0..r {
            for b in a + 1..r {
                edges.push((base + a, base + b));
            }
        }
    }
    let hom = (0..total).map(|t| t % r).collect();
    Ok(TargetSpec::new(Graph::from_edges(total, edges)?, hom))
}

/// Adds `count` restricted vertices chosen among the clique-factor part of a
/// target (uniformly, pairwise non-adjacent), each allowed a uniform subset of
/// `⌈frac·N⌉` vertices of its class.
pub fn add_restrictions(
    mut spec: TargetSpec,
    system: &ClassSystem,
    count: usize,
    frac: f64,
    rng: RngState,
) -> Result<TargetSpec> {
    let mut rand = rng.rng();
    let mut order: Vec<usize> = (0..spec.n()).collect();
    order.shuffle(&mut rand);
    let size = ((frac * system.class_size() as f64) - 1e-9).ceil() as usize;
    let mut chosen: Vec<usize> = Vec::new();
    for x in order {
        if chosen.len() == count {
            break;
        }
        if chosen.iter().any(|&y| y == x || spec.graph.has_edge(x, y)) {
            continue;
        }
        chosen.push(x);
    }
    if chosen.len() < count {
        return Err(Error::Infeasible(format!("could not place {count} restricted vertices")));
    }
    for x in chosen {
        let mut cls = system.class(spec.hom[x]).to_vec();
        cls.shuffle(&mut rand);
        cls.truncate(size);
        cls.sort_unstable();
        spec.restrictions.insert(x, cls);
    }
    Ok(spec)
}

/// `N/2` disjoint 4-cycles alternating between the classes of `R = K₂`.
pub fn four_cycles(n: usize) -> Result<TargetSpec> {
    if !n.is_multiple_of(2) {
        return Err(Error::Domain("class size must be even".into()));
    }
    let cycles = n / 2;
    let mut edges = Vec::new();
    let mut hom = Vec::new();
    for c in 0..cycles {
        let b = 4 * c;
        edges.extend([(b, b + 1), (b + 1, b + 2), (b + 2, b + 3), (b + 3, b)]);
        hom.extend([0, 1, 0, 1]);
    }
    Ok(TargetSpec::new(Graph::from_edges(2 * n, edges)?, hom))
}

/// Perfect matching between the two classes of `R = K₂`.
pub fn matching_target(n: usize) -> Result<TargetSpec> {
    let edges = (0..n).map(|t| (2 * t, 2 * t + 1));
    let hom = (0..2 * n).map(|t| t % 2).collect();
    Ok(TargetSpec::new(Graph::from_edges(2 * n, edges)?, hom))
}


/// Host for the Hamilton-cycle-power pipeline with its reduced template and
/// classes. Serialized with an inline edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonHost {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub template_edges: Vec<[usize; 2]>,
    pub classes: Vec<Vec<usize>>,
    pub exceptional: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
}

impl HamiltonHost {
    pub fn graph(&self) -> Result<Graph> {
        Graph::from_edges(self.n, self.edges.iter().map(|e| (e[0], e[1])))
    }

    pub fn template(&self) -> Result<Graph> {
        Graph::from_edges(self.classes.len(), self.template_edges.iter().map(|e| (e[0], e[1])))
    }

    /// `⌈(1/(k+1) + α)n⌉`.
    pub fn degree_floor(&self) -> usize {
        (((1.0 / (self.k as f64 + 1.0) + self.alpha) * self.n as f64) - 1e-9).ceil() as usize
    }
}

/// Structured blow-up of the template `K_{k+1}`: classes of size `⌊n/(k+1)⌋`
/// complete to each other, leftover vertices joined to every other vertex
/// with probability `density`, then topped up with random edges until the
/// minimum degree reaches `⌈(1/(k+1) + α)n⌉`.
pub fn hamilton_host(n: usize, k: usize, alpha: f64, density: f64, rng: RngState) -> Result<HamiltonHost> {
    if k == 0 || n < k + 1 {
        return Err(Error::Domain(format!("need k ≥ 1 and n ≥ k + 1, got n={n}, k={k}")));
    }
    if !(0.0..=1.0).contains(&density) || !(alpha > 0.0 && alpha < k as f64 / (k as f64 + 1.0)) {
        return Err(Error::Domain(format!("density {density} or alpha {alpha} out of range")));
    }
    let m = k + 1;
    let s = n / m;
    let classes: Vec<Vec<usize>> = (0..m).map(|i| (i * s..(i + 1) * s).collect()).collect();
    let exceptional: Vec<usize> = (m * s..n).collect();
    let mut g = Graph::empty(n);
    for (a, b) in complete_reduced(m) {
        for &u in &classes[a] {
            classes[b].iter().for_each(|&v| g.add_edge(u, v));
        }
    }
    let mut rand = rng.rng();
    for &u in &exceptional {
        let candidates: Vec<usize> = (0..n).filter(|&v| v != u && !g.has_edge(u, v)).collect();
        for v in candidates {
            if rand.gen::<f64>() < density {
                g.add_edge(u, v);
            }
        }
    }
    let mut host = HamiltonHost {
        n,
        k,
        alpha,
        template_edges: complete_reduced(m).into_iter().map(|(a, b)| [a, b]).collect(),
        classes,
        exceptional,
        edges: Vec::new(),
    };
    let floor = host.degree_floor();
    if floor >= n {
        return Err(Error::Infeasible(format!("minimum degree {floor} impossible on {n} vertices")));
    }
    for u in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&v| v != u && !g.has_edge(u, v)).collect();
        others.shuffle(&mut rand);
        while g.degree(u) < floor {
            let v = others.pop().expect("floor < n leaves enough non-neighbours");
            g.add_edge(u, v);
        }
    }
    debug_assert!(g.min_degree() >= floor);
    host.edges = g.edges().map(|(u, v)| [u, v]).collect();
    Ok(host)
}
