//! Perfect matchings of bipartite pairs: counting, exact-uniform and Markov
//! chain sampling, exact pin probabilities, and the spread matching provider
//! used to finish blow-up embeddings.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BipartitePair, Ratio};
use crate::regularity::{check_super_regular, extract_exact_density_subgraph, ExtractionParams};
use crate::rng::RngState;

/// Largest side for which exact counting and sampling are offered.
pub const MAX_EXACT_SIDE: usize = 24;

/// A perfect matching: entry `i` is the Y-position matched to X-position `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Matching {
    pub partner: Vec<usize>,
}

impl Matching {
    /// Every pair is an edge and the partner map is a bijection onto Y.
    pub fn is_valid_for(&self, pair: &BipartitePair) -> bool {
        if self.partner.len() != pair.mx() || pair.mx() != pair.my() {
            return false;
        }
        let mut seen = vec![false; pair.my()];
        self.partner
            .iter()
            .enumerate()
            .all(|(i, &j)| j < pair.my() && pair.has_edge(i, j) && !std::mem::replace(&mut seen[j], true))
    }
}

fn check_square(pair: &BipartitePair) -> Result<usize> {
    if pair.mx() != pair.my() {
        return Err(Error::Domain(format!("perfect matchings need equal sides, got {}x{}", pair.mx(), pair.my())));
    }
    Ok(pair.mx())
}

/// Completion counts of the row-by-row subset dynamic program.
///
/// `ways[mask]` is the number of ways to match rows `popcount(mask)..m` into
/// the columns outside `mask`; `ways[0]` is the permanent.
pub struct MatchingCountTable {
    m: usize,
    rows: Vec<u32>,
    ways: Vec<u128>,
}

impl MatchingCountTable {
    pub fn new(pair: &BipartitePair) -> Result<Self> {
        let m = check_square(pair)?;
        if m > MAX_EXACT_SIDE {
            return Err(Error::Capability(format!(
                "exact matching counting is limited to {MAX_EXACT_SIDE} vertices per side (got {m}); use the MCMC sampler"
            )));
        }
        let rows: Vec<u32> = (0..m).map(|i| pair.row(i).iter().fold(0u32, |acc, j| acc | 1 << j)).collect();
        let full = if m == 0 { 0 } else { (1u32 << m) - 1 };
        let mut ways = vec![0u128; 1usize << m];
        ways[full as usize] = 1;
        for mask in (0..full).rev() {
            let k = mask.count_ones() as usize;
            let mut free = rows[k] & !mask;
            let mut total = 0u128;
            while free != 0 {
                let j = free.trailing_zeros();
                free &= free - 1;
                total += ways[(mask | 1 << j) as usize];
            }
            ways[mask as usize] = total;
        }
        Ok(MatchingCountTable { m, rows, ways })
    }

    pub fn total(&self) -> u128 {
        self.ways[0]
    }

    /// Completion count after matching the first `popcount(used)` rows into `used`.
    pub fn completions(&self, used: u32) -> u128 {
        self.ways[used as usize]
    }

    /// Exactly uniform perfect matching by sequential self-reduction.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<Matching> {
        if self.total() == 0 {
            return Err(Error::Precondition("pair has no perfect matching".into()));
        }
        let mut mask = 0u32;
        let mut partner = Vec::with_capacity(self.m);
        for k in 0..self.m {
            let cur = self.ways[mask as usize];
            let mut t = rng.gen_range(0..cur);
            let mut free = self.rows[k] & !mask;
            loop {
                let j = free.trailing_zeros();
                free &= free - 1;
                let w = self.ways[(mask | 1 << j) as usize];
                if t < w {
                    partner.push(j as usize);
                    mask |= 1 << j;
                    break;
                }
                t -= w;
            }
        }
        Ok(Matching { partner })
    }
}

/// Number of perfect matchings (the permanent of the biadjacency matrix).
pub fn count_perfect_matchings(pair: &BipartitePair) -> Result<u128> {
    Ok(MatchingCountTable::new(pair)?.total())
}

pub fn sample_uniform_matching_exact(pair: &BipartitePair, rng: RngState) -> Result<Matching> {
    MatchingCountTable::new(pair)?.sample(&mut rng.rng())
}

/// Probability that a uniform perfect matching uses the edge `(x, y)`.
pub fn exact_pin_probability(pair: &BipartitePair, x: usize, y: usize) -> Result<Ratio> {
    exact_multi_pin_probability(pair, &[(x, y)])
}

/// Probability that a uniform perfect matching uses all edges in `pins`
/// (distinct X-positions, distinct Y-positions).
pub fn exact_multi_pin_probability(pair: &BipartitePair, pins: &[(usize, usize)]) -> Result<Ratio> {
    let total = count_perfect_matchings(pair)?;
    if total == 0 {
        return Err(Error::Precondition("pair has no perfect matching".into()));
    }
    for (a, &(x, y)) in pins.iter().enumerate() {
        if x >= pair.mx() || y >= pair.my() {
            return Err(Error::Domain(format!("pin ({x},{y}) out of range")));
        }
        if pins[..a].iter().any(|&(x2, y2)| x2 == x || y2 == y) {
            return Err(Error::Domain("pins must use distinct vertices".into()));
        }
    }
    if pins.iter().any(|&(x, y)| !pair.has_edge(x, y)) {
        return Ok(Ratio::new(0, total));
    }
    let xs: Vec<usize> = pins.iter().map(|p| p.0).collect();
    let ys: Vec<usize> = pins.iter().map(|p| p.1).collect();
    Ok(Ratio::new(count_perfect_matchings(&pair.delete(&xs, &ys))?, total))
}

/// Maximum matching by Hopcroft–Karp; entry `i` is the Y-partner of X-position `i`.
pub fn hopcroft_karp(pair: &BipartitePair) -> Vec<Option<usize>> {
    const NIL: usize = usize::MAX;
    let (mx, my) = (pair.mx(), pair.my());
    let adj: Vec<Vec<usize>> = (0..mx).map(|i| pair.row(i).to_vec()).collect();
    let mut mate_x = vec![NIL; mx];
    let mut mate_y = vec![NIL; my];
    let mut dist = vec![0usize; mx];
    loop {
        // Layered BFS from free X-vertices.
        let mut queue = std::collections::VecDeque::new();
        for i in 0..mx {
            if mate_x[i] == NIL {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                let k = mate_y[j];
                if k == NIL {
                    found = true;
                } else if dist[k] == usize::MAX {
                    dist[k] = dist[i] + 1;
                    queue.push_back(k);
                }
            }
        }
        if !found {
            break;
        }
        fn dfs(i: usize, adj: &[Vec<usize>], mate_x: &mut [usize], mate_y: &mut [usize], dist: &mut [usize]) -> bool {
            for idx in 0..adj[i].len() {
                let j = adj[i][idx];
                let k = mate_y[j];
                if k == usize::MAX || (dist[k] == dist[i] + 1 && dfs(k, adj, mate_x, mate_y, dist)) {
                    mate_x[i] = j;
                    mate_y[j] = i;
                    return true;
                }
            }
            dist[i] = usize::MAX;
            false
        }
        let mut progressed = false;
        for i in 0..mx {
            if mate_x[i] == NIL && dfs(i, &adj, &mut mate_x, &mut mate_y, &mut dist) {
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    mate_x.into_iter().map(|j| (j != NIL).then_some(j)).collect()
}

/// A perfect matching if one exists.
pub fn find_perfect_matching(pair: &BipartitePair) -> Result<Matching> {
    check_square(pair)?;
    let mm = hopcroft_karp(pair);
    if mm.iter().any(Option::is_none) {
        let size = mm.iter().flatten().count();
        return Err(Error::Precondition(format!(
            "no perfect matching: maximum matching has size {size} < {}",
            pair.mx()
        )));
    }
    Ok(Matching { partner: mm.into_iter().flatten().collect() })
}

/// Lazy switch chain on perfect matchings: pick two X-positions; if the
/// alternating 4-cycle exists, swap their partners with probability 1/2.
/// The chain is symmetric, so its stationary law is uniform on each
/// switch-connected class; no mixing bound is claimed.
pub fn sample_matching_mcmc(pair: &BipartitePair, steps: usize, rng: RngState) -> Result<Matching> {
    if steps == 0 {
        return Err(Error::Domain("MCMC needs at least one step".into()));
    }
    let mut m = find_perfect_matching(pair)?;
    let n = m.partner.len();
    if n < 2 {
        return Ok(m);
    }
    let mut r = rng.rng();
    for _ in 0..steps {
        let a = r.gen_range(0..n);
        let b = r.gen_range(0..n);
        if a == b || !r.gen_bool(0.5) {
            continue;
        }
        let (ya, yb) = (m.partner[a], m.partner[b]);
        if pair.has_edge(a, yb) && pair.has_edge(b, ya) {
            m.partner.swap(a, b);
        }
    }
    debug_assert!(m.is_valid_for(pair));
    Ok(m)
}

/// Default switch-chain length `⌈50·m·ln m⌉`.
pub fn default_mcmc_steps(m: usize) -> usize {
    ((50.0 * m as f64 * (m.max(2) as f64).ln()).ceil() as usize).max(1)
}

/// Sparsifies a super-regular pair to exact density `δ/2` and samples a
/// perfect matching of the result: exactly uniform when `m ≤ 24`, otherwise by
/// the switch chain with [`default_mcmc_steps`] steps. A thinned pair without
/// a perfect matching is re-extracted up to [`EXTRACTION_ATTEMPTS`] times.
///
/// The sparsification runs at `ε_ext = min(ε, (d0 − δ/2) / C)` so that its
/// slack condition `δ/2 + Cε_ext ≤ d0` holds for any admissible input.
pub fn sample_spread_matching(pair: &BipartitePair, eps: f64, delta: f64, rng: RngState) -> Result<Matching> {
    let m = check_square(pair)?;
    if m == 0 {
        return Ok(Matching { partner: vec![] });
    }
    if !check_super_regular(pair, eps, delta)? {
        return Err(Error::Precondition(format!("pair is not ({eps}, {delta})-super-regular")));
    }
    let mut last = None;
    for attempt in 0..EXTRACTION_ATTEMPTS {
        let sparse = match sparsify_for_matching(pair, eps, delta, rng.split("extract").child(attempt)) {
            Ok(s) => s,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        if find_perfect_matching(&sparse).is_err() {
            last = Some(Error::Infeasible("sparsified pair has no perfect matching".into()));
            continue;
        }
        let draw = rng.split("draw").child(attempt);
        let out = if m <= MAX_EXACT_SIDE {
            sample_uniform_matching_exact(&sparse, draw)?
        } else {
            sample_matching_mcmc(&sparse, default_mcmc_steps(m), draw)?
        };
        debug_assert!(out.is_valid_for(pair));
        return Ok(out);
    }
    Err(last.unwrap_or_else(|| Error::Infeasible("matching extraction failed".into())))
}

/// Independent re-extractions tried before giving up; small pairs can lose
/// every perfect matching when thinned to density `δ/2`.
pub const EXTRACTION_ATTEMPTS: u64 = 16;

/// The exact-density subgraph used by [`sample_spread_matching`].
pub fn sparsify_for_matching(pair: &BipartitePair, eps: f64, delta: f64, rng: RngState) -> Result<BipartitePair> {
    let d0 = pair.density()?.to_f64();
    let target = delta / 2.0;
    let mut params = ExtractionParams::new(target, eps);
    params.epsilon = eps.min(((d0 - target) / params.slack_constant).max(0.0));
    extract_exact_density_subgraph(pair, &params, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sample_bipartite;

    fn cycle8() -> BipartitePair {
        // x_i ~ y_i, y_{i+1}: an 8-cycle on 4 + 4 vertices.
        BipartitePair::from_edges(4, 4, (0..4).flat_map(|i| [(i, i), (i, (i + 1) % 4)])).unwrap()
    }

    fn k44_minus_pm() -> BipartitePair {
        BipartitePair::from_edges(4, 4, (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j))))
            .unwrap()
    }

    /// Independent oracle: enumerate all permutations.
    fn brute_count(p: &BipartitePair) -> u128 {
        fn rec(p: &BipartitePair, i: usize, used: &mut Vec<bool>) -> u128 {
            if i == p.mx() {
                return 1;
            }
            let mut total = 0;
            for j in 0..p.my() {
                if p.has_edge(i, j) && !used[j] {
                    used[j] = true;
                    total += rec(p, i + 1, used);
                    used[j] = false;
                }
            }
            total
        }
        rec(p, 0, &mut vec![false; p.my()])
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_perfect_matchings(&BipartitePair::complete(3, 3)).unwrap(), 6);
        assert_eq!(count_perfect_matchings(&cycle8()).unwrap(), 2);
        assert_eq!(count_perfect_matchings(&k44_minus_pm()).unwrap(), 9);
        assert_eq!(count_perfect_matchings(&BipartitePair::complete(12, 12)).unwrap(), 479_001_600);
        assert!(matches!(count_perfect_matchings(&BipartitePair::empty(25, 25)), Err(Error::Capability(_))));
    }

    #[test]
    fn count_matches_enumeration() {
        for seed in 0..20 {
            let p = sample_bipartite(6, 6, 0.6, RngState::new(seed)).unwrap();
            assert_eq!(count_perfect_matchings(&p).unwrap(), brute_count(&p));
        }
    }

    #[test]
    fn pin_examples() {
        assert_eq!(exact_pin_probability(&BipartitePair::complete(4, 4), 1, 2).unwrap().to_f64(), 0.25);
        assert_eq!(exact_pin_probability(&cycle8(), 2, 3).unwrap().to_f64(), 0.5);
        assert_eq!(exact_pin_probability(&k44_minus_pm(), 0, 1).unwrap(), Ratio::new(3, 9));
        assert_eq!(exact_pin_probability(&k44_minus_pm(), 0, 0).unwrap().num, 0);
    }

    #[test]
    fn pins_sum_to_one() {
        for seed in 0..30 {
            let m = 2 + (seed as usize % 5);
            let p = sample_bipartite(m, m, 0.7, RngState::new(seed)).unwrap();
            if count_perfect_matchings(&p).unwrap() == 0 {
                continue;
            }
            for x in 0..m {
                let total: u128 = (0..m).map(|y| exact_pin_probability(&p, x, y).unwrap().num).sum();
                assert_eq!(total, count_perfect_matchings(&p).unwrap());
            }
        }
    }

    #[test]
    fn complete_pair_two_pins() {
        for m in 2..=6 {
            let p = BipartitePair::complete(m, m);
            let r = exact_multi_pin_probability(&p, &[(0, 1), (1, 0)]).unwrap();
            assert_eq!(r.num * (m * (m - 1)) as u128, r.den);
        }
    }

    #[test]
    fn exact_sampler_edge_cases() {
        let one = sample_uniform_matching_exact(&BipartitePair::complete(1, 1), RngState::new(0)).unwrap();
        assert_eq!(one.partner, vec![0]);
        assert!(sample_uniform_matching_exact(&BipartitePair::empty(2, 2), RngState::new(0)).is_err());
    }

    #[test]
    fn mcmc_examples() {
        let k22 = BipartitePair::complete(2, 2);
        let mut ident = 0;
        for s in 0..2000 {
            let m = sample_matching_mcmc(&k22, 1000, RngState::new(5).child(s)).unwrap();
            assert!(m.is_valid_for(&k22));
            ident += (m.partner == vec![0, 1]) as usize;
        }
        assert!((ident as f64 / 2000.0 - 0.5).abs() < 0.05, "{ident}");
        // Lower-triangular biadjacency: unique perfect matching.
        let tri = BipartitePair::from_edges(4, 4, (0..4).flat_map(|i| (0..=i).map(move |j| (i, j)))).unwrap();
        assert_eq!(sample_matching_mcmc(&tri, 500, RngState::new(1)).unwrap().partner, vec![0, 1, 2, 3]);
        let mut iso = BipartitePair::complete(3, 3);
        for j in 0..3 {
            iso.remove_edge(1, j);
        }
        assert!(sample_matching_mcmc(&iso, 10, RngState::new(1)).is_err());
    }

    #[test]
    fn hopcroft_karp_sizes() {
        assert_eq!(hopcroft_karp(&cycle8()).iter().flatten().count(), 4);
        let star = BipartitePair::from_edges(3, 3, [(0, 0), (1, 0), (2, 0)]).unwrap();
        assert_eq!(hopcroft_karp(&star).iter().flatten().count(), 1);
    }

    #[test]
    fn spread_matching_complete() {
        let p = BipartitePair::complete(8, 8);
        let m = sample_spread_matching(&p, 0.1, 0.9, RngState::new(3)).unwrap();
        assert!(m.is_valid_for(&p));
        let mut bad = BipartitePair::complete(8, 8);
        for j in 0..8 {
            bad.remove_edge(0, j);
        }
        assert!(matches!(sample_spread_matching(&bad, 0.1, 0.5, RngState::new(3)), Err(Error::Precondition(_))));
    }
}
