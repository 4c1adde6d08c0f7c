//! Vertex-spread certification for injection samplers.
//!
//! A distribution over injections `φ: X → Y` is `q`-vertex-spread when any `k`
//! simultaneous pins `φ(x_i) = y_i` have probability at most `q^k`. The
//! estimators here measure single pins exhaustively and pairs of pins on a
//! probe set registered before sampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{BipartitePair, Ratio};
use crate::matchings::{count_perfect_matchings, exact_multi_pin_probability};
use crate::rng::RngState;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Number of single-pin entries kept in a report, largest first.
pub const K1_TABLE_LEN: usize = 32;

/// Wilson score interval `(lower, upper)` for `successes / n`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// A pre-registered pair of pins `φ(x1) = y1 ∧ φ(x2) = y2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PinPair {
    pub x1: usize,
    pub y1: usize,
    pub x2: usize,
    pub y2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinFrequency {
    pub x: usize,
    pub y: usize,
    pub freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    pub sample_count: u64,
    pub failures: u64,
    /// Largest single-pin frequencies, descending.
    pub k1_table: Vec<PinFrequency>,
    pub k1_max_freq: f64,
    pub k2_max_freq: f64,
    pub k2_probes: usize,
    /// Normalizer `N` in `c1 = N·max k1` and `c2 = N·sqrt(max k2)`.
    pub scale: f64,
    pub c1: f64,
    pub c2: f64,
    /// Wilson 95% upper bound on the max single-pin frequency.
    pub wilson_upper: f64,
    /// `scale · wilson_upper`.
    pub c1_upper: f64,
}

/// Order-independent pin counts over a batch of injections.
#[derive(Debug, Clone, Default)]
pub struct SpreadTally {
    pub successes: u64,
    pub failures: u64,
    pub k1: HashMap<(usize, usize), u64>,
    pub probes: Vec<PinPair>,
    pub k2: Vec<u64>,
}

impl SpreadTally {
    pub fn new(probes: Vec<PinPair>) -> Self {
        let k2 = vec![0; probes.len()];
        SpreadTally { probes, k2, ..Default::default() }
    }

    /// Records one injection given as `image[x] = φ(x)`.
    pub fn record(&mut self, image: &[usize]) {
        self.successes += 1;
        for (x, &y) in image.iter().enumerate() {
            *self.k1.entry((x, y)).or_insert(0) += 1;
        }
        for (c, p) in self.k2.iter_mut().zip(&self.probes) {
            if image.get(p.x1) == Some(&p.y1) && image.get(p.x2) == Some(&p.y2) {
                *c += 1;
            }
        }
    }

    pub fn record_failure(&mut self) {
        self.failures += 1;
    }

    pub fn merge(mut self, other: SpreadTally) -> SpreadTally {
        debug_assert_eq!(self.probes, other.probes);
        self.successes += other.successes;
        self.failures += other.failures;
        for (k, v) in other.k1 {
            *self.k1.entry(k).or_insert(0) += v;
        }
        for (a, b) in self.k2.iter_mut().zip(other.k2) {
            *a += b;
        }
        self
    }

    /// Frequencies are taken over successful draws.
    pub fn report(&self, scale: f64) -> SpreadReport {
        let n = self.successes.max(1) as f64;
        let mut entries: Vec<(&(usize, usize), &u64)> = self.k1.iter().collect();
        entries.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let max1 = entries.first().map_or(0, |e| *e.1);
        let max2 = self.k2.iter().copied().max().unwrap_or(0);
        let (_, upper) = wilson_interval(max1, self.successes, Z95);
        let k1_max_freq = max1 as f64 / n;
        let k2_max_freq = max2 as f64 / n;
        SpreadReport {
            sample_count: self.successes,
            failures: self.failures,
            k1_table: entries
                .iter()
                .take(K1_TABLE_LEN)
                .map(|(&(x, y), &c)| PinFrequency { x, y, freq: c as f64 / n })
                .collect(),
            k1_max_freq,
            k2_max_freq,
            k2_probes: self.probes.len(),
            scale,
            c1: scale * k1_max_freq,
            c2: scale * k2_max_freq.sqrt(),
            wilson_upper: upper,
            c1_upper: scale * upper,
        }
    }
}

/// Settings for [`estimate_vertex_spread`].
#[derive(Debug, Clone)]
pub struct SpreadConfig {
    pub domain_size: usize,
    pub codomain_size: usize,
    pub samples: usize,
    pub pair_probes: usize,
    /// Normalizer for the spread constants; defaults to the codomain size.
    pub scale: Option<f64>,
    /// Optional allowed images per domain element; probes then only pin
    /// elements to allowed images.
    pub allowed: Option<Vec<Vec<usize>>>,
}

impl SpreadConfig {
    pub fn new(domain_size: usize, codomain_size: usize, samples: usize, pair_probes: usize) -> Self {
        SpreadConfig { domain_size, codomain_size, samples, pair_probes, scale: None, allowed: None }
    }
}

/// Draws `count` uniformly random pin pairs with distinct domain elements and
/// distinct images.
pub fn register_probes(cfg: &SpreadConfig, count: usize, rng: RngState) -> Vec<PinPair> {
    let mut r = rng.rng();
    let mut out = Vec::with_capacity(count);
    if cfg.domain_size < 2 || cfg.codomain_size < 2 {
        return out;
    }
    let pick_y = |x: usize, r: &mut rand_chacha::ChaCha8Rng| -> Option<usize> {
        match &cfg.allowed {
            Some(a) => a[x].choose(r).copied(),
            None => Some(r.gen_range(0..cfg.codomain_size)),
        }
    };
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let x1 = r.gen_range(0..cfg.domain_size);
        let x2 = r.gen_range(0..cfg.domain_size);
        if x1 == x2 {
            continue;
        }
        let (Some(y1), Some(y2)) = (pick_y(x1, &mut r), pick_y(x2, &mut r)) else { continue };
        if y1 != y2 {
            out.push(PinPair { x1, y1, x2, y2 });
        }
    }
    out
}

/// Runs `sampler` `cfg.samples` times on independent child streams (in
/// parallel), tallying single pins and the pre-registered pin pairs.
///
/// Fails when more than half of the draws fail.
pub fn estimate_vertex_spread<F>(sampler: F, cfg: &SpreadConfig, rng: RngState) -> Result<SpreadReport>
where
    F: Fn(RngState) -> Result<Vec<usize>> + Sync,
{
    if cfg.samples < 100 {
        return Err(Error::Domain(format!("spread estimation needs at least 100 samples, got {}", cfg.samples)));
    }
    let probes = register_probes(cfg, cfg.pair_probes, rng.split("probes"));
    let draws = rng.split("draws");
    let tally = (0..cfg.samples as u64)
        .into_par_iter()
        .fold(
            || SpreadTally::new(probes.clone()),
            |mut t, i| {
                match sampler(draws.child(i)) {
                    Ok(image) => t.record(&image),
                    Err(_) => t.record_failure(),
                }
                t
            },
        )
        .reduce(|| SpreadTally::new(probes.clone()), SpreadTally::merge);
    if tally.failures * 2 > cfg.samples as u64 {
        return Err(Error::Embedding {
            stage: crate::error::Stage::PhaseOne,
            message: format!("sampler failed on {} of {} draws; spread report aborted", tally.failures, cfg.samples),
        });
    }
    Ok(tally.report(cfg.scale.unwrap_or(cfg.codomain_size as f64)))
}

/// Exact pin probabilities of the uniform perfect-matching law.
#[derive(Debug, Clone, Serialize)]
pub struct ExactSpreadTable {
    pub m: usize,
    /// `pins[x][y] = Pr[φ(x) = y]`.
    pub pins: Vec<Vec<Ratio>>,
    pub max1: Ratio,
    /// Max over ordered pin pairs with distinct X and distinct Y; present when `kmax = 2`.
    pub max2: Option<Ratio>,
    /// `m · max1`.
    pub c1: Ratio,
    /// `m · sqrt(max2)`.
    pub c2: Option<f64>,
}

impl ExactSpreadTable {
    /// Exact probability of a two-pin event (recomputed, not cached).
    pub fn pair_probability(pair: &BipartitePair, p: PinPair) -> Result<Ratio> {
        exact_multi_pin_probability(pair, &[(p.x1, p.y1), (p.x2, p.y2)])
    }
}

/// Largest side accepted by [`exact_spread_uniform_matching`].
pub const MAX_EXACT_SPREAD_SIDE: usize = 12;

pub fn exact_spread_uniform_matching(pair: &BipartitePair, kmax: usize) -> Result<ExactSpreadTable> {
    if !(1..=2).contains(&kmax) {
        return Err(Error::Domain(format!("kmax must be 1 or 2, got {kmax}")));
    }
    let m = pair.mx();
    if m != pair.my() {
        return Err(Error::Domain("exact spread needs a square pair".into()));
    }
    if m > MAX_EXACT_SPREAD_SIDE {
        return Err(Error::Capability(format!(
            "exact spread tables are limited to {MAX_EXACT_SPREAD_SIDE} vertices per side (got {m})"
        )));
    }
    let total = count_perfect_matchings(pair)?;
    if total == 0 {
        return Err(Error::Precondition("pair has no perfect matching".into()));
    }
    let mut pins = vec![vec![Ratio::new(0, total); m]; m];
    for (x, row) in pins.iter_mut().enumerate() {
        for (y, slot) in row.iter_mut().enumerate() {
            if pair.has_edge(x, y) {
                *slot = Ratio::new(count_perfect_matchings(&pair.delete(&[x], &[y]))?, total);
            }
        }
    }
    let max1 = pins.iter().flatten().copied().max().unwrap_or(Ratio::new(0, 1));
    let max2 = if kmax == 2 {
        let support: Vec<(usize, usize)> =
            (0..m).flat_map(|x| (0..m).map(move |y| (x, y))).filter(|&(x, y)| pins[x][y].num > 0).collect();
        let mut best = 0u128;
        for (i, &(x1, y1)) in support.iter().enumerate() {
            for &(x2, y2) in support[i + 1..].iter().filter(|&&(x2, y2)| x2 > x1 && y2 != y1) {
                best = best.max(count_perfect_matchings(&pair.delete(&[x1, x2], &[y1, y2]))?);
            }
        }
        Some(Ratio::new(best, total))
    } else {
        None
    };
    let c1 = Ratio::new(max1.num * m as u128, max1.den);
    let c2 = max2.map(|r| m as f64 * r.to_f64().sqrt());
    Ok(ExactSpreadTable { m, pins, max1, max2, c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matchings::MatchingCountTable;

    #[test]
    fn wilson_brackets_point_estimate() {
        for &(s, n) in &[(0u64, 100u64), (5, 100), (50, 100), (100, 100), (1, 10_000)] {
            let (lo, hi) = wilson_interval(s, n, Z95);
            let p = s as f64 / n as f64;
            assert!(lo <= p + 1e-15 && p <= hi + 1e-15, "{s}/{n}: [{lo}, {hi}]");
        }
    }

    #[test]
    fn constant_sampler_is_degenerate() {
        let cfg = SpreadConfig::new(2, 5, 200, 10);
        let r = estimate_vertex_spread(|_| Ok(vec![3, 1]), &cfg, RngState::new(1)).unwrap();
        assert_eq!(r.k1_max_freq, 1.0);
        assert_eq!(r.c1, 5.0);
        assert!(r.wilson_upper >= r.k1_max_freq);
    }

    #[test]
    fn too_few_samples_or_failures_abort() {
        let cfg = SpreadConfig::new(2, 2, 50, 0);
        assert!(estimate_vertex_spread(|_| Ok(vec![0, 1]), &cfg, RngState::new(1)).is_err());
        let cfg = SpreadConfig::new(2, 2, 200, 0);
        let r = estimate_vertex_spread(|_| Err(Error::Infeasible("x".into())), &cfg, RngState::new(1));
        assert!(r.is_err());
    }

    #[test]
    fn uniform_k44_pin_frequency() {
        let pair = BipartitePair::complete(4, 4);
        let table = MatchingCountTable::new(&pair).unwrap();
        let cfg = SpreadConfig::new(4, 4, 20_000, 50);
        let r = estimate_vertex_spread(|s| Ok(table.sample(&mut s.rng())?.partner), &cfg, RngState::new(4)).unwrap();
        assert!((r.k1_max_freq - 0.25).abs() < 0.02, "{}", r.k1_max_freq);
        assert!(r.c1 < 1.1);
    }

    #[test]
    fn tally_rows_sum_to_success_count() {
        let pair = BipartitePair::complete(5, 5);
        let table = MatchingCountTable::new(&pair).unwrap();
        let mut t = SpreadTally::new(vec![]);
        for i in 0..300 {
            t.record(&table.sample(&mut RngState::new(2).child(i).rng()).unwrap().partner);
        }
        for x in 0..5 {
            let s: u64 = (0..5).map(|y| t.k1.get(&(x, y)).copied().unwrap_or(0)).sum();
            assert_eq!(s, t.successes);
        }
    }

    #[test]
    fn exact_table_examples() {
        let k = exact_spread_uniform_matching(&BipartitePair::complete(4, 4), 2).unwrap();
        assert!(k.pins.iter().flatten().all(|r| *r == Ratio::new(6, 24)));
        assert_eq!(k.c1.num, k.c1.den);
        assert_eq!(k.max2.unwrap(), Ratio::new(2, 24));
        let c8 = BipartitePair::from_edges(4, 4, (0..4).flat_map(|i| [(i, i), (i, (i + 1) % 4)])).unwrap();
        let same = ExactSpreadTable::pair_probability(&c8, PinPair { x1: 0, y1: 0, x2: 1, y2: 1 }).unwrap();
        assert_eq!(same.to_f64(), 0.5);
        let diff = ExactSpreadTable::pair_probability(&c8, PinPair { x1: 0, y1: 0, x2: 1, y2: 2 }).unwrap();
        assert_eq!(diff.num, 0);
    }

    #[test]
    fn exact_c1_of_complete_pairs_is_one() {
        for m in 1..=9 {
            let t = exact_spread_uniform_matching(&BipartitePair::complete(m, m), 1).unwrap();
            assert_eq!(t.c1.num, t.c1.den, "m = {m}");
        }
    }
}
