//! Regularity and super-regularity testing, and exact-density sparsification
//! of super-regular pairs.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use std::cmp::Ordering;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::exact::{cmp_ratio_f64, f64_to_ratio};
use crate::graph::BipartitePair;
use crate::rng::RngState;

/// Default number of candidate subset pairs tried by the randomized irregularity search.
pub const DEFAULT_WITNESS_BUDGET: usize = 10_000;

/// Pairs with at most this many vertices in total are searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 16;

/// Sub-pair violating ε-regularity: positions into X and Y.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    /// Sub-pair density as a float, for reporting.
    pub density: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityVerdict {
    pub stat: BigUint,
    /// `d⁴|X|²|Y|² + ξ|X|²|Y|²`, for reporting only; `pass` is decided exactly.
    pub threshold: f64,
    pub pass: bool,
    pub witness: Option<Witness>,
}

/// `Σ_{x, x' ∈ X} codeg(x, x')²` over ordered pairs, diagonal included.
pub fn second_moment_stat(pair: &BipartitePair) -> BigUint {
    let mut total: u128 = 0;
    for i in 0..pair.mx() {
        let ri = pair.row(i);
        total += (ri.count() as u128).pow(2);
        for j in i + 1..pair.mx() {
            let c = ri.and_count(pair.row(j)) as u128;
            total += 2 * c * c;
        }
    }
    BigUint::from(total)
}

/// Codegree-square quasirandomness test, evaluated with exact integer arithmetic:
/// passes iff `S·|X|²|Y|² ≤ e⁴ + ξ|X|⁴|Y|⁴` where `e` is the edge count.
pub fn is_quasirandom(pair: &BipartitePair, xi: f64, d0: f64) -> Result<RegularityVerdict> {
    let d = pair.density()?;
    if !(d0 > 0.0) || d.to_f64() + 1e-12 < d0 {
        return Err(Error::Precondition(format!("pair density {:.4} below required minimum {d0}", d.to_f64())));
    }
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::Domain(format!("xi must be a finite non-negative number, got {xi}")));
    }
    let s = second_moment_stat(pair);
    let xy = BigUint::from(d.den);
    let xy2 = &xy * &xy;
    let e4 = BigUint::from(d.num).pow(4);
    let (xin, xid) = f64_to_ratio(xi);
    let lhs = &s * &xy2 * &xid;
    let rhs = e4 * &xid + xin * &xy2 * &xy2;
    let df = d.to_f64();
    let xyf = d.den as f64;
    Ok(RegularityVerdict { stat: s, threshold: (df.powi(4) + xi) * xyf * xyf, pass: lhs <= rhs, witness: None })
}

fn min_size(eps: f64, m: usize) -> usize {
    ((eps * m as f64).ceil() as usize).clamp(1, m.max(1))
}

/// `|d(X1, X2) − d(X, Y)|` as an exact ratio comparison against `eps`.
/// Returns the signed deviation (as f64, for ranking) when it exceeds `eps`.
fn violation(pair: &BipartitePair, xs: &[usize], ys: &BitSet, eps: f64) -> Option<f64> {
    let e_sub = xs.iter().map(|&i| pair.row(i).and_count(ys)).sum::<usize>() as u128;
    let sub = (xs.len() * ys.count()) as u128;
    if sub == 0 {
        return None;
    }
    let e = pair.edge_count() as u128;
    let all = (pair.mx() * pair.my()) as u128;
    let (a, b) = (e_sub * all, e * sub);
    let diff = a.abs_diff(b);
    if cmp_ratio_f64(diff, sub * all, eps) == Ordering::Greater {
        Some((a as f64 - b as f64) / (sub * all) as f64)
    } else {
        None
    }
}

#[derive(PartialEq)]
struct Ranked {
    dev: f64,
    size: usize,
    xs: Vec<usize>,
    ys: Vec<usize>,
}

impl Ranked {
    /// Larger deviation wins; ties prefer sparser-than-average, then fewer vertices.
    fn better_than(&self, other: &Ranked) -> bool {
        let (a, b) = (self.dev.abs(), other.dev.abs());
        if (a - b).abs() > 1e-12 {
            return a > b;
        }
        if (self.dev < 0.0) != (other.dev < 0.0) {
            return self.dev < 0.0;
        }
        self.size < other.size
    }
}

/// Searches for a sub-pair `(X1, X2)` with `|Xi| ≥ ε|Ai|` whose density deviates
/// from the pair density by more than `ε`.
///
/// Exhaustive when `|X| + |Y| ≤ 16`; otherwise tries `budget` candidates built
/// from degree-sorted prefixes and suffixes followed by uniformly random subsets.
/// `None` means nothing was found, which does not certify regularity.
pub fn witness_irregularity(pair: &BipartitePair, eps: f64, budget: usize, rng: RngState) -> Option<Witness> {
    let (mx, my) = (pair.mx(), pair.my());
    if mx == 0 || my == 0 || budget == 0 {
        return None;
    }
    let (sx, sy) = (min_size(eps, mx), min_size(eps, my));
    let mut best: Option<Ranked> = None;
    let consider = |xs: Vec<usize>, ys: BitSet, best: &mut Option<Ranked>| {
        if xs.len() < sx || ys.count() < sy {
            return;
        }
        if let Some(dev) = violation(pair, &xs, &ys, eps) {
            let cand = Ranked { dev, size: xs.len() + ys.count(), ys: ys.to_vec(), xs };
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                *best = Some(cand);
            }
        }
    };

    if mx + my <= EXHAUSTIVE_LIMIT {
        for xmask in 1u32..(1 << mx) {
            if (xmask.count_ones() as usize) < sx {
                continue;
            }
            let xs: Vec<usize> = (0..mx).filter(|i| xmask >> i & 1 == 1).collect();
            for ymask in 1u32..(1 << my) {
                if (ymask.count_ones() as usize) < sy {
                    continue;
                }
                let ys = BitSet::from_indices(my, (0..my).filter(|j| ymask >> j & 1 == 1));
                consider(xs.clone(), ys, &mut best);
            }
        }
    } else {
        let mut r = rng.rng();
        let mut x_order: Vec<usize> = (0..mx).collect();
        x_order.sort_by_key(|&i| (pair.x_degree(i), i));
        let mut y_order: Vec<usize> = (0..my).collect();
        y_order.sort_by_key(|&j| (pair.y_degree(j), j));
        let mut tried = 0usize;
        // Degree-sorted prefixes and suffixes at a few sizes.
        'prefix: for &fx in &[sx, (sx + mx) / 2, mx] {
            for &fy in &[sy, (sy + my) / 2, my] {
                for (xs_lo, ys_lo) in [(true, true), (true, false), (false, true), (false, false)] {
                    if tried >= budget {
                        break 'prefix;
                    }
                    tried += 1;
                    let xs: Vec<usize> = if xs_lo { x_order[..fx].to_vec() } else { x_order[mx - fx..].to_vec() };
                    let ys = if ys_lo { &y_order[..fy] } else { &y_order[my - fy..] };
                    consider(xs, BitSet::from_indices(my, ys.iter().copied()), &mut best);
                }
            }
        }
        while tried < budget {
            tried += 1;
            let kx = r.gen_range(sx..=mx);
            let mut xs: Vec<usize> = (0..mx).collect();
            xs.shuffle(&mut r);
            xs.truncate(kx);
            xs.sort_unstable();
            let ky = r.gen_range(sy..=my);
            let mut ys: Vec<usize> = (0..my).collect();
            ys.shuffle(&mut r);
            consider(xs, BitSet::from_indices(my, ys[..ky].iter().copied()), &mut best);
        }
    }
    best.map(|b| {
        let ys = BitSet::from_indices(my, b.ys.iter().copied());
        let density = pair.sub_density(&b.xs, &ys).to_f64();
        Witness { xs: b.xs, ys: b.ys, density }
    })
}

/// The `ξ(ε, d) = ε·d⁴` mapping used inside super-regularity checks.
pub fn xi_for(eps: f64, d: f64) -> f64 {
    eps * d.powi(4)
}

fn require_square(pair: &BipartitePair) -> Result<usize> {
    if pair.mx() != pair.my() {
        return Err(Error::Precondition(format!("pair sides differ: {} vs {}", pair.mx(), pair.my())));
    }
    Ok(pair.mx())
}

/// Every vertex has at least `δN` neighbours on the other side.
pub fn min_degree_ok(pair: &BipartitePair, delta: f64) -> bool {
    let n = pair.mx() as u128;
    let ok = |deg: usize| cmp_ratio_f64(deg as u128, n.max(1), delta) != Ordering::Less;
    (0..pair.mx()).all(|i| ok(pair.x_degree(i))) && (0..pair.my()).all(|j| ok(pair.y_degree(j)))
}

/// (ε, δ)-super-regularity: the degree floor, the quasirandom criterion at
/// `ξ = ε·d⁴`, and no irregularity witness within the default budget.
pub fn check_super_regular(pair: &BipartitePair, eps: f64, delta: f64) -> Result<bool> {
    let n = require_square(pair)?;
    if n == 0 {
        return Ok(true);
    }
    if !min_degree_ok(pair, delta) {
        return Ok(false);
    }
    let d = pair.density()?.to_f64();
    if d == 0.0 {
        return Ok(false);
    }
    if !is_quasirandom(pair, xi_for(eps, d), d)?.pass {
        return Ok(false);
    }
    Ok(witness_irregularity(pair, eps, DEFAULT_WITNESS_BUDGET, RngState::new(0x5eed).split("witness")).is_none())
}

/// Components of the ε-super-regularity check, reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EpsSuperRegularReport {
    pub degrees_ok: bool,
    pub quasirandom_ok: bool,
}

impl EpsSuperRegularReport {
    pub fn pass(&self) -> bool {
        self.degrees_ok && self.quasirandom_ok
    }
}

pub fn eps_super_regular_report(pair: &BipartitePair, eps: f64) -> Result<EpsSuperRegularReport> {
    let n = require_square(pair)?;
    if n == 0 {
        return Ok(EpsSuperRegularReport { degrees_ok: true, quasirandom_ok: true });
    }
    let d = pair.density()?;
    // (d − ε)N ≤ deg ≤ (d + ε)N  ⇔  |deg·|X||Y| − e·N| ≤ ε·N·|X||Y|
    let nn = n as u128;
    let within = |deg: usize| {
        let diff = (deg as u128 * d.den).abs_diff(d.num * nn);
        cmp_ratio_f64(diff, nn * d.den, eps) != Ordering::Greater
    };
    let degrees_ok = (0..n).all(|i| within(pair.x_degree(i))) && (0..n).all(|j| within(pair.y_degree(j)));
    let df = d.to_f64();
    let quasirandom_ok = df > 0.0 && is_quasirandom(pair, xi_for(eps, df), df)?.pass;
    Ok(EpsSuperRegularReport { degrees_ok, quasirandom_ok })
}

/// ε-super-regularity: all degrees within `εN` of `dN` and the quasirandom criterion.
pub fn check_eps_super_regular(pair: &BipartitePair, eps: f64) -> Result<bool> {
    Ok(eps_super_regular_report(pair, eps)?.pass())
}

/// Parameters of the exact-density sparsification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ExtractionParams {
    pub target_density: f64,
    pub epsilon: f64,
    /// `C` in `d = d̄ + Cε`.
    pub slack_constant: f64,
    /// Maximum number of edges removed around any single vertex in the final trimming stage.
    pub per_vertex_removal_cap: Option<usize>,
}

impl ExtractionParams {
    pub const DEFAULT_SLACK: f64 = 8.0;

    pub fn new(target_density: f64, epsilon: f64) -> Self {
        ExtractionParams { target_density, epsilon, slack_constant: Self::DEFAULT_SLACK, per_vertex_removal_cap: None }
    }

    /// The explicit cap `⌈2Cε N⌉ + 1` unless overridden.
    pub fn cap_for(&self, n: usize) -> usize {
        self.per_vertex_removal_cap
            .unwrap_or_else(|| (2.0 * self.slack_constant * self.epsilon * n as f64).ceil() as usize + 1)
    }

    /// Degree window half-width constant `C' = C + 2`: output degrees lie in `(d̄ ± C'ε)N`
    /// whenever the default cap is used and no stage fails.
    pub fn degree_window_constant(&self) -> f64 {
        self.slack_constant + 2.0
    }

    /// The intermediate density `d = d̄ + Cε`.
    pub fn working_density(&self) -> f64 {
        self.target_density + self.slack_constant * self.epsilon
    }
}

/// Half-width of the degree band, as a fraction of `N`, outside which stage-two
/// vertices get repaired: `max(2ε, 2σ)`, where `σ√N` is the standard deviation
/// of a degree after thinning at rate `d / d0`.
pub fn repair_band(d: f64, d0: f64, eps: f64, n: usize) -> f64 {
    let keep = (d / d0).min(1.0);
    let sigma = (d * (1.0 - keep) / n.max(1) as f64).sqrt();
    (2.0 * eps).max(2.0 * sigma)
}

/// Round-half-up of a non-negative real.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Spanning subgraph of a super-regular pair with exactly `round(d̄N²)` edges and
/// near-uniform degrees.
///
/// Stages: independent thinning to density `d = d̄ + Cε`; repair of vertices whose
/// degree left `(d ± 2ε)N` using edges toward the well-behaved remainder; greedy
/// trimming to the exact edge count under a per-vertex removal cap.
pub fn extract_exact_density_subgraph(
    pair: &BipartitePair,
    params: &ExtractionParams,
    rng: RngState,
) -> Result<BipartitePair> {
    let n = require_square(pair)?;
    if n == 0 {
        return Ok(pair.clone());
    }
    let d0 = pair.density()?.to_f64();
    let d = params.working_density();
    if !(params.target_density > 0.0) || !(params.epsilon >= 0.0) {
        return Err(Error::Domain("target density must be positive and epsilon non-negative".into()));
    }
    if d > d0 + 1e-12 {
        return Err(Error::Precondition(format!(
            "target density {} plus slack {}·{} exceeds input density {d0:.4}",
            params.target_density, params.slack_constant, params.epsilon
        )));
    }
    let nf = n as f64;
    let target_edges = round_half_up(params.target_density * nf * nf);
    let target_deg = round_half_up(d * nf);
    let mut r = rng.rng();

    // Stage 1: keep each edge with probability d / d0.
    let keep = (d / d0).min(1.0);
    let mut out = BipartitePair::empty(n, n).with_labels(pair.x_labels().to_vec(), pair.y_labels().to_vec());
    for (i, j) in pair.edges() {
        if r.gen_bool(keep) {
            out.add_edge(i, j);
        }
    }

    // Stage 2: vertices with degree outside (d ± 2ε)N, per side.
    let band = repair_band(d, d0, params.epsilon, n);
    let lo = (d - band) * nf;
    let hi = (d + band) * nf;
    let classify = |deg: usize| -> i8 {
        if (deg as f64) < lo {
            -1
        } else if (deg as f64) > hi {
            1
        } else {
            0
        }
    };
    let x_cls: Vec<i8> = (0..n).map(|i| classify(out.x_degree(i))).collect();
    let y_cls: Vec<i8> = (0..n).map(|j| classify(out.y_degree(j))).collect();
    let x_mid = BitSet::from_indices(n, (0..n).filter(|&i| x_cls[i] == 0));
    let y_mid = BitSet::from_indices(n, (0..n).filter(|&j| y_cls[j] == 0));

    // Stage 3: low vertices gain original edges toward the middle; high vertices shed edges toward it.
    for want in [-1i8, 1] {
        for side in [0u8, 1] {
            for v in 0..n {
                let (cls, mid) = if side == 0 { (x_cls[v], &y_mid) } else { (y_cls[v], &x_mid) };
                if cls != want {
                    continue;
                }
                let (cur_row, orig_row) = if side == 0 { (out.row(v), pair.row(v)) } else { (out.col(v), pair.col(v)) };
                let deg = cur_row.count();
                let mut pool: Vec<usize> = if want < 0 {
                    orig_row.iter().filter(|&u| mid.contains(u) && !cur_row.contains(u)).collect()
                } else {
                    cur_row.iter().filter(|&u| mid.contains(u)).collect()
                };
                let need = deg.abs_diff(target_deg);
                if pool.len() < need {
                    return Err(Error::embedding(
                        crate::error::Stage::PhaseTwo,
                        format!("extraction: vertex {v} (side {side}, degree {deg}, pool {}) cannot be repaired to degree {target_deg}", pool.len()),
                    ));
                }
                pool.shuffle(&mut r);
                for &u in &pool[..need] {
                    let (i, j) = if side == 0 { (v, u) } else { (u, v) };
                    if want < 0 {
                        out.add_edge(i, j);
                    } else {
                        out.remove_edge(i, j);
                    }
                }
            }
        }
    }

    // Stage 4: trim to the exact count, always cutting at a maximum-degree vertex.
    let cur = out.edge_count();
    if cur < target_edges {
        return Err(Error::Precondition(format!(
            "after repair only {cur} edges remain, below the target {target_edges}; increase the slack constant"
        )));
    }
    let cap = params.cap_for(n);
    let mut removed_x = vec![0usize; n];
    let mut removed_y = vec![0usize; n];
    let mut deg_x: Vec<usize> = (0..n).map(|i| out.x_degree(i)).collect();
    let mut deg_y: Vec<usize> = (0..n).map(|j| out.y_degree(j)).collect();
    for _ in target_edges..cur {
        // Best edge: maximise the pair (max endpoint degree, other endpoint degree).
        let mut best: Option<(usize, usize, usize, usize)> = None; // (hi, lo, i, j)
        for i in 0..n {
            if removed_x[i] >= cap {
                continue;
            }
            for j in out.row(i).iter() {
                if removed_y[j] >= cap {
                    continue;
                }
                let (a, b) = (deg_x[i], deg_y[j]);
                let key = (a.max(b), a.min(b));
                let better = match best {
                    None => true,
                    Some((h, l, _, _)) => key > (h, l),
                };
                if better {
                    best = Some((key.0, key.1, i, j));
                }
            }
        }
        let Some((_, _, i, j)) = best else {
            return Err(Error::Infeasible(format!(
                "extraction: per-vertex removal cap {cap} exhausted before reaching {target_edges} edges"
            )));
        };
        out.remove_edge(i, j);
        deg_x[i] -= 1;
        deg_y[j] -= 1;
        removed_x[i] += 1;
        removed_y[j] += 1;
    }
    debug_assert_eq!(out.edge_count(), target_edges);
    Ok(out)
}
