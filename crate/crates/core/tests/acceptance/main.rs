//! Acceptance harness: one PASS/FAIL line per criterion.
//!
//! Runs every criterion, then re-runs them and compares their structured
//! outputs byte for byte (criterion 12). Exits non-zero on any FAIL only when
//! `SPREADBLOW_ACCEPTANCE_STRICT=1`, so that `cargo test` still reaches the
//! remaining test targets; the report lines are the verdict.

#[path = "../common/mod.rs"]
mod common;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use spreadblow::blowup::{embed, verify_embedding, ParamSet, TargetSpec};
use spreadblow::hamilton::{
    check_claim_count_edge, completion_graph, estimate_edge_spread, hamilton_sampler, perturbed_trial, HamiltonConfig,
    XiGoodSampler,
};
use spreadblow::instances::{
    add_restrictions, clique_factor_with_path_power, complete_reduced, hamilton_host, super_regular_class_system,
};
use spreadblow::matchings::{exact_pin_probability, sample_uniform_matching_exact, MatchingCountTable};
use spreadblow::reduced::{
    construct_star_partition, exhaustive_star_partition, refine_to_k_stars, star_partition, Star, StarPartition,
};
use spreadblow::regularity::{extract_exact_density_subgraph, is_quasirandom, ExtractionParams};
use spreadblow::spreadstat::{estimate_vertex_spread, exact_spread_uniform_matching, wilson_interval, SpreadConfig};
use spreadblow::{sample_bipartite, sample_gnp, BipartitePair, ClassSystem, Graph, RngState};

/// Thresholds and budgets, as stated by the criteria.
mod tol {
    pub const CHI2_ALPHA: f64 = 0.001;
    pub const LAW_SAMPLES: usize = 10_000;
    pub const ORACLE_SAMPLES: u64 = 10_000;
    /// Family-wise confidence of the Wilson intervals in criterion 2.
    pub const WILSON_CONFIDENCE: f64 = 0.95;
    pub const EXTRACT_EDGES: usize = 3000;
    pub const EXTRACT_DEGREES: (usize, usize) = (25, 35);
    pub const EXTRACT_XI: f64 = 0.05;
    pub const QUASI_XI: f64 = 0.01;
    pub const TWO_BLOCK_STAT: u32 = 32;
    pub const TWO_BLOCK_THRESHOLD: f64 = 18.56;
    pub const BLOWUP_SEEDS: u64 = 100;
    pub const BLOWUP_MIN_SUCCESS: usize = 95;
    pub const SPREAD_SAMPLES: usize = 2000;
    pub const SPREAD_PROBES: usize = 1000;
    pub const SPREAD_C1: f64 = 20.0;
    pub const STAR_GRAPHS: usize = 100;
    pub const CLAIM_SAMPLES: u64 = 10;
    pub const CLAIM_VMAX: usize = 8;
    pub const DECAY_SAMPLES: usize = 10_000;
    pub const DECAY_TMAX: usize = 4;
    pub const DECAY_T1_MAX: f64 = 0.2;
    pub const TRIAL_PS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
    pub const TRIALS: usize = 50;
    pub const PHI_TRIES: usize = 200;
}

struct Outcome {
    pass: bool,
    summary: String,
    /// Structured output compared across re-runs.
    output: Value,
}

fn outcome(pass: bool, summary: impl Into<String>, output: Value) -> Outcome {
    Outcome { pass, summary: summary.into(), output }
}

fn fail(summary: impl Into<String>) -> Outcome {
    let summary = summary.into();
    outcome(false, summary.clone(), json!({ "error": summary }))
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    (1, "matching-law exactness on K4,4", Duration::from_secs(5), matching_law),
    (2, "pin frequencies vs exact oracle", Duration::from_secs(60), oracle_equivalence),
    (3, "exact-density extraction", Duration::from_secs(5), extraction),
    (4, "quasirandom criterion fixtures", Duration::MAX, quasirandom_fixtures),
    (5, "blow-up correctness on the regression instance", Duration::from_secs(120), blowup_correctness),
    (6, "blow-up vertex-spread surrogate", Duration::from_secs(1800), blowup_spread),
    (7, "star partitions", Duration::from_secs(120), star_partitions),
    (8, "refinement invariants", Duration::MAX, refinement),
    (9, "Claim 3.6 edge counts on ξ-good samples", Duration::from_secs(600), claim_enumeration),
    (10, "edge-spread decay surrogate", Duration::from_secs(1200), decay),
    (11, "perturbed-graph desk surrogate", Duration::from_secs(3600), perturbed),
];

fn main() {
    let mut first = Vec::new();
    let mut failures = 0;
    for &(id, name, limit, run) in &CRITERIA {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= limit;
        let budget = if limit == Duration::MAX { String::new() } else { format!(" / {}s", limit.as_secs()) };
        println!(
            "{} #{id} {name}: {} [{:.1}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.summary,
            elapsed.as_secs_f64()
        );
        failures += usize::from(!pass);
        first.push(serde_json::to_string(&o.output).unwrap());
    }
    let start = Instant::now();
    let differing: Vec<usize> = CRITERIA
        .iter()
        .zip(&first)
        .filter(|((_, _, _, run), out)| serde_json::to_string(&run().output).unwrap() != **out)
        .map(|((id, ..), _)| *id)
        .collect();
    let pass = differing.is_empty();
    println!(
        "{} #12 determinism: {} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        if pass {
            "all 11 criteria reproduce byte-identical output".to_string()
        } else {
            format!("outputs differ for {differing:?}")
        },
        start.elapsed().as_secs_f64()
    );
    failures += usize::from(!pass);
    println!("acceptance: {} PASS, {failures} FAIL", 12 - failures);
    if failures > 0 && std::env::var("SPREADBLOW_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    permutations(m - 1)
        .into_iter()
        .flat_map(|p| {
            (0..m).map(move |i| {
                let mut q = p.clone();
                q.insert(i, m - 1);
                q
            })
        })
        .collect()
}

fn matching_law() -> Outcome {
    let pair = BipartitePair::complete(4, 4);
    let index: HashMap<Vec<usize>, usize> = permutations(4).into_iter().enumerate().map(|(i, p)| (p, i)).collect();
    let rng = RngState::new(1).split("k44");
    let mut counts = [0usize; 24];
    for s in 0..tol::LAW_SAMPLES as u64 {
        counts[index[&sample_uniform_matching_exact(&pair, rng.child(s)).unwrap().partner]] += 1;
    }
    let expected = tol::LAW_SAMPLES as f64 / 24.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(23.0).unwrap().inverse_cdf(1.0 - tol::CHI2_ALPHA);
    let quarter = (0..4).all(|x| {
        (0..4).all(|y| {
            let r = exact_pin_probability(&pair, x, y).unwrap();
            4 * r.num == r.den
        })
    });
    outcome(
        chi2 < critical && quarter,
        format!(
            "chi2 = {chi2:.2} vs {critical:.2} (df 23, α = {}); every pin probability 1/4: {quarter}",
            tol::CHI2_ALPHA
        ),
        json!({ "counts": counts.to_vec(), "chi2": chi2, "quarter": quarter }),
    )
}

// ---------------------------------------------------------------- 2

fn oracle_fixtures() -> Vec<(String, BipartitePair)> {
    let mut out = Vec::new();
    let root = RngState::new(2).split("fixtures");
    for i in 0..20u64 {
        let m = 2 + (i as usize % 5);
        let p = 0.5 + 0.1 * (i % 4) as f64;
        let pair = (0..)
            .map(|draw| sample_bipartite(m, m, p, root.child(i).child(draw)).unwrap())
            .find(|g| MatchingCountTable::new(g).unwrap().total() > 0)
            .unwrap();
        out.push((format!("random-{i} (m={m}, p={p:.1})"), pair));
    }
    let structured = |m: usize, adj: &dyn Fn(usize, usize) -> bool| {
        BipartitePair::from_edges(m, m, (0..m).flat_map(|x| (0..m).map(move |y| (x, y))).filter(|&(x, y)| adj(x, y)))
            .unwrap()
    };
    out.push(("K6,6".into(), BipartitePair::complete(6, 6)));
    out.push(("perfect matching m=6".into(), structured(6, &|x, y| x == y)));
    out.push(("two blocks K3,3 + K3,3".into(), structured(6, &|x, y| x / 3 == y / 3)));
    out.push(("band |x−y| ≤ 1".into(), structured(6, &|x, y| x.abs_diff(y) <= 1)));
    out.push(("staircase y ≥ x − 1".into(), structured(6, &|x, y| y + 1 >= x)));
    out
}

fn oracle_equivalence() -> Outcome {
    let fixtures = oracle_fixtures();
    let comparisons: usize = fixtures.iter().map(|(_, p)| p.edge_count()).sum();
    let alpha = 1.0 - tol::WILSON_CONFIDENCE;
    let z = Normal::standard().inverse_cdf(1.0 - alpha / (2.0 * comparisons as f64));
    let z95 = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let (mut misses, mut misses95, mut first_miss) = (0, 0, None);
    let mut freqs = Vec::new();
    for (fi, (name, pair)) in fixtures.iter().enumerate() {
        let exact = exact_spread_uniform_matching(pair, 1).unwrap();
        let table = MatchingCountTable::new(pair).unwrap();
        let mut rand = RngState::new(2).split("oracle").child(fi as u64).rng();
        let m = pair.mx();
        let mut hits = vec![vec![0u64; m]; m];
        for _ in 0..tol::ORACLE_SAMPLES {
            for (x, &y) in table.sample(&mut rand).unwrap().partner.iter().enumerate() {
                hits[x][y] += 1;
            }
        }
        for (x, y) in pair.edges() {
            let p = exact.pins[x][y].to_f64();
            let inside = |z: f64| {
                let (lo, hi) = wilson_interval(hits[x][y], tol::ORACLE_SAMPLES, z);
                lo - 1e-12 <= p && p <= hi + 1e-12
            };
            if !inside(z) {
                misses += 1;
                first_miss.get_or_insert(format!("{name}: pin ({x},{y}) exact {p:.4}, observed {}", hits[x][y]));
            }
            misses95 += usize::from(!inside(z95));
        }
        freqs.push(hits);
    }
    outcome(
        misses == 0,
        format!(
            "{} fixtures, {comparisons} pins: {misses} outside family-wise {:.0}% Wilson bounds (z = {z:.2}); \
             {misses95} outside per-pin 95% bounds (≈{:.0} expected by chance){}",
            fixtures.len(),
            100.0 * tol::WILSON_CONFIDENCE,
            alpha * comparisons as f64,
            first_miss.map(|m| format!("; first: {m}")).unwrap_or_default()
        ),
        json!({ "hits": freqs }),
    )
}

// ---------------------------------------------------------------- 3

fn extraction() -> Outcome {
    let pair = sample_bipartite(100, 100, 0.7, RngState::new(3).split("g")).unwrap();
    let sub = match extract_exact_density_subgraph(
        &pair,
        &ExtractionParams::new(0.3, 0.01),
        RngState::new(3).split("extract"),
    ) {
        Ok(s) => s,
        Err(e) => return fail(format!("extraction failed: {e}")),
    };
    let degrees: Vec<usize> = (0..100).map(|i| sub.x_degree(i)).chain((0..100).map(|j| sub.y_degree(j))).collect();
    let (lo, hi) = (*degrees.iter().min().unwrap(), *degrees.iter().max().unwrap());
    let verdict = is_quasirandom(&sub, tol::EXTRACT_XI, 0.3).unwrap();
    let (dmin, dmax) = tol::EXTRACT_DEGREES;
    outcome(
        sub.edge_count() == tol::EXTRACT_EDGES && lo >= dmin && hi <= dmax && verdict.pass,
        format!(
            "{} edges (want {}), degrees in [{lo}, {hi}] (want [{dmin}, {dmax}]), quasirandom at ξ = {}: {}",
            sub.edge_count(),
            tol::EXTRACT_EDGES,
            tol::EXTRACT_XI,
            verdict.pass
        ),
        json!({ "edges": sub.to_edge_list(), "stat": verdict.stat.to_string() }),
    )
}

// ---------------------------------------------------------------- 4

fn quasirandom_fixtures() -> Outcome {
    let complete = BipartitePair::complete(4, 4);
    let blocks =
        BipartitePair::from_edges(4, 4, [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)]).unwrap();
    let matching = BipartitePair::from_edges(4, 4, (0..4).map(|i| (i, i))).unwrap();
    let verdict = |p: &BipartitePair| {
        let d = p.density().unwrap().to_f64();
        is_quasirandom(p, tol::QUASI_XI, d).unwrap()
    };
    let (k, b, m) = (verdict(&complete), verdict(&blocks), verdict(&matching));
    let block_stat = b.stat == tol::TWO_BLOCK_STAT.into();
    let block_threshold = (b.threshold - tol::TWO_BLOCK_THRESHOLD).abs() < 1e-9;
    outcome(
        k.pass && !b.pass && block_stat && block_threshold && !m.pass,
        format!(
            "K4,4 pass = {}; two-block pass = {} (S = {} vs {:.2}); matching pass = {}",
            k.pass, b.pass, b.stat, b.threshold, m.pass
        ),
        json!({ "k44": k, "blocks": b, "matching": m }),
    )
}

// ---------------------------------------------------------------- 5, 6

/// `R = K₃`, `N = 60`, `d = 0.5`; triangle factor with a square-of-path
/// fragment (`Δ = 4`) and two restricted vertices with `|W_x| = N/2`.
fn regression_instance() -> (ClassSystem, TargetSpec, ParamSet) {
    let system = super_regular_class_system(3, 60, 0.5, complete_reduced(3), 0.2, 0.3, RngState::new(1)).unwrap();
    let spec = clique_factor_with_path_power(3, 60, 12).unwrap();
    let spec = add_restrictions(spec, &system, 2, 0.5, RngState::new(2)).unwrap();
    // |W| = 2 ≤ βN needs β ≥ 1/30; the rest of the chain is compressed below it.
    let params = ParamSet {
        eps: 0.005,
        eps_p: 0.01,
        eps_pp: 0.02,
        beta: 1.0 / 30.0,
        delta3: 0.036,
        delta2: 0.04,
        delta1: 0.045,
        delta0: 0.05,
        d: 0.5,
        alpha: 0.5,
        max_degree: 4,
    };
    (system, spec, params)
}

fn blowup_correctness() -> Outcome {
    let (system, spec, params) = regression_instance();
    let mut errors: HashMap<String, usize> = HashMap::new();
    let mut verified = 0;
    let mut results = Vec::new();
    for seed in 0..tol::BLOWUP_SEEDS {
        match embed(&spec, &system, &params, RngState::new(seed)) {
            Ok(e) => {
                verified += usize::from(verify_embedding(&spec, &system, &e.phi));
                results.push(json!(e.phi));
            }
            Err(e) => {
                let stage = e.to_string().split(':').next().unwrap_or_default().to_string();
                *errors.entry(stage).or_default() += 1;
                results.push(json!(e.to_string()));
            }
        }
    }
    let successes = tol::BLOWUP_SEEDS as usize - errors.values().sum::<usize>();
    let mut errors: Vec<_> = errors.into_iter().collect();
    errors.sort();
    outcome(
        successes >= tol::BLOWUP_MIN_SUCCESS && verified == successes,
        format!(
            "{successes}/{} seeds embedded (want ≥ {}), {verified} verified; failures by stage: {errors:?}",
            tol::BLOWUP_SEEDS,
            tol::BLOWUP_MIN_SUCCESS
        ),
        json!(results),
    )
}

fn blowup_spread() -> Outcome {
    let (system, spec, params) = regression_instance();
    let n = system.class_size();
    let mut cfg = SpreadConfig::new(spec.n(), system.host().n(), tol::SPREAD_SAMPLES, tol::SPREAD_PROBES);
    cfg.scale = Some(n as f64);
    cfg.allowed = Some(
        (0..spec.n())
            .map(|x| spec.restrictions.get(&x).cloned().unwrap_or_else(|| system.class(spec.hom[x]).to_vec()))
            .collect(),
    );
    let sampler = |r: RngState| embed(&spec, &system, &params, r).map(|e| e.phi);
    match estimate_vertex_spread(sampler, &cfg, RngState::new(6)) {
        Ok(r) => {
            let k2_bound = (tol::SPREAD_C1 / n as f64).powi(2);
            outcome(
                r.c1_upper <= tol::SPREAD_C1 && r.k2_max_freq <= k2_bound,
                format!(
                    "{} runs: c1 upper = {:.2} (want ≤ {}), k2 max = {:.4} (want ≤ {k2_bound:.4})",
                    r.sample_count,
                    r.c1_upper,
                    tol::SPREAD_C1,
                    r.k2_max_freq
                ),
                serde_json::to_value(&r).unwrap(),
            )
        }
        Err(e) => fail(format!("no spread estimate from {} runs: {e}", tol::SPREAD_SAMPLES)),
    }
}

// ---------------------------------------------------------------- 7

fn star_partitions() -> Outcome {
    let (m, k) = (50, 3);
    let floor = (0.3 * m as f64).ceil() as usize;
    let mut valid = 0;
    let mut seed = 0;
    let mut graphs = 0;
    let mut stars = Vec::new();
    while graphs < tol::STAR_GRAPHS {
        seed += 1;
        let g = sample_gnp(m, 0.5, RngState::new(7).child(seed)).unwrap();
        if g.min_degree() < floor {
            continue;
        }
        graphs += 1;
        if let Ok(p) = star_partition(&g, k, 0.1, RngState::new(7).split("stars").child(seed)) {
            valid += usize::from(p.validate(&g, k).is_ok());
            stars.push(p.stars.len());
        }
    }
    let (mut checked, mut mismatches) = (0, Vec::new());
    for order in 2..=7 {
        for g in common::connected_graphs_up_to_iso(order) {
            let oracle = exhaustive_star_partition(&g, k).is_some();
            let got = construct_star_partition(&g, k, RngState::new(7)).is_ok_and(|p| p.validate(&g, k).is_ok());
            checked += 1;
            if got != oracle {
                mismatches.push(g.edges().collect::<Vec<_>>());
            }
        }
    }
    outcome(
        valid == tol::STAR_GRAPHS && mismatches.is_empty(),
        format!(
            "{valid}/{} random reduced graphs partitioned; {checked} connected graphs (m ≤ 7) with {} oracle mismatches",
            tol::STAR_GRAPHS,
            mismatches.len()
        ),
        json!({ "stars": stars, "mismatches": mismatches }),
    )
}

// ---------------------------------------------------------------- 8

fn refinement() -> Outcome {
    let classes = |m: usize, s: usize| -> Vec<Vec<usize>> { (0..m).map(|i| (i * s..(i + 1) * s).collect()).collect() };
    let star = |center: usize, leaves: &[usize]| Star { center, leaves: leaves.to_vec() };
    let k = 3;
    // (name, reduced graph, partition, class size)
    let fixtures: Vec<(&str, Graph, StarPartition, usize)> = vec![
        ("K1,1", Graph::from_edges(2, [(0, 1)]).unwrap(), StarPartition { stars: vec![star(0, &[1])] }, 20),
        ("K1,2", Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap(), StarPartition { stars: vec![star(0, &[1, 2])] }, 16),
        ("K1,3", Graph::complete(4), StarPartition { stars: vec![star(0, &[1, 2, 3])] }, 9),
        (
            "mixed",
            Graph::complete(9),
            StarPartition { stars: vec![star(0, &[1, 2, 3]), star(4, &[5]), star(6, &[7, 8])] },
            30,
        ),
        (
            "mixed, odd sizes",
            Graph::complete(7),
            StarPartition { stars: vec![star(0, &[1]), star(2, &[3, 4]), star(5, &[6])] },
            37,
        ),
    ];
    let mut problems = Vec::new();
    let mut out = Vec::new();
    for (fi, (name, r, partition, s)) in fixtures.iter().enumerate() {
        let divisor = partition.stars.iter().fold(1, |acc, st| match st.leaves.len() {
            l if l == k => acc,
            1 => lcm(acc, k + 1),
            _ => lcm(acc, (k - 1) * (k + 1)),
        });
        // O(1) per class: at most divisor − 1 vertices of each class join V₀.
        let budget = (divisor - 1) * r.n();
        match refine_to_k_stars(partition, &classes(r.n(), *s), &[], k, RngState::new(8).child(fi as u64)) {
            Ok(rs) => {
                if let Err(e) = rs.validate(r) {
                    problems.push(format!("{name}: {e}"));
                }
                let covered: usize = rs.parts.iter().map(Vec::len).sum::<usize>() + rs.exceptional.len();
                if covered != r.n() * s {
                    problems.push(format!("{name}: parts and V₀ cover {covered} of {} vertices", r.n() * s));
                }
                if rs.moved > budget {
                    problems.push(format!("{name}: {} vertices moved to V₀ (budget {budget})", rs.moved));
                }
                out.push(json!({ "name": name, "parts": rs.parts, "stars": rs.stars, "moved": rs.moved }));
            }
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} fixtures: K1,{k} stars only, equal parts, each part used once, V₀ growth within budget",
                fixtures.len()
            )
        } else {
            problems.join("; ")
        },
        json!(out),
    )
}

fn lcm(a: usize, b: usize) -> usize {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

// ---------------------------------------------------------------- 9, 10, 11

fn desk_sampler() -> spreadblow::Result<XiGoodSampler> {
    let host = hamilton_host(120, 3, 0.1, 0.5, RngState::new(9))?;
    hamilton_sampler(&host, &HamiltonConfig::new(3, 0.1), RngState::new(9).split("sampler"))
}

fn claim_enumeration() -> Outcome {
    let sampler = match desk_sampler() {
        Ok(s) => s,
        Err(e) => return fail(format!("sampler setup failed: {e}")),
    };
    let mut reports = Vec::new();
    for seed in 0..tol::CLAIM_SAMPLES {
        let e = match sampler.sample(RngState::new(seed)) {
            Ok(e) => e,
            Err(e) => return fail(format!("ξ-good sample {seed} failed: {e}")),
        };
        let h = completion_graph(sampler.host(), &e.phi, sampler.blueprint()).graph;
        let r = check_claim_count_edge(&h, 3, tol::CLAIM_VMAX).unwrap();
        if !(r.formula_ok && r.relaxed_ok) {
            return fail(format!("sample {seed}: max edges by order {:?} exceed the bounds", r.max_edges));
        }
        reports.push(serde_json::to_value(&r).unwrap());
    }
    outcome(true, format!("{} samples within both bounds", tol::CLAIM_SAMPLES), json!(reports))
}

fn decay() -> Outcome {
    let sampler = match desk_sampler() {
        Ok(s) => s,
        Err(e) => return fail(format!("sampler setup failed: {e}")),
    };
    let reference = match sampler.sample(RngState::new(10).split("reference")) {
        Ok(e) => completion_graph(sampler.host(), &e.phi, sampler.blueprint()).graph,
        Err(e) => return fail(format!("reference ξ-good sample failed: {e}")),
    };
    let mut probe: Vec<(usize, usize)> = reference.edges().collect();
    probe.shuffle(&mut RngState::new(10).split("probe").rng());
    probe.truncate(tol::DECAY_TMAX);
    match estimate_edge_spread(&sampler, &probe, tol::DECAY_TMAX, tol::DECAY_SAMPLES, RngState::new(10)) {
        Ok(r) => {
            let monotone = r.freq_nested.windows(2).all(|w| w[1] <= w[0]);
            let t1 = r.freq_nested[1];
            outcome(
                monotone && t1 <= tol::DECAY_T1_MAX,
                format!(
                    "nested frequencies {:?}; t = 1 frequency {t1:.4} (want ≤ {})",
                    r.freq_nested,
                    tol::DECAY_T1_MAX
                ),
                serde_json::to_value(&r).unwrap(),
            )
        }
        Err(e) => fail(format!("edge-spread estimate failed: {e}")),
    }
}

fn perturbed() -> Outcome {
    let sampler = match desk_sampler() {
        Ok(s) => s,
        Err(e) => return fail(format!("sampler setup failed: {e}")),
    };
    let ps: Vec<f64> = tol::TRIAL_PS.iter().copied().chain([1.0]).collect();
    let mut freqs = Vec::new();
    for (pi, &p) in ps.iter().enumerate() {
        let mut successes = 0;
        for t in 0..tol::TRIALS {
            let rng = RngState::new(11).child(pi as u64).child(t as u64);
            match perturbed_trial(&sampler, p, tol::PHI_TRIES, rng) {
                Ok(o) => successes += usize::from(o.success),
                Err(e) => return fail(format!("trial {t} at p = {p} failed: {e}")),
            }
        }
        freqs.push(successes as f64 / tol::TRIALS as f64);
    }
    let monotone = freqs[..tol::TRIAL_PS.len()].windows(2).all(|w| w[1] >= w[0]);
    let sanity = freqs[tol::TRIAL_PS.len()] == 1.0;
    outcome(monotone && sanity, format!("success frequencies at p = {ps:?}: {freqs:?}"), json!(freqs))
}
