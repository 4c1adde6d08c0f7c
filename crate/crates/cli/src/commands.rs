//! Subcommand bodies. Every command derives its streams from
//! `RngState::new(seed).split(<subcommand name>)`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use spreadblow::blowup::{embed_with, EmbedOptions, ParamSet, TargetSpec, TargetSpecFile};
use spreadblow::hamilton::{perturbed_trial, pin_report, prepare_hamilton, HamiltonConfig, XiGoodSampler};
use spreadblow::instances::{
    add_restrictions, clique_factor_with_path_power, complete_reduced, hamilton_host, super_regular_class_system,
    HamiltonHost,
};
use spreadblow::matchings::{default_mcmc_steps, sample_matching_mcmc, sample_uniform_matching_exact};
use spreadblow::reduced::star_partition;
use spreadblow::regularity::{
    extract_exact_density_subgraph, is_quasirandom, min_degree_ok, witness_irregularity, xi_for, ExtractionParams,
    DEFAULT_WITNESS_BUDGET,
};
use spreadblow::spreadstat::{estimate_vertex_spread, SpreadConfig};
use spreadblow::{sample_bipartite, BipartitePair, ClassSystem, Error, Graph, RngState};

use crate::{
    CheckArgs, EmbedArgs, ExtractArgs, Failure, GenArgs, HamiltonArgs, Kind, MatchArgs, MatchMode, SpreadArgs,
    StarsArgs,
};

type Outcome = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 4, message: format!("{}: {e}", path.display()) })
}

/// Writes `text` to `out`, or to stdout when absent.
fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure { code: 4, message: format!("{}: {e}", p.display()) }),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &impl Serialize) -> Outcome {
    emit(out, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn load_params(path: Option<&Path>) -> std::result::Result<Option<ParamSet>, Failure> {
    path.map(|p| Ok(serde_json::from_str(&read(p)?)?)).transpose()
}

fn load_pair(path: &Path) -> std::result::Result<BipartitePair, Failure> {
    Ok(BipartitePair::parse_edge_list(&read(path)?)?)
}

fn load_target(path: &Path) -> std::result::Result<TargetSpec, Failure> {
    let file: TargetSpecFile = serde_json::from_str(&read(path)?)?;
    Ok(TargetSpec::from_file(file)?)
}

fn require<T>(value: Option<T>, flag: &str, kind: &str) -> std::result::Result<T, Failure> {
    value.ok_or_else(|| Failure::usage(format!("--{flag} is required for --kind {kind}")))
}

/// Runs `f` on a rayon pool of `jobs` threads (the global pool when absent).
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> std::result::Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::usage("--jobs must be positive")),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Failure { code: 3, message: e.to_string() })?;
            Ok(pool.install(f))
        }
    }
}

/// Default blow-up constants for a system and target: desk chain with `d` the
/// least pair density and `α = 0.4`.
fn default_params(system: &ClassSystem, spec: &TargetSpec) -> ParamSet {
    let d = system.densities().values().map(|r| r.to_f64()).fold(1.0, f64::min);
    ParamSet::desk_default(d, 0.4, spec.graph.max_degree().max(1))
}

pub fn gen(a: GenArgs) -> Outcome {
    let rng = RngState::new(a.seed).split("gen");
    let infeasible = |e: Error| match e {
        Error::Infeasible(m) => Failure::precondition(format!("infeasible: {m}")),
        e => e.into(),
    };
    match a.kind {
        Kind::Bipartite => {
            let m = require(a.m, "m", "bipartite")?;
            let p = require(a.p, "p", "bipartite")?;
            let pair = sample_bipartite(m, m, p, rng)?;
            eprintln!("bipartite pair: m={m}, {} edges", pair.edge_count());
            emit(a.out.as_deref(), &pair.to_edge_list())
        }
        Kind::ClassSystem => {
            let n = require(a.n, "n", "class-system")?;
            let out = require(a.out, "out", "class-system")?;
            let system =
                super_regular_class_system(a.r, n, a.d, complete_reduced(a.r), 0.2, 0.3, rng).map_err(infeasible)?;
            let dir = out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let stem =
                out.file_stem().and_then(|s| s.to_str()).ok_or_else(|| Failure::usage("--out needs a file name"))?;
            system.save(dir, stem)?;
            eprintln!("class system: r={}, N={n}, {} host edges", a.r, system.host().edge_count());
            Ok(())
        }
        Kind::TargetFactor => {
            let n = require(a.n, "n", "target-factor")?;
            let mut spec = clique_factor_with_path_power(a.r, n, a.fragment)?;
            let degree = spec.graph.max_degree();
            if let Some(bound) = a.max_degree {
                if degree > bound {
                    return Err(Failure::precondition(format!("target maximum degree {degree} exceeds {bound}")));
                }
            }
            if a.restrictions > 0 {
                let path = a.system.as_deref().ok_or_else(|| Failure::usage("--restrictions needs --system"))?;
                let system = ClassSystem::load(path)?;
                spec = add_restrictions(spec, &system, a.restrictions, a.restrict_frac, rng.split("restrictions"))
                    .map_err(infeasible)?;
            }
            eprintln!("target: {} vertices, max degree {degree}", spec.n());
            emit_json(a.out.as_deref(), &spec.to_file())
        }
        Kind::HamiltonHost => {
            let n = require(a.n, "n", "hamilton-host")?;
            let host = hamilton_host(n, a.k, a.alpha, a.d, rng).map_err(infeasible)?;
            let min = host.graph()?.min_degree();
            if min < host.degree_floor() {
                return Err(Failure { code: 3, message: format!("minimum degree {min} below floor") });
            }
            eprintln!("hamilton host: n={n}, min degree {min} (floor {})", host.degree_floor());
            emit_json(a.out.as_deref(), &host)
        }
    }
}

pub fn check_regularity(a: CheckArgs) -> Outcome {
    let pair = load_pair(&a.pair)?;
    let density = pair.density()?.to_f64();
    if density == 0.0 {
        return Err(Failure::precondition("pair has no edges"));
    }
    let xi = a.xi.unwrap_or_else(|| xi_for(a.eps, density));
    let verdict = is_quasirandom(&pair, xi, density)?;
    let degrees = min_degree_ok(&pair, a.delta);
    let witness = if verdict.pass {
        witness_irregularity(&pair, a.eps, DEFAULT_WITNESS_BUDGET, RngState::new(a.seed).split("check-regularity"))
    } else {
        None
    };
    let super_regular = degrees && verdict.pass && witness.is_none();
    eprintln!("density {density:.4}: quasirandom {}, super-regular {super_regular}", verdict.pass);
    emit_json(
        a.out.as_deref(),
        &json!({
            "density": density,
            "xi": xi,
            "quasirandom": verdict,
            "min_degree_ok": degrees,
            "irregular_witness": witness,
            "super_regular": super_regular,
        }),
    )
}

pub fn extract(a: ExtractArgs) -> Outcome {
    let pair = load_pair(&a.pair)?;
    let params = ExtractionParams::new(a.target_density, a.eps);
    let sub = extract_exact_density_subgraph(&pair, &params, RngState::new(a.seed).split("extract"))?;
    fs::write(&a.out, sub.to_edge_list())
        .map_err(|e| Failure { code: 4, message: format!("{}: {e}", a.out.display()) })?;
    let degrees: Vec<usize> =
        (0..sub.mx()).map(|i| sub.x_degree(i)).chain((0..sub.my()).map(|j| sub.y_degree(j))).collect();
    let density = sub.density()?.to_f64();
    let pass = density > 0.0 && is_quasirandom(&sub, a.xi, density)?.pass;
    eprintln!("extracted {} of {} edges", sub.edge_count(), pair.edge_count());
    emit_json(
        a.report.as_deref(),
        &json!({
            "edges": sub.edge_count(),
            "min_degree": degrees.iter().min(),
            "max_degree": degrees.iter().max(),
            "quasirandom_pass": pass,
        }),
    )
}

pub fn match_sample(a: MatchArgs) -> Outcome {
    let pair = load_pair(&a.pair)?;
    let rng = RngState::new(a.seed).split("match-sample");
    let steps = a.steps.unwrap_or_else(|| default_mcmc_steps(pair.mx()));
    let draws = with_jobs(a.jobs, || {
        (0..a.samples as u64)
            .into_par_iter()
            .map(|s| match a.mode {
                MatchMode::Exact => sample_uniform_matching_exact(&pair, rng.child(s)),
                MatchMode::Mcmc => sample_matching_mcmc(&pair, steps, rng.child(s)),
            })
            .collect::<spreadblow::Result<Vec<_>>>()
    })??;
    let partners: Vec<Vec<usize>> = draws.into_iter().map(|m| m.partner).collect();
    let mut text = String::new();
    for p in &partners {
        text += &serde_json::to_string(p)?;
        text.push('\n');
    }
    let report = pin_report(&partners);
    let summary = serde_json::to_string(&json!({
        "count": partners.len(),
        "max_pin_freq": report.k1_max_freq,
        "spread_constant": report.c1,
    }))?;
    match &a.out {
        Some(path) => {
            emit(Some(path), &text)?;
            println!("{summary}");
        }
        None => {
            emit(None, &text)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

pub fn embed(a: EmbedArgs) -> Outcome {
    let system = ClassSystem::load(&a.system)?;
    let spec = load_target(&a.target)?;
    let params = load_params(a.params.as_deref())?.unwrap_or_else(|| default_params(&system, &spec));
    let opts = EmbedOptions { relaxed_p2: a.relaxed_p2, ..EmbedOptions::default() };
    let e = embed_with(&spec, &system, &params, opts, RngState::new(a.seed).split("embed"))?;
    eprintln!("embedded {} vertices; {} reorder events", e.phi.len(), e.log.reorder_events.len());
    emit_json(a.out.as_deref(), &json!({ "phi": e.map(), "log": e.log }))
}

pub fn stars(a: StarsArgs) -> Outcome {
    let r = Graph::parse_edge_list(&read(&a.reduced)?, None)?;
    let partition = star_partition(&r, a.k, a.alpha, RngState::new(a.seed).split("stars"))?;
    eprintln!("{} stars cover {} vertices", partition.stars.len(), r.n());
    emit_json(a.out.as_deref(), &partition)
}

fn build_sampler(a: &HamiltonArgs, host: &HamiltonHost, rng: RngState) -> std::result::Result<XiGoodSampler, Failure> {
    if host.k != a.k {
        return Err(Failure::precondition(format!("host was generated for k={}, run asks k={}", host.k, a.k)));
    }
    let mut cfg = HamiltonConfig::new(a.k, host.alpha);
    if let Some(p) = load_params(a.params.as_deref())? {
        cfg.params = p;
    }
    let (g, refined, bp) = prepare_hamilton(host, &cfg, rng)?;
    let options = EmbedOptions { hypothesis: None, relaxed_p2: a.relaxed_p2, ..EmbedOptions::default() };
    Ok(XiGoodSampler::new(&g, &refined, &bp, cfg.params, options)?)
}

#[derive(Serialize)]
struct TrialRow {
    trial: usize,
    p: f64,
    tries_used: usize,
    success: bool,
    max_pin_estimate: f64,
}

pub fn hamilton_run(a: HamiltonArgs) -> Outcome {
    if a.p.iter().any(|p| !(0.0..=1.0).contains(p)) || a.tries == 0 {
        return Err(Failure::precondition("edge probabilities must lie in [0, 1] and --tries must be positive"));
    }
    let host: HamiltonHost = serde_json::from_str(&read(&a.host)?)?;
    let rng = RngState::new(a.seed).split("hamilton-run");
    let sampler = build_sampler(&a, &host, rng.split("prepare"))?;
    let cells: Vec<(usize, f64)> = a.p.iter().flat_map(|&p| (0..a.trials).map(move |t| (t, p))).collect();
    let trials = rng.split("trials");
    let rows = with_jobs(a.jobs, || {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, &(trial, p))| {
                let o = perturbed_trial(&sampler, p, a.tries, trials.child(i as u64))?;
                Ok(TrialRow {
                    trial,
                    p,
                    tries_used: o.tries_used,
                    success: o.success,
                    max_pin_estimate: o.max_pin_estimate,
                })
            })
            .collect::<spreadblow::Result<Vec<_>>>()
    })??;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure { code: 4, message: e.to_string() })?;
    emit(a.out.as_deref(), &String::from_utf8_lossy(&bytes))?;
    eprintln!("{} of {} trials succeeded", rows.iter().filter(|r| r.success).count(), rows.len());
    if let Some(path) = &a.phi_out {
        let phis = rng.split("phis");
        let samples = with_jobs(a.jobs, || {
            (0..a.samples as u64)
                .into_par_iter()
                .map(|s| sampler.sample(phis.child(s)).map(|e| e.phi))
                .collect::<spreadblow::Result<Vec<_>>>()
        })??;
        let mut text = String::new();
        for phi in &samples {
            text += &serde_json::to_string(phi)?;
            text.push('\n');
        }
        emit(Some(path), &text)?;
    }
    Ok(())
}

pub fn spread_report(a: SpreadArgs) -> Outcome {
    let report = if let Some(path) = &a.phis {
        let samples = read(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<Vec<usize>>, _>>()?;
        if samples.is_empty() {
            return Err(Failure::precondition("no stored bijections"));
        }
        pin_report(&samples)
    } else {
        let (Some(sys_path), Some(target_path)) = (&a.system, &a.target) else {
            return Err(Failure::usage("spread-report needs --phis or --system with --target"));
        };
        let system = ClassSystem::load(sys_path)?;
        let spec = load_target(target_path)?;
        let params = load_params(a.params.as_deref())?.unwrap_or_else(|| default_params(&system, &spec));
        let opts = EmbedOptions { relaxed_p2: a.relaxed_p2, ..EmbedOptions::default() };
        let cfg = SpreadConfig::new(spec.n(), system.host().n(), a.samples, a.probes);
        let rng = RngState::new(a.seed).split("spread-report");
        with_jobs(a.jobs, || {
            estimate_vertex_spread(|r| embed_with(&spec, &system, &params, opts, r).map(|e| e.phi), &cfg, rng)
        })??
    };
    eprintln!("{} samples, c1 = {:.3}, c2 = {:.3}", report.sample_count, report.c1, report.c2);
    emit_json(a.out.as_deref(), &report)
}
