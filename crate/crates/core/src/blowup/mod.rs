//! Randomized blow-up embedding: pre-processing, Phase I with quasirandom
//! bookkeeping, the exceptional step and Phase II spread matchings.

mod params;
mod prepare;
mod state;
mod target;

pub use params::ParamSet;
pub use prepare::{preprocess, PreparedInstance};
pub use state::{EmbedOptions, EmbedState, ReorderEvent, RunLog, DEFAULT_P2_SAMPLE_PAIRS};
pub use target::{TargetSpec, TargetSpecFile};

use serde::Serialize;
use std::collections::BTreeMap;

use crate::classes::ClassSystem;
use crate::error::{Error, Result};
use crate::regularity::check_super_regular;
use crate::rng::RngState;

/// A complete embedding of the target (images indexed by target vertex) with
/// the run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub phi: Vec<usize>,
    pub log: RunLog,
}

impl Embedding {
    /// JSON map from target vertex to host vertex.
    pub fn map(&self) -> BTreeMap<usize, usize> {
        self.phi.iter().copied().enumerate().collect()
    }
}

/// Checks the hypothesis that every reduced pair is `(ε, δ)`-super-regular.
pub fn check_hypotheses(system: &ClassSystem, eps: f64, delta: f64) -> Result<()> {
    for &(i, j) in system.reduced_edges() {
        if !check_super_regular(&system.pair(i, j), eps, delta)? {
            return Err(Error::Precondition(format!("reduced pair ({i},{j}) is not ({eps}, {delta})-super-regular")));
        }
    }
    Ok(())
}

/// Embeds `spec` into the host of `system`: preprocess, Phase I, Phase II.
pub fn embed(spec: &TargetSpec, system: &ClassSystem, params: &ParamSet, rng: RngState) -> Result<Embedding> {
    embed_with(spec, system, params, EmbedOptions::default(), rng)
}

pub fn embed_with(
    spec: &TargetSpec,
    system: &ClassSystem,
    params: &ParamSet,
    opts: EmbedOptions,
    rng: RngState,
) -> Result<Embedding> {
    params.validate()?;
    spec.validate(system, params)?;
    if let Some((eps, delta)) = opts.hypothesis {
        check_hypotheses(system, eps, delta)?;
    }
    let inst = preprocess(spec, system, params, rng.split("preprocess"))?;
    let mut state = EmbedState::new(&inst, system, *params, opts);
    state.phase_one(rng.split("phase-one"))?;
    state.phase_two(rng.split("phase-two"))?;
    let phi: Vec<usize> = state.phi()[..inst.original_n].iter().map(|v| v.expect("phase two completes phi")).collect();
    Ok(Embedding { phi, log: state.log().clone() })
}

/// True iff `φ` is injective, class-respecting, edge-preserving and meets
/// every image restriction.
pub fn verify_embedding(spec: &TargetSpec, system: &ClassSystem, phi: &[usize]) -> bool {
    let host = system.host();
    if phi.len() != spec.n() || phi.iter().any(|&v| v >= host.n()) {
        return false;
    }
    let mut seen = vec![false; host.n()];
    for &v in phi {
        if std::mem::replace(&mut seen[v], true) {
            return false;
        }
    }
    if phi.iter().enumerate().any(|(x, &v)| system.class_of(v) != Some(spec.hom[x])) {
        return false;
    }
    if spec.graph.edges().any(|(u, v)| !host.has_edge(phi[u], phi[v])) {
        return false;
    }
    spec.restrictions.iter().all(|(&x, w)| w.contains(&phi[x]))
}
