use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::blowup::ParamSet;
use crate::classes::ClassSystem;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Target graph `H`, its homomorphism into the reduced graph, and the image
/// restrictions `W_x` (host vertex ids) for the vertices of `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub graph: Graph,
    pub hom: Vec<usize>,
    pub restrictions: BTreeMap<usize, Vec<usize>>,
}

/// JSON form: `{"n": .., "edges": [[u, v], ..], "hom": [..], "restrictions": {"x": [..]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetSpecFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub hom: Vec<usize>,
    #[serde(default)]
    pub restrictions: BTreeMap<usize, Vec<usize>>,
}

impl TargetSpec {
    pub fn new(graph: Graph, hom: Vec<usize>) -> Self {
        TargetSpec { graph, hom, restrictions: BTreeMap::new() }
    }

    pub fn with_restriction(mut self, x: usize, allowed: Vec<usize>) -> Self {
        self.restrictions.insert(x, allowed);
        self
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn to_file(&self) -> TargetSpecFile {
        TargetSpecFile {
            n: self.graph.n(),
            edges: self.graph.edges().map(|(u, v)| [u, v]).collect(),
            hom: self.hom.clone(),
            restrictions: self.restrictions.clone(),
        }
    }

    pub fn from_file(f: TargetSpecFile) -> Result<Self> {
        let graph = Graph::from_edges(f.n, f.edges.iter().map(|e| (e[0], e[1])))?;
        if f.hom.len() != f.n {
            return Err(Error::Parse(format!("hom has {} entries for {} vertices", f.hom.len(), f.n)));
        }
        Ok(TargetSpec { graph, hom: f.hom, restrictions: f.restrictions })
    }

    /// Checks the target against the class system and parameters: homomorphism,
    /// class loads, degree bound, `|W| ≤ βN`, `W_x ⊆ V_{h(x)}`, `|W_x| ≥ αN`.
    pub fn validate(&self, system: &ClassSystem, params: &ParamSet) -> Result<()> {
        let n = system.class_size();
        let r = system.r();
        if self.hom.len() != self.graph.n() {
            return Err(Error::Precondition("homomorphism must be defined on every vertex of H".into()));
        }
        let mut load = vec![0usize; r];
        for (x, &i) in self.hom.iter().enumerate() {
            if i >= r {
                return Err(Error::Precondition(format!("h({x}) = {i} is not a reduced vertex")));
            }
            load[i] += 1;
        }
        if let Some(i) = (0..r).find(|&i| load[i] > n) {
            return Err(Error::Precondition(format!("class {i} receives {} > N = {n} target vertices", load[i])));
        }
        for (u, v) in self.graph.edges() {
            if !system.is_reduced_edge(self.hom[u], self.hom[v]) {
                return Err(Error::Precondition(format!(
                    "H-edge ({u},{v}) maps to ({},{}), which is not a reduced edge",
                    self.hom[u], self.hom[v]
                )));
            }
        }
        if self.graph.max_degree() > params.max_degree {
            return Err(Error::Precondition(format!(
                "max degree of H is {} > Delta = {}",
                self.graph.max_degree(),
                params.max_degree
            )));
        }
        let w_cap = (params.beta * n as f64 + 1e-9).floor() as usize;
        if self.restrictions.len() > w_cap {
            return Err(Error::Precondition(format!(
                "|W| = {} exceeds beta·N = {:.3}",
                self.restrictions.len(),
                params.beta * n as f64
            )));
        }
        let floor = ParamSet::ceil_frac(params.alpha, n);
        for (&x, allowed) in &self.restrictions {
            if x >= self.graph.n() {
                return Err(Error::Precondition(format!("restriction names unknown vertex {x}")));
            }
            if allowed.len() < floor {
                return Err(Error::Precondition(format!(
                    "|W_{x}| = {} is below alpha·N = {:.3}",
                    allowed.len(),
                    params.alpha * n as f64
                )));
            }
            if let Some(&v) = allowed.iter().find(|&&v| system.class_of(v) != Some(self.hom[x])) {
                return Err(Error::Precondition(format!("W_{x} contains {v} outside V_{}", self.hom[x])));
            }
        }
        Ok(())
    }
}
