//! Class systems: a host graph partitioned into equal classes with a reduced graph.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{BipartitePair, Graph, Ratio};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSystem {
    class_size: usize,
    classes: Vec<Vec<usize>>,
    reduced_edges: Vec<(usize, usize)>,
    host: Graph,
    class_of: Vec<Option<usize>>,
}

/// On-disk JSON form. `host` names an edge-list file relative to the JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassSystemFile {
    #[serde(rename = "N")]
    pub n: usize,
    pub classes: Vec<Vec<usize>>,
    pub reduced_edges: Vec<[usize; 2]>,
    pub host: String,
}

impl ClassSystem {
    pub fn new(host: Graph, classes: Vec<Vec<usize>>, reduced_edges: Vec<(usize, usize)>) -> Result<Self> {
        let class_size = classes.first().map_or(0, Vec::len);
        let mut class_of = vec![None; host.n()];
        for (i, c) in classes.iter().enumerate() {
            if c.len() != class_size {
                return Err(Error::Domain(format!("class {i} has size {} != {class_size}", c.len())));
            }
            for &v in c {
                if v >= host.n() {
                    return Err(Error::Domain(format!("class {i} names vertex {v} outside host")));
                }
                if class_of[v].replace(i).is_some() {
                    return Err(Error::Domain(format!("vertex {v} lies in two classes")));
                }
            }
        }
        let r = classes.len();
        let mut reduced = Vec::new();
        for &(i, j) in &reduced_edges {
            if i >= r || j >= r || i == j {
                return Err(Error::Domain(format!("reduced edge ({i},{j}) invalid for r={r}")));
            }
            reduced.push((i.min(j), i.max(j)));
        }
        reduced.sort_unstable();
        reduced.dedup();
        for (u, v) in host.edges() {
            match (class_of[u], class_of[v]) {
                (Some(a), Some(b)) if a != b && reduced.binary_search(&(a.min(b), a.max(b))).is_ok() => {}
                _ => return Err(Error::Domain(format!("host edge ({u},{v}) does not run along a reduced edge"))),
            }
        }
        Ok(ClassSystem { class_size, classes, reduced_edges: reduced, host, class_of })
    }

    /// Class size `N`.
    pub fn class_size(&self) -> usize {
        self.class_size
    }

    pub fn r(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &[usize] {
        &self.classes[i]
    }

    pub fn class_of(&self, v: usize) -> Option<usize> {
        self.class_of[v]
    }

    pub fn reduced_edges(&self) -> &[(usize, usize)] {
        &self.reduced_edges
    }

    pub fn is_reduced_edge(&self, i: usize, j: usize) -> bool {
        self.reduced_edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    pub fn host(&self) -> &Graph {
        &self.host
    }

    pub fn pair(&self, i: usize, j: usize) -> BipartitePair {
        BipartitePair::from_graph(&self.host, &self.classes[i], &self.classes[j]).expect("classes are disjoint")
    }

    /// Exact density of every reduced pair.
    pub fn densities(&self) -> BTreeMap<(usize, usize), Ratio> {
        self.reduced_edges
            .iter()
            .map(|&(i, j)| ((i, j), self.pair(i, j).density().expect("non-empty classes")))
            .collect()
    }

    pub fn to_file(&self, host_ref: &str) -> ClassSystemFile {
        ClassSystemFile {
            n: self.class_size,
            classes: self.classes.clone(),
            reduced_edges: self.reduced_edges.iter().map(|&(i, j)| [i, j]).collect(),
            host: host_ref.to_string(),
        }
    }

    /// Writes `<stem>.json` and `<stem>.edges` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let host_name = format!("{stem}.edges");
        std::fs::write(dir.join(&host_name), self.host.to_edge_list())?;
        let json = serde_json::to_string_pretty(&self.to_file(&host_name))?;
        std::fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ClassSystemFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let host_path = path.parent().unwrap_or(Path::new(".")).join(&file.host);
        let n_total = file.classes.iter().flatten().map(|&v| v + 1).max().unwrap_or(0);
        let host = Graph::parse_edge_list(&std::fs::read_to_string(host_path)?, Some(n_total))?;
        if file.classes.iter().any(|c| c.len() != file.n) {
            return Err(Error::Parse(format!("class sizes disagree with N = {}", file.n)));
        }
        ClassSystem::new(host, file.classes, file.reduced_edges.iter().map(|e| (e[0], e[1])).collect())
    }
}
