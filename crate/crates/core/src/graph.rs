//! Graph representations, bipartite pairs and random generators.

use rand::Rng;
use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::rng::RngState;

/// Simple undirected graph on `0..n` with dense bit-vector adjacency rows.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    rows: Vec<BitSet>,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph").field("n", &self.n()).field("edges", &self.edge_count()).finish()
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { rows: vec![BitSet::new(n); n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Domain(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at {u}")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Adds `{u, v}`; self-loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.rows[u].insert(v);
            self.rows[v].insert(u);
        }
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.rows[u].remove(v);
        self.rows[v].remove(u);
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].contains(v)
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &BitSet {
        &self.rows[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rows[v].count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(BitSet::count).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| self.rows[u].iter().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// Breadth-first distances from `src`, `usize::MAX` for unreachable vertices.
    pub fn bfs_distances(&self, src: usize, limit: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[src] = 0;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= limit {
                continue;
            }
            for v in self.rows[u].iter() {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Disjoint union with another graph; the other graph's vertices are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let n0 = self.n();
        let mut g = Graph::empty(n0 + other.n());
        for (u, v) in self.edges() {
            g.add_edge(u, v);
        }
        for (u, v) in other.edges() {
            g.add_edge(u + n0, v + n0);
        }
        g
    }

    /// Serializes in the plain edge-list format, with a leading `# n <count>` comment.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# n {}", self.n());
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// Parses the edge-list format. The vertex count is the largest of `n_hint`,
    /// a `# n <count>` header comment, and one past the largest index seen.
    pub fn parse_edge_list(text: &str, n_hint: Option<usize>) -> Result<Self> {
        let mut n = n_hint.unwrap_or(0);
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("n") {
                    if let Some(Ok(v)) = it.next().map(str::parse::<usize>) {
                        n = n.max(v);
                    }
                }
                continue;
            }
            let (u, v) = parse_pair(line, lineno)?;
            n = n.max(u.max(v) + 1);
            edges.push((u, v));
        }
        Graph::from_edges(n, edges)
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse(format!("line {}: expected two indices", lineno + 1)))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
    };
    let u = next()?;
    let v = next()?;
    Ok((u, v))
}

/// An exact rational `num / den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

impl Ratio {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0, "zero denominator");
        Ratio { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Compares `self` with the exact binary value of `x`.
    pub fn cmp_f64(self, x: f64) -> Ordering {
        crate::exact::cmp_ratio_f64(self.num, self.den, x)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Bipartite graph between an ordered side `X` and an ordered side `Y`.
///
/// Sides are addressed by local position; `x_labels`/`y_labels` remember the
/// vertex identities the pair was cut from.
#[derive(Clone, PartialEq, Eq)]
pub struct BipartitePair {
    x_labels: Vec<usize>,
    y_labels: Vec<usize>,
    /// Row `i` holds the Y-positions adjacent to X-position `i`.
    rows: Vec<BitSet>,
    /// Column `j` holds the X-positions adjacent to Y-position `j`.
    cols: Vec<BitSet>,
}

impl std::fmt::Debug for BipartitePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BipartitePair")
            .field("mx", &self.mx())
            .field("my", &self.my())
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl BipartitePair {
    pub fn empty(mx: usize, my: usize) -> Self {
        BipartitePair {
            x_labels: (0..mx).collect(),
            y_labels: (mx..mx + my).collect(),
            rows: vec![BitSet::new(my); mx],
            cols: vec![BitSet::new(mx); my],
        }
    }

    pub fn complete(mx: usize, my: usize) -> Self {
        let mut p = BipartitePair::empty(mx, my);
        for i in 0..mx {
            for j in 0..my {
                p.add_edge(i, j);
            }
        }
        p
    }

    /// Builds a pair from local-position edges `(i, j)`, `i < mx`, `j < my`.
    pub fn from_edges(mx: usize, my: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut p = BipartitePair::empty(mx, my);
        for (i, j) in edges {
            if i >= mx || j >= my {
                return Err(Error::Domain(format!("edge ({i},{j}) outside {mx}x{my} pair")));
            }
            p.add_edge(i, j);
        }
        Ok(p)
    }

    /// Cuts the pair `(X, Y)` out of a host graph.
    pub fn from_graph(g: &Graph, x: &[usize], y: &[usize]) -> Result<Self> {
        let ys = BitSet::from_indices(g.n(), y.iter().copied());
        if x.iter().any(|&v| ys.contains(v)) {
            return Err(Error::Domain("X and Y must be disjoint".into()));
        }
        let mut p = BipartitePair::empty(x.len(), y.len());
        p.x_labels = x.to_vec();
        p.y_labels = y.to_vec();
        for (i, &u) in x.iter().enumerate() {
            for (j, &v) in y.iter().enumerate() {
                if g.has_edge(u, v) {
                    p.add_edge(i, j);
                }
            }
        }
        Ok(p)
    }

    pub fn with_labels(mut self, x: Vec<usize>, y: Vec<usize>) -> Self {
        assert_eq!(x.len(), self.mx());
        assert_eq!(y.len(), self.my());
        self.x_labels = x;
        self.y_labels = y;
        self
    }

    #[inline]
    pub fn mx(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn my(&self) -> usize {
        self.cols.len()
    }

    pub fn x_labels(&self) -> &[usize] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[usize] {
        &self.y_labels
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        self.rows[i].insert(j);
        self.cols[j].insert(i);
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.rows[i].remove(j);
        self.cols[j].remove(i);
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rows[i].contains(j)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &BitSet {
        &self.rows[i]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &BitSet {
        &self.cols[j]
    }

    pub fn x_degree(&self, i: usize) -> usize {
        self.rows[i].count()
    }

    pub fn y_degree(&self, j: usize) -> usize {
        self.cols[j].count()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(BitSet::count).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.mx()).flat_map(move |i| self.rows[i].iter().map(move |j| (i, j)))
    }

    /// Exact density `e(X, Y) / (|X||Y|)`.
    pub fn density(&self) -> Result<Ratio> {
        if self.mx() == 0 || self.my() == 0 {
            return Err(Error::Domain("density of a pair with an empty side".into()));
        }
        Ok(Ratio::new(self.edge_count() as u128, (self.mx() * self.my()) as u128))
    }

    /// Density of the sub-pair induced by X-positions `xs` and Y-positions `ys`.
    pub fn sub_density(&self, xs: &[usize], ys: &BitSet) -> Ratio {
        let e: usize = xs.iter().map(|&i| self.rows[i].and_count(ys)).sum();
        Ratio::new(e as u128, (xs.len() * ys.count()).max(1) as u128)
    }

    /// `|N(x) ∩ N(x') ∩ Y|` for X-positions `x`, `x'`.
    pub fn codegree(&self, x: usize, x2: usize) -> Result<usize> {
        if x >= self.mx() || x2 >= self.mx() {
            return Err(Error::Domain(format!("codegree: X-position out of range ({x}, {x2})")));
        }
        Ok(self.rows[x].and_count(&self.rows[x2]))
    }

    /// The same pair with sides swapped.
    pub fn transpose(&self) -> BipartitePair {
        BipartitePair {
            x_labels: self.y_labels.clone(),
            y_labels: self.x_labels.clone(),
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }

    /// Pair obtained by deleting the given X- and Y-positions.
    pub fn delete(&self, xs: &[usize], ys: &[usize]) -> BipartitePair {
        let keep_x: Vec<usize> = (0..self.mx()).filter(|i| !xs.contains(i)).collect();
        let keep_y: Vec<usize> = (0..self.my()).filter(|j| !ys.contains(j)).collect();
        let mut p = BipartitePair::empty(keep_x.len(), keep_y.len());
        for (a, &i) in keep_x.iter().enumerate() {
            for (b, &j) in keep_y.iter().enumerate() {
                if self.has_edge(i, j) {
                    p.add_edge(a, b);
                }
            }
        }
        p.x_labels = keep_x.iter().map(|&i| self.x_labels[i]).collect();
        p.y_labels = keep_y.iter().map(|&j| self.y_labels[j]).collect();
        p
    }

    /// Edge list with a `# bipartite <mx> <my>` header; lines are local `i j` positions.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# bipartite {} {}", self.mx(), self.my());
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    /// Parses the format written by [`BipartitePair::to_edge_list`]. Without a
    /// header, side sizes are one past the largest index seen on each side.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let (mut mx, mut my) = (0usize, 0usize);
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() == 3 && parts[0] == "bipartite" {
                    mx = mx.max(parts[1].parse().map_err(|e| Error::Parse(format!("header: {e}")))?);
                    my = my.max(parts[2].parse().map_err(|e| Error::Parse(format!("header: {e}")))?);
                }
                continue;
            }
            let (i, j) = parse_pair(line, lineno)?;
            mx = mx.max(i + 1);
            my = my.max(j + 1);
            edges.push((i, j));
        }
        BipartitePair::from_edges(mx, my, edges)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Erdős–Rényi `G(n, p)`: each unordered pair kept independently with probability `p`.
pub fn sample_gnp(n: usize, p: f64, rng: RngState) -> Result<Graph> {
    check_probability(p)?;
    let mut r = rng.rng();
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    Ok(g)
}

/// Random bipartite graph with sides of size `mx`, `my` and edge probability `p`.
pub fn sample_bipartite(mx: usize, my: usize, p: f64, rng: RngState) -> Result<BipartitePair> {
    check_probability(p)?;
    let mut r = rng.rng();
    let mut pair = BipartitePair::empty(mx, my);
    for i in 0..mx {
        for j in 0..my {
            if r.gen_bool(p) {
                pair.add_edge(i, j);
            }
        }
    }
    Ok(pair)
}
