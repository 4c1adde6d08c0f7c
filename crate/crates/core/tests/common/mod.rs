#![allow(dead_code)]

use spreadblow::Graph;

fn perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in perms(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn bit(n: usize, u: usize, v: usize) -> u32 {
    let (a, b) = (u.min(v), u.max(v));
    // index of pair (a, b) in the lexicographic pair order
    (a * (2 * n - a - 1) / 2 + (b - a - 1)) as u32
}

fn canonical(n: usize, mask: u64, perms: &[Vec<usize>]) -> u64 {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    perms
        .iter()
        .map(|p| {
            pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .fold(0u64, |acc, (_, &(a, b))| acc | 1 << bit(n, p[a], p[b]))
        })
        .min()
        .unwrap()
}

fn to_graph(n: usize, mask: u64) -> Graph {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    Graph::from_edges(n, pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|p| *p.1)).unwrap()
}

fn connected(g: &Graph) -> bool {
    g.n() == 0 || g.bfs_distances(0, usize::MAX).iter().all(|&d| d != usize::MAX)
}

/// All graphs on `n` vertices up to isomorphism, grown vertex by vertex.
pub fn graphs_up_to_iso(n: usize) -> Vec<Graph> {
    let mut level: Vec<u64> = vec![0];
    for m in 2..=n {
        let ps = perms(m);
        let mut next = std::collections::BTreeSet::new();
        for &mask in &level {
            // re-index the (m−1)-vertex mask into the m-vertex pair order
            let old = to_graph(m - 1, mask);
            let mut base = 0u64;
            for (a, b) in old.edges() {
                base |= 1 << bit(m, a, b);
            }
            for nb in 0u64..1 << (m - 1) {
                let mut g = base;
                for a in 0..m - 1 {
                    if nb >> a & 1 == 1 {
                        g |= 1 << bit(m, a, m - 1);
                    }
                }
                next.insert(canonical(m, g, &ps));
            }
        }
        level = next.into_iter().collect();
    }
    if n <= 1 {
        return vec![Graph::empty(n)];
    }
    level.into_iter().map(|mask| to_graph(n, mask)).collect()
}

pub fn connected_graphs_up_to_iso(n: usize) -> Vec<Graph> {
    graphs_up_to_iso(n).into_iter().filter(connected).collect()
}
