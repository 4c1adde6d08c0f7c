mod common;

use spreadblow::instances::*;
use spreadblow::reduced::*;
use spreadblow::{sample_gnp, Graph, RngState};

#[test]
fn graph_enumeration_counts() {
    // OEIS A001349: connected graphs on n vertices.
    let counts: Vec<usize> = (2..=6).map(|n| common::connected_graphs_up_to_iso(n).len()).collect();
    assert_eq!(counts, vec![1, 2, 6, 21, 112]);
}

#[test]
fn construction_matches_oracle_on_small_connected_graphs() {
    let mut checked = 0;
    for m in 2..=7 {
        for g in common::connected_graphs_up_to_iso(m) {
            for k in 2..=3 {
                let oracle = exhaustive_star_partition(&g, k);
                if let Some(p) = &oracle {
                    p.validate(&g, k).unwrap();
                }
                for seed in 0..3 {
                    let got = construct_star_partition(&g, k, RngState::new(seed));
                    if let Ok(p) = &got {
                        p.validate(&g, k).unwrap();
                    }
                    assert_eq!(
                        got.is_ok(),
                        oracle.is_some(),
                        "m={m} k={k} seed={seed} edges={:?}",
                        g.edges().collect::<Vec<_>>()
                    );
                }
                let stage = flow_stage(&g, RngState::new(0)).unwrap();
                let full = stage.flow_value(&g, k) == stage.u_tilde.len() as u64;
                assert_eq!(full, stage.cut_violation(&g, k).is_none());
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 2 * (1 + 2 + 6 + 21 + 112 + 853));
}

#[test]
fn random_dense_reduced_graphs_partition() {
    let k = 3;
    let m = 50;
    let floor = star_degree_floor(m, k, 0.1);
    let mut done = 0;
    let mut seed = 0;
    while done < 20 {
        seed += 1;
        let g = sample_gnp(m, 0.5, RngState::new(seed)).unwrap();
        if g.min_degree() < floor {
            continue;
        }
        let p = star_partition(&g, k, 0.1, RngState::new(seed).split("stars")).unwrap();
        p.validate(&g, k).unwrap();
        done += 1;
    }
}

#[test]
fn assignment_respects_eligibility_and_cap() {
    // Two-class system refined into K_{1,3} stars, with 20 extra vertices each
    // adjacent to a random half of the host.
    let k = 3;
    let sys = random_class_system(2, 40, 1.0, vec![(0, 1)], RngState::new(0)).unwrap();
    let r = Graph::from_edges(2, [(0, 1)]).unwrap();
    let p = star_partition(&r, k, 0.1, RngState::new(0)).unwrap();
    let mut host = Graph::empty(100);
    for (u, v) in sys.host().edges() {
        host.add_edge(u, v);
    }
    let mut rand = RngState::new(5).rng();
    use rand::Rng;
    let extra: Vec<usize> = (80..100).collect();
    for &v in &extra {
        for u in 0..80 {
            if rand.gen_bool(0.5) {
                host.add_edge(u, v);
            }
        }
    }
    let rs = refine_to_k_stars(&p, sys.classes(), &extra, k, RngState::new(1)).unwrap();
    rs.validate(&r).unwrap();
    let (delta_p, eps, cap_c) = (0.2, 0.25, 2.0);
    let a = assign_exceptional(&host, &rs, delta_p, eps, cap_c).unwrap();
    assert_eq!(a.len(), 20);
    let t = rs.part_size() as f64;
    let cap = (cap_c * eps * t / delta_p).floor() as usize;
    let mut load = std::collections::BTreeMap::new();
    for (&v, &x) in &a {
        assert!(rs.leaf_parts().contains(&x));
        let nb = rs.parts[x].iter().filter(|&&u| host.has_edge(u, v)).count() as f64;
        assert!(nb >= delta_p * t / 2.0);
        *load.entry(x).or_insert(0) += 1;
    }
    assert!(load.values().all(|&l| l <= cap));
}
