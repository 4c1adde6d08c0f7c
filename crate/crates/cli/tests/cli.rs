use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreadblow")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gen", "--kind", "bipartite", "--bogus"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    assert_eq!(code(&run(dir.path(), &["gen", "--kind", "bipartite", "--p", "0.5"])), 1);
}

#[test]
fn bipartite_generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--kind", "bipartite", "--m", "50", "--p", "0.5", "--seed", "7"];
    let a = run(dir.path(), &args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, run(dir.path(), &args).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let pair = spreadblow::BipartitePair::parse_edge_list(&text).unwrap();
    assert_eq!((pair.mx(), pair.my()), (50, 50));
}

#[test]
fn missing_input_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["check-regularity", "--pair", "absent.edges"])), 4);
    std::fs::write(dir.path().join("bad.edges"), "# bipartite 2 2\n0 x\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["check-regularity", "--pair", "bad.edges"])), 4);
}

#[test]
fn extract_then_sample_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = ["gen", "--kind", "bipartite", "--m", "60", "--p", "0.8", "--seed", "3", "--out", "p.edges"];
    assert_eq!(code(&run(d, &gen)), 0);
    let o = run(d, &["extract", "--pair", "p.edges", "--target-density", "0.3", "--eps", "0.01", "--out", "s.edges"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let verdict: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(verdict["edges"], 1080);
    assert!(verdict["quasirandom_pass"].as_bool().unwrap());

    let o = run(
        d,
        &["match-sample", "--pair", "s.edges", "--samples", "4", "--mode", "mcmc", "--out", "m.txt", "--jobs", "2"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["count"], 4);
    let sub = spreadblow::BipartitePair::parse_edge_list(&std::fs::read_to_string(d.join("s.edges")).unwrap()).unwrap();
    for line in std::fs::read_to_string(d.join("m.txt")).unwrap().lines() {
        let partner: Vec<usize> = serde_json::from_str(line).unwrap();
        assert!(partner.iter().enumerate().all(|(i, &j)| sub.has_edge(i, j)));
    }
    // Exact sampling refuses pairs beyond its counting limit.
    assert_eq!(code(&run(d, &["match-sample", "--pair", "s.edges", "--mode", "exact"])), 3);

    let o = run(d, &["check-regularity", "--pair", "s.edges", "--out", "cr.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&d.join("cr.json"))["quasirandom"]["pass"], true);
}

#[test]
fn exact_matching_samples_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&run(d, &["gen", "--kind", "bipartite", "--m", "12", "--p", "0.7", "--seed", "1", "--out", "p.edges"])),
        0
    );
    let args = ["match-sample", "--pair", "p.edges", "--samples", "30", "--mode", "exact", "--seed", "4"];
    let a = run(d, &args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, run(d, &args).stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 30);
}

#[test]
fn class_system_and_target_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(
        d,
        &["gen", "--kind", "class-system", "--r", "3", "--n", "60", "--d", "0.5", "--seed", "2", "--out", "sys.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let system = spreadblow::ClassSystem::load(&d.join("sys.json")).unwrap();
    for &(i, j) in system.reduced_edges() {
        assert!(spreadblow::regularity::check_super_regular(&system.pair(i, j), 0.2, 0.3).unwrap());
    }

    let too_dense =
        ["gen", "--kind", "target-factor", "--r", "3", "--n", "60", "--fragment", "12", "--max-degree", "3"];
    assert_eq!(code(&run(d, &too_dense)), 2);
    let o = run(
        d,
        &[
            "gen",
            "--kind",
            "target-factor",
            "--r",
            "3",
            "--n",
            "60",
            "--fragment",
            "12",
            "--system",
            "sys.json",
            "--restrictions",
            "2",
            "--out",
            "t.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let file: spreadblow::blowup::TargetSpecFile = serde_json::from_value(json(&d.join("t.json"))).unwrap();
    let spec = spreadblow::blowup::TargetSpec::from_file(file).unwrap();
    assert_eq!(spec.restrictions.len(), 2);
    assert_eq!(spec.graph.max_degree(), 4);
}

#[test]
fn embed_reports_the_failing_pair_on_irregular_systems() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Classes 1 and 2 are joined by a single edge; the other pairs are complete.
    let mut host = spreadblow::Graph::empty(60);
    for a in 0..20 {
        for b in 20..60 {
            host.add_edge(a, b);
        }
    }
    host.add_edge(20, 40);
    let classes = (0..3).map(|i| (20 * i..20 * (i + 1)).collect()).collect();
    let system = spreadblow::ClassSystem::new(host, classes, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
    system.save(d, "sys").unwrap();
    let spec = spreadblow::instances::clique_factor_with_path_power(3, 20, 0).unwrap();
    std::fs::write(d.join("t.json"), serde_json::to_string(&spec.to_file()).unwrap()).unwrap();
    let params = spreadblow::blowup::ParamSet::desk_default(0.5, 0.4, 2);
    std::fs::write(d.join("params.json"), serde_json::to_string(&params).unwrap()).unwrap();
    let o = run(d, &["embed", "--system", "sys.json", "--target", "t.json", "--params", "params.json"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("(1,2)"), "{}", stderr(&o));
}

#[test]
fn stars_cover_the_reduced_graph() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = spreadblow::Graph::complete(9);
    std::fs::write(d.join("r.edges"), r.to_edge_list()).unwrap();
    let o = run(d, &["stars", "--reduced", "r.edges", "--k", "2", "--alpha", "0.1", "--out", "s.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let partition: spreadblow::reduced::StarPartition = serde_json::from_value(json(&d.join("s.json"))).unwrap();
    partition.validate(&r, 2).unwrap();
}

#[test]
fn hamilton_host_and_desk_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "gen",
        "--kind",
        "hamilton-host",
        "--n",
        "120",
        "--k",
        "3",
        "--alpha",
        "0.1",
        "--seed",
        "5",
        "--out",
        "h.json",
    ];
    assert_eq!(code(&run(d, &args)), 0);
    let first = std::fs::read(d.join("h.json")).unwrap();
    assert_eq!(code(&run(d, &args)), 0);
    assert_eq!(std::fs::read(d.join("h.json")).unwrap(), first);
    let host: spreadblow::instances::HamiltonHost = serde_json::from_slice(&first).unwrap();
    assert!(host.graph().unwrap().min_degree() >= 42);

    assert_eq!(code(&run(d, &["hamilton-run", "--host", "h.json", "--k", "2", "--p", "0.1"])), 2);
    // n = 120 leaves a restriction set larger than the blow-up budget βN.
    let o = run(d, &["hamilton-run", "--host", "h.json", "--k", "3", "--p", "0.1", "--tries", "2", "--out", "r.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("beta"), "{}", stderr(&o));
}

#[test]
fn spread_report_from_stored_bijections() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("phis.jsonl"), "[0,1,2,3]\n[1,0,2,3]\n\n[2,3,0,1]\n[0,1,3,2]\n").unwrap();
    let o = run(d, &["spread-report", "--phis", "phis.jsonl", "--out", "rep.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = json(&d.join("rep.json"));
    assert_eq!(rep["sample_count"], 4);
    assert_eq!(rep["k1_max_freq"], 0.5);
    assert_eq!(rep["c1"], 2.0);
    assert_eq!(code(&run(d, &["spread-report"])), 1);
    assert_eq!(
        code(&run(d, &["spread-report", "--phis", "phis.jsonl", "--system", "x.json", "--target", "t.json"])),
        1
    );
}
