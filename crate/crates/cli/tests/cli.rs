//! End-to-end tests of the `graphchan` binary: documented example outputs,
//! exit codes, file round trips, and thread-count invariance.

use assert_cmd::Command;
use graphchan::engine::PlantedInstance;
use graphchan::formats;
use graphchan::hypergraph::Hypergraph;
use graphchan::kernels::make_ksat_kernel;
use predicates::prelude::*;

fn bin() -> Command {
    Command::cargo_bin("graphchan").unwrap()
}

#[test]
fn gamma_xor_uniform_quarter() {
    bin()
        .args(["gamma", "--kernel", "xor:2", "--l", "2", "--nu", "uniform"])
        .assert()
        .success()
        .stdout("0.25\n");
}

#[test]
fn entropy_empty_graph_is_n() {
    bin()
        .args(["entropy", "--graph", "empty", "--n", "5", "--kernel", "xor:2"])
        .assert()
        .success()
        .stdout("5.0\n");
}

#[test]
fn count_single_3sat_clause_is_seven() {
    let dir = tempfile::tempdir().unwrap();
    let instance = PlantedInstance {
        graph: Hypergraph { n: 3, k: 3, edges: vec![(vec![0, 1, 2], 1)] },
        kernel: make_ksat_kernel(3).unwrap(),
        x: 0,
        y: vec![vec![0]],
    };
    let path = dir.path().join("inst.json");
    formats::write_instance(&path, &instance).unwrap();
    bin()
        .args(["count", "--instance", path.to_str().unwrap()])
        .assert()
        .success()
        .stdout("7\n");
}

#[test]
fn gen_writes_instance_dimacs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    bin()
        .args(["gen", "--kernel", "ksat:3", "--n", "8", "--alpha", "1", "--seed", "11"])
        .args(["--out", dir.path().to_str().unwrap()])
        .assert()
        .success();
    let instance = formats::read_instance(&dir.path().join("instance.json")).unwrap();
    assert!(formats::planted_satisfies(&instance));
    let cnf = std::fs::read_to_string(dir.path().join("instance.cnf")).unwrap();
    assert!(formats::dimacs_satisfied(&cnf, instance.x).unwrap());
    let manifest = formats::read_manifest(&dir.path().join("gen.manifest.json")).unwrap();
    assert_eq!(manifest.command, "gen");
    assert_eq!(manifest.seed, 11);
    // recorded hashes match the bytes on disk
    for (name, hash) in &manifest.file_hashes {
        let bytes = std::fs::read(dir.path().join(name)).unwrap();
        assert_eq!(&formats::content_hash(&bytes), hash);
    }
}

#[test]
fn gen_alpha_zero_yields_free_formula() {
    let dir = tempfile::tempdir().unwrap();
    bin()
        .args(["gen", "--kernel", "xor:2", "--n", "10", "--alpha", "0", "--seed", "0"])
        .args(["--out", dir.path().to_str().unwrap()])
        .assert()
        .success();
    let path = dir.path().join("instance.json");
    bin()
        .args(["count", "--instance", path.to_str().unwrap()])
        .assert()
        .success()
        .stdout("1024\n");
}

#[test]
fn entropy_of_stored_instance_matches_log_count() {
    let dir = tempfile::tempdir().unwrap();
    bin()
        .args(["gen", "--kernel", "nae:3", "--n", "7", "--alpha", "1", "--seed", "5"])
        .args(["--out", dir.path().to_str().unwrap()])
        .assert()
        .success();
    let path = dir.path().join("instance.json");
    let count: f64 = String::from_utf8(
        bin()
            .args(["count", "--instance", path.to_str().unwrap()])
            .output()
            .unwrap()
            .stdout,
    )
    .unwrap()
    .trim()
    .parse()
    .unwrap();
    let entropy: f64 = String::from_utf8(
        bin()
            .args(["entropy", "--kernel", "nae:3", "--instance", path.to_str().unwrap()])
            .output()
            .unwrap()
            .stdout,
    )
    .unwrap()
    .trim()
    .parse()
    .unwrap();
    assert!((entropy - count.log2()).abs() < 1e-9);
}

#[test]
fn bad_kernel_spec_exits_2() {
    bin()
        .args(["gamma", "--kernel", "frob:2", "--l", "2"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("kernel spec"));
}

#[test]
fn oversized_gamma_exits_3() {
    bin()
        .args(["gamma", "--kernel", "ksat:9", "--l", "9"])
        .assert()
        .code(3)
        .stderr(predicate::str::contains("budget"));
}

#[test]
fn convexity_reports_and_passes_for_xor() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    bin()
        .args(["convexity", "--kernel", "xor:2", "--l", "2", "--trials", "300", "--seed", "9"])
        .args(["--report", report.to_str().unwrap()])
        .assert()
        .success()
        .stdout(predicate::str::contains("convex-no-counterexample-found"));
    let text = std::fs::read_to_string(report).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["trials"], 300);
}

#[test]
fn experiment_rows_are_thread_invariant() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        bin()
            .args(["--threads", threads])
            .args(["subadd", "--kernel", "xor:2", "--n", "6", "--n1", "3", "--n2", "3"])
            .args(["--alpha", "0.5", "--graphs", "40", "--inner", "40", "--seed", "13"])
            .args(["--out", dir.path().to_str().unwrap()])
            .assert()
            .success();
        std::fs::read(dir.path().join("subadditivity.csv")).unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one, four, "CSV rows must be byte-identical across --threads");
}

#[test]
fn sbm_below_coupling_boundary_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    bin()
        .args(["sbm", "--n", "6", "--a", "2", "--b", "4", "--gamma-z", "2.5"])
        .args(["--gamma-list", "5,8", "--graphs", "15", "--seed", "1"])
        .args(["--out", dir.path().to_str().unwrap()])
        .assert()
        .code(4)
        .stdout(predicate::str::contains("verdict: fail"));
}
