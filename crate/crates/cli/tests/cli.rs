//! End-to-end checks of the command-line interface: subcommand plumbing,
//! exit codes, and agreement between solver outputs across entry points.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_costnet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().next().unwrap_or_else(|| panic!("no output: {out:?}"));
    serde_json::from_str(line).unwrap_or_else(|e| panic!("bad json {line:?}: {e}"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("costnet-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn bench_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks").join(name)
}

#[test]
fn gen_solve_oracle_agree() {
    let instance = tmp("gen_solve.wcsp");
    let out = run(&[
        "gen", "--topology", "scalefree", "--n", "10", "--d", "5", "--seed", "7", "--out",
        instance.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let solve = run(&["solve", "--algorithm", "be", instance.to_str().unwrap()]);
    assert_eq!(solve.status.code(), Some(0));
    let solved = stdout_json(&solve);

    let oracle = run(&["oracle", instance.to_str().unwrap()]);
    assert_eq!(oracle.status.code(), Some(0));
    let reference = stdout_json(&oracle);

    assert_eq!(solved["optimum"], reference["optimum"]);
    assert_eq!(solved["assignment"], reference["assignment"]);
}

#[test]
fn gen_is_deterministic_per_seed() {
    let a = tmp("det_a.wcsp");
    let b = tmp("det_b.wcsp");
    for path in [&a, &b] {
        let out = run(&[
            "gen", "--topology", "random", "--n", "9", "--d", "3", "--p1", "0.4", "--p2", "0.3",
            "--seed", "12", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn mbe_z_below_arity_refuses_with_exit_3() {
    let spot = bench_file("spot_like.wcsp");
    let out = run(&["solve", "--algorithm", "mbe", "--z", "2", spot.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oversized_instance_refused_with_exit_3() {
    let celar = bench_file("celar_scen_like.wcsp");
    let out = run(&["solve", celar.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("budget"), "refusal should mention the budget: {err}");
}

#[test]
fn truncated_tuple_line_exits_2_with_line_number() {
    let path = tmp("broken.wcsp");
    std::fs::write(&path, "broken 2 2 1 10\n2 2\n2 0 1 0 1\n0 5\n").unwrap();
    let out = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "stderr should name the line: {err}");
}

#[test]
fn unknown_flag_exits_2() {
    let out = run(&["solve", "--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dpop_matches_solve_and_reports_message_counts() {
    let instance = tmp("dpop.wcsp");
    run(&[
        "gen", "--topology", "random", "--n", "8", "--d", "3", "--p1", "0.25", "--p2", "0.2",
        "--seed", "3", "--out", instance.to_str().unwrap(),
    ]);
    let solve = stdout_json(&run(&[
        "solve", "--ordering", "dfs-degree", instance.to_str().unwrap(),
    ]));
    let log = tmp("dpop.log.jsonl");
    let dpop_out = run(&[
        "dpop", "--message-log", log.to_str().unwrap(), instance.to_str().unwrap(),
    ]);
    assert_eq!(dpop_out.status.code(), Some(0));
    let dpop = stdout_json(&dpop_out);
    assert_eq!(dpop["optimum"], solve["optimum"]);
    assert_eq!(dpop["metrics"]["util_messages"], serde_json::json!(7));
    assert_eq!(dpop["metrics"]["value_messages"], serde_json::json!(7));

    let log_text = std::fs::read_to_string(&log).unwrap();
    assert_eq!(log_text.lines().count(), 14);
    for line in log_text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["kind"] == "util" || v["kind"] == "value");
    }
}

#[test]
fn adpop_bound_never_exceeds_exact_optimum() {
    let instance = tmp("adpop.wcsp");
    run(&[
        "gen", "--topology", "random", "--n", "8", "--d", "3", "--p1", "0.3", "--p2", "0.0",
        "--seed", "5", "--out", instance.to_str().unwrap(),
    ]);
    let exact = stdout_json(&run(&["solve", instance.to_str().unwrap()]));
    let bounded = stdout_json(&run(&["adpop", "--z", "2", instance.to_str().unwrap()]));
    let lower = bounded["bound"].as_f64().unwrap();
    let optimum = exact["optimum"].as_f64().unwrap();
    assert!(lower <= optimum);
}

#[test]
fn mpe_reports_original_space_assignment() {
    let model = tmp("net.uai");
    std::fs::write(
        &model,
        "BAYES\n3\n2 2 2\n3\n1 0\n2 0 1\n2 1 2\n\n2\n0.6 0.4\n4\n0.9 0.1 0.2 0.8\n4\n0.3 0.7 0.5 0.5\n",
    )
    .unwrap();
    let evidence = tmp("net.evid");
    std::fs::write(&evidence, "1 2 0\n").unwrap();
    let out = run(&["mpe", "--evidence", evidence.to_str().unwrap(), model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    let assignment = record["assignment"].as_array().unwrap();
    assert_eq!(assignment.len(), 3);
    assert_eq!(assignment[2], serde_json::json!(0), "evidence value is echoed back");
    assert_eq!(record["task"], "max_product");
}

#[test]
fn mpe_with_full_evidence_leaves_no_free_variables() {
    let model = tmp("full_ev.uai");
    std::fs::write(
        &model,
        "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n\n2\n0.6 0.4\n4\n0.9 0.1 0.2 0.8\n",
    )
    .unwrap();
    let evidence = tmp("full_ev.evid");
    std::fs::write(&evidence, "2 0 0 1 1\n").unwrap();
    let out = run(&["mpe", "--evidence", evidence.to_str().unwrap(), model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    assert_eq!(record["assignment"], serde_json::json!([0, 1]));
    // Pr(x0=0) * Pr(x1=1 | x0=0) = 0.6 * 0.1.
    let logp = record["optimum"].as_f64().unwrap();
    assert!((logp - (0.6f64 * 0.1).ln()).abs() < 1e-9);
}

#[test]
fn mpe_log_and_linear_agree() {
    let model = tmp("agree.uai");
    std::fs::write(
        &model,
        "BAYES\n2\n2 3\n2\n1 0\n2 0 1\n\n2\n0.25 0.75\n6\n0.2 0.3 0.5 0.6 0.3 0.1\n",
    )
    .unwrap();
    let log_rec = stdout_json(&run(&["mpe", model.to_str().unwrap()]));
    let lin_rec = stdout_json(&run(&["mpe", "--linear", model.to_str().unwrap()]));
    let from_log = log_rec["optimum"].as_f64().unwrap().exp();
    let linear = lin_rec["optimum"].as_f64().unwrap();
    assert!((from_log - linear).abs() <= 1e-9 * linear.max(1.0));
    assert_eq!(log_rec["assignment"], lin_rec["assignment"]);
}

#[test]
fn ordering_file_round_trips_through_solver() {
    let instance = tmp("ord.wcsp");
    run(&[
        "gen", "--topology", "grid", "--n", "9", "--d", "3", "--p2", "0.2", "--seed", "1",
        "--out", instance.to_str().unwrap(),
    ]);
    let ord_path = tmp("ord.perm");
    let first = stdout_json(&run(&[
        "solve",
        "--write-ordering",
        ord_path.to_str().unwrap(),
        instance.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&ord_path).unwrap();
    assert_eq!(text.split_whitespace().count(), 9);
    let second = stdout_json(&run(&[
        "solve", "--ordering", ord_path.to_str().unwrap(), instance.to_str().unwrap(),
    ]));
    assert_eq!(first["optimum"], second["optimum"]);
    assert_eq!(first["assignment"], second["assignment"]);
}

#[test]
fn bench_writes_csv_report() {
    let a = tmp("bench_a.wcsp");
    let b = tmp("bench_b.wcsp");
    run(&["gen", "--topology", "random", "--n", "7", "--d", "3", "--p1", "0.3", "--p2", "0.2",
        "--seed", "1", "--out", a.to_str().unwrap()]);
    run(&["gen", "--topology", "scalefree", "--n", "7", "--d", "3", "--p2", "0.2",
        "--seed", "2", "--out", b.to_str().unwrap()]);
    let suite = tmp("suite.txt");
    std::fs::write(&suite, "# two instances\nbench_a.wcsp\nbench_b.wcsp\n").unwrap();
    let report = tmp("report.csv");
    let out = run(&[
        "bench",
        "--suite", suite.to_str().unwrap(),
        "--algorithms", "be,mbe:3,dpop",
        "--backends", "seq,par:2",
        "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // Header + 2 instances x 3 algorithms x 2 backends.
    assert_eq!(lines.len(), 1 + 12);
    assert!(lines[0].starts_with("instance,algorithm,z,backend"));
    assert!(lines[1..].iter().all(|l| l.contains(",ok") || l.contains(",oom")));
}

#[test]
fn bench_jsonl_format_parses() {
    let a = tmp("bench_j.wcsp");
    run(&["gen", "--topology", "random", "--n", "6", "--d", "2", "--p1", "0.3", "--p2", "0.0",
        "--seed", "4", "--out", a.to_str().unwrap()]);
    let suite = tmp("suite_j.txt");
    std::fs::write(&suite, format!("{}\n", a.display())).unwrap();
    let out = run(&["bench", "--suite", suite.to_str().unwrap(), "--format", "jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    for line in String::from_utf8_lossy(&out.stdout).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["status"], "ok");
    }
}

#[test]
fn timeout_exits_4() {
    let instance = tmp("slow.wcsp");
    // A star of uniform-cost functions: every branch completes only at the
    // last variable, so enumeration cannot prune and must visit all 10^8
    // tuples, which cannot finish within a second.
    let mut text = String::from("star 8 10 7 1000\n10 10 10 10 10 10 10 10\n");
    for i in 0..7 {
        text.push_str(&format!("2 {i} 7 5 0\n"));
    }
    std::fs::write(&instance, text).unwrap();
    let out = run(&["oracle", "--timeout-sec", "1", instance.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}
