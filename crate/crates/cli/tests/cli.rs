use std::path::Path;
use std::process::{Command, Output};

fn rbcbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbcbs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn gen_into(dir: &Path, name: &str, seed: u64, vertices: usize, agents: usize) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap();
    let out = rbcbs(&[
        "gen",
        "--seed",
        &seed.to_string(),
        "--vertices",
        &vertices.to_string(),
        "--agents",
        &agents.to_string(),
        "--out",
        p,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p.to_string()
}

#[test]
fn gen_is_deterministic() {
    let a = rbcbs(&["gen", "--seed", "3", "--vertices", "12", "--agents", "2"]);
    let b = rbcbs(&["gen", "--seed", "3", "--vertices", "12", "--agents", "2"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("\"agents\""));
    let c = rbcbs(&["gen", "--seed", "4", "--vertices", "12", "--agents", "2"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn calibrate_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_into(dir.path(), "i.json", 5, 10, 2);
    let cal = rbcbs(&["calibrate", &inst, "--timeout-scale", "0.1"]);
    assert_eq!(code(&cal), 0);
    let interval: serde_json::Value = serde_json::from_str(stdout(&cal).trim()).unwrap();
    let (lo, hi) = (
        interval["lower"].as_f64().unwrap(),
        interval["upper"].as_f64().unwrap(),
    );
    assert!(lo <= hi);

    let sol_path = dir.path().join("sol.json");
    let out = rbcbs(&[
        "solve",
        &inst,
        "--risk-level",
        "50",
        "--alloc",
        "inverse",
        "--timeout-scale",
        "0.1",
        "--out",
        sol_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("agent 0:"));
    let sol: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sol_path).unwrap()).unwrap();
    let delta = sol["delta"].as_f64().unwrap();
    assert!((delta - (lo + 0.5 * (hi - lo))).abs() < 1e-9);
    assert!(sol["total_risk"].as_f64().unwrap() <= delta + 1e-9);
    assert_eq!(sol["agents"].as_array().unwrap().len(), 2);
}

#[test]
fn every_method_solves_at_the_upper_bound() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_into(dir.path(), "i.json", 9, 8, 2);
    for m in ["rbcbs", "lagrangian", "pareto", "pruned"] {
        let out = rbcbs(&[
            "solve",
            &inst,
            "--method",
            m,
            "--delta",
            "1e9",
            "--timeout-scale",
            "0.1",
            "--lambda",
            "3",
            "--prune-quantile",
            "1",
        ]);
        assert_eq!(
            code(&out),
            0,
            "{m}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_into(dir.path(), "i.json", 5, 10, 2);

    // every edge carries some hazard, so a zero bound admits no path
    assert_eq!(code(&rbcbs(&["solve", &inst, "--delta", "0"])), 2);
    assert_eq!(code(&rbcbs(&["solve", &inst, "--delta=-1"])), 4);

    // adjacent goals closer than two radii never become conflict free
    let hard = dir.path().join("hard.json");
    std::fs::write(
        &hard,
        r#"{"max_dist": 5, "radius": 0.1,
            "vertices": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 1, "y": 0},
                         {"id": 2, "x": 1.05, "y": 0}, {"id": 3, "x": 2, "y": 0}],
            "edges": [{"u": 0, "v": 1, "dist": 1, "risk": 0}, {"u": 3, "v": 2, "dist": 0.95, "risk": 0}],
            "pair_dist": "euclidean",
            "agents": [{"id": 0, "start": 0, "goal": 1}, {"id": 1, "start": 3, "goal": 2}]}"#,
    )
    .unwrap();
    let out = rbcbs(&[
        "solve",
        hard.to_str().unwrap(),
        "--delta",
        "1",
        "--timeout-scale",
        "0.002",
    ]);
    assert_eq!(code(&out), 3);

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&rbcbs(&["solve", missing.to_str().unwrap()])), 4);
    assert_eq!(code(&rbcbs(&["solve", &inst, "--method", "dijkstra"])), 4);
    assert_eq!(code(&rbcbs(&["solve", &inst, "--risk-level", "150"])), 4);
    assert_eq!(code(&rbcbs(&["solve", &inst, "--timeout-scale", "0"])), 4);
    assert_eq!(code(&rbcbs(&["solve", &inst, "--prune-quantile", "2"])), 4);
    assert_eq!(code(&rbcbs(&["frobnicate"])), 4);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"max_dist\": 1}").unwrap();
    assert_eq!(code(&rbcbs(&["calibrate", garbage.to_str().unwrap()])), 4);
    assert_eq!(code(&rbcbs(&["--help"])), 0);
}

#[test]
fn bench_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = rbcbs(&[
            "bench",
            "--seed",
            "11",
            "--count",
            "4",
            "--sizes",
            "6,10",
            "--max-agents",
            "3",
            "--timeout-scale",
            "0.5",
            "--threads",
            threads,
            "--no-timing",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "2");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance,method,level,success,total_risk,avg_steps,wall_ms,ct_nodes,reallocs"
    );
    // 4 instances x 4 methods x 5 levels
    assert_eq!(lines.count(), 80);
}

#[test]
fn bench_on_instance_files_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_into(dir.path(), "a.json", 1, 8, 2);
    let b = gen_into(dir.path(), "b.json", 2, 8, 2);
    let summary = dir.path().join("summary.csv");
    let out = rbcbs(&[
        "bench",
        &a,
        &b,
        "--method",
        "rbcbs,pareto",
        "--risk-level",
        "0,100",
        "--timeout-scale",
        "0.1",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // header plus 2 instances x 2 methods x 2 levels
    assert_eq!(stdout(&out).lines().count(), 9);
    let s = std::fs::read_to_string(summary).unwrap();
    assert_eq!(s.lines().count(), 5);
}
