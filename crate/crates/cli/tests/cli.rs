use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hvnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvnet")).args(args).output().expect("spawn hvnet")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "hvnet failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn exact_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.jsonl");
    fs::write(&file, "{\"m\":2,\"points\":[[0.5,0.5]]}\n{\"m\":2,\"points\":[[0.25,0.75],[0.75,0.25]]}\n").unwrap();
    assert_eq!(stdout(&hvnet(&["hv", "--in", p(&file)])), "0.25\n0.3125\n");
}

#[test]
fn exact_with_reference_and_maximization() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.jsonl");
    fs::write(&file, "{\"m\":2,\"points\":[[10,1],[7,3],[4,7]]}\n").unwrap();
    assert_eq!(stdout(&hvnet(&["hv", "--in", p(&file), "--ref", "11,9"])), "32\n");
    fs::write(&file, "{\"m\":2,\"points\":[[-1,-2]]}\n").unwrap();
    assert_eq!(stdout(&hvnet(&["hv", "--in", p(&file), "--ref=-3,-4", "--maximize"])), "4\n");
}

#[test]
fn approximations_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    stdout(&hvnet(&["--seed", "5", "gen-data", "--m", "3", "--count", "20", "--out", p(&data)]));
    for method in ["line", "point"] {
        let a = stdout(&hvnet(&["--seed", "1", "approx", "--method", method, "--in", p(&data)]));
        let b = stdout(&hvnet(&["--seed", "1", "approx", "--method", method, "--in", p(&data)]));
        let c = stdout(&hvnet(&["--seed", "2", "approx", "--method", method, "--in", p(&data)]));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.lines().count(), 20);
    }
}

#[test]
fn train_eval_bench_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    let test = dir.path().join("test.jsonl");
    let model = dir.path().join("m3.json");
    let trace = dir.path().join("trace.csv");
    let csv = dir.path().join("bench.csv");
    stdout(&hvnet(&["--seed", "1", "gen-data", "--m", "3", "--count", "60", "--max-size", "20", "--out", p(&train)]));
    stdout(&hvnet(&["--seed", "2", "gen-data", "--m", "3", "--count", "30", "--max-size", "20", "--out", p(&test)]));
    stdout(&hvnet(&[
        "train", "--data", p(&train), "--out", p(&model), "--epochs", "2", "--hidden", "8", "--batch-size", "10",
        "--trace", p(&trace),
    ]));
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 3);

    let eval = stdout(&hvnet(&["eval", "--model", p(&model), "--data", p(&test)]));
    let mut lines = eval.lines();
    assert_eq!(lines.next(), Some("index,n,exact,predicted,error"));
    assert_eq!(lines.count(), 30);

    stdout(&hvnet(&[
        "bench", "--groups", p(&test), "--k-grid", "100,200", "--n-grid", "10", "--model", p(&model), "--out", p(&csv),
    ]));
    let table = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "method,config,m,group,mean_error,runtime_s");
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("point,k=100,3,0,"));
    assert!(rows[3].starts_with("line,n=10,3,0,"));
    assert!(rows[4].starts_with("hvnet,"));
}

#[test]
fn bad_input_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.jsonl");
    fs::write(&file, "{\"m\":2,\"points\":[[0.5,0.5],[0.6,0.6]]}\n").unwrap();
    let out = hvnet(&["hv", "--in", p(&file)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.jsonl:1: point 0 dominates point 1"));

    assert!(!hvnet(&["hv", "--in", p(&file), "--bogus"]).status.success());
    assert!(!hvnet(&["approx", "--method", "hvnet", "--in", p(&file)]).status.success());
}
