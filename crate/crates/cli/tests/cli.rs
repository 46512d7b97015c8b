use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topk-walk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn pa_file(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("pa.txt");
    let o = run(&["generate", "pa", "--n", "3000", "--seed", "3", "--out", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    p
}

#[test]
fn help_and_version_exit_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = stdout(&o);
    for sub in ["generate", "ingest", "detect", "analyze", "estimate", "experiment"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
    let o = run(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn help_lists_module_flags() {
    let detect = stdout(&run(&["detect", "--help"]));
    for flag in [
        "--k", "--alpha", "--rule", "--m", "--a-bar", "--b-bar", "--q", "--transient", "--mode", "--seed",
        "--max-steps", "--out", "--symmetrize", "--threads",
    ] {
        assert!(detect.contains(flag), "{flag} missing from detect help");
    }
    let gen_pa = stdout(&run(&["generate", "pa", "--help"]));
    for flag in ["--n", "--edges-per-node", "--attract", "--seed", "--out"] {
        assert!(gen_pa.contains(flag), "{flag} missing from generate pa help");
    }
    let gen_cm = stdout(&run(&["generate", "cm", "--help"]));
    for flag in ["--gamma", "--c", "--xprime"] {
        assert!(gen_cm.contains(flag), "{flag} missing from generate cm help");
    }
    let hitting = stdout(&run(&["analyze", "hitting", "--help"]));
    for flag in ["--alpha", "--target", "--nu"] {
        assert!(hitting.contains(flag), "{flag} missing from analyze hitting help");
    }
    let evt = stdout(&run(&["estimate", "evt", "--help"]));
    for flag in ["--gamma", "--c", "--n", "--k"] {
        assert!(evt.contains(flag), "{flag} missing from estimate evt help");
    }
}

#[test]
fn detect_happy_path_writes_csv() {
    let dir = TempDir::new().unwrap();
    let graph = pa_file(&dir);
    let out = dir.path().join("top.csv");
    let o = run(&[
        "detect", "--k", "10", "--alpha", "2", "--rule", "r2", "--b-bar", "7", "--q", "0.5", "--seed", "1",
        "--out", out.to_str().unwrap(), graph.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "original_id,degree,hits");
    assert_eq!(lines.len(), 11);
    let summary = stdout(&o);
    assert!(summary.contains("rule=r2") && summary.contains("threshold=7") && summary.contains("raw_steps="));

    // Same seed, same bytes.
    let again = dir.path().join("again.csv");
    run(&[
        "detect", "--k", "10", "--alpha", "2", "--rule", "r2", "--b-bar", "7", "--seed", "1",
        "--out", again.to_str().unwrap(), graph.to_str().unwrap(),
    ]);
    assert_eq!(csv, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn rule_without_threshold_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let graph = write(dir.path(), "g.txt", "0 1\n1 2\n");
    let o = run(&["detect", "--k", "1", "--rule", "r1", graph.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--a-bar"));
}

#[test]
fn conflicting_thresholds_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let graph = write(dir.path(), "g.txt", "0 1\n1 2\n");
    let g = graph.to_str().unwrap();
    let o = run(&["detect", "--k", "1", "--rule", "r2", "--b-bar", "1", "--a-bar", "0.3", g]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["detect", "--k", "1", "--rule", "r2", "--a-bar", "0.3", g]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("does not apply"));
}

#[test]
fn flags_are_checked_before_loading() {
    // The graph path does not exist; a usage error must win over the I/O error.
    for args in [
        vec!["detect", "--k", "2", "--rule", "r2", "--b-bar", "1", "--q", "1.5", "missing.txt"],
        vec!["detect", "--k", "2", "--rule", "r0", "--a-bar", "0", "missing.txt"],
        vec!["detect", "--k", "2", "--rule", "fixed", "--m", "10", "--alpha", "-1", "missing.txt"],
        vec!["experiment", "accuracy", "--m-grid", "5,5", "missing.txt"],
        vec!["analyze", "hitting", "--nu", "sideways", "missing.txt"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    let o = run(&["detect", "--k", "2", "--rule", "r2", "--b-bar", "1", "missing.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flags_and_subcommands_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["detect", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn unreachable_target_exits_two() {
    let dir = TempDir::new().unwrap();
    let graph = write(dir.path(), "split.txt", "0 1\n0 2\n3 4\n");
    let o = run(&["analyze", "hitting", "--alpha", "0", graph.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unreachable target"), "{}", stderr(&o));
}

#[test]
fn unfired_rule_exits_two() {
    let dir = TempDir::new().unwrap();
    let graph = pa_file(&dir);
    let o = run(&[
        "detect", "--k", "10", "--rule", "r1", "--x0", "50", "--max-steps", "500", graph.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fired=false"));
}

#[test]
fn analyze_outputs() {
    let dir = TempDir::new().unwrap();
    let graph = write(dir.path(), "star.txt", "# star\n10 11\n10 12\n10 13\n");
    let g = graph.to_str().unwrap();

    let o = run(&["analyze", "stationary", "--alpha", "1", g]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("original_id,degree,pi"));
    assert!(stdout(&o).contains("10,3,0.4"));

    let o = run(&["analyze", "return-time", "--alpha", "0", g]);
    assert!(stdout(&o).contains("return_time=2\n"));
    // α defaults to the average degree, so the jump rate is one half.
    let o = run(&["analyze", "return-time", g]);
    assert!(stdout(&o).contains("jump_probability=0.5\n"), "{}", stdout(&o));

    let o = run(&["analyze", "hitting", "--alpha", "0", g]);
    assert!(stdout(&o).contains("exact=0.75"));
    let o = run(&["analyze", "hitting", "--alpha", "0", "--nu", "others", g]);
    assert!(stdout(&o).contains("exact=1\n") && stdout(&o).contains("asymptotic=1\n"));
    let o = run(&["analyze", "hitting", "--alpha", "0", "--target", "11", "--nu", "node:12", g]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("target=11"));

    let o = run(&["analyze", "poisson", "--alpha", "1", "--k", "1", "--m", "0", g]);
    assert!(stdout(&o).contains("bound=1\n") && stdout(&o).contains("bound_raw=2\n"));
}

#[test]
fn estimate_outputs() {
    let o = run(&["estimate", "evt", "--gamma", "2.5", "--c", "3.7", "--n", "100000", "--k", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let d1: f64 = text.lines().find_map(|l| l.strip_prefix("d1=")).unwrap().parse().unwrap();
    assert!((126.0..=128.0).contains(&d1));
    assert!(text.contains("d3="));
    let o = run(&["estimate", "x0", "--k", "10", "--a-bar", "0.3"]);
    assert_eq!(stdout(&o).trim(), "x0=5");
    assert_eq!(run(&["estimate", "evt", "--gamma", "0.9", "--c", "1", "--n", "10"]).status.code(), Some(1));
}

#[test]
fn generate_and_ingest_round_trip() {
    let dir = TempDir::new().unwrap();
    let cm = dir.path().join("cm.txt");
    let o = run(&[
        "generate", "cm", "--n", "2000", "--gamma", "2.5", "--c", "3.7", "--xprime", "2", "--seed", "4",
        "--out", cm.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cache = dir.path().join("cm.bin");
    let o = run(&["ingest", cm.to_str().unwrap(), "--out", cache.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let from_text = stdout(&o);
    let o = run(&["ingest", cache.to_str().unwrap()]);
    assert_eq!(stdout(&o), from_text);
    assert!(from_text.contains("nodes=") && from_text.contains("max_degree="));

    let bad = write(dir.path(), "bad.txt", "0 1\n2 x\n");
    let o = run(&["ingest", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn experiments_are_thread_count_independent() {
    let dir = TempDir::new().unwrap();
    let graph = pa_file(&dir);
    let g = graph.to_str().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("stop{threads}.csv"));
        let o = run(&[
            "experiment", "stopping", "--k", "5", "--rule", "r2", "--b-bar", "3", "--runs", "20", "--threads", threads,
            "--seed", "9", "--out", out.to_str().unwrap(), g,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("mean_correct="));
        outputs.push(std::fs::read_to_string(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].starts_with("trial,raw_steps,samples,correct_count,full_list_correct\n"));

    let o = run(&["experiment", "hitting", "--runs", "10", g]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("trial,steps\n"));
    assert!(stderr(&o).contains("mean="));

    let o = run(&["experiment", "accuracy", "--runs", "5", "--k", "3", "--m-grid", "10,100", "--mode", "restart", g]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("m,mean_correct,ci95,exact,poisson\n"));
}
