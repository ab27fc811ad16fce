use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ricluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ricluster"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("exp.conf");
    let text = format!(
        "# smoke\nn = 300\nm = 200\nx_law = pareto(1, 6)\ny_law = pareto(1, 5.5)\nreplicates = 3\nseed = 11\n\
         k_min = 2\nk_max = 10\npmf_k_max = 128\n{extra}"
    );
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn stats_on_k4() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("k4.txt");
    fs::write(&edges, "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    let out = ricluster(&["stats", edges.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1), Some("3,4,12,12,1,12,12,1"));
}

#[test]
fn stats_on_empty_file_warns() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("empty.txt");
    fs::write(&edges, "# nothing\n").unwrap();
    let out = ricluster(&["stats", edges.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("warning"));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn malformed_edge_list_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("bad.txt");
    fs::write(&edges, "0 1\n1 two\n").unwrap();
    let out = ricluster(&["stats", edges.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains(":2:"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ricluster(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ricluster(&["fit-delta"]).status.code(), Some(1));
    assert!(ricluster(&["--help"]).status.success());
}

#[test]
fn budget_abort_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "edge_budget = 1\n");
    let out = ricluster(&["simulate", "--config", &config]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exported_graph_round_trips_through_stats() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "replicates = 1\n");
    let edges = dir.path().join("g.txt");
    let out_dir = dir.path().join("sim");
    let out = ricluster(&[
        "simulate",
        "--config",
        &config,
        "--export-edges",
        edges.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stats = ricluster(&["stats", edges.to_str().unwrap()]);
    let in_memory = fs::read_to_string(out_dir.join("spectrum.csv")).unwrap();
    assert_eq!(String::from_utf8(stats.stdout).unwrap(), in_memory);
}

#[test]
fn compare_writes_reports_and_fit_delta_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "save_replicates = true\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out_dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = ricluster(&[
            "--threads",
            threads,
            "compare",
            "--config",
            &config,
            "-o",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["report.csv", "report.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    assert!(a.join("timing.json").exists());
    assert_eq!(fs::read_dir(a.join("replicates")).unwrap().count(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["replicates_succeeded"], 3);
    assert_eq!(json["schema_version"], 1);

    let report = a.join("report.csv");
    let out = ricluster(&[
        "fit-delta",
        report.to_str().unwrap(),
        "--column",
        "C_pred_lo",
        "--k-lo",
        "2",
        "--k-hi",
        "10",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(fit["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = ricluster(&["theory", "--config", &config, "--k-max", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("k,a,b,A_lo"));
    let bad = ricluster(&["theory", "--config", &config, "--k-min", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}
