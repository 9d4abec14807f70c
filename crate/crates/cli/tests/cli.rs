use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fedsel"));
    c.env_remove("FEDSEL_OUTPUT_ROOT");
    c
}

fn config(out: &Path) -> Value {
    json!({
        "dataset": {"type": "synthetic", "num_labels": 3, "dim": 4, "per_label": 60, "spread": 0.8},
        "alpha": 0.5,
        "num_parties": 10,
        "fraction": 0.3,
        "rounds": 6,
        "target_accuracy": 0.7,
        "strategies": ["random", "flips"],
        "seeds": [3],
        "elbow": {"k_min": 2, "k_max": 5, "restarts": 3},
        "output_dir": out
    })
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_one_log_per_cell_and_a_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", &config(&out));
    let res = run(bin().arg("run").arg(&cfg));
    assert_eq!(res.status.code(), Some(0));

    assert_eq!(files_with_ext(&out.join("logs"), "csv").len(), 2);
    assert_eq!(files_with_ext(&out.join("logs"), "json").len(), 2);
    assert_eq!(files_with_ext(&out.join("summaries"), "json").len(), 2);
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "strategy,seed,rounds_to_target,peak_accuracy,total_bytes"
    );
    assert_eq!(lines.len(), 3);
}

/// Rounds-to-target in the table must agree with a recount from the raw logs.
#[test]
fn comparison_matches_round_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let target = 0.7;
    let cfg = write_config(tmp.path(), "c.json", &config(&out));
    assert_eq!(run(bin().arg("run").arg(&cfg)).status.code(), Some(0));

    let mut rd = csv::Reader::from_path(out.join("comparison.csv")).unwrap();
    for rec in rd.records() {
        let rec = rec.unwrap();
        let log = out.join(format!("logs/{}-seed{}.csv", &rec[0], &rec[1]));
        let mut lr = csv::Reader::from_path(log).unwrap();
        let rows: Vec<(String, f64, u64)> = lr
            .records()
            .map(|r| {
                let r = r.unwrap();
                let bytes =
                    r[r.len() - 2].parse::<u64>().unwrap() + r[r.len() - 1].parse::<u64>().unwrap();
                (r[0].to_string(), r[1].parse().unwrap(), bytes)
            })
            .collect();
        let expect = rows
            .iter()
            .find(|(_, acc, _)| *acc >= target)
            .map(|(round, _, _)| round.clone())
            .unwrap_or(format!(">{}", rows.len()));
        assert_eq!(&rec[2], expect);
        let peak = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        assert_eq!(rec[3].parse::<f64>().unwrap(), peak);
        assert_eq!(
            rec[4].parse::<u64>().unwrap(),
            rows.iter().map(|r| r.2).sum::<u64>()
        );
    }
}

#[test]
fn negative_alpha_is_a_config_error_naming_alpha() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut v = config(&out);
    v["alpha"] = json!(-1);
    v["rounds"] = json!(0);
    let cfg = write_config(tmp.path(), "bad.json", &v);
    let res = run(bin().arg("run").arg(&cfg));
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("alpha"), "{err}");
    assert!(err.contains("rounds"), "{err}");
    assert!(!out.exists(), "nothing is written for a rejected config");
}

#[test]
fn unreadable_dataset_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = config(&tmp.path().join("out"));
    v["dataset"] = json!({"type": "csv", "path": tmp.path().join("absent.csv")});
    let cfg = write_config(tmp.path(), "c.json", &v);
    assert_eq!(run(bin().arg("run").arg(&cfg)).status.code(), Some(2));
}

#[test]
fn rerun_gives_identical_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let cfg = write_config(tmp.path(), "c.json", &config(dir));
        assert_eq!(run(bin().arg("run").arg(&cfg)).status.code(), Some(0));
    }
    for name in [
        "random-seed3.csv",
        "flips-seed3.csv",
        "random-seed3.json",
        "flips-seed3.json",
    ] {
        let x = fs::read(a.join("logs").join(name)).unwrap();
        let y = fs::read(b.join("logs").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn env_var_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let named = tmp.path().join("named");
    let root = tmp.path().join("root");
    let cfg = write_config(tmp.path(), "c.json", &config(&named));
    let res = run(bin().arg("run").arg(&cfg).env("FEDSEL_OUTPUT_ROOT", &root));
    assert_eq!(res.status.code(), Some(0));
    assert!(root.join("comparison.csv").is_file());
    assert!(!named.exists());
}

#[test]
fn plot_data_copies_accuracy_column() {
    let tmp = tempfile::tempdir().unwrap();
    let logs = tmp.path().join("logs");
    fs::create_dir(&logs).unwrap();
    let header = "round,acc,lA_0,lA_1,n_selected,n_stragglers,bytes_up,bytes_down";
    let accs = ["0.5", "0.625", "0.7000000000000001"];
    let mut a = vec![header.to_string()];
    for (i, acc) in accs.iter().enumerate() {
        a.push(format!("{},{acc},0.5,,3,0,24,24", i + 1));
    }
    fs::write(logs.join("flips-seed0.csv"), a.join("\n") + "\n").unwrap();
    fs::write(logs.join("random-seed0.csv"), format!("{header}\n")).unwrap();

    let plot = tmp.path().join("plot");
    let res = run(bin().arg("plot-data").arg(&logs).arg("--out").arg(&plot));
    assert_eq!(res.status.code(), Some(0));

    let flips = fs::read_to_string(plot.join("flips-seed0.csv")).unwrap();
    let lines: Vec<&str> = flips.lines().collect();
    assert_eq!(
        lines,
        [
            "round,balanced_accuracy",
            "1,0.5",
            "2,0.625",
            "3,0.7000000000000001"
        ]
    );
    let empty = fs::read_to_string(plot.join("random-seed0.csv")).unwrap();
    assert_eq!(empty, "round,balanced_accuracy\n");
}

#[test]
fn plot_data_on_real_run_has_one_row_per_round() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", &config(&out));
    assert_eq!(run(bin().arg("run").arg(&cfg)).status.code(), Some(0));
    let res = run(bin().arg("plot-data").arg(out.join("logs")));
    assert_eq!(res.status.code(), Some(0));
    let series = files_with_ext(&out.join("logs/plot"), "csv");
    assert_eq!(series.len(), 2);
    for s in series {
        assert_eq!(fs::read_to_string(s).unwrap().lines().count(), 1 + 6);
    }
}

#[test]
fn plot_data_without_logs_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let res = run(bin().arg("plot-data").arg(tmp.path().join("missing")));
    assert_eq!(res.status.code(), Some(2));
    let res = run(bin().arg("plot-data").arg(tmp.path()));
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn cluster_report_prints_elbow_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut v = config(&out);
    v["seeds"] = json!([3, 4]);
    let cfg = write_config(tmp.path(), "c.json", &v);
    let res = run(bin().arg("cluster-report").arg(&cfg));
    assert_eq!(res.status.code(), Some(0));
    let curves: Vec<Value> = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(curves.len(), 2);
    for c in &curves {
        assert_eq!(c["k_values"], json!([2, 3, 4, 5]));
        assert_eq!(c["mean_dbi"].as_array().unwrap().len(), 4);
        let k = c["chosen_k"].as_u64().unwrap();
        assert!((2..=5).contains(&k));
    }
    assert!(out.join("clusters/elbow-seed4.json").is_file());
}
