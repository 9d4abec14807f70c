//! End-to-end runs through the public API: files on disk to round logs.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fedsel_core::clustering::ClusterConfig;
use fedsel_core::dataspace::CohortSpec;
use fedsel_core::flcore::{build_strategy, run_job, JobConfig, LocalTrainConfig, LrDecay};
use fedsel_core::metrics::{read_round_csv, write_round_csv};
use fedsel_core::{
    generate_synthetic, load_csv, load_idx, Cohort, Dataset, ElbowParams, Error, ModelKind,
    RoundsToTarget, ServerOptimizer, StrategyKind, SyntheticSpec,
};

fn job(strategy: StrategyKind, seed: u64) -> JobConfig {
    JobConfig {
        rounds: 8,
        parties_per_round_fraction: 0.3,
        straggler_rate: 0.2,
        target_accuracy: 0.6,
        server_optimizer: ServerOptimizer::Fedavg,
        strategy,
        seed,
        lr_decay: LrDecay::default(),
        local: LocalTrainConfig {
            tau: 3,
            eta: 0.2,
            mu: 0.0,
            batch_size: 8,
        },
        model: ModelKind::Logistic,
        stop_at_target: false,
    }
}

fn clustering() -> ClusterConfig {
    ClusterConfig {
        elbow: ElbowParams {
            k_min: 2,
            k_max: 6,
            restarts: 3,
            ..ElbowParams::default()
        },
        ..ClusterConfig::default()
    }
}

fn cohort(ds: Dataset, parties: usize, seed: u64) -> Cohort {
    let spec = CohortSpec {
        alpha: 0.5,
        num_parties: parties,
        test_fraction: 0.2,
    };
    Cohort::build(ds, &spec, seed).unwrap()
}

/// Writes a 4x4-pixel IDX pair whose images are a per-label bright column plus noise.
fn idx_fixture(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let (img, lab) = (dir.join("img.idx3"), dir.join("lab.idx1"));
    let mut f = fs::File::create(&img).unwrap();
    for v in [0x803u32, n as u32, 4, 4] {
        f.write_all(&v.to_be_bytes()).unwrap();
    }
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 4) as u8;
        labels.push(label);
        let px: Vec<u8> = (0..16)
            .map(|p| {
                if p % 4 == label as usize {
                    230
                } else {
                    ((i * 31 + p * 17) % 40) as u8
                }
            })
            .collect();
        f.write_all(&px).unwrap();
    }
    let mut f = fs::File::create(&lab).unwrap();
    for v in [0x801u32, n as u32] {
        f.write_all(&v.to_be_bytes()).unwrap();
    }
    f.write_all(&labels).unwrap();
    (img, lab)
}

#[test]
fn idx_dataset_trains_to_target() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = idx_fixture(dir.path(), 400);
    let ds = load_idx(&img, &lab).unwrap();
    assert_eq!((ds.len(), ds.dim(), ds.num_labels()), (400, 16, 4));
    let co = cohort(ds, 12, 5);
    for kind in [StrategyKind::Random, StrategyKind::Flips] {
        let (mut s, _) = build_strategy(kind, &co, &clustering(), 5).unwrap();
        let run = run_job(&job(kind, 5), &co, s.as_mut()).unwrap();
        assert_eq!(run.reports.len(), 8);
        let last = run.reports.last().unwrap().balanced_accuracy;
        assert!(
            last >= 0.9,
            "{kind}: separable columns should be learned, got {last}"
        );
    }
}

#[test]
fn truncated_idx_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = idx_fixture(dir.path(), 10);
    let bytes = fs::read(&img).unwrap();
    fs::write(&img, &bytes[..bytes.len() - 5]).unwrap();
    assert!(matches!(load_idx(&img, &lab), Err(Error::Format { .. })));
}

#[test]
fn csv_dataset_round_trips_through_a_job() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let mut text = String::from("label,f0,f1\n");
    for i in 0..300 {
        let label = i % 3;
        let (x, y) = [(0.0, 2.0), (2.0, 0.0), (-2.0, -2.0)][label];
        let jitter = ((i * 37) % 11) as f64 / 20.0;
        text.push_str(&format!("{label},{},{}\n", x + jitter, y - jitter));
    }
    fs::write(&path, text).unwrap();
    let co = cohort(load_csv(&path).unwrap(), 8, 2);
    let (mut s, clusters) = build_strategy(StrategyKind::Flips, &co, &clustering(), 2).unwrap();
    let clusters = clusters.expect("cluster-aware strategy returns its clustering");
    let members: BTreeSet<usize> = clusters
        .clusters
        .iter()
        .flat_map(|(_, m)| m.clone())
        .collect();
    assert_eq!(members, co.eligible_parties().into_iter().collect());

    let run = run_job(&job(StrategyKind::Flips, 2), &co, s.as_mut()).unwrap();
    let mut buf = Vec::new();
    write_round_csv(&mut buf, &run.reports, 3).unwrap();
    let back = read_round_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), run.reports.len());
    for (row, rep) in back.iter().zip(&run.reports) {
        assert_eq!(row.acc, rep.balanced_accuracy);
        assert_eq!(row.n_selected, rep.selected.len());
        assert_eq!(row.n_stragglers, rep.stragglers.len());
    }
}

/// Both strategies see the same partition, and a rerun reproduces every report.
#[test]
fn paired_runs_are_reproducible() {
    let spec = SyntheticSpec::balanced(4, 6, 80, 0.8);
    let make = || cohort(generate_synthetic(&spec, 9).unwrap(), 15, 9);
    let (a, b) = (make(), make());
    assert_eq!(a.test_rows, b.test_rows);
    for (x, y) in a.shards.iter().zip(&b.shards) {
        assert_eq!(x.example_indices, y.example_indices);
    }
    for kind in [StrategyKind::Random, StrategyKind::Flips] {
        let once = |co: &Cohort| {
            let (mut s, _) = build_strategy(kind, co, &clustering(), 9).unwrap();
            run_job(&job(kind, 9), co, s.as_mut()).unwrap().reports
        };
        let (ra, rb) = (once(&a), once(&b));
        assert_eq!(
            serde_json::to_string(&ra).unwrap(),
            serde_json::to_string(&rb).unwrap()
        );
    }
}

#[test]
fn stop_at_target_ends_the_job_early() {
    let co = cohort(
        generate_synthetic(&SyntheticSpec::balanced(3, 4, 100, 0.3), 4).unwrap(),
        10,
        4,
    );
    let mut cfg = job(StrategyKind::Random, 4);
    cfg.rounds = 50;
    cfg.stop_at_target = true;
    let (mut s, _) = build_strategy(StrategyKind::Random, &co, &clustering(), 4).unwrap();
    let reports = run_job(&cfg, &co, s.as_mut()).unwrap().reports;
    let rtt = fedsel_core::rounds_to_target(&reports, cfg.target_accuracy);
    assert_eq!(rtt, RoundsToTarget::Reached(reports.len()));
    assert!(reports.len() < 50);
}
