//! Wires dataset, cohort, clustering, selection and training into on-disk artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fedsel_core::clustering::{optimized_clusters, ElbowCurve};
use fedsel_core::dataspace::CohortSpec;
use fedsel_core::flcore::{build_strategy, run_job};
use fedsel_core::metrics::{write_round_csv, write_round_json};
use fedsel_core::{generate_synthetic, load_csv, load_idx, Cohort, Dataset, JobSummary};
use log::{info, warn};

use crate::config::{DatasetSpec, ExperimentConfig};

pub fn load_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    let ds = match &cfg.dataset {
        DatasetSpec::Synthetic { .. } => {
            let spec = cfg.synthetic_spec().expect("synthetic dataset");
            generate_synthetic(&spec, seed)?
        }
        DatasetSpec::Idx { images, labels } => load_idx(images, labels)?,
        DatasetSpec::Csv { path } => load_csv(path)?,
    };
    Ok(ds)
}

/// One cohort per seed. Every strategy run under that seed sees the same
/// partition, so paired results differ only in the selector.
pub fn cohort_for(cfg: &ExperimentConfig, seed: u64) -> Result<Cohort> {
    let spec = CohortSpec {
        alpha: cfg.alpha,
        num_parties: cfg.num_parties,
        test_fraction: cfg.test_fraction,
    };
    Ok(Cohort::build(load_dataset(cfg, seed)?, &spec, seed)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn make_dirs(root: &Path, names: &[&str]) -> Result<()> {
    for n in names {
        let d = root.join(n);
        fs::create_dir_all(&d).with_context(|| format!("cannot create {}", d.display()))?;
    }
    Ok(())
}

/// Runs every (strategy, seed) cell and writes logs, summaries and `comparison.csv`.
/// Returns the summaries in seed-major order.
pub fn run(cfg: &ExperimentConfig, root: &Path) -> Result<Vec<JobSummary>> {
    make_dirs(root, &["logs", "summaries", "clusters"])?;
    let clustering = cfg.clustering();
    let mut summaries = Vec::new();
    for &seed in &cfg.seeds {
        let cohort = cohort_for(cfg, seed)?;
        let g = cohort.dataset.num_labels();
        for &kind in &cfg.strategies {
            let job = cfg.job(kind, seed);
            let (mut strategy, clusters) = build_strategy(kind, &cohort, &clustering, seed)?;
            if let Some(c) = &clusters {
                info!("seed {seed}: {} clusters", c.clusters.len());
                write_json(&root.join(format!("clusters/seed{seed}.json")), c)?;
            }
            let out = run_job(&job, &cohort, strategy.as_mut())
                .with_context(|| format!("{kind} job for seed {seed} failed"))?;
            if !out.skipped_rounds.is_empty() {
                warn!(
                    "{kind} seed {seed}: rounds {:?} had no responders",
                    out.skipped_rounds
                );
            }

            let stem = format!("{kind}-seed{seed}");
            let mut w = create(&root.join(format!("logs/{stem}.csv")))?;
            write_round_csv(&mut w, &out.reports, g)?;
            w.flush()?;
            let mut w = create(&root.join(format!("logs/{stem}.json")))?;
            write_round_json(&mut w, &out.reports)?;
            w.flush()?;

            let summary = JobSummary::from_reports(
                kind.as_str(),
                seed,
                cfg.target_accuracy,
                &out.reports,
                serde_json::to_value(&job)?,
            );
            info!(
                "{stem}: rounds to target {}, peak {:.4}",
                summary.rounds_to_target, summary.peak_accuracy
            );
            write_json(&root.join(format!("summaries/{stem}.json")), &summary)?;
            summaries.push(summary);
        }
    }
    write_comparison(&root.join("comparison.csv"), &summaries)?;
    Ok(summaries)
}

pub fn write_comparison(path: &Path, summaries: &[JobSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "strategy",
        "seed",
        "rounds_to_target",
        "peak_accuracy",
        "total_bytes",
    ])?;
    for s in summaries {
        w.write_record([
            s.strategy.clone(),
            s.seed.to_string(),
            s.rounds_to_target.to_string(),
            s.peak_accuracy.to_string(),
            s.total_bytes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Elbow curves, one per seed, written under `clusters/`.
pub fn cluster_report(cfg: &ExperimentConfig, root: &Path) -> Result<Vec<(PathBuf, ElbowCurve)>> {
    make_dirs(root, &["clusters"])?;
    let clustering = cfg.clustering();
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let cohort = cohort_for(cfg, seed)?;
        let clusters = optimized_clusters(&cohort.label_distributions(), &clustering, seed)?;
        let path = root.join(format!("clusters/elbow-seed{seed}.json"));
        write_json(&path, &clusters.curve)?;
        out.push((path, clusters.curve));
    }
    Ok(out)
}
