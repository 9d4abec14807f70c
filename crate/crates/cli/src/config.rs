//! Experiment configuration: a single JSON document.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fedsel_core::clustering::{ClusterConfig, DistanceSpace, ElbowParams};
use fedsel_core::dataspace::SyntheticSpec;
use fedsel_core::flcore::{JobConfig, LocalTrainConfig, LrDecay, ModelKind, ServerOptimizer};
use fedsel_core::selection::StrategyKind;
use serde::{Deserialize, Serialize};

/// Overrides the output directory named in the config.
pub const OUTPUT_ROOT_ENV: &str = "FEDSEL_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Synthetic {
        num_labels: usize,
        dim: usize,
        per_label: usize,
        spread: f64,
        #[serde(default = "one")]
        imbalance: f64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
    Csv {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn default_test_fraction() -> f64 {
    0.1
}

fn default_tau() -> usize {
    5
}

fn default_eta() -> f64 {
    0.1
}

fn default_batch() -> usize {
    32
}

fn default_output() -> PathBuf {
    PathBuf::from("fedsel-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub alpha: f64,
    pub num_parties: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Share of eligible parties on each base slate.
    pub fraction: f64,
    pub rounds: usize,
    pub target_accuracy: f64,
    #[serde(default)]
    pub straggler_rate: f64,
    pub strategies: Vec<StrategyKind>,
    #[serde(default)]
    pub server_optimizer: ServerOptimizer,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "default_tau")]
    pub tau: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub decay: LrDecay,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub elbow: ElbowParams,
    #[serde(default)]
    pub distance_space: DistanceSpace,
    #[serde(default)]
    pub stop_at_target: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

const REQUIRED: [&str; 8] = [
    "dataset",
    "alpha",
    "num_parties",
    "fraction",
    "rounds",
    "target_accuracy",
    "strategies",
    "seeds",
];

fn stand_ins() -> [serde_json::Value; 8] {
    use serde_json::json;
    [
        json!({"type": "synthetic", "num_labels": 2, "dim": 1, "per_label": 1, "spread": 1.0}),
        json!(1.0),
        json!(1),
        json!(1.0),
        json!(1),
        json!(1.0),
        json!(["random"]),
        json!([0]),
    ]
}

/// Every problem found in a config document, one entry per field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub problems: Vec<String>,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid config {}:", self.path.display())?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn in_range(
    problems: &mut Vec<String>,
    field: &str,
    ok: bool,
    rule: &str,
    got: impl std::fmt::Display,
) {
    if !ok {
        problems.push(format!("{field}: must be {rule}, got {got}"));
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let fail = |p: String| ConfigError {
            path: path.to_path_buf(),
            problems: vec![p],
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(format!("cannot read: {e}")))?;
        Self::parse(&text).map_err(|problems| ConfigError {
            path: path.to_path_buf(),
            problems,
        })
    }

    /// Parses and validates. Missing required fields are all reported together,
    /// as are range violations; a type error stops at the first one serde sees.
    pub fn parse(text: &str) -> Result<Self, Vec<String>> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| vec![format!("not valid JSON: {e}")])?;
        let Some(obj) = value.as_object() else {
            return Err(vec!["top level must be a JSON object".into()]);
        };
        // Missing keys get valid stand-ins so the remaining fields are still checked.
        let mut filled = obj.clone();
        let mut problems = Vec::new();
        for (key, stand_in) in REQUIRED.iter().zip(stand_ins()) {
            if !filled.contains_key(*key) {
                problems.push(format!("{key}: required field is missing"));
                filled.insert(key.to_string(), stand_in);
            }
        }
        let cfg: Self = serde_json::from_value(serde_json::Value::Object(filled)).map_err(|e| {
            problems.push(e.to_string());
            problems.clone()
        })?;
        problems.extend(cfg.problems());
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(problems)
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        match &self.dataset {
            DatasetSpec::Synthetic {
                num_labels,
                dim,
                per_label,
                spread,
                imbalance,
            } => {
                in_range(
                    &mut p,
                    "dataset.num_labels",
                    *num_labels >= 2,
                    ">= 2",
                    num_labels,
                );
                in_range(&mut p, "dataset.dim", *dim >= 1, ">= 1", dim);
                in_range(
                    &mut p,
                    "dataset.per_label",
                    *per_label >= 1,
                    ">= 1",
                    per_label,
                );
                in_range(
                    &mut p,
                    "dataset.spread",
                    *spread > 0.0 && spread.is_finite(),
                    "> 0",
                    spread,
                );
                in_range(
                    &mut p,
                    "dataset.imbalance",
                    *imbalance >= 1.0 && imbalance.is_finite(),
                    ">= 1",
                    imbalance,
                );
            }
            DatasetSpec::Idx { images, labels } => {
                in_range(
                    &mut p,
                    "dataset.images",
                    !images.as_os_str().is_empty(),
                    "a path",
                    "\"\"",
                );
                in_range(
                    &mut p,
                    "dataset.labels",
                    !labels.as_os_str().is_empty(),
                    "a path",
                    "\"\"",
                );
            }
            DatasetSpec::Csv { path } => {
                in_range(
                    &mut p,
                    "dataset.path",
                    !path.as_os_str().is_empty(),
                    "a path",
                    "\"\"",
                );
            }
        }
        in_range(
            &mut p,
            "alpha",
            self.alpha > 0.0 && self.alpha.is_finite(),
            "> 0",
            self.alpha,
        );
        in_range(
            &mut p,
            "num_parties",
            self.num_parties >= 1,
            ">= 1",
            self.num_parties,
        );
        in_range(
            &mut p,
            "test_fraction",
            self.test_fraction > 0.0 && self.test_fraction < 1.0,
            "in (0, 1)",
            self.test_fraction,
        );
        in_range(
            &mut p,
            "fraction",
            self.fraction > 0.0 && self.fraction <= 1.0,
            "in (0, 1]",
            self.fraction,
        );
        in_range(&mut p, "rounds", self.rounds >= 1, ">= 1", self.rounds);
        in_range(
            &mut p,
            "target_accuracy",
            self.target_accuracy > 0.0 && self.target_accuracy <= 1.0,
            "in (0, 1]",
            self.target_accuracy,
        );
        in_range(
            &mut p,
            "straggler_rate",
            (0.0..1.0).contains(&self.straggler_rate),
            "in [0, 1)",
            self.straggler_rate,
        );

        let unique: BTreeSet<_> = self.strategies.iter().collect();
        in_range(
            &mut p,
            "strategies",
            !self.strategies.is_empty(),
            "non-empty",
            "[]",
        );
        in_range(
            &mut p,
            "strategies",
            unique.len() == self.strategies.len(),
            "free of duplicates",
            format!("{:?}", self.strategies),
        );

        if let ServerOptimizer::Fedyogi(y) = &self.server_optimizer {
            in_range(
                &mut p,
                "server_optimizer.beta1",
                (0.0..1.0).contains(&y.beta1),
                "in [0, 1)",
                y.beta1,
            );
            in_range(
                &mut p,
                "server_optimizer.beta2",
                (0.0..1.0).contains(&y.beta2),
                "in [0, 1)",
                y.beta2,
            );
            in_range(
                &mut p,
                "server_optimizer.lr",
                y.lr > 0.0 && y.lr.is_finite(),
                "> 0",
                y.lr,
            );
            in_range(
                &mut p,
                "server_optimizer.eps",
                y.eps > 0.0 && y.eps.is_finite(),
                "> 0",
                y.eps,
            );
        }
        if let ModelKind::Mlp { hidden } = self.model {
            in_range(&mut p, "model.hidden", hidden >= 1, ">= 1", hidden);
        }
        in_range(
            &mut p,
            "mu",
            self.mu >= 0.0 && self.mu.is_finite(),
            ">= 0",
            self.mu,
        );
        in_range(&mut p, "tau", self.tau >= 1, ">= 1", self.tau);
        in_range(
            &mut p,
            "eta",
            self.eta > 0.0 && self.eta.is_finite(),
            "> 0",
            self.eta,
        );
        in_range(
            &mut p,
            "batch_size",
            self.batch_size >= 1,
            ">= 1",
            self.batch_size,
        );
        in_range(
            &mut p,
            "decay.factor",
            self.decay.factor > 0.0 && self.decay.factor.is_finite(),
            "> 0",
            self.decay.factor,
        );
        in_range(
            &mut p,
            "decay.every",
            self.decay.every >= 1,
            ">= 1",
            self.decay.every,
        );

        let seeds: BTreeSet<_> = self.seeds.iter().collect();
        in_range(&mut p, "seeds", !self.seeds.is_empty(), "non-empty", "[]");
        in_range(
            &mut p,
            "seeds",
            seeds.len() == self.seeds.len(),
            "free of duplicates",
            format!("{:?}", self.seeds),
        );

        let e = &self.elbow;
        in_range(&mut p, "elbow.k_min", e.k_min >= 2, ">= 2", e.k_min);
        in_range(
            &mut p,
            "elbow.k_max",
            e.k_max > e.k_min,
            "> elbow.k_min",
            e.k_max,
        );
        in_range(
            &mut p,
            "elbow.restarts",
            e.restarts >= 1,
            ">= 1",
            e.restarts,
        );
        in_range(
            &mut p,
            "elbow.max_iter",
            e.max_iter >= 1,
            ">= 1",
            e.max_iter,
        );
        in_range(
            &mut p,
            "elbow.tol",
            e.tol > 0.0 && e.tol.is_finite(),
            "> 0",
            e.tol,
        );
        p
    }

    /// Output root: the environment override when set, otherwise `output_dir`.
    pub fn output_root(&self) -> PathBuf {
        std::env::var_os(OUTPUT_ROOT_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| self.output_dir.clone())
    }

    pub fn clustering(&self) -> ClusterConfig {
        ClusterConfig {
            space: self.distance_space,
            elbow: self.elbow.clone(),
        }
    }

    pub fn job(&self, strategy: StrategyKind, seed: u64) -> JobConfig {
        JobConfig {
            rounds: self.rounds,
            parties_per_round_fraction: self.fraction,
            straggler_rate: self.straggler_rate,
            target_accuracy: self.target_accuracy,
            server_optimizer: self.server_optimizer,
            strategy,
            seed,
            lr_decay: self.decay,
            local: LocalTrainConfig {
                tau: self.tau,
                eta: self.eta,
                mu: self.mu,
                batch_size: self.batch_size,
            },
            model: self.model,
            stop_at_target: self.stop_at_target,
        }
    }

    pub fn synthetic_spec(&self) -> Option<SyntheticSpec> {
        match self.dataset {
            DatasetSpec::Synthetic {
                num_labels,
                dim,
                per_label,
                spread,
                imbalance,
            } => Some(SyntheticSpec {
                num_labels,
                dim,
                per_label,
                spread,
                imbalance,
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "dataset": {"type": "synthetic", "num_labels": 3, "dim": 2, "per_label": 20, "spread": 0.5},
            "alpha": 0.5,
            "num_parties": 5,
            "fraction": 0.4,
            "rounds": 3,
            "target_accuracy": 0.8,
            "strategies": ["random", "flips"],
            "seeds": [1]
        })
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::parse(&minimal().to_string()).unwrap();
        assert_eq!(cfg.tau, 5);
        assert_eq!(cfg.test_fraction, 0.1);
        assert_eq!(cfg.server_optimizer, ServerOptimizer::Fedavg);
        assert_eq!(cfg.synthetic_spec().unwrap().imbalance, 1.0);
    }

    #[test]
    fn every_violation_is_listed() {
        let mut v = minimal();
        v["alpha"] = serde_json::json!(-1.0);
        v["fraction"] = serde_json::json!(1.5);
        v["seeds"] = serde_json::json!([]);
        let problems = ExperimentConfig::parse(&v.to_string()).unwrap_err();
        assert_eq!(problems.len(), 3, "{problems:?}");
        assert!(problems[0].starts_with("alpha"));
        assert!(problems.iter().any(|p| p.starts_with("fraction")));
        assert!(problems.iter().any(|p| p.starts_with("seeds")));
    }

    #[test]
    fn all_missing_fields_are_listed() {
        let mut v = minimal();
        let obj = v.as_object_mut().unwrap();
        obj.remove("alpha");
        obj.remove("rounds");
        let problems = ExperimentConfig::parse(&v.to_string()).unwrap_err();
        assert_eq!(problems.len(), 2);
    }

    #[test]
    fn missing_and_invalid_fields_are_listed_together() {
        let mut v = minimal();
        v.as_object_mut().unwrap().remove("rounds");
        v["alpha"] = serde_json::json!(-1.0);
        let problems = ExperimentConfig::parse(&v.to_string()).unwrap_err();
        assert_eq!(problems.len(), 2, "{problems:?}");
        assert!(problems[0].starts_with("rounds"));
        assert!(problems[1].starts_with("alpha"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = minimal();
        v["alhpa"] = serde_json::json!(0.3);
        assert!(ExperimentConfig::parse(&v.to_string()).is_err());
    }

    #[test]
    fn duplicate_strategies_are_rejected() {
        let mut v = minimal();
        v["strategies"] = serde_json::json!(["flips", "flips"]);
        let problems = ExperimentConfig::parse(&v.to_string()).unwrap_err();
        assert!(problems[0].starts_with("strategies"));
    }
}
