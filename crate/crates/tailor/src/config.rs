//! Experiment configuration files.
//!
//! The format is flat `key = value` lines with `#` comments (TOML syntax),
//! plus two optional sections: `[synthetic]` describes a generated pool and
//! `[bandit]` describes a pure-bandit environment. Unknown keys are rejected
//! by name.
//!
//! ```toml
//! mode = "active_learning"
//! rounds = 10
//! batch_size = 50
//! pool = "pool.jsonl"
//! candidates = ["random", "margin", "mlp"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tailor_core::candidates::CandidateSpec;
use tailor_core::domain::TaskKind;
use tailor_core::model::TrainConfig;
use tailor_core::policies::{ContextualConfig, PolicyKind};
use tailor_core::posterior::DEFAULT_DISCOUNT;
use tailor_core::rewards::{parse_kind, RewardKind, RewardSpec};
use tailor_core::runner::{ActiveLearningSetup, BanditSetup, ExperimentConfig, Mode};
use tailor_core::simenv::SyntheticPoolSpec;

use crate::error::CliError;

pub const DEFAULT_SEED_SIZE: usize = 20;
pub const DEFAULT_TRIALS: usize = 4;
pub const DEFAULT_CANDIDATES: [&str; 4] = ["random", "least_confidence", "margin", "entropy"];
pub const DEFAULT_SEPARATION: f64 = 3.0;

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    /// Pool file, as written in the config (relative paths are resolved by
    /// the caller against the config's directory).
    pub pool: Option<PathBuf>,
    pub synthetic: Option<SyntheticPoolSpec>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pool: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discount: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reward: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    negative_weighting: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain_weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contextual_prior_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contextual_noise_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthetic: Option<RawSynthetic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandit: Option<RawBandit>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynthetic {
    task: String,
    classes: usize,
    dim: usize,
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    proportions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positive_rates: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBandit {
    task: String,
    arms: usize,
    classes: usize,
    #[serde(default)]
    random_weights: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thetas: Option<Vec<Vec<f64>>>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn parse_task(s: &str) -> Result<TaskKind, CliError> {
    TaskKind::from_name(s).ok_or_else(|| CliError::Config(format!("unknown task {s:?} (multilabel or multiclass)")))
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
}

/// Parses and validates a configuration document, applying defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        match line {
            Some(l) => CliError::Config(format!("line {l}: {}", e.message())),
            None => CliError::Config(e.message().to_string()),
        }
    })?;
    let rounds = required(raw.rounds, "rounds")?;
    let batch_size = required(raw.batch_size, "batch_size")?;
    let mode_name = required(raw.mode.as_deref(), "mode")?;

    let synthetic = raw.synthetic.map(synthetic_spec).transpose()?;
    let mode = match mode_name {
        "active_learning" => {
            if raw.bandit.is_some() {
                return Err(CliError::Config("[bandit] only applies to mode = \"pure_bandit\"".into()));
            }
            if raw.pool.is_none() && synthetic.is_none() {
                return Err(CliError::Config("active learning needs `pool` or a [synthetic] section".into()));
            }
            let names: Vec<String> = match raw.candidates {
                Some(c) => c,
                None => DEFAULT_CANDIDATES.iter().map(|s| s.to_string()).collect(),
            };
            let candidates = names.iter().map(|s| CandidateSpec::parse(s)).collect::<Result<Vec<_>, _>>().map_err(config_err)?;
            let defaults = TrainConfig::default();
            Mode::ActiveLearning(ActiveLearningSetup {
                candidates,
                seed_size: raw.seed_size.unwrap_or(DEFAULT_SEED_SIZE),
                training: TrainConfig {
                    lr: raw.lr.unwrap_or(defaults.lr),
                    epochs: raw.epochs.unwrap_or(defaults.epochs),
                    grad_tol: raw.grad_tol.unwrap_or(defaults.grad_tol),
                    l2: raw.l2.unwrap_or(defaults.l2),
                },
            })
        }
        "pure_bandit" => {
            let b = required(raw.bandit, "[bandit]")?;
            for (key, set) in [
                ("pool", raw.pool.is_some()),
                ("candidates", raw.candidates.is_some()),
                ("seed_size", raw.seed_size.is_some()),
                ("lr", raw.lr.is_some()),
                ("epochs", raw.epochs.is_some()),
                ("grad_tol", raw.grad_tol.is_some()),
                ("l2", raw.l2.is_some()),
            ] {
                if set {
                    return Err(CliError::Config(format!("`{key}` only applies to active learning")));
                }
            }
            Mode::PureBandit(BanditSetup {
                task: parse_task(&b.task)?,
                arms: b.arms,
                classes: b.classes,
                thetas: b.thetas,
                random_weights: b.random_weights,
            })
        }
        other => return Err(CliError::Config(format!("unknown mode {other:?} (active_learning or pure_bandit)"))),
    };

    let reward_kind = match raw.reward.as_deref() {
        Some(s) => parse_kind(s).map_err(config_err)?,
        None => RewardKind::ClassDiversity,
    };
    let reward = RewardSpec::new(reward_kind, raw.domain_weights, raw.negative_weighting.unwrap_or(false))
        .map_err(config_err)?;
    let policy = match raw.policy.as_deref() {
        Some(s) => PolicyKind::from_name(s).ok_or_else(|| CliError::Config(format!("unknown policy {s:?}")))?,
        None => PolicyKind::Tailor,
    };
    let contextual_defaults = ContextualConfig::default();
    let experiment = ExperimentConfig {
        mode,
        rounds,
        batch_size,
        reward,
        policy,
        discount: raw.discount.unwrap_or(DEFAULT_DISCOUNT),
        contextual: ContextualConfig {
            prior_precision: raw.contextual_prior_precision.unwrap_or(contextual_defaults.prior_precision),
            noise_variance: raw.contextual_noise_variance.unwrap_or(contextual_defaults.noise_variance),
        },
        seed: raw.seed.unwrap_or(0),
        trials: raw.trials.unwrap_or(DEFAULT_TRIALS),
    };
    experiment.validate().map_err(config_err)?;
    if let Some(spec) = &synthetic {
        spec.class_sizes().map_err(config_err)?;
    }
    Ok(RunConfig { experiment, pool: raw.pool.map(PathBuf::from), synthetic })
}

fn synthetic_spec(s: RawSynthetic) -> Result<SyntheticPoolSpec, CliError> {
    let task = parse_task(&s.task)?;
    let spec = SyntheticPoolSpec {
        task,
        classes: s.classes,
        dim: s.dim,
        size: s.size,
        class_proportions: s.proportions.unwrap_or_default(),
        cluster_separation: s.separation.unwrap_or(DEFAULT_SEPARATION),
        positive_rates: s.positive_rates,
    };
    spec.validate().map_err(config_err)?;
    Ok(spec)
}

/// Writes `config` back out with every default made explicit.
pub fn serialize_config(config: &RunConfig) -> String {
    let e = &config.experiment;
    let mut raw = RawConfig {
        rounds: Some(e.rounds),
        batch_size: Some(e.batch_size),
        pool: config.pool.as_ref().map(|p| p.to_string_lossy().into_owned()),
        policy: Some(e.policy.name().into()),
        discount: Some(e.discount),
        reward: Some(e.reward.kind().name().into()),
        negative_weighting: Some(e.reward.negative_weighting()),
        domain_weights: e.reward.domain_weights().map(|w| w.as_slice().to_vec()),
        seed: Some(e.seed),
        trials: Some(e.trials),
        contextual_prior_precision: Some(e.contextual.prior_precision),
        contextual_noise_variance: Some(e.contextual.noise_variance),
        synthetic: config.synthetic.as_ref().map(|s| RawSynthetic {
            task: s.task.name().into(),
            classes: s.classes,
            dim: s.dim,
            size: s.size,
            proportions: (!s.class_proportions.is_empty()).then(|| s.class_proportions.clone()),
            separation: Some(s.cluster_separation),
            positive_rates: s.positive_rates.clone(),
        }),
        ..RawConfig::default()
    };
    match &e.mode {
        Mode::ActiveLearning(al) => {
            raw.mode = Some("active_learning".into());
            raw.seed_size = Some(al.seed_size);
            raw.candidates = Some(al.candidates.iter().map(|c| c.name()).collect());
            raw.lr = Some(al.training.lr);
            raw.epochs = Some(al.training.epochs);
            raw.grad_tol = Some(al.training.grad_tol);
            raw.l2 = Some(al.training.l2);
        }
        Mode::PureBandit(b) => {
            raw.mode = Some("pure_bandit".into());
            raw.bandit = Some(RawBandit {
                task: b.task.name().into(),
                arms: b.arms,
                classes: b.classes,
                random_weights: b.random_weights,
                thetas: b.thetas.clone(),
            });
        }
    }
    toml::to_string(&raw).expect("config values are representable")
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mode = \"active_learning\"\nrounds = 5\nbatch_size = 2\npool = \"p.jsonl\"\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.experiment.discount, 0.9);
        assert_eq!(c.experiment.policy, PolicyKind::Tailor);
        assert_eq!(c.experiment.trials, 4);
        assert_eq!(c.pool, Some(PathBuf::from("p.jsonl")));
    }

    #[test]
    fn discount_above_one_is_rejected() {
        let err = parse_config(&format!("{MINIMAL}discount = 1.5\n")).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config(&format!("{MINIMAL}bogus_key = 3\n")).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn comments_are_ignored() {
        let text = format!("# experiment\n{MINIMAL}policy = \"ucb_diag\" # diagnostic\n");
        assert_eq!(parse_config(&text).unwrap().experiment.policy, PolicyKind::UcbDiag);
    }

    #[test]
    fn bandit_mode_rejects_active_learning_keys() {
        let text = "mode = \"pure_bandit\"\nrounds = 3\nbatch_size = 1\ncandidates = [\"random\"]\n\
                    [bandit]\ntask = \"multilabel\"\narms = 2\nclasses = 2\n";
        assert!(parse_config(text).is_err());
    }
}
