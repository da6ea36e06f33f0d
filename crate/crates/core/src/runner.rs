//! The round loop: weights, arm choice, sequential selection, annotation,
//! feedback, retraining and logging. Also trial aggregation.
//!
//! Each trial draws from three independent streams derived from the master
//! seed and trial index (see [`crate::rng`]): the environment stream (seed set,
//! bandit instance, simulated labels), the policy stream and the candidate
//! stream.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use crate::candidates::{expand, select_next, CandidateKind, CandidateSpec, ScoringContext};
use crate::domain::{LabelVector, Pool, PoolPartition, RoundRecord, SelectionTrace, TaskKind, WeightVector};
use crate::metrics::{aggregate, balanced_accuracy, mean_average_precision, rarest_class_count, AggregateRow, RoundMetrics};
use crate::model::{train, LinearClassifier, Sample, TrainConfig};
use crate::policies::{ContextualConfig, Policy, PolicyKind};
use crate::posterior::{validate_discount, DEFAULT_DISCOUNT};
use crate::rewards::{reward, RewardSpec};
use crate::rng::{stream, Stream};
use crate::simenv::BanditInstance;
use crate::{Error, Result};

/// Attempts at drawing a seed set that covers every class.
pub const SEED_SET_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveLearningSetup {
    pub candidates: Vec<CandidateSpec>,
    pub seed_size: usize,
    pub training: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditSetup {
    pub task: TaskKind,
    pub arms: usize,
    pub classes: usize,
    /// Fixed instance; when absent every trial draws one from the uniform prior.
    pub thetas: Option<Vec<Vec<f64>>>,
    /// Reveal a fresh uniform weight vector in `[-1/K, 1/K]^K` every round
    /// instead of deriving it from the reward spec.
    pub random_weights: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    ActiveLearning(ActiveLearningSetup),
    PureBandit(BanditSetup),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub rounds: usize,
    pub batch_size: usize,
    pub reward: RewardSpec,
    pub policy: PolicyKind,
    pub discount: f64,
    pub contextual: ContextualConfig,
    pub seed: u64,
    pub trials: usize,
}

impl ExperimentConfig {
    /// A config with the documented defaults: tailor policy, discount 0.9,
    /// diversity reward, 4 trials, seed 0.
    pub fn new(mode: Mode, rounds: usize, batch_size: usize) -> Self {
        Self {
            mode,
            rounds,
            batch_size,
            reward: RewardSpec::diversity(),
            policy: PolicyKind::Tailor,
            discount: DEFAULT_DISCOUNT,
            contextual: ContextualConfig::default(),
            seed: 0,
            trials: 4,
        }
    }

    /// Checks everything that does not depend on the pool.
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter("rounds and batch_size must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        validate_discount(self.discount)?;
        match &self.mode {
            Mode::ActiveLearning(al) => {
                if al.seed_size == 0 {
                    return Err(Error::InvalidParameter("seed_size must be >= 1".into()));
                }
                if al.candidates.is_empty() {
                    return Err(Error::Empty("candidate list"));
                }
            }
            Mode::PureBandit(b) => {
                if let Some(thetas) = &b.thetas {
                    let inst = BanditInstance::new(b.task, thetas.clone())?;
                    if inst.arms() != b.arms || inst.classes() != b.classes {
                        return Err(Error::InvalidParameter("thetas shape disagrees with arms/classes".into()));
                    }
                } else if b.arms == 0 || b.classes == 0 {
                    return Err(Error::InvalidParameter("bandit needs arms and classes >= 1".into()));
                }
                self.reward.validate_for(b.task, b.classes)?;
            }
        }
        Ok(())
    }
}

/// Everything a trial produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub trace: SelectionTrace,
    pub metrics: Vec<RoundMetrics>,
    /// Initial labeled set (empty in pure-bandit mode) and its labels.
    pub seed_ids: Vec<usize>,
    pub seed_labels: Vec<LabelVector>,
    /// Expanded candidate list (active learning), one entry per arm.
    pub candidates: Vec<CandidateKind>,
    /// Instance used (pure-bandit mode).
    pub instance: Option<BanditInstance>,
}

/// Runs one trial. Active-learning mode needs `pool`; pure-bandit mode ignores it.
pub fn run_trial(config: &ExperimentConfig, pool: Option<&Pool>, trial: usize) -> Result<TrialOutcome> {
    config.validate()?;
    match &config.mode {
        Mode::ActiveLearning(setup) => {
            let pool = pool.ok_or_else(|| Error::Precondition("active learning needs a pool".into()))?;
            run_active_learning(config, setup, pool, trial)
        }
        Mode::PureBandit(setup) => run_bandit(config, setup, trial),
    }
}

/// Runs every trial sequentially and aggregates per round.
pub fn run_experiment(config: &ExperimentConfig, pool: Option<&Pool>) -> Result<(Vec<TrialOutcome>, Vec<AggregateRow>)> {
    let outcomes = (0..config.trials)
        .map(|t| run_trial(config, pool, t).map_err(|e| Error::Trial { trial: t, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&outcomes)?;
    Ok((outcomes, summary))
}

/// Aggregates the per-round metrics of finished trials.
pub fn summarize(outcomes: &[TrialOutcome]) -> Result<Vec<AggregateRow>> {
    let series: Vec<Vec<RoundMetrics>> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    aggregate(&series)
}

fn covers_every_class(counts: &[u64]) -> bool {
    counts.iter().all(|&c| c > 0)
}

/// Uniform seed set of `size` ids containing every class, or an error after
/// [`SEED_SET_ATTEMPTS`] draws.
fn draw_seed_set<R: Rng + ?Sized>(pool: &Pool, size: usize, rng: &mut R) -> Result<Vec<usize>> {
    for _ in 0..SEED_SET_ATTEMPTS {
        let mut ids = rand::seq::index::sample(rng, pool.len(), size).into_vec();
        ids.sort_unstable();
        let mut counts = alloc::vec![0u64; pool.classes()];
        for &id in &ids {
            for (c, &bit) in counts.iter_mut().zip(pool.reveal(id).as_slice()) {
                *c += bit as u64;
            }
        }
        if covers_every_class(&counts) {
            return Ok(ids);
        }
    }
    Err(Error::Precondition(format!(
        "no seed set of size {size} covering all {} classes after {SEED_SET_ATTEMPTS} draws",
        pool.classes()
    )))
}

fn retrain(pool: &Pool, partition: &PoolPartition, config: &TrainConfig) -> Result<LinearClassifier> {
    // id order makes the fit independent of annotation order
    let mut ids = partition.labeled().to_vec();
    ids.sort_unstable();
    let batch: Vec<Sample<'_>> = ids.iter().map(|&id| (pool.features(id), partition.label(pool, id))).collect();
    train(&batch, pool.task(), pool.classes(), config)
}

fn evaluate(model: &LinearClassifier, pool: &Pool) -> Result<f64> {
    match pool.task() {
        TaskKind::MultiClass => {
            let preds = pool
                .examples()
                .iter()
                .map(|e| model.predict_class(&e.features))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<usize> = pool.evaluation_labels().map(|y| y.class_index().expect("one-hot")).collect();
            balanced_accuracy(&preds, &truth, pool.classes())
        }
        TaskKind::MultiLabel => {
            let scores = pool
                .examples()
                .iter()
                .map(|e| model.predict_proba(&e.features))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<LabelVector> = pool.evaluation_labels().cloned().collect();
            mean_average_precision(&scores, &truth)
        }
    }
}

fn total_positives<'a>(labels: impl Iterator<Item = &'a LabelVector>) -> u64 {
    labels.map(|y| y.ones() as u64).sum()
}

fn run_active_learning(config: &ExperimentConfig, setup: &ActiveLearningSetup, pool: &Pool, trial: usize) -> Result<TrialOutcome> {
    let (b, t_total) = (config.batch_size, config.rounds);
    config.reward.validate_for(pool.task(), pool.classes())?;
    if setup.seed_size > pool.len() || b > pool.len() - setup.seed_size {
        return Err(Error::Precondition(format!(
            "batch size {b} exceeds the {} unlabeled examples left after seeding",
            pool.len().saturating_sub(setup.seed_size)
        )));
    }
    if setup.seed_size + t_total * b > pool.len() {
        return Err(Error::Precondition(format!(
            "seed_size + rounds * batch_size = {} exceeds pool size {}",
            setup.seed_size + t_total * b,
            pool.len()
        )));
    }
    let candidates = expand(&setup.candidates, pool.classes())?;
    let mut env_rng = stream(config.seed, trial, Stream::Environment);
    let mut policy_rng = stream(config.seed, trial, Stream::Policy);
    let mut cand_rng = stream(config.seed, trial, Stream::Candidates);

    let seed_ids = draw_seed_set(pool, setup.seed_size, &mut env_rng)?;
    let mut partition = PoolPartition::new(pool);
    let seed_labels = partition.annotate_batch(pool, &seed_ids)?;
    let mut model = retrain(pool, &partition, &setup.training)?;
    let mut policy = Policy::new(config.policy, pool.task(), candidates.len(), pool.classes(), t_total, config.contextual)?;
    let mut trace = SelectionTrace::new(candidates.len());
    let mut metrics = Vec::with_capacity(t_total);
    let mut cumulative_reward = 0.0;

    for round in 1..=t_total {
        let v = config.reward.weights(partition.class_counts(), partition.labeled().len())?;
        let arms = policy.choose_arms(&v, b, &mut policy_rng)?;
        let ctx = ScoringContext::new(&model, pool, &partition)?;
        let mut selected = Vec::with_capacity(b);
        for &arm in &arms {
            let id = select_next(candidates[arm], &ctx, &selected, &mut cand_rng)?;
            selected.push(id);
        }
        drop(ctx);
        let labels = partition.annotate_batch(pool, &selected)?;
        let rewards = labels.iter().map(|y| reward(&v, y)).collect::<Result<Vec<_>>>()?;
        cumulative_reward += rewards.iter().sum::<f64>();
        policy.observe(&arms, &labels, &v, config.discount)?;
        model = retrain(pool, &partition, &setup.training)?;
        trace.push(RoundRecord { arms, ids: selected, labels, rewards, weights: v })?;
        metrics.push(RoundMetrics {
            round,
            labeled_total: partition.labeled().len(),
            rarest_class_count: rarest_class_count(partition.class_counts()),
            accuracy_metric: Some(evaluate(&model, pool)?),
            total_positives: total_positives(partition.labeled().iter().map(|&id| partition.label(pool, id))),
            cumulative_reward,
            cumulative_regret: None,
        });
    }
    Ok(TrialOutcome { trial, trace, metrics, seed_ids, seed_labels, candidates, instance: None })
}

fn random_weights<R: Rng + ?Sized>(classes: usize, rng: &mut R) -> Result<WeightVector> {
    let bound = 1.0 / classes as f64;
    WeightVector::new((0..classes).map(|_| rng.random_range(-bound..=bound)).collect())
}

fn run_bandit(config: &ExperimentConfig, setup: &BanditSetup, trial: usize) -> Result<TrialOutcome> {
    let mut env_rng = stream(config.seed, trial, Stream::Environment);
    let mut policy_rng = stream(config.seed, trial, Stream::Policy);
    let instance = match &setup.thetas {
        Some(t) => BanditInstance::new(setup.task, t.clone())?,
        None => BanditInstance::from_prior(setup.task, setup.arms, setup.classes, &mut env_rng)?,
    };
    let k = instance.classes();
    let mut policy = Policy::new(config.policy, setup.task, instance.arms(), k, config.rounds, config.contextual)?;
    let mut trace = SelectionTrace::new(instance.arms());
    let mut metrics = Vec::with_capacity(config.rounds);
    let mut counts = alloc::vec![0u64; k];
    let (mut observed, mut positives) = (0usize, 0u64);
    let (mut cumulative_reward, mut cumulative_regret) = (0.0, 0.0);

    for round in 1..=config.rounds {
        let v = if setup.random_weights {
            random_weights(k, &mut env_rng)?
        } else {
            config.reward.weights(&counts, observed)?
        };
        let arms = policy.choose_arms(&v, config.batch_size, &mut policy_rng)?;
        let labels = arms.iter().map(|&a| instance.sample_label(a, &mut env_rng)).collect::<Result<Vec<_>>>()?;
        let rewards = labels.iter().map(|y| reward(&v, y)).collect::<Result<Vec<_>>>()?;
        cumulative_reward += rewards.iter().sum::<f64>();
        cumulative_regret += instance.exact_regret(&v, &arms)?;
        for y in &labels {
            for (c, &bit) in counts.iter_mut().zip(y.as_slice()) {
                *c += bit as u64;
            }
            positives += y.ones() as u64;
        }
        observed += labels.len();
        policy.observe(&arms, &labels, &v, config.discount)?;
        let ids = (observed - labels.len()..observed).collect();
        trace.push(RoundRecord { arms, ids, labels, rewards, weights: v })?;
        metrics.push(RoundMetrics {
            round,
            labeled_total: observed,
            rarest_class_count: rarest_class_count(&counts),
            accuracy_metric: None,
            total_positives: positives,
            cumulative_reward,
            cumulative_regret: Some(cumulative_regret),
        });
    }
    Ok(TrialOutcome {
        trial,
        trace,
        metrics,
        seed_ids: Vec::new(),
        seed_labels: Vec::new(),
        candidates: Vec::new(),
        instance: Some(instance),
    })
}
