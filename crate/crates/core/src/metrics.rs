//! Evaluation metrics and per-round logging.

use alloc::format;
use alloc::vec::Vec;

use crate::domain::{LabelVector, Pool, SelectionTrace};
use crate::math::sqrt;
use crate::simenv::BanditInstance;
use crate::{Error, Result};

/// Mean of per-class recalls. Every class in `0..classes` must occur in `labels`.
pub fn balanced_accuracy(predictions: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: predictions.len() });
    }
    let mut support = alloc::vec![0usize; classes];
    let mut hits = alloc::vec![0usize; classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        if y >= classes {
            return Err(Error::IndexOutOfRange { what: "class", index: y, len: classes });
        }
        support[y] += 1;
        hits[y] += usize::from(p == y);
    }
    if let Some(c) = support.iter().position(|&s| s == 0) {
        return Err(Error::InvalidParameter(format!("class {c} has no examples; recall undefined")));
    }
    Ok(hits.iter().zip(&support).map(|(&h, &s)| h as f64 / s as f64).sum::<f64>() / classes as f64)
}

/// Non-interpolated average precision: the mean, over positives, of the
/// precision at each positive's rank. Ranking is by descending score with
/// ties broken towards the lower index.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> Result<f64> {
    if scores.len() != positives.len() {
        return Err(Error::DimensionMismatch { expected: positives.len(), found: scores.len() });
    }
    let total = positives.iter().filter(|&&p| p).count();
    if total == 0 {
        return Err(Error::InvalidParameter("average precision needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps lower indices first among equal scores
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut seen = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if positives[i] {
            seen += 1;
            sum += seen as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / total as f64)
}

/// Mean over classes of [`average_precision`]; `scores[n][c]` pairs with `labels[n]`.
pub fn mean_average_precision(scores: &[Vec<f64>], labels: &[LabelVector]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: scores.len() });
    }
    let Some(first) = labels.first() else {
        return Err(Error::Empty("mAP input"));
    };
    let k = first.len();
    let mut total = 0.0;
    for c in 0..k {
        let col: Vec<f64> = scores.iter().map(|row| row[c]).collect();
        let pos: Vec<bool> = labels.iter().map(|y| y.is_set(c)).collect();
        total += average_precision(&col, &pos).map_err(|_| {
            Error::InvalidParameter(format!("class {c} has no positives; average precision undefined"))
        })?;
    }
    Ok(total / k as f64)
}

/// Smallest over largest class count.
pub fn class_imbalance(counts: &[u64]) -> Result<f64> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::InvalidParameter("all class counts are zero".into()));
    }
    let min = counts.iter().copied().min().unwrap_or(0);
    Ok(min as f64 / max as f64)
}

/// Average positive ratio `(1/K) sum_i N_i / N`.
pub fn binary_imbalance(positive_counts: &[u64], size: usize) -> Result<f64> {
    if size == 0 || positive_counts.is_empty() {
        return Err(Error::Empty("binary imbalance input"));
    }
    Ok(positive_counts.iter().map(|&c| c as f64 / size as f64).sum::<f64>() / positive_counts.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImbalanceRatios {
    pub class_imbalance: f64,
    /// Present for multi-label pools only.
    pub binary_imbalance: Option<f64>,
}

pub fn imbalance_ratios(pool: &Pool) -> Result<ImbalanceRatios> {
    let sizes = pool.class_sizes();
    Ok(ImbalanceRatios {
        class_imbalance: class_imbalance(&sizes)?,
        binary_imbalance: match pool.task() {
            crate::domain::TaskKind::MultiLabel => Some(binary_imbalance(&sizes, pool.len())?),
            crate::domain::TaskKind::MultiClass => None,
        },
    })
}

/// Prefix sums of per-round exact regret over a trace.
pub fn regret_curve(trace: &SelectionTrace, instance: &BanditInstance) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    trace
        .rounds()
        .iter()
        .map(|r| {
            acc += instance.exact_regret(&r.weights, &r.arms)?;
            Ok(acc)
        })
        .collect()
}

/// What is logged after each round of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub labeled_total: usize,
    pub rarest_class_count: u64,
    /// mAP (multi-label) or balanced accuracy (multi-class) over the pool;
    /// absent in pure-bandit runs.
    pub accuracy_metric: Option<f64>,
    pub total_positives: u64,
    pub cumulative_reward: f64,
    /// Pure-bandit runs only.
    pub cumulative_regret: Option<f64>,
}

pub fn rarest_class_count(class_counts: &[u64]) -> u64 {
    class_counts.iter().copied().min().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    /// Mean and standard error (sample standard deviation over sqrt(n)).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return Self { mean, stderr: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Self { mean, stderr: sqrt(var / n) }
    }
}

/// Per-round summary across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub round: usize,
    pub labeled_total: Stat,
    pub rarest_class_count: Stat,
    pub accuracy_metric: Option<Stat>,
    pub total_positives: Stat,
    pub cumulative_reward: Stat,
    pub cumulative_regret: Option<Stat>,
}

/// Aggregates equally long per-trial metric series round by round.
pub fn aggregate(trials: &[Vec<RoundMetrics>]) -> Result<Vec<AggregateRow>> {
    let Some(first) = trials.first() else {
        return Err(Error::Empty("trial list"));
    };
    let rounds = first.len();
    if let Some(bad) = trials.iter().find(|t| t.len() != rounds) {
        return Err(Error::DimensionMismatch { expected: rounds, found: bad.len() });
    }
    let column = |r: usize, f: &dyn Fn(&RoundMetrics) -> f64| -> Stat {
        Stat::of(&trials.iter().map(|t| f(&t[r])).collect::<Vec<_>>())
    };
    let optional = |r: usize, f: &dyn Fn(&RoundMetrics) -> Option<f64>| -> Option<Stat> {
        let vals: Option<Vec<f64>> = trials.iter().map(|t| f(&t[r])).collect();
        vals.map(|v| Stat::of(&v))
    };
    Ok((0..rounds)
        .map(|r| AggregateRow {
            round: first[r].round,
            labeled_total: column(r, &|m| m.labeled_total as f64),
            rarest_class_count: column(r, &|m| m.rarest_class_count as f64),
            accuracy_metric: optional(r, &|m| m.accuracy_metric),
            total_positives: column(r, &|m| m.total_positives as f64),
            cumulative_reward: column(r, &|m| m.cumulative_reward),
            cumulative_regret: optional(r, &|m| m.cumulative_regret),
        })
        .collect())
}
