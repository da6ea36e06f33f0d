//! Simulation environments: pure bandit instances with known label
//! distributions, and synthetic Gaussian-cluster pools.

use alloc::format;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{Example, LabelVector, Pool, TaskKind, WeightVector};
use crate::math::{argmax, dot, floor, round};
use crate::sampling;
use crate::{Error, Result};

/// Per-arm mean label vectors theta_i: points of `[0,1]^K` (multi-label) or of
/// the probability simplex (multi-class).
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    task: TaskKind,
    thetas: Vec<Vec<f64>>,
}

impl BanditInstance {
    pub fn new(task: TaskKind, thetas: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = thetas.first() else {
            return Err(Error::Empty("bandit instance arms"));
        };
        let k = first.len();
        if k == 0 {
            return Err(Error::Empty("bandit instance classes"));
        }
        for (i, t) in thetas.iter().enumerate() {
            if t.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: t.len() });
            }
            if t.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidParameter(format!("theta {i} has entries outside [0, 1]")));
            }
            if task == TaskKind::MultiClass && (t.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("theta {i} does not sum to 1")));
            }
        }
        Ok(Self { task, thetas })
    }

    /// Draw from the uniform prior: Uniform[0,1]^K per arm, or Dirichlet(1).
    pub fn from_prior<R: Rng + ?Sized>(task: TaskKind, arms: usize, classes: usize, rng: &mut R) -> Result<Self> {
        if arms == 0 || classes == 0 {
            return Err(Error::InvalidParameter("bandit instance needs M >= 1 and K >= 1".into()));
        }
        let thetas = (0..arms)
            .map(|_| match task {
                TaskKind::MultiLabel => (0..classes).map(|_| rng.random::<f64>()).collect(),
                TaskKind::MultiClass => sampling::dirichlet(&alloc::vec![1.0; classes], rng),
            })
            .collect();
        Self::new(task, thetas)
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn arms(&self) -> usize {
        self.thetas.len()
    }

    pub fn classes(&self) -> usize {
        self.thetas[0].len()
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm >= self.arms() {
            return Err(Error::IndexOutOfRange { what: "arm", index: arm, len: self.arms() });
        }
        Ok(())
    }

    /// Independent Bernoulli coordinates, or a categorical one-hot draw.
    pub fn sample_label<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<LabelVector> {
        self.check_arm(arm)?;
        let theta = &self.thetas[arm];
        match self.task {
            TaskKind::MultiLabel => {
                let bits = theta.iter().map(|&p| u8::from(rng.random::<f64>() < p)).collect();
                LabelVector::new(bits, TaskKind::MultiLabel)
            }
            TaskKind::MultiClass => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                let mut class = None;
                for (c, &p) in theta.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        class = Some(c);
                        break;
                    }
                }
                // u landed in the rounding gap above the cumulative sum
                let class = class.unwrap_or_else(|| theta.iter().rposition(|&p| p > 0.0).expect("sums to 1"));
                LabelVector::one_hot(class, theta.len())
            }
        }
    }

    /// `<v, theta_arm>`.
    pub fn expected_reward(&self, arm: usize, v: &WeightVector) -> Result<f64> {
        self.check_arm(arm)?;
        if v.len() != self.classes() {
            return Err(Error::DimensionMismatch { expected: self.classes(), found: v.len() });
        }
        Ok(dot(v.as_slice(), &self.thetas[arm]))
    }

    /// Arm with the largest expected reward under `v` (ties to the lowest index).
    pub fn best_arm(&self, v: &WeightVector) -> Result<usize> {
        let scores = (0..self.arms()).map(|i| self.expected_reward(i, v)).collect::<Result<Vec<_>>>()?;
        Ok(argmax(&scores).expect("arms >= 1"))
    }

    /// `sum_j (max_i <v, theta_i> - <v, theta_{chosen_j}>)`.
    pub fn exact_regret(&self, v: &WeightVector, chosen: &[usize]) -> Result<f64> {
        let scores = (0..self.arms()).map(|i| self.expected_reward(i, v)).collect::<Result<Vec<_>>>()?;
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for &a in chosen {
            self.check_arm(a)?;
            total += best - scores[a];
        }
        Ok(total)
    }
}

/// Gaussian-cluster pool description.
///
/// Multi-class pools use `class_proportions` (length K, summing to one).
/// Multi-label pools use `positive_rates` (length K, each in (0, 1]) and leave
/// `class_proportions` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPoolSpec {
    pub task: TaskKind,
    pub classes: usize,
    pub dim: usize,
    pub size: usize,
    pub class_proportions: Vec<f64>,
    pub cluster_separation: f64,
    pub positive_rates: Option<Vec<f64>>,
}

impl SyntheticPoolSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.dim == 0 || self.size == 0 {
            return Err(Error::InvalidParameter("synthetic pool needs K, d, N >= 1".into()));
        }
        if !(self.cluster_separation > 0.0) {
            return Err(Error::InvalidParameter("cluster separation must be positive".into()));
        }
        match self.task {
            TaskKind::MultiClass => {
                if self.class_proportions.len() != self.classes {
                    return Err(Error::DimensionMismatch { expected: self.classes, found: self.class_proportions.len() });
                }
                if self.class_proportions.iter().any(|&p| !(p > 0.0)) {
                    return Err(Error::InvalidParameter("class proportions must be positive".into()));
                }
                if (self.class_proportions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter("class proportions must sum to 1".into()));
                }
                if self.positive_rates.is_some() {
                    return Err(Error::InvalidParameter("positive rates only apply to multi-label pools".into()));
                }
            }
            TaskKind::MultiLabel => {
                let Some(rates) = &self.positive_rates else {
                    return Err(Error::InvalidParameter("multi-label pools need positive rates".into()));
                };
                if rates.len() != self.classes {
                    return Err(Error::DimensionMismatch { expected: self.classes, found: rates.len() });
                }
                if rates.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
                    return Err(Error::InvalidParameter("positive rates must lie in (0, 1]".into()));
                }
                if !self.class_proportions.is_empty() {
                    return Err(Error::InvalidParameter("class proportions only apply to multi-class pools".into()));
                }
            }
        }
        Ok(())
    }

    /// Realised per-class sizes (positives per class for multi-label).
    pub fn class_sizes(&self) -> Result<Vec<usize>> {
        self.validate()?;
        let n = self.size as f64;
        match self.task {
            TaskKind::MultiClass => {
                let mut sizes: Vec<i64> = self.class_proportions.iter().map(|&p| round(n * p) as i64).collect();
                let largest = argmax(&self.class_proportions).expect("K >= 1");
                sizes[largest] += self.size as i64 - sizes.iter().sum::<i64>();
                if let Some(c) = sizes.iter().position(|&s| s <= 0) {
                    return Err(Error::InvalidParameter(format!("class {c} rounds to no examples at N = {}", self.size)));
                }
                Ok(sizes.into_iter().map(|s| s as usize).collect())
            }
            TaskKind::MultiLabel => {
                let rates = self.positive_rates.as_ref().expect("validated");
                let sizes: Vec<usize> = rates.iter().map(|&r| round(n * r) as usize).collect();
                if let Some(c) = sizes.iter().position(|&s| s == 0) {
                    return Err(Error::InvalidParameter(format!("class {c} rounds to no positives at N = {}", self.size)));
                }
                Ok(sizes)
            }
        }
    }

    /// Cluster centre of class `c`: axis `c mod d`, sign alternating every `d`
    /// classes, radius growing every `2d` classes.
    pub fn centroid(&self, class: usize) -> Vec<f64> {
        let d = self.dim;
        let mut v = alloc::vec![0.0; d];
        let sign = if (class / d).is_multiple_of(2) { 1.0 } else { -1.0 };
        let shell = 1.0 + floor((class / (2 * d)) as f64);
        v[class % d] = sign * shell * self.cluster_separation;
        v
    }
}

/// Samples a pool from `spec`.
pub fn generate_pool<R: Rng + ?Sized>(spec: &SyntheticPoolSpec, rng: &mut R) -> Result<Pool> {
    let sizes = spec.class_sizes()?;
    let (k, d, n) = (spec.classes, spec.dim, spec.size);
    let centroids: Vec<Vec<f64>> = (0..k).map(|c| spec.centroid(c)).collect();
    fn noise<R: Rng + ?Sized>(center: &[f64], rng: &mut R) -> Vec<f64> {
        center
            .iter()
            .map(|&m| {
                let z: f64 = StandardNormal.sample(rng);
                m + z
            })
            .collect()
    }
    let examples = match spec.task {
        TaskKind::MultiClass => {
            let mut classes: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| core::iter::repeat_n(c, s)).collect();
            classes.shuffle(rng);
            classes
                .into_iter()
                .enumerate()
                .map(|(id, c)| Ok(Example::new(id, noise(&centroids[c], rng), LabelVector::one_hot(c, k)?)))
                .collect::<Result<Vec<_>>>()?
        }
        TaskKind::MultiLabel => {
            let mut bits = alloc::vec![alloc::vec![0u8; k]; n];
            for (c, &s) in sizes.iter().enumerate() {
                for id in rand::seq::index::sample(rng, n, s) {
                    bits[id][c] = 1;
                }
            }
            bits.into_iter()
                .enumerate()
                .map(|(id, y)| {
                    let mut center = alloc::vec![0.0; d];
                    for (c, _) in y.iter().enumerate().filter(|(_, &b)| b == 1) {
                        for (m, v) in center.iter_mut().zip(&centroids[c]) {
                            *m += v;
                        }
                    }
                    Ok(Example::new(id, noise(&center, rng), LabelVector::new(y, TaskKind::MultiLabel)?))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Pool::new(spec.task, k, d, examples)
}

/// Keeps classes `0..K-1` and merges every other class into class `K-1`.
pub fn derive_imbalanced(pool: &Pool, classes: usize) -> Result<Pool> {
    if pool.task() != TaskKind::MultiClass {
        return Err(Error::InvalidParameter("derive_imbalanced needs a multi-class pool".into()));
    }
    if classes < 2 || classes > pool.classes() {
        return Err(Error::InvalidParameter(format!(
            "target class count {classes} outside [2, {}]",
            pool.classes()
        )));
    }
    let examples = pool
        .examples()
        .iter()
        .zip(pool.evaluation_labels())
        .map(|(ex, y)| {
            let c = y.class_index().expect("one-hot").min(classes - 1);
            Ok(Example::new(ex.id, ex.features.clone(), LabelVector::one_hot(c, classes)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Pool::new(TaskKind::MultiClass, classes, pool.dim(), examples)
}
