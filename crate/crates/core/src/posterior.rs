//! Conjugate per-arm posteriors.
//!
//! Multi-label arms carry an element-wise Beta(a, b); multi-class arms carry a
//! Dirichlet(a) and ignore `b`. Both start from the uniform prior a = b = 1.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use crate::domain::{LabelVector, TaskKind, WeightVector};
use crate::math::{ln, sqrt};
use crate::rewards::reward;
use crate::sampling;
use crate::{Error, Result};

/// Lower bound on every parameter after a discounted update.
pub const PARAMETER_FLOOR: f64 = 1e-3;

/// Default discount factor.
pub const DEFAULT_DISCOUNT: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct ArmPosterior {
    task: TaskKind,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ArmPosterior {
    /// Uniform prior over K classes.
    pub fn uniform(task: TaskKind, classes: usize) -> Self {
        Self { task, a: alloc::vec![1.0; classes], b: alloc::vec![1.0; classes] }
    }

    pub fn from_parameters(task: TaskKind, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        let post = Self { task, a, b };
        post.check_positive()?;
        Ok(post)
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn classes(&self) -> usize {
        self.a.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.a
    }

    pub fn beta(&self) -> &[f64] {
        &self.b
    }

    fn check_positive(&self) -> Result<()> {
        let b_used = self.task == TaskKind::MultiLabel;
        let bad = self
            .a
            .iter()
            .chain(self.b.iter().filter(|_| b_used))
            .find(|&&p| !(p > 0.0 && p.is_finite()));
        match bad {
            Some(p) => Err(Error::InvalidParameter(format!("posterior parameter {p} is not positive"))),
            None => Ok(()),
        }
    }

    /// Analytic posterior mean: a/(a+b) per coordinate, or a/sum(a).
    pub fn mean(&self) -> Vec<f64> {
        match self.task {
            TaskKind::MultiLabel => self.a.iter().zip(&self.b).map(|(a, b)| a / (a + b)).collect(),
            TaskKind::MultiClass => {
                let s: f64 = self.a.iter().sum();
                self.a.iter().map(|a| a / s).collect()
            }
        }
    }

    /// Draws a mean vector theta from the posterior.
    pub fn sample_mean<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.check_positive()?;
        Ok(match self.task {
            TaskKind::MultiLabel => {
                self.a.iter().zip(&self.b).map(|(&a, &b)| sampling::beta(a, b, rng)).collect()
            }
            TaskKind::MultiClass => sampling::dirichlet(&self.a, rng),
        })
    }

    /// Element-wise sums of y and of (1 - y) over `observations`.
    fn sums(&self, observations: &[LabelVector]) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.classes();
        let mut pos = alloc::vec![0.0; k];
        let mut neg = alloc::vec![0.0; k];
        for y in observations {
            if y.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: y.len() });
            }
            for (i, &bit) in y.as_slice().iter().enumerate() {
                if bit == 1 {
                    pos[i] += 1.0;
                } else {
                    neg[i] += 1.0;
                }
            }
        }
        Ok((pos, neg))
    }

    /// Plain conjugate update.
    pub fn update(&self, observations: &[LabelVector]) -> Result<Self> {
        let (pos, neg) = self.sums(observations)?;
        let mut next = self.clone();
        for i in 0..self.classes() {
            next.a[i] += pos[i];
            if self.task == TaskKind::MultiLabel {
                next.b[i] += neg[i];
            }
        }
        Ok(next)
    }

    /// `a <- max(gamma a + sum y, floor)` and likewise for `b`. Callers apply
    /// this to every arm every round, with an empty list for unchosen arms.
    pub fn discounted_update(&self, observations: &[LabelVector], gamma: f64) -> Result<Self> {
        validate_discount(gamma)?;
        let (pos, neg) = self.sums(observations)?;
        let mut next = self.clone();
        for i in 0..self.classes() {
            next.a[i] = (gamma * self.a[i] + pos[i]).max(PARAMETER_FLOOR);
            if self.task == TaskKind::MultiLabel {
                next.b[i] = (gamma * self.b[i] + neg[i]).max(PARAMETER_FLOOR);
            }
        }
        Ok(next)
    }
}

pub fn validate_discount(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("discount {gamma} outside (0, 1]")))
    }
}

/// Empirical reward statistics of one arm and its clipped upper confidence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorDiagnostics {
    pub empirical_mean: f64,
    pub confidence_width: f64,
    pub ucb: f64,
    pub sample_count: usize,
}

/// Mean reward under `v` over the arm's history, width `sqrt(8 ln(M T^2) / max(1, n))`
/// and `ucb = clip(mean + width, -1, 1)`.
pub fn diagnostics(history: &[LabelVector], v: &WeightVector, arms: usize, horizon: usize) -> Result<PosteriorDiagnostics> {
    if arms == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("diagnostics need M >= 1 and T >= 1".into()));
    }
    let n = history.len();
    let denom = n.max(1) as f64;
    let mut total = 0.0;
    for y in history {
        total += reward(v, y)?;
    }
    let empirical_mean = total / denom;
    let t = horizon as f64;
    let mut confidence_width = sqrt(8.0 * ln(arms as f64 * t * t) / denom);
    if confidence_width <= 0.0 {
        // M = T = 1 gives ln 1 = 0; keep the width strictly positive.
        confidence_width = f64::MIN_POSITIVE;
    }
    let ucb = (empirical_mean + confidence_width).clamp(-1.0, 1.0);
    Ok(PosteriorDiagnostics { empirical_mean, confidence_width, ucb, sample_count: n })
}
