//! Linear softmax (multi-class) or per-class sigmoid (multi-label) classifier,
//! retrained from zero on the labeled set every round.

use alloc::vec::Vec;

use crate::domain::{LabelVector, TaskKind};
use crate::math::{exp, ln, sigmoid};
use crate::{Error, Result};

/// Logits are clamped to this magnitude before exponentiation.
pub const LOGIT_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub grad_tol: f64,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 500, grad_tol: 1e-6, l2: 0.0 }
    }
}

/// A training pair borrowed from the pool.
pub type Sample<'a> = (&'a [f64], &'a LabelVector);

/// Weights are a K x (d + 1) row-major matrix; the last column is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    task: TaskKind,
    classes: usize,
    dim: usize,
    weights: Vec<f64>,
    l2: f64,
    trained: bool,
}

impl LinearClassifier {
    /// Zero weights, not yet trained.
    pub fn zeros(task: TaskKind, classes: usize, dim: usize) -> Self {
        Self { task, classes, dim, weights: alloc::vec![0.0; classes * (dim + 1)], l2: 0.0, trained: false }
    }

    /// A classifier with explicit weights, marked trained.
    pub fn from_weights(task: TaskKind, classes: usize, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != classes * (dim + 1) {
            return Err(Error::DimensionMismatch { expected: classes * (dim + 1), found: weights.len() });
        }
        Ok(Self { task, classes, dim, weights, l2: 0.0, trained: true })
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let w = self.dim + 1;
        (0..self.classes)
            .map(|c| {
                let row = &self.weights[c * w..(c + 1) * w];
                let z = row[..self.dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[self.dim];
                z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
            })
            .collect()
    }

    /// Probabilities without the trained check; used during training.
    fn probs(&self, x: &[f64]) -> Vec<f64> {
        let z = self.logits(x);
        match self.task {
            TaskKind::MultiLabel => z.into_iter().map(sigmoid).collect(),
            TaskKind::MultiClass => {
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = z.iter().map(|&v| exp(v - m)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        self.check_dim(x)?;
        Ok(self.probs(x))
    }

    /// Most probable class (ties to the lowest index).
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        let p = self.predict_proba(x)?;
        Ok(crate::math::argmax(&p).expect("K >= 1"))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    fn check_batch(&self, batch: &[Sample<'_>]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        for (x, y) in batch {
            self.check_dim(x)?;
            if y.len() != self.classes {
                return Err(Error::DimensionMismatch { expected: self.classes, found: y.len() });
            }
        }
        Ok(())
    }

    /// Mean cross-entropy (multi-class) or mean summed binary cross-entropy
    /// (multi-label), plus `l2/2 |W|^2`.
    pub fn loss(&self, batch: &[Sample<'_>]) -> Result<f64> {
        self.check_batch(batch)?;
        Ok(self.loss_and_gradient(batch).0)
    }

    /// Exact gradient of [`loss`](Self::loss) with respect to the weights.
    pub fn loss_gradient(&self, batch: &[Sample<'_>]) -> Result<Vec<f64>> {
        self.check_batch(batch)?;
        Ok(self.loss_and_gradient(batch).1)
    }

    fn loss_and_gradient(&self, batch: &[Sample<'_>]) -> (f64, Vec<f64>) {
        let w = self.dim + 1;
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut grad = alloc::vec![0.0; self.weights.len()];
        for (x, y) in batch {
            let p = self.probs(x);
            for c in 0..self.classes {
                let yc = if y.is_set(c) { 1.0 } else { 0.0 };
                loss -= match self.task {
                    TaskKind::MultiClass => yc * ln(p[c]),
                    TaskKind::MultiLabel => yc * ln(p[c]) + (1.0 - yc) * ln(1.0 - p[c]),
                };
                let r = (p[c] - yc) / n;
                let row = &mut grad[c * w..(c + 1) * w];
                for (g, xi) in row[..self.dim].iter_mut().zip(x.iter()) {
                    *g += r * xi;
                }
                row[self.dim] += r;
            }
        }
        loss /= n;
        if self.l2 > 0.0 {
            loss += 0.5 * self.l2 * self.weights.iter().map(|v| v * v).sum::<f64>();
            for (g, v) in grad.iter_mut().zip(&self.weights) {
                *g += self.l2 * v;
            }
        }
        (loss, grad)
    }

    /// Pseudo-label gradient embedding `(p - y_hat) (x) [x; 1]`, where `y_hat`
    /// is the argmax class (multi-class) or `p >= 0.5` per class (multi-label).
    pub fn gradient_embedding(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.predict_proba(x)?;
        let pseudo: Vec<f64> = match self.task {
            TaskKind::MultiClass => {
                let top = crate::math::argmax(&p).expect("K >= 1");
                (0..self.classes).map(|c| if c == top { 1.0 } else { 0.0 }).collect()
            }
            TaskKind::MultiLabel => p.iter().map(|&q| if q >= 0.5 { 1.0 } else { 0.0 }).collect(),
        };
        let w = self.dim + 1;
        let mut out = alloc::vec![0.0; self.classes * w];
        for c in 0..self.classes {
            let r = p[c] - pseudo[c];
            for (o, xi) in out[c * w..c * w + self.dim].iter_mut().zip(x) {
                *o = r * xi;
            }
            out[c * w + self.dim] = r;
        }
        Ok(out)
    }
}

/// Full-batch gradient descent from zero weights.
///
/// Each epoch tries a step of `config.lr` and halves it until the loss does not
/// increase, so the loss sequence is monotone even when the features are badly
/// scaled. Stops after `config.epochs` epochs or once the gradient's max-norm
/// drops below `config.grad_tol`.
pub fn train(batch: &[Sample<'_>], task: TaskKind, classes: usize, config: &TrainConfig) -> Result<LinearClassifier> {
    train_with_history(batch, task, classes, config).map(|(m, _)| m)
}

/// [`train`], also returning the loss before each epoch and after the last one.
pub fn train_with_history(
    batch: &[Sample<'_>],
    task: TaskKind,
    classes: usize,
    config: &TrainConfig,
) -> Result<(LinearClassifier, Vec<f64>)> {
    let Some((x0, _)) = batch.first() else {
        return Err(Error::Empty("training set"));
    };
    if !(config.lr > 0.0) || config.l2 < 0.0 {
        return Err(Error::InvalidParameter("lr must be positive and l2 non-negative".into()));
    }
    let mut model = LinearClassifier::zeros(task, classes, x0.len());
    model.l2 = config.l2;
    model.check_batch(batch)?;
    let (mut loss, mut grad) = model.loss_and_gradient(batch);
    let mut history = alloc::vec![loss];
    for _ in 0..config.epochs {
        if max_abs(&grad) < config.grad_tol {
            break;
        }
        let mut step = config.lr;
        let mut accepted = false;
        for _ in 0..40 {
            let mut candidate = model.clone();
            for (w, g) in candidate.weights.iter_mut().zip(&grad) {
                *w -= step * g;
            }
            let (l, g) = candidate.loss_and_gradient(batch);
            if l <= loss {
                model = candidate;
                loss = l;
                grad = g;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        history.push(loss);
        if !accepted {
            break;
        }
    }
    model.trained = true;
    Ok((model, history))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
