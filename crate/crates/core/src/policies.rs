//! Meta-policies choosing which candidate algorithm fills each batch slot.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{LabelVector, TaskKind, WeightVector};
use crate::linalg::SquareMatrix;
use crate::math::{argmax, dot};
use crate::posterior::{diagnostics, validate_discount, ArmPosterior};
use crate::rewards::reward;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Tailor,
    RandomMeta,
    ContextualTs,
    UcbDiag,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Tailor => "tailor",
            PolicyKind::RandomMeta => "random_meta",
            PolicyKind::ContextualTs => "contextual_ts",
            PolicyKind::UcbDiag => "ucb_diag",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "tailor" => Some(PolicyKind::Tailor),
            "random_meta" => Some(PolicyKind::RandomMeta),
            "contextual_ts" => Some(PolicyKind::ContextualTs),
            "ucb_diag" => Some(PolicyKind::UcbDiag),
            _ => None,
        }
    }
}

/// Hyperparameters of the linear contextual baseline: prior N(0, I / prior_precision)
/// and Gaussian observation noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextualConfig {
    pub prior_precision: f64,
    pub noise_variance: f64,
}

impl Default for ContextualConfig {
    fn default() -> Self {
        Self { prior_precision: 1.0, noise_variance: 1.0 }
    }
}

/// Feature of arm `arm` for the linear contextual reduction: `vec(v e_arm^T)`,
/// i.e. `v` placed in block `arm` of a zero vector of length `K * arms`.
pub fn contextual_arm(v: &WeightVector, arm: usize, arms: usize) -> Result<Vec<f64>> {
    if arm >= arms {
        return Err(Error::IndexOutOfRange { what: "arm", index: arm, len: arms });
    }
    let k = v.len();
    let mut phi = alloc::vec![0.0; k * arms];
    phi[arm * k..(arm + 1) * k].copy_from_slice(v.as_slice());
    Ok(phi)
}

/// Arm maximising `<v, theta_i>` over the given samples, ties to the lowest index.
pub fn tailor_choice(v: &[f64], samples: &[Vec<f64>]) -> usize {
    let scores: Vec<f64> = samples.iter().map(|s| dot(v, s)).collect();
    argmax(&scores).expect("at least one arm")
}

/// Bayesian linear regression over the stacked parameter `vec([theta_1 .. theta_M])`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussian {
    precision: SquareMatrix,
    /// `sum phi r / sigma^2`
    moment: Vec<f64>,
    noise_variance: f64,
}

impl LinearGaussian {
    pub fn new(dim: usize, config: ContextualConfig) -> Result<Self> {
        if !(config.prior_precision > 0.0) || !(config.noise_variance > 0.0) {
            return Err(Error::InvalidParameter(
                "contextual prior precision and noise variance must be positive".into(),
            ));
        }
        Ok(Self {
            precision: SquareMatrix::scaled_identity(dim, config.prior_precision),
            moment: alloc::vec![0.0; dim],
            noise_variance: config.noise_variance,
        })
    }

    pub fn precision(&self) -> &SquareMatrix {
        &self.precision
    }

    pub fn mean(&self) -> Result<Vec<f64>> {
        Ok(self.precision.cholesky()?.solve(&self.moment))
    }

    pub fn observe(&mut self, phi: &[f64], r: f64) {
        let w = 1.0 / self.noise_variance;
        self.precision.add_outer(phi, w);
        for (m, &p) in self.moment.iter_mut().zip(phi) {
            *m += w * r * p;
        }
    }

    /// Draws from N(mean, precision^-1), once per entry of `count`.
    fn samples<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let chol = self.precision.cholesky()?;
        let mean = chol.solve(&self.moment);
        let n = mean.len();
        Ok((0..count)
            .map(|_| {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let offset = chol.solve_upper(&z);
                mean.iter().zip(offset).map(|(m, o)| m + o).collect()
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Tailor {
        posteriors: Vec<ArmPosterior>,
    },
    RandomMeta {
        arms: usize,
    },
    ContextualTs {
        arms: usize,
        classes: usize,
        posterior: LinearGaussian,
    },
    /// Chooses the arm with the largest clipped UCB of its empirical reward.
    UcbDiag {
        posteriors: Vec<ArmPosterior>,
        histories: Vec<Vec<LabelVector>>,
        horizon: usize,
    },
}

impl Policy {
    /// `horizon` is the total number of rounds T (used by the UCB width).
    pub fn new(
        kind: PolicyKind,
        task: TaskKind,
        arms: usize,
        classes: usize,
        horizon: usize,
        contextual: ContextualConfig,
    ) -> Result<Self> {
        if arms == 0 || classes == 0 {
            return Err(Error::InvalidParameter("policy needs M >= 1 arms and K >= 1 classes".into()));
        }
        let posteriors = || (0..arms).map(|_| ArmPosterior::uniform(task, classes)).collect();
        Ok(match kind {
            PolicyKind::Tailor => Policy::Tailor { posteriors: posteriors() },
            PolicyKind::RandomMeta => Policy::RandomMeta { arms },
            PolicyKind::ContextualTs => Policy::ContextualTs {
                arms,
                classes,
                posterior: LinearGaussian::new(arms * classes, contextual)?,
            },
            PolicyKind::UcbDiag => {
                if horizon == 0 {
                    return Err(Error::InvalidParameter("ucb_diag needs T >= 1".into()));
                }
                Policy::UcbDiag {
                    posteriors: posteriors(),
                    histories: alloc::vec![Vec::new(); arms],
                    horizon,
                }
            }
        })
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Tailor { .. } => PolicyKind::Tailor,
            Policy::RandomMeta { .. } => PolicyKind::RandomMeta,
            Policy::ContextualTs { .. } => PolicyKind::ContextualTs,
            Policy::UcbDiag { .. } => PolicyKind::UcbDiag,
        }
    }

    pub fn arms(&self) -> usize {
        match self {
            Policy::Tailor { posteriors } | Policy::UcbDiag { posteriors, .. } => posteriors.len(),
            Policy::RandomMeta { arms } | Policy::ContextualTs { arms, .. } => *arms,
        }
    }

    pub fn posteriors(&self) -> Option<&[ArmPosterior]> {
        match self {
            Policy::Tailor { posteriors } | Policy::UcbDiag { posteriors, .. } => Some(posteriors),
            _ => None,
        }
    }

    /// One arm index per batch slot.
    pub fn choose_arms<R: Rng + ?Sized>(&self, v: &WeightVector, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if batch == 0 {
            return Err(Error::InvalidParameter("batch size must be >= 1".into()));
        }
        match self {
            Policy::Tailor { posteriors } => {
                check_classes(v, posteriors[0].classes())?;
                (0..batch)
                    .map(|_| {
                        let samples = posteriors
                            .iter()
                            .map(|p| p.sample_mean(rng))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(tailor_choice(v.as_slice(), &samples))
                    })
                    .collect()
            }
            Policy::RandomMeta { arms } => Ok((0..batch).map(|_| rng.random_range(0..*arms)).collect()),
            Policy::ContextualTs { arms, classes, posterior } => {
                check_classes(v, *classes)?;
                let k = *classes;
                let draws = posterior.samples(batch, rng)?;
                Ok(draws
                    .iter()
                    .map(|theta| {
                        // <phi_i, theta> only touches block i
                        let scores: Vec<f64> =
                            (0..*arms).map(|i| dot(v.as_slice(), &theta[i * k..(i + 1) * k])).collect();
                        argmax(&scores).expect("arms >= 1")
                    })
                    .collect())
            }
            Policy::UcbDiag { histories, horizon, .. } => {
                let ucbs = histories
                    .iter()
                    .map(|h| diagnostics(h, v, histories.len(), *horizon).map(|d| d.ucb))
                    .collect::<Result<Vec<_>>>()?;
                let best = argmax(&ucbs).expect("arms >= 1");
                Ok(alloc::vec![best; batch])
            }
        }
    }

    /// Feeds back one round of labels. Rewards for the contextual baseline are
    /// recomputed as `<v, y>`; it never sees the labels themselves.
    pub fn observe(&mut self, chosen: &[usize], labels: &[LabelVector], v: &WeightVector, gamma: f64) -> Result<()> {
        if chosen.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: chosen.len(), found: labels.len() });
        }
        let arms = self.arms();
        if let Some(&bad) = chosen.iter().find(|&&a| a >= arms) {
            return Err(Error::IndexOutOfRange { what: "arm", index: bad, len: arms });
        }
        match self {
            Policy::Tailor { posteriors } => discount_all(posteriors, chosen, labels, gamma),
            Policy::UcbDiag { posteriors, histories, .. } => {
                discount_all(posteriors, chosen, labels, gamma)?;
                for (&a, y) in chosen.iter().zip(labels) {
                    histories[a].push(y.clone());
                }
                Ok(())
            }
            Policy::RandomMeta { .. } => Ok(()),
            Policy::ContextualTs { arms, posterior, .. } => {
                for (&a, y) in chosen.iter().zip(labels) {
                    let r = reward(v, y)?;
                    posterior.observe(&contextual_arm(v, a, *arms)?, r);
                }
                Ok(())
            }
        }
    }
}

fn check_classes(v: &WeightVector, classes: usize) -> Result<()> {
    if v.len() != classes {
        return Err(Error::DimensionMismatch { expected: classes, found: v.len() });
    }
    Ok(())
}

/// Discounted update of every arm, unchosen arms included.
fn discount_all(posteriors: &mut [ArmPosterior], chosen: &[usize], labels: &[LabelVector], gamma: f64) -> Result<()> {
    validate_discount(gamma)?;
    for (i, post) in posteriors.iter_mut().enumerate() {
        let obs: Vec<LabelVector> = chosen
            .iter()
            .zip(labels)
            .filter(|(&a, _)| a == i)
            .map(|(_, y)| y.clone())
            .collect();
        *post = post.discounted_update(&obs, gamma).map_err(|e| match e {
            Error::DimensionMismatch { .. } => e,
            other => Error::InvalidParameter(format!("arm {i}: {other}")),
        })?;
    }
    Ok(())
}
