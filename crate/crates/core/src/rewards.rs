//! Weight vectors v and the scalar reward `<v, y>`.

use alloc::format;
use alloc::vec::Vec;

use crate::domain::{LabelVector, TaskKind, WeightVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    /// Inverse class-count weighting.
    ClassDiversity,
    /// Uniform `1/K` weighting.
    MultiLabelSearch,
    /// Caller-supplied fixed weights.
    DomainSpecific,
}

impl RewardKind {
    pub fn name(self) -> &'static str {
        match self {
            RewardKind::ClassDiversity => "diversity",
            RewardKind::MultiLabelSearch => "search",
            RewardKind::DomainSpecific => "domain",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "diversity" => Some(RewardKind::ClassDiversity),
            "search" => Some(RewardKind::MultiLabelSearch),
            "domain" => Some(RewardKind::DomainSpecific),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    kind: RewardKind,
    domain_weights: Option<WeightVector>,
    negative_weighting: bool,
}

impl RewardSpec {
    /// Domain weights are required exactly for [`RewardKind::DomainSpecific`];
    /// their range is checked by [`WeightVector::new`], never clipped.
    pub fn new(
        kind: RewardKind,
        domain_weights: Option<Vec<f64>>,
        negative_weighting: bool,
    ) -> Result<Self> {
        let domain_weights = match (kind, domain_weights) {
            (RewardKind::DomainSpecific, Some(w)) => Some(WeightVector::new(w)?),
            (RewardKind::DomainSpecific, None) => {
                return Err(Error::InvalidParameter("domain reward needs domain_weights".into()))
            }
            (_, Some(_)) => {
                return Err(Error::InvalidParameter(
                    "domain_weights only apply to the domain reward".into(),
                ))
            }
            (_, None) => None,
        };
        Ok(Self { kind, domain_weights, negative_weighting })
    }

    pub fn diversity() -> Self {
        Self { kind: RewardKind::ClassDiversity, domain_weights: None, negative_weighting: false }
    }

    pub fn search() -> Self {
        Self { kind: RewardKind::MultiLabelSearch, domain_weights: None, negative_weighting: false }
    }

    pub fn kind(&self) -> RewardKind {
        self.kind
    }

    pub fn domain_weights(&self) -> Option<&WeightVector> {
        self.domain_weights.as_ref()
    }

    pub fn negative_weighting(&self) -> bool {
        self.negative_weighting
    }

    /// Checks the spec against the task and class count it will run on.
    pub fn validate_for(&self, task: TaskKind, classes: usize) -> Result<()> {
        if self.negative_weighting && task != TaskKind::MultiLabel {
            return Err(Error::InvalidParameter(
                "negative_weighting is only valid for multi-label tasks".into(),
            ));
        }
        if let Some(w) = &self.domain_weights {
            if w.len() != classes {
                return Err(Error::DimensionMismatch { expected: classes, found: w.len() });
            }
        }
        Ok(())
    }

    /// Weights for the next round given counts over the current labeled set.
    pub fn weights(&self, class_counts: &[u64], labeled_size: usize) -> Result<WeightVector> {
        match self.kind {
            RewardKind::ClassDiversity => {
                Ok(diversity_weights(class_counts, labeled_size, self.negative_weighting))
            }
            RewardKind::MultiLabelSearch => search_weights(class_counts.len()),
            RewardKind::DomainSpecific => Ok(self.domain_weights.clone().expect("validated")),
        }
    }
}

/// `v_i = 1 / (K max(1, counts_i))`, negated when `negative_weighting` is set
/// and `counts_i > labeled_size / 2`.
pub fn diversity_weights(class_counts: &[u64], labeled_size: usize, negative_weighting: bool) -> WeightVector {
    let k = class_counts.len() as f64;
    let half = labeled_size as f64 / 2.0;
    let values = class_counts
        .iter()
        .map(|&c| {
            let w = 1.0 / (k * (c.max(1) as f64));
            if negative_weighting && (c as f64) > half {
                -w
            } else {
                w
            }
        })
        .collect();
    WeightVector::new(values).expect("diversity weights are within [-1/K, 1/K]")
}

/// `v = (1/K) 1`.
pub fn search_weights(classes: usize) -> Result<WeightVector> {
    if classes == 0 {
        return Err(Error::InvalidParameter("search weights need K >= 1".into()));
    }
    WeightVector::new(alloc::vec![1.0 / classes as f64; classes])
}

/// `<v, y>`.
pub fn reward(v: &WeightVector, y: &LabelVector) -> Result<f64> {
    if v.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), found: y.len() });
    }
    Ok(v
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .filter(|(_, &b)| b == 1)
        .map(|(w, _)| w)
        .sum())
}

/// Parses `diversity`, `search` or `domain`.
pub fn parse_kind(s: &str) -> Result<RewardKind> {
    RewardKind::from_name(s).ok_or_else(|| Error::InvalidParameter(format!("unknown reward {s:?}")))
}
