//! Candidate active-learning algorithms as one-at-a-time selectors.
//!
//! Each call to [`select_next`] returns one unlabeled id not yet taken this
//! round. Batch algorithms built on a fixed score (top-B by uncertainty, say)
//! are exactly reproduced by calling it B times with a growing exclusion set.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::OnceCell;
use rand::Rng;

use crate::domain::{Pool, PoolPartition};
use crate::math::ln;
use crate::model::LinearClassifier;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateKind {
    Random,
    LeastConfidence,
    Margin,
    Entropy,
    /// Mean binary margin `(1/K) sum |2 p_i - 1|`, smallest first.
    EmalAvgMargin,
    /// Highest `p_c` first.
    MostLikelyPositive(usize),
    /// Smallest `|2 p_c - 1|` first.
    PerClassUncertainty(usize),
    /// k-means++ style D^2 sampling over gradient embeddings.
    BadgeKmeansPp,
}

impl CandidateKind {
    pub fn name(&self) -> String {
        match self {
            CandidateKind::Random => "random".into(),
            CandidateKind::LeastConfidence => "least_confidence".into(),
            CandidateKind::Margin => "margin".into(),
            CandidateKind::Entropy => "entropy".into(),
            CandidateKind::EmalAvgMargin => "emal".into(),
            CandidateKind::MostLikelyPositive(c) => format!("mlp:{c}"),
            CandidateKind::PerClassUncertainty(c) => format!("per_class_uncertainty:{c}"),
            CandidateKind::BadgeKmeansPp => "badge".into(),
        }
    }

    /// Kinds whose choice is a deterministic function of model scores.
    pub fn is_fixed_score(&self) -> bool {
        !matches!(self, CandidateKind::Random | CandidateKind::BadgeKmeansPp)
    }

    pub fn class(&self) -> Option<usize> {
        match self {
            CandidateKind::MostLikelyPositive(c) | CandidateKind::PerClassUncertainty(c) => Some(*c),
            _ => None,
        }
    }
}

/// A configured candidate entry; the per-class families expand to K arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSpec {
    Single(CandidateKind),
    MostLikelyPositiveAll,
    PerClassUncertaintyAll,
}

impl CandidateSpec {
    /// Parses `random`, `least_confidence`, `margin`, `entropy`, `emal`, `badge`,
    /// `mlp`, `per_class_uncertainty`, or `mlp:<c>` / `per_class_uncertainty:<c>`
    /// for a single 0-based class.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown candidate {s:?}"));
        if let Some((family, class)) = s.split_once(':') {
            let c: usize = class.parse().map_err(|_| bad())?;
            return match family {
                "mlp" => Ok(CandidateSpec::Single(CandidateKind::MostLikelyPositive(c))),
                "per_class_uncertainty" => Ok(CandidateSpec::Single(CandidateKind::PerClassUncertainty(c))),
                _ => Err(bad()),
            };
        }
        Ok(match s {
            "random" => CandidateSpec::Single(CandidateKind::Random),
            "least_confidence" => CandidateSpec::Single(CandidateKind::LeastConfidence),
            "margin" => CandidateSpec::Single(CandidateKind::Margin),
            "entropy" => CandidateSpec::Single(CandidateKind::Entropy),
            "emal" => CandidateSpec::Single(CandidateKind::EmalAvgMargin),
            "badge" => CandidateSpec::Single(CandidateKind::BadgeKmeansPp),
            "mlp" => CandidateSpec::MostLikelyPositiveAll,
            "per_class_uncertainty" => CandidateSpec::PerClassUncertaintyAll,
            _ => return Err(bad()),
        })
    }

    pub fn name(&self) -> String {
        match self {
            CandidateSpec::Single(k) => k.name(),
            CandidateSpec::MostLikelyPositiveAll => "mlp".into(),
            CandidateSpec::PerClassUncertaintyAll => "per_class_uncertainty".into(),
        }
    }
}

/// Expands specs into one arm per kind, checking class indices against K.
pub fn expand(specs: &[CandidateSpec], classes: usize) -> Result<Vec<CandidateKind>> {
    let mut out = Vec::new();
    for spec in specs {
        match *spec {
            CandidateSpec::Single(kind) => {
                if let Some(c) = kind.class() {
                    if c >= classes {
                        return Err(Error::IndexOutOfRange { what: "candidate class", index: c, len: classes });
                    }
                }
                out.push(kind);
            }
            CandidateSpec::MostLikelyPositiveAll => out.extend((0..classes).map(CandidateKind::MostLikelyPositive)),
            CandidateSpec::PerClassUncertaintyAll => out.extend((0..classes).map(CandidateKind::PerClassUncertainty)),
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("candidate list"));
    }
    Ok(out)
}

/// Selection priority of a fixed-score kind: lower is picked first.
/// `None` for kinds that are not fixed-score.
pub fn priority(kind: CandidateKind, p: &[f64]) -> Option<f64> {
    let k = p.len() as f64;
    Some(match kind {
        CandidateKind::LeastConfidence => p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        CandidateKind::Margin => {
            let (mut top1, mut top2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &q in p {
                if q > top1 {
                    top2 = top1;
                    top1 = q;
                } else if q > top2 {
                    top2 = q;
                }
            }
            if top2.is_finite() {
                top1 - top2
            } else {
                top1
            }
        }
        // argmax of entropy = argmin of sum p ln p
        CandidateKind::Entropy => p.iter().filter(|&&q| q > 0.0).map(|&q| q * ln(q)).sum(),
        CandidateKind::EmalAvgMargin => p.iter().map(|&q| (2.0 * q - 1.0).abs()).sum::<f64>() / k,
        CandidateKind::MostLikelyPositive(c) => -p[c],
        CandidateKind::PerClassUncertainty(c) => (2.0 * p[c] - 1.0).abs(),
        CandidateKind::Random | CandidateKind::BadgeKmeansPp => return None,
    })
}

/// Model outputs over the unlabeled set for one round. The model is fixed
/// within a round, so probabilities are computed once and embeddings lazily.
pub struct ScoringContext<'a> {
    ids: Vec<usize>,
    probs: Vec<Vec<f64>>,
    source: Option<(&'a LinearClassifier, &'a Pool)>,
    embeddings: OnceCell<Vec<Vec<f64>>>,
}

impl<'a> ScoringContext<'a> {
    pub fn new(model: &'a LinearClassifier, pool: &'a Pool, partition: &PoolPartition) -> Result<Self> {
        if !model.is_trained() {
            return Err(Error::Untrained);
        }
        let ids: Vec<usize> = partition.unlabeled().iter().copied().collect();
        let probs = ids
            .iter()
            .map(|&id| model.predict_proba(pool.features(id)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ids, probs, source: Some((model, pool)), embeddings: OnceCell::new() })
    }

    /// Context over explicit probabilities (and optional embeddings) for
    /// ids given in ascending order.
    pub fn from_parts(ids: Vec<usize>, probs: Vec<Vec<f64>>, embeddings: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if ids.len() != probs.len() {
            return Err(Error::DimensionMismatch { expected: ids.len(), found: probs.len() });
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("candidate ids must be strictly ascending".into()));
        }
        let cell = OnceCell::new();
        if let Some(e) = embeddings {
            if e.len() != ids.len() {
                return Err(Error::DimensionMismatch { expected: ids.len(), found: e.len() });
            }
            let _ = cell.set(e);
        }
        Ok(Self { ids, probs, source: None, embeddings: cell })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.probs
    }

    fn embeddings(&self) -> Result<&[Vec<f64>]> {
        if let Some(e) = self.embeddings.get() {
            return Ok(e);
        }
        let (model, pool) = self.source.ok_or(Error::Untrained)?;
        let e = self
            .ids
            .iter()
            .map(|&id| model.gradient_embedding(pool.features(id)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.embeddings.get_or_init(|| e))
    }

    fn position(&self, id: usize) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Positions (into `ids`) still available given this round's selections.
    fn available(&self, already_selected: &[usize]) -> Vec<usize> {
        let taken: BTreeSet<usize> = already_selected.iter().copied().collect();
        (0..self.ids.len()).filter(|&i| !taken.contains(&self.ids[i])).collect()
    }
}

/// Next example chosen by `kind`, excluding `already_selected`.
pub fn select_next<R: Rng + ?Sized>(
    kind: CandidateKind,
    ctx: &ScoringContext<'_>,
    already_selected: &[usize],
    rng: &mut R,
) -> Result<usize> {
    let available = ctx.available(already_selected);
    if available.is_empty() {
        return Err(Error::Empty("no unlabeled example left to select"));
    }
    match kind {
        CandidateKind::Random => Ok(ctx.ids[available[rng.random_range(0..available.len())]]),
        CandidateKind::BadgeKmeansPp => {
            let dist = badge_distribution(ctx, already_selected)?;
            match dist {
                BadgeStep::FirstPick(id) => Ok(id),
                BadgeStep::Weighted(weights) => {
                    let total: f64 = weights.iter().map(|(_, w)| w).sum();
                    let mut u = rng.random::<f64>() * total;
                    for &(id, w) in &weights {
                        if u < w {
                            return Ok(id);
                        }
                        u -= w;
                    }
                    // rounding left u just above the last positive weight
                    Ok(weights.iter().rev().find(|(_, w)| *w > 0.0).expect("positive total").0)
                }
            }
        }
        fixed => {
            if let Some(c) = fixed.class() {
                let k = ctx.probs[available[0]].len();
                if c >= k {
                    return Err(Error::IndexOutOfRange { what: "candidate class", index: c, len: k });
                }
            }
            let mut best: Option<(usize, f64)> = None;
            for &pos in &available {
                let s = priority(fixed, &ctx.probs[pos]).expect("fixed-score kind");
                match best {
                    Some((_, b)) if s >= b => {}
                    _ => best = Some((pos, s)),
                }
            }
            Ok(ctx.ids[best.expect("non-empty").0])
        }
    }
}

/// What the k-means++ selector will do next.
#[derive(Debug, Clone, PartialEq)]
pub enum BadgeStep {
    /// First pick of the round: the largest embedding norm (ties to lowest id).
    FirstPick(usize),
    /// `(id, probability)` for every available id; probabilities sum to one.
    Weighted(Vec<(usize, f64)>),
}

/// Selection distribution of the k-means++ selector given this round's picks.
pub fn badge_distribution(ctx: &ScoringContext<'_>, already_selected: &[usize]) -> Result<BadgeStep> {
    let emb = ctx.embeddings()?;
    let available = ctx.available(already_selected);
    if available.is_empty() {
        return Err(Error::Empty("no unlabeled example left to select"));
    }
    let centers: Vec<&[f64]> = already_selected
        .iter()
        .filter_map(|&id| ctx.position(id))
        .map(|p| emb[p].as_slice())
        .collect();
    if centers.is_empty() {
        let norms: Vec<f64> = available.iter().map(|&p| sq_norm(&emb[p])).collect();
        let best = crate::math::argmax(&norms).expect("non-empty");
        return Ok(BadgeStep::FirstPick(ctx.ids[available[best]]));
    }
    let d2: Vec<f64> = available
        .iter()
        .map(|&p| centers.iter().map(|c| sq_dist(&emb[p], c)).fold(f64::INFINITY, f64::min))
        .collect();
    let total: f64 = d2.iter().sum();
    let n = available.len() as f64;
    Ok(BadgeStep::Weighted(
        available
            .iter()
            .zip(&d2)
            .map(|(&p, &d)| (ctx.ids[p], if total > 0.0 { d / total } else { 1.0 / n }))
            .collect(),
    ))
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
