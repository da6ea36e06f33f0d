//! Labels, pools and the labeled/unlabeled bookkeeping shared by every module.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Multi-label tasks observe arbitrary binary vectors; multi-class tasks
/// observe one-hot vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    MultiLabel,
    MultiClass,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::MultiLabel => "multilabel",
            TaskKind::MultiClass => "multiclass",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "multilabel" => Some(TaskKind::MultiLabel),
            "multiclass" => Some(TaskKind::MultiClass),
            _ => None,
        }
    }
}

/// A binary label vector of length K.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    /// Validates entries are 0/1 and, for multi-class tasks, that exactly one is set.
    pub fn new(values: Vec<u8>, task: TaskKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("label vector"));
        }
        if let Some(bad) = values.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!("label entry {bad} is not 0 or 1")));
        }
        if task == TaskKind::MultiClass {
            let ones = values.iter().filter(|&&v| v == 1).count();
            if ones != 1 {
                return Err(Error::InvalidParameter(format!(
                    "multi-class label must be one-hot, found {ones} ones"
                )));
            }
        }
        Ok(Self(values))
    }

    /// The canonical basis vector e_class of length k.
    pub fn one_hot(class: usize, k: usize) -> Result<Self> {
        if class >= k {
            return Err(Error::IndexOutOfRange { what: "class", index: class, len: k });
        }
        let mut v = alloc::vec![0u8; k];
        v[class] = 1;
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    #[inline]
    pub fn is_set(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    /// Number of positive entries.
    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1).count()
    }

    /// Index of the single set entry of a one-hot vector (first set entry otherwise).
    pub fn class_index(&self) -> Option<usize> {
        self.0.iter().position(|&v| v == 1)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }
}

/// Per-round reward weights, each entry in `[-1/K, 1/K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

/// Slack allowed on the `1/K` bound.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("weight vector"));
        }
        let bound = 1.0 / values.len() as f64 + WEIGHT_TOLERANCE;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v.abs() > bound {
                return Err(Error::InvalidParameter(format!(
                    "weight {i} = {v} outside [-1/K, 1/K] for K = {}",
                    values.len()
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `c * v`; entries may leave `[-1/K, 1/K]`, so this is a plain vector.
    pub fn scaled(&self, c: f64) -> Vec<f64> {
        self.0.iter().map(|v| v * c).collect()
    }
}

/// One pool element. `label` is ground truth and is only readable through
/// [`PoolPartition::label`] once the example is annotated.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: usize,
    pub features: Vec<f64>,
    label: LabelVector,
}

impl Example {
    pub fn new(id: usize, features: Vec<f64>, label: LabelVector) -> Self {
        Self { id, features, label }
    }
}

/// A fixed pool of N examples with dense ids `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    task: TaskKind,
    classes: usize,
    dim: usize,
    examples: Vec<Example>,
}

impl Pool {
    /// Validates dense ids in order, feature dimension and label shape.
    pub fn new(task: TaskKind, classes: usize, dim: usize, examples: Vec<Example>) -> Result<Self> {
        if classes == 0 {
            return Err(Error::InvalidParameter("pool needs K >= 1".into()));
        }
        for (i, ex) in examples.iter().enumerate() {
            if ex.id != i {
                return Err(Error::InvalidParameter(format!(
                    "example at position {i} has id {}, ids must be dense and ordered",
                    ex.id
                )));
            }
            if ex.features.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: ex.features.len() });
            }
            if ex.label.len() != classes {
                return Err(Error::DimensionMismatch { expected: classes, found: ex.label.len() });
            }
            if task == TaskKind::MultiClass && ex.label.ones() != 1 {
                return Err(Error::InvalidParameter(format!("example {i} is not one-hot")));
            }
        }
        Ok(Self { task, classes, dim, examples })
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

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn features(&self, id: usize) -> &[f64] {
        &self.examples[id].features
    }

    /// Ground-truth labels of the whole pool, for evaluation, pool export and
    /// pool statistics. Selection code must go through [`PoolPartition::label`].
    pub fn evaluation_labels(&self) -> impl Iterator<Item = &LabelVector> {
        self.examples.iter().map(|e| &e.label)
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    /// Ground-truth label; reading it is the act of annotation.
    pub(crate) fn reveal(&self, id: usize) -> &LabelVector {
        &self.examples[id].label
    }

    /// Per-class counts over the entire pool (positives for multi-label).
    pub fn class_sizes(&self) -> Vec<u64> {
        let mut counts = alloc::vec![0u64; self.classes];
        for ex in &self.examples {
            add_counts(&mut counts, &ex.label);
        }
        counts
    }
}

fn add_counts(counts: &mut [u64], y: &LabelVector) {
    for (c, &b) in counts.iter_mut().zip(y.as_slice()) {
        *c += b as u64;
    }
}

/// Labeled (L) and unlabeled (U) index sets plus the per-class counts of L.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolPartition {
    labeled: Vec<usize>,
    unlabeled: BTreeSet<usize>,
    is_labeled: Vec<bool>,
    class_counts: Vec<u64>,
}

impl PoolPartition {
    /// Everything unlabeled.
    pub fn new(pool: &Pool) -> Self {
        Self {
            labeled: Vec::new(),
            unlabeled: (0..pool.len()).collect(),
            is_labeled: alloc::vec![false; pool.len()],
            class_counts: alloc::vec![0; pool.classes()],
        }
    }

    /// Labeled ids in annotation order.
    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    /// Unlabeled ids in ascending id order.
    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn is_labeled(&self, id: usize) -> bool {
        self.is_labeled.get(id).copied().unwrap_or(false)
    }

    /// Label of an annotated example.
    ///
    /// Panics if `id` has not been annotated: reading a hidden label is a
    /// programming error.
    pub fn label<'p>(&self, pool: &'p Pool, id: usize) -> &'p LabelVector {
        assert!(self.is_labeled(id), "label of example {id} read before annotation");
        pool.reveal(id)
    }

    /// Moves `ids` from U to L, returning their labels in input order.
    /// Nothing changes if any id is invalid.
    pub fn annotate_batch(&mut self, pool: &Pool, ids: &[usize]) -> Result<Vec<LabelVector>> {
        let mut seen = BTreeSet::new();
        for &id in ids {
            if !self.unlabeled.contains(&id) {
                return Err(Error::Precondition(format!("example {id} is not unlabeled")));
            }
            if !seen.insert(id) {
                return Err(Error::Precondition(format!("example {id} appears twice in batch")));
            }
        }
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            self.unlabeled.remove(&id);
            self.labeled.push(id);
            self.is_labeled[id] = true;
            let y = pool.reveal(id);
            add_counts(&mut self.class_counts, y);
            out.push(y.clone());
        }
        Ok(out)
    }

    /// Class counts recomputed from scratch over L.
    pub fn recount(&self, pool: &Pool) -> Vec<u64> {
        let mut counts = alloc::vec![0; pool.classes()];
        for &id in &self.labeled {
            add_counts(&mut counts, pool.reveal(id));
        }
        counts
    }
}

/// Everything recorded for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub arms: Vec<usize>,
    pub ids: Vec<usize>,
    pub labels: Vec<LabelVector>,
    pub rewards: Vec<f64>,
    pub weights: WeightVector,
}

/// Chronological record of every round of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    arms: usize,
    rounds: Vec<RoundRecord>,
}

impl SelectionTrace {
    pub fn new(arms: usize) -> Self {
        Self { arms, rounds: Vec::new() }
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    /// Appends a round after checking its shape, arm range and id distinctness.
    pub fn push(&mut self, record: RoundRecord) -> Result<()> {
        let b = record.arms.len();
        for len in [record.ids.len(), record.labels.len(), record.rewards.len()] {
            if len != b {
                return Err(Error::DimensionMismatch { expected: b, found: len });
            }
        }
        if let Some(&bad) = record.arms.iter().find(|&&a| a >= self.arms) {
            return Err(Error::IndexOutOfRange { what: "arm", index: bad, len: self.arms });
        }
        let distinct: BTreeSet<_> = record.ids.iter().collect();
        if distinct.len() != record.ids.len() {
            return Err(Error::Precondition("round selected the same example twice".into()));
        }
        self.rounds.push(record);
        Ok(())
    }

    /// Every label gathered by `arm`, oldest first.
    pub fn arm_history(&self, arm: usize) -> Result<Vec<LabelVector>> {
        if arm >= self.arms {
            return Err(Error::IndexOutOfRange { what: "arm", index: arm, len: self.arms });
        }
        Ok(self
            .rounds
            .iter()
            .flat_map(|r| r.arms.iter().zip(&r.labels))
            .filter(|(&a, _)| a == arm)
            .map(|(_, y)| y.clone())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pool(task: TaskKind, labels: Vec<Vec<u8>>) -> Pool {
        let k = labels[0].len();
        let examples = labels
            .into_iter()
            .enumerate()
            .map(|(i, y)| Example::new(i, vec![i as f64], LabelVector::new(y, task).unwrap()))
            .collect();
        Pool::new(task, k, 1, examples).unwrap()
    }

    #[test]
    fn multiclass_annotation_increments_one_hot() {
        let p = pool(TaskKind::MultiClass, vec![vec![1, 0], vec![0, 1]]);
        let mut part = PoolPartition::new(&p);
        assert_eq!(part.class_counts(), &[0, 0]);
        let ys = part.annotate_batch(&p, &[0]).unwrap();
        assert_eq!(ys[0].as_slice(), &[1, 0]);
        assert_eq!(part.class_counts(), &[1, 0]);
    }

    #[test]
    fn multilabel_annotation_increments_each_positive() {
        let p = pool(
            TaskKind::MultiLabel,
            vec![vec![1, 0, 1], vec![0, 0, 1], vec![1, 1, 0]],
        );
        let mut part = PoolPartition::new(&p);
        part.annotate_batch(&p, &[0, 1]).unwrap();
        assert_eq!(part.class_counts(), &[1, 0, 2]);
        part.annotate_batch(&p, &[2]).unwrap();
        assert_eq!(part.class_counts(), &[2, 1, 2]);
        assert_eq!(part.recount(&p), part.class_counts());
    }

    #[test]
    fn exhausting_the_pool_then_erroring() {
        let p = pool(TaskKind::MultiClass, vec![vec![1, 0]; 5]);
        let mut part = PoolPartition::new(&p);
        part.annotate_batch(&p, &[3, 1]).unwrap();
        part.annotate_batch(&p, &[0, 2, 4]).unwrap();
        assert_eq!(part.labeled().len(), 5);
        assert!(part.unlabeled().is_empty());
        assert!(matches!(part.annotate_batch(&p, &[2]), Err(Error::Precondition(_))));
    }

    #[test]
    fn duplicate_ids_are_rejected_atomically() {
        let p = pool(TaskKind::MultiClass, vec![vec![1, 0]; 3]);
        let mut part = PoolPartition::new(&p);
        let before = part.clone();
        assert!(part.annotate_batch(&p, &[1, 1]).is_err());
        assert_eq!(part, before);
    }

    #[test]
    #[should_panic(expected = "before annotation")]
    fn hidden_labels_are_gated() {
        let p = pool(TaskKind::MultiClass, vec![vec![1, 0]; 2]);
        let part = PoolPartition::new(&p);
        let _ = part.label(&p, 0);
    }

    #[test]
    fn label_validation() {
        assert!(LabelVector::new(vec![1, 1], TaskKind::MultiClass).is_err());
        assert!(LabelVector::new(vec![0, 0], TaskKind::MultiClass).is_err());
        assert!(LabelVector::new(vec![0, 2], TaskKind::MultiLabel).is_err());
        assert!(LabelVector::new(vec![0, 0], TaskKind::MultiLabel).is_ok());
    }

    #[test]
    fn weight_bounds() {
        assert!(WeightVector::new(vec![0.5, -0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5 + 1e-9, 0.0]).is_err());
        assert!(WeightVector::new(vec![0.5 + 1e-13, 0.0]).is_ok());
    }

    #[test]
    fn arm_history_filters_by_chooser() {
        let y = |b: u8| LabelVector::new(vec![b, 1 - b], TaskKind::MultiClass).unwrap();
        let v = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let mut trace = SelectionTrace::new(3);
        assert!(trace.arm_history(1).unwrap().is_empty());
        trace
            .push(RoundRecord {
                arms: vec![1, 2, 1],
                ids: vec![0, 1, 2],
                labels: vec![y(1), y(0), y(0)],
                rewards: vec![0.5; 3],
                weights: v.clone(),
            })
            .unwrap();
        assert_eq!(trace.arm_history(1).unwrap(), vec![y(1), y(0)]);
        assert_eq!(trace.arm_history(2).unwrap(), vec![y(0)]);
        assert!(trace.arm_history(0).unwrap().is_empty());
        assert!(trace.arm_history(3).is_err());
    }

    #[test]
    fn trace_rejects_repeated_ids() {
        let y = LabelVector::one_hot(0, 2).unwrap();
        let mut trace = SelectionTrace::new(1);
        let rec = RoundRecord {
            arms: vec![0, 0],
            ids: vec![4, 4],
            labels: vec![y.clone(), y],
            rewards: vec![0.0; 2],
            weights: WeightVector::new(vec![0.5, 0.5]).unwrap(),
        };
        assert!(trace.push(rec).is_err());
    }
}
