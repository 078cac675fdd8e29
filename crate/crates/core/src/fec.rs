//! Front-end classifier over the pooled committee weights.
//!
//! The pool is every surviving weight of every committee member, referenced in
//! place. For each class `C` the confusion set `S_C` collects the classes the
//! committee votes highly for on `C`'s training inputs; the suspicion set `T_C`
//! is its inverse, the classes whose confusion sets contain `C`. To classify,
//! the committee's high-vote classes select suspicion sets, and only pool
//! weights of classes in their union are scanned for the nearest one.

use std::collections::BTreeSet;

use crate::committee::SystemA;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::lvq::squared_distance;

pub const DEFAULT_THRESHOLD_FACTOR: f64 = 0.75;

/// Reference to one member weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolEntry {
    pub member: usize,
    pub weight: usize,
    pub class: usize,
}

/// `T_C = { C' : C ∈ S_C' }` for every class.
pub fn suspicion_sets(confusion: &[BTreeSet<usize>]) -> Vec<BTreeSet<usize>> {
    let mut out = vec![BTreeSet::new(); confusion.len()];
    for (source, set) in confusion.iter().enumerate() {
        for &c in set {
            out[c].insert(source);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FecIndex {
    pool: Vec<PoolEntry>,
    confusion: Vec<BTreeSet<usize>>,
    suspicion: Vec<BTreeSet<usize>>,
    threshold_factor: f64,
    t: f64,
    r: usize,
}

impl FecIndex {
    /// Index from explicit confusion sets. Each `S_C` gains `C` if missing and
    /// labels must be below the class count.
    pub fn from_confusion_sets(
        pool: Vec<PoolEntry>,
        mut confusion: Vec<BTreeSet<usize>>,
        threshold_factor: f64,
        t: f64,
        r: usize,
    ) -> Result<Self> {
        let classes = confusion.len();
        for (c, set) in confusion.iter_mut().enumerate() {
            if let Some(&bad) = set.iter().find(|&&x| x >= classes) {
                return Err(Error::MalformedModel(format!(
                    "confusion set of class {c} names class {bad}"
                )));
            }
            set.insert(c);
        }
        if let Some(e) = pool.iter().find(|e| e.class >= classes) {
            return Err(Error::MalformedModel(format!(
                "pool weight labeled {} of {classes} classes",
                e.class
            )));
        }
        let suspicion = suspicion_sets(&confusion);
        Ok(FecIndex {
            pool,
            confusion,
            suspicion,
            threshold_factor,
            t,
            r,
        })
    }

    pub fn pool(&self) -> &[PoolEntry] {
        &self.pool
    }

    pub fn confusion_sets(&self) -> &[BTreeSet<usize>] {
        &self.confusion
    }

    pub fn suspicion_sets(&self) -> &[BTreeSet<usize>] {
        &self.suspicion
    }

    pub fn threshold_factor(&self) -> f64 {
        self.threshold_factor
    }

    pub fn mean_member_rate(&self) -> f64 {
        self.t
    }

    pub fn classifiers_per_class(&self) -> usize {
        self.r
    }

    /// Union of the suspicion sets of `high_votes`.
    pub fn allowed_classes(&self, high_votes: &BTreeSet<usize>) -> BTreeSet<usize> {
        high_votes
            .iter()
            .flat_map(|&c| self.suspicion[c].iter().copied())
            .collect()
    }

    pub fn weights_per_class(&self) -> Vec<usize> {
        let mut counts = vec![0; self.confusion.len()];
        for e in &self.pool {
            counts[e.class] += 1;
        }
        counts
    }
}

/// Pool of every surviving weight in `committee`, member by member.
pub fn regroup_weights(committee: &SystemA) -> Vec<PoolEntry> {
    committee
        .members()
        .iter()
        .enumerate()
        .flat_map(|(member, m)| {
            m.network
                .weight_classes()
                .iter()
                .enumerate()
                .map(move |(weight, &class)| PoolEntry { member, weight, class })
        })
        .collect()
}

/// Regroups the committee's weights and derives confusion and suspicion sets
/// from its votes on `training_data`.
pub fn build_fec(committee: &SystemA, training_data: &LabeledDataset, threshold_factor: f64) -> Result<FecIndex> {
    let classes = committee.config().classes();
    if training_data.class_count() != classes {
        return Err(Error::InvalidDataset(format!(
            "training data has {} classes, committee {classes}",
            training_data.class_count()
        )));
    }
    let t = committee.mean_member_rate();
    let r = committee.config().classifiers_per_class();
    let mut confusion = vec![BTreeSet::new(); classes];
    for sample in training_data.samples() {
        let tally = committee.vote(sample.vector)?;
        confusion[sample.label].extend(tally.high_vote_set(t, r, threshold_factor));
    }
    FecIndex::from_confusion_sets(regroup_weights(committee), confusion, threshold_factor, t, r)
}

/// Outcome of a two-stage classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub label: usize,
    /// Plurality winner of the committee stage.
    pub committee_label: usize,
    /// Classes with high committee votes.
    pub high_votes: BTreeSet<usize>,
    /// Classes whose pool weights were scanned.
    pub allowed: BTreeSet<usize>,
    /// Pool weights compared in the final stage.
    pub comparisons: usize,
    /// Member weights compared in the committee stage.
    pub member_comparisons: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemB {
    committee: SystemA,
    fec: FecIndex,
}

impl SystemB {
    pub fn new(committee: SystemA, fec: FecIndex) -> Result<Self> {
        let members = committee.members();
        for e in fec.pool() {
            let ok = members
                .get(e.member)
                .and_then(|m| m.network.weight_classes().get(e.weight))
                .is_some_and(|&c| c == e.class);
            if !ok {
                return Err(Error::MalformedModel(format!(
                    "pool entry {e:?} does not match a committee weight"
                )));
            }
        }
        if fec.confusion_sets().len() != committee.config().classes() {
            return Err(Error::MalformedModel("confusion sets do not cover every class".into()));
        }
        Ok(SystemB { committee, fec })
    }

    pub fn build(committee: SystemA, training_data: &LabeledDataset, threshold_factor: f64) -> Result<Self> {
        let fec = build_fec(&committee, training_data, threshold_factor)?;
        Ok(SystemB { committee, fec })
    }

    pub fn committee(&self) -> &SystemA {
        &self.committee
    }

    pub fn fec(&self) -> &FecIndex {
        &self.fec
    }

    pub fn weight(&self, entry: &PoolEntry) -> &[f64] {
        &self.committee.members()[entry.member].network.weights()[entry.weight]
    }

    /// Nearest pool weight among `allowed` classes; ties to the lowest pool
    /// position. Returns `(class, comparisons)`.
    pub fn scan_pool(&self, x: &[f64], allowed: &BTreeSet<usize>) -> Result<(usize, usize)> {
        if x.len() != self.committee.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.committee.dim(),
                found: x.len(),
            });
        }
        let mut mask = vec![false; self.committee.config().classes()];
        for &c in allowed {
            if let Some(m) = mask.get_mut(c) {
                *m = true;
            }
        }
        let mut best: Option<(usize, f64)> = None;
        let mut comparisons = 0;
        for e in &self.fec.pool {
            if !mask[e.class] {
                continue;
            }
            comparisons += 1;
            let d = squared_distance(x, self.weight(e));
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((e.class, d));
            }
        }
        best.map(|(c, _)| (c, comparisons)).ok_or(Error::EmptyRestriction)
    }

    pub fn classify(&self, x: &[f64]) -> Result<Decision> {
        let tally = self.committee.vote(x)?;
        let high_votes = tally.high_vote_set(self.fec.t, self.fec.r, self.fec.threshold_factor);
        let allowed = self.fec.allowed_classes(&high_votes);
        let (label, comparisons) = self.scan_pool(x, &allowed)?;
        Ok(Decision {
            label,
            committee_label: tally.winner(),
            high_votes,
            allowed,
            comparisons,
            member_comparisons: self.committee.weights_after_prune(),
        })
    }

    pub fn comparison_stats(&self, data: &LabeledDataset) -> Result<ComparisonStats> {
        let samples = data.samples();
        let mut total = 0usize;
        for s in &samples {
            total += self.classify(s.vector)?.comparisons;
        }
        Ok(ComparisonStats {
            mean_comparisons: total as f64 / samples.len() as f64,
            pool_size: self.fec.pool.len(),
            member_comparisons: self.committee.weights_after_prune(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonStats {
    /// Mean final-stage comparisons per input.
    pub mean_comparisons: f64,
    /// Total weights in the pool.
    pub pool_size: usize,
    /// Comparisons made by the committee members for every input.
    pub member_comparisons: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn worked_confusion() -> Vec<BTreeSet<usize>> {
        vec![
            set(&[0]),
            set(&[0, 1, 4]),
            set(&[2, 6]),
            set(&[3, 4, 7]),
            set(&[0, 1, 4, 6]),
            set(&[5]),
            set(&[4, 6]),
            set(&[2, 3, 7]),
        ]
    }

    #[test]
    fn suspicion_of_worked_example() {
        let t = suspicion_sets(&worked_confusion());
        let expected = vec![
            set(&[0, 1, 4]),
            set(&[1, 4]),
            set(&[2, 7]),
            set(&[3, 7]),
            set(&[1, 3, 4, 6]),
            set(&[5]),
            set(&[2, 4, 6]),
            set(&[3, 7]),
        ];
        assert_eq!(t, expected);
    }

    #[test]
    fn union_for_three_high_votes() {
        let fec = FecIndex::from_confusion_sets(vec![], worked_confusion(), 0.75, 0.9, 2).unwrap();
        assert_eq!(fec.allowed_classes(&set(&[0, 1, 5])), set(&[0, 1, 4, 5]));
        assert_eq!(fec.allowed_classes(&set(&[5])), set(&[5]));
    }

    #[test]
    fn identity_and_total_confusion() {
        let id: Vec<_> = (0..5).map(|c| set(&[c])).collect();
        assert_eq!(suspicion_sets(&id), id);
        let all: Vec<_> = (0..5).map(|_| set(&[0, 1, 2, 3, 4])).collect();
        assert_eq!(suspicion_sets(&all), all);
    }

    #[test]
    fn confusion_always_contains_own_class() {
        let fec = FecIndex::from_confusion_sets(vec![], vec![set(&[1]), set(&[])], 0.75, 1.0, 1).unwrap();
        assert_eq!(fec.confusion_sets(), &[set(&[0, 1]), set(&[1])]);
        assert_eq!(fec.suspicion_sets(), &[set(&[0]), set(&[0, 1])]);
    }

    #[test]
    fn rejects_out_of_range_labels() {
        assert!(FecIndex::from_confusion_sets(vec![], vec![set(&[3])], 0.75, 1.0, 1).is_err());
    }
}
