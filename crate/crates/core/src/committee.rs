//! The plurality-voting committee: `L` gated LVQ networks per bootstrap.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::config::{generate_bootstraps, Bootstrap, EnsembleConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::lvq::{gate_classifier, prune_threshold, GateDecision, LvqNetwork, RecognitionStats, TrainParams};
use crate::seed::{derive_seed, rng_from};

/// Ranges the per-member hyperparameters are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommitteeParams {
    pub learning_rate: (f64, f64),
    pub epochs: (usize, usize),
    /// Weight budget is drawn from `[lo * m, hi * m]`.
    pub weights_per_class: (usize, usize),
    pub max_retries_per_slot: usize,
}

impl Default for CommitteeParams {
    fn default() -> Self {
        CommitteeParams {
            learning_rate: (0.005, 0.05),
            epochs: (20, 100),
            weights_per_class: (2, 5),
            max_retries_per_slot: 25,
        }
    }
}

impl CommitteeParams {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.learning_rate;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidParams(format!(
                "learning rate range ({lo}, {hi}) not inside (0, 1)"
            )));
        }
        if self.epochs.0 == 0 || self.epochs.0 > self.epochs.1 {
            return Err(Error::InvalidParams(format!("bad epoch range {:?}", self.epochs)));
        }
        if self.weights_per_class.0 == 0 || self.weights_per_class.0 > self.weights_per_class.1 {
            return Err(Error::InvalidParams(format!(
                "bad weights-per-class range {:?}",
                self.weights_per_class
            )));
        }
        if self.max_retries_per_slot == 0 {
            return Err(Error::InvalidParams("max retries per slot must be at least 1".into()));
        }
        Ok(())
    }

    /// Seeded draw of one member's training parameters.
    pub fn draw(&self, bootstrap_size: usize, seed: u64) -> TrainParams {
        let mut rng = rng_from(seed);
        TrainParams {
            learning_rate: rng.random_range(self.learning_rate.0..=self.learning_rate.1),
            epochs: rng.random_range(self.epochs.0..=self.epochs.1),
            weight_budget: rng
                .random_range(self.weights_per_class.0 * bootstrap_size..=self.weights_per_class.1 * bootstrap_size),
            seed: derive_seed(seed, &[u64::MAX]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    /// 1-based bootstrap index.
    pub bootstrap: usize,
    /// 0-based layer within the bootstrap.
    pub layer: usize,
    pub params: TrainParams,
    /// The pruned network.
    pub network: LvqNetwork,
    pub weights_before_prune: usize,
    /// Recognition on the member's own bootstrap training data, measured after pruning.
    pub stats: RecognitionStats,
    /// Training attempts spent on this slot, including the accepted one.
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemA {
    config: EnsembleConfig,
    bootstraps: Vec<Bootstrap>,
    members: Vec<Member>,
    exemplars_per_class: usize,
}

impl SystemA {
    /// Assembles a committee from already-trained members, ordered bootstrap
    /// by bootstrap, layer by layer.
    pub fn from_members(config: EnsembleConfig, members: Vec<Member>, exemplars_per_class: usize) -> Result<Self> {
        let bootstraps = generate_bootstraps(&config);
        if members.len() != config.classifier_count() {
            return Err(Error::IllegalConfig(format!(
                "committee needs K={} members, got {}",
                config.classifier_count(),
                members.len()
            )));
        }
        for (i, m) in members.iter().enumerate() {
            let (b, l) = (i / config.layers() + 1, i % config.layers());
            if m.bootstrap != b || m.layer != l {
                return Err(Error::IllegalConfig(format!(
                    "member {i} is (bootstrap {}, layer {}), expected ({b}, {l})",
                    m.bootstrap, m.layer
                )));
            }
        }
        if exemplars_per_class == 0 {
            return Err(Error::InvalidParams("exemplars per class must be positive".into()));
        }
        Ok(SystemA {
            config,
            bootstraps,
            members,
            exemplars_per_class,
        })
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn bootstraps(&self) -> &[Bootstrap] {
        &self.bootstraps
    }

    pub fn bootstrap_of(&self, member: &Member) -> &Bootstrap {
        &self.bootstraps[member.bootstrap - 1]
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    /// `n`, training exemplars per class.
    pub fn exemplars_per_class(&self) -> usize {
        self.exemplars_per_class
    }

    pub fn dim(&self) -> usize {
        self.members[0].network.dim()
    }

    /// `t`: mean over members of `r / (n m)`, each member's recognition rate
    /// on its own bootstrap's training data.
    pub fn mean_member_rate(&self) -> f64 {
        let denom = (self.exemplars_per_class * self.config.bootstrap_size()) as f64;
        self.members.iter().map(|m| m.stats.correct as f64 / denom).sum::<f64>() / self.members.len() as f64
    }

    pub fn weights_before_prune(&self) -> usize {
        self.members.iter().map(|m| m.weights_before_prune).sum()
    }

    pub fn weights_after_prune(&self) -> usize {
        self.members.iter().map(|m| m.network.len()).sum()
    }

    pub fn vote(&self, x: &[f64]) -> Result<VoteTally> {
        let mut tally = VoteTally::new(self.config.classes());
        for m in &self.members {
            tally.add(m.network.classify(x)?);
        }
        Ok(tally)
    }

    pub fn plurality_classify(&self, x: &[f64]) -> Result<usize> {
        Ok(self.vote(x)?.winner())
    }

    /// Total weight comparisons made by the members for one input.
    pub fn member_comparisons(&self) -> usize {
        self.weights_after_prune()
    }
}

/// Trains a full committee.
///
/// Every (bootstrap, layer) slot draws its hyperparameters from a seed derived
/// from `(master_seed, bootstrap, layer, attempt)`, trains, prunes, and is
/// gated. A rejected slot retries with the next attempt's seed, up to
/// `params.max_retries_per_slot` attempts.
pub fn train_committee(
    config: &EnsembleConfig,
    data: &LabeledDataset,
    master_seed: u64,
    params: &CommitteeParams,
) -> Result<SystemA> {
    params.validate()?;
    if data.class_count() != config.classes() {
        return Err(Error::IllegalConfig(format!(
            "configuration is for M={} classes, dataset has {}",
            config.classes(),
            data.class_count()
        )));
    }
    let n = data.exemplars_per_class().ok_or_else(|| {
        Error::InvalidDataset("committee training needs the same exemplar count in every class".into())
    })?;
    let stats = data.intensity_stats();
    let bootstraps = generate_bootstraps(config);

    let mut members = Vec::with_capacity(config.classifier_count());
    for bootstrap in &bootstraps {
        let samples = data.samples_of(&bootstrap.classes);
        let frequencies: Vec<usize> = bootstrap.classes.iter().map(|&c| data.class(c).len()).collect();
        let threshold = prune_threshold(samples.iter().map(|s| s.vector))?;
        for layer in 0..config.layers() {
            let mut accepted = None;
            for attempt in 0..params.max_retries_per_slot {
                let slot_seed = derive_seed(master_seed, &[bootstrap.index as u64, layer as u64, attempt as u64]);
                let train_params = params.draw(config.bootstrap_size(), slot_seed);
                let mut net = LvqNetwork::init(&bootstrap.classes, &frequencies, data.dim(), &train_params, stats)?;
                net.train(&samples, &train_params)?;
                let before = net.len();
                let pruned = net.pruned(threshold);
                if let GateDecision::Accept(s) =
                    gate_classifier(&pruned, &bootstrap.classes, &samples, n, config.classes())?
                {
                    accepted = Some(Member {
                        bootstrap: bootstrap.index,
                        layer,
                        params: train_params,
                        network: pruned,
                        weights_before_prune: before,
                        stats: s,
                        attempts: attempt + 1,
                    });
                    break;
                }
            }
            members.push(accepted.ok_or(Error::SlotExhausted {
                bootstrap: bootstrap.index,
                layer,
                attempts: params.max_retries_per_slot,
            })?);
        }
    }
    SystemA::from_members(*config, members, n)
}

/// Votes per class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    counts: Vec<usize>,
}

impl VoteTally {
    pub fn new(classes: usize) -> Self {
        VoteTally {
            counts: vec![0; classes],
        }
    }

    pub fn from_votes(classes: usize, votes: &[usize]) -> Self {
        let mut t = Self::new(classes);
        for &v in votes {
            t.add(v);
        }
        t
    }

    pub fn add(&mut self, class: usize) {
        self.counts[class] += 1;
    }

    pub fn count(&self, class: usize) -> usize {
        self.counts.get(class).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `(class, votes)` for classes with at least one vote, ascending by class.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().copied().enumerate().filter(|&(_, n)| n > 0)
    }

    /// Most-voted class; ties go to the lowest label.
    pub fn winner(&self) -> usize {
        let mut best = 0;
        for (c, &n) in self.counts.iter().enumerate() {
            if n > self.counts[best] {
                best = c;
            }
        }
        best
    }

    /// Classes with more than `factor * t * r` votes. Never empty: when no class
    /// clears the threshold the plurality winner is returned alone.
    pub fn high_vote_set(&self, t: f64, r: usize, factor: f64) -> BTreeSet<usize> {
        let threshold = factor * t * r as f64;
        let mut set: BTreeSet<usize> = self
            .nonzero()
            .filter(|&(_, n)| n as f64 > threshold)
            .map(|(c, _)| c)
            .collect();
        if set.is_empty() {
            set.insert(self.winner());
        }
        set
    }
}

impl fmt::Display for VoteTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (c, n)) in self.nonzero().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}: {n}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn tally_of_twelve_votes() {
        let t = VoteTally::from_votes(6, &[0, 1, 2, 3, 4, 0, 0, 2, 3, 4, 5, 5]);
        let got: Vec<_> = t.nonzero().collect();
        assert_eq!(got, vec![(0, 3), (1, 1), (2, 2), (3, 2), (4, 2), (5, 2)]);
        assert_eq!(t.total(), 12);
        assert_eq!(t.winner(), 0);
    }

    #[test]
    fn tie_goes_to_lowest_label() {
        let t = VoteTally::from_votes(3, &[2, 1, 2, 1]);
        assert_eq!(t.winner(), 1);
        let t = VoteTally::from_votes(4, &[3, 3, 3]);
        assert_eq!(t.winner(), 3);
    }

    #[test]
    fn high_votes_sixteen_classes() {
        let mut votes = Vec::new();
        for (c, n) in [
            (0, 7),
            (1, 6),
            (2, 8),
            (11, 8),
            (4, 5),
            (6, 5),
            (8, 5),
            (13, 5),
            (14, 5),
            (15, 5),
            (3, 1),
            (5, 1),
            (7, 1),
            (9, 1),
            (12, 1),
        ] {
            votes.extend(std::iter::repeat_n(c, n));
        }
        let t = VoteTally::from_votes(16, &votes);
        assert_eq!(t.total(), 64);
        assert_eq!(t.high_vote_set(0.66, 8, 0.75), set(&[0, 1, 2, 4, 6, 8, 11, 13, 14, 15]));
    }

    #[test]
    fn high_votes_unanimous_and_fallback() {
        let t = VoteTally::from_votes(5, &[3; 12]);
        assert_eq!(t.high_vote_set(0.9, 4, 0.75), set(&[3]));
        let t = VoteTally::from_votes(5, &[1, 2, 2, 4]);
        assert_eq!(t.high_vote_set(1.0, 8, 1.0), set(&[2]));
    }

    #[test]
    fn draw_stays_in_ranges() {
        let p = CommitteeParams::default();
        for s in 0..200 {
            let d = p.draw(4, s);
            assert!((0.005..=0.05).contains(&d.learning_rate));
            assert!((20..=100).contains(&d.epochs));
            assert!((8..=20).contains(&d.weight_budget));
        }
    }
}
