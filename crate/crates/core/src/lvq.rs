//! LVQ prototype networks.
//!
//! A network is a list of weight vectors, each labeled with a class. Inputs
//! are assigned the class of the nearest weight (squared Euclidean distance,
//! ties to the lowest weight index). Training moves the winning weight toward
//! a same-class input and away from a different-class one.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{IntensityStats, Sample};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

/// Half-width of the initialization band, as a fraction of the intensity range.
pub const INIT_BAND: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    /// Initial learning rate, strictly inside (0, 1).
    pub learning_rate: f64,
    pub epochs: usize,
    /// Total number of weights, split across classes by frequency.
    pub weight_budget: usize,
    pub seed: u64,
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(Error::InvalidParams(format!(
                "learning rate {} outside (0, 1)",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParams("epochs must be at least 1".into()));
        }
        Ok(())
    }

    /// Learning rate used during epoch `epoch` (0-based): linear decay,
    /// `a0 * (1 - epoch / epochs)`.
    pub fn rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * (1.0 - epoch as f64 / self.epochs as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LvqNetwork {
    dim: usize,
    weights: Vec<Vec<f64>>,
    weight_classes: Vec<usize>,
    trained_epochs: usize,
}

/// Result of a nearest-weight scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Nearest {
    pub index: usize,
    pub class: usize,
    /// Number of weight distances evaluated.
    pub comparisons: usize,
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One LVQ step on a single weight: `w += a (x - w)` when `attract`,
/// `w -= a (x - w)` otherwise.
pub fn update_weight(w: &mut [f64], x: &[f64], rate: f64, attract: bool) {
    let step = if attract { rate } else { -rate };
    for (wi, &xi) in w.iter_mut().zip(x) {
        *wi += step * (xi - *wi);
    }
}

/// Splits `budget` weights over classes in proportion to `frequencies`, with
/// at least one weight per class: each class first gets one weight, then the
/// remaining `budget - k` are apportioned by largest remainder (ties to the
/// lower class position). A budget below the class count is raised to it.
pub fn allocate_weights(frequencies: &[usize], budget: usize) -> Vec<usize> {
    let k = frequencies.len();
    let mut alloc = vec![1usize; k];
    let spare = budget.saturating_sub(k);
    let total: usize = frequencies.iter().sum();
    if spare == 0 || total == 0 {
        return alloc;
    }
    // quota_i = spare * f_i / total, kept as exact integer numerators over `total`
    let mut remainders: Vec<(usize, usize)> = Vec::with_capacity(k);
    let mut given = 0;
    for (i, &f) in frequencies.iter().enumerate() {
        let num = spare * f;
        alloc[i] += num / total;
        given += num / total;
        remainders.push((num % total, i));
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(spare - given) {
        alloc[i] += 1;
    }
    alloc
}

impl LvqNetwork {
    pub fn from_weights(weights: Vec<Vec<f64>>, weight_classes: Vec<usize>) -> Result<Self> {
        if weights.len() != weight_classes.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: weight_classes.len(),
            });
        }
        let dim = weights
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidParams("network needs at least one weight".into()))?;
        if let Some(w) = weights.iter().find(|w| w.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: w.len(),
            });
        }
        Ok(LvqNetwork {
            dim,
            weights,
            weight_classes,
            trained_epochs: 0,
        })
    }

    /// Weights for `classes` (with their exemplar counts), every component
    /// drawn uniformly from `mean ± INIT_BAND * range`.
    pub fn init(
        classes: &[usize],
        class_frequencies: &[usize],
        dim: usize,
        params: &TrainParams,
        stats: IntensityStats,
    ) -> Result<Self> {
        if classes.is_empty() || classes.len() != class_frequencies.len() {
            return Err(Error::InvalidParams(
                "need one frequency per class and at least one class".into(),
            ));
        }
        if class_frequencies.contains(&0) {
            return Err(Error::InvalidParams("every class needs at least one exemplar".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        let alloc = allocate_weights(class_frequencies, params.weight_budget);
        let band = INIT_BAND * stats.range;
        let mut rng = rng_from(derive_seed(params.seed, &[0]));
        let mut weights = Vec::new();
        let mut weight_classes = Vec::new();
        for (&class, &count) in classes.iter().zip(&alloc) {
            for _ in 0..count {
                let w = (0..dim)
                    .map(|_| {
                        if band > 0.0 {
                            stats.mean + rng.random_range(-band..=band)
                        } else {
                            stats.mean
                        }
                    })
                    .collect();
                weights.push(w);
                weight_classes.push(class);
            }
        }
        Ok(LvqNetwork {
            dim,
            weights,
            weight_classes,
            trained_epochs: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight_classes(&self) -> &[usize] {
        &self.weight_classes
    }

    pub fn trained_epochs(&self) -> usize {
        self.trained_epochs
    }

    pub(crate) fn set_trained_epochs(&mut self, epochs: usize) {
        self.trained_epochs = epochs;
    }

    /// Distinct classes represented by at least one weight.
    pub fn classes(&self) -> BTreeSet<usize> {
        self.weight_classes.iter().copied().collect()
    }

    pub fn weights_of(&self, class: usize) -> usize {
        self.weight_classes.iter().filter(|&&c| c == class).count()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn nearest_where(&self, x: &[f64], allowed: impl Fn(usize) -> bool) -> Option<Nearest> {
        let mut best: Option<(usize, f64)> = None;
        let mut comparisons = 0;
        for (j, (w, &c)) in self.weights.iter().zip(&self.weight_classes).enumerate() {
            if !allowed(c) {
                continue;
            }
            comparisons += 1;
            let d = squared_distance(x, w);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        best.map(|(index, _)| Nearest {
            index,
            class: self.weight_classes[index],
            comparisons,
        })
    }

    pub fn nearest(&self, x: &[f64]) -> Result<Nearest> {
        self.check_dim(x)?;
        self.nearest_where(x, |_| true).ok_or(Error::EmptyRestriction)
    }

    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        self.nearest(x).map(|n| n.class)
    }

    /// Nearest weight among those whose class is in `allowed`.
    pub fn classify_restricted(&self, x: &[f64], allowed: &BTreeSet<usize>) -> Result<Nearest> {
        self.check_dim(x)?;
        self.nearest_where(x, |c| allowed.contains(&c))
            .ok_or(Error::EmptyRestriction)
    }

    /// Runs `params.epochs` passes over `samples`, each in a freshly shuffled
    /// order, decaying the learning rate linearly after every epoch.
    pub fn train(&mut self, samples: &[Sample<'_>], params: &TrainParams) -> Result<()> {
        params.validate()?;
        if let Some(s) = samples.iter().find(|s| s.vector.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: s.vector.len(),
            });
        }
        if self.weights.is_empty() {
            return Err(Error::EmptyRestriction);
        }
        let mut rng = rng_from(derive_seed(params.seed, &[1]));
        let mut order: Vec<usize> = (0..samples.len()).collect();
        for epoch in 0..params.epochs {
            let rate = params.rate_at(epoch);
            order.shuffle(&mut rng);
            for &i in &order {
                let Sample { label, vector } = samples[i];
                let j = self
                    .nearest_where(vector, |_| true)
                    .expect("network is non-empty")
                    .index;
                let attract = self.weight_classes[j] == label;
                update_weight(&mut self.weights[j], vector, rate, attract);
            }
            self.trained_epochs += 1;
        }
        Ok(())
    }

    /// Copy keeping only weights with `keep(index)`, in original order.
    fn retain(&self, keep: impl Fn(usize) -> bool) -> LvqNetwork {
        let (weights, weight_classes) = self
            .weights
            .iter()
            .zip(&self.weight_classes)
            .enumerate()
            .filter(|(j, _)| keep(*j))
            .map(|(_, (w, &c))| (w.clone(), c))
            .unzip();
        LvqNetwork {
            dim: self.dim,
            weights,
            weight_classes,
            trained_epochs: self.trained_epochs,
        }
    }

    /// Drops every weight whose component standard deviation is below `threshold`.
    pub fn pruned(&self, threshold: f64) -> LvqNetwork {
        let stds: Vec<f64> = self.weights.iter().map(|w| population_stddev(w)).collect();
        self.retain(|j| stds[j] >= threshold)
    }
}

fn population_stddev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Standard deviation of a vector's components (population form, divisor = length).
pub fn vector_stddev(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::DegenerateVector(x.len()));
    }
    Ok(population_stddev(x))
}

/// Half the smallest component standard deviation over `images`.
pub fn prune_threshold<'a>(images: impl IntoIterator<Item = &'a [f64]>) -> Result<f64> {
    let mut min = f64::INFINITY;
    let mut any = false;
    for img in images {
        min = min.min(vector_stddev(img)?);
        any = true;
    }
    if !any {
        return Err(Error::InvalidDataset(
            "pruning needs at least one training image".into(),
        ));
    }
    Ok(min / 2.0)
}

/// Removes weights that look untrained: those whose intensity spread is below
/// half the smallest spread among the training images.
pub fn prune<'a>(net: &LvqNetwork, images: impl IntoIterator<Item = &'a [f64]>) -> Result<LvqNetwork> {
    Ok(net.pruned(prune_threshold(images)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecognitionStats {
    /// `r`: correctly classified samples.
    pub correct: usize,
    pub evaluated: usize,
    /// `E = r / (n M)`.
    pub rate: f64,
    /// `r > n`, i.e. better than guessing among `M` classes.
    pub beats_random: bool,
}

/// Counts correct classifications over `samples`. `n` is the number of
/// exemplars per class and `total_classes` the full class count `M`.
pub fn recognition_stats(
    net: &LvqNetwork,
    samples: &[Sample<'_>],
    n: usize,
    total_classes: usize,
) -> Result<RecognitionStats> {
    let mut correct = 0;
    for s in samples {
        if net.classify(s.vector)? == s.label {
            correct += 1;
        }
    }
    Ok(RecognitionStats {
        correct,
        evaluated: samples.len(),
        rate: correct as f64 / (n * total_classes) as f64,
        beats_random: correct > n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    MissingClassWeight(usize),
    BelowRandomGuessing { correct: usize, needed_more_than: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateDecision {
    Accept(RecognitionStats),
    Reject(RejectReason),
}

/// Admission test for a pruned committee member: every one of its `classes`
/// keeps a weight, and it gets more than `n` of its own training samples right.
pub fn gate_classifier(
    net: &LvqNetwork,
    classes: &[usize],
    samples: &[Sample<'_>],
    n: usize,
    total_classes: usize,
) -> Result<GateDecision> {
    if let Some(&missing) = classes.iter().find(|&&c| net.weights_of(c) == 0) {
        return Ok(GateDecision::Reject(RejectReason::MissingClassWeight(missing)));
    }
    let stats = recognition_stats(net, samples, n, total_classes)?;
    Ok(if stats.beats_random {
        GateDecision::Accept(stats)
    } else {
        GateDecision::Reject(RejectReason::BelowRandomGuessing {
            correct: stats.correct,
            needed_more_than: n,
        })
    })
}
