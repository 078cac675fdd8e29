//! Evaluation metrics and the retraining stability protocol.

use std::fmt;

use crate::committee::{train_committee, CommitteeParams};
use crate::config::EnsembleConfig;
use crate::dataset::{LabeledDataset, SplitDataset};
use crate::error::{Error, Result};
use crate::fec::SystemB;
use crate::seed::derive_seed;

/// Column order of the CSV report.
pub const CSV_HEADER: &str = "m,V,L,N,s,R,K,C01,C02,C03,C04,C05,C06,C07,pool";

/// One configuration's results.
///
/// * `c01` System A accuracy (%)
/// * `c02` mean member accuracy on its own bootstrap classes (%)
/// * `c03` mean member accuracy on all classes (%)
/// * `c04` / `c05` committee weights before / after pruning
/// * `c06` mean final-stage comparisons of System B
/// * `c07` System B accuracy (%)
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    pub bootstrap_size: usize,
    pub overlap: usize,
    pub layers: usize,
    pub bootstrap_count: usize,
    pub effective_shift: usize,
    pub classifiers_per_class: usize,
    pub classifier_count: usize,
    pub c01: f64,
    pub c02: f64,
    pub c03: f64,
    pub c04: usize,
    pub c05: usize,
    pub c06: f64,
    pub c07: f64,
    /// Pool size of the front-end classifier (equals `c05`).
    pub pool_size: usize,
}

impl ExperimentRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3},{:.3},{:.3},{},{},{:.3},{:.3},{}",
            self.bootstrap_size,
            self.overlap,
            self.layers,
            self.bootstrap_count,
            self.effective_shift,
            self.classifiers_per_class,
            self.classifier_count,
            self.c01,
            self.c02,
            self.c03,
            self.c04,
            self.c05,
            self.c06,
            self.c07,
            self.pool_size
        )
    }

    pub fn check_invariants(&self) -> Result<()> {
        let pct = |x: f64| (0.0..=100.0).contains(&x);
        if self.c05 > self.c04 {
            return Err(Error::InvalidParams(format!(
                "C05={} exceeds C04={}",
                self.c05, self.c04
            )));
        }
        if ![self.c01, self.c02, self.c03, self.c07].into_iter().all(pct) {
            return Err(Error::InvalidParams("accuracy outside [0, 100]".into()));
        }
        if self.classifier_count != self.layers * self.bootstrap_count {
            return Err(Error::InvalidParams("K != L N".into()));
        }
        Ok(())
    }
}

impl fmt::Display for ExperimentRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "m={} V={} L={} N={} s={} R={} K={}",
            self.bootstrap_size,
            self.overlap,
            self.layers,
            self.bootstrap_count,
            self.effective_shift,
            self.classifiers_per_class,
            self.classifier_count
        )?;
        writeln!(f, "C01 System A accuracy          {:8.3} %", self.c01)?;
        writeln!(f, "C02 member bootstrap accuracy  {:8.3} %", self.c02)?;
        writeln!(f, "C03 member whole-set accuracy  {:8.3} %", self.c03)?;
        writeln!(f, "C04 weights before pruning     {:8}", self.c04)?;
        writeln!(f, "C05 weights after pruning      {:8}", self.c05)?;
        writeln!(
            f,
            "C06 System B comparisons       {:8.3} (pool {})",
            self.c06, self.pool_size
        )?;
        write!(f, "C07 System B accuracy          {:8.3} %", self.c07)
    }
}

fn percent(correct: usize, total: usize) -> f64 {
    100.0 * correct as f64 / total as f64
}

/// Computes every report column on `data`.
pub fn evaluate(sys: &SystemB, data: &LabeledDataset) -> Result<ExperimentRow> {
    let committee = sys.committee();
    let config = committee.config();
    if data.class_count() != config.classes() {
        return Err(Error::InvalidDataset(format!(
            "evaluation data has {} classes, model has {}",
            data.class_count(),
            config.classes()
        )));
    }
    if data.dim() != committee.dim() {
        return Err(Error::DimensionMismatch {
            expected: committee.dim(),
            found: data.dim(),
        });
    }
    let samples = data.samples();
    let (mut a_correct, mut b_correct, mut comparisons) = (0, 0, 0);
    for s in &samples {
        let d = sys.classify(s.vector)?;
        a_correct += usize::from(d.committee_label == s.label);
        b_correct += usize::from(d.label == s.label);
        comparisons += d.comparisons;
    }

    let mut local = 0.0;
    let mut whole = 0.0;
    for m in committee.members() {
        let boot = committee.bootstrap_of(m);
        let (mut in_boot, mut in_boot_correct, mut correct) = (0, 0, 0);
        for s in &samples {
            let ok = m.network.classify(s.vector)? == s.label;
            correct += usize::from(ok);
            if boot.contains(s.label) {
                in_boot += 1;
                in_boot_correct += usize::from(ok);
            }
        }
        local += percent(in_boot_correct, in_boot);
        whole += percent(correct, samples.len());
    }
    let k = committee.members().len() as f64;

    Ok(ExperimentRow {
        bootstrap_size: config.bootstrap_size(),
        overlap: config.overlap(),
        layers: config.layers(),
        bootstrap_count: config.bootstrap_count(),
        effective_shift: config.effective_shift(),
        classifiers_per_class: config.classifiers_per_class(),
        classifier_count: config.classifier_count(),
        c01: percent(a_correct, samples.len()),
        c02: local / k,
        c03: whole / k,
        c04: committee.weights_before_prune(),
        c05: committee.weights_after_prune(),
        c06: comparisons as f64 / samples.len() as f64,
        c07: percent(b_correct, samples.len()),
        pool_size: sys.fec().pool().len(),
    })
}

/// Trains a committee on `train` and completes it with a front-end classifier.
pub fn train_system(
    config: &EnsembleConfig,
    train: &LabeledDataset,
    seed: u64,
    params: &CommitteeParams,
    threshold_factor: f64,
) -> Result<SystemB> {
    let committee = train_committee(config, train, seed, params)?;
    SystemB::build(committee, train, threshold_factor)
}

/// Sample standard deviation (divisor `len - 1`).
pub fn sample_stddev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityTrial {
    pub seed: u64,
    pub row: ExperimentRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub trials: Vec<StabilityTrial>,
}

impl StabilityReport {
    pub fn system_a(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.row.c01).collect()
    }

    pub fn system_b(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.row.c07).collect()
    }

    pub fn mean_a(&self) -> f64 {
        mean(&self.system_a())
    }

    pub fn mean_b(&self) -> f64 {
        mean(&self.system_b())
    }

    pub fn stddev_a(&self) -> f64 {
        sample_stddev(&self.system_a())
    }

    pub fn stddev_b(&self) -> f64 {
        sample_stddev(&self.system_b())
    }

    /// `stddev(A) / stddev(B)`; infinite when System B never varied but A did.
    pub fn stddev_ratio(&self) -> f64 {
        let (a, b) = (self.stddev_a(), self.stddev_b());
        if b == 0.0 {
            if a == 0.0 {
                f64::NAN
            } else {
                f64::INFINITY
            }
        } else {
            a / b
        }
    }

    pub const CSV_HEADER: &'static str = "trial,seed,system_a,system_b,member_whole_set";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (i, t) in self.trials.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.3},{:.3},{:.3}\n",
                i + 1,
                t.seed,
                t.row.c01,
                t.row.c07,
                t.row.c03
            ));
        }
        out
    }
}

impl fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trial   System A   System B")?;
        for (i, t) in self.trials.iter().enumerate() {
            writeln!(f, "{:>5} {:>10.3} {:>10.3}", i + 1, t.row.c01, t.row.c07)?;
        }
        writeln!(f, " mean {:>10.3} {:>10.3}", self.mean_a(), self.mean_b())?;
        writeln!(f, "  std {:>10.3} {:>10.3}", self.stddev_a(), self.stddev_b())?;
        write!(f, "stddev ratio A/B: {:.3}", self.stddev_ratio())
    }
}

/// Retrains the full system `trials` times with seeds derived from
/// `master_seed` and evaluates each on the test split.
pub fn run_stability(
    data: &SplitDataset,
    config: &EnsembleConfig,
    trials: usize,
    master_seed: u64,
    params: &CommitteeParams,
    threshold_factor: f64,
) -> Result<StabilityReport> {
    if trials < 2 {
        return Err(Error::InvalidParams(format!(
            "stability needs at least 2 trials to estimate a deviation, got {trials}"
        )));
    }
    let results: Vec<Result<StabilityTrial>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..trials)
            .map(|i| {
                scope.spawn(move || {
                    let seed = derive_seed(master_seed, &[i as u64]);
                    let sys = train_system(config, &data.train, seed, params, threshold_factor)?;
                    Ok(StabilityTrial {
                        seed,
                        row: evaluate(&sys, &data.test)?,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("stability trial panicked"))
            .collect()
    });
    Ok(StabilityReport {
        trials: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_stddev_matches_published_column() {
        // System B column of a ten-trial stability table; published std 0.236
        let b = [
            99.167, 99.167, 99.583, 99.583, 100.0, 99.583, 99.583, 99.583, 99.583, 99.583,
        ];
        assert!((sample_stddev(&b) - 0.236).abs() < 5e-4);
        let a = [91.25, 96.667, 96.667, 97.917, 95.0, 95.417, 95.833, 97.5, 93.75, 94.167];
        assert!((sample_stddev(&a) - 1.993).abs() < 5e-4);
    }
}
