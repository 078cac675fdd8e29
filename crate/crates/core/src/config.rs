//! Fair class bootstraps.
//!
//! `M` classes are covered by `N` bootstraps of `m` contiguous (circular) class
//! labels each. Consecutive bootstraps start `h = m - V` labels apart. Only the
//! effective shift `s = gcd(M, h)` matters for the family that is produced, and
//! a configuration is legal only when `s` divides `m`, which is what makes every
//! class appear in the same number of bootstraps.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// The `(M, m, V, L)` parameter block together with the quantities derived
/// from it. Only constructible through [`EnsembleConfig::derive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnsembleConfig {
    classes: usize,
    bootstrap_size: usize,
    overlap: usize,
    layers: usize,
    shift: usize,
    effective_shift: usize,
}

impl EnsembleConfig {
    pub fn derive(classes: usize, bootstrap_size: usize, overlap: usize, layers: usize) -> Result<Self> {
        let (big_m, m, v) = (classes, bootstrap_size, overlap);
        if !(1 < m && m < big_m) {
            return Err(Error::IllegalConfig(format!(
                "bootstrap size m={m} must satisfy 1 < m < M={big_m}"
            )));
        }
        if v >= m {
            return Err(Error::IllegalConfig(format!(
                "overlap V={v} must satisfy 0 <= V < m={m}"
            )));
        }
        if layers == 0 {
            return Err(Error::IllegalConfig("layer count L must be at least 1".into()));
        }
        let h = m - v;
        let s = gcd(big_m, h);
        if m % s != 0 {
            return Err(Error::IllegalConfig(format!(
                "effective shift s=gcd({big_m}, {h})={s} does not divide m={m}; \
                 classes would be trained an unequal number of times"
            )));
        }
        debug_assert!(s <= h);
        Ok(EnsembleConfig {
            classes,
            bootstrap_size,
            overlap,
            layers,
            shift: h,
            effective_shift: s,
        })
    }

    /// `M`
    pub fn classes(&self) -> usize {
        self.classes
    }

    /// `m`
    pub fn bootstrap_size(&self) -> usize {
        self.bootstrap_size
    }

    /// `V`, as requested. The overlap actually realized is `m - s`.
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// `L`
    pub fn layers(&self) -> usize {
        self.layers
    }

    /// `h = m - V`
    pub fn shift(&self) -> usize {
        self.shift
    }

    /// `s = gcd(M, h)`
    pub fn effective_shift(&self) -> usize {
        self.effective_shift
    }

    /// `N = M / s`
    pub fn bootstrap_count(&self) -> usize {
        self.classes / self.effective_shift
    }

    /// `K = L N`
    pub fn classifier_count(&self) -> usize {
        self.layers * self.bootstrap_count()
    }

    /// `R = L m / s`, the number of classifiers trained on any one class.
    pub fn classifiers_per_class(&self) -> usize {
        self.layers * self.bootstrap_size / self.effective_shift
    }

    pub fn bootstraps(&self) -> Vec<Bootstrap> {
        generate_bootstraps(self)
    }
}

impl fmt::Display for EnsembleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} m={} V={} L={} h={} s={} N={} K={} R={}",
            self.classes,
            self.bootstrap_size,
            self.overlap,
            self.layers,
            self.shift,
            self.effective_shift,
            self.bootstrap_count(),
            self.classifier_count(),
            self.classifiers_per_class()
        )
    }
}

/// An ordered run of `m` distinct class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bootstrap {
    /// 1-based.
    pub index: usize,
    pub classes: Vec<usize>,
}

impl Bootstrap {
    pub fn contains(&self, class: usize) -> bool {
        self.classes.contains(&class)
    }
}

impl AsRef<[usize]> for Bootstrap {
    fn as_ref(&self) -> &[usize] {
        &self.classes
    }
}

/// Circular run of `len` labels starting at `start`.
fn circular_run(start: usize, len: usize, modulus: usize) -> Vec<usize> {
    (0..len).map(|t| (start + t) % modulus).collect()
}

pub fn generate_bootstraps(config: &EnsembleConfig) -> Vec<Bootstrap> {
    let big_m = config.classes();
    let h = config.shift();
    (1..=config.bootstrap_count())
        .map(|k| Bootstrap {
            index: k,
            classes: circular_run(((k - 1) * h) % big_m, config.bootstrap_size(), big_m),
        })
        .collect()
}

/// The four fairness rules a bootstrap family must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    /// Every class appears in at least one bootstrap.
    Coverage,
    /// No label repeats inside a bootstrap.
    DistinctLabels,
    /// Every class appears in the same number of bootstraps.
    EqualCoverage,
    /// No two bootstraps hold the same set of classes.
    DistinctBootstraps,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Coverage => "rule 1 (every class covered)",
            Rule::DistinctLabels => "rule 2 (distinct labels per bootstrap)",
            Rule::EqualCoverage => "rule 3 (equal coverage per class)",
            Rule::DistinctBootstraps => "rule 4 (no identical bootstraps)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Classes in `0..M` not present in any bootstrap.
    pub uncovered: Vec<usize>,
    /// `(bootstrap position, label)` for every label repeated within a bootstrap.
    pub repeated: Vec<(usize, usize)>,
    /// `(bootstrap position, label)` for labels outside `0..M`.
    pub out_of_range: Vec<(usize, usize)>,
    /// Number of bootstraps containing each class.
    pub coverage: Vec<usize>,
    /// Pairs of bootstrap positions holding the same class set.
    pub identical: Vec<(usize, usize)>,
    /// Measured overlap: the largest intersection between any two bootstraps.
    pub overlap: usize,
}

impl ValidationReport {
    pub fn passes(&self, rule: Rule) -> bool {
        match rule {
            Rule::Coverage => self.uncovered.is_empty(),
            Rule::DistinctLabels => self.repeated.is_empty() && self.out_of_range.is_empty(),
            Rule::EqualCoverage => self.coverage.windows(2).all(|w| w[0] == w[1]),
            Rule::DistinctBootstraps => self.identical.is_empty(),
        }
    }

    pub fn failed_rules(&self) -> Vec<Rule> {
        [
            Rule::Coverage,
            Rule::DistinctLabels,
            Rule::EqualCoverage,
            Rule::DistinctBootstraps,
        ]
        .into_iter()
        .filter(|&r| !self.passes(r))
        .collect()
    }

    pub fn is_valid(&self) -> bool {
        self.failed_rules().is_empty()
    }
}

pub fn validate_bootstraps<B: AsRef<[usize]>>(bootstraps: &[B], classes: usize) -> ValidationReport {
    let mut coverage = vec![0usize; classes];
    let mut repeated = Vec::new();
    let mut out_of_range = Vec::new();
    let sets: Vec<BTreeSet<usize>> = bootstraps
        .iter()
        .enumerate()
        .map(|(pos, b)| {
            let mut seen = BTreeSet::new();
            for &label in b.as_ref() {
                if label >= classes {
                    out_of_range.push((pos, label));
                } else if !seen.insert(label) {
                    repeated.push((pos, label));
                }
            }
            for &label in &seen {
                coverage[label] += 1;
            }
            seen
        })
        .collect();

    let mut identical = Vec::new();
    let mut overlap = 0;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i] == sets[j] {
                identical.push((i, j));
            }
            overlap = overlap.max(sets[i].intersection(&sets[j]).count());
        }
    }

    ValidationReport {
        uncovered: (0..classes).filter(|&c| coverage[c] == 0).collect(),
        repeated,
        out_of_range,
        coverage,
        identical,
        overlap,
    }
}

/// One distinct legal bootstrap family for a given class count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConfigShape {
    pub bootstrap_size: usize,
    /// Canonical overlap `m - s`.
    pub overlap: usize,
    pub effective_shift: usize,
    pub bootstrap_count: usize,
}

impl ConfigShape {
    /// `R / L`
    pub fn classifiers_per_class_per_layer(&self) -> usize {
        self.bootstrap_size / self.effective_shift
    }
}

/// Every distinct legal configuration for `classes` classes, ordered by
/// effective shift and then by bootstrap size.
pub fn enumerate_configs(classes: usize) -> Result<Vec<ConfigShape>> {
    if classes < 3 {
        return Err(Error::IllegalConfig(format!(
            "need at least 3 classes to pick 1 < m < M, got M={classes}"
        )));
    }
    let mut shapes = BTreeSet::new();
    for m in 2..classes {
        for v in 0..m {
            if let Ok(cfg) = EnsembleConfig::derive(classes, m, v, 1) {
                let s = cfg.effective_shift();
                shapes.insert((s, m));
            }
        }
    }
    Ok(shapes
        .into_iter()
        .map(|(s, m)| ConfigShape {
            bootstrap_size: m,
            overlap: m - s,
            effective_shift: s,
            bootstrap_count: classes / s,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(bs: &[Bootstrap]) -> Vec<BTreeSet<usize>> {
        bs.iter().map(|b| b.classes.iter().copied().collect()).collect()
    }

    #[test]
    fn derive_table_rows() {
        let c = EnsembleConfig::derive(60, 30, 25, 1).unwrap();
        assert_eq!(
            (
                c.shift(),
                c.effective_shift(),
                c.bootstrap_count(),
                c.classifiers_per_class(),
                c.classifier_count()
            ),
            (5, 5, 12, 6, 12)
        );
        let c = EnsembleConfig::derive(60, 30, 20, 2).unwrap();
        assert_eq!(
            (
                c.shift(),
                c.effective_shift(),
                c.bootstrap_count(),
                c.classifiers_per_class(),
                c.classifier_count()
            ),
            (10, 10, 6, 6, 12)
        );
        let c = EnsembleConfig::derive(6, 3, 2, 1).unwrap();
        assert_eq!(
            (
                c.shift(),
                c.effective_shift(),
                c.bootstrap_count(),
                c.classifier_count(),
                c.classifiers_per_class()
            ),
            (1, 1, 6, 6, 3)
        );
    }

    #[test]
    fn derive_rejects_unfair_shift() {
        // h=2, s=2, 3 % 2 != 0
        assert!(matches!(
            EnsembleConfig::derive(6, 3, 1, 1),
            Err(Error::IllegalConfig(_))
        ));
    }

    #[test]
    fn derive_rejects_bounds() {
        assert!(EnsembleConfig::derive(6, 1, 0, 1).is_err());
        assert!(EnsembleConfig::derive(6, 6, 0, 1).is_err());
        assert!(EnsembleConfig::derive(6, 3, 3, 1).is_err());
        assert!(EnsembleConfig::derive(6, 3, 0, 0).is_err());
    }

    #[test]
    fn bootstraps_m6_three_classes_no_overlap() {
        let c = EnsembleConfig::derive(6, 3, 0, 1).unwrap();
        let bs = c.bootstraps();
        assert_eq!(bs[0].classes, vec![0, 1, 2]);
        assert_eq!(bs[1].classes, vec![3, 4, 5]);
        assert_eq!(bs.len(), 2);
    }

    #[test]
    fn bootstraps_m6_pairs() {
        let c = EnsembleConfig::derive(6, 2, 1, 1).unwrap();
        let got: Vec<_> = c.bootstraps().into_iter().map(|b| b.classes).collect();
        assert_eq!(
            got,
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4], vec![4, 5], vec![5, 0]]
        );
    }

    #[test]
    fn bootstraps_eight_classes_shift_three() {
        // V = m - h = 6 - 3
        let c = EnsembleConfig::derive(8, 6, 3, 1).unwrap();
        let expected: Vec<BTreeSet<usize>> = [
            vec![0, 1, 2, 3, 4, 5],
            vec![3, 4, 5, 6, 7, 0],
            vec![6, 7, 0, 1, 2, 3],
            vec![1, 2, 3, 4, 5, 6],
            vec![4, 5, 6, 7, 0, 1],
            vec![7, 0, 1, 2, 3, 4],
            vec![2, 3, 4, 5, 6, 7],
            vec![5, 6, 7, 0, 1, 2],
        ]
        .into_iter()
        .map(|v| v.into_iter().collect())
        .collect();
        assert_eq!(sets(&c.bootstraps()), expected);
    }

    #[test]
    fn validate_reports_uncovered_class() {
        let r = validate_bootstraps(
            &[vec![0, 1, 2, 3], vec![1, 2, 3, 4], vec![2, 3, 4, 5], vec![3, 4, 5, 6]],
            8,
        );
        assert_eq!(r.uncovered, vec![7]);
        assert!(!r.passes(Rule::Coverage));
    }

    #[test]
    fn validate_reports_identical_sets() {
        let r = validate_bootstraps(&[vec![0, 1, 2, 3], vec![3, 2, 1, 0]], 4);
        assert_eq!(r.identical, vec![(0, 1)]);
        assert!(!r.passes(Rule::DistinctBootstraps));
    }

    #[test]
    fn validate_accepts_disjoint_pairs() {
        let r = validate_bootstraps(&[vec![0, 1], vec![2, 3], vec![4, 5]], 6);
        assert!(r.is_valid());
        assert_eq!(r.overlap, 0);
    }

    #[test]
    fn validate_flags_out_of_range() {
        let r = validate_bootstraps(&[vec![0, 9]], 2);
        assert_eq!(r.out_of_range, vec![(0, 9)]);
        assert!(!r.is_valid());
    }

    #[test]
    fn enumerate_small() {
        let pairs = |m| -> Vec<(usize, usize)> {
            enumerate_configs(m)
                .unwrap()
                .into_iter()
                .map(|s| (s.bootstrap_size, s.overlap))
                .collect()
        };
        assert_eq!(pairs(3), vec![(2, 1)]);
        assert_eq!(pairs(4), vec![(2, 1), (3, 2), (2, 0)]);
        assert_eq!(pairs(6), vec![(2, 1), (3, 2), (4, 3), (5, 4), (2, 0), (4, 2), (3, 0)]);
        assert!(enumerate_configs(2).is_err());
    }
}
