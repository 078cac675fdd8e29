//! Labeled feature vectors, image ingestion and preprocessing, train/test
//! splitting, and synthetic cluster data.

mod netpbm;
mod preprocess;
mod synth;
mod vectors;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

pub use netpbm::{decode_netpbm, encode_pgm, read_netpbm};
pub use preprocess::{downsample, equalize, preprocess, to_grayscale, vectorize, RawImage, DEFAULT_SIZE};
pub use synth::{synth_clusters, SynthSpec, SyntheticClusters};
pub use vectors::{load_vector_dir, parse_vector, read_vector, write_vector, write_vector_file, VECTOR_EXTENSION};

use crate::error::{Error, Result};
use crate::seed::rng_from;

/// One labeled exemplar borrowed from a dataset.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub label: usize,
    pub vector: &'a [f64],
}

/// Feature vectors grouped by class. Class `c` has label `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    classes: Vec<Vec<Vec<f64>>>,
}

impl LabeledDataset {
    pub fn new(classes: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let dim = classes
            .iter()
            .flatten()
            .map(Vec::len)
            .next()
            .ok_or_else(|| Error::InvalidDataset("dataset has no exemplars".into()))?;
        if dim == 0 {
            return Err(Error::InvalidDataset("vectors must have at least one component".into()));
        }
        for (c, exemplars) in classes.iter().enumerate() {
            if exemplars.is_empty() {
                return Err(Error::InvalidDataset(format!("class {c} has no exemplars")));
            }
            if let Some(v) = exemplars.iter().find(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
        }
        Ok(LabeledDataset { dim, classes })
    }

    /// Builds a dataset from `(label, vector)` pairs; labels must cover `0..M`.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Vec<f64>)>) -> Result<Self> {
        let mut classes: Vec<Vec<Vec<f64>>> = Vec::new();
        for (label, v) in pairs {
            if classes.len() <= label {
                classes.resize_with(label + 1, Vec::new);
            }
            classes[label].push(v);
        }
        Self::new(classes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, label: usize) -> &[Vec<f64>] {
        &self.classes[label]
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    /// `Some(n)` when every class has exactly `n` exemplars.
    pub fn exemplars_per_class(&self) -> Option<usize> {
        let n = self.classes[0].len();
        self.classes.iter().all(|c| c.len() == n).then_some(n)
    }

    pub fn len(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All exemplars, class by class.
    pub fn samples(&self) -> Vec<Sample<'_>> {
        self.samples_of(&(0..self.class_count()).collect::<Vec<_>>())
    }

    /// Exemplars of the listed classes, in the order the classes are listed.
    pub fn samples_of(&self, classes: &[usize]) -> Vec<Sample<'_>> {
        classes
            .iter()
            .flat_map(|&label| {
                self.classes[label].iter().map(move |v| Sample {
                    label,
                    vector: v.as_slice(),
                })
            })
            .collect()
    }

    /// Mean and range (max - min) over every component of every exemplar.
    pub fn intensity_stats(&self) -> IntensityStats {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in self.classes.iter().flatten().flatten() {
            sum += x;
            count += 1;
            lo = lo.min(x);
            hi = hi.max(x);
        }
        IntensityStats {
            mean: sum / count as f64,
            range: hi - lo,
        }
    }

    /// Splits every class into equal train and test halves.
    ///
    /// Seed 0 keeps the stored order: the first `n/2` exemplars train. Any
    /// other seed shuffles each class independently before cutting.
    pub fn split(&self, seed: u64) -> Result<SplitDataset> {
        let n = self.exemplars_per_class().ok_or_else(|| {
            let sizes = self.class_sizes();
            let found = sizes.iter().copied().find(|&s| s != sizes[0]).unwrap_or(sizes[0]);
            Error::InconsistentExemplarCount {
                class: sizes.iter().position(|&s| s != sizes[0]).unwrap_or(0),
                expected: sizes[0],
                found,
            }
        })?;
        if n % 2 != 0 {
            return Err(Error::OddExemplarCount(n));
        }
        let mut rng = rng_from(seed);
        let mut train = Vec::with_capacity(self.class_count());
        let mut test = Vec::with_capacity(self.class_count());
        for exemplars in &self.classes {
            let mut order: Vec<usize> = (0..n).collect();
            if seed != 0 {
                order.shuffle(&mut rng);
            }
            let (a, b) = order.split_at(n / 2);
            train.push(a.iter().map(|&i| exemplars[i].clone()).collect());
            test.push(b.iter().map(|&i| exemplars[i].clone()).collect());
        }
        Ok(SplitDataset {
            train: LabeledDataset {
                dim: self.dim,
                classes: train,
            },
            test: LabeledDataset {
                dim: self.dim,
                classes: test,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityStats {
    pub mean: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Images of one class directory.
#[derive(Debug, Clone)]
pub struct ImageClass {
    pub name: String,
    pub images: Vec<(PathBuf, RawImage)>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

/// Subdirectories of `root`, sorted by name; each one is a class.
pub(crate) fn class_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if dirs.is_empty() {
        return Err(Error::InvalidDataset(format!(
            "{} has no class subdirectories",
            root.display()
        )));
    }
    Ok(dirs)
}

/// Files of a class directory with one of `extensions`, sorted by name.
pub(crate) fn class_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let files: Vec<PathBuf> = sorted_entries(dir)?
        .into_iter()
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)))
        })
        .collect();
    if files.is_empty() {
        return Err(Error::EmptyClass(dir.to_path_buf()));
    }
    Ok(files)
}

pub(crate) fn check_uniform_counts(counts: &[usize]) -> Result<()> {
    if let Some((class, &found)) = counts.iter().enumerate().find(|(_, &c)| c != counts[0]) {
        return Err(Error::InconsistentExemplarCount {
            class,
            expected: counts[0],
            found,
        });
    }
    Ok(())
}

pub const IMAGE_EXTENSIONS: &[&str] = &["pgm", "ppm", "pnm"];

/// Reads `<root>/<class>/<image>` trees of PGM/PPM files. Classes are labeled
/// in lexicographic directory order, images kept in filename order.
pub fn load_image_dir(root: &Path) -> Result<Vec<ImageClass>> {
    let mut out = Vec::new();
    for dir in class_dirs(root)? {
        let mut images = Vec::new();
        for path in class_files(&dir, IMAGE_EXTENSIONS)? {
            let img = read_netpbm(&path)?;
            images.push((path, img));
        }
        out.push(ImageClass {
            name: dir.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            images,
        });
    }
    check_uniform_counts(&out.iter().map(|c| c.images.len()).collect::<Vec<_>>())?;
    Ok(out)
}

/// Loads an image tree and runs every image through [`preprocess`].
pub fn load_preprocessed(root: &Path, width: usize, height: usize) -> Result<LabeledDataset> {
    let classes = load_image_dir(root)?
        .into_iter()
        .map(|class| {
            class
                .images
                .iter()
                .map(|(_, img)| preprocess(img, width, height))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> LabeledDataset {
        LabeledDataset::new(
            (0..3)
                .map(|c| (0..n).map(|i| vec![c as f64, i as f64]).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_halves_each_class() {
        let s = toy(4).split(0).unwrap();
        assert_eq!(s.train.exemplars_per_class(), Some(2));
        assert_eq!(s.test.exemplars_per_class(), Some(2));
        assert_eq!(s.train.class(1), &[vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(s.test.class(1), &[vec![1.0, 2.0], vec![1.0, 3.0]]);
    }

    #[test]
    fn split_rejects_odd() {
        assert!(matches!(toy(3).split(0), Err(Error::OddExemplarCount(3))));
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let d = toy(10);
        let a = d.split(7).unwrap();
        assert_eq!(a, d.split(7).unwrap());
        for c in 0..3 {
            for v in a.train.class(c) {
                assert!(!a.test.class(c).contains(v));
            }
        }
    }

    #[test]
    fn rejects_ragged_dimensions() {
        let r = LabeledDataset::new(vec![vec![vec![1.0, 2.0]], vec![vec![1.0]]]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn samples_of_keeps_requested_order() {
        let d = toy(2);
        let labels: Vec<usize> = d.samples_of(&[2, 0]).iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![2, 2, 0, 0]);
    }
}
