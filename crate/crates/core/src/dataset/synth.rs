//! Gaussian cluster datasets for runs that have no images on disk.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

const CENTER: f64 = 127.5;
const MAX_DRAWS: usize = 1000;
/// Expected centroid distance in units of the requested separation.
const SPREAD: f64 = 2.5;

/// Parameters of a synthetic cluster dataset, written
/// `synth:M=<int>,n=<int>,dim=<int>,sep=<real>,noise=<real>,seed=<int>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub exemplars: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
}

impl FromStr for SynthSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidDataset(format!("synthetic spec {s:?}: {msg}"));
        let body = s
            .strip_prefix("synth:")
            .ok_or_else(|| bad("must start with `synth:`".into()))?;
        let (mut classes, mut exemplars, mut dim, mut sep, mut noise, mut seed) = (None, None, None, None, None, None);
        for part in body.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {part:?}")))?;
            let value = value.trim();
            let int = || {
                value
                    .parse::<usize>()
                    .map_err(|_| bad(format!("{key} is not an integer")))
            };
            let real = || value.parse::<f64>().map_err(|_| bad(format!("{key} is not a number")));
            match key.trim() {
                "M" => classes = Some(int()?),
                "n" => exemplars = Some(int()?),
                "dim" => dim = Some(int()?),
                "sep" => sep = Some(real()?),
                "noise" => noise = Some(real()?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed is not an integer".into()))?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| bad(format!("missing {k}"));
        Ok(SynthSpec {
            classes: classes.ok_or_else(|| missing("M"))?,
            exemplars: exemplars.ok_or_else(|| missing("n"))?,
            dim: dim.ok_or_else(|| missing("dim"))?,
            separation: sep.ok_or_else(|| missing("sep"))?,
            noise: noise.ok_or_else(|| missing("noise"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        })
    }
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "synth:M={},n={},dim={},sep={},noise={},seed={}",
            self.classes, self.exemplars, self.dim, self.separation, self.noise, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClusters {
    pub centroids: Vec<Vec<f64>>,
    pub dataset: LabeledDataset,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Draws `M` centroids with pairwise distance at least `separation`, then `n`
/// exemplars per class as centroid plus i.i.d. Gaussian noise, clipped to
/// `[0, 255]`.
///
/// Centroids are drawn uniformly from a cube around mid-gray whose half-width
/// is scaled with the dimension so that the expected pairwise distance is
/// `2.5 * separation`; draws closer than `separation` to an earlier centroid
/// are rejected, and the cube grows if rejection sampling stalls.
pub fn synth_clusters(spec: &SynthSpec) -> Result<SyntheticClusters> {
    let SynthSpec {
        classes,
        exemplars,
        dim,
        separation,
        noise,
        seed,
    } = *spec;
    if classes < 2 || exemplars < 2 || dim < 2 {
        return Err(Error::InvalidDataset(format!(
            "synthetic data needs M >= 2, n >= 2, dim >= 2 (got M={classes}, n={exemplars}, dim={dim})"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite() && noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidDataset(
            "separation and noise must be finite and nonnegative".into(),
        ));
    }

    let mut rng = rng_from(derive_seed(seed, &[0]));
    // E|a - b|^2 = dim * 2w^2 / 3 for a, b uniform on [-w, w]^dim
    let mut half_width = (SPREAD * separation * (6.0 / dim as f64).sqrt() / 2.0).max(0.5);
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(classes);
    while centroids.len() < classes {
        let mut placed = false;
        for _ in 0..MAX_DRAWS {
            let c: Vec<f64> = (0..dim)
                .map(|_| CENTER + rng.random_range(-half_width..=half_width))
                .collect();
            if centroids.iter().all(|o| distance(o, &c) >= separation) {
                centroids.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            half_width *= 1.25;
        }
    }

    let mut rng = rng_from(derive_seed(seed, &[1]));
    let gauss = Normal::new(0.0, noise).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let classes_data = centroids
        .iter()
        .map(|c| {
            (0..exemplars)
                .map(|_| {
                    c.iter()
                        .map(|&mu| {
                            let x = if noise > 0.0 { mu + gauss.sample(&mut rng) } else { mu };
                            x.clamp(0.0, 255.0)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(SyntheticClusters {
        centroids,
        dataset: LabeledDataset::new(classes_data)?,
    })
}
