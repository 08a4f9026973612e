//! Synthetic Gaussian-blob datasets.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{FeatureDataset, FeatureVector};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Generates `n_classes` isotropic unit-variance Gaussian blobs of
/// `per_class` points each, with class means at mutual distance at least
/// `separation`. Deterministic for a fixed seed: means come from stream 0 of
/// the seed, points of class `c` from stream `c + 1`.
///
/// Mean placement: with `separation == 0` all means coincide at the origin;
/// with `n_classes <= dim` the means sit on scaled coordinate axes
/// (pairwise distance exactly `separation`); in one dimension they form the
/// lattice `c * separation`; otherwise random unit directions are rescaled so
/// the smallest pairwise distance equals `separation`.
pub fn gen_synthetic(
    n_classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<FeatureDataset> {
    if dim < 1 {
        return Err(Error::Argument("dim must be at least 1".into()));
    }
    if n_classes < 1 || per_class < 1 {
        return Err(Error::Argument(
            "n_classes and per_class must be at least 1".into(),
        ));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(Error::Argument(
            "separation must be finite and non-negative".into(),
        ));
    }

    let means = class_means(n_classes, dim, separation, seed)?;
    let mut records = Vec::with_capacity(n_classes * per_class);
    for (c, mean) in means.iter().enumerate() {
        let mut rng = SplitMix64::stream(seed, c as u64 + 1);
        for _ in 0..per_class {
            let values: Vec<f64> = mean
                .iter()
                .map(|m| m + rng.sample::<f64, _>(StandardNormal))
                .collect();
            records.push((c, FeatureVector::new(values)?));
        }
    }
    let classes = (0..n_classes).map(|c| format!("class_{c}")).collect();
    FeatureDataset::new(dim, classes, records)
}

fn class_means(n_classes: usize, dim: usize, separation: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if separation == 0.0 {
        return Ok(vec![vec![0.0; dim]; n_classes]);
    }
    if n_classes <= dim {
        let scale = separation / 2.0f64.sqrt();
        return Ok((0..n_classes)
            .map(|c| {
                let mut m = vec![0.0; dim];
                m[c] = scale;
                m
            })
            .collect());
    }
    if dim == 1 {
        return Ok((0..n_classes)
            .map(|c| vec![c as f64 * separation])
            .collect());
    }

    let mut rng = SplitMix64::stream(seed, 0);
    for _ in 0..16 {
        let dirs: Vec<Vec<f64>> = (0..n_classes)
            .map(|_| {
                let v: Vec<f64> = (0..dim)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect();
        let mut min_dist = f64::INFINITY;
        for i in 0..n_classes {
            for j in (i + 1)..n_classes {
                let d = dirs[i]
                    .iter()
                    .zip(&dirs[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                min_dist = min_dist.min(d);
            }
        }
        if min_dist > 1e-9 && min_dist.is_finite() {
            let scale = separation / min_dist;
            return Ok(dirs
                .into_iter()
                .map(|v| v.into_iter().map(|x| x * scale).collect())
                .collect());
        }
    }
    Err(Error::Argument(
        "failed to place distinct class means; increase dim".into(),
    ))
}
