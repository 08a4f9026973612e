//! Feature datasets, episodes, and the per-episode feature transformation.
//!
//! A [`FeatureDataset`] is the unit of ingestion: labeled D-dimensional
//! vectors plus a class-name table. An [`Episode`] is one N-way K-shot task
//! carved out of a dataset. [`transform_episode`] applies the evaluation-time
//! preprocessing: center every vector at the mean of support and query
//! combined, then L2-normalize.

mod io;
mod synth;

pub use io::{load_dataset, read_dataset, write_dataset, FileFormat};
pub use synth::gen_synthetic;

use crate::error::{Error, Result};

/// Norm threshold below which a centered vector is considered degenerate.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// One embedding vector; every component is finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "feature component {i} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Euclidean inner product. Both vectors must have the same length.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Labeled feature vectors with a class-name table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    dim: usize,
    classes: Vec<String>,
    records: Vec<(usize, FeatureVector)>,
    by_class: Vec<Vec<usize>>,
}

impl FeatureDataset {
    /// Validates the dataset invariants: every class index in range, every
    /// vector of length `dim`, and at least one record per declared class.
    pub fn new(
        dim: usize,
        classes: Vec<String>,
        records: Vec<(usize, FeatureVector)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dimension must be at least 1".into()));
        }
        if classes.is_empty() {
            return Err(Error::Argument("dataset declares no classes".into()));
        }
        let mut by_class = vec![Vec::new(); classes.len()];
        for (i, (class, vector)) in records.iter().enumerate() {
            if *class >= classes.len() {
                return Err(Error::Argument(format!(
                    "record {i} references class index {class}, but only {} classes are declared",
                    classes.len()
                )));
            }
            if vector.len() != dim {
                return Err(Error::Argument(format!(
                    "record {i} has dimension {}, expected {dim}",
                    vector.len()
                )));
            }
            by_class[*class].push(i);
        }
        if let Some(c) = by_class.iter().position(|ids| ids.is_empty()) {
            return Err(Error::Argument(format!(
                "class {:?} has no records",
                classes[c]
            )));
        }
        Ok(Self {
            dim,
            classes,
            records,
            by_class,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn records(&self) -> &[(usize, FeatureVector)] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record indices belonging to class `c`.
    pub fn class_records(&self, c: usize) -> &[usize] {
        &self.by_class[c]
    }
}

/// One N-way K-shot task. Support and query entries carry remapped labels in
/// `0..n_way`; `class_map` records the original dataset class index for each
/// remapped label.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    n_way: usize,
    k_shot: usize,
    q_query: usize,
    support: Vec<(usize, FeatureVector)>,
    query: Vec<(usize, FeatureVector)>,
    class_map: Vec<usize>,
}

impl Episode {
    pub fn new(
        n_way: usize,
        k_shot: usize,
        q_query: usize,
        support: Vec<(usize, FeatureVector)>,
        query: Vec<(usize, FeatureVector)>,
        class_map: Vec<usize>,
    ) -> Result<Self> {
        if n_way < 2 {
            return Err(Error::Argument("an episode needs at least 2 ways".into()));
        }
        if support.len() != n_way * k_shot {
            return Err(Error::Argument(format!(
                "support has {} entries, expected {}",
                support.len(),
                n_way * k_shot
            )));
        }
        if query.len() != n_way * q_query {
            return Err(Error::Argument(format!(
                "query has {} entries, expected {}",
                query.len(),
                n_way * q_query
            )));
        }
        if class_map.len() != n_way {
            return Err(Error::Argument("class_map length must equal n_way".into()));
        }
        let dim = match support.first() {
            Some((_, v)) => v.len(),
            None => return Err(Error::Argument("empty support set".into())),
        };
        let mut support_counts = vec![0usize; n_way];
        let mut query_counts = vec![0usize; n_way];
        for (label, v) in support.iter().chain(query.iter()) {
            if *label >= n_way {
                return Err(Error::Argument(format!("label {label} out of range")));
            }
            if v.len() != dim {
                return Err(Error::Argument("inconsistent feature dimensions".into()));
            }
        }
        for (label, _) in &support {
            support_counts[*label] += 1;
        }
        for (label, _) in &query {
            query_counts[*label] += 1;
        }
        if support_counts.iter().any(|&c| c != k_shot) {
            return Err(Error::Argument(
                "support must contain exactly k_shot entries per class".into(),
            ));
        }
        if query_counts.iter().any(|&c| c != q_query) {
            return Err(Error::Argument(
                "query must contain exactly q_query entries per class".into(),
            ));
        }
        Ok(Self {
            n_way,
            k_shot,
            q_query,
            support,
            query,
            class_map,
        })
    }

    pub fn n_way(&self) -> usize {
        self.n_way
    }

    pub fn k_shot(&self) -> usize {
        self.k_shot
    }

    pub fn q_query(&self) -> usize {
        self.q_query
    }

    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    pub fn n_query(&self) -> usize {
        self.query.len()
    }

    pub fn support(&self) -> &[(usize, FeatureVector)] {
        &self.support
    }

    pub fn query(&self) -> &[(usize, FeatureVector)] {
        &self.query
    }

    pub fn class_map(&self) -> &[usize] {
        &self.class_map
    }

    pub fn dim(&self) -> usize {
        self.support[0].1.len()
    }

    /// Support vectors followed by query vectors, the ordering every kernel
    /// matrix over this episode uses.
    pub fn stacked_vectors(&self) -> Vec<FeatureVector> {
        self.support
            .iter()
            .chain(self.query.iter())
            .map(|(_, v)| v.clone())
            .collect()
    }
}

/// Mean of all support and query vectors of an episode.
pub(crate) fn episode_mean(e: &Episode) -> Vec<f64> {
    let dim = e.dim();
    let mut mean = vec![0.0; dim];
    for (_, v) in e.support().iter().chain(e.query().iter()) {
        for (m, x) in mean.iter_mut().zip(v.as_slice()) {
            *m += x;
        }
    }
    let count = (e.n_support() + e.n_query()) as f64;
    for m in &mut mean {
        *m /= count;
    }
    mean
}

/// Subtracts `mean` from `values` and L2-normalizes; `None` when the centered
/// vector is shorter than [`DEGENERATE_NORM`].
pub(crate) fn center_and_normalize(values: &[f64], mean: &[f64]) -> Option<Vec<f64>> {
    let centered: Vec<f64> = values.iter().zip(mean).map(|(v, m)| v - m).collect();
    let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_NORM {
        return None;
    }
    Some(centered.into_iter().map(|v| v / norm).collect())
}

/// Centers every vector at the mean over support and query combined, then
/// divides each centered vector by its L2 norm. Labels and structure are
/// unchanged.
pub fn transform_episode(e: &Episode) -> Result<Episode> {
    let mean = episode_mean(e);
    let map_part = |part: &[(usize, FeatureVector)], context: &'static str| -> Result<Vec<_>> {
        part.iter()
            .enumerate()
            .map(|(index, (label, v))| {
                let centered = center_and_normalize(v.as_slice(), &mean).ok_or_else(|| {
                    let norm = v
                        .as_slice()
                        .iter()
                        .zip(&mean)
                        .map(|(x, m)| (x - m) * (x - m))
                        .sum::<f64>()
                        .sqrt();
                    Error::DegenerateFeature {
                        context,
                        index,
                        norm,
                    }
                })?;
                Ok((*label, FeatureVector::new(centered)?))
            })
            .collect()
    };
    let support = map_part(e.support(), "support")?;
    let query = map_part(e.query(), "query")?;
    Episode::new(
        e.n_way(),
        e.k_shot(),
        e.q_query(),
        support,
        query,
        e.class_map().to_vec(),
    )
}
