//! Reproducible N-way K-shot episode sampling.
//!
//! Each episode draws its own generator from `(seed, episode_index)`, so any
//! episode of a batch can be materialized independently (and concurrently)
//! without shared RNG state.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{Episode, FeatureDataset};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolConfig {
    pub n_way: usize,
    pub k_shot: usize,
    pub q_query: usize,
    pub episodes: usize,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(n_way: usize, k_shot: usize, q_query: usize, episodes: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            n_way,
            k_shot,
            q_query,
            episodes,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_way < 2 {
            return Err(Error::Argument("n_way must be at least 2".into()));
        }
        if self.k_shot < 1 || self.q_query < 1 || self.episodes < 1 {
            return Err(Error::Argument(
                "k_shot, q_query and episodes must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Checks that `d` can supply episodes under this protocol, naming the
    /// first deficient class otherwise.
    pub fn validate_for(&self, d: &FeatureDataset) -> Result<()> {
        self.validate()?;
        if d.n_classes() < self.n_way {
            return Err(Error::Protocol(format!(
                "dataset has {} classes, protocol needs {}",
                d.n_classes(),
                self.n_way
            )));
        }
        let needed = self.k_shot + self.q_query;
        for c in 0..d.n_classes() {
            let available = d.class_records(c).len();
            if available < needed {
                return Err(Error::Protocol(format!(
                    "class {:?} has {available} records, protocol needs {needed}",
                    d.classes()[c]
                )));
            }
        }
        Ok(())
    }
}

/// Uniformly samples `k` distinct indices from `0..n` by partial
/// Fisher-Yates.
fn sample_without_replacement(rng: &mut SplitMix64, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Draws episode `episode_index` of the batch: N distinct classes uniformly
/// without replacement, then K+Q distinct records per class, the first K to
/// support and the next Q to query. A pure function of
/// `(dataset, cfg, episode_index)`.
pub fn sample_episode(
    d: &FeatureDataset,
    cfg: &ProtocolConfig,
    episode_index: usize,
) -> Result<Episode> {
    cfg.validate_for(d)?;
    let mut rng = SplitMix64::stream(cfg.seed, episode_index as u64);
    let class_ids = sample_without_replacement(&mut rng, d.n_classes(), cfg.n_way);
    let mut support = Vec::with_capacity(cfg.n_way * cfg.k_shot);
    let mut query = Vec::with_capacity(cfg.n_way * cfg.q_query);
    for (label, &orig) in class_ids.iter().enumerate() {
        let members = d.class_records(orig);
        let picks = sample_without_replacement(&mut rng, members.len(), cfg.k_shot + cfg.q_query);
        for (i, &p) in picks.iter().enumerate() {
            let record = &d.records()[members[p]];
            if i < cfg.k_shot {
                support.push((label, record.1.clone()));
            } else {
                query.push((label, record.1.clone()));
            }
        }
    }
    Episode::new(
        cfg.n_way,
        cfg.k_shot,
        cfg.q_query,
        support,
        query,
        class_ids,
    )
}

/// Lazily enumerates episodes `0..cfg.episodes`; equivalent to calling
/// [`sample_episode`] for each index in turn.
pub fn sample_batch<'a>(
    d: &'a FeatureDataset,
    cfg: &'a ProtocolConfig,
) -> impl Iterator<Item = Result<Episode>> + 'a {
    (0..cfg.episodes).map(move |i| sample_episode(d, cfg, i))
}
