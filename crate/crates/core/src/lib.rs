//! Transductive maximum-margin classification on precomputed feature vectors.
//!
//! The crate evaluates N-way K-shot episodes: a handful of labeled support
//! examples plus a pool of unlabeled query examples per episode. For every
//! class a smoothed one-vs-rest margin objective is minimized with L-BFGS in
//! the dual (kernel) parameterization. In transductive mode the query
//! examples contribute a smooth low-density term whose weight is annealed
//! upward stage by stage, warm-starting each stage from the previous
//! solution; raw decision values are turned into probabilities with Platt
//! scaling and queries take the argmax class.
//!
//! Entry points:
//! - [`features`]: dataset ingestion, the binary/CSV file formats, the
//!   per-episode centering + L2 normalization, synthetic blob generation.
//! - [`sampler`]: reproducible episode sampling.
//! - [`classifier`]: Platt-calibrated one-vs-rest fitting of single episodes.
//! - [`eval`]: episodic accuracy with confidence intervals, the 2-D boundary
//!   demo, and a finite-difference gradient self-check.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod features;
pub mod kernel;
pub mod lbfgs;
pub mod objective;
pub mod rng;
pub mod sampler;

pub use classifier::{
    classify_episode, classify_episode_mmc, EpisodePrediction, Mode, PlattCalibrator, TmmcConfig,
};
pub use error::{Error, Result};
pub use eval::{confidence_interval, evaluate, gradcheck, EvalReport};
pub use features::{
    gen_synthetic, load_dataset, transform_episode, write_dataset, Episode, FeatureDataset,
    FeatureVector, FileFormat,
};
pub use kernel::{gram_matrix, kernel_eval, KernelMatrix, KernelSpec};
pub use lbfgs::{minimize, LbfgsConfig, OptimResult};
pub use objective::{BinaryProblem, DualCoefficients};
pub use sampler::{sample_batch, sample_episode, ProtocolConfig};
