//! Episodic evaluation, confidence intervals, the 2-D boundary demo, and the
//! finite-difference gradient self-check.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{classify_episode, classify_episode_mmc, TmmcConfig};
use crate::error::{Error, Result};
use crate::features::{
    center_and_normalize, episode_mean, transform_episode, Episode, FeatureDataset, FeatureVector,
};
use crate::kernel::{gram_matrix, KernelSpec};
use crate::objective::{BinaryProblem, DualCoefficients};
use crate::rng::SplitMix64;
use crate::sampler::{sample_episode, ProtocolConfig};

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub protocol: ProtocolConfig,
    pub config: TmmcConfig,
    /// Per-episode query accuracy in episode order (failed episodes, if any,
    /// are omitted and counted in `failed_episodes`).
    pub per_episode_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// `1.96 * sd / sqrt(T)` with the unbiased standard deviation; 0 when
    /// only one episode was run.
    pub ci95: f64,
    pub wall_time_seconds: f64,
    pub per_episode_seconds: f64,
    pub failed_episodes: usize,
}

/// Mean and normal-approximation 95% half-width over per-episode accuracies.
pub fn confidence_interval(acc: &[f64]) -> Result<(f64, f64)> {
    if acc.len() < 2 {
        return Err(Error::Argument(
            "confidence interval needs at least 2 values".into(),
        ));
    }
    let n = acc.len() as f64;
    let mean = acc.iter().sum::<f64>() / n;
    let var = acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0);
    let ci95 = 1.96 * var.sqrt() / n.sqrt();
    Ok((mean, ci95))
}

fn episode_accuracy(
    d: &FeatureDataset,
    proto: &ProtocolConfig,
    cfg: &TmmcConfig,
    index: usize,
) -> Result<f64> {
    let raw = sample_episode(d, proto, index)?;
    let episode = transform_episode(&raw)?;
    let prediction = classify_episode(&episode, cfg)?;
    let correct = prediction
        .labels
        .iter()
        .zip(episode.query())
        .filter(|(predicted, (actual, _))| *predicted == actual)
        .count();
    Ok(correct as f64 / episode.n_query() as f64)
}

/// Runs the full protocol: sample, transform, classify, and score every
/// episode, in parallel. Deterministic for a fixed seed regardless of thread
/// count. Aborts when more than 1% of episodes fail.
pub fn evaluate(d: &FeatureDataset, proto: &ProtocolConfig, cfg: &TmmcConfig) -> Result<EvalReport> {
    proto.validate_for(d)?;
    cfg.validate()?;
    let start = Instant::now();
    let outcomes: Vec<Result<f64>> = (0..proto.episodes)
        .into_par_iter()
        .map(|i| {
            episode_accuracy(d, proto, cfg, i).map_err(|e| Error::Episode {
                episode: i,
                source: Box::new(e),
            })
        })
        .collect();
    let wall_time_seconds = start.elapsed().as_secs_f64();

    let mut per_episode_accuracy = Vec::with_capacity(proto.episodes);
    let mut first_failure = None;
    let mut failed_episodes = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(acc) => per_episode_accuracy.push(acc),
            Err(e) => {
                failed_episodes += 1;
                first_failure.get_or_insert(e);
            }
        }
    }
    if failed_episodes * 100 > proto.episodes {
        return Err(Error::TooManyFailures {
            failed: failed_episodes,
            total: proto.episodes,
            first: Box::new(first_failure.expect("at least one failure recorded")),
        });
    }

    let (mean_accuracy, ci95) = if per_episode_accuracy.len() >= 2 {
        confidence_interval(&per_episode_accuracy)?
    } else {
        (per_episode_accuracy.first().copied().unwrap_or(0.0), 0.0)
    };
    Ok(EvalReport {
        protocol: proto.clone(),
        config: cfg.clone(),
        per_episode_accuracy,
        mean_accuracy,
        ci95,
        wall_time_seconds,
        per_episode_seconds: wall_time_seconds / proto.episodes as f64,
        failed_episodes,
    })
}

// ---------------------------------------------------------------------------
// Gradient self-check

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub trials: usize,
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub worst_trial: usize,
    pub worst_coordinate: usize,
    pub pass: bool,
}

impl std::fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} trials, max relative error {:.3e} at trial {} coordinate {} (tolerance {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.trials,
            self.max_rel_error,
            self.worst_trial,
            self.worst_coordinate,
            self.tolerance
        )
    }
}

/// Compares the analytic gradient against central finite differences on
/// random small problems covering every annealing stage. Pass iff the worst
/// per-coordinate relative error (floored at magnitude 1) stays below 1e-5.
pub fn gradcheck(seed: u64, trials: usize) -> Result<GradcheckReport> {
    gradcheck_with(seed, trials, |p, alpha| p.objective_gradient(alpha))
}

/// Same as [`gradcheck`] with a custom gradient, the hook negative-control
/// tests use to prove the check can fail.
pub fn gradcheck_with<F>(seed: u64, trials: usize, gradient: F) -> Result<GradcheckReport>
where
    F: Fn(&BinaryProblem<'_>, &DualCoefficients) -> Result<Array1<f64>>,
{
    if trials < 1 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    const STAGES: [f64; 5] = [0.0, 1e-5, 1e-3, 0.1, 1.0];
    let tolerance = 1e-5;
    let mut max_rel_error = 0.0f64;
    let mut worst_trial = 0;
    let mut worst_coordinate = 0;
    for trial in 0..trials {
        let mut rng = SplitMix64::stream(seed, trial as u64);
        let nk = rng.random_range(2..=8);
        let nq = rng.random_range(1..=12);
        let dim = rng.random_range(1..=5);
        let lambda2 = STAGES[trial % STAGES.len()];
        let xs: Vec<FeatureVector> = (0..nk + nq)
            .map(|_| {
                FeatureVector::new(
                    (0..dim)
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect(),
                )
                .expect("normal draws are finite")
            })
            .collect();
        let kernel = gram_matrix(KernelSpec::Linear, &xs)?;
        let mut y: Vec<f64> = (0..nk)
            .map(|_| if rng.random_range(0..2) == 0 { -1.0 } else { 1.0 })
            .collect();
        y[0] = 1.0;
        y[nk - 1] = -1.0;
        let w: Vec<f64> = (0..nk).map(|_| rng.random_range(0.5..2.0)).collect();
        let problem = BinaryProblem::new(&kernel, nk, y, w, 0.04, lambda2, 20.0, 2.0)?;
        let alpha = DualCoefficients::new(Array1::from_iter(
            (0..nk + nq).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)),
        ))?;
        let analytic = gradient(&problem, &alpha)?;
        let numeric = problem.finite_diff_gradient(&alpha, 1e-6)?;
        for j in 0..analytic.len() {
            let scale = analytic[j].abs().max(numeric[j].abs()).max(1.0);
            let rel = (analytic[j] - numeric[j]).abs() / scale;
            if rel > max_rel_error {
                max_rel_error = rel;
                worst_trial = trial;
                worst_coordinate = j;
            }
        }
    }
    Ok(GradcheckReport {
        trials,
        tolerance,
        max_rel_error,
        worst_trial,
        worst_coordinate,
        pass: max_rel_error < tolerance,
    })
}

// ---------------------------------------------------------------------------
// 2-D boundary demo

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoScenario {
    /// Two query fans whose ideal separator is misaligned with the
    /// support-only separator; unlabeled geometry must rotate the boundary.
    Figure1,
    /// Mirror-symmetric supports: the support-only separator is already
    /// aligned and transduction should leave it in place.
    Control,
}

impl DemoScenario {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "figure1" => Ok(Self::Figure1),
            "control" => Ok(Self::Control),
            other => Err(Error::Argument(format!(
                "unknown scenario {other:?}; expected figure1 or control"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Demo2dResult {
    /// The raw (untransformed) episode, for plotting in data coordinates.
    pub episode: Episode,
    pub grid_xs: Vec<f64>,
    pub grid_ys: Vec<f64>,
    /// Class-0 decision values on the grid, `[i, j]` at `(xs[i], ys[j])`.
    pub inductive_grid: Array2<f64>,
    pub transductive_grid: Array2<f64>,
    /// Boundary normal directions in degrees mod 180, extracted from grid
    /// zero crossings.
    pub inductive_normal_deg: f64,
    pub transductive_normal_deg: f64,
    pub rotation_deg: f64,
    pub inductive_errors: usize,
    pub transductive_errors: usize,
}

fn unit_at(deg: f64, radius: f64) -> FeatureVector {
    let rad = deg.to_radians();
    FeatureVector::new(vec![radius * rad.cos(), radius * rad.sin()]).expect("finite")
}

/// The demo episode: 2-way 1-shot with two opposing query fans. Support
/// angles are the only difference between the scenarios.
fn demo_episode(scenario: DemoScenario) -> Episode {
    let q_per_class = 12usize;
    let fan_half = 65.0;
    let radius = 1.5;
    let (support0_deg, support1_deg) = match scenario {
        DemoScenario::Figure1 => (55.0, 185.0),
        DemoScenario::Control => (55.0, 125.0),
    };
    let mut query = Vec::new();
    for c in 0..2usize {
        let center = 180.0 * c as f64;
        for i in 0..q_per_class {
            let frac = i as f64 / (q_per_class - 1) as f64;
            let deg = center - fan_half + 2.0 * fan_half * frac;
            query.push((c, unit_at(deg, radius)));
        }
    }
    let support = vec![
        (0usize, unit_at(support0_deg, radius)),
        (1usize, unit_at(support1_deg, radius)),
    ];
    Episode::new(2, 1, q_per_class, support, query, vec![0, 1]).expect("valid by construction")
}

/// Class-0 decision values over the grid: each grid point goes through the
/// episode's centering and normalization, then is scored with the linear
/// expansion of the fitted coefficients.
fn decision_grid(
    alpha: &DualCoefficients,
    transformed: &Episode,
    mean: &[f64],
    xs: &[f64],
    ys: &[f64],
) -> Array2<f64> {
    // linear kernel: f(x) = <sum_j alpha_j x_j, x>
    let points = transformed.stacked_vectors();
    let mut weight = [0.0f64; 2];
    for (a, p) in alpha.as_array().iter().zip(&points) {
        weight[0] += a * p.as_slice()[0];
        weight[1] += a * p.as_slice()[1];
    }
    Array2::from_shape_fn((xs.len(), ys.len()), |(i, j)| {
        match center_and_normalize(&[xs[i], ys[j]], mean) {
            Some(v) => weight[0] * v[0] + weight[1] * v[1],
            // a grid point sitting exactly on the episode mean has no
            // direction; score it as boundary
            None => 0.0,
        }
    })
}

/// Boundary normal direction in degrees mod 180, from the principal axis of
/// the sign-change points of `f` on the grid.
fn boundary_normal_deg(xs: &[f64], ys: &[f64], f: &Array2<f64>) -> Result<f64> {
    let mut crossings: Vec<(f64, f64)> = Vec::new();
    for (j, &y) in ys.iter().enumerate() {
        for i in 0..xs.len() - 1 {
            let (a, b) = (f[[i, j]], f[[i + 1, j]]);
            if a == 0.0 {
                crossings.push((xs[i], y));
            } else if a * b < 0.0 {
                let t = a / (a - b);
                crossings.push((xs[i] + t * (xs[i + 1] - xs[i]), y));
            }
        }
    }
    for (i, &x) in xs.iter().enumerate() {
        for j in 0..ys.len() - 1 {
            let (a, b) = (f[[i, j]], f[[i, j + 1]]);
            if a * b < 0.0 {
                let t = a / (a - b);
                crossings.push((x, ys[j] + t * (ys[j + 1] - ys[j])));
            }
        }
    }
    if crossings.len() < 8 {
        return Err(Error::Degenerate(
            "decision function has no zero level set on the grid".into(),
        ));
    }
    let n = crossings.len() as f64;
    let (mx, my) = crossings
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (mx / n, my / n);
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for (x, y) in &crossings {
        cxx += (x - mx) * (x - mx);
        cxy += (x - mx) * (y - my);
        cyy += (y - my) * (y - my);
    }
    // principal eigenvector of the 2x2 covariance = boundary direction
    let half_trace = 0.5 * (cxx + cyy);
    let det_term = (0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy).sqrt();
    let top = half_trace + det_term;
    let (dx, dy) = if cxy.abs() > 1e-12 {
        (cxy, top - cxx)
    } else if cxx >= cyy {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let direction_deg = dy.atan2(dx).to_degrees();
    Ok((direction_deg + 90.0).rem_euclid(180.0))
}

/// Smaller angle between two directions that are only defined mod 180.
pub(crate) fn angle_difference_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

fn count_errors(labels: &[usize], episode: &Episode) -> usize {
    labels
        .iter()
        .zip(episode.query())
        .filter(|(predicted, (actual, _))| *predicted != actual)
        .count()
}

/// Fits the demo episode in both modes and computes the boundary grids,
/// normal directions, and query misclassification counts.
pub fn run_demo2d(scenario: DemoScenario) -> Result<Demo2dResult> {
    let cfg = TmmcConfig::default();
    let raw = demo_episode(scenario);
    let mean = episode_mean(&raw);
    let transformed = transform_episode(&raw)?;

    let inductive = classify_episode_mmc(&transformed, &cfg)?;
    let transductive = classify_episode(&transformed, &cfg)?;

    let grid_n = 81usize;
    let span = 2.5;
    let axis: Vec<f64> = (0..grid_n)
        .map(|i| -span + 2.0 * span * i as f64 / (grid_n - 1) as f64)
        .collect();
    let inductive_grid = decision_grid(
        &inductive.per_class_alpha[0],
        &transformed,
        &mean,
        &axis,
        &axis,
    );
    let transductive_grid = decision_grid(
        &transductive.per_class_alpha[0],
        &transformed,
        &mean,
        &axis,
        &axis,
    );
    let inductive_normal_deg = boundary_normal_deg(&axis, &axis, &inductive_grid)?;
    let transductive_normal_deg = boundary_normal_deg(&axis, &axis, &transductive_grid)?;

    Ok(Demo2dResult {
        rotation_deg: angle_difference_deg(inductive_normal_deg, transductive_normal_deg),
        inductive_errors: count_errors(&inductive.labels, &raw),
        transductive_errors: count_errors(&transductive.labels, &raw),
        episode: raw,
        grid_xs: axis.clone(),
        grid_ys: axis,
        inductive_grid,
        transductive_grid,
        inductive_normal_deg,
        transductive_normal_deg,
    })
}

/// Runs [`run_demo2d`] and writes `{prefix}_points.csv` (support and query
/// points) and `{prefix}_grid.csv` (decision values for both modes).
pub fn demo2d(scenario: DemoScenario, out_prefix: &Path) -> Result<Demo2dResult> {
    let result = run_demo2d(scenario)?;
    let write = |path: PathBuf, content: String| -> Result<()> {
        std::fs::write(&path, content).map_err(|source| Error::Io { path, source })
    };

    let mut points = String::from("role,class,x,y\n");
    for (label, v) in result.episode.support() {
        points.push_str(&format!(
            "support,{label},{},{}\n",
            v.as_slice()[0],
            v.as_slice()[1]
        ));
    }
    for (label, v) in result.episode.query() {
        points.push_str(&format!(
            "query,{label},{},{}\n",
            v.as_slice()[0],
            v.as_slice()[1]
        ));
    }
    write(
        PathBuf::from(format!("{}_points.csv", out_prefix.display())),
        points,
    )?;

    let mut grid = String::from("x,y,f_inductive,f_transductive\n");
    for (i, x) in result.grid_xs.iter().enumerate() {
        for (j, y) in result.grid_ys.iter().enumerate() {
            grid.push_str(&format!(
                "{x},{y},{},{}\n",
                result.inductive_grid[[i, j]],
                result.transductive_grid[[i, j]]
            ));
        }
    }
    write(
        PathBuf::from(format!("{}_grid.csv", out_prefix.display())),
        grid,
    )?;
    Ok(result)
}
