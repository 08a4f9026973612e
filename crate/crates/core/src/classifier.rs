//! One-vs-rest episode classification with annealed transduction and Platt
//! calibration.
//!
//! For each class the support labels become a signed vector with balanced
//! class weights, and the smoothed margin objective is minimized over the
//! annealing schedule of query-loss weights, warm-starting every stage from
//! the previous solution. The first stage (weight 0) is solved on the
//! support coefficients alone: the optimal decision function at that stage
//! lives in the span of the support points, so query coefficients stay
//! exactly zero until unlabeled data actually enters the objective. Decision
//! values on the support set calibrate a two-parameter logistic per class;
//! queries take the class with the highest calibrated probability.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::Episode;
use crate::kernel::{eval_f, gram_matrix, KernelMatrix, KernelSpec};
use crate::lbfgs::{minimize, LbfgsConfig, OptimResult};
use crate::objective::{BinaryProblem, DualCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Query features shape the decision boundary through the annealing
    /// schedule.
    Transductive,
    /// Query features are ignored while fitting (schedule forced to {0}).
    Inductive,
}

#[derive(Debug, Clone, Serialize)]
pub struct TmmcConfig {
    pub lambda1: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Query-loss weights, starting at 0 and strictly increasing.
    pub lambda2_schedule: Vec<f64>,
    pub kernel: KernelSpec,
    pub optimizer: LbfgsConfig,
    pub mode: Mode,
}

impl Default for TmmcConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.04,
            gamma1: 20.0,
            gamma2: 2.0,
            lambda2_schedule: vec![0.0, 1e-5, 1e-3, 0.1, 1.0],
            kernel: KernelSpec::Linear,
            optimizer: LbfgsConfig::default(),
            mode: Mode::Transductive,
        }
    }
}

impl TmmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1.is_finite() && self.lambda1 > 0.0) {
            return Err(Error::Argument("lambda1 must be positive".into()));
        }
        if !(self.gamma1.is_finite() && self.gamma1 > 0.0)
            || !(self.gamma2.is_finite() && self.gamma2 > 0.0)
        {
            return Err(Error::Argument("gamma1 and gamma2 must be positive".into()));
        }
        match self.lambda2_schedule.first() {
            None => return Err(Error::Argument("lambda2 schedule is empty".into())),
            Some(&v) if v != 0.0 => {
                return Err(Error::Argument("lambda2 schedule must start at 0".into()))
            }
            _ => {}
        }
        if self
            .lambda2_schedule
            .windows(2)
            .any(|p| !(p[1].is_finite() && p[1] > p[0]))
        {
            return Err(Error::Argument(
                "lambda2 schedule must be strictly increasing and finite".into(),
            ));
        }
        self.optimizer.validate()
    }

    /// The schedule actually run: inductive mode forces `{0}`.
    pub fn effective_schedule(&self) -> &[f64] {
        match self.mode {
            Mode::Transductive => &self.lambda2_schedule,
            Mode::Inductive => &self.lambda2_schedule[..1],
        }
    }
}

/// Signed one-vs-rest labels and weights for one class.
#[derive(Debug, Clone)]
pub struct OneVsRestLabels {
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub class_index: usize,
}

/// Balanced inverse-frequency weights: `w_i = NK / (2 * count(sign(y_i)))`,
/// so each sign's weights total NK/2 and the whole vector sums to NK.
pub fn class_weights(y: &[f64]) -> Result<Vec<f64>> {
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Argument("labels must be exactly +1 or -1".into()));
    }
    let nk = y.len() as f64;
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Degenerate(
            "one-vs-rest labels contain a single class".into(),
        ));
    }
    Ok(y.iter()
        .map(|&v| {
            if v > 0.0 {
                nk / (2.0 * pos as f64)
            } else {
                nk / (2.0 * neg as f64)
            }
        })
        .collect())
}

/// Assembles the binary subproblem for class `class_index` of a transformed
/// episode, over a kernel matrix built in support-then-query order.
pub fn build_binary_problem<'k>(
    e: &Episode,
    class_index: usize,
    cfg: &TmmcConfig,
    kernel: &'k KernelMatrix,
) -> Result<(BinaryProblem<'k>, OneVsRestLabels)> {
    if class_index >= e.n_way() {
        return Err(Error::Argument(format!(
            "class index {class_index} out of range for {}-way episode",
            e.n_way()
        )));
    }
    if kernel.order() != e.n_support() + e.n_query() {
        return Err(Error::Argument(format!(
            "kernel order {} does not match episode size {}",
            kernel.order(),
            e.n_support() + e.n_query()
        )));
    }
    let y: Vec<f64> = e
        .support()
        .iter()
        .map(|(label, _)| if *label == class_index { 1.0 } else { -1.0 })
        .collect();
    let w = class_weights(&y)?;
    let problem = BinaryProblem::new(
        kernel,
        e.n_support(),
        y.clone(),
        w.clone(),
        cfg.lambda1,
        cfg.effective_schedule()[0],
        cfg.gamma1,
        cfg.gamma2,
    )?;
    Ok((
        problem,
        OneVsRestLabels {
            y,
            w,
            class_index,
        },
    ))
}

/// Runs the annealing schedule on one binary subproblem. Each stage is
/// warm-started from the previous stage's solution; the first stage starts
/// from zero and, since its objective ignores query points entirely, is
/// solved over the support coefficients with the query block pinned to zero.
pub fn fit_binary(
    problem: &BinaryProblem<'_>,
    cfg: &TmmcConfig,
) -> Result<(DualCoefficients, Vec<OptimResult>)> {
    cfg.validate()?;
    let m = problem.m();
    let nk = problem.nk();
    let support_kernel = problem.kernel().leading_submatrix(nk);
    let mut alpha: Array1<f64> = Array1::zeros(m);
    let mut stages = Vec::new();

    for (stage, &lambda2) in cfg.effective_schedule().iter().enumerate() {
        let annotate = |e: Error| Error::Stage {
            stage,
            lambda2,
            source: Box::new(e),
        };
        let result = if lambda2 == 0.0 {
            let reduced = BinaryProblem::new(
                &support_kernel,
                nk,
                problem.y().to_vec(),
                problem.w().to_vec(),
                problem.lambda1(),
                0.0,
                problem.gamma1(),
                problem.gamma2(),
            )
            .map_err(annotate)?;
            let x0 = alpha.slice(ndarray::s![..nk]).to_owned();
            let res = minimize(
                |x| reduced.value_and_gradient_raw(x),
                &x0,
                &cfg.optimizer,
            )
            .map_err(annotate)?;
            alpha.slice_mut(ndarray::s![..nk]).assign(&res.x_final);
            // report the stage solution embedded in the full coefficient
            // vector (query block zero)
            OptimResult {
                x_final: alpha.clone(),
                ..res
            }
        } else {
            let staged = problem.with_lambda2(lambda2).map_err(annotate)?;
            let res = minimize(
                |x| staged.value_and_gradient_raw(x),
                &alpha,
                &cfg.optimizer,
            )
            .map_err(annotate)?;
            alpha = res.x_final.clone();
            res
        };
        stages.push(result);
    }
    Ok((DualCoefficients::new(alpha)?, stages))
}

/// Two-parameter logistic map from score to probability:
/// `p(s) = 1 / (1 + exp(a s + b))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlattCalibrator {
    a: f64,
    b: f64,
}

const PLATT_PENALTY: f64 = 1e-6;
const PLATT_MAX_ITERS: usize = 100;

impl PlattCalibrator {
    pub fn slope(&self) -> f64 {
        self.a
    }

    pub fn intercept(&self) -> f64 {
        self.b
    }

    /// Calibrated probability, strictly inside (0, 1).
    pub fn predict(&self, score: f64) -> f64 {
        let z = self.a * score + self.b;
        let p = if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        };
        p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

/// Fits the calibrator by penalized maximum likelihood on raw 0/1 targets
/// (damped Newton on the two parameters, L2 penalty `1e-6` on both, at most
/// 100 iterations). Both target values must be present.
pub fn fit_platt(scores: &[f64], targets: &[bool]) -> Result<PlattCalibrator> {
    if scores.len() != targets.len() {
        return Err(Error::Argument(format!(
            "{} scores but {} targets",
            scores.len(),
            targets.len()
        )));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("scores must be finite".into()));
    }
    if !targets.contains(&true) || !targets.contains(&false) {
        return Err(Error::Calibration(
            "targets contain a single class; both 0 and 1 are required".into(),
        ));
    }

    // negative log-likelihood of p_i = 1 / (1 + exp(a s_i + b)) plus the
    // quadratic penalty; softplus keeps it finite everywhere
    let softplus = |a: f64| {
        if a > 0.0 {
            a + (-a).exp().ln_1p()
        } else {
            a.exp().ln_1p()
        }
    };
    let nll = |a: f64, b: f64| -> f64 {
        let mut total = 0.5 * PLATT_PENALTY * (a * a + b * b);
        for (&s, &t) in scores.iter().zip(targets) {
            let z = a * s + b;
            // -log p = softplus(z), -log(1 - p) = softplus(-z)
            total += if t { softplus(z) } else { softplus(-z) };
        }
        total
    };

    let (mut a, mut b) = (0.0, 0.0);
    let mut value = nll(a, b);
    for _ in 0..PLATT_MAX_ITERS {
        let mut ga = PLATT_PENALTY * a;
        let mut gb = PLATT_PENALTY * b;
        let mut haa = PLATT_PENALTY;
        let mut hab = 0.0;
        let mut hbb = PLATT_PENALTY;
        for (&s, &t) in scores.iter().zip(targets) {
            let z = a * s + b;
            let mu = if z >= 0.0 {
                1.0 / (1.0 + (-z).exp())
            } else {
                let e = z.exp();
                e / (1.0 + e)
            };
            // d nll / dz = mu - (1 - t); d2 nll / dz2 = mu (1 - mu)
            let r = mu - if t { 0.0 } else { 1.0 };
            let h = mu * (1.0 - mu);
            ga += r * s;
            gb += r;
            haa += h * s * s;
            hab += h * s;
            hbb += h;
        }
        if ga.abs().max(gb.abs()) <= 1e-13 {
            break;
        }
        let det = haa * hbb - hab * hab;
        let (mut da, mut db) = ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det);
        // damped step: halve until the objective actually decreases
        let mut improved = false;
        for _ in 0..40 {
            let next = nll(a - da, b - db);
            if next < value {
                a -= da;
                b -= db;
                value = next;
                improved = true;
                break;
            }
            da *= 0.5;
            db *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Calibration("fitted parameters are not finite".into()));
    }
    Ok(PlattCalibrator { a, b })
}

/// Prediction for one episode: calibrated per-class probabilities for every
/// query point plus diagnostics from the per-class fits.
#[derive(Debug, Clone)]
pub struct EpisodePrediction {
    /// NQ x N matrix of calibrated probabilities.
    pub probabilities: Array2<f64>,
    /// Argmax class per query point, ties broken toward the lowest index.
    pub labels: Vec<usize>,
    pub per_class_alpha: Vec<DualCoefficients>,
    pub per_class_optim: Vec<Vec<OptimResult>>,
}

/// Lowest-index argmax.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Classifies the query set of a transformed episode (callers apply
/// [`crate::features::transform_episode`] first). One Gram matrix is shared
/// by all N one-vs-rest fits.
pub fn classify_episode(e: &Episode, cfg: &TmmcConfig) -> Result<EpisodePrediction> {
    cfg.validate()?;
    let n = e.n_way();
    let nk = e.n_support();
    let nq = e.n_query();
    let xs = e.stacked_vectors();
    let kernel = gram_matrix(cfg.kernel, &xs)?;

    let mut probabilities = Array2::zeros((nq, n));
    let mut per_class_alpha = Vec::with_capacity(n);
    let mut per_class_optim = Vec::with_capacity(n);
    for c in 0..n {
        let annotate = |e: Error| Error::ClassFit {
            class: c,
            source: Box::new(e),
        };
        let (problem, _) = build_binary_problem(e, c, cfg, &kernel).map_err(annotate)?;
        let (alpha, optim) = fit_binary(&problem, cfg).map_err(annotate)?;
        let scores = eval_f(&alpha, &kernel).map_err(annotate)?;
        let targets: Vec<bool> = e.support().iter().map(|(label, _)| *label == c).collect();
        let support_scores: Vec<f64> = scores.iter().take(nk).copied().collect();
        let calibrator = fit_platt(&support_scores, &targets).map_err(annotate)?;
        for j in 0..nq {
            probabilities[[j, c]] = calibrator.predict(scores[nk + j]);
        }
        per_class_alpha.push(alpha);
        per_class_optim.push(optim);
    }

    let labels = (0..nq)
        .map(|j| argmax(probabilities.row(j).as_slice().expect("row is contiguous")))
        .collect();
    Ok(EpisodePrediction {
        probabilities,
        labels,
        per_class_alpha,
        per_class_optim,
    })
}

/// The ablated margin classifier: identical to [`classify_episode`] with the
/// annealing schedule forced to `{0}`, so query features never influence the
/// fit and `gamma2` has no effect.
pub fn classify_episode_mmc(e: &Episode, cfg: &TmmcConfig) -> Result<EpisodePrediction> {
    let forced = TmmcConfig {
        mode: Mode::Inductive,
        ..cfg.clone()
    };
    classify_episode(e, &forced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{transform_episode, FeatureVector};
    use approx::assert_abs_diff_eq;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec()).unwrap()
    }

    /// 2-way episode with k support and q query points per class on two
    /// separated blobs in 2-D.
    fn blob_episode(k: usize, q: usize, gap: f64) -> Episode {
        let mut support = Vec::new();
        let mut query = Vec::new();
        for c in 0..2usize {
            let sign = if c == 0 { 1.0 } else { -1.0 };
            for i in 0..k {
                support.push((c, fv(&[sign * gap + 0.1 * i as f64, 0.3 * i as f64 - 0.2])));
            }
            for j in 0..q {
                query.push((c, fv(&[sign * gap - 0.15 * j as f64, 0.25 - 0.2 * j as f64])));
            }
        }
        Episode::new(2, k, q, support, query, vec![0, 1]).unwrap()
    }

    #[test]
    fn default_config_is_valid_and_annealed() {
        let cfg = TmmcConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.lambda2_schedule, vec![0.0, 1e-5, 1e-3, 0.1, 1.0]);
        assert_eq!(cfg.effective_schedule().len(), 5);
        let inductive = TmmcConfig {
            mode: Mode::Inductive,
            ..TmmcConfig::default()
        };
        assert_eq!(inductive.effective_schedule(), &[0.0]);
    }

    #[test]
    fn config_rejects_bad_schedules() {
        let mut cfg = TmmcConfig::default();
        cfg.lambda2_schedule = vec![];
        assert!(cfg.validate().is_err());
        cfg.lambda2_schedule = vec![0.1, 0.5];
        assert!(cfg.validate().is_err());
        cfg.lambda2_schedule = vec![0.0, 0.5, 0.5];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn class_weights_balance_signs() {
        assert_eq!(class_weights(&[1.0, -1.0]).unwrap(), vec![1.0, 1.0]);
        // 5-way 1-shot: 1 positive, 4 negatives
        let w = class_weights(&[1.0, -1.0, -1.0, -1.0, -1.0]).unwrap();
        assert_eq!(w[0], 2.5);
        assert_eq!(w[1], 0.625);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 5.0, epsilon = 1e-12);
        // 5-way 5-shot: 5 positives, 20 negatives
        let mut y = vec![1.0; 5];
        y.extend(vec![-1.0; 20]);
        let w = class_weights(&y).unwrap();
        assert_eq!(w[0], 2.5);
        assert_eq!(w[24], 0.625);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 25.0, epsilon = 1e-12);
        let pos_total: f64 = w.iter().take(5).sum();
        let neg_total: f64 = w.iter().skip(5).sum();
        assert_abs_diff_eq!(pos_total, neg_total, epsilon = 1e-12);

        assert!(class_weights(&[1.0, 1.0]).is_err());
        assert!(class_weights(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn binary_problem_labels_follow_class() {
        let e = transform_episode(&blob_episode(1, 1, 2.0)).unwrap();
        let cfg = TmmcConfig::default();
        let kernel = gram_matrix(cfg.kernel, &e.stacked_vectors()).unwrap();
        let (_, labels) = build_binary_problem(&e, 0, &cfg, &kernel).unwrap();
        assert_eq!(labels.y, vec![1.0, -1.0]);
        let (_, labels) = build_binary_problem(&e, 1, &cfg, &kernel).unwrap();
        assert_eq!(labels.y, vec![-1.0, 1.0]);
        assert!(build_binary_problem(&e, 2, &cfg, &kernel).is_err());
    }

    #[test]
    fn five_way_five_shot_label_counts() {
        let mut support = Vec::new();
        let mut query = Vec::new();
        for c in 0..5usize {
            for i in 0..5 {
                let mut v = vec![0.0; 5];
                v[c] = 1.0 + 0.05 * i as f64;
                v[(c + 1) % 5] = 0.02 * i as f64;
                support.push((c, fv(&v)));
            }
            let mut v = vec![0.0; 5];
            v[c] = 0.9;
            v[(c + 2) % 5] = 0.1;
            query.push((c, fv(&v)));
        }
        let e = Episode::new(5, 5, 1, support, query, (0..5).collect()).unwrap();
        let cfg = TmmcConfig::default();
        let kernel = gram_matrix(cfg.kernel, &e.stacked_vectors()).unwrap();
        for c in 0..5 {
            let (_, labels) = build_binary_problem(&e, c, &cfg, &kernel).unwrap();
            assert_eq!(labels.y.iter().filter(|&&v| v == 1.0).count(), 5);
            assert_eq!(labels.y.iter().filter(|&&v| v == -1.0).count(), 20);
            assert_abs_diff_eq!(labels.w.iter().sum::<f64>(), 25.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn inductive_fit_keeps_query_coefficients_zero() {
        let e = transform_episode(&blob_episode(2, 3, 1.5)).unwrap();
        let cfg = TmmcConfig {
            mode: Mode::Inductive,
            ..TmmcConfig::default()
        };
        let kernel = gram_matrix(cfg.kernel, &e.stacked_vectors()).unwrap();
        let (problem, _) = build_binary_problem(&e, 0, &cfg, &kernel).unwrap();
        let (alpha, stages) = fit_binary(&problem, &cfg).unwrap();
        assert_eq!(stages.len(), 1);
        for i in e.n_support()..alpha.len() {
            assert_eq!(alpha.as_array()[i], 0.0);
        }
    }

    #[test]
    fn two_point_margin_reaches_surrogate_optimum() {
        // separable 2-point support: the fitted function must classify both
        // support points with margin near 1
        let e = transform_episode(&blob_episode(1, 1, 2.0)).unwrap();
        let cfg = TmmcConfig {
            mode: Mode::Inductive,
            ..TmmcConfig::default()
        };
        let kernel = gram_matrix(cfg.kernel, &e.stacked_vectors()).unwrap();
        let (problem, labels) = build_binary_problem(&e, 0, &cfg, &kernel).unwrap();
        let (alpha, _) = fit_binary(&problem, &cfg).unwrap();
        let f = eval_f(&alpha, &kernel).unwrap();
        for i in 0..2 {
            assert!(
                labels.y[i] * f[i] >= 0.9,
                "margin {} for support {i}",
                labels.y[i] * f[i]
            );
        }
    }

    #[test]
    fn annealing_warm_starts_are_continuous() {
        // objective at each stage start equals the previous stage's final
        // alpha evaluated under the new lambda2
        let e = transform_episode(&blob_episode(2, 4, 0.8)).unwrap();
        let cfg = TmmcConfig::default();
        let kernel = gram_matrix(cfg.kernel, &e.stacked_vectors()).unwrap();
        let (problem, _) = build_binary_problem(&e, 0, &cfg, &kernel).unwrap();
        let (_, stages) = fit_binary(&problem, &cfg).unwrap();
        assert_eq!(stages.len(), cfg.lambda2_schedule.len());
        for (stage, &lambda2) in cfg.lambda2_schedule.iter().enumerate().skip(1) {
            let staged = problem.with_lambda2(lambda2).unwrap();
            let prev_alpha = DualCoefficients::new(stages[stage - 1].x_final.clone()).unwrap();
            let restart = staged.objective_value(&prev_alpha).unwrap();
            // the stage cannot end above its starting value
            assert!(stages[stage].f_final <= restart + 1e-12);
        }
    }

    #[test]
    fn platt_symmetric_scores_cross_at_half() {
        let cal = fit_platt(&[-1.0, 1.0], &[false, true]).unwrap();
        assert_abs_diff_eq!(cal.predict(0.0), 0.5, epsilon = 1e-6);
        // orientation: higher score, higher probability
        assert!(cal.predict(2.0) > cal.predict(-2.0));
    }

    #[test]
    fn platt_monotone_for_separated_scores() {
        let cal = fit_platt(&[-3.0, -2.0, 2.0, 3.0], &[false, false, true, true]).unwrap();
        let ps: Vec<f64> = [-4.0, -1.0, 0.0, 1.0, 4.0]
            .iter()
            .map(|&s| cal.predict(s))
            .collect();
        for pair in ps.windows(2) {
            assert!(pair[1] > pair[0]);
        }
        for p in ps {
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn platt_limits_and_formula() {
        let cal = fit_platt(&[-2.0, -1.0, 1.0, 2.0], &[false, false, true, true]).unwrap();
        // direct formula agreement
        for s in [-5.0, -0.3, 0.0, 0.7, 5.0] {
            let z = cal.slope() * s + cal.intercept();
            let direct = 1.0 / (1.0 + z.exp());
            assert_abs_diff_eq!(cal.predict(s), direct, epsilon = 1e-15);
        }
        // limits saturate toward 0/1 but remain strictly inside
        let hi = cal.predict(1e6);
        let lo = cal.predict(-1e6);
        assert!(hi > 0.99 && hi < 1.0);
        assert!(lo < 0.01 && lo > 0.0);
    }

    #[test]
    fn platt_rejects_single_class_targets() {
        assert!(matches!(
            fit_platt(&[0.1, 0.2], &[true, true]),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1]), 0);
    }

    #[test]
    fn separated_blobs_classify_perfectly() {
        let e = transform_episode(&blob_episode(5, 5, 6.0)).unwrap();
        let cfg = TmmcConfig::default();
        let pred = classify_episode(&e, &cfg).unwrap();
        for (j, (label, _)) in e.query().iter().enumerate() {
            assert_eq!(pred.labels[j], *label);
        }
        for p in pred.probabilities.iter() {
            assert!(*p > 0.0 && *p < 1.0);
        }
    }

    #[test]
    fn duplicate_query_points_get_identical_rows() {
        let mut support = vec![(0usize, fv(&[1.5, 0.0])), (1usize, fv(&[-1.5, 0.1]))];
        support.rotate_left(0);
        let dup = fv(&[0.9, 0.4]);
        let query = vec![
            (0usize, dup.clone()),
            (0usize, dup.clone()),
            (1usize, fv(&[-0.8, -0.3])),
            (1usize, fv(&[-1.1, 0.2])),
        ];
        let e = transform_episode(
            &Episode::new(2, 1, 2, support, query, vec![0, 1]).unwrap(),
        )
        .unwrap();
        let pred = classify_episode(&e, &TmmcConfig::default()).unwrap();
        for c in 0..2 {
            assert_eq!(pred.probabilities[[0, c]], pred.probabilities[[1, c]]);
        }
        assert_eq!(pred.labels[0], pred.labels[1]);
    }

    #[test]
    fn mmc_ignores_gamma2() {
        let e = transform_episode(&blob_episode(2, 3, 1.0)).unwrap();
        let mut predictions = Vec::new();
        for gamma2 in [0.1, 2.0, 50.0] {
            let cfg = TmmcConfig {
                gamma2,
                ..TmmcConfig::default()
            };
            predictions.push(classify_episode_mmc(&e, &cfg).unwrap());
        }
        for p in &predictions[1..] {
            assert_eq!(p.probabilities, predictions[0].probabilities);
            assert_eq!(p.labels, predictions[0].labels);
        }
    }

    #[test]
    fn mmc_equals_inductive_mode() {
        let e = transform_episode(&blob_episode(2, 2, 1.2)).unwrap();
        let cfg = TmmcConfig::default();
        let inductive_cfg = TmmcConfig {
            mode: Mode::Inductive,
            ..TmmcConfig::default()
        };
        let a = classify_episode_mmc(&e, &cfg).unwrap();
        let b = classify_episode(&e, &inductive_cfg).unwrap();
        assert_eq!(a.probabilities, b.probabilities);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn class_relabeling_permutes_probability_columns() {
        // swap the two class identities; columns must swap and predictions
        // must map through the permutation
        let e = transform_episode(&blob_episode(2, 3, 1.4)).unwrap();
        let swapped_support: Vec<_> = e
            .support()
            .iter()
            .map(|(l, v)| (1 - l, v.clone()))
            .collect();
        let swapped_query: Vec<_> = e.query().iter().map(|(l, v)| (1 - l, v.clone())).collect();
        // reorder so class 0 entries come first again
        let mut support = swapped_support;
        support.sort_by_key(|(l, _)| *l);
        let mut query = swapped_query;
        query.sort_by_key(|(l, _)| *l);
        let swapped = Episode::new(2, e.k_shot(), e.q_query(), support, query, vec![1, 0]).unwrap();

        let cfg = TmmcConfig::default();
        let original = classify_episode(&e, &cfg).unwrap();
        let permuted = classify_episode(&swapped, &cfg).unwrap();

        // map each query point of the original episode to its position in
        // the swapped episode
        for (j, (label, v)) in e.query().iter().enumerate() {
            let pos = swapped
                .query()
                .iter()
                .position(|(l, u)| *l == 1 - label && u == v)
                .unwrap();
            assert_abs_diff_eq!(
                original.probabilities[[j, 0]],
                permuted.probabilities[[pos, 1]],
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                original.probabilities[[j, 1]],
                permuted.probabilities[[pos, 0]],
                epsilon = 1e-9
            );
            assert_eq!(original.labels[j], 1 - permuted.labels[pos]);
        }
    }
}
