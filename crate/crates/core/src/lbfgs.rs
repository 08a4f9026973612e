//! Quasi-Newton minimization.
//!
//! Production path: limited-memory BFGS with the two-loop recursion and a
//! strong Wolfe bracket/zoom line search with cubic interpolation
//! (Nocedal & Wright style). The dense inverse-Hessian update
//! [`dense_bfgs_update`] is exposed so the implicit two-loop matrix can be
//! cross-checked against an explicit chain of rank-two updates.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative threshold on `s'w` below which a curvature pair is rejected.
const CURVATURE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct LbfgsConfig {
    /// Number of curvature pairs kept by the two-loop recursion.
    pub memory: usize,
    /// Stop when `||grad||_2 <= grad_tol * max(1, ||x||_2)`.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Sufficient-decrease constant of the Wolfe conditions.
    pub wolfe_c1: f64,
    /// Curvature constant of the Wolfe conditions.
    pub wolfe_c2: f64,
    /// Objective evaluation budget per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tol: 1e-6,
            max_iters: 500,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search: 30,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory < 1 {
            return Err(Error::Argument("memory must be at least 1".into()));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return Err(Error::Argument("grad_tol must be positive".into()));
        }
        if self.max_iters < 1 || self.max_line_search < 1 {
            return Err(Error::Argument(
                "max_iters and max_line_search must be at least 1".into(),
            ));
        }
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::Argument("need 0 < c1 < c2 < 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x_final: Array1<f64>,
    pub f_final: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failures: usize,
}

/// One (step, gradient-difference) pair. Construction enforces the curvature
/// condition `s'w > CURVATURE_RTOL * ||s|| * ||w||`, so every stored pair has
/// a valid positive `rho = 1 / s'w`.
#[derive(Debug, Clone)]
pub struct CurvaturePair {
    pub s: Array1<f64>,
    pub w: Array1<f64>,
    pub rho: f64,
}

impl CurvaturePair {
    pub fn try_new(s: Array1<f64>, w: Array1<f64>) -> Result<Self> {
        let sw = s.dot(&w);
        let threshold = CURVATURE_RTOL * s.dot(&s).sqrt() * w.dot(&w).sqrt();
        if !(sw.is_finite() && sw > threshold) || threshold == 0.0 {
            return Err(Error::RejectedPair { sw, threshold });
        }
        Ok(Self {
            rho: 1.0 / sw,
            s,
            w,
        })
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let n = a.len();
    Array2::from_shape_fn((n, n), |(i, j)| a[i] * b[j])
}

/// BFGS inverse-Hessian update
/// `H' = (I - rho s w') H (I - rho w s') + rho s s'`,
/// expanded into rank-one terms so one update costs O(M^2). The result
/// satisfies the secant equation `H' w = s`.
pub fn dense_bfgs_update(h: &Array2<f64>, pair: &CurvaturePair) -> Array2<f64> {
    let u = h.dot(&pair.w); // H w (= w' H by symmetry)
    let rho = pair.rho;
    let whw = pair.w.dot(&u);
    let mut next = h.clone();
    next -= &(rho * &outer(&pair.s, &u));
    next -= &(rho * &outer(&u, &pair.s));
    next += &((rho * rho * whw + rho) * &outer(&pair.s, &pair.s));
    next
}

/// Search direction `-H grad` where `H` is the implicit L-BFGS inverse
/// Hessian over `history` (ordered oldest to newest) with fixed initial
/// matrix `H0 = I`. Empty history gives steepest descent.
///
/// The fixed `H0` makes the recursion reproduce, exactly, a dense BFGS
/// update chain started from the identity whenever the memory holds the
/// whole history. Rescaling `H0` by `s'w / w'w` each iteration breaks that
/// equivalence and measurably stalls far from the achievable accuracy on
/// ill-conditioned problems, so it is deliberately not done here.
pub fn two_loop_direction(history: &[CurvaturePair], grad: &Array1<f64>) -> Array1<f64> {
    let mut q = grad.clone();
    if history.is_empty() {
        q.mapv_inplace(|v| -v);
        return q;
    }
    let mut coeffs = vec![0.0; history.len()];
    for (i, pair) in history.iter().enumerate().rev() {
        let a = pair.rho * pair.s.dot(&q);
        coeffs[i] = a;
        q.scaled_add(-a, &pair.w);
    }
    for (i, pair) in history.iter().enumerate() {
        let b = pair.rho * pair.w.dot(&q);
        q.scaled_add(coeffs[i] - b, &pair.s);
    }
    q.mapv_inplace(|v| -v);
    q
}

#[derive(Debug)]
pub struct LineSearchResult {
    pub step: f64,
    pub value: f64,
    pub gradient: Array1<f64>,
    pub evaluations: usize,
    /// False when the strong Wolfe conditions were not met within the budget
    /// and the best sufficient-decrease point was taken instead.
    pub strong_wolfe: bool,
}

struct Probe {
    t: f64,
    value: f64,
    /// directional derivative grad' d at t
    deriv: f64,
    gradient: Array1<f64>,
}

/// Minimizer of the cubic through `(a, fa, ga)` and `(b, fb, gb)`, `None`
/// when the interpolation degenerates.
fn cubic_min(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> Option<f64> {
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    if !(disc.is_finite() && disc >= 0.0) {
        return None;
    }
    let d2 = disc.sqrt();
    let t = b - (b - a) * ((gb + d2 - d1) / (gb - ga + 2.0 * d2));
    t.is_finite().then_some(t)
}

/// Strong Wolfe line search along `d` from `x`, starting at trial step 1.
/// `f0` is the objective at `x` and `g0` the directional derivative
/// `grad(x)' d`, which must be negative.
///
/// Returns the accepted step plus the objective and gradient there. If the
/// evaluation budget runs out, the best point satisfying sufficient decrease
/// alone is returned with `strong_wolfe = false`; with no such point the
/// search fails.
pub fn wolfe_line_search<F>(
    objective_and_gradient: &mut F,
    x: &Array1<f64>,
    d: &Array1<f64>,
    f0: f64,
    g0: f64,
    cfg: &LbfgsConfig,
) -> Result<LineSearchResult>
where
    F: FnMut(&Array1<f64>) -> (f64, Array1<f64>),
{
    if !(g0 < 0.0) {
        return Err(Error::NotDescentDirection { gd: g0 });
    }
    let c1 = cfg.wolfe_c1;
    let c2 = cfg.wolfe_c2;
    let budget = cfg.max_line_search;
    let mut evals = 0usize;

    // Sufficient decrease cannot be certified below the rounding error of
    // the objective itself; without this allowance the search rejects
    // perfectly good steps once |c1 t g0| falls under one ulp of f0 and the
    // optimizer stalls around ||grad|| ~ sqrt(eps * curvature).
    let noise = 8.0 * f64::EPSILON * f0.abs().max(1.0);

    let mut probe_at = |t: f64, evals: &mut usize| -> Probe {
        let point = x + &(t * d);
        let (value, gradient) = objective_and_gradient(&point);
        *evals += 1;
        let deriv = gradient.dot(d);
        Probe {
            t,
            value,
            deriv,
            gradient,
        }
    };

    let armijo = |t: f64, value: f64| value.is_finite() && value <= f0 + c1 * t * g0 + noise;
    let strong = |deriv: f64| deriv.abs() <= c2 * g0.abs();

    let mut best: Option<Probe> = None;
    let consider_best = |p: &Probe, best: &mut Option<Probe>| {
        if armijo(p.t, p.value) && best.as_ref().map_or(true, |b| p.value < b.value) {
            *best = Some(Probe {
                t: p.t,
                value: p.value,
                deriv: p.deriv,
                gradient: p.gradient.clone(),
            });
        }
    };

    let finish = |p: Probe, evals: usize, strong_wolfe: bool| LineSearchResult {
        step: p.t,
        value: p.value,
        gradient: p.gradient,
        evaluations: evals,
        strong_wolfe,
    };

    // Bracketing phase: grow t until the minimum is bracketed or the strong
    // Wolfe conditions hold.
    let mut prev = Probe {
        t: 0.0,
        value: f0,
        deriv: g0,
        gradient: Array1::zeros(0), // never returned: t = 0 fails Armijo-progress paths below
    };
    let mut t = 1.0;
    let mut bracket: Option<(Probe, Probe)> = None; // (lo, hi); lo passes Armijo with smallest f
    let mut first = true;
    while evals < budget {
        let cur = probe_at(t, &mut evals);
        consider_best(&cur, &mut best);
        if !cur.value.is_finite() || !armijo(cur.t, cur.value) || (!first && cur.value >= prev.value)
        {
            bracket = Some((prev, cur));
            break;
        }
        if strong(cur.deriv) {
            return Ok(finish(cur, evals, true));
        }
        if cur.deriv >= 0.0 {
            // minimum lies between prev and cur; cur has the lower value
            bracket = Some((cur, prev));
            break;
        }
        t *= 2.0;
        prev = cur;
        first = false;
    }

    let Some((mut lo, mut hi)) = bracket else {
        // budget exhausted while still descending
        return match best {
            Some(p) => Ok(finish(p, evals, false)),
            None => Err(Error::LineSearchFailed { evaluations: evals }),
        };
    };

    // Zoom phase: shrink [lo, hi] with safeguarded cubic interpolation.
    // Invariants: lo satisfies Armijo (or is t = 0) with the lowest value
    // seen among such points, and lo's directional derivative points into
    // the interval, so a stationary point of the restriction lies between
    // lo and hi.
    let d_scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    while evals < budget {
        if (hi.t - lo.t).abs() * d_scale < 1e-14 {
            break;
        }
        let (a, b) = (lo.t.min(hi.t), lo.t.max(hi.t));
        let guard = 0.1 * (b - a);
        let mut t = cubic_min(lo.t, lo.value, lo.deriv, hi.t, hi.value, hi.deriv)
            .unwrap_or(0.5 * (a + b));
        if !hi.value.is_finite() {
            // interpolation through a non-finite endpoint is meaningless
            t = 0.5 * (a + b);
        }
        if t < a + guard || t > b - guard {
            t = 0.5 * (a + b);
        }
        let cur = probe_at(t, &mut evals);
        consider_best(&cur, &mut best);
        let armijo_ok = armijo(cur.t, cur.value);
        if armijo_ok && strong(cur.deriv) {
            return Ok(finish(cur, evals, true));
        }
        // Once values differ by less than the rounding noise, comparisons
        // carry no information; fall back to bracketing the root of the
        // directional derivative, which is still computed accurately.
        let plateau = armijo_ok && (cur.value - lo.value).abs() <= noise;
        if plateau {
            if cur.deriv * (hi.t - lo.t) < 0.0 {
                lo = cur;
            } else {
                hi = cur;
            }
        } else if !armijo_ok || cur.value >= lo.value {
            hi = cur;
        } else {
            if cur.deriv * (hi.t - lo.t) >= 0.0 {
                hi = Probe {
                    t: lo.t,
                    value: lo.value,
                    deriv: lo.deriv,
                    gradient: lo.gradient.clone(),
                };
            }
            lo = cur;
        }
    }

    match best {
        Some(p) => Ok(finish(p, evals, false)),
        None => Err(Error::LineSearchFailed { evaluations: evals }),
    }
}

/// Minimizes a smooth function from `x0`. The callable returns the objective
/// value and gradient at a point and must be pure.
///
/// Iterates until the gradient criterion, the iteration cap, or an
/// irrecoverable line-search failure; objective values are monotone
/// non-increasing. A non-finite objective at an accepted point aborts with
/// [`Error::NonFiniteObjective`].
pub fn minimize<F>(
    mut objective_and_gradient: F,
    x0: &Array1<f64>,
    cfg: &LbfgsConfig,
) -> Result<OptimResult>
where
    F: FnMut(&Array1<f64>) -> (f64, Array1<f64>),
{
    cfg.validate()?;
    let mut x = x0.clone();
    let (mut f, mut grad) = objective_and_gradient(&x);
    if !f.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }

    let tolerance = |x: &Array1<f64>| cfg.grad_tol * x.dot(x).sqrt().max(1.0);
    let mut history: Vec<CurvaturePair> = Vec::with_capacity(cfg.memory);
    let mut iterations = 0usize;
    let mut line_search_failures = 0usize;
    let mut converged = false;

    loop {
        let grad_norm = grad.dot(&grad).sqrt();
        if grad_norm <= tolerance(&x) {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }

        let mut d = two_loop_direction(&history, &grad);
        let mut g0 = grad.dot(&d);
        if g0 >= 0.0 {
            // stale curvature produced a non-descent direction; restart
            history.clear();
            d = grad.mapv(|v| -v);
            g0 = -grad_norm * grad_norm;
            if g0 >= 0.0 {
                converged = true;
                break;
            }
        }

        match wolfe_line_search(&mut objective_and_gradient, &x, &d, f, g0, cfg) {
            Ok(res) => {
                if !res.strong_wolfe {
                    line_search_failures += 1;
                }
                if !res.value.is_finite() || res.gradient.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteObjective {
                        iteration: iterations,
                    });
                }
                let x_new = &x + &(res.step * &d);
                let s = &x_new - &x;
                let w = &res.gradient - &grad;
                if let Ok(pair) = CurvaturePair::try_new(s, w) {
                    if history.len() == cfg.memory {
                        history.remove(0);
                    }
                    history.push(pair);
                }
                x = x_new;
                f = res.value;
                grad = res.gradient;
                iterations += 1;
            }
            Err(Error::LineSearchFailed { .. }) => {
                line_search_failures += 1;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(OptimResult {
        grad_norm: grad.dot(&grad).sqrt(),
        x_final: x,
        f_final: f,
        iterations,
        converged,
        line_search_failures,
    })
}
