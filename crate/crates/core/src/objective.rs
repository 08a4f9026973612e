//! The smoothed transductive margin objective and its analytic gradient.
//!
//! For one one-vs-rest subproblem with dual coefficients `alpha` and scores
//! `f = K * alpha`, the objective is
//!
//! ```text
//! F(alpha) = lambda1/2 * alpha' K alpha
//!          + 1/NK * sum_{i<NK} w_i * h(y_i f_i)            (support hinge)
//!          + lambda2/NQ * sum_{i>=NK} exp(-gamma2 f_i^2)   (query low-density)
//! ```
//!
//! where `h(u) = log(1 + exp(gamma1 (1 - u))) / gamma1` is the softplus
//! surrogate of the hinge `max(0, 1 - u)`. The gradient is assembled as
//! `K (lambda1 alpha + t)` with `t` holding the per-point loss derivatives,
//! which keeps every evaluation at O(M^2).
//!
//! All exponentials go through shifted softplus / sigmoid forms: gamma1 = 20
//! with margins of a few units produces raw exponents far beyond overflow.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;

/// Dual coefficient vector; entries are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCoefficients(Array1<f64>);

impl DualCoefficients {
    pub fn new(alpha: Array1<f64>) -> Result<Self> {
        if alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(
                "dual coefficients must be finite".into(),
            ));
        }
        Ok(Self(alpha))
    }

    pub fn zeros(m: usize) -> Self {
        Self(Array1::zeros(m))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array1<f64> {
        self.0
    }
}

/// Standard logistic, stable for large |z|.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Smoothed hinge: `log(1 + exp(gamma1 (1 - u))) / gamma1`. Upper-bounds
/// `max(0, 1 - u)` by at most `log(2) / gamma1`. Written as the hinge plus a
/// non-negative remainder so the lower bound holds exactly in floating
/// point, with no overflow anywhere on the f64 range.
pub fn surrogate_hinge(u: f64, gamma1: f64) -> f64 {
    let margin = 1.0 - u;
    margin.max(0.0) + (-gamma1 * margin.abs()).exp().ln_1p() / gamma1
}

/// Smooth stand-in for the symmetric hinge on unlabeled points:
/// `exp(-gamma2 f^2)`, in (0, 1], maximal at f = 0.
pub fn surrogate_symmetric(fval: f64, gamma2: f64) -> f64 {
    (-gamma2 * fval * fval).exp()
}

/// Everything one one-vs-rest subproblem needs: the Gram matrix over the
/// episode's M = NK + NQ points (support first), signed support labels,
/// positive class weights, and the hyperparameters. `nq == 0` is legal and
/// selects a pure support-only problem.
#[derive(Debug, Clone)]
pub struct BinaryProblem<'k> {
    kernel: &'k KernelMatrix,
    nk: usize,
    nq: usize,
    y: Vec<f64>,
    w: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
    gamma1: f64,
    gamma2: f64,
}

impl<'k> BinaryProblem<'k> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kernel: &'k KernelMatrix,
        nk: usize,
        y: Vec<f64>,
        w: Vec<f64>,
        lambda1: f64,
        lambda2: f64,
        gamma1: f64,
        gamma2: f64,
    ) -> Result<Self> {
        let m = kernel.order();
        if nk == 0 || nk > m {
            return Err(Error::Argument(format!(
                "nk = {nk} out of range for kernel order {m}"
            )));
        }
        if y.len() != nk {
            return Err(Error::Argument(format!(
                "y has length {}, expected nk = {nk}",
                y.len()
            )));
        }
        if w.len() != nk {
            return Err(Error::Argument(format!(
                "w has length {}, expected nk = {nk}",
                w.len()
            )));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Argument("labels must be exactly +1 or -1".into()));
        }
        if w.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::Argument("weights must be positive".into()));
        }
        if !(lambda1.is_finite() && lambda1 > 0.0) {
            return Err(Error::Argument("lambda1 must be positive".into()));
        }
        if !(lambda2.is_finite() && lambda2 >= 0.0) {
            return Err(Error::Argument("lambda2 must be non-negative".into()));
        }
        if !(gamma1.is_finite() && gamma1 > 0.0) || !(gamma2.is_finite() && gamma2 > 0.0) {
            return Err(Error::Argument("gamma1 and gamma2 must be positive".into()));
        }
        Ok(Self {
            kernel,
            nk,
            nq: m - nk,
            y,
            w,
            lambda1,
            lambda2,
            gamma1,
            gamma2,
        })
    }

    /// Same problem under a different query-loss weight.
    pub fn with_lambda2(&self, lambda2: f64) -> Result<Self> {
        let mut p = self.clone();
        if !(lambda2.is_finite() && lambda2 >= 0.0) {
            return Err(Error::Argument("lambda2 must be non-negative".into()));
        }
        p.lambda2 = lambda2;
        Ok(p)
    }

    pub fn kernel(&self) -> &'k KernelMatrix {
        self.kernel
    }

    pub fn m(&self) -> usize {
        self.nk + self.nq
    }

    pub fn nk(&self) -> usize {
        self.nk
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    fn check_len(&self, alpha: &DualCoefficients) -> Result<()> {
        if alpha.len() != self.m() {
            return Err(Error::Argument(format!(
                "alpha has length {}, problem has M = {}",
                alpha.len(),
                self.m()
            )));
        }
        Ok(())
    }

    pub fn objective_value(&self, alpha: &DualCoefficients) -> Result<f64> {
        self.check_len(alpha)?;
        Ok(self.value_raw(alpha.as_array()))
    }

    pub fn objective_gradient(&self, alpha: &DualCoefficients) -> Result<Array1<f64>> {
        self.check_len(alpha)?;
        Ok(self.value_and_gradient_raw(alpha.as_array()).1)
    }

    pub fn value_and_gradient(&self, alpha: &DualCoefficients) -> Result<(f64, Array1<f64>)> {
        self.check_len(alpha)?;
        Ok(self.value_and_gradient_raw(alpha.as_array()))
    }

    /// Unvalidated fast path used by the optimizer loop.
    pub fn value_raw(&self, alpha: &Array1<f64>) -> f64 {
        let f = self.kernel.apply(alpha);
        self.value_given_scores(alpha, &f)
    }

    fn value_given_scores(&self, alpha: &Array1<f64>, f: &Array1<f64>) -> f64 {
        let quad = 0.5 * self.lambda1 * alpha.dot(f);
        let mut support = 0.0;
        for i in 0..self.nk {
            support += self.w[i] * surrogate_hinge(self.y[i] * f[i], self.gamma1);
        }
        support /= self.nk as f64;
        let mut query = 0.0;
        if self.lambda2 > 0.0 && self.nq > 0 {
            for i in self.nk..self.m() {
                query += surrogate_symmetric(f[i], self.gamma2);
            }
            query *= self.lambda2 / self.nq as f64;
        }
        quad + support + query
    }

    /// Unvalidated fast path: one shared `K * alpha`, then the gradient as
    /// `K (lambda1 alpha + t)`.
    pub fn value_and_gradient_raw(&self, alpha: &Array1<f64>) -> (f64, Array1<f64>) {
        let f = self.kernel.apply(alpha);
        let value = self.value_given_scores(alpha, &f);

        let m = self.m();
        let nk_f = self.nk as f64;
        let mut inner = Array1::zeros(m);
        for i in 0..self.nk {
            // derivative of the weighted softplus hinge w.r.t. f_i, in
            // sigmoid form to avoid overflow
            let t_i = -self.w[i] * self.y[i] * sigmoid(self.gamma1 * (1.0 - self.y[i] * f[i])) / nk_f;
            inner[i] = self.lambda1 * alpha[i] + t_i;
        }
        if self.lambda2 > 0.0 && self.nq > 0 {
            let nq_f = self.nq as f64;
            for i in self.nk..m {
                let fi = f[i];
                let t_i =
                    -2.0 * self.gamma2 * self.lambda2 * fi * (-self.gamma2 * fi * fi).exp() / nq_f;
                inner[i] = self.lambda1 * alpha[i] + t_i;
            }
        } else {
            for i in self.nk..m {
                inner[i] = self.lambda1 * alpha[i];
            }
        }
        (value, self.kernel.apply(&inner))
    }

    /// Central-difference gradient `(F(a + h e_j) - F(a - h e_j)) / 2h`,
    /// the verification oracle for [`Self::objective_gradient`].
    pub fn finite_diff_gradient(&self, alpha: &DualCoefficients, h: f64) -> Result<Array1<f64>> {
        self.check_len(alpha)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Argument("h must be positive".into()));
        }
        let mut probe = alpha.as_array().clone();
        let mut grad = Array1::zeros(self.m());
        for j in 0..self.m() {
            let orig = probe[j];
            probe[j] = orig + h;
            let plus = self.value_raw(&probe);
            probe[j] = orig - h;
            let minus = self.value_raw(&probe);
            probe[j] = orig;
            grad[j] = (plus - minus) / (2.0 * h);
        }
        Ok(grad)
    }
}
