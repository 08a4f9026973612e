//! Kernel evaluation and Gram matrices.
//!
//! Decision functions live in the span of the episode's own points, so every
//! score is a weighted column sum of the Gram matrix; [`eval_f`] computes all
//! of them at once as `K * alpha`. Matrices are materialized densely: the
//! protocols here never exceed a few hundred points.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::objective::DualCoefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
}

/// k(x, y); symmetric in its arguments.
pub fn kernel_eval(spec: KernelSpec, x: &FeatureVector, y: &FeatureVector) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "kernel arguments have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    match spec {
        KernelSpec::Linear => Ok(x.dot(y)),
    }
}

/// Symmetric M x M matrix of pairwise kernel values. By convention the
/// leading `nk` indices are support points and the rest are query points.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: Array2<f64>,
}

impl KernelMatrix {
    /// Wraps a precomputed matrix, rejecting non-square or asymmetric input
    /// (tolerance 1e-12 on entries).
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::Argument(format!("kernel matrix is {r} x {c}")));
        }
        for i in 0..r {
            for j in (i + 1)..r {
                if (entries[[i, j]] - entries[[j, i]]).abs() > 1e-12 {
                    return Err(Error::Argument(format!(
                        "kernel matrix asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("kernel matrix has non-finite entries".into()));
        }
        Ok(Self { entries })
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    /// `K * v`.
    pub fn apply(&self, v: &Array1<f64>) -> Array1<f64> {
        debug_assert_eq!(v.len(), self.order());
        self.entries.dot(v)
    }

    /// The leading n x n principal block (the support-support block when
    /// `n = nk`).
    pub fn leading_submatrix(&self, n: usize) -> KernelMatrix {
        debug_assert!(n <= self.order());
        KernelMatrix {
            entries: self.entries.slice(ndarray::s![..n, ..n]).to_owned(),
        }
    }
}

/// Builds the Gram matrix `K[i][j] = k(x_i, x_j)` over `xs` in order.
pub fn gram_matrix(spec: KernelSpec, xs: &[FeatureVector]) -> Result<KernelMatrix> {
    if xs.is_empty() {
        return Err(Error::Argument("empty point list".into()));
    }
    let dim = xs[0].len();
    if let Some(i) = xs.iter().position(|v| v.len() != dim) {
        return Err(Error::Argument(format!(
            "point {i} has dimension {}, expected {dim}",
            xs[i].len()
        )));
    }
    let m = xs.len();
    let mut entries = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let v = match spec {
                KernelSpec::Linear => xs[i].dot(&xs[j]),
            };
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    Ok(KernelMatrix { entries })
}

/// Scores every point of the matrix: `f_i = sum_j alpha_j K[j][i]`, i.e.
/// `K * alpha`.
pub fn eval_f(alpha: &DualCoefficients, k: &KernelMatrix) -> Result<Array1<f64>> {
    if alpha.len() != k.order() {
        return Err(Error::Argument(format!(
            "alpha has length {}, kernel matrix has order {}",
            alpha.len(),
            k.order()
        )));
    }
    Ok(k.apply(alpha.as_array()))
}
