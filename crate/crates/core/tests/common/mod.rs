//! Independent oracle implementations shared by the integration tests.
//!
//! Everything here deliberately avoids the library's own code paths: linear
//! systems go through plain Gaussian elimination, eigenvalues through Jacobi
//! rotations, and the logistic fit through a generic ridge IRLS, so they can
//! stand as ground truth for the production implementations.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use tmmc::rng::SplitMix64;

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = b.len();
    assert_eq!(a.dim(), (n, n));
    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                let tmp = m[[col, k]];
                m[[col, k]] = m[[pivot, k]];
                m[[pivot, k]] = tmp;
            }
            rhs.swap(col, pivot);
        }
        assert!(m[[col, col]].abs() > 1e-300, "singular system");
        for row in (col + 1)..n {
            let factor = m[[row, col]] / m[[col, col]];
            for k in col..n {
                m[[row, k]] -= factor * m[[col, k]];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut sum = rhs[row];
        for k in (row + 1)..n {
            sum -= m[[row, k]] * x[k];
        }
        x[row] = sum / m[[row, row]];
    }
    x
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(a.dim(), (n, n));
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (m[[q, q]] - m[[p, p]]) / m[[p, q]];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Random SPD matrix with eigenvalues log-spaced over `[1, cond]`, obtained
/// by conjugating a diagonal with random Givens rotations.
pub fn random_spd(dim: usize, cond: f64, seed: u64) -> Array2<f64> {
    let mut rng = SplitMix64::stream(seed, 0);
    let mut m = Array2::zeros((dim, dim));
    for i in 0..dim {
        let t = i as f64 / (dim - 1).max(1) as f64;
        m[[i, i]] = cond.powf(t);
    }
    for _ in 0..4 * dim {
        let p = rng.random_range(0..dim);
        let mut q = rng.random_range(0..dim - 1);
        if q >= p {
            q += 1;
        }
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (c, s) = (angle.cos(), angle.sin());
        // m <- G' m G with G the rotation in the (p, q) plane
        for k in 0..dim {
            let mkp = m[[k, p]];
            let mkq = m[[k, q]];
            m[[k, p]] = c * mkp - s * mkq;
            m[[k, q]] = s * mkp + c * mkq;
        }
        for k in 0..dim {
            let mpk = m[[p, k]];
            let mqk = m[[q, k]];
            m[[p, k]] = c * mpk - s * mqk;
            m[[q, k]] = s * mpk + c * mqk;
        }
    }
    // symmetrize away rotation round-off
    let mt = m.t().to_owned();
    (&m + &mt) * 0.5
}

pub fn random_vector(dim: usize, scale: f64, seed: u64, stream: u64) -> Array1<f64> {
    let mut rng = SplitMix64::stream(seed, stream);
    Array1::from_iter((0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)))
}

/// Generic ridge-penalized logistic regression via IRLS on an explicit
/// design matrix; the model is `p = 1 / (1 + exp(x' beta))` matching the
/// calibrator's sign convention. Objective: NLL + penalty/2 * ||beta||^2.
pub fn fit_logistic_ridge(design: &Array2<f64>, targets: &[f64], penalty: f64) -> Array1<f64> {
    let (n, k) = design.dim();
    assert_eq!(targets.len(), n);
    let mut beta = Array1::zeros(k);
    for _ in 0..200 {
        let z = design.dot(&beta);
        let mu: Array1<f64> = z.mapv(|v| {
            if v >= 0.0 {
                1.0 / (1.0 + (-v).exp())
            } else {
                let e = v.exp();
                e / (1.0 + e)
            }
        });
        // gradient of NLL in this convention: X' (mu - (1 - t)) + penalty b
        let residual: Array1<f64> =
            Array1::from_iter(mu.iter().zip(targets).map(|(m, t)| m - (1.0 - t)));
        let grad = design.t().dot(&residual) + penalty * &beta;
        if grad.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-13 {
            break;
        }
        let mut hess = Array2::from_diag(&Array1::from_elem(k, penalty));
        for i in 0..n {
            let wgt = mu[i] * (1.0 - mu[i]);
            for r in 0..k {
                for c in 0..k {
                    hess[[r, c]] += wgt * design[[i, r]] * design[[i, c]];
                }
            }
        }
        let step = solve_dense(&hess, &grad);
        // backtracking on the penalized NLL
        let nll = |b: &Array1<f64>| -> f64 {
            let z = design.dot(b);
            let mut total = 0.5 * penalty * b.dot(b);
            for (zi, t) in z.iter().zip(targets) {
                let softplus = |a: f64| {
                    if a > 0.0 {
                        a + (-a).exp().ln_1p()
                    } else {
                        a.exp().ln_1p()
                    }
                };
                total += if *t > 0.5 {
                    softplus(*zi)
                } else {
                    softplus(-*zi)
                };
            }
            total
        };
        let current = nll(&beta);
        let mut scale = 1.0;
        loop {
            let candidate = &beta - &(scale * &step);
            if nll(&candidate) < current || scale < 1e-12 {
                beta = candidate;
                break;
            }
            scale *= 0.5;
        }
    }
    beta
}

/// 1-nearest-neighbor label for `point` among `(label, vector)` pairs.
pub fn nearest_neighbor_label(point: &[f64], references: &[(usize, Vec<f64>)]) -> usize {
    references
        .iter()
        .min_by(|(_, a), (_, b)| {
            let da: f64 = a.iter().zip(point).map(|(x, y)| (x - y) * (x - y)).sum();
            let db: f64 = b.iter().zip(point).map(|(x, y)| (x - y) * (x - y)).sum();
            da.total_cmp(&db)
        })
        .map(|(label, _)| *label)
        .unwrap()
}
