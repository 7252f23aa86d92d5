// SPDX-License-Identifier: MIT OR Apache-2.0

//! Direct per-split recomputation of every statistic from its likelihood,
//! without prefix sums, for comparison with the O(n) scans.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn rss_about_mean(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum()
}

/// Maximised Gaussian log-likelihood (up to constants) of a segment with
/// variance estimated by `ss / len`.
fn gauss_profile(ss: f64, len: f64) -> f64 {
    -0.5 * len * (ss / len).ln()
}

pub fn mean_known_var(x: &[f64], sigma: f64, lo: usize, hi: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (lo..=hi)
        .map(|tau| {
            let (l, r) = x.split_at(tau);
            let d = mean(r) - mean(l);
            let t = tau as f64;
            d * d * t * (n - t) / n / (sigma * sigma)
        })
        .collect()
}

pub fn mean_unknown_var(x: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let null = rss_about_mean(x);
    (lo..=hi)
        .map(|tau| {
            let (l, r) = x.split_at(tau);
            let alt = rss_about_mean(l) + rss_about_mean(r);
            if alt <= 1e-12 * null {
                f64::INFINITY
            } else {
                2.0 * (gauss_profile(alt, n) - gauss_profile(null, n))
            }
        })
        .collect()
}

/// Maximised Poisson log-likelihood (without the factorial term).
fn poisson_loglik(x: &[f64]) -> f64 {
    let lambda = mean(x);
    if lambda == 0.0 {
        return 0.0;
    }
    x.iter().map(|k| k * lambda.ln() - lambda).sum()
}

pub fn poisson(x: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let null = poisson_loglik(x);
    (lo..=hi)
        .map(|tau| {
            let (l, r) = x.split_at(tau);
            2.0 * (poisson_loglik(l) + poisson_loglik(r) - null)
        })
        .collect()
}

pub fn var_known_mean(x: &[f64], mu: f64, lo: usize, hi: usize) -> Vec<f64> {
    let ss = |s: &[f64]| s.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>();
    let n = x.len() as f64;
    let null = gauss_profile(ss(x), n);
    (lo..=hi)
        .map(|tau| {
            let (l, r) = x.split_at(tau);
            let (sl, sr) = (ss(l), ss(r));
            if sl / l.len() as f64 <= 1e-300 || sr / r.len() as f64 <= 1e-300 {
                return f64::INFINITY;
            }
            2.0 * (gauss_profile(sl, l.len() as f64) + gauss_profile(sr, r.len() as f64) - null)
        })
        .collect()
}

pub fn mean_and_var(x: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let total = rss_about_mean(x);
    let null = gauss_profile(total, n);
    (lo..=hi)
        .map(|tau| {
            let (l, r) = x.split_at(tau);
            let (sl, sr) = (rss_about_mean(l), rss_about_mean(r));
            if sl <= 1e-12 * total || sr <= 1e-12 * total {
                return f64::INFINITY;
            }
            2.0 * (gauss_profile(sl, l.len() as f64) + gauss_profile(sr, r.len() as f64) - null)
        })
        .collect()
}

/// Least-squares residual sum of squares of `y` on the columns of `d`.
fn ols_rss(d: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let beta = d
        .clone()
        .svd(true, true)
        .solve(y, 1e-13)
        .expect("svd solve");
    (y - d * beta).norm_squared()
}

pub fn slope(x: &[f64], sigma: f64, lo: usize, hi: usize) -> Vec<f64> {
    let n = x.len();
    let y = DVector::from_column_slice(x);
    let line = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { (i + 1) as f64 });
    let null = ols_rss(&line, &y);
    (lo..=hi)
        .map(|tau| {
            let d = DMatrix::from_fn(n, 3, |i, j| match j {
                0 => 1.0,
                1 => (i + 1) as f64,
                _ => ((i + 1) as f64 - tau as f64).max(0.0),
            });
            (null - ols_rss(&d, &y)) / (sigma * sigma)
        })
        .collect()
}

/// GLS with the exact AR(1) covariance `phi^|i-j|` (unit marginal variance).
pub fn ar1_mean(x: &[f64], phi: f64, lo: usize, hi: usize) -> Vec<f64> {
    let n = x.len();
    let cov = DMatrix::from_fn(n, n, |i, j| phi.powi((i as i32 - j as i32).abs()));
    let chol = cov
        .cholesky()
        .expect("AR(1) covariance is positive definite");
    let l = chol.l();
    let whiten = |m: &DMatrix<f64>| l.solve_lower_triangular(m).expect("triangular solve");
    let y = whiten(&DMatrix::from_column_slice(n, 1, x))
        .column(0)
        .into_owned();
    let ones = whiten(&DMatrix::from_element(n, 1, 1.0));
    let null = ols_rss(&ones, &y);
    (lo..=hi)
        .map(|tau| {
            let d = DMatrix::from_fn(n, 2, |i, j| if j == 0 || i >= tau { 1.0 } else { 0.0 });
            null - ols_rss(&whiten(&d), &y)
        })
        .collect()
}

/// Largest mismatch, scaled by `max(1, |oracle|)`; infinite entries must agree.
pub fn max_rel_diff(fast: &[f64], oracle: &[f64]) -> f64 {
    assert_eq!(fast.len(), oracle.len(), "curve lengths differ");
    fast.iter()
        .zip(oracle)
        .map(|(a, b)| match (a.is_infinite(), b.is_infinite()) {
            (true, true) => 0.0,
            (false, false) => (a - b).abs() / b.abs().max(1.0),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}
