// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment summaries and the CUSUM family.
//!
//! Every single-change statistic in this crate is built on cumulative sums of
//! the data, so that the whole scan over candidate change-points costs O(n).
//! Indices in the public API are 1-based: `tau` means "the last observation of
//! the first segment", exactly as in the usual change-point notation.

use crate::error::{Error, Result};

/// An observed univariate series `X_1..X_n`, validated to be finite with `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::input(format!(
                "series needs at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i + 1 });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a valid series has at least two samples.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Checks that every value is a nonnegative integer (Poisson support).
    pub fn check_counts(&self) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::input(format!(
                    "sample {} = {v} is not a nonnegative integer count",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &v in &self.values {
            acc.add(v);
        }
        acc.value() / self.len() as f64
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated cumulative sums: `out[0] = 0`, `out[t] = x_1 + ... + x_t`.
pub(crate) fn cumulative<I>(values: I, n: usize) -> Vec<f64>
where
    I: IntoIterator<Item = f64>,
{
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
        out.push(acc.value());
    }
    out
}

/// Cumulative sums of values (`s`) and of squared values (`q`), both of length `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums {
    s: Vec<f64>,
    q: Vec<f64>,
}

impl PrefixSums {
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Number of observations summarised.
    pub fn n(&self) -> usize {
        self.s.len() - 1
    }

    fn check_segment(&self, s: usize, t: usize) -> Result<()> {
        let n = self.n();
        if s == 0 || s > t || t > n {
            return Err(Error::index(format!(
                "segment {s}..={t} is not within 1..={n}"
            )));
        }
        Ok(())
    }

    /// Sum of `X_s..X_t` (1-based, inclusive).
    pub fn segment_sum(&self, s: usize, t: usize) -> Result<f64> {
        self.check_segment(s, t)?;
        Ok(self.s[t] - self.s[s - 1])
    }
}

pub fn build_prefix(ts: &TimeSeries) -> PrefixSums {
    let v = ts.values();
    PrefixSums {
        s: cumulative(v.iter().copied(), v.len()),
        q: cumulative(v.iter().map(|x| x * x), v.len()),
    }
}

/// Sample mean of `X_s..X_t`, 1-based inclusive.
pub fn segment_mean(ps: &PrefixSums, s: usize, t: usize) -> Result<f64> {
    let sum = ps.segment_sum(s, t)?;
    Ok(sum / (t - s + 1) as f64)
}

#[inline]
fn signed_cusum_from(s_tau: f64, s_n: f64, tau: usize, n: usize) -> f64 {
    let (t, nf) = (tau as f64, n as f64);
    (s_tau - t * s_n / nf) * (nf / (t * (nf - t))).sqrt()
}

fn check_split(tau: usize, n: usize) -> Result<()> {
    if tau == 0 || tau >= n {
        return Err(Error::index(format!(
            "split point {tau} is not within 1..={}",
            n - 1
        )));
    }
    Ok(())
}

/// Signed CUSUM `sqrt(tau (n - tau) / n) * (mean(X_1..tau) - mean(X_tau+1..n))`.
pub fn signed_cusum(ps: &PrefixSums, tau: usize) -> Result<f64> {
    let n = ps.n();
    check_split(tau, n)?;
    Ok(signed_cusum_from(ps.s[tau], ps.s[n], tau, n))
}

/// CUSUM statistic `C_tau`, the absolute value of [`signed_cusum`].
pub fn cusum(ps: &PrefixSums, tau: usize) -> Result<f64> {
    signed_cusum(ps, tau).map(f64::abs)
}

/// CUSUM statistics for every split `tau = 1..n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumCurve {
    c: Vec<f64>,
    c_signed: Vec<f64>,
}

impl CusumCurve {
    /// `C_tau` for `tau = 1..n-1`; element `i` holds `tau = i + 1`.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn c_signed(&self) -> &[f64] {
        &self.c_signed
    }

    pub fn at(&self, tau: usize) -> Option<f64> {
        tau.checked_sub(1).and_then(|i| self.c.get(i).copied())
    }

    /// Split with the largest `C_tau`; ties go to the smallest split.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.c.iter().enumerate() {
            if v > self.c[best] {
                best = i;
            }
        }
        best + 1
    }
}

/// Cumulative sums of values only; the CUSUM scan needs nothing else.
pub(crate) fn value_prefix(values: &[f64]) -> Vec<f64> {
    cumulative(values.iter().copied(), values.len())
}

pub fn cusum_curve(ts: &TimeSeries) -> CusumCurve {
    let s = value_prefix(ts.values());
    let c_signed = signed_cusum_scan(&s);
    let c = c_signed.iter().map(|v| v.abs()).collect();
    CusumCurve { c, c_signed }
}

/// Signed CUSUM over all splits from a prefix-sum vector of length `n + 1`.
pub(crate) fn signed_cusum_scan(s: &[f64]) -> Vec<f64> {
    let n = s.len() - 1;
    let s_n = s[n];
    (1..n)
        .map(|tau| signed_cusum_from(s[tau], s_n, tau, n))
        .collect()
}
