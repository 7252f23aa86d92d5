// SPDX-License-Identifier: MIT OR Apache-2.0

//! Likelihood-ratio scans for a single change under seven parametric models.
//!
//! Each scan evaluates `LR_tau` (twice the log ratio of maximised likelihoods,
//! one change at `tau` against no change) for every admissible split in O(n)
//! total. Splits are 1-based; `tau` is the last index of the first segment.

use std::fmt;

use crate::core_stats::{cumulative, signed_cusum_scan, value_prefix, CompensatedSum, TimeSeries};
use crate::error::{Error, Result};

/// Negative LR values down to this magnitude are rounding noise and clamp to 0.
pub const NEGATIVE_CLAMP: f64 = 1e-9;

/// Alternative fits with residual sum of squares below this fraction of the
/// null residual sum of squares are treated as exact (infinite LR).
const RSS_FLOOR_REL: f64 = 1e-12;

/// Per-segment variance estimates at or below this are treated as zero.
const VARIANCE_FLOOR: f64 = 1e-300;

/// Ratio of singular values below which a least-squares design counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    /// Change in mean, Gaussian noise with known standard deviation.
    GaussMeanKnownVar { sigma: f64 },
    /// Change in mean, Gaussian noise with unknown common variance.
    GaussMeanUnknownVar,
    /// Change in rate of Poisson counts.
    PoissonMean,
    /// Change in variance of Gaussian data with known mean.
    GaussVarKnownMean { mu: f64 },
    /// Simultaneous change in mean and variance.
    GaussMeanAndVar,
    /// Change in slope of a continuous piecewise-linear mean, known noise sd.
    GaussSlopeKnownVar { sigma: f64 },
    /// Change in mean under stationary AR(1) noise with unit marginal variance.
    Ar1MeanKnown { phi: f64 },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::GaussMeanKnownVar { sigma } | ModelSpec::GaussSlopeKnownVar { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::config(format!(
                        "sigma must be positive, got {sigma}"
                    )));
                }
            }
            ModelSpec::GaussVarKnownMean { mu } if !mu.is_finite() => {
                return Err(Error::config(format!("mu must be finite, got {mu}")));
            }
            ModelSpec::Ar1MeanKnown { phi } if !(phi.abs() < 1.0) => {
                return Err(Error::config(format!(
                    "AR(1) coefficient must satisfy |phi| < 1, got {phi}"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Short machine name, as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::GaussMeanKnownVar { .. } => "mean-known-var",
            ModelSpec::GaussMeanUnknownVar => "mean-unknown-var",
            ModelSpec::PoissonMean => "poisson",
            ModelSpec::GaussVarKnownMean { .. } => "var-known-mean",
            ModelSpec::GaussMeanAndVar => "mean-var",
            ModelSpec::GaussSlopeKnownVar { .. } => "slope",
            ModelSpec::Ar1MeanKnown { .. } => "ar1-mean",
        }
    }

    /// Models whose change is a shift in level, for which a size-of-change
    /// estimate makes sense.
    pub fn is_mean_type(&self) -> bool {
        !matches!(
            self,
            ModelSpec::GaussVarKnownMean { .. } | ModelSpec::GaussSlopeKnownVar { .. }
        )
    }

    /// Smallest allowed minimum segment length.
    pub fn min_segment_floor(&self) -> usize {
        match self {
            ModelSpec::GaussMeanAndVar => 2,
            _ => 1,
        }
    }

    /// Admissible splits `[lo, hi]` for a series of length `n`.
    pub fn admissible_range(&self, n: usize, minseg: usize) -> Result<(usize, usize)> {
        self.validate()?;
        if minseg == 0 {
            return Err(Error::config("minimum segment length must be at least 1"));
        }
        if minseg < self.min_segment_floor() {
            return Err(Error::config(format!(
                "model {} needs a minimum segment length of at least {}, got {minseg}",
                self.name(),
                self.min_segment_floor()
            )));
        }
        // The slope model has no kink at tau = 1: (i - 1)_+ is itself linear.
        let lo = match self {
            ModelSpec::GaussSlopeKnownVar { .. } => minseg.max(2),
            _ => minseg,
        };
        if n < 2 * minseg || lo > n - minseg {
            return Err(Error::config(format!(
                "no admissible split for n = {n} with minimum segment length {minseg}"
            )));
        }
        Ok((lo, n - minseg))
    }

    /// `LR_tau` over all admissible splits.
    pub fn lr_curve(&self, ts: &TimeSeries, minseg: usize) -> Result<LrCurve> {
        match *self {
            ModelSpec::GaussMeanKnownVar { sigma } => lr_mean_known_var(ts, sigma, minseg),
            ModelSpec::GaussMeanUnknownVar => lr_mean_unknown_var(ts, minseg),
            ModelSpec::PoissonMean => lr_poisson(ts, minseg),
            ModelSpec::GaussVarKnownMean { mu } => lr_variance_known_mean(ts, mu, minseg),
            ModelSpec::GaussMeanAndVar => lr_mean_and_variance(ts, minseg),
            ModelSpec::GaussSlopeKnownVar { sigma } => lr_slope(ts, sigma, minseg),
            ModelSpec::Ar1MeanKnown { phi } => lr_ar1_mean(ts, phi, minseg),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelSpec::GaussMeanKnownVar { sigma } => write!(f, "{}(sigma={sigma})", self.name()),
            ModelSpec::GaussVarKnownMean { mu } => write!(f, "{}(mu={mu})", self.name()),
            ModelSpec::GaussSlopeKnownVar { sigma } => write!(f, "{}(sigma={sigma})", self.name()),
            ModelSpec::Ar1MeanKnown { phi } => write!(f, "{}(phi={phi})", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

/// One LR value: finite, or flagged as infinite because the alternative fits
/// the data exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrValue {
    Finite(f64),
    Infinite,
}

impl LrValue {
    pub fn is_infinite(self) -> bool {
        matches!(self, LrValue::Infinite)
    }

    /// Value as a float, with the infinite flag mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            LrValue::Finite(v) => v,
            LrValue::Infinite => f64::INFINITY,
        }
    }

    /// Whether this value exceeds `threshold`; infinite always does.
    pub fn exceeds(self, threshold: f64) -> bool {
        match self {
            LrValue::Finite(v) => v > threshold,
            LrValue::Infinite => true,
        }
    }
}

/// `LR_tau` for every admissible split of one series under one model.
#[derive(Debug, Clone, PartialEq)]
pub struct LrCurve {
    model: ModelSpec,
    minseg: usize,
    tau_lo: usize,
    // Flagged slots hold +inf; only reachable through `LrValue`.
    values: Vec<f64>,
    infinite: Vec<usize>,
}

impl LrCurve {
    /// Takes raw values for `tau_lo..`, with `+inf` marking exact-fit splits.
    fn from_raw(
        model: ModelSpec,
        minseg: usize,
        tau_lo: usize,
        mut values: Vec<f64>,
    ) -> Result<Self> {
        let mut infinite = Vec::new();
        for (i, v) in values.iter_mut().enumerate() {
            if *v == f64::INFINITY {
                infinite.push(tau_lo + i);
            } else if v.is_nan() {
                return Err(Error::Internal(format!(
                    "{model}: LR at split {} is NaN",
                    tau_lo + i
                )));
            } else if *v < 0.0 {
                if *v < -NEGATIVE_CLAMP {
                    return Err(Error::Internal(format!(
                        "{model}: LR at split {} is {v}",
                        tau_lo + i
                    )));
                }
                *v = 0.0;
            }
        }
        Ok(Self {
            model,
            minseg,
            tau_lo,
            values,
            infinite,
        })
    }

    /// Curve from precomputed values for splits `tau_lo..`; `+inf` marks
    /// exact-fit splits. Values are checked and clamped like any scan output.
    pub fn from_values(
        model: ModelSpec,
        minseg: usize,
        tau_lo: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::from_raw(model, minseg, tau_lo, values)
    }

    pub fn model(&self) -> ModelSpec {
        self.model
    }

    pub fn minseg(&self) -> usize {
        self.minseg
    }

    pub fn tau_lo(&self) -> usize {
        self.tau_lo
    }

    pub fn tau_hi(&self) -> usize {
        self.tau_lo + self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Splits whose LR is flagged infinite, ascending.
    pub fn infinite_taus(&self) -> &[usize] {
        &self.infinite
    }

    pub fn get(&self, tau: usize) -> Option<LrValue> {
        let i = tau.checked_sub(self.tau_lo)?;
        let v = *self.values.get(i)?;
        Some(if v == f64::INFINITY {
            LrValue::Infinite
        } else {
            LrValue::Finite(v)
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, LrValue)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| {
            let lr = if v == f64::INFINITY {
                LrValue::Infinite
            } else {
                LrValue::Finite(v)
            };
            (self.tau_lo + i, lr)
        })
    }

    /// Values as floats (`+inf` at flagged splits), indexed from `tau_lo`.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Split maximising the curve with its value. Flagged splits dominate and
    /// ties resolve to the smallest split.
    pub fn argmax(&self) -> (usize, LrValue) {
        if let Some(&tau) = self.infinite.first() {
            return (tau, LrValue::Infinite);
        }
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (self.tau_lo + best, LrValue::Finite(self.values[best]))
    }

    pub fn max(&self) -> LrValue {
        self.argmax().1
    }
}

fn check_minseg_for(model: &ModelSpec, n: usize, minseg: usize) -> Result<(usize, usize)> {
    model.admissible_range(n, minseg)
}

/// `C_tau^2 / sigma^2`.
pub fn lr_mean_known_var(ts: &TimeSeries, sigma: f64, minseg: usize) -> Result<LrCurve> {
    let model = ModelSpec::GaussMeanKnownVar { sigma };
    let (lo, hi) = check_minseg_for(&model, ts.len(), minseg)?;
    let s = value_prefix(ts.values());
    let n = ts.len();
    let nf = n as f64;
    let inv_var = 1.0 / (sigma * sigma);
    let s_n = s[n];
    let values = (lo..=hi)
        .map(|tau| {
            let t = tau as f64;
            let d = s[tau] - t * s_n / nf;
            d * d * (nf / (t * (nf - t))) * inv_var
        })
        .collect();
    LrCurve::from_raw(model, minseg, lo, values)
}

/// Values minus their (compensated) mean.
fn centered(values: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::default();
    for &v in values {
        acc.add(v);
    }
    let mean = acc.value() / values.len() as f64;
    values.iter().map(|v| v - mean).collect()
}

fn all_equal(values: &[f64]) -> bool {
    values.iter().all(|&v| v == values[0])
}

/// `n log(S^2 / (S^2 - C_tau^2))` with `S^2` the total residual sum of squares.
pub fn lr_mean_unknown_var(ts: &TimeSeries, minseg: usize) -> Result<LrCurve> {
    let model = ModelSpec::GaussMeanUnknownVar;
    let n = ts.len();
    if n < 3 {
        return Err(Error::input(
            "unknown-variance model needs at least 3 values",
        ));
    }
    let (lo, hi) = check_minseg_for(&model, n, minseg)?;
    if all_equal(ts.values()) {
        return Err(Error::degenerate("all values are equal; variance is zero"));
    }
    let y = centered(ts.values());
    let mut acc = CompensatedSum::default();
    for v in &y {
        acc.add(v * v);
    }
    let total = acc.value();
    if total <= 0.0 {
        return Err(Error::degenerate("total residual sum of squares is zero"));
    }
    let s = value_prefix(&y);
    let c = signed_cusum_scan(&s);
    let nf = n as f64;
    let values = (lo..=hi)
        .map(|tau| {
            let c2 = c[tau - 1] * c[tau - 1];
            let rss = total - c2;
            if rss <= RSS_FLOOR_REL * total {
                f64::INFINITY
            } else {
                nf * (total / rss).ln()
            }
        })
        .collect();
    LrCurve::from_raw(model, minseg, lo, values)
}

/// `u log u` with the convention `0 log 0 = 0`.
#[inline]
fn xlogx_sum(sum: f64, len: f64) -> f64 {
    if sum == 0.0 {
        0.0
    } else {
        sum * (sum / len).ln()
    }
}

pub fn lr_poisson(ts: &TimeSeries, minseg: usize) -> Result<LrCurve> {
    let model = ModelSpec::PoissonMean;
    let (lo, hi) = check_minseg_for(&model, ts.len(), minseg)?;
    ts.check_counts()?;
    let n = ts.len();
    // Integer counts: these sums are exact below 2^53.
    let s = value_prefix(ts.values());
    let total = s[n];
    let null = xlogx_sum(total, n as f64);
    let values = (lo..=hi)
        .map(|tau| {
            let left = s[tau];
            let right = total - left;
            2.0 * (xlogx_sum(left, tau as f64) + xlogx_sum(right, (n - tau) as f64) - null)
        })
        .collect();
    LrCurve::from_raw(model, minseg, lo, values)
}

/// Variance-stabilising map `2 sqrt(x + 3/8)` for counts.
pub fn anscombe_transform(ts: &TimeSeries) -> Result<TimeSeries> {
    if let Some(i) = ts.values().iter().position(|&v| v < 0.0) {
        return Err(Error::input(format!(
            "sample {} is negative; the Anscombe transform needs nonnegative data",
            i + 1
        )));
    }
    TimeSeries::new(
        ts.values()
            .iter()
            .map(|x| 2.0 * (x + 0.375).sqrt())
            .collect(),
    )
}

/// Suffix sums: `out[t] = x_{t+1} + ... + x_n` for `t = 0..=n`.
fn suffix_cumulative<I>(values: I, n: usize) -> Vec<f64>
where
    I: DoubleEndedIterator<Item = f64>,
{
    let mut out = cumulative(values.rev(), n);
    out.reverse();
    out
}

/// Shared form `n log S2(1:n) - tau log S2(1:tau) - (n - tau) log S2(tau+1:n)`,
/// from per-prefix and per-suffix sums of squares (`pre[tau]`, `suf[tau]`).
fn variance_scan(
    model: ModelSpec,
    minseg: usize,
    (lo, hi): (usize, usize),
    pre: &[f64],
    suf: &[f64],
    floor: impl Fn(f64, f64) -> bool,
) -> Result<LrCurve> {
    let n = pre.len() - 1;
    let nf = n as f64;
    let total = pre[n];
    let null = nf * (total / nf).ln();
    let values = (lo..=hi)
        .map(|tau| {
            let (t, m) = (tau as f64, (n - tau) as f64);
            let (a, b) = (pre[tau], suf[tau]);
            if floor(a, t) || floor(b, m) {
                f64::INFINITY
            } else {
                null - t * (a / t).ln() - m * (b / m).ln()
            }
        })
        .collect();
    LrCurve::from_raw(model, minseg, lo, values)
}

pub fn lr_variance_known_mean(ts: &TimeSeries, mu: f64, minseg: usize) -> Result<LrCurve> {
    let model = ModelSpec::GaussVarKnownMean { mu };
    let range = check_minseg_for(&model, ts.len(), minseg)?;
    let n = ts.len();
    let sq: Vec<f64> = ts.values().iter().map(|x| (x - mu) * (x - mu)).collect();
    let pre = cumulative(sq.iter().copied(), n);
    if pre[n] <= 0.0 {
        return Err(Error::degenerate(format!(
            "every value equals the known mean {mu}"
        )));
    }
    let suf = suffix_cumulative(sq.iter().copied(), n);
    variance_scan(model, minseg, range, &pre, &suf, |ss, len| {
        ss / len <= VARIANCE_FLOOR
    })
}

/// Residual sums of squares about the running mean for every prefix
/// (Welford's recurrence): `out[t]` covers `x_1..x_t`.
fn running_rss<'a, I>(values: I, n: usize) -> Vec<f64>
where
    I: Iterator<Item = &'a f64>,
{
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for (k, &x) in values.enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
        out.push(m2.max(0.0));
    }
    out
}

pub fn lr_mean_and_variance(ts: &TimeSeries, minseg: usize) -> Result<LrCurve> {
    let model = ModelSpec::GaussMeanAndVar;
    let n = ts.len();
    if n < 4 {
        return Err(Error::input(
            "mean-and-variance model needs at least 4 values",
        ));
    }
    let range = check_minseg_for(&model, n, minseg)?;
    if all_equal(ts.values()) {
        return Err(Error::degenerate("all values are equal; variance is zero"));
    }
    let pre = running_rss(ts.values().iter(), n);
    let mut suf = running_rss(ts.values().iter().rev(), n);
    suf.reverse();
    let total = pre[n];
    let floor = RSS_FLOOR_REL * total;
    variance_scan(model, minseg, range, &pre, &suf, |rss, _| rss <= floor)
}

/// Least-squares residuals of `x` on the line `a + b i`.
fn detrend(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let centre = (n as f64 + 1.0) / 2.0;
    let y = centered(values);
    let mut num = CompensatedSum::default();
    for (i, v) in y.iter().enumerate() {
        num.add((i as f64 + 1.0 - centre) * v);
    }
    let nf = n as f64;
    let sxx = nf * (nf * nf - 1.0) / 12.0;
    let beta = num.value() / sxx;
    y.iter()
        .enumerate()
        .map(|(i, v)| v - beta * (i as f64 + 1.0 - centre))
        .collect()
}

/// `(RSS_null - RSS_alt) / sigma^2` for a kink at `tau` against a single line.
///
/// The residual `r` of the data on `{1, i}` is computed once. For each split
/// the hinge regressor `h` is orthogonalised against the same line, so that
/// the LR is `(h'r)^2 / |h_perp|^2`. The hinge on the shorter side is used
/// (`(tau - i)_+` or `(i - tau)_+`; they differ by a line) to keep the norms
/// well conditioned.
pub fn lr_slope(ts: &TimeSeries, sigma: f64, minseg: usize) -> Result<LrCurve> {
    let model = ModelSpec::GaussSlopeKnownVar { sigma };
    let n = ts.len();
    if n < 4 {
        return Err(Error::input(
            "change-in-slope model needs at least 4 values",
        ));
    }
    let (lo, hi) = check_minseg_for(&model, n, minseg)?;
    let r = detrend(ts.values());
    let p = value_prefix(&r);
    let pi = cumulative(r.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v), n);
    let nf = n as f64;
    let centre = (nf + 1.0) / 2.0;
    let sxx = nf * (nf * nf - 1.0) / 12.0;
    let inv_var = 1.0 / (sigma * sigma);

    let mut values = Vec::with_capacity(hi - lo + 1);
    for tau in lo..=hi {
        let t = tau as f64;
        // Hinge support has m points with weights 1..m.
        let (proj, m, offset) = if 2 * tau <= n {
            // (tau - i)_+ over i < tau: sum (tau - i) r_i.
            let proj = t * p[tau - 1] - pi[tau - 1];
            (proj, (tau - 1) as f64, -(t - centre))
        } else {
            // (i - tau)_+ over i > tau.
            let proj = (pi[n] - pi[tau]) - t * (p[n] - p[tau]);
            (proj, (n - tau) as f64, t - centre)
        };
        let sum_w = m * (m + 1.0) / 2.0;
        let sum_w2 = m * (m + 1.0) * (2.0 * m + 1.0) / 6.0;
        // Inner product of the hinge with the centred index i - centre:
        // sum_j (j + offset) j for the right hinge, -(sum_j j (j - offset)) on the left.
        let cross = if 2 * tau <= n {
            -(sum_w2 + offset * sum_w)
        } else {
            sum_w2 + offset * sum_w
        };
        let norm2 = sum_w2 - sum_w * sum_w / nf - cross * cross / sxx;
        if !(norm2 > RANK_TOL * RANK_TOL * sum_w2) {
            return Err(Error::Internal(format!(
                "slope design is rank deficient at split {tau}"
            )));
        }
        values.push(proj * proj / norm2 * inv_var);
    }
    LrCurve::from_raw(model, minseg, lo, values)
}

/// GLS likelihood ratio for a change in mean under AR(1) noise with unit
/// marginal variance and known coefficient `phi`.
///
/// Works in whitened coordinates `Y_1 = X_1`, `Y_t = (X_t - phi X_{t-1}) / sqrt(1 - phi^2)`,
/// where the noise is IID standard normal. The constant regressor whitens to
/// `a = (1, c, c, ..)` with `c = (1 - phi) / sqrt(1 - phi^2)`; a step regressor
/// whitens to a vector supported on one side of the split plus the split
/// itself. LR is the squared projection of the residual `Y - a (a'Y)/(a'a)`
/// onto the whitened step, normalised by the step's residual norm.
pub fn lr_ar1_mean(ts: &TimeSeries, phi: f64, minseg: usize) -> Result<LrCurve> {
    let model = ModelSpec::Ar1MeanKnown { phi };
    let (lo, hi) = check_minseg_for(&model, ts.len(), minseg)?;
    let n = ts.len();
    let x = ts.values();
    let root = (1.0 - phi * phi).sqrt();
    let c = (1.0 - phi) / root;
    // Whitened step entries at the first post-split point.
    let lead_right = 1.0 / root; // step 1{i > tau}
    let lead_left = -phi / root; // step 1{i <= tau}

    let y: Vec<f64> = (0..n)
        .map(|t| {
            if t == 0 {
                x[0]
            } else {
                (x[t] - phi * x[t - 1]) / root
            }
        })
        .collect();
    let aa = 1.0 + c * c * (n - 1) as f64;
    let mut ay = CompensatedSum::default();
    ay.add(y[0]);
    for &v in &y[1..] {
        ay.add(c * v);
    }
    let beta = ay.value() / aa;
    let r: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(t, v)| v - beta * if t == 0 { 1.0 } else { c })
        .collect();
    let p = value_prefix(&r);

    let mut values = Vec::with_capacity(hi - lo + 1);
    for tau in lo..=hi {
        let (proj, ss, cross) = if 2 * tau <= n {
            // Left step: (1, c, .., c) on 1..tau, then lead_left at tau + 1.
            let k = (tau - 1) as f64;
            let proj = r[0] + c * (p[tau] - p[1]) + lead_left * r[tau];
            let ss = 1.0 + c * c * k + lead_left * lead_left;
            let cross = 1.0 + c * c * k + c * lead_left;
            (proj, ss, cross)
        } else {
            // Right step: lead_right at tau + 1, then c on tau + 2..n.
            let k = (n - tau - 1) as f64;
            let proj = lead_right * r[tau] + c * (p[n] - p[tau + 1]);
            let ss = lead_right * lead_right + c * c * k;
            let cross = c * lead_right + c * c * k;
            (proj, ss, cross)
        };
        let norm2 = ss - cross * cross / aa;
        if !(norm2 > RANK_TOL * RANK_TOL * ss) {
            return Err(Error::Internal(format!(
                "AR(1) step design is rank deficient at split {tau}"
            )));
        }
        values.push(proj * proj / norm2);
    }
    LrCurve::from_raw(model, minseg, lo, values)
}
