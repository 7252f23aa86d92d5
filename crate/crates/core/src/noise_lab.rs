// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic data for simulation studies, robust noise-scale estimation,
//! autocorrelation corrections, and the scaled Brownian bridge that describes
//! the law of the CUSUM process under a single change.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal, StudentT};

use crate::core_stats::TimeSeries;
use crate::error::{Error, Result};
use crate::rng::{seeded, StreamRng};

/// Scale factor making the MAD consistent for the Gaussian standard deviation.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Autocorrelations below this magnitude end a long-run variance sum.
const RHO_TRUNCATION: f64 = 1e-12;
const MAX_LAGS: usize = 10_000_000;

/// Mean function of a simulated series.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalSpec {
    /// `changepoints[k]` is the last index of segment `k`; `levels` has one
    /// more entry than `changepoints`.
    PiecewiseConstant {
        n: usize,
        changepoints: Vec<usize>,
        levels: Vec<f64>,
    },
    /// `intercept + slope * i + sum_k delta_k (i - tau_k)_+`.
    PiecewiseLinear {
        n: usize,
        intercept: f64,
        slope: f64,
        kinks: Vec<(usize, f64)>,
    },
}

impl SignalSpec {
    pub fn flat(n: usize, level: f64) -> Self {
        SignalSpec::PiecewiseConstant {
            n,
            changepoints: vec![],
            levels: vec![level],
        }
    }

    /// Level `before` on `1..=tau`, `after` on `tau+1..=n`.
    pub fn step(n: usize, tau: usize, before: f64, after: f64) -> Self {
        SignalSpec::PiecewiseConstant {
            n,
            changepoints: vec![tau],
            levels: vec![before, after],
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SignalSpec::PiecewiseConstant { n, .. } | SignalSpec::PiecewiseLinear { n, .. } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::config(format!(
                "signal length must be at least 2, got {n}"
            )));
        }
        let increasing = |taus: &mut dyn Iterator<Item = usize>| -> Result<()> {
            let mut prev = 0;
            for tau in taus {
                if tau <= prev || tau >= n {
                    return Err(Error::config(format!(
                        "change-points must be strictly increasing within 1..={}",
                        n - 1
                    )));
                }
                prev = tau;
            }
            Ok(())
        };
        match self {
            SignalSpec::PiecewiseConstant {
                changepoints,
                levels,
                ..
            } => {
                increasing(&mut changepoints.iter().copied())?;
                if levels.len() != changepoints.len() + 1 {
                    return Err(Error::config(format!(
                        "{} change-points need {} levels, got {}",
                        changepoints.len(),
                        changepoints.len() + 1,
                        levels.len()
                    )));
                }
                if levels.iter().any(|l| !l.is_finite()) {
                    return Err(Error::config("levels must be finite"));
                }
            }
            SignalSpec::PiecewiseLinear {
                intercept,
                slope,
                kinks,
                ..
            } => {
                increasing(&mut kinks.iter().map(|k| k.0))?;
                if !intercept.is_finite()
                    || !slope.is_finite()
                    || kinks.iter().any(|k| !k.1.is_finite())
                {
                    return Err(Error::config("linear signal parameters must be finite"));
                }
            }
        }
        Ok(())
    }

    /// The noiseless mean `f_1..f_n`.
    pub fn mean_vector(&self) -> Vec<f64> {
        match self {
            SignalSpec::PiecewiseConstant {
                n,
                changepoints,
                levels,
            } => {
                let mut out = Vec::with_capacity(*n);
                let mut seg = 0;
                for i in 1..=*n {
                    while seg < changepoints.len() && i > changepoints[seg] {
                        seg += 1;
                    }
                    out.push(levels[seg]);
                }
                out
            }
            SignalSpec::PiecewiseLinear {
                n,
                intercept,
                slope,
                kinks,
            } => (1..=*n)
                .map(|i| {
                    let i_f = i as f64;
                    let bends: f64 = kinks
                        .iter()
                        .filter(|(tau, _)| i > *tau)
                        .map(|(tau, d)| (i - tau) as f64 * d)
                        .sum();
                    intercept + slope * i_f + bends
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    IidGauss {
        sigma: f64,
    },
    /// Stationary AR(1) with lag-1 autocorrelation `rho` and marginal sd `sigma`.
    Ar1 {
        rho: f64,
        sigma: f64,
    },
    /// `scale * T_df`; the variance is `scale^2 df / (df - 2)`.
    StudentT {
        df: f64,
        scale: f64,
    },
    /// Poisson draws with the signal as the rate.
    PoissonCounts,
}

impl NoiseSpec {
    /// Student-t noise rescaled to have standard deviation `sd`.
    pub fn student_t_unit_variance(df: f64, sd: f64) -> Self {
        NoiseSpec::StudentT {
            df,
            scale: sd * ((df - 2.0) / df).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        // A zero scale is allowed: it yields the exact signal.
        match *self {
            NoiseSpec::IidGauss { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => Err(
                Error::config(format!("noise sd must be nonnegative, got {sigma}")),
            ),
            NoiseSpec::Ar1 { rho, sigma } => {
                if !(rho.abs() < 1.0) {
                    Err(Error::config(format!("AR(1) needs |rho| < 1, got {rho}")))
                } else if !(sigma >= 0.0 && sigma.is_finite()) {
                    Err(Error::config(format!(
                        "noise sd must be nonnegative, got {sigma}"
                    )))
                } else {
                    Ok(())
                }
            }
            NoiseSpec::StudentT { df, scale } => {
                if !(df > 2.0 && df.is_finite()) {
                    Err(Error::config(format!(
                        "Student-t noise needs df > 2, got {df}"
                    )))
                } else if !(scale >= 0.0 && scale.is_finite()) {
                    Err(Error::config(format!(
                        "noise scale must be nonnegative, got {scale}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// `X_i = f_i + e_i` (or Poisson draws with rate `f_i`), deterministic in `seed`.
pub fn gen_series(signal: &SignalSpec, noise: &NoiseSpec, seed: u64) -> Result<TimeSeries> {
    gen_series_with(signal, noise, &mut seeded(seed))
}

pub fn gen_series_with(
    signal: &SignalSpec,
    noise: &NoiseSpec,
    rng: &mut StreamRng,
) -> Result<TimeSeries> {
    signal.validate()?;
    noise.validate()?;
    let mut x = signal.mean_vector();
    let n = x.len();
    match *noise {
        NoiseSpec::IidGauss { sigma } => {
            for v in &mut x {
                let z: f64 = rng.sample(StandardNormal);
                *v += sigma * z;
            }
        }
        NoiseSpec::Ar1 { rho, sigma } => {
            for (v, e) in x.iter_mut().zip(ar1_noise(n, rho, sigma, rng)) {
                *v += e;
            }
        }
        NoiseSpec::StudentT { df, scale } => {
            let t = StudentT::new(df).map_err(|e| Error::config(e.to_string()))?;
            for v in &mut x {
                *v += scale * t.sample(rng);
            }
        }
        NoiseSpec::PoissonCounts => {
            if !matches!(signal, SignalSpec::PiecewiseConstant { .. }) {
                return Err(Error::config(
                    "Poisson counts need a piecewise-constant rate",
                ));
            }
            if x.iter().any(|&l| !(l > 0.0)) {
                return Err(Error::config("Poisson rates must be positive"));
            }
            for v in &mut x {
                let p = Poisson::new(*v).map_err(|e| Error::config(e.to_string()))?;
                *v = p.sample(rng);
            }
        }
    }
    TimeSeries::new(x)
}

/// Stationary AR(1) noise of length `n`, deterministic in `seed`.
pub fn gen_ar1(n: usize, rho: f64, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    NoiseSpec::Ar1 { rho, sigma }.validate()?;
    Ok(ar1_noise(n, rho, sigma, &mut seeded(seed)))
}

/// `e_1 ~ N(0, sigma^2)`, `e_t = rho e_{t-1} + sigma sqrt(1 - rho^2) eta_t`.
pub fn ar1_noise(n: usize, rho: f64, sigma: f64, rng: &mut StreamRng) -> Vec<f64> {
    let innov = sigma * (1.0 - rho * rho).sqrt();
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    for t in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let e = if t == 0 {
            sigma * z
        } else {
            rho * prev + innov * z
        };
        out.push(e);
        prev = e;
    }
    out
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub sigma: f64,
    /// Set when the estimate is zero (constant or exactly linear data).
    pub degenerate: bool,
}

/// Noise sd from the MAD of first differences: `1.4826 MAD(diff X) / sqrt(2)`.
pub fn mad_sigma(ts: &TimeSeries) -> Result<SigmaEstimate> {
    let x = ts.values();
    if x.len() < 3 {
        return Err(Error::input("MAD scale estimate needs at least 3 values"));
    }
    let mut z: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let m = median_in_place(&mut z.clone());
    for v in &mut z {
        *v = (*v - m).abs();
    }
    let mad = median_in_place(&mut z);
    let sigma = MAD_CONSISTENCY * mad / std::f64::consts::SQRT_2;
    Ok(SigmaEstimate {
        sigma,
        degenerate: sigma == 0.0,
    })
}

/// Threshold inflation for AR(1) noise: `sqrt((1 + rho) / (1 - rho))`.
pub fn ar1_inflation(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "AR(1) inflation needs |rho| < 1, got {rho}"
        )));
    }
    Ok(((1.0 + rho) / (1.0 - rho)).sqrt())
}

/// `sqrt(1 + 2 sum_{h>=1} rho_h)` for autocorrelations `rho_1, rho_2, ..`.
///
/// The sum stops at the first `|rho_h| < 1e-12` or when the sequence ends.
pub fn longrun_inflation<I>(rhos: I) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
{
    let mut total = 0.0;
    let mut terms = 0usize;
    for rho in rhos {
        if !rho.is_finite() {
            return Err(Error::Domain("autocorrelation is not finite".into()));
        }
        if rho.abs() < RHO_TRUNCATION {
            break;
        }
        total += rho;
        terms += 1;
        if terms > MAX_LAGS {
            return Err(Error::Domain(format!(
                "autocorrelations still above {RHO_TRUNCATION} after {MAX_LAGS} lags; sum treated as divergent"
            )));
        }
    }
    let factor = 1.0 + 2.0 * total;
    if !(factor > 0.0) {
        return Err(Error::Domain(format!(
            "long-run variance factor {factor} is not positive"
        )));
    }
    Ok(factor.sqrt())
}

/// Drift of the CUSUM process: `q (1 - q0)` up to `q0`, `(1 - q) q0` after.
pub fn bridge_drift(q: f64, q0: f64) -> f64 {
    if q <= q0 {
        q * (1.0 - q0)
    } else {
        (1.0 - q) * q0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeParams {
    pub n: usize,
    pub delta: f64,
    pub q0: f64,
}

impl BridgeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("bridge grid needs n >= 2"));
        }
        if !(self.q0 > 0.0 && self.q0 < 1.0) {
            return Err(Error::config(format!(
                "q0 must lie in (0, 1), got {}",
                self.q0
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::config("delta must be finite"));
        }
        Ok(())
    }
}

/// Scaled bridge `(sqrt(n) delta mu(t) + W0(t)) / sqrt(t (1 - t))` on `t = i/n`, `i = 1..n-1`.
pub fn simulate_scaled_bridge(n: usize, delta: f64, q0: f64, seed: u64) -> Result<Vec<f64>> {
    scaled_bridge_with(&BridgeParams { n, delta, q0 }, &mut seeded(seed))
}

pub fn scaled_bridge_with(p: &BridgeParams, rng: &mut StreamRng) -> Result<Vec<f64>> {
    p.validate()?;
    let n = p.n;
    let nf = n as f64;
    let step_sd = (1.0 / nf).sqrt();
    // Brownian motion on the grid, then pin the end: W0(t) = W(t) - t W(1).
    let mut w = Vec::with_capacity(n + 1);
    w.push(0.0);
    let mut acc = 0.0;
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        acc += step_sd * z;
        w.push(acc);
    }
    let w1 = w[n];
    let drift_scale = nf.sqrt() * p.delta;
    Ok((1..n)
        .map(|i| {
            let t = i as f64 / nf;
            let w0 = w[i] - t * w1;
            (drift_scale * bridge_drift(t, p.q0) + w0) / (t * (1.0 - t)).sqrt()
        })
        .collect())
}
