// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection thresholds and power.
//!
//! Thresholds come from three routes: Monte Carlo quantiles of the simulated
//! null maximum, the extreme-value (Gumbel) limit of the maximum CUSUM, and
//! Bonferroni-type bounds. All are on the LR scale, i.e. comparable with
//! `max_tau LR_tau`.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::lr_models::ModelSpec;
use crate::noise_lab::{gen_series_with, NoiseSpec, SignalSpec};
use crate::rng::map_replicates;

/// Replicates used by library calls that do not say otherwise.
pub const DEFAULT_REPS: usize = 10_000;
pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    MonteCarlo { reps: usize, alpha: f64, seed: u64 },
    GumbelAsymptotic { alpha: f64 },
    BonferroniExact { alpha: f64 },
    TwoLogN,
    Fixed(f64),
}

impl ThresholdRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::MonteCarlo { reps, alpha, .. } => {
                check_level(alpha)?;
                if reps < MIN_REPS {
                    return Err(Error::config(format!(
                        "Monte Carlo calibration needs at least {MIN_REPS} replicates, got {reps}"
                    )));
                }
            }
            ThresholdRule::GumbelAsymptotic { alpha } => check_level(alpha)?,
            ThresholdRule::BonferroniExact { alpha } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::config(format!(
                        "level must lie in (0, 1], got {alpha}"
                    )));
                }
            }
            ThresholdRule::Fixed(c) if !(c >= 0.0 && c.is_finite()) => {
                return Err(Error::config(format!(
                    "fixed threshold must be nonnegative, got {c}"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Cutoff on the LR scale for `model` on series of length `n`.
    ///
    /// The analytic rules are derived for a change in mean with known
    /// variance; Monte Carlo simulates the null of `null`.
    pub fn resolve(
        &self,
        model: &ModelSpec,
        n: usize,
        minseg: usize,
        null: &NullModel,
    ) -> Result<f64> {
        self.validate()?;
        match *self {
            ThresholdRule::MonteCarlo { reps, alpha, seed } => {
                let maxima = simulate_null_max(model, n, minseg, null, reps, seed)?;
                empirical_quantile(&maxima, alpha)
            }
            ThresholdRule::GumbelAsymptotic { alpha } => {
                if minseg != 1 {
                    return Err(Error::config(
                        "the Gumbel threshold is only defined without a minimum segment length",
                    ));
                }
                Ok(gumbel_threshold(n, alpha)?.1)
            }
            ThresholdRule::BonferroniExact { alpha } => bonferroni_threshold(n, alpha),
            ThresholdRule::TwoLogN => Ok(two_log_n(n)),
            ThresholdRule::Fixed(c) => Ok(c),
        }
    }
}

fn check_level(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!(
            "level must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// How null data are simulated for Monte Carlo calibration: a flat signal at
/// `level` plus `noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullModel {
    pub level: f64,
    pub noise: NoiseSpec,
}

impl NullModel {
    /// The null the model itself assumes: Gaussian with the model's sd (1
    /// when unknown), the known mean for the variance model, AR(1) with unit
    /// marginal variance, or Poisson with the supplied rate.
    pub fn for_model(model: &ModelSpec, poisson_mean: Option<f64>) -> Result<Self> {
        model.validate()?;
        let unit = NoiseSpec::IidGauss { sigma: 1.0 };
        Ok(match *model {
            ModelSpec::GaussMeanKnownVar { sigma } | ModelSpec::GaussSlopeKnownVar { sigma } => {
                NullModel {
                    level: 0.0,
                    noise: NoiseSpec::IidGauss { sigma },
                }
            }
            ModelSpec::GaussMeanUnknownVar | ModelSpec::GaussMeanAndVar => NullModel {
                level: 0.0,
                noise: unit,
            },
            ModelSpec::GaussVarKnownMean { mu } => NullModel {
                level: mu,
                noise: unit,
            },
            ModelSpec::Ar1MeanKnown { phi } => NullModel {
                level: 0.0,
                noise: NoiseSpec::Ar1 {
                    rho: phi,
                    sigma: 1.0,
                },
            },
            ModelSpec::PoissonMean => {
                let mean = poisson_mean
                    .ok_or_else(|| Error::config("Poisson calibration needs a null mean count"))?;
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(Error::config(format!(
                        "Poisson null mean must be positive, got {mean}"
                    )));
                }
                NullModel {
                    level: mean,
                    noise: NoiseSpec::PoissonCounts,
                }
            }
        })
    }
}

/// `max_tau LR_tau` for `reps` null series. Flagged-infinite maxima are
/// returned as `f64::INFINITY`. Replicate `i` uses its own seeded stream, so
/// the output does not depend on the number of worker threads.
pub fn simulate_null_max(
    model: &ModelSpec,
    n: usize,
    minseg: usize,
    null: &NullModel,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    model.admissible_range(n, minseg)?;
    let signal = SignalSpec::flat(n, null.level);
    map_replicates(seed, reps, |_, rng| {
        let x = gen_series_with(&signal, &null.noise, rng)?;
        match model.lr_curve(&x, minseg) {
            Ok(curve) => Ok(curve.max().to_f64()),
            // A null draw with no spread (e.g. all-zero counts) carries no
            // evidence of change.
            Err(Error::Degenerate(_)) => Ok(0.0),
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect()
}

/// Monte Carlo `(1 - alpha)` quantile of the null maximum LR under the
/// model's own null. Poisson models need [`mc_quantile_with_null`].
pub fn mc_null_quantile(
    model: &ModelSpec,
    n: usize,
    minseg: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    let null = NullModel::for_model(model, None)?;
    mc_quantile_with_null(model, n, minseg, &null, alpha, reps, seed)
}

pub fn mc_quantile_with_null(
    model: &ModelSpec,
    n: usize,
    minseg: usize,
    null: &NullModel,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    ThresholdRule::MonteCarlo { reps, alpha, seed }.validate()?;
    let maxima = simulate_null_max(model, n, minseg, null, reps, seed)?;
    empirical_quantile(&maxima, alpha)
}

/// The `ceil(B (1 - alpha))`-th smallest of `samples` (1-based order statistic).
pub fn empirical_quantile(samples: &[f64], alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    let b = samples.len();
    let target = b as f64 * (1.0 - alpha);
    if target < 1.0 {
        return Err(Error::config(format!(
            "{b} replicates are too few for level {alpha}"
        )));
    }
    // Guard against 0.95 * 10000 landing a hair above 9500.
    let k = ((target - 1e-9).ceil() as usize).clamp(1, b);
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(sorted[k - 1])
}

/// Thresholds from the Gumbel limit of `max_tau C_tau / sigma`:
/// `(c_cusum, c_lr)` with `c_lr = c_cusum^2`.
pub fn gumbel_threshold(n: usize, alpha: f64) -> Result<(f64, f64)> {
    check_level(alpha)?;
    if n < 16 {
        return Err(Error::Domain(format!(
            "Gumbel normalisation needs n >= 16 for the iterated logarithms, got {n}"
        )));
    }
    let loglog = (n as f64).ln().ln();
    let a_n = (2.0 * loglog).powf(-0.5);
    let b_n = 1.0 / a_n + 0.5 * a_n * loglog.ln();
    let u = -((PI.sqrt() / 2.0) * -(1.0 - alpha).ln()).ln();
    let c = b_n + a_n * u;
    Ok((c, c * c))
}

/// Bonferroni threshold solving `(n - 1) P(chi2_1 > c) = alpha`.
pub fn bonferroni_threshold(n: usize, alpha: f64) -> Result<f64> {
    ThresholdRule::BonferroniExact { alpha }.validate()?;
    if n < 2 {
        return Err(Error::config("Bonferroni threshold needs n >= 2"));
    }
    let tail = alpha / (2.0 * (n - 1) as f64);
    if tail >= 0.5 {
        return Ok(0.0);
    }
    let z = -normal_quantile(tail)?;
    Ok(z * z)
}

pub fn two_log_n(n: usize) -> f64 {
    2.0 * (n as f64).ln()
}

/// Non-centrality of `LR_{tau0}` under a change of size `delta` at `q0 = tau0 / n`.
pub fn noncentrality(n: usize, q0: f64, delta: f64) -> Result<f64> {
    if !(q0 > 0.0 && q0 < 1.0) {
        return Err(Error::Domain(format!(
            "change location q0 must lie in (0, 1), got {q0}"
        )));
    }
    Ok(n as f64 * delta * delta / (1.0 / q0 + 1.0 / (1.0 - q0)))
}

/// Lower bound on `P(chi2_1(nu) > k)`; zero where the bound says nothing (`nu <= k - 1`).
pub fn power_lower_bound(nu: f64, k: f64) -> f64 {
    if nu > k - 1.0 {
        let gap = 1.0 + nu - k;
        1.0 - (-(gap * gap) / (4.0 + 8.0 * nu)).exp()
    } else {
        0.0
    }
}

/// `P(chi2_1 > c) = 2 (1 - Phi(sqrt c))`.
pub fn chi2_1_sf(c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::Domain(format!(
            "chi-squared argument must be nonnegative, got {c}"
        )));
    }
    Ok(erfc((c / 2.0).sqrt()))
}

/// Standard normal quantile, Wichura's AS 241 (PPND16).
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    fn poly(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_3,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_61,
        28_729.085_735_721_942_674,
        5_226.495_278_852_854_561,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_77,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        0.689_767_334_985_100_004_55,
        0.148_103_976_427_480_074_59,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        0.296_560_571_828_504_891_23,
        0.026_532_189_526_576_123_093,
        0.001_242_660_947_388_078_438_6,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_69,
        0.136_929_880_922_735_805_31,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return Ok(q * poly(&A, r) / poly(&B, r));
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    Ok(if q < 0.0 { -x } else { x })
}

/// Kolmogorov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
