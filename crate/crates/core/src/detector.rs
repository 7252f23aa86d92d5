// SPDX-License-Identifier: MIT OR Apache-2.0

//! Turning an LR scan into a decision: detected or not, where, and how large.

use crate::core_stats::{build_prefix, segment_mean, TimeSeries};
use crate::error::{Error, Result};
use crate::lr_models::{LrCurve, LrValue, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    pub model: ModelSpec,
    pub minseg: usize,
    /// Cutoff `c`; a change is declared when `max LR_tau > c`.
    pub threshold: f64,
}

impl DetectionConfig {
    pub fn new(model: ModelSpec, minseg: usize, threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::config(format!(
                "threshold must be nonnegative, got {threshold}"
            )));
        }
        model.validate()?;
        if minseg < model.min_segment_floor() || minseg == 0 {
            return Err(Error::config(format!(
                "model {} needs a minimum segment length of at least {}",
                model.name(),
                model.min_segment_floor().max(1)
            )));
        }
        Ok(Self {
            model,
            minseg,
            threshold,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub detected: bool,
    pub max_lr: LrValue,
    /// Location estimate `argmax LR_tau` (1-based last index of the first segment).
    pub tau_hat: usize,
    /// `mean(X_{tau+1..n}) - mean(X_{1..tau})` at `tau_hat` for level-change models.
    /// Reported whether or not `detected` is set.
    pub delta_hat: Option<f64>,
    pub threshold: f64,
}

pub fn detect(ts: &TimeSeries, config: &DetectionConfig) -> Result<DetectionResult> {
    let curve = config.model.lr_curve(ts, config.minseg)?;
    decide(ts, &curve, config.threshold)
}

/// Decision for an already computed curve.
pub fn decide(ts: &TimeSeries, curve: &LrCurve, threshold: f64) -> Result<DetectionResult> {
    let (tau_hat, max_lr) = curve.argmax();
    let delta_hat = if curve.model().is_mean_type() {
        Some(estimate_delta(ts, tau_hat)?)
    } else {
        None
    };
    Ok(DetectionResult {
        detected: max_lr.exceeds(threshold),
        max_lr,
        tau_hat,
        delta_hat,
        threshold,
    })
}

/// Difference of segment means after and before split `tau`.
pub fn estimate_delta(ts: &TimeSeries, tau: usize) -> Result<f64> {
    let n = ts.len();
    if tau == 0 || tau >= n {
        return Err(Error::index(format!(
            "split {tau} is not within 1..={}",
            n - 1
        )));
    }
    let ps = build_prefix(ts);
    Ok(segment_mean(&ps, tau + 1, n)? - segment_mean(&ps, 1, tau)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn step_is_detected() {
        let cfg =
            DetectionConfig::new(ModelSpec::GaussMeanKnownVar { sigma: 1.0 }, 1, 0.5).unwrap();
        let r = detect(&ts(&[0.0, 0.0, 1.0, 1.0]), &cfg).unwrap();
        assert!(r.detected);
        assert_eq!(r.tau_hat, 2);
        assert_abs_diff_eq!(r.max_lr.to_f64(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.delta_hat.unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(r.threshold, 0.5);
    }

    #[test]
    fn constant_is_not_detected() {
        let n = 50;
        let cfg = DetectionConfig::new(
            ModelSpec::GaussMeanKnownVar { sigma: 1.0 },
            1,
            2.0 * (n as f64).ln(),
        )
        .unwrap();
        let r = detect(&ts(&vec![1.5; n]), &cfg).unwrap();
        assert!(!r.detected);
        assert_eq!(r.tau_hat, 1);
        assert_eq!(r.delta_hat, Some(0.0));
    }

    #[test]
    fn delta_estimates() {
        assert_eq!(estimate_delta(&ts(&[0.0, 0.0, 1.0, 1.0]), 2).unwrap(), 1.0);
        assert_eq!(estimate_delta(&ts(&[2.0; 5]), 3).unwrap(), 0.0);
        assert!(matches!(
            estimate_delta(&ts(&[0.0, 1.0]), 0),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            estimate_delta(&ts(&[0.0, 1.0]), 2),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn infinite_dominates_and_variance_has_no_delta() {
        let cfg = DetectionConfig::new(ModelSpec::GaussMeanUnknownVar, 1, 1e6).unwrap();
        let r = detect(&ts(&[0.0, 0.0, 1.0, 1.0]), &cfg).unwrap();
        assert!(r.detected);
        assert_eq!((r.tau_hat, r.max_lr), (2, LrValue::Infinite));

        let cfg = DetectionConfig::new(ModelSpec::GaussVarKnownMean { mu: 0.0 }, 1, 1.0).unwrap();
        let r = detect(&ts(&[0.1, -0.2, 0.1, 3.0, -4.0, 5.0]), &cfg).unwrap();
        assert!(r.delta_hat.is_none());
    }

    #[test]
    fn config_validation() {
        assert!(DetectionConfig::new(ModelSpec::GaussMeanAndVar, 1, 1.0).is_err());
        assert!(
            DetectionConfig::new(ModelSpec::GaussMeanKnownVar { sigma: 1.0 }, 1, -1.0).is_err()
        );
        assert!(
            DetectionConfig::new(ModelSpec::GaussMeanKnownVar { sigma: -1.0 }, 1, 1.0).is_err()
        );
    }

    #[test]
    fn positive_rescale_keeps_location() {
        let x = [0.3, -0.4, 0.1, 1.9, 2.3, 1.4, 2.0];
        let cfg =
            DetectionConfig::new(ModelSpec::GaussMeanKnownVar { sigma: 1.0 }, 1, 1.0).unwrap();
        let a = detect(&ts(&x), &cfg).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let b = detect(&ts(&scaled), &cfg).unwrap();
        assert_eq!(a.tau_hat, b.tau_hat);
        assert_abs_diff_eq!(b.max_lr.to_f64(), 9.0 * a.max_lr.to_f64(), epsilon = 1e-10);
    }
}
