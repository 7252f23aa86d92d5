// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection and location of a single change-point in a univariate series.
//!
//! The crate is organised bottom-up:
//!
//! * [`core_stats`]: prefix sums, segment means and the CUSUM scan.
//! * [`lr_models`]: O(n) likelihood-ratio scans for seven change models.
//! * [`detector`]: thresholding a scan into a detection, location and size estimate.
//! * [`calibration`]: Monte Carlo, extreme-value and Bonferroni thresholds, power bounds.
//! * [`noise_lab`]: signal and noise generators, robust scale, autocorrelation
//!   corrections and the scaled Brownian bridge.
//! * [`experiments`]: reproducible simulation studies emitting CSV tables.

// Validation uses `!(x > 0.0)` style checks on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod core_stats;
pub mod detector;
pub mod error;
pub mod experiments;
pub mod lr_models;
pub mod noise_lab;
pub mod rng;

pub use core_stats::{
    build_prefix, cusum, cusum_curve, segment_mean, CusumCurve, PrefixSums, TimeSeries,
};

pub use detector::{detect, estimate_delta, DetectionConfig, DetectionResult};
pub use error::{Error, Result};
pub use lr_models::{LrCurve, LrValue, ModelSpec};
