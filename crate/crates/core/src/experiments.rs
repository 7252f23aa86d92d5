// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation studies E1-E13, each producing a tidy [`ResultTable`].
//!
//! Every random quantity is drawn from a stream derived from the request's
//! master seed, so a table is a pure function of `(id, overrides, seed)`.
//! Default replicate counts keep each study within a few minutes on one
//! core; [`ExperimentRequest::full_scale`] raises them.
//!
//! Column layouts:
//!
//! | id  | columns |
//! |-----|---------|
//! | E1  | n, alpha, monte_carlo, gumbel, two_log_n, bonferroni |
//! | E2  | threshold, bin_lo, bin_hi, count, fraction |
//! | E3  | n, alpha, minseg_fraction, minseg, threshold |
//! | E4  | delta, nu, threshold, power_bound, empirical_power |
//! | E5  | scenario, n, delta, kind, replicate, tau, value |
//! | E6  | scenario, n, delta, threshold, detection_rate, mean_delta_hat, overestimation_pct, mean_delta_hat_all |
//! | E7  | panel, tau, lr, expected_lr, mean_lr, is_changepoint |
//! | E8  | rho, inflation, naive_threshold, inflated_threshold, fp_naive, fp_inflated |
//! | E9  | noise, minseg, threshold, fp_rate, bin_lo, bin_hi, count, frequency |
//! | E10 | section, index, poisson, gaussian, gaussian_anscombe |
//! | E11 | section, tau, prob, empirical, reference |
//! | E12 | rho, threshold_lr, threshold_cusum, power_lr, power_cusum, mae_lr, mae_cusum |
//! | E13 | section, tau, a, b |

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::calibration::{
    bonferroni_threshold, empirical_quantile, gumbel_threshold, noncentrality, power_lower_bound,
    two_log_n,
};
use crate::core_stats::{cusum_curve, TimeSeries};
use crate::detector::estimate_delta;
use crate::error::{Error, Result};
use crate::lr_models::{
    anscombe_transform, lr_ar1_mean, lr_mean_and_variance, lr_mean_known_var, lr_poisson, lr_slope,
    LrCurve, ModelSpec,
};
use crate::noise_lab::{ar1_inflation, gen_series_with, NoiseSpec, SignalSpec};
use crate::rng::{derive, map_replicates, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
    E9,
    E10,
    E11,
    E12,
    E13,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 13] = [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::E4,
        ExperimentId::E5,
        ExperimentId::E6,
        ExperimentId::E7,
        ExperimentId::E8,
        ExperimentId::E9,
        ExperimentId::E10,
        ExperimentId::E11,
        ExperimentId::E12,
        ExperimentId::E13,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            ExperimentId::E1 => {
                "null thresholds against n: Monte Carlo, Gumbel, 2 log n, Bonferroni"
            }
            ExperimentId::E2 => "locations of false positives under the null",
            ExperimentId::E3 => "Monte Carlo thresholds against minimum segment length",
            ExperimentId::E4 => "power lower bound against change size",
            ExperimentId::E5 => "CUSUM realisations and location estimates under a change",
            ExperimentId::E6 => "bias of the size-of-change estimate after detection",
            ExperimentId::E7 => "single-change scan on a signal with three changes",
            ExperimentId::E8 => "false positives of the CUSUM test under AR(1) noise",
            ExperimentId::E9 => {
                "false-positive locations under t noise, with and without a minimum segment"
            }
            ExperimentId::E10 => "Poisson against Gaussian change-in-mean tests on counts",
            ExperimentId::E11 => "null behaviour of the mean-and-variance test",
            ExperimentId::E12 => "AR(1) likelihood ratio against the naive CUSUM test",
            ExperimentId::E13 => "change-in-slope scans: smoothness and two-kink misplacement",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.to_string() == up)
            .ok_or_else(|| Error::config(format!("unknown experiment id '{s}' (expected E1..E13)")))
    }
}

/// Optional parameter overrides; each experiment accepts a subset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    /// Simulated data sets per configuration.
    pub reps: Option<usize>,
    /// Null replicates for Monte Carlo thresholds.
    pub calib_reps: Option<usize>,
    pub delta: Option<f64>,
    pub q0: Option<f64>,
    pub rho: Option<f64>,
    pub df: Option<f64>,
    pub minseg: Option<usize>,
    pub alpha: Option<f64>,
    /// Poisson rate for the single-series curve of E10.
    pub null_mean: Option<f64>,
    /// E9: rescale t noise to unit variance instead of the raw t scale (default false).
    pub t_unit_variance: Option<bool>,
}

impl Overrides {
    fn set_names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! note {
            ($($f:ident),*) => { $( if self.$f.is_some() { out.push(stringify!($f)); } )* };
        }
        note!(
            n,
            reps,
            calib_reps,
            delta,
            q0,
            rho,
            df,
            minseg,
            alpha,
            null_mean,
            t_unit_variance
        );
        out
    }

    fn only(&self, id: ExperimentId, allowed: &[&str]) -> Result<()> {
        for name in self.set_names() {
            if !allowed.contains(&name) {
                return Err(Error::config(format!(
                    "{id} does not take '{name}'; allowed overrides: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRequest {
    pub id: ExperimentId,
    pub overrides: Overrides,
    pub seed: u64,
    /// Use larger replicate counts instead of the quick defaults.
    pub full_scale: bool,
}

impl ExperimentRequest {
    pub fn new(id: ExperimentId, seed: u64) -> Self {
        Self {
            id,
            overrides: Overrides::default(),
            seed,
            full_scale: false,
        }
    }

    pub fn with(mut self, overrides: Overrides) -> Self {
        self.overrides = overrides;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// Rows with a fixed set of columns, plus provenance key/value pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    footer: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Internal(format!(
                "row has {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn footer(&self) -> &[(String, String)] {
        &self.footer
    }

    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows whose text column `key` equals `value`.
    pub fn rows_where<'a>(
        &'a self,
        key: &str,
        value: &'a str,
    ) -> impl Iterator<Item = &'a Vec<Cell>> + 'a {
        let idx = self.column_index(key);
        self.rows
            .iter()
            .filter(move |r| idx.and_then(|i| r[i].as_str()) == Some(value))
    }

    /// Numeric value of `column` in `row`.
    pub fn get_f64(&self, row: &[Cell], column: &str) -> Option<f64> {
        self.column_index(column).and_then(|i| row[i].as_f64())
    }

    fn add_footer(&mut self, key: &str, value: impl ToString) {
        self.footer.push((key.to_string(), value.to_string()));
    }

    /// RFC 4180 CSV with a header row, followed by `# key=value` provenance lines.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        let mut out = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        for (k, v) in &self.footer {
            write!(out, "# {k}={v}\r\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// The statistic applied to the noiseless mean of `signal`.
///
/// For the known-variance Gaussian mean model this is the squared CUSUM of
/// the mean function; `E[LR_tau]` is that value plus one. For log-based
/// statistics it is an approximation of the expectation.
pub fn expected_lr_curve(signal: &SignalSpec, model: &ModelSpec, minseg: usize) -> Result<LrCurve> {
    signal.validate()?;
    let f = TimeSeries::new(signal.mean_vector())?;
    match model {
        ModelSpec::GaussMeanKnownVar { .. }
        | ModelSpec::GaussSlopeKnownVar { .. }
        | ModelSpec::Ar1MeanKnown { .. } => model.lr_curve(&f, minseg),
        ModelSpec::PoissonMean => {
            if !matches!(signal, SignalSpec::PiecewiseConstant { .. })
                || f.values().iter().any(|&v| v < 0.0)
            {
                return Err(Error::config(
                    "Poisson mean curve needs a nonnegative piecewise-constant rate",
                ));
            }
            let s = crate::core_stats::value_prefix(f.values());
            let n = f.len();
            let (lo, hi) = model.admissible_range(n, minseg)?;
            let xlogx = |sum: f64, len: f64| {
                if sum == 0.0 {
                    0.0
                } else {
                    sum * (sum / len).ln()
                }
            };
            let null = xlogx(s[n], n as f64);
            let vals: Vec<f64> = (lo..=hi)
                .map(|t| {
                    let v =
                        2.0 * (xlogx(s[t], t as f64) + xlogx(s[n] - s[t], (n - t) as f64) - null);
                    v.max(0.0)
                })
                .collect();
            LrCurve::from_values(*model, minseg, lo, vals)
        }
        _ => Err(Error::config(format!(
            "model {} has no noiseless analogue: its statistic needs residual variation",
            model.name()
        ))),
    }
}

/// Run one study.
pub fn run_experiment(req: &ExperimentRequest) -> Result<ResultTable> {
    let ctx = Ctx {
        req,
        params: Vec::new(),
    };
    let (mut table, params) = match req.id {
        ExperimentId::E1 => e1(ctx)?,
        ExperimentId::E2 => e2(ctx)?,
        ExperimentId::E3 => e3(ctx)?,
        ExperimentId::E4 => e4(ctx)?,
        ExperimentId::E5 => e5(ctx)?,
        ExperimentId::E6 => e6(ctx)?,
        ExperimentId::E7 => e7(ctx)?,
        ExperimentId::E8 => e8(ctx)?,
        ExperimentId::E9 => e9(ctx)?,
        ExperimentId::E10 => e10(ctx)?,
        ExperimentId::E11 => e11(ctx)?,
        ExperimentId::E12 => e12(ctx)?,
        ExperimentId::E13 => e13(ctx)?,
    };
    table.add_footer("experiment", req.id);
    table.add_footer("description", req.id.describe());
    table.add_footer("seed", req.seed);
    table.add_footer("full_scale", req.full_scale);
    for (k, v) in params {
        table.add_footer(&format!("param.{k}"), v);
    }
    table.add_footer(
        "version",
        concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
    );
    Ok(table)
}

/// Resolves overrides against defaults and records what was used.
struct Ctx<'a> {
    req: &'a ExperimentRequest,
    params: Vec<(String, String)>,
}

impl Ctx<'_> {
    fn o(&self) -> &Overrides {
        &self.req.overrides
    }

    fn note(&mut self, key: &str, value: impl fmt::Display) {
        self.params.push((key.to_string(), value.to_string()));
    }

    fn allow(&self, names: &[&str]) -> Result<()> {
        self.o().only(self.req.id, names)
    }

    /// Replicate count: override, else the quick or full-scale default.
    fn reps(
        &mut self,
        key: &str,
        value: Option<usize>,
        desk: usize,
        full: usize,
        min: usize,
    ) -> Result<usize> {
        let v = value.unwrap_or(if self.req.full_scale { full } else { desk });
        if v < min {
            return Err(Error::config(format!(
                "{key} must be at least {min}, got {v}"
            )));
        }
        self.note(key, v);
        Ok(v)
    }

    fn calib_reps(&mut self, desk: usize) -> Result<usize> {
        let v = self.o().calib_reps;
        self.reps("calib_reps", v, desk, 10_000, crate::calibration::MIN_REPS)
    }

    fn alpha(&mut self, default: f64) -> Result<f64> {
        let a = self.o().alpha.unwrap_or(default);
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {a}")));
        }
        self.note("alpha", a);
        Ok(a)
    }

    fn n(&mut self, default: usize, min: usize) -> Result<usize> {
        let n = self.o().n.unwrap_or(default);
        if n < min {
            return Err(Error::config(format!("n must be at least {min}, got {n}")));
        }
        self.note("n", n);
        Ok(n)
    }

    fn q0(&mut self, default: f64) -> Result<f64> {
        let q = self.o().q0.unwrap_or(default);
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::config(format!("q0 must lie in (0, 1), got {q}")));
        }
        self.note("q0", q);
        Ok(q)
    }

    fn seed(&self, tag: u64) -> u64 {
        derive(self.req.seed, tag)
    }

    fn finish(self, table: ResultTable) -> Result<(ResultTable, Vec<(String, String)>)> {
        Ok((table, self.params))
    }
}

type Output = Result<(ResultTable, Vec<(String, String)>)>;

const UNIT: NoiseSpec = NoiseSpec::IidGauss { sigma: 1.0 };
const MEAN_MODEL: ModelSpec = ModelSpec::GaussMeanKnownVar { sigma: 1.0 };

fn gauss(signal: &SignalSpec, rng: &mut StreamRng) -> Result<TimeSeries> {
    gen_series_with(signal, &UNIT, rng)
}

/// Null maxima of the known-variance mean scan for each minimum segment length.
fn null_max_by_minseg(
    n: usize,
    minsegs: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let signal = SignalSpec::flat(n, 0.0);
    let per_rep: Vec<Result<Vec<f64>>> = map_replicates(seed, reps, |_, rng| {
        let x = gauss(&signal, rng)?;
        let curve = lr_mean_known_var(&x, 1.0, 1)?;
        let lr = curve.to_f64_vec();
        Ok(minsegs
            .iter()
            .map(|&m| lr[m - 1..n - m].iter().copied().fold(0.0, f64::max))
            .collect())
    });
    let per_rep: Vec<Vec<f64>> = per_rep.into_iter().collect::<Result<_>>()?;
    Ok((0..minsegs.len())
        .map(|j| per_rep.iter().map(|r| r[j]).collect())
        .collect())
}

fn mean_threshold(n: usize, minseg: usize, alpha: f64, reps: usize, seed: u64) -> Result<f64> {
    let maxima = null_max_by_minseg(n, &[minseg], reps, seed)?;
    empirical_quantile(&maxima[0], alpha)
}

fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

/// Histogram of `tau / n` over `bins` equal bins on `(0, 1)`.
fn location_histogram(taus: &[usize], n: usize, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &t in taus {
        let b = ((t as f64 / n as f64) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    counts
}

fn e1(mut c: Ctx) -> Output {
    c.allow(&["n", "alpha", "calib_reps"])?;
    let ns: Vec<usize> = match c.o().n {
        Some(n) if n < 16 => return Err(Error::config("E1 needs n >= 16")),
        Some(n) => vec![n],
        None => vec![100, 200, 500, 1000, 2000, 5000, 10_000],
    };
    let alphas: Vec<f64> = match c.o().alpha {
        Some(a) => vec![a],
        None => vec![0.05, 0.01, 0.001],
    };
    let b = c.calib_reps(2_000)?;
    c.note("n_grid", format!("{ns:?}"));
    c.note("alpha_grid", format!("{alphas:?}"));
    let mut t = ResultTable::new(&[
        "n",
        "alpha",
        "monte_carlo",
        "gumbel",
        "two_log_n",
        "bonferroni",
    ]);
    for &n in &ns {
        let maxima = null_max_by_minseg(n, &[1], b, c.seed(n as u64))?;
        for &a in &alphas {
            t.push(vec![
                n.into(),
                a.into(),
                empirical_quantile(&maxima[0], a)?.into(),
                gumbel_threshold(n, a)?.1.into(),
                two_log_n(n).into(),
                bonferroni_threshold(n, a)?.into(),
            ])?;
        }
    }
    c.finish(t)
}

fn e2(mut c: Ctx) -> Output {
    c.allow(&["n", "reps", "calib_reps", "alpha", "minseg"])?;
    let n = c.n(10_000, 4)?;
    let alpha = c.alpha(0.05)?;
    let minseg = c.o().minseg.unwrap_or(1);
    c.note("minseg", minseg);
    let b = c.calib_reps(2_000)?;
    let v = c.o().reps;
    let reps = c.reps("reps", v, 20_000, 100_000, 1)?;
    MEAN_MODEL.admissible_range(n, minseg)?;
    let threshold = mean_threshold(n, minseg, alpha, b, c.seed(1))?;
    let signal = SignalSpec::flat(n, 0.0);
    let hits: Vec<Result<Option<usize>>> = map_replicates(c.seed(2), reps, |_, rng| {
        let x = gauss(&signal, rng)?;
        let (tau, v) = lr_mean_known_var(&x, 1.0, minseg)?.argmax();
        Ok(v.exceeds(threshold).then_some(tau))
    });
    let taus: Vec<usize> = hits
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let bins = 20;
    let counts = location_histogram(&taus, n, bins);
    let mut t = ResultTable::new(&["threshold", "bin_lo", "bin_hi", "count", "fraction"]);
    for (i, &k) in counts.iter().enumerate() {
        t.push(vec![
            threshold.into(),
            (i as f64 / bins as f64).into(),
            ((i + 1) as f64 / bins as f64).into(),
            k.into(),
            if taus.is_empty() {
                Cell::Empty
            } else {
                fraction(k, taus.len()).into()
            },
        ])?;
    }
    c.note("detections", taus.len());
    c.finish(t)
}

fn e3(mut c: Ctx) -> Output {
    c.allow(&["n", "alpha", "calib_reps"])?;
    let ns: Vec<usize> = match c.o().n {
        Some(n) if n < 4 => return Err(Error::config("E3 needs n >= 4")),
        Some(n) => vec![n],
        None => vec![100, 1000, 10_000],
    };
    let alpha = c.alpha(0.01)?;
    let b = c.calib_reps(5_000)?;
    let fractions = [0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4];
    c.note("n_grid", format!("{ns:?}"));
    let mut t = ResultTable::new(&["n", "alpha", "minseg_fraction", "minseg", "threshold"]);
    for &n in &ns {
        let minsegs: Vec<usize> = fractions
            .iter()
            .map(|f| ((f * n as f64).round() as usize).clamp(1, n / 2))
            .collect();
        let maxima = null_max_by_minseg(n, &minsegs, b, c.seed(n as u64))?;
        for ((f, m), sample) in fractions.iter().zip(&minsegs).zip(&maxima) {
            t.push(vec![
                n.into(),
                alpha.into(),
                (*f).into(),
                (*m).into(),
                empirical_quantile(sample, alpha)?.into(),
            ])?;
        }
    }
    c.finish(t)
}

fn e4(mut c: Ctx) -> Output {
    c.allow(&["n", "q0", "alpha", "delta", "calib_reps", "reps"])?;
    let n = c.n(1000, 4)?;
    let q0 = c.q0(0.5)?;
    let alpha = c.alpha(0.01)?;
    let b = c.calib_reps(5_000)?;
    let v = c.o().reps;
    let reps = c.reps("reps", v, 500, 2_000, 0)?;
    let deltas: Vec<f64> = match c.o().delta {
        Some(d) => vec![d],
        None => (0..=60).map(|i| i as f64 / 100.0).collect(),
    };
    let k = mean_threshold(n, 1, alpha, b, c.seed(1))?;
    let tau0 = ((q0 * n as f64).round() as usize).clamp(1, n - 1);
    c.note("tau0", tau0);
    let mut t = ResultTable::new(&["delta", "nu", "threshold", "power_bound", "empirical_power"]);
    for (i, &d) in deltas.iter().enumerate() {
        let nu = noncentrality(n, q0, d)?;
        let empirical = if reps == 0 {
            None
        } else {
            let signal = SignalSpec::step(n, tau0, 0.0, d);
            let hits: Vec<Result<bool>> = map_replicates(c.seed(100 + i as u64), reps, |_, rng| {
                Ok(lr_mean_known_var(&gauss(&signal, rng)?, 1.0, 1)?
                    .max()
                    .exceeds(k))
            });
            let hits = hits.into_iter().collect::<Result<Vec<_>>>()?;
            Some(fraction(hits.iter().filter(|&&h| h).count(), reps))
        };
        t.push(vec![
            d.into(),
            nu.into(),
            k.into(),
            power_lower_bound(nu, k).into(),
            empirical.into(),
        ])?;
    }
    c.finish(t)
}

fn e5(mut c: Ctx) -> Output {
    c.allow(&["q0", "reps"])?;
    let q0 = c.q0(0.4)?;
    let v = c.o().reps;
    let reps = c.reps("reps", v, 1_000, 10_000, 25)?;
    let scenarios = [(100usize, 1.0f64), (400, 1.0), (100, 2.0)];
    let shown = 25;
    let mut t = ResultTable::new(&[
        "scenario",
        "n",
        "delta",
        "kind",
        "replicate",
        "tau",
        "value",
    ]);
    for (si, &(n, delta)) in scenarios.iter().enumerate() {
        let tau0 = ((q0 * n as f64).round() as usize).clamp(1, n - 1);
        let signal = SignalSpec::step(n, tau0, 0.0, delta);
        let label = format!("n={n},delta={delta}");
        let mean = cusum_curve(&TimeSeries::new(signal.mean_vector())?);
        for (i, v) in mean.c().iter().enumerate() {
            t.push(vec![
                label.as_str().into(),
                n.into(),
                delta.into(),
                "mean".into(),
                Cell::Empty,
                (i + 1).into(),
                (*v).into(),
            ])?;
        }
        let runs: Vec<Result<(Vec<f64>, usize, f64)>> =
            map_replicates(c.seed(si as u64), reps, |_, rng| {
                let curve = cusum_curve(&gauss(&signal, rng)?);
                let tau = curve.argmax();
                let top = curve.c()[tau - 1];
                Ok((curve.c().to_vec(), tau, top))
            });
        for (r, run) in runs.into_iter().enumerate() {
            let (curve, tau, top) = run?;
            if r < shown {
                for (i, v) in curve.iter().enumerate() {
                    t.push(vec![
                        label.as_str().into(),
                        n.into(),
                        delta.into(),
                        "realization".into(),
                        r.into(),
                        (i + 1).into(),
                        (*v).into(),
                    ])?;
                }
            }
            t.push(vec![
                label.as_str().into(),
                n.into(),
                delta.into(),
                "tau_hat".into(),
                r.into(),
                tau.into(),
                top.into(),
            ])?;
        }
    }
    c.finish(t)
}

fn e6(mut c: Ctx) -> Output {
    c.allow(&["reps", "calib_reps", "alpha", "q0"])?;
    let v = c.o().reps;
    let reps = c.reps("reps", v, 10_000, 10_000, 1)?;
    let b = c.calib_reps(10_000)?;
    let alpha = c.alpha(0.05)?;
    let q0 = c.q0(0.5)?;
    let scenarios = [("i", 100usize, 0.5f64), ("ii", 400, 0.5), ("iii", 100, 1.0)];
    let mut t = ResultTable::new(&[
        "scenario",
        "n",
        "delta",
        "threshold",
        "detection_rate",
        "mean_delta_hat",
        "overestimation_pct",
        "mean_delta_hat_all",
    ]);
    for (si, &(name, n, delta)) in scenarios.iter().enumerate() {
        let threshold = mean_threshold(n, 1, alpha, b, c.seed(10 + si as u64))?;
        let tau0 = ((q0 * n as f64).round() as usize).clamp(1, n - 1);
        let signal = SignalSpec::step(n, tau0, 0.0, delta);
        let runs: Vec<Result<(bool, f64)>> =
            map_replicates(c.seed(20 + si as u64), reps, |_, rng| {
                let x = gauss(&signal, rng)?;
                let (tau, v) = lr_mean_known_var(&x, 1.0, 1)?.argmax();
                Ok((v.exceeds(threshold), estimate_delta(&x, tau)?))
            });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let detected: Vec<f64> = runs.iter().filter(|r| r.0).map(|r| r.1).collect();
        let mean_det = if detected.is_empty() {
            None
        } else {
            Some(detected.iter().sum::<f64>() / detected.len() as f64)
        };
        let mean_all = runs.iter().map(|r| r.1).sum::<f64>() / reps as f64;
        t.push(vec![
            name.into(),
            n.into(),
            delta.into(),
            threshold.into(),
            fraction(detected.len(), reps).into(),
            mean_det.into(),
            mean_det.map(|m| 100.0 * (m / delta - 1.0)).into(),
            mean_all.into(),
        ])?;
    }
    c.finish(t)
}

/// Piecewise-constant signal with three changes used by E7.
pub fn three_change_signal() -> SignalSpec {
    SignalSpec::PiecewiseConstant {
        n: 600,
        changepoints: vec![150, 300, 450],
        levels: vec![0.0, 1.5, 0.5, 1.25],
    }
}

fn e7(c: Ctx) -> Output {
    c.allow(&[])?;
    let signal = three_change_signal();
    let (cps, levels) = match &signal {
        SignalSpec::PiecewiseConstant {
            changepoints,
            levels,
            ..
        } => (changepoints.clone(), levels.clone()),
        _ => unreachable!(),
    };
    let full_x = gen_series_with(&signal, &UNIT, &mut crate::rng::replicate(c.seed(1), 0))?;
    // Second panel: the first two segments only.
    let head_n = cps[1];
    let head = SignalSpec::PiecewiseConstant {
        n: head_n,
        changepoints: vec![cps[0]],
        levels: levels[..2].to_vec(),
    };
    let head_x = TimeSeries::new(full_x.values()[..head_n].to_vec())?;
    let mut t = ResultTable::new(&[
        "panel",
        "tau",
        "lr",
        "expected_lr",
        "mean_lr",
        "is_changepoint",
    ]);
    for (panel, sig, x, cp) in [
        ("full", &signal, &full_x, &cps[..]),
        ("first_two", &head, &head_x, &cps[..1]),
    ] {
        let lr = lr_mean_known_var(x, 1.0, 1)?;
        let expected = expected_lr_curve(sig, &MEAN_MODEL, 1)?;
        for ((tau, v), (_, e)) in lr.iter().zip(expected.iter()) {
            let e = e.to_f64();
            t.push(vec![
                panel.into(),
                tau.into(),
                v.to_f64().into(),
                e.into(),
                (e + 1.0).into(),
                cp.contains(&tau).into(),
            ])?;
        }
    }
    c.finish(t)
}

fn e8(mut c: Ctx) -> Output {
    c.allow(&["n", "reps", "calib_reps", "alpha", "rho"])?;
    let n = c.n(1000, 4)?;
    let v = c.o().reps;
    let reps = c.reps("reps", v, 2_000, 2_000, 1)?;
    let b = c.calib_reps(10_000)?;
    let alpha = c.alpha(0.05)?;
    let rhos: Vec<f64> = match c.o().rho {
        Some(r) => vec![r],
        None => (0..10).map(|i| i as f64 / 10.0).collect(),
    };
    let naive = mean_threshold(n, 1, alpha, b, c.seed(1))?;
    let mut t = ResultTable::new(&[
        "rho",
        "inflation",
        "naive_threshold",
        "inflated_threshold",
        "fp_naive",
        "fp_inflated",
    ]);
    let signal = SignalSpec::flat(n, 0.0);
    for (i, &rho) in rhos.iter().enumerate() {
        let factor = ar1_inflation(rho)?;
        // The factor multiplies the CUSUM threshold, so the LR threshold by its square.
        let inflated = naive * factor * factor;
        let noise = NoiseSpec::Ar1 { rho, sigma: 1.0 };
        let maxima: Vec<Result<f64>> = map_replicates(c.seed(100 + i as u64), reps, |_, rng| {
            Ok(
                lr_mean_known_var(&gen_series_with(&signal, &noise, rng)?, 1.0, 1)?
                    .max()
                    .to_f64(),
            )
        });
        let maxima = maxima.into_iter().collect::<Result<Vec<_>>>()?;
        let rate = |c: f64| fraction(maxima.iter().filter(|&&m| m > c).count(), reps);
        t.push(vec![
            rho.into(),
            factor.into(),
            naive.into(),
            inflated.into(),
            rate(naive).into(),
            rate(inflated).into(),
        ])?;
    }
    c.finish(t)
}

fn e9(mut c: Ctx) -> Output {
    c.allow(&[
        "n",
        "reps",
        "calib_reps",
        "alpha",
        "df",
        "minseg",
        "t_unit_variance",
    ])?;
    let n = c.n(1000, 4)?;
    let v = c.o().reps;
    let reps = c.reps("reps", v, 5_000, 10_000, 1)?;
    let b = c.calib_reps(10_000)?;
    let alpha = c.alpha(0.05)?;
    let df = c.o().df.unwrap_or(5.0);
    c.note("df", df);
    let long = c.o().minseg.unwrap_or(25);
    c.note("minseg", long);
    let unit = c.o().t_unit_variance.unwrap_or(false);
    c.note("t_unit_variance", unit);
    let t_noise = if unit {
        NoiseSpec::student_t_unit_variance(df, 1.0)
    } else {
        NoiseSpec::StudentT { df, scale: 1.0 }
    };
    t_noise.validate()?;
    let minsegs = [1usize, long];
    for &m in &minsegs {
        MEAN_MODEL.admissible_range(n, m)?;
    }
    let thresholds: Vec<f64> = null_max_by_minseg(n, &minsegs, b, c.seed(1))?
        .iter()
        .map(|s| empirical_quantile(s, alpha))
        .collect::<Result<_>>()?;
    let bins = 20;
    let signal = SignalSpec::flat(n, 0.0);
    let mut t = ResultTable::new(&[
        "noise",
        "minseg",
        "threshold",
        "fp_rate",
        "bin_lo",
        "bin_hi",
        "count",
        "frequency",
    ]);
    for (ni, (label, noise)) in [("t", t_noise), ("gaussian", UNIT)].into_iter().enumerate() {
        // Same data for both minimum segment lengths.
        let runs: Vec<Result<Vec<(usize, f64)>>> =
            map_replicates(c.seed(10 + ni as u64), reps, |_, rng| {
                let x = gen_series_with(&signal, &noise, rng)?;
                let lr = lr_mean_known_var(&x, 1.0, 1)?.to_f64_vec();
                Ok(minsegs
                    .iter()
                    .map(|&m| {
                        let mut best = m - 1;
                        for i in m - 1..n - m {
                            if lr[i] > lr[best] {
                                best = i;
                            }
                        }
                        (best + 1, lr[best])
                    })
                    .collect())
            });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        for (j, &m) in minsegs.iter().enumerate() {
            let taus: Vec<usize> = runs
                .iter()
                .map(|r| r[j])
                .filter(|r| r.1 > thresholds[j])
                .map(|r| r.0)
                .collect();
            let rate = fraction(taus.len(), reps);
            for (bi, &k) in location_histogram(&taus, n, bins).iter().enumerate() {
                t.push(vec![
                    label.into(),
                    m.into(),
                    thresholds[j].into(),
                    rate.into(),
                    (bi as f64 / bins as f64).into(),
                    ((bi + 1) as f64 / bins as f64).into(),
                    k.into(),
                    fraction(k, reps).into(),
                ])?;
            }
        }
    }
    c.finish(t)
}

/// Max LR of the three count tests: Poisson, Gaussian on raw counts with
/// variance `var`, Gaussian on Anscombe-transformed counts with unit variance.
fn count_tests(x: &TimeSeries, var: f64) -> Result<[f64; 3]> {
    let poisson = match lr_poisson(x, 1) {
        Ok(c) => c.max().to_f64(),
        Err(Error::Degenerate(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let gaussian = lr_mean_known_var(x, var.sqrt(), 1)?.max().to_f64();
    let anscombe = lr_mean_known_var(&anscombe_transform(x)?, 1.0, 1)?
        .max()
        .to_f64();
    Ok([poisson, gaussian, anscombe])
}

fn e10(mut c: Ctx) -> Output {
    c.allow(&["reps", "calib_reps", "alpha", "null_mean"])?;
    let n = 1000;
    let (before, after, tau0) = (0.075, 0.125, 500);
    let null_rate = 0.5 * (before + after);
    let v = c.o().reps;
    let reps = c.reps("reps", v, 1_000, 1_000, 1)?;
    let b = c.calib_reps(10_000)?;
    let alpha = c.alpha(0.05)?;
    let curve_mean = c.o().null_mean.unwrap_or(1.0);
    if !(curve_mean > 0.0) {
        return Err(Error::config("null_mean must be positive"));
    }
    c.note("curve_null_mean", curve_mean);
    c.note("calibration_null_mean", null_rate);
    c.note("gaussian_variance", null_rate);

    let mut t = ResultTable::new(&[
        "section",
        "index",
        "poisson",
        "gaussian",
        "gaussian_anscombe",
    ]);

    let x = gen_series_with(
        &SignalSpec::flat(n, curve_mean),
        &NoiseSpec::PoissonCounts,
        &mut crate::rng::replicate(c.seed(1), 0),
    )?;
    let p = lr_poisson(&x, 1)?;
    let g = lr_mean_known_var(&x, curve_mean.sqrt(), 1)?;
    let a = lr_mean_known_var(&anscombe_transform(&x)?, 1.0, 1)?;
    for (((tau, pv), (_, gv)), (_, av)) in p.iter().zip(g.iter()).zip(a.iter()) {
        t.push(vec![
            "curve".into(),
            tau.into(),
            pv.to_f64().into(),
            gv.to_f64().into(),
            av.to_f64().into(),
        ])?;
    }

    let null_sig = SignalSpec::flat(n, null_rate);
    let nulls: Vec<Result<[f64; 3]>> = map_replicates(c.seed(2), b, |_, rng| {
        count_tests(
            &gen_series_with(&null_sig, &NoiseSpec::PoissonCounts, rng)?,
            null_rate,
        )
    });
    let nulls = nulls.into_iter().collect::<Result<Vec<_>>>()?;
    let mut thresholds = [0.0; 3];
    for (k, th) in thresholds.iter_mut().enumerate() {
        *th = empirical_quantile(&nulls.iter().map(|r| r[k]).collect::<Vec<_>>(), alpha)?;
    }
    let alt_sig = SignalSpec::step(n, tau0, before, after);
    let alts: Vec<Result<[f64; 3]>> = map_replicates(c.seed(3), reps, |_, rng| {
        count_tests(
            &gen_series_with(&alt_sig, &NoiseSpec::PoissonCounts, rng)?,
            null_rate,
        )
    });
    let alts = alts.into_iter().collect::<Result<Vec<_>>>()?;
    for (i, r) in alts.iter().enumerate() {
        t.push(vec![
            "max_lr".into(),
            i.into(),
            r[0].into(),
            r[1].into(),
            r[2].into(),
        ])?;
    }
    t.push(vec![
        "threshold".into(),
        0usize.into(),
        thresholds[0].into(),
        thresholds[1].into(),
        thresholds[2].into(),
    ])?;
    let power: Vec<f64> = (0..3)
        .map(|k| fraction(alts.iter().filter(|r| r[k] > thresholds[k]).count(), reps))
        .collect();
    t.push(vec![
        "power".into(),
        0usize.into(),
        power[0].into(),
        power[1].into(),
        power[2].into(),
    ])?;
    c.finish(t)
}

fn chi2_2_quantile(p: f64) -> f64 {
    -2.0 * (1.0 - p).ln()
}

fn e11(mut c: Ctx) -> Output {
    c.allow(&["n", "reps", "calib_reps", "alpha", "minseg"])?;
    let n = c.n(1000, 8)?;
    let v = c.o().reps;
    let reps = c.reps("reps", v, 5_000, 10_000, 1)?;
    let b = c.calib_reps(10_000)?;
    let alpha = c.alpha(0.05)?;
    let minseg = c.o().minseg.unwrap_or(2);
    c.note("minseg", minseg);
    let model = ModelSpec::GaussMeanAndVar;
    model.admissible_range(n, minseg)?;
    let signal = SignalSpec::flat(n, 0.0);
    let qq_taus = [minseg, n / 2];

    let nulls: Vec<Result<f64>> = map_replicates(c.seed(1), b, |_, rng| {
        Ok(lr_mean_and_variance(&gauss(&signal, rng)?, minseg)?
            .max()
            .to_f64())
    });
    let threshold = empirical_quantile(&nulls.into_iter().collect::<Result<Vec<_>>>()?, alpha)?;

    let runs: Vec<Result<(usize, bool, Vec<f64>)>> = map_replicates(c.seed(2), reps, |_, rng| {
        let curve = lr_mean_and_variance(&gauss(&signal, rng)?, minseg)?;
        let (tau, v) = curve.argmax();
        let at: Vec<f64> = qq_taus
            .iter()
            .map(|&q| curve.get(q).map_or(f64::NAN, |v| v.to_f64()))
            .collect();
        Ok((tau, v.exceeds(threshold), at))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut t = ResultTable::new(&["section", "tau", "prob", "empirical", "reference"]);
    let probs: Vec<f64> = (1..100)
        .map(|i| i as f64 / 100.0)
        .chain([0.995, 0.999])
        .collect();
    for (j, &tau) in qq_taus.iter().enumerate() {
        let mut vals: Vec<f64> = runs.iter().map(|r| r.2[j]).collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        for &p in &probs {
            let k = ((p * reps as f64).ceil() as usize).clamp(1, reps);
            t.push(vec![
                "qq".into(),
                tau.into(),
                p.into(),
                vals[k - 1].into(),
                chi2_2_quantile(p).into(),
            ])?;
        }
    }
    let detected: Vec<usize> = runs.iter().filter(|r| r.1).map(|r| r.0).collect();
    let mut counts = std::collections::BTreeMap::new();
    for &tau in &detected {
        *counts.entry(tau).or_insert(0usize) += 1;
    }
    for (&tau, &k) in &counts {
        t.push(vec![
            "tau_hat".into(),
            tau.into(),
            fraction(k, detected.len()).into(),
            k.into(),
            Cell::Empty,
        ])?;
    }
    let edge = detected
        .iter()
        .filter(|&&tau| tau <= minseg || n - tau <= minseg)
        .count();
    let summary = [
        ("threshold", threshold),
        ("fp_rate", fraction(detected.len(), reps)),
        (
            "edge_fraction",
            if detected.is_empty() {
                f64::NAN
            } else {
                fraction(edge, detected.len())
            },
        ),
    ];
    for (name, value) in summary {
        t.push(vec![
            name.into(),
            Cell::Empty,
            Cell::Empty,
            value.into(),
            Cell::Empty,
        ])?;
    }
    c.finish(t)
}

fn e12(mut c: Ctx) -> Output {
    c.allow(&["n", "reps", "calib_reps", "alpha", "rho", "delta"])?;
    let n = c.n(80, 8)?;
    let tau0 = n / 4;
    c.note("tau0", tau0);
    let delta = c.o().delta.unwrap_or(2.0);
    c.note("delta", delta);
    let v = c.o().reps;
    let reps = c.reps("reps", v, 2_000, 2_000, 1)?;
    let b = c.calib_reps(10_000)?;
    let alpha = c.alpha(0.01)?;
    let rhos: Vec<f64> = match c.o().rho {
        Some(r) => vec![r],
        None => (0..10).map(|i| i as f64 / 10.0).chain([0.95]).collect(),
    };
    let mut t = ResultTable::new(&[
        "rho",
        "threshold_lr",
        "threshold_cusum",
        "power_lr",
        "power_cusum",
        "mae_lr",
        "mae_cusum",
    ]);
    for (i, &rho) in rhos.iter().enumerate() {
        let noise = NoiseSpec::Ar1 { rho, sigma: 1.0 };
        noise.validate()?;
        let both = |x: &TimeSeries| -> Result<[(usize, f64); 2]> {
            let (ta, va) = lr_ar1_mean(x, rho, 1)?.argmax();
            let (tc, vc) = lr_mean_known_var(x, 1.0, 1)?.argmax();
            Ok([(ta, va.to_f64()), (tc, vc.to_f64())])
        };
        let null_sig = SignalSpec::flat(n, 0.0);
        let nulls: Vec<Result<[(usize, f64); 2]>> =
            map_replicates(c.seed(100 + i as u64), b, |_, rng| {
                both(&gen_series_with(&null_sig, &noise, rng)?)
            });
        let nulls = nulls.into_iter().collect::<Result<Vec<_>>>()?;
        let th: Vec<f64> = (0..2)
            .map(|k| empirical_quantile(&nulls.iter().map(|r| r[k].1).collect::<Vec<_>>(), alpha))
            .collect::<Result<_>>()?;
        let alt_sig = SignalSpec::step(n, tau0, 0.0, delta);
        let alts: Vec<Result<[(usize, f64); 2]>> =
            map_replicates(c.seed(200 + i as u64), reps, |_, rng| {
                both(&gen_series_with(&alt_sig, &noise, rng)?)
            });
        let alts = alts.into_iter().collect::<Result<Vec<_>>>()?;
        let mut cells: Vec<Cell> = vec![rho.into(), th[0].into(), th[1].into()];
        let mut maes = Vec::new();
        for (k, &threshold) in th.iter().enumerate() {
            let hits: Vec<usize> = alts
                .iter()
                .filter(|r| r[k].1 > threshold)
                .map(|r| r[k].0)
                .collect();
            cells.push(fraction(hits.len(), reps).into());
            maes.push(if hits.is_empty() {
                None
            } else {
                Some(
                    hits.iter()
                        .map(|&tau| (tau as f64 - tau0 as f64).abs())
                        .sum::<f64>()
                        / hits.len() as f64,
                )
            });
        }
        cells.extend(maes.into_iter().map(Cell::from));
        t.push(cells)?;
    }
    c.finish(t)
}

/// Mean absolute first difference of a curve relative to its mean level.
pub fn roughness(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let tv =
        values.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (values.len() - 1) as f64;
    tv / mean
}

/// Single-kink and two-kink slope signals of E13 on `n` points.
pub fn slope_signals(n: usize) -> (SignalSpec, SignalSpec) {
    let bend = 0.01;
    let single = SignalSpec::PiecewiseLinear {
        n,
        intercept: 0.0,
        slope: 0.0,
        kinks: vec![(n / 2, bend)],
    };
    let two = SignalSpec::PiecewiseLinear {
        n,
        intercept: 0.0,
        slope: 0.0,
        kinks: vec![(2 * n / 5, bend), (3 * n / 5, bend)],
    };
    (single, two)
}

fn e13(mut c: Ctx) -> Output {
    c.allow(&["n"])?;
    let n = c.n(1000, 20)?;
    let slope_model = ModelSpec::GaussSlopeKnownVar { sigma: 1.0 };
    let mut t = ResultTable::new(&["section", "tau", "a", "b"]);

    let x = gauss(
        &SignalSpec::flat(n, 0.0),
        &mut crate::rng::replicate(c.seed(1), 0),
    )?;
    let slope = lr_slope(&x, 1.0, 1)?;
    let mean = lr_mean_known_var(&x, 1.0, 1)?;
    for (tau, v) in mean.iter() {
        let s = slope.get(tau).map_or(Cell::Empty, |s| s.to_f64().into());
        t.push(vec!["smooth".into(), tau.into(), s, v.to_f64().into()])?;
    }
    t.push(vec![
        "roughness".into(),
        Cell::Empty,
        roughness(&slope.to_f64_vec()).into(),
        roughness(&mean.to_f64_vec()).into(),
    ])?;

    let (single, two) = slope_signals(n);
    for (i, (label, signal)) in [("single", single), ("two", two)].into_iter().enumerate() {
        let x = gauss(&signal, &mut crate::rng::replicate(c.seed(2 + i as u64), 0))?;
        let data = lr_slope(&x, 1.0, 1)?;
        let expected = expected_lr_curve(&signal, &slope_model, 1)?;
        for ((tau, d), (_, e)) in data.iter().zip(expected.iter()) {
            t.push(vec![
                label.into(),
                tau.into(),
                d.to_f64().sqrt().into(),
                e.to_f64().sqrt().into(),
            ])?;
        }
        let (arg, _) = expected.argmax();
        t.push(vec![
            format!("{label}_argmax").as_str().into(),
            arg.into(),
            Cell::Empty,
            Cell::Empty,
        ])?;
    }
    c.finish(t)
}
