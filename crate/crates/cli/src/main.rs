// SPDX-License-Identifier: MIT OR Apache-2.0

//! `onecp`: detect a single change-point, calibrate thresholds, simulate
//! series and run the bundled simulation studies.
//!
//! Exit status: 0 success, 2 I/O or parse error, 3 invalid flags or
//! configuration, 4 degenerate or invalid data, 1 internal error.
//! `ONECP_THREADS` sets the number of worker threads.

mod input;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use onecp::calibration::{NullModel, ThresholdRule};
use onecp::detector::decide;
use onecp::experiments::{run_experiment, ExperimentId, ExperimentRequest, Overrides};
use onecp::noise_lab::{gen_series, mad_sigma, NoiseSpec, SignalSpec};
use onecp::{DetectionConfig, Error, ModelSpec, TimeSeries};

use input::{fmt_num, read_series, write_series};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn flags(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => 2,
            Error::Config(_) | Error::Domain(_) => 3,
            Error::NonFinite { .. } | Error::Degenerate(_) | Error::Input(_) | Error::Index(_) => 4,
            Error::Internal(_) => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "onecp", version, about = "Single change-point detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a series for one change and report the decision.
    Detect(DetectArgs),
    /// Print the detection threshold for a model and series length.
    Calibrate(CalibrateArgs),
    /// Write a synthetic piecewise-constant series as CSV.
    Simulate(SimulateArgs),
    /// Run one of the simulation studies E1..E13 and write its table as CSV.
    Experiment(ExperimentArgs),
    /// Robust noise sd from the MAD of first differences.
    EstimateSigma(EstimateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    MeanKnownVar,
    MeanUnknownVar,
    Poisson,
    VarKnownMean,
    MeanVar,
    Slope,
    Ar1Mean,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    /// Noise sd for mean-known-var and slope.
    #[arg(long)]
    sigma: Option<f64>,
    /// AR(1) coefficient for ar1-mean.
    #[arg(long)]
    phi: Option<f64>,
    /// Known mean for var-known-mean.
    #[arg(long)]
    mu: Option<f64>,
    /// Minimum segment length (defaults to the model's smallest admissible value).
    #[arg(long)]
    minseg: Option<usize>,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, CliError> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| {
                CliError::flags(format!("--model {} requires --{flag}", self.model_name()))
            })
        };
        let spec = match self.model {
            ModelName::MeanKnownVar => ModelSpec::GaussMeanKnownVar {
                sigma: need(self.sigma, "sigma")?,
            },
            ModelName::MeanUnknownVar => ModelSpec::GaussMeanUnknownVar,
            ModelName::Poisson => ModelSpec::PoissonMean,
            ModelName::VarKnownMean => ModelSpec::GaussVarKnownMean {
                mu: need(self.mu, "mu")?,
            },
            ModelName::MeanVar => ModelSpec::GaussMeanAndVar,
            ModelName::Slope => ModelSpec::GaussSlopeKnownVar {
                sigma: need(self.sigma, "sigma")?,
            },
            ModelName::Ar1Mean => ModelSpec::Ar1MeanKnown {
                phi: need(self.phi, "phi")?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn model_name(&self) -> String {
        self.model
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }

    fn minseg(&self, spec: &ModelSpec) -> usize {
        self.minseg
            .unwrap_or_else(|| spec.min_segment_floor().max(1))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleName {
    TwoLogN,
    Bonferroni,
    Gumbel,
    Mc,
    Fixed,
}

#[derive(Args)]
struct RuleArgs {
    #[arg(long, value_enum, default_value = "mc")]
    rule: RuleName,
    /// Cutoff for --rule fixed.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Null replicates for --rule mc.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Master seed; chosen from the clock and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Poisson rate of the simulated null for --rule mc (detect defaults to the data mean).
    #[arg(long)]
    null_mean: Option<f64>,
}

impl RuleArgs {
    fn rule(&self, seed: u64) -> Result<ThresholdRule, CliError> {
        if self.threshold.is_some() && !matches!(self.rule, RuleName::Fixed) {
            return Err(CliError::flags(
                "--threshold is only used with --rule fixed",
            ));
        }
        let rule = match self.rule {
            RuleName::TwoLogN => ThresholdRule::TwoLogN,
            RuleName::Bonferroni => ThresholdRule::BonferroniExact { alpha: self.alpha },
            RuleName::Gumbel => ThresholdRule::GumbelAsymptotic { alpha: self.alpha },
            RuleName::Mc => ThresholdRule::MonteCarlo {
                reps: self.reps,
                alpha: self.alpha,
                seed,
            },
            RuleName::Fixed => ThresholdRule::Fixed(
                self.threshold
                    .ok_or_else(|| CliError::flags("--rule fixed requires --threshold"))?,
            ),
        };
        rule.validate()?;
        Ok(rule)
    }

    fn name(&self) -> String {
        self.rule
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }

    fn is_random(&self) -> bool {
        matches!(self.rule, RuleName::Mc)
    }
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    rule: RuleArgs,
    /// Significant digits in the output; 0 for full precision.
    #[arg(long, default_value_t = 6)]
    precision: usize,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Series length.
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    rule: RuleArgs,
    #[arg(long, default_value_t = 6)]
    precision: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseName {
    Gauss,
    Ar1,
    T,
    Poisson,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    /// Comma-separated change-points (last index of each segment but the final one).
    #[arg(long, value_delimiter = ',')]
    changepoints: Vec<usize>,
    /// Comma-separated segment levels, one more than the change-points.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    levels: Vec<f64>,
    #[arg(long, value_enum, default_value = "gauss")]
    noise: NoiseName,
    /// Noise sd (Gaussian, AR(1)) or scale (t).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 5.0)]
    df: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// E1 to E13.
    #[arg(long)]
    id: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Use full replicate counts instead of desk-scale defaults.
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    calib_reps: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    df: Option<f64>,
    #[arg(long)]
    minseg: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    null_mean: Option<f64>,
    /// E9: rescale t noise to unit variance.
    #[arg(long)]
    t_unit_variance: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 6)]
    precision: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {}", e.message);
        return ExitCode::from(e.code);
    }
    let result = match cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::EstimateSigma(a) => cmd_estimate_sigma(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ONECP_THREADS") else {
        return Ok(());
    };
    let threads: usize = v.parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::flags(format!(
            "ONECP_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError {
            code: 1,
            message: e.to_string(),
        })
}

/// The given seed, or one drawn from the clock and reported on stderr.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64);
        let s = onecp::rng::mix64(nanos ^ u64::from(std::process::id()));
        eprintln!("note: no --seed given, using seed={s}");
        s
    })
}

fn series(path: &Path) -> Result<TimeSeries, CliError> {
    let values = read_series(path)?;
    if values.len() < 2 {
        return Err(CliError::data(format!(
            "{}: need at least 2 values, found {}",
            path.display(),
            values.len()
        )));
    }
    Ok(TimeSeries::new(values)?)
}

fn print_record(pairs: &[(&str, String)]) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (k, v) in pairs {
        writeln!(out, "{k}={v}")?;
    }
    Ok(())
}

fn cmd_detect(a: DetectArgs) -> Result<(), CliError> {
    let spec = a.model.spec()?;
    let minseg = a.model.minseg(&spec);
    let ts = series(&a.input)?;
    if matches!(spec, ModelSpec::PoissonMean) {
        ts.check_counts()?;
    }
    let curve = spec.lr_curve(&ts, minseg)?;
    let seed = if a.rule.is_random() {
        Some(resolve_seed(a.rule.seed))
    } else {
        None
    };
    let rule = a.rule.rule(seed.unwrap_or(0))?;
    let null_mean = match (spec, a.rule.null_mean) {
        (ModelSpec::PoissonMean, None) => Some(ts.mean()),
        (_, m) => m,
    };
    let threshold = if a.rule.is_random() {
        let null = NullModel::for_model(&spec, null_mean)?;
        rule.resolve(&spec, ts.len(), minseg, &null)?
    } else {
        rule.resolve(
            &spec,
            ts.len(),
            minseg,
            &NullModel {
                level: 0.0,
                noise: NoiseSpec::IidGauss { sigma: 1.0 },
            },
        )?
    };
    DetectionConfig::new(spec, minseg, threshold)?;
    let r = decide(&ts, &curve, threshold)?;
    let p = a.precision;
    let mut rec = vec![
        ("model", spec.name().to_string()),
        ("n", ts.len().to_string()),
        ("minseg", minseg.to_string()),
        ("rule", a.rule.name()),
        ("threshold", fmt_num(threshold, p)),
        ("detected", r.detected.to_string()),
        ("tau_hat", r.tau_hat.to_string()),
        ("max_lr", fmt_num(r.max_lr.to_f64(), p)),
    ];
    if let Some(d) = r.delta_hat {
        rec.push(("delta_hat", fmt_num(d, p)));
    }
    if let Some(s) = seed {
        rec.push(("seed", s.to_string()));
    }
    print_record(&rec)
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let spec = a.model.spec()?;
    let minseg = a.model.minseg(&spec);
    spec.admissible_range(a.n, minseg)?;
    let seed = if a.rule.is_random() {
        Some(resolve_seed(a.rule.seed))
    } else {
        None
    };
    let rule = a.rule.rule(seed.unwrap_or(0))?;
    let null = if a.rule.is_random() {
        NullModel::for_model(&spec, a.rule.null_mean)?
    } else {
        NullModel {
            level: 0.0,
            noise: NoiseSpec::IidGauss { sigma: 1.0 },
        }
    };
    let threshold = rule.resolve(&spec, a.n, minseg, &null)?;
    let mut rec = vec![
        ("model", spec.name().to_string()),
        ("n", a.n.to_string()),
        ("minseg", minseg.to_string()),
        ("rule", a.rule.name()),
    ];
    if !matches!(a.rule.rule, RuleName::TwoLogN | RuleName::Fixed) {
        rec.push(("alpha", fmt_num(a.rule.alpha, 0)));
    }
    if let Some(s) = seed {
        rec.push(("reps", a.rule.reps.to_string()));
        rec.push(("seed", s.to_string()));
    }
    rec.push(("threshold", fmt_num(threshold, a.precision)));
    print_record(&rec)
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let signal = SignalSpec::PiecewiseConstant {
        n: a.n,
        changepoints: a.changepoints,
        levels: a.levels,
    };
    signal.validate()?;
    let noise = match a.noise {
        NoiseName::Gauss => NoiseSpec::IidGauss { sigma: a.sigma },
        NoiseName::Ar1 => NoiseSpec::Ar1 {
            rho: a.rho,
            sigma: a.sigma,
        },
        NoiseName::T => NoiseSpec::StudentT {
            df: a.df,
            scale: a.sigma,
        },
        NoiseName::Poisson => NoiseSpec::PoissonCounts,
    };
    noise.validate()?;
    let seed = resolve_seed(a.seed);
    let ts = gen_series(&signal, &noise, seed)?;
    match a.output {
        Some(path) => {
            let f = File::create(&path)
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            write_series(BufWriter::new(f), ts.values())
        }
        None => write_series(io::stdout().lock(), ts.values()),
    }
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let id: ExperimentId = a.id.parse()?;
    let overrides = Overrides {
        n: a.n,
        reps: a.reps,
        calib_reps: a.calib_reps,
        delta: a.delta,
        q0: a.q0,
        rho: a.rho,
        df: a.df,
        minseg: a.minseg,
        alpha: a.alpha,
        null_mean: a.null_mean,
        t_unit_variance: a.t_unit_variance.then_some(true),
    };
    let seed = resolve_seed(a.seed);
    let mut req = ExperimentRequest::new(id, seed).with(overrides);
    req.full_scale = a.full_scale;
    let table = run_experiment(&req)?;
    match a.output {
        Some(path) => {
            let f = File::create(&path)
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            table.write_csv(BufWriter::new(f))?;
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_estimate_sigma(a: EstimateArgs) -> Result<(), CliError> {
    let ts = series(&a.input)?;
    let est = mad_sigma(&ts)?;
    if est.degenerate {
        eprintln!("warning: degenerate scale estimate (constant or exactly linear data)");
    }
    print_record(&[
        ("sigma", fmt_num(est.sigma, a.precision)),
        ("degenerate", est.degenerate.to_string()),
    ])
}
