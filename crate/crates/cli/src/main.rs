//! `qmax` — closed-form predictions, seeded simulation and oracle
//! verification for Geo/Geo and M/M queue-length maxima.
//!
//! Exit status: 0 on success, 1 when a validation check fails, 2 on invalid
//! parameters (the violated constraint is named on stderr).

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qmax::error::Error;
use qmax::experiment::{self, ComparisonReport, EmpiricalMaxSummary, MmcReplication};
use qmax::model::{self, ContinuousQueueSpec, Discipline, DiscreteQueueSpec, ExtremeAsymptotics};
use qmax::{oracle, sim};

#[derive(Parser)]
#[command(
    name = "qmax",
    version,
    about = "Extreme-value predictions and simulation for Geo/Geo and M/M queue maxima"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for replication fan-out (default: QMAX_JOBS or all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form decay ratio, tail coefficient, expected maximum
    /// and mean queue length for a model
    Predict {
        #[arg(long, value_enum)]
        model: ModelId,
        #[command(flatten)]
        params: ModelParams,
    },
    /// Replicate the stochastic simulator and summarize the maxima
    Simulate {
        #[arg(long, value_enum)]
        model: ModelId,
        #[command(flatten)]
        params: ModelParams,
        /// Number of independent replications
        #[arg(long, default_value_t = 1000)]
        reps: u32,
        /// Base seed; replication i draws from stream hash(seed, i)
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append the prediction comparison to the summary
        #[arg(long)]
        compare: bool,
        /// Dump the replication-0 sample path as CSV (discrete models)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check every closed form against the truncated numerical oracle
    Validate {
        /// Verification grid (only "default" is defined)
        #[arg(long, default_value = "default")]
        grid: String,
        /// Stationary truncation level
        #[arg(long, default_value_t = 120)]
        k: usize,
        /// Hitting-system half-width
        #[arg(long, default_value_t = 200)]
        j: usize,
        /// Replications for the Monte-Carlo return-probability spot check
        #[arg(long, default_value_t = 100_000)]
        mc_reps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One fast doctor versus two slow doctors, discrete and continuous
    CompareDoctors {
        /// Horizon at which expected maxima are evaluated
        #[arg(long, value_parser = parse_number, default_value = "1e6")]
        horizon: f64,
    },
    /// Discrete-to-continuous convergence table over a list of time steps
    DeltaSweep {
        #[arg(long, value_parser = parse_number)]
        lambda: f64,
        #[arg(long, value_parser = parse_number)]
        mu: f64,
        #[arg(long, default_value_t = 1)]
        c: u32,
        /// Comma-separated time steps
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4])]
        deltas: Vec<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelId {
    Geo1Lasda,
    Geo2Lasda,
    Geo1Eas,
    Mm1,
    Mm2,
    Mmc,
}

impl ModelId {
    fn is_discrete(self) -> bool {
        matches!(
            self,
            ModelId::Geo1Lasda | ModelId::Geo2Lasda | ModelId::Geo1Eas
        )
    }

    fn as_str(self) -> &'static str {
        match self {
            ModelId::Geo1Lasda => "geo1-lasda",
            ModelId::Geo2Lasda => "geo2-lasda",
            ModelId::Geo1Eas => "geo1-eas",
            ModelId::Mm1 => "mm1",
            ModelId::Mm2 => "mm2",
            ModelId::Mmc => "mmc",
        }
    }
}

#[derive(clap::Args)]
struct ModelParams {
    /// Arrival probability per slot (decimal or fraction like 1/3)
    #[arg(long, value_parser = parse_number)]
    p: Option<f64>,
    /// Per-server departure probability per slot
    #[arg(long, value_parser = parse_number)]
    r: Option<f64>,
    /// Arrival rate
    #[arg(long, value_parser = parse_number)]
    lambda: Option<f64>,
    /// Per-server service rate
    #[arg(long, value_parser = parse_number)]
    mu: Option<f64>,
    /// Server count (mmc only; mm1 and mm2 fix it)
    #[arg(long)]
    c: Option<u32>,
    /// Horizon in slots (discrete models)
    #[arg(long, value_parser = parse_number)]
    n: Option<f64>,
    /// Horizon in time units (continuous models)
    #[arg(long, value_parser = parse_number)]
    x: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

/// Accepts decimals, scientific notation and simple fractions ("1/3"), so
/// rational reference parameters survive without decimal-rounding drift.
fn parse_number(raw: &str) -> Result<f64, String> {
    let raw = raw.trim();
    if let Some((num, den)) = raw.split_once('/') {
        let num: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("invalid fraction: {raw}"))?;
        let den: f64 = den
            .trim()
            .parse()
            .map_err(|_| format!("invalid fraction: {raw}"))?;
        if den == 0.0 {
            return Err(format!("zero denominator: {raw}"));
        }
        return Ok(num / den);
    }
    raw.parse().map_err(|_| format!("invalid number: {raw}"))
}

enum CliError {
    /// Invalid parameters or configuration; exit 2.
    Usage(String),
    /// A validation check failed; exit 1.
    Check(String),
    /// I/O or serialization failure; exit 1.
    Io(String),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::ParameterDomain(_) | Error::UnsupportedModel(_) => {
                CliError::Usage(err.to_string())
            }
            Error::ToleranceNotMet(_) | Error::Internal(_) => CliError::Check(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Check(msg)) | Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn jobs_from(cli_jobs: Option<usize>) -> Option<usize> {
    cli_jobs.or_else(|| {
        std::env::var("QMAX_JOBS")
            .ok()
            .and_then(|raw| raw.parse().ok())
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let jobs = jobs_from(cli.jobs);
    let (payload, failed_checks) = match cli.command {
        Command::Predict { model, params } => (predict(model, &params)?, false),
        Command::Simulate {
            model,
            params,
            reps,
            seed,
            compare,
            trace,
        } => (
            simulate(model, &params, reps, seed, compare, trace, jobs)?,
            false,
        ),
        Command::Validate {
            grid,
            k,
            j,
            mc_reps,
            seed,
        } => {
            let report = validate(&grid, k, j, mc_reps, seed)?;
            let failed = !report.pass;
            (Rendered::Validate(report), failed)
        }
        Command::CompareDoctors { horizon } => (
            Rendered::Doctors(experiment::doctor_scenario(horizon)?),
            false,
        ),
        Command::DeltaSweep {
            lambda,
            mu,
            c,
            deltas,
        } => {
            let spec = ContinuousQueueSpec::new(lambda, mu, c)?;
            (
                Rendered::Sweep(experiment::delta_sweep(&spec, &deltas)?),
                false,
            )
        }
    };

    let body = match cli.format {
        Format::Json => payload.json()?,
        Format::Csv => payload.csv(),
        Format::Text => payload.text(),
    };
    match cli.output {
        Some(path) => fs::write(path, body)?,
        None => print!("{body}"),
    }
    if failed_checks {
        return Err(CliError::Check(
            "validation checks failed (see report)".into(),
        ));
    }
    Ok(())
}

fn discrete_spec(model: ModelId, params: &ModelParams) -> Result<DiscreteQueueSpec, CliError> {
    let p = params.p.ok_or(CliError::Usage(
        "--p is required for discrete models".into(),
    ))?;
    let r = params.r.ok_or(CliError::Usage(
        "--r is required for discrete models".into(),
    ))?;
    if params.lambda.is_some() || params.mu.is_some() || params.c.is_some() {
        return Err(CliError::Usage(
            "discrete models take --p/--r, not --lambda/--mu/--c".into(),
        ));
    }
    let spec = match model {
        ModelId::Geo1Lasda => DiscreteQueueSpec::geo1_lasda(p, r)?,
        ModelId::Geo2Lasda => DiscreteQueueSpec::geo2_lasda(p, r)?,
        ModelId::Geo1Eas => DiscreteQueueSpec::geo1_eas(p, r)?,
        _ => unreachable!(),
    };
    Ok(spec)
}

fn continuous_spec(model: ModelId, params: &ModelParams) -> Result<ContinuousQueueSpec, CliError> {
    let lambda = params.lambda.ok_or(CliError::Usage(
        "--lambda is required for continuous models".into(),
    ))?;
    let mu = params.mu.ok_or(CliError::Usage(
        "--mu is required for continuous models".into(),
    ))?;
    if params.p.is_some() || params.r.is_some() {
        return Err(CliError::Usage(
            "continuous models take --lambda/--mu, not --p/--r".into(),
        ));
    }
    let c = match (model, params.c) {
        (ModelId::Mm1, None | Some(1)) => 1,
        (ModelId::Mm2, None | Some(2)) => 2,
        (ModelId::Mmc, c) => c.ok_or(CliError::Usage("--c is required for mmc".into()))?,
        (m, _) => {
            return Err(CliError::Usage(format!(
                "server count contradicts model {}",
                m.as_str()
            )))
        }
    };
    Ok(ContinuousQueueSpec::new(lambda, mu, c)?)
}

fn horizon(params: &ModelParams) -> Result<f64, CliError> {
    let h = params.n.or(params.x).ok_or(CliError::Usage(
        "a horizon is required (--n for slots, --x for time)".into(),
    ))?;
    if !h.is_finite() || h < 1.0 {
        return Err(CliError::Usage(format!(
            "horizon must be at least 1, got {h}"
        )));
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// predict

#[derive(Debug, Serialize, Deserialize)]
struct LazyWalkReference {
    expected_max: f64,
    /// The lazy-walk expansion overshoots; it is reported for reference only.
    reference_only: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictReport {
    model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<u32>,
    n: f64,
    omega: f64,
    tail_coefficient: f64,
    slope: f64,
    intercept: f64,
    expected_max: f64,
    mean_queue_length: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lazy_walk: Option<LazyWalkReference>,
}

fn asym_for(model: ModelId, params: &ModelParams) -> Result<ExtremeAsymptotics, CliError> {
    if model.is_discrete() {
        Ok(model::extreme_asymptotics(&discrete_spec(model, params)?)?)
    } else {
        Ok(model::continuous_asymptotics(&continuous_spec(
            model, params,
        )?)?)
    }
}

fn predict(model: ModelId, params: &ModelParams) -> Result<Rendered, CliError> {
    let n = horizon(params)?;
    let report = if model.is_discrete() {
        let spec = discrete_spec(model, params)?;
        let asym = model::extreme_asymptotics(&spec)?;
        let lazy_walk = match spec.discipline() {
            Discipline::Eas => Some(LazyWalkReference {
                expected_max: model::eas_lazy_walk_expected_max(spec.p(), spec.r(), n)?,
                reference_only: true,
            }),
            Discipline::LasDa => None,
        };
        PredictReport {
            model: model.as_str().into(),
            p: Some(spec.p()),
            r: Some(spec.r()),
            lambda: None,
            mu: None,
            c: None,
            n,
            omega: asym.omega,
            tail_coefficient: asym.a,
            slope: asym.slope,
            intercept: asym.intercept,
            expected_max: asym.expected_max(n),
            mean_queue_length: spec.mean_queue_length()?,
            lazy_walk,
        }
    } else {
        let spec = continuous_spec(model, params)?;
        let asym = model::continuous_asymptotics(&spec)?;
        PredictReport {
            model: model.as_str().into(),
            p: None,
            r: None,
            lambda: Some(spec.lambda()),
            mu: Some(spec.mu()),
            c: Some(spec.c()),
            n,
            omega: asym.omega,
            tail_coefficient: asym.a,
            slope: asym.slope,
            intercept: asym.intercept,
            expected_max: asym.expected_max(n),
            mean_queue_length: spec.mean_queue_length()?,
            lazy_walk: None,
        }
    };
    Ok(Rendered::Predict(report))
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Serialize, Deserialize)]
struct SimulateReport {
    model: String,
    seed: u64,
    reps: u32,
    summary: EmpiricalMaxSummary,
    /// Queue-only maxima and the system/queue identity rate (M/M/c runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    queue_summary: Option<EmpiricalMaxSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identity_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<ComparisonReport>,
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    model: ModelId,
    params: &ModelParams,
    reps: u32,
    seed: u64,
    compare: bool,
    trace: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<Rendered, CliError> {
    let n = horizon(params)?;
    let report = if model.is_discrete() {
        let spec = discrete_spec(model, params)?;
        let slots = n as u64;
        if let Some(path) = &trace {
            let csv = trace_csv(&sim::trace_discrete(
                &spec,
                slots,
                sim::stream_seed(seed, 0),
            ));
            fs::write(path, csv)?;
        }
        let summary = experiment::replicate_discrete_max(&spec, slots, reps, seed, jobs)?;
        let comparison = compare
            .then(|| asym_for(model, params).map(|a| experiment::compare_prediction(&summary, &a)));
        let comparison = comparison.transpose()?;
        SimulateReport {
            model: model.as_str().into(),
            seed,
            reps,
            summary,
            queue_summary: None,
            identity_fraction: None,
            comparison,
        }
    } else {
        if trace.is_some() {
            return Err(CliError::Usage(
                "--trace is only defined for discrete models".into(),
            ));
        }
        let spec = continuous_spec(model, params)?;
        let MmcReplication {
            sys,
            que,
            identity_fraction,
        } = experiment::replicate_mmc(&spec, n, reps, seed, jobs)?;
        let comparison = compare
            .then(|| asym_for(model, params).map(|a| experiment::compare_prediction(&sys, &a)));
        let comparison = comparison.transpose()?;
        SimulateReport {
            model: model.as_str().into(),
            seed,
            reps,
            summary: sys,
            queue_summary: Some(que),
            identity_fraction: Some(identity_fraction),
            comparison,
        }
    };
    Ok(Rendered::Simulate(report))
}

fn trace_csv(path: &[(u64, u32)]) -> String {
    let mut out = String::from("step,level\n");
    for (step, level) in path {
        let _ = writeln!(out, "{step},{level}");
    }
    out
}

// ---------------------------------------------------------------------------
// validate

#[derive(Debug, Serialize, Deserialize)]
struct ValidateReport {
    grid: oracle::GridReport,
    /// Monte-Carlo spot check of the return probability at the reference
    /// two-server parameters.
    mc_nu0_estimate: f64,
    mc_nu0_stderr: f64,
    mc_nu0_reference: f64,
    mc_pass: bool,
    pass: bool,
}

fn validate(
    grid: &str,
    k: usize,
    j: usize,
    mc_reps: u32,
    seed: u64,
) -> Result<ValidateReport, CliError> {
    if grid != "default" {
        return Err(CliError::Usage(format!(
            "unknown grid '{grid}'; only 'default' is defined"
        )));
    }
    let grid = oracle::verify_grid(k, j)?;
    let reference = DiscreteQueueSpec::geo2_lasda(1.0 / 3.0, 0.25)?;
    let nu0 = model::hitting_profile(&reference)?.nu0;
    let mc = oracle::return_prob_mc(&reference, mc_reps, 10_000, seed)?;
    let mc_pass = mc.brackets(nu0, 3.0);
    let pass = grid.pass && mc_pass;
    Ok(ValidateReport {
        grid,
        mc_nu0_estimate: mc.estimate,
        mc_nu0_stderr: mc.stderr,
        mc_nu0_reference: nu0,
        mc_pass,
        pass,
    })
}

// ---------------------------------------------------------------------------
// rendering

enum Rendered {
    Predict(PredictReport),
    Simulate(SimulateReport),
    Validate(ValidateReport),
    Doctors(experiment::DoctorReport),
    Sweep(experiment::DeltaSweep),
}

fn fmt10(x: f64) -> String {
    // truncate toward zero at the tenth decimal; the reference constants are
    // printed as truncations, so rounding here would flip their last digit
    let truncated = (x * 1e10).trunc() / 1e10;
    format!("{truncated:.10}")
}

impl Rendered {
    fn json(&self) -> Result<String, CliError> {
        let json = match self {
            Rendered::Predict(r) => serde_json::to_string_pretty(r),
            Rendered::Simulate(r) => serde_json::to_string_pretty(r),
            Rendered::Validate(r) => serde_json::to_string_pretty(r),
            Rendered::Doctors(r) => serde_json::to_string_pretty(r),
            Rendered::Sweep(r) => serde_json::to_string_pretty(r),
        };
        json.map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Io(e.to_string()))
    }

    fn text(&self) -> String {
        let mut out = String::new();
        match self {
            Rendered::Predict(r) => {
                let _ = writeln!(out, "model            {}", r.model);
                for (name, value) in [("p", r.p), ("r", r.r), ("lambda", r.lambda), ("mu", r.mu)] {
                    if let Some(v) = value {
                        let _ = writeln!(out, "{name:<16} {}", fmt10(v));
                    }
                }
                if let Some(c) = r.c {
                    let _ = writeln!(out, "c                {c}");
                }
                let _ = writeln!(out, "horizon          {:e}", r.n);
                let _ = writeln!(out, "omega            {}", fmt10(r.omega));
                let _ = writeln!(out, "tail coefficient {}", fmt10(r.tail_coefficient));
                let _ = writeln!(out, "slope            {}", fmt10(r.slope));
                let _ = writeln!(out, "intercept        {}", fmt10(r.intercept));
                let _ = writeln!(out, "expected max     {}", fmt10(r.expected_max));
                let _ = writeln!(out, "mean length      {}", fmt10(r.mean_queue_length));
                if let Some(lazy) = &r.lazy_walk {
                    let _ = writeln!(
                        out,
                        "lazy-walk E'(Mn) {} (REFERENCE ONLY: known to overshoot)",
                        fmt10(lazy.expected_max)
                    );
                }
            }
            Rendered::Simulate(r) => {
                let _ = writeln!(out, "model {}   seed {}   reps {}", r.model, r.seed, r.reps);
                let _ = writeln!(
                    out,
                    "max: mean {}  stderr {}  variance {}",
                    fmt10(r.summary.mean),
                    fmt10(r.summary.stderr()),
                    fmt10(r.summary.variance)
                );
                let _ = writeln!(out, "level  cum_frequency");
                for (level, freq) in &r.summary.cdf {
                    let _ = writeln!(out, "{level:>5}  {}", fmt10(*freq));
                }
                if let Some(que) = &r.queue_summary {
                    let _ = writeln!(out, "queue max: mean {}", fmt10(que.mean));
                }
                if let Some(frac) = r.identity_fraction {
                    let _ = writeln!(out, "max_sys = c + max_que in fraction {}", fmt10(frac));
                }
                if let Some(cmp) = &r.comparison {
                    out.push_str(&comparison_text(cmp));
                }
            }
            Rendered::Validate(r) => {
                let _ = writeln!(
                    out,
                    "oracle grid: K={} J={}  ({} checks)",
                    r.grid.k,
                    r.grid.j,
                    r.grid.checks.len()
                );
                let _ = writeln!(
                    out,
                    "{:<11} {:>6} {:>6} {:>11} {:>11} {:>12} {:>12}  result",
                    "model", "p", "r", "pi_err", "nu_err", "omega_resid", "factor_resid"
                );
                for c in &r.grid.checks {
                    let _ = writeln!(
                        out,
                        "{:<11} {:>6.3} {:>6.3} {:>11.3e} {:>11} {:>12.3e} {:>12}  {}",
                        c.model,
                        c.p,
                        c.r,
                        c.stationary_abs_err,
                        c.hitting_abs_err.map_or("-".into(), |e| format!("{e:.3e}")),
                        c.omega_residual,
                        c.hitting_factor_residual
                            .map_or("-".into(), |e| format!("{e:.3e}")),
                        if c.pass { "pass" } else { "FAIL" }
                    );
                }
                let _ = writeln!(
                    out,
                    "monte-carlo nu0: {} +- {} (reference {})  {}",
                    fmt10(r.mc_nu0_estimate),
                    fmt10(r.mc_nu0_stderr),
                    fmt10(r.mc_nu0_reference),
                    if r.mc_pass { "pass" } else { "FAIL" }
                );
                let _ = writeln!(out, "overall: {}", if r.pass { "pass" } else { "FAIL" });
            }
            Rendered::Doctors(r) => {
                let _ = writeln!(out, "expected maxima evaluated at horizon {:e}", r.horizon);
                let _ = writeln!(
                    out,
                    "{:<38} {:>14} {:>14}",
                    "scenario", "expected max", "mean length"
                );
                for row in &r.rows {
                    let _ = writeln!(
                        out,
                        "{:<38} {:>14.4} {:>14.5}",
                        row.label, row.expected_max, row.mean_queue_length
                    );
                }
                let _ = writeln!(
                    out,
                    "fast doctor wins: discrete {}  continuous {}",
                    r.fast_wins_discrete, r.fast_wins_continuous
                );
            }
            Rendered::Sweep(r) => {
                let _ = writeln!(
                    out,
                    "lambda {}  mu {}  c {}   targets: tail {}  clump rate {}",
                    fmt10(r.lambda),
                    fmt10(r.mu),
                    r.c,
                    fmt10(r.tail_target),
                    fmt10(r.clump_rate_target)
                );
                let _ = writeln!(
                    out,
                    "{:>10} {:>14} {:>14} {:>11} {:>14} {:>11}",
                    "delta", "omega", "tail coeff", "rel err", "clump rate", "rel err"
                );
                for row in &r.rows {
                    let _ = writeln!(
                        out,
                        "{:>10.1e} {:>14.10} {:>14.10} {:>11.3e} {:>14.10} {:>11.3e}",
                        row.delta,
                        row.omega,
                        row.tail_coefficient,
                        row.tail_rel_error,
                        row.clump_rate,
                        row.clump_rate_rel_error
                    );
                }
                let _ = writeln!(out, "errors monotone: {}", r.monotone);
            }
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        match self {
            Rendered::Predict(r) => {
                out.push_str("field,value\n");
                let _ = writeln!(out, "model,{}", r.model);
                for (name, value) in [
                    ("p", r.p),
                    ("r", r.r),
                    ("lambda", r.lambda),
                    ("mu", r.mu),
                    ("c", r.c.map(f64::from)),
                ] {
                    if let Some(v) = value {
                        let _ = writeln!(out, "{name},{v}");
                    }
                }
                let _ = writeln!(out, "n,{}", r.n);
                let _ = writeln!(out, "omega,{}", r.omega);
                let _ = writeln!(out, "tail_coefficient,{}", r.tail_coefficient);
                let _ = writeln!(out, "slope,{}", r.slope);
                let _ = writeln!(out, "intercept,{}", r.intercept);
                let _ = writeln!(out, "expected_max,{}", r.expected_max);
                let _ = writeln!(out, "mean_queue_length,{}", r.mean_queue_length);
                if let Some(lazy) = &r.lazy_walk {
                    let _ = writeln!(
                        out,
                        "lazy_walk_expected_max_reference_only,{}",
                        lazy.expected_max
                    );
                }
            }
            Rendered::Simulate(r) => {
                out.push_str("series,level,cum_frequency\n");
                for (level, freq) in &r.summary.cdf {
                    let _ = writeln!(out, "max,{level},{freq}");
                }
                if let Some(que) = &r.queue_summary {
                    for (level, freq) in &que.cdf {
                        let _ = writeln!(out, "queue_max,{level},{freq}");
                    }
                }
            }
            Rendered::Validate(r) => {
                out.push_str(
                    "model,p,r,stationary_abs_err,hitting_abs_err,omega_residual,factor_residual,pass\n",
                );
                for c in &r.grid.checks {
                    let _ = writeln!(
                        out,
                        "{},{},{},{:e},{},{:e},{},{}",
                        c.model,
                        c.p,
                        c.r,
                        c.stationary_abs_err,
                        c.hitting_abs_err
                            .map_or(String::new(), |e| format!("{e:e}")),
                        c.omega_residual,
                        c.hitting_factor_residual
                            .map_or(String::new(), |e| format!("{e:e}")),
                        c.pass
                    );
                }
            }
            Rendered::Doctors(r) => {
                out.push_str("scenario,expected_max,mean_queue_length\n");
                for row in &r.rows {
                    let _ = writeln!(
                        out,
                        "\"{}\",{},{}",
                        row.label, row.expected_max, row.mean_queue_length
                    );
                }
            }
            Rendered::Sweep(r) => {
                out.push_str(
                    "delta,omega,tail_coefficient,tail_rel_error,clump_rate,clump_rate_rel_error\n",
                );
                for row in &r.rows {
                    let _ = writeln!(
                        out,
                        "{:e},{},{},{:e},{},{:e}",
                        row.delta,
                        row.omega,
                        row.tail_coefficient,
                        row.tail_rel_error,
                        row.clump_rate,
                        row.clump_rate_rel_error
                    );
                }
            }
        }
        out
    }
}

fn comparison_text(cmp: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "prediction: mean {}  |empirical - predicted| = {} ({} sigma band: {})",
        fmt10(cmp.predicted_mean),
        fmt10(cmp.mean_abs_error),
        cmp.sigma_band,
        if cmp.mean_pass { "pass" } else { "FAIL" }
    );
    let _ = writeln!(
        out,
        "cdf sup distance {} (tolerance {}: {})",
        fmt10(cmp.sup_cdf_distance),
        cmp.cdf_tolerance,
        if cmp.cdf_pass { "pass" } else { "FAIL" }
    );
    out
}
