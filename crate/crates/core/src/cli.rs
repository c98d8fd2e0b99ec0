//! The `mg1` command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 invalid parameters,
//! 3 corrupt input data.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::matrix::DeltaDirichletPosterior;
use crate::pgf::BasePmf;
use crate::rate::GammaPosterior;
use crate::service::ServiceDist;
use crate::sim::{interdeparture_times, marks_of, parse_departures, simulate_path, SimConfig, DEFAULT_WARMUP};
use crate::snapshot::{sha256_hex, write_atomic, PosteriorSnapshot, Provenance, TOOL_VERSION};
use crate::tau::ExhaustiveConfig;
use crate::transforms::{EstimatorContext, Grid, TransformKind};
use crate::validation::{
    bvm_experiment, consistency_experiment, oracle_checks, pi_check_experiment, tau_exhaustive_report, BvmConfig,
    ConsistencyConfig, ExperimentReport, PiCheckConfig, PriorParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CORRUPT: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CorruptData(_)
        | Error::NotDownSkipFree { .. }
        | Error::NonPositiveDuration { .. }
        | Error::Parse { .. }
        | Error::EmptyInput(_) => EXIT_CORRUPT,
        _ => EXIT_INVALID,
    }
}

#[derive(Debug, Parser)]
#[command(name = "mg1", version, about = "Bayesian inference for the M/G/1 queue from marked departures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the marked departure process and write a `t,n` file.
    Simulate(SimulateArgs),
    /// Update the rate and matrix posteriors from a departure file.
    Infer(InferArgs),
    /// Evaluate a plug-in transform estimate on a grid.
    Estimate(EstimateArgs),
    /// Run an oracle or experiment and report pass/fail.
    #[command(subcommand)]
    Validate(ValidateCommand),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub lambda: f64,
    /// exp:<mu> | erlang:<k>,<mu> | det:<d> | hyper:<w>,<mu>;<w>,<mu>[;...]
    #[arg(long)]
    pub service: ServiceDist,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// geom:<p> | pois:<theta>
    #[arg(long, default_value = "geom:0.5")]
    pub base: BasePmf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub posterior: PathBuf,
    /// g | w | q | m | pi | b | mb | rho
    #[arg(long)]
    pub transform: TransformKind,
    /// lo:hi:steps, with steps the number of points (ignored for rho)
    #[arg(long, default_value = "0:1:11")]
    pub grid: Grid,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArg {
    /// Also write key=value lines to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueueArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value = "exp:2")]
    pub service: ServiceDist,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum ValidateCommand {
    /// Exhaustive check of the statistic's combinatorial properties.
    TauExhaustive {
        #[arg(long, default_value_t = 7)]
        max_len: usize,
        #[arg(long, default_value_t = 3)]
        max_state: u64,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Posterior consistency along growing prefixes of one path.
    Consistency {
        #[command(flatten)]
        queue: QueueArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![100usize, 1_000, 10_000, 50_000])]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 5.0)]
        r: f64,
        #[arg(long, default_value_t = 0.02)]
        g_tol: f64,
        #[arg(long, default_value_t = 0.05)]
        rate_tol: f64,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Posterior normality of the random pgf and the rate.
    Bvm {
        #[command(flatten)]
        queue: QueueArgs,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 2_000)]
        draws: usize,
        #[arg(long, default_value_t = 200)]
        truncation: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.5, 0.8])]
        z_grid: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        normality_threshold: f64,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Quadrature oracle and exact-input transform identities.
    Oracles {
        #[command(flatten)]
        report: ReportArg,
    },
    /// Estimated stationary pgf against the empirical pgf of the marks.
    PiCheck {
        #[command(flatten)]
        queue: QueueArgs,
        #[arg(long, default_value_t = 50_000)]
        n: usize,
        #[command(flatten)]
        report: ReportArg,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    match command {
        Command::Simulate(args) => simulate(args, err),
        Command::Infer(args) => infer(args, err),
        Command::Estimate(args) => estimate(args, out, err),
        Command::Validate(cmd) => validate(cmd, out),
    }
}

fn simulate(args: SimulateArgs, err: &mut dyn Write) -> Result<i32, Error> {
    let config = SimConfig::new(args.lambda, args.service, args.n, args.seed).with_warmup(args.warmup);
    let path = simulate_path(&config)?;
    write_atomic(&args.out, path.to_csv().as_bytes())?;
    let _ = writeln!(err, "wrote {} departures (rho = {}) to {}", args.n, config.rho(), args.out.display());
    Ok(EXIT_OK)
}

fn infer(args: InferArgs, err: &mut dyn Write) -> Result<i32, Error> {
    let prior = GammaPosterior::new(args.gamma_a, args.gamma_b)?;
    let dp = DeltaDirichletPosterior::new(args.alpha, args.base)?;
    let bytes = std::fs::read(&args.data)?;
    let text =
        String::from_utf8(bytes.clone()).map_err(|_| Error::CorruptData("departure file is not UTF-8".into()))?;
    let records = parse_departures(&text)?;
    let snapshot = PosteriorSnapshot {
        prior_gamma: prior,
        gamma: prior.update(&interdeparture_times(&records))?,
        dp: dp.update_with_marks(&marks_of(&records))?,
        provenance: Provenance { data_sha256: sha256_hex(&bytes), tool_version: TOOL_VERSION.into() },
    };
    snapshot.save(&args.out)?;
    let _ = writeln!(err, "updated posteriors with {} departures; wrote {}", records.len(), args.out.display());
    Ok(EXIT_OK)
}

fn estimate(args: EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    let text = std::fs::read_to_string(&args.posterior)?;
    let snapshot = PosteriorSnapshot::parse(&text)?;
    let ctx = EstimatorContext::from_posteriors(&snapshot.gamma, snapshot.dp)?;
    let est = ctx.estimate(args.transform, &args.grid);

    let mut csv = String::new();
    csv.push_str(&format!("# transform={}\n", est.kind));
    csv.push_str(&format!("# posterior_sha256={}\n", sha256_hex(text.as_bytes())));
    csv.push_str(&format!("# domain={}\n", est.domain_note));
    csv.push_str("arg,value\n");
    for (x, v) in est.grid.iter().zip(&est.values) {
        let arg = if args.transform == TransformKind::Rho { "rho".to_string() } else { x.to_string() };
        let value = v.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!("{arg},{value}\n"));
    }
    for w in &est.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if est.succeeded() == 0 {
        let _ = writeln!(err, "error: no grid point could be evaluated");
        return Ok(EXIT_INVALID);
    }
    match &args.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn finish(report: ExperimentReport, target: &ReportArg, out: &mut dyn Write) -> Result<i32, Error> {
    out.write_all(report.table().as_bytes())?;
    if let Some(path) = &target.report {
        write_report(path, &report)?;
    }
    Ok(if report.pass() { EXIT_OK } else { EXIT_VALIDATION_FAILED })
}

fn write_report(path: &Path, report: &ExperimentReport) -> Result<(), Error> {
    write_atomic(path, report.to_kv().as_bytes())
}

fn validate(cmd: ValidateCommand, out: &mut dyn Write) -> Result<i32, Error> {
    match cmd {
        ValidateCommand::TauExhaustive { max_len, max_state, report } => {
            finish(tau_exhaustive_report(ExhaustiveConfig { max_len, max_state }), &report, out)
        }
        ValidateCommand::Consistency { queue, n_list, r, g_tol, rate_tol, report } => {
            let mut config = ConsistencyConfig::new(queue.lambda, queue.service, queue.seed);
            config.n_list = n_list;
            config.r = r;
            config.g_tol = g_tol;
            config.rate_tol = rate_tol;
            finish(consistency_experiment(&config)?, &report, out)
        }
        ValidateCommand::Bvm { queue, n, draws, truncation, z_grid, normality_threshold, report } => {
            let mut config = BvmConfig::new(queue.lambda, queue.service, queue.seed);
            config.n = n;
            config.draws = draws;
            config.truncation = truncation;
            config.z_grid = z_grid;
            config.normality_threshold = normality_threshold;
            finish(bvm_experiment(&config)?, &report, out)
        }
        ValidateCommand::Oracles { report } => finish(oracle_checks()?, &report, out),
        ValidateCommand::PiCheck { queue, n, report } => {
            let result = pi_check_experiment(
                queue.lambda,
                queue.service,
                n,
                queue.seed,
                &PriorParams::default(),
                &PiCheckConfig::default(),
            )?;
            finish(result, &report, out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("mg1").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn test_unstable_simulation_names_rho() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("d.csv");
        let (code, _, err) = run_capture(&[
            "simulate",
            "--lambda",
            "1",
            "--service",
            "exp:1",
            "--n",
            "10",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_INVALID);
        assert!(err.contains("rho"), "{err}");
        assert!(!out.exists());
    }

    #[test]
    fn test_bad_flags_are_invalid_parameters() {
        assert_eq!(run_capture(&["simulate", "--lambda", "1"]).0, EXIT_INVALID);
        assert_eq!(run_capture(&["estimate", "--posterior", "x", "--transform", "zz"]).0, EXIT_INVALID);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn test_exit_code_mapping() {
        assert_eq!(exit_code(&Error::Unstable { rho: 1.0 }), EXIT_INVALID);
        assert_eq!(exit_code(&Error::CorruptData("x".into())), EXIT_CORRUPT);
        assert_eq!(exit_code(&Error::NotDownSkipFree { position: 0, from: 3, to: 1 }), EXIT_CORRUPT);
    }
}
