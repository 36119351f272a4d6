//! Command-line front end: scenario files, fuzzed duality checks, Orlicz
//! norms, singular examples and truncation studies.
//!
//! Exit codes: 0 when every check passes, 1 when a check or a model fails,
//! 2 on malformed input.

pub mod reproduce;
pub mod run;
pub mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::orlicz::{
    classify_loss_bound, sup_norm_bounds, luxemburg_norm, orlicz_dual_norm, Compatibility, FiniteRV, HatU,
    LossBoundInput, TailFamily,
};
use crate::singular::truncation_study;
use crate::utility::UtilityFunction;

pub use run::{run, run_market, Check, FuzzUtility, RunReport};
pub use scenario::{parse_scenario, parse_study, ScenarioSpec, StudySpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("checks failed:\n  {}", .0.join("\n  "))]
    Assertion(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Model(Error::InvalidInput(_) | Error::Domain(_)) => 2,
            CliError::Model(_) | CliError::Assertion(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "orlicz-duality", version, about = "Utility maximization in finite incomplete markets by convex duality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the primal and dual problems for a scenario file.
    Solve {
        file: PathBuf,
        /// Write one machine-readable row to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare primal and dual values on seeded random one-period markets.
    DualityCheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest number of states per market.
        #[arg(long, default_value_t = 6)]
        paths: usize,
        /// Largest number of traded assets.
        #[arg(long, default_value_t = 2)]
        assets: usize,
        #[arg(long, value_enum, default_value_t = FuzzUtility::Both)]
        utility: FuzzUtility,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Orlicz norms and loss-bound classification.
    Orlicz {
        #[command(subcommand)]
        command: OrliczCommand,
    },
    /// Headline numbers of the singular examples.
    Reproduce {
        #[command(subcommand)]
        example: Example,
    },
    /// Finite truncations of a singular example, level by level.
    TruncationStudy {
        file: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Exponential,
    Log,
    Power,
    Linear,
}

#[derive(Debug, Args)]
pub struct UtilityArgs {
    #[arg(long, value_enum, default_value_t = Family::Exponential)]
    pub family: Family,
    /// Risk aversion of the exponential family.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Domain endpoint of the shifted log and power families.
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub a: f64,
    /// Exponent of the shifted power family.
    #[arg(long, default_value_t = 0.5)]
    pub exponent: f64,
}

impl UtilityArgs {
    fn build(&self) -> crate::Result<UtilityFunction> {
        match self.family {
            Family::Exponential => UtilityFunction::exponential(self.gamma),
            Family::Log => UtilityFunction::log_shifted(self.a),
            Family::Power => UtilityFunction::power_shifted(self.a, self.exponent),
            Family::Linear => Ok(UtilityFunction::linear()),
        }
    }
}

#[derive(Debug, Args)]
pub struct RvArgs {
    /// Values of the random variable, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub values: Vec<f64>,
    /// Probabilities; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
}

impl RvArgs {
    fn build(&self) -> crate::Result<FiniteRV> {
        match &self.probs {
            Some(p) => FiniteRV::new(self.values.clone(), p.clone()),
            None => FiniteRV::uniform(self.values.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tail {
    Gaussian,
    TwoSidedExponential,
    Cauchy,
}

#[derive(Debug, Subcommand)]
pub enum OrliczCommand {
    /// Luxemburg norm of û, the Orlicz dual norm and sup-norm bounds.
    Norm {
        #[command(flatten)]
        utility: UtilityArgs,
        #[command(flatten)]
        rv: RvArgs,
    },
    /// Classify a loss bound as compatible, weakly compatible or incompatible.
    Classify {
        #[command(flatten)]
        utility: UtilityArgs,
        /// Law of the price increment; the loss bound is `1 + |S|`.
        #[arg(long, value_enum, conflicts_with = "values")]
        tail: Option<Tail>,
        /// Standard deviation, rate or scale of the tail law.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Finite loss bound values instead of a tail law.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Example {
    /// Compound Poisson market with two-sided exponential jumps.
    Ex35 {
        #[arg(long, default_value_t = 2.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Discrete multiplier with a singular dual part.
    Ex36 {
        #[arg(long, default_value_t = 0.9)]
        p1: f64,
        #[arg(long, default_value_t = 0.1, conflicts_with = "tail")]
        p2: f64,
        /// Masses of the atoms n = 2, 3, ... instead of --p2.
        #[arg(long, value_delimiter = ',')]
        tail: Option<Vec<f64>>,
    },
    /// Calibration that removes the singular part.
    Ex37 {
        /// Use a single extra atom (weights = [1]).
        #[arg(long, conflicts_with = "weights")]
        single_atom: bool,
        /// Relative weights of the atoms n = 2, 3, ...
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Matrix model with a finiteness boundary at h = 5.
    Ex38 {
        #[arg(long, default_value_t = 4.0)]
        r: f64,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [5.0, 5.1])]
        h: Vec<f64>,
        #[arg(long, default_value_t = 400)]
        depth: usize,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn verdict(checks: &[Check]) -> Result<(), CliError> {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| format!("{} = {:e} exceeds {:e}", c.name, c.value, c.limit))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(failed))
    }
}

fn report_arbitrage(out: &mut dyn Write, e: &Error) -> std::io::Result<()> {
    if let Error::Unbounded { reason, direction } = e {
        writeln!(out, "arbitrage diagnostic")?;
        writeln!(out, "  reason     {reason}")?;
        let d: Vec<String> = direction.iter().map(|v| format!("{v:.10}")).collect();
        writeln!(out, "  direction  [{}]", d.join(", "))?;
    }
    Ok(())
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { file, csv } => {
            let spec = parse_scenario(&read(&file)?)?;
            let report = match run(&spec) {
                Ok(r) => r,
                Err(e) => {
                    report_arbitrage(out, &e).map_err(io)?;
                    return Err(e.into());
                }
            };
            run::print_report(out, &report).map_err(io)?;
            if let Some(path) = csv {
                run::write_csv(&path, [&report])?;
            }
            verdict(&report.checks)
        }
        Command::DualityCheck { trials, seed, paths, assets, utility, csv } => {
            if paths < 2 || assets == 0 || trials == 0 {
                return Err(CliError::Validation(vec!["--trials, --assets must be positive and --paths at least 2".into()]));
            }
            let results = run::duality_check(trials, seed, paths, assets, utility);
            run::print_trials(out, &results).map_err(io)?;
            let mut failures = Vec::new();
            let mut reports = Vec::new();
            for (s, r) in &results {
                match r {
                    Ok(r) => {
                        failures.extend(r.failures());
                        reports.push(r);
                    }
                    Err(e) => failures.push(format!("seed {s}: {e}")),
                }
            }
            let worst = reports.iter().map(|r| r.gap / (1.0 + r.value_primal.abs())).fold(0.0, f64::max);
            let passed = reports.iter().filter(|r| r.passed()).count();
            writeln!(out, "trials {} passed {passed} worst relative gap {worst:.3e}", results.len()).map_err(io)?;
            if let Some(path) = csv {
                run::write_csv(&path, reports.iter().copied())?;
            }
            if failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Assertion(failures))
            }
        }
        Command::Orlicz { command } => orlicz(command, out),
        Command::Reproduce { example } => {
            let rep = match example {
                Example::Ex35 { nu, rate, horizon } => reproduce::compound_poisson(rate, horizon, nu)?,
                Example::Ex36 { p1, p2, tail } => {
                    let spec = match tail {
                        Some(t) => crate::singular::DiscreteZSpec::new(p1, t)?,
                        None => reproduce::two_atom_spec(p1, p2)?,
                    };
                    reproduce::discrete_z(&spec)?
                }
                Example::Ex37 { single_atom, weights } => {
                    let w = match (single_atom, weights) {
                        (_, Some(w)) => w,
                        _ => vec![1.0],
                    };
                    reproduce::flat_boundary(&w)?
                }
                Example::Ex38 { r, h, depth } => reproduce::matrix_model(r, depth, &h)?,
            };
            rep.print(out).map_err(io)?;
            verdict(&rep.checks)
        }
        Command::TruncationStudy { file, csv } => {
            let spec = parse_study(&read(&file)?)?;
            let scenario = spec.scenario.build()?;
            let table = truncation_study(&scenario, &spec.levels)?;
            run::print_table(out, &table).map_err(io)?;
            if let Some(path) = csv {
                run::write_study_csv(&path, &table)?;
            }
            verdict(&run::study_checks(&table))
        }
    }
}

fn orlicz(command: OrliczCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        OrliczCommand::Norm { utility, rv } => {
            let u = utility.build()?;
            let f = rv.build()?;
            let lux = luxemburg_norm(&HatU(&u), &f);
            let dual = orlicz_dual_norm(&u, &f);
            writeln!(out, "luxemburg norm  {lux:.12}").map_err(io)?;
            writeln!(out, "orlicz norm     {dual}").map_err(io)?;
            writeln!(out, "sup norm        {:.12}", f.sup_norm()).map_err(io)?;
            if u.endpoint().is_finite() {
                let b = sup_norm_bounds(&u, &f)?;
                writeln!(out, "k               {:.12}", b.k).map_err(io)?;
                writeln!(out, "k*N(f)          {:.12}  {}", b.lower, if b.lower_holds { "<= sup norm" } else { "VIOLATED" })
                    .map_err(io)?;
                writeln!(out, "-a*N(f)         {:.12}  {}", b.upper, if b.upper_holds { ">= sup norm" } else { "VIOLATED" })
                    .map_err(io)?;
                if !(b.lower_holds && b.upper_holds) {
                    return Err(CliError::Assertion(vec!["sup-norm bounds violated".into()]));
                }
            }
            Ok(())
        }
        OrliczCommand::Classify { utility, tail, scale, values, probs } => {
            let u = utility.build()?;
            let input = match (tail, values) {
                (Some(t), None) => LossBoundInput::Tail(match t {
                    Tail::Gaussian => TailFamily::gaussian(0.0, scale)?,
                    Tail::TwoSidedExponential => TailFamily::two_sided_exponential(scale)?,
                    Tail::Cauchy => TailFamily::cauchy(scale)?,
                }),
                (None, Some(v)) => LossBoundInput::Finite(match probs {
                    Some(p) => FiniteRV::new(v, p)?,
                    None => FiniteRV::uniform(v)?,
                }),
                _ => return Err(CliError::Validation(vec!["give either --tail or --values".into()])),
            };
            let c = classify_loss_bound(&u, &input)?;
            match c.verdict {
                Compatibility::Compatible => writeln!(out, "verdict         compatible"),
                Compatibility::WeaklyCompatible { critical_alpha } => {
                    writeln!(out, "verdict         weakly compatible (critical scale {critical_alpha:.10})")
                }
                Compatibility::Incompatible => writeln!(out, "verdict         incompatible"),
            }
            .map_err(io)?;
            if let Some(n) = &c.numeric {
                for (alpha, v) in &n.probes {
                    writeln!(out, "probe alpha={alpha:<10} {v:?}").map_err(io)?;
                }
                writeln!(out, "numeric agrees  {}", n.agrees).map_err(io)?;
                if !n.agrees {
                    writeln!(out, "note            {}", c.note).map_err(io)?;
                    return Err(CliError::Assertion(vec!["quadrature disagrees with the analytic verdict".into()]));
                }
            }
            writeln!(out, "note            {}", c.note).map_err(io)?;
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
