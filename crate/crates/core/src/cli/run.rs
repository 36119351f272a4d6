//! Scenario execution and report formatting.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::scenario::ScenarioSpec;
use super::CliError;
use crate::dual::{dual_optimize_with, DualOptions, DualSolution};
use crate::market::{martingale_polytope, random_one_period, EventTree, LossBound};
use crate::numeric::compensated_sum;
use crate::primal::{primal_optimize, recover_claim, PrimalSolution};
use crate::singular::TruncationTable;
use crate::utility::UtilityFunction;

pub const GAP_TOLERANCE: f64 = 1e-6;
pub const BUDGET_TOLERANCE: f64 = 1e-8;
pub const FIRST_ORDER_TOLERANCE: f64 = 1e-10;
pub const ORDER_SLACK: f64 = 1e-8;

/// A named quantity and the bound it must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

/// Per-path solution data.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub path: usize,
    pub prob: f64,
    pub dual_prob: f64,
    pub density: f64,
    pub wealth: f64,
    pub recovered: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub seed: u64,
    pub utility: &'static str,
    pub paths: usize,
    pub value_primal: f64,
    pub value_dual: f64,
    pub gap: f64,
    /// `None` when some path carries no martingale mass.
    pub budget_residual: Option<f64>,
    pub lambda_star: f64,
    pub first_order_residual: f64,
    pub variational_residual: f64,
    pub strategy: Vec<f64>,
    pub constrained_value: Option<f64>,
    pub table: Vec<PathRow>,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| format!("seed {}: {} = {:e} exceeds {:e}", self.seed, c.name, c.value, c.limit))
            .collect()
    }
}

/// Runs primal, dual, claim recovery and the residual checks on one market.
pub fn run_market(
    u: &UtilityFunction,
    tree: &EventTree,
    x: f64,
    w: &LossBound,
    c_max: Option<f64>,
    opts: &DualOptions,
    seed: u64,
) -> crate::Result<RunReport> {
    let start = Instant::now();
    let primal: PrimalSolution = primal_optimize(u, tree, x, w, None)?;
    let poly = martingale_polytope(tree);
    let dual: DualSolution = dual_optimize_with(u, &poly, tree.path_probs(), x, opts)?;
    let recovered = if dual.excluded_paths.is_empty() { Some(recover_claim(u, x, &dual)?) } else { None };
    let budget_residual = recovered.as_ref().map(|f| {
        (compensated_sum(dual.q.iter().zip(f.values()).map(|(q, v)| q * v)) - x - dual.singular_mass).abs()
    });
    let gap = (primal.value - dual.value).abs();
    let scale = 1.0 + primal.value.abs();
    let mut checks = vec![
        Check::new("gap", gap / scale, GAP_TOLERANCE),
        Check::new("first_order_residual", dual.first_order_residual, FIRST_ORDER_TOLERANCE),
        Check::new("variational_residual", dual.variational_residual, opts.tolerance),
    ];
    if let Some(b) = budget_residual {
        checks.push(Check::new("budget_residual", b, BUDGET_TOLERANCE));
    }
    let constrained_value = match c_max {
        Some(c) => {
            let v = primal_optimize(u, tree, x, w, Some(c))?.value;
            checks.push(Check::new("constrained_excess", v - dual.value, ORDER_SLACK));
            Some(v)
        }
        None => None,
    };
    let table = (0..tree.path_count())
        .map(|i| PathRow {
            path: i,
            prob: tree.path_probs()[i],
            dual_prob: dual.q[i],
            density: dual.density[i],
            wealth: primal.claim.values()[i],
            recovered: recovered.as_ref().map(|f| f.values()[i]),
        })
        .collect();
    Ok(RunReport {
        seed,
        utility: u.family_name(),
        paths: tree.path_count(),
        value_primal: primal.value,
        value_dual: dual.value,
        gap,
        budget_residual,
        lambda_star: dual.lambda,
        first_order_residual: dual.first_order_residual,
        variational_residual: dual.variational_residual,
        strategy: primal.strategy.flat(),
        constrained_value,
        table,
        checks,
        elapsed: start.elapsed(),
    })
}

/// Runs a validated scenario.
pub fn run(spec: &ScenarioSpec) -> crate::Result<RunReport> {
    let u = spec.utility.build()?;
    let tree = spec.market.build(spec.seed)?;
    let w = spec.loss_bound.build(&tree)?;
    run_market(&u, &tree, spec.x, &w, spec.c_max, &spec.solver.dual_options(), spec.seed)
}

/// Utilities cycled through by the fuzzing harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FuzzUtility {
    Exponential,
    Log,
    Both,
}

/// One seeded trial: a random one-period market with `2..=max_states`
/// states and `1..=max_assets` assets (at most states − 1).
pub fn duality_trial(seed: u64, max_states: usize, max_assets: usize, utility: FuzzUtility) -> crate::Result<RunReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = rng.random_range(2..=max_states.max(2));
    let assets = rng.random_range(1..=max_assets.max(1).min(states - 1));
    let tree = random_one_period(&mut rng, states, assets)?;
    let u = match (utility, seed % 2) {
        (FuzzUtility::Exponential, _) | (FuzzUtility::Both, 0) => UtilityFunction::exponential(1.0)?,
        _ => UtilityFunction::log_shifted(-2.0)?,
    };
    let w = LossBound::constant(&tree, 1.0)?;
    run_market(&u, &tree, 0.0, &w, None, &DualOptions::default(), seed)
}

/// Runs `trials` seeds starting at `seed` in parallel; results sorted by seed.
pub fn duality_check(
    trials: usize,
    seed: u64,
    max_states: usize,
    max_assets: usize,
    utility: FuzzUtility,
) -> Vec<(u64, crate::Result<RunReport>)> {
    let mut out: Vec<(u64, crate::Result<RunReport>)> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed + k;
            (s, duality_trial(s, max_states, max_assets, utility))
        })
        .collect();
    out.sort_by_key(|(s, _)| *s);
    out
}

pub const CSV_HEADER: [&str; 6] = ["seed", "value_primal", "value_dual", "gap", "budget_residual", "lambda_star"];

pub fn csv_row(r: &RunReport) -> [String; 6] {
    [
        r.seed.to_string(),
        format!("{:?}", r.value_primal),
        format!("{:?}", r.value_dual),
        format!("{:?}", r.gap),
        r.budget_residual.map_or_else(|| "NA".to_string(), |b| format!("{b:?}")),
        format!("{:?}", r.lambda_star),
    ]
}

/// Writes one CSV row per report.
pub fn write_csv<'a>(path: &std::path::Path, reports: impl IntoIterator<Item = &'a RunReport>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(CSV_HEADER).map_err(|e| CliError::Io(e.to_string()))?;
    for r in reports {
        w.write_record(csv_row(r)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn print_report(out: &mut dyn Write, r: &RunReport) -> std::io::Result<()> {
    writeln!(out, "utility            {}", r.utility)?;
    writeln!(out, "paths              {}", r.paths)?;
    writeln!(out, "primal value       {:.12}", r.value_primal)?;
    writeln!(out, "dual value         {:.12}", r.value_dual)?;
    writeln!(out, "duality gap        {:.3e}", r.gap)?;
    writeln!(out, "lambda*            {:.12}", r.lambda_star)?;
    match r.budget_residual {
        Some(b) => writeln!(out, "budget residual    {b:.3e}")?,
        None => writeln!(out, "budget residual    n/a (paths without martingale mass)")?,
    }
    writeln!(out, "first-order resid  {:.3e}", r.first_order_residual)?;
    writeln!(out, "variational resid  {:.3e}", r.variational_residual)?;
    if let Some(c) = r.constrained_value {
        writeln!(out, "constrained value  {c:.12}")?;
    }
    let strategy: Vec<String> = r.strategy.iter().map(|h| format!("{h:.10}")).collect();
    writeln!(out, "strategy           [{}]", strategy.join(", "))?;
    writeln!(out)?;
    writeln!(out, "{:>6} {:>14} {:>14} {:>14} {:>16} {:>16}", "path", "p", "q*", "dq*/dp", "wealth", "recovered")?;
    for row in &r.table {
        let rec = row.recovered.map_or_else(|| "n/a".to_string(), |v| format!("{v:.10}"));
        writeln!(
            out,
            "{:>6} {:>14.10} {:>14.10} {:>14.10} {:>16.10} {:>16}",
            row.path, row.prob, row.dual_prob, row.density, row.wealth, rec
        )?;
    }
    writeln!(out)?;
    for c in &r.checks {
        let verdict = if c.passed() { "ok" } else { "FAIL" };
        writeln!(out, "check {:<22} {:>10.3e} <= {:<8.0e} {verdict}", c.name, c.value, c.limit)?;
    }
    writeln!(out, "elapsed            {:.3} ms", r.elapsed.as_secs_f64() * 1e3)
}

pub fn print_trials(out: &mut dyn Write, results: &[(u64, crate::Result<RunReport>)]) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>8} {:>12} {:>6} {:>18} {:>18} {:>11} {:>11} {:>14}",
        "seed", "utility", "paths", "value_primal", "value_dual", "gap", "budget", "lambda*"
    )?;
    for (seed, r) in results {
        match r {
            Ok(r) => {
                let budget = r.budget_residual.map_or_else(|| "n/a".to_string(), |b| format!("{b:.3e}"));
                writeln!(
                    out,
                    "{:>8} {:>12} {:>6} {:>18.12} {:>18.12} {:>11.3e} {:>11} {:>14.10}",
                    seed, r.utility, r.paths, r.value_primal, r.value_dual, r.gap, budget, r.lambda_star
                )?;
            }
            Err(e) => writeln!(out, "{seed:>8} error: {e}")?,
        }
    }
    Ok(())
}

pub fn print_table(out: &mut dyn Write, t: &TruncationTable) -> std::io::Result<()> {
    writeln!(out, "scenario {}", t.scenario)?;
    writeln!(
        out,
        "{:>6} {:>7} {:>18} {:>18} {:>14} {:>14} {:>14} {:>11}",
        "level", "paths", "value_primal", "value_dual", "lambda*", "position", "E_q*[S1]", "error"
    )?;
    let errors = t.errors();
    for (k, r) in t.rows.iter().enumerate() {
        let err = errors.as_ref().map_or_else(|| "n/a".to_string(), |e| format!("{:.3e}", e[k]));
        writeln!(
            out,
            "{:>6} {:>7} {:>18.12} {:>18.12} {:>14.10} {:>14.10} {:>14.6e} {:>11}",
            r.level, r.paths, r.value_primal, r.value_dual, r.lambda_star, r.position, r.dual_mean, err
        )?;
    }
    if let Some(a) = t.analytic_value {
        writeln!(out, "untruncated value  {a:.12}")?;
    }
    if let Some(m) = t.analytic_mean {
        writeln!(out, "untruncated E[S1]  {m:.6e}")?;
    }
    writeln!(out, "nondecreasing      {}", t.nondecreasing)?;
    writeln!(out, "nonincreasing      {}", t.nonincreasing)?;
    if let Some(s) = t.error_shrinks {
        writeln!(out, "error shrinks      {s}")?;
    }
    Ok(())
}

pub const STUDY_HEADER: [&str; 8] =
    ["level", "paths", "value_primal", "value_dual", "gap", "lambda_star", "position", "dual_mean"];

pub fn write_study_csv(path: &std::path::Path, t: &TruncationTable) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(STUDY_HEADER).map_err(|e| CliError::Io(e.to_string()))?;
    for r in &t.rows {
        w.write_record([
            r.level.to_string(),
            r.paths.to_string(),
            format!("{:?}", r.value_primal),
            format!("{:?}", r.value_dual),
            format!("{:?}", (r.value_primal - r.value_dual).abs()),
            format!("{:?}", r.lambda_star),
            format!("{:?}", r.position),
            format!("{:?}", r.dual_mean),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Gap per level, a monotone value sequence and, when the untruncated value
/// is known, shrinking error.
pub fn study_checks(t: &TruncationTable) -> Vec<Check> {
    let mut checks: Vec<Check> = t
        .rows
        .iter()
        .map(|r| {
            Check::new(
                format!("gap at level {}", r.level),
                (r.value_primal - r.value_dual).abs() / (1.0 + r.value_primal.abs()),
                GAP_TOLERANCE,
            )
        })
        .collect();
    checks.push(Check::new("non-monotone values", if t.nondecreasing || t.nonincreasing { 0.0 } else { 1.0 }, 0.0));
    if let Some(s) = t.error_shrinks {
        checks.push(Check::new("error growth", if s { 0.0 } else { 1.0 }, 0.0));
    }
    checks
}
