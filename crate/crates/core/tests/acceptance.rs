//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::time::{Duration, Instant};

use common::{direct_sup_norm, grid_primal, Closed};
use orlicz_duality::cli::run::{duality_trial, FuzzUtility, RunReport};
use orlicz_duality::dual::{lambda_star, variational_residual};
use orlicz_duality::market::{martingale_polytope, seeded_one_period};
use orlicz_duality::orlicz::{
    classify_loss_bound, sup_norm_bounds, orlicz_dual_norm, Compatibility, LossBoundInput, TailFamily,
};
use orlicz_duality::primal::{loss_bound_monotonicity, replication_checks, verify_duality};
use orlicz_duality::singular::{
    compound_poisson_optimum, discrete_z_gprime, discrete_z_singular_mass, calibrate_flat_boundary, diagonal_growth, matrix_series, negative_price_diagonal,
    CompoundPoissonSpec, DiagonalAsymptotics, DiagonalSequence, DiscreteZSpec, MatrixModelSpec,
};
use orlicz_duality::{dual_optimize, Error, EventTree, FiniteRV, LossBound, UtilityFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CLOSED_FORM_TOL: f64 = 1e-8;
const CLOSED_FORM_BUDGET: Duration = Duration::from_secs(1);
const GAP_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-6;
const FUZZ_BUDGET: Duration = Duration::from_secs(30);
const BUDGET_TOL: f64 = 1e-8;
const FIRST_ORDER_TOL: f64 = 1e-10;
const VARIATIONAL_TOL: f64 = 1e-8;
const PERTURBED_MIN: f64 = 1e-4;
const CLAIM_TOL: f64 = 1e-4;
const BUDGET_CHECK_TOL: f64 = 1e-8;
const NORM_TOL: f64 = 1e-6;
const CRITICAL_TOL: f64 = 1e-6;
const SERIES_TOL: f64 = 1e-12;
const ORDER_SLACK: f64 = 1e-8;

fn report(id: u32, title: &str, failures: &[String], detail: String) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{verdict}] {title}: {detail}");
    for f in failures {
        println!("    {f}");
    }
    assert!(failures.is_empty(), "criterion {id} failed: {failures:?}");
}

fn binomial() -> EventTree {
    EventTree::binomial(1.0, 2.0, 0.5, 0.75, 1).unwrap()
}

fn trinomial() -> EventTree {
    EventTree::trinomial(1.0, [2.0, 1.0, 0.5], [0.3, 0.4, 0.3], 1).unwrap()
}

#[test]
fn criterion_01_compound_poisson_closed_form() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for nu in [0.5, 1.0, 2.0, 3.0, 5.0] {
        let r = compound_poisson_optimum(&CompoundPoissonSpec::new(1.0, 1.0, nu).unwrap()).unwrap();
        let err = (r.position - ((1.0 + nu * nu).sqrt() - 1.0)).abs();
        worst = worst.max(err);
        if err > CLOSED_FORM_TOL {
            failures.push(format!("nu = {nu}: error {err:e}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > CLOSED_FORM_BUDGET {
        failures.push(format!("runtime {elapsed:?}"));
    }
    report(1, "optimal position equals sqrt(1+nu^2)-1", &failures, format!("max error {worst:.2e}, {elapsed:?}"));
}

fn fuzz_reports() -> Vec<RunReport> {
    (0..100u64).map(|s| duality_trial(s, 6, 2, FuzzUtility::Both).expect("trial runs")).collect()
}

#[test]
fn criterion_02_strong_duality_on_random_markets() {
    let start = Instant::now();
    let reports = fuzz_reports();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for r in &reports {
        let rel = r.gap / (1.0 + r.value_primal.abs());
        worst = worst.max(rel);
        if rel > GAP_TOL {
            failures.push(format!("seed {}: relative gap {rel:e}", r.seed));
        }
    }
    let mut worst_oracle = 0.0f64;
    for r in reports.iter().take(10) {
        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
        let states = rng.random_range(2..=6);
        let assets = rng.random_range(1..=2usize.min(states - 1));
        let tree = orlicz_duality::market::random_one_period(&mut rng, states, assets).unwrap();
        let u = if r.seed % 2 == 0 { Closed::Exp } else { Closed::Log(-2.0) };
        let (v, _) = grid_primal(u, &tree, 0.0);
        let err = (v - r.value_primal).abs() / (1.0 + v.abs());
        worst_oracle = worst_oracle.max(err);
        if err > ORACLE_TOL {
            failures.push(format!("seed {}: grid oracle {v} vs primal {}", r.seed, r.value_primal));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > FUZZ_BUDGET {
        failures.push(format!("runtime {elapsed:?}"));
    }
    report(
        2,
        "strong duality on 100 random markets",
        &failures,
        format!("max relative gap {worst:.2e}, max oracle error {worst_oracle:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_03_budget_identity() {
    let reports = fuzz_reports();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for r in &reports {
        match r.budget_residual {
            Some(b) => {
                worst = worst.max(b);
                if b > BUDGET_TOL {
                    failures.push(format!("seed {}: budget residual {b:e}", r.seed));
                }
            }
            None => failures.push(format!("seed {}: no budget residual", r.seed)),
        }
    }
    report(3, "budget identity under the dual optimum", &failures, format!("max residual {worst:.2e}"));
}

#[test]
fn criterion_04_first_order_condition() {
    let reports = fuzz_reports();
    let mut failures = Vec::new();
    let worst = reports.iter().map(|r| r.first_order_residual).fold(0.0, f64::max);
    for r in &reports {
        if r.first_order_residual > FIRST_ORDER_TOL {
            failures.push(format!("seed {}: residual {:e}", r.seed, r.first_order_residual));
        }
    }
    let log = UtilityFunction::log_shifted(-2.0).unwrap();
    let p = [0.3, 0.7];
    for q in [[0.5, 0.5], [0.2, 0.3]] {
        let boundary = -2.0 * (q[0] + q[1]);
        match lambda_star(&log, boundary, &q, &p) {
            Err(Error::Domain(_)) => {}
            other => failures.push(format!("c = a·Q(Ω) = {boundary}: expected a domain error, got {other:?}")),
        }
        match lambda_star(&log, boundary + 1e-3, &q, &p) {
            Ok(l) if l > 0.0 => {
                let res = boundary + 1e-3
                    + q.iter().zip(&p).map(|(qi, pi)| qi * log.phi_prime(l * qi / pi).unwrap()).sum::<f64>();
                if res.abs() > FIRST_ORDER_TOL {
                    failures.push(format!("c = a·Q(Ω) + 1e-3: residual {res:e}"));
                }
            }
            other => failures.push(format!("c = a·Q(Ω) + 1e-3: expected a root, got {other:?}")),
        }
    }
    report(4, "first-order condition for the multiplier", &failures, format!("max residual {worst:.2e}"));
}

#[test]
fn criterion_05_variational_inequality() {
    let t = trinomial();
    let w = LossBound::constant(&t, 1.0).unwrap();
    let u = UtilityFunction::exponential(1.0).unwrap();
    let s = dual_optimize(&u, &t, 0.0, &w).unwrap();
    let poly = martingale_polytope(&t);
    let v = poly.vertices().unwrap();
    let at_opt = variational_residual(&u, s.lambda, &s.q, t.path_probs(), v, 0.0);
    let q: Vec<f64> = s.q.iter().zip(&v[0]).map(|(a, b)| 0.9 * a + 0.1 * b).collect();
    let lam = lambda_star(&u, 0.0, &q, t.path_probs()).unwrap();
    let perturbed = variational_residual(&u, lam, &q, t.path_probs(), v, 0.0);
    let mut failures = Vec::new();
    if at_opt > VARIATIONAL_TOL {
        failures.push(format!("residual at the optimum {at_opt:e}"));
    }
    if !(perturbed > PERTURBED_MIN) {
        failures.push(format!("residual at the perturbed measure {perturbed:e}"));
    }
    report(
        5,
        "variational inequality at and off the optimum",
        &failures,
        format!("optimum {at_opt:.2e}, perturbed {perturbed:.3e}"),
    );
}

#[test]
fn criterion_06_claim_recovery_and_translated_budget() {
    let mut failures = Vec::new();
    let t = binomial();
    let w = LossBound::constant(&t, 1.0).unwrap();
    let exp = UtilityFunction::exponential(1.0).unwrap();
    let r = verify_duality(&exp, &t, 0.0, &w).unwrap();
    let h = r.primal.strategy.flat()[0];
    let h_err = (h - 6f64.ln() / 1.5).abs();
    if h_err > CLAIM_TOL {
        failures.push(format!("h* = {h}"));
    }
    if r.claim_mismatch > CLAIM_TOL {
        failures.push(format!("claim mismatch {:e}", r.claim_mismatch));
    }
    let log = UtilityFunction::log_shifted(-2.0).unwrap();
    let mut worst = 0.0f64;
    for (name, tree) in [("binomial", binomial()), ("trinomial", trinomial())] {
        let c = replication_checks(&log, &tree, 1.0).unwrap();
        let m = c.max_excess.max(0.0).max(c.optimum_residual).max(c.shifted_conjugate_residual);
        worst = worst.max(m);
        if m > BUDGET_CHECK_TOL {
            failures.push(format!("{name}: {c:?}"));
        }
    }
    report(
        6,
        "complete-market claim recovery and translated budget",
        &failures,
        format!("h* error {h_err:.2e}, claim mismatch {:.2e}, budget checks {worst:.2e}", r.claim_mismatch),
    );
}

#[test]
fn criterion_07_sup_norm_sandwich() {
    let log = UtilityFunction::log_shifted(-2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    for k in 0..100 {
        let n = rng.random_range(1..=6);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let f = FiniteRV::uniform(values).unwrap();
        let b = sup_norm_bounds(&log, &f).unwrap();
        if !(b.lower <= b.sup_norm * (1.0 + 1e-12) && b.sup_norm <= b.upper * (1.0 + 1e-12)) {
            failures.push(format!("sample {k}: {b:?}"));
        }
    }
    let mut worst = 0.0f64;
    for c in [0.25, 1.0, 3.0, -2.0] {
        let b = sup_norm_bounds(&log, &FiniteRV::constant(c).unwrap()).unwrap();
        let gap = (b.lower - b.sup_norm).abs();
        worst = worst.max(gap);
        if gap > 1e-12 * (1.0 + c.abs()) {
            failures.push(format!("constant {c}: k·N = {} vs {}", b.lower, b.sup_norm));
        }
    }
    report(7, "k·N(f) ≤ sup|f| ≤ −a·N(f)", &failures, format!("100 samples, equality on constants within {worst:.1e}"));
}

#[test]
fn criterion_08_dual_norm_matches_direct_sup() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let exp = UtilityFunction::exponential(1.0).unwrap();
    let ln2 = orlicz_dual_norm(&exp, &FiniteRV::constant(1.0).unwrap()).to_f64();
    if (ln2 - 2f64.ln()).abs() > NORM_TOL {
        failures.push(format!("constant case {ln2}"));
    }
    let cases = [(UtilityFunction::exponential(1.0).unwrap(), Closed::Exp), (UtilityFunction::log_shifted(-2.0).unwrap(), Closed::Log(-2.0))];
    let mut count = 0;
    for (u, closed) in &cases {
        for n in 1..=4 {
            for _ in 0..25 {
                let g: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let w: Vec<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
                let s: f64 = w.iter().sum();
                let p: Vec<f64> = w.iter().map(|v| v / s).collect();
                let amemiya = orlicz_dual_norm(u, &FiniteRV::new(g.clone(), p.clone()).unwrap()).to_f64();
                let direct = direct_sup_norm(*closed, &g, &p);
                let err = (amemiya - direct).abs();
                worst = worst.max(err);
                count += 1;
                if err > NORM_TOL {
                    failures.push(format!("{u:?} g = {g:?} p = {p:?}: {amemiya} vs {direct}"));
                }
            }
        }
    }
    report(8, "Amemiya norm equals the direct supremum", &failures, format!("{count} spaces, max error {worst:.2e}, ||1|| = {ln2:.12}"));
}

#[test]
fn criterion_09_tail_trichotomy() {
    let u = UtilityFunction::exponential(1.0).unwrap();
    let mut failures = Vec::new();
    let classify = |t: TailFamily| classify_loss_bound(&u, &LossBoundInput::Tail(t)).unwrap();
    let g = classify(TailFamily::gaussian(0.0, 1.0).unwrap());
    if g.verdict != Compatibility::Compatible || !g.numeric.as_ref().is_some_and(|n| n.agrees) {
        failures.push(format!("gaussian: {g:?}"));
    }
    for rate in [0.5, 1.0, 2.0] {
        let e = classify(TailFamily::two_sided_exponential(rate).unwrap());
        match e.verdict {
            Compatibility::WeaklyCompatible { critical_alpha } if (critical_alpha - rate).abs() <= CRITICAL_TOL => {}
            _ => failures.push(format!("two-sided exponential rate {rate}: {e:?}")),
        }
        if !e.numeric.as_ref().is_some_and(|n| n.agrees) {
            failures.push(format!("two-sided exponential rate {rate}: quadrature disagrees"));
        }
    }
    let c = classify(TailFamily::cauchy(1.0).unwrap());
    if c.verdict != Compatibility::Incompatible || !c.numeric.as_ref().is_some_and(|n| n.agrees) {
        failures.push(format!("cauchy: {c:?}"));
    }
    report(9, "compatible / weakly compatible / incompatible tails", &failures, "analytic and quadrature verdicts agree".into());
}

#[test]
fn criterion_10_singular_mass_and_calibration() {
    let mut failures = Vec::new();
    let calibrated = calibrate_flat_boundary(&[1.0]).unwrap();
    let g1 = calibrated.gprime_at_one();
    if g1.abs() > SERIES_TOL || (calibrated.p1() - 8.0 / 9.0).abs() > SERIES_TOL {
        failures.push(format!("calibration: p1 = {}, g'(1) = {g1:e}", calibrated.p1()));
    }
    let spec = DiscreteZSpec::new(0.9, vec![0.1]).unwrap();
    let mass = discrete_z_singular_mass(&spec).unwrap();
    let err = (mass - 0.025 / 0.65).abs();
    if err > SERIES_TOL {
        failures.push(format!("mass {mass} error {err:e}"));
    }
    let min_grid = (1..1000)
        .map(|k| -1.0 + 2.0 * k as f64 / 1000.0)
        .map(|h| discrete_z_gprime(h, &spec).value.to_f64())
        .fold(f64::INFINITY, f64::min);
    if !(min_grid > 0.0) {
        failures.push(format!("g' not positive on the grid: min {min_grid}"));
    }
    report(
        10,
        "singular mass and its calibration to zero",
        &failures,
        format!("|g'(1)| = {:.1e}, mass = {mass:.12}, min g' on grid = {min_grid:.4}", g1.abs()),
    );
}

#[test]
fn criterion_11_finiteness_boundary_and_growth() {
    let mut failures = Vec::new();
    let spec = MatrixModelSpec::new(4.0, 400).unwrap();
    let at5 = matrix_series(&spec, 5.0);
    let at51 = matrix_series(&spec, 5.1);
    if !at5.finite || at51.finite {
        failures.push(format!("h = 5 finite {}, h = 5.1 finite {}", at5.finite, at51.finite));
    }
    let psi = diagonal_growth(&negative_price_diagonal(1000)).unwrap();
    if psi != 1.0 {
        failures.push(format!("growth of -S1 = {psi}"));
    }
    let bounded = DiagonalSequence {
        rule: std::sync::Arc::new(|i| (i as f64).sin()),
        horizon: 1000,
        asymptotics: DiagonalAsymptotics::Bounded { bound: 1.0 },
    };
    let zero = diagonal_growth(&bounded).unwrap();
    if zero != 0.0 {
        failures.push(format!("growth of a bounded input = {zero}"));
    }
    report(11, "finiteness flips between 5 and 5.1; growth functional", &failures, format!("growth(-S1) = {psi}, growth(bounded) = {zero}"));
}

#[test]
fn criterion_12_loss_bound_monotonicity() {
    let t = binomial();
    let u = UtilityFunction::exponential(1.0).unwrap();
    let w1 = LossBound::constant(&t, 1.0).unwrap();
    let w2 = LossBound::constant(&t, 2.0).unwrap();
    let mut failures = Vec::new();
    let tight = loss_bound_monotonicity(&u, &t, 0.0, &w1, &w2, 0.1).unwrap();
    if !(tight.value_w1 <= tight.value_w2 + ORDER_SLACK && tight.value_w2 <= tight.dual_value + ORDER_SLACK) {
        failures.push(format!("c_max = 0.1: {tight:?}"));
    }
    let slack = loss_bound_monotonicity(&u, &t, 0.0, &w1, &w2, 1e3).unwrap();
    if (slack.value_w1 - slack.dual_value).abs() > ORDER_SLACK || (slack.value_w2 - slack.dual_value).abs() > ORDER_SLACK {
        failures.push(format!("slack cap: {slack:?}"));
    }
    report(
        12,
        "constrained values are ordered by the loss bound",
        &failures,
        format!(
            "c_max = 0.1: {:.10} ≤ {:.10} ≤ {:.10}; slack cap equal within {:.1e}",
            tight.value_w1,
            tight.value_w2,
            tight.dual_value,
            (slack.value_w1 - slack.dual_value).abs().max((slack.value_w2 - slack.dual_value).abs())
        ),
    );
}

#[test]
fn random_markets_are_reproducible() {
    let a = seeded_one_period(42, 5, 2).unwrap();
    let b = seeded_one_period(42, 5, 2).unwrap();
    assert_eq!(a.gains_matrix(), b.gains_matrix());
    assert_eq!(a.path_probs(), b.path_probs());
}
