//! Headline numbers of the singular examples.

use std::io::Write;
use std::sync::Arc;

use super::run::Check;
use crate::singular::{
    compound_poisson_optimum, discrete_z_gprime, discrete_z_optimum, discrete_z_singular_mass, calibrate_flat_boundary, matrix_finiteness_boundary, diagonal_growth,
    matrix_series, negative_price_diagonal, CompoundPoissonSpec, DiagonalAsymptotics, DiagonalSequence, DiscreteZSpec,
    MatrixModelSpec,
};

/// Labeled results with a short description of where each number comes from.
#[derive(Debug, Clone, Default)]
pub struct Reproduction {
    pub name: &'static str,
    pub lines: Vec<(String, String, String)>,
    pub checks: Vec<Check>,
}

impl Reproduction {
    fn new(name: &'static str) -> Self {
        Reproduction { name, ..Default::default() }
    }

    fn line(&mut self, label: &str, value: impl std::fmt::Display, source: &str) {
        self.lines.push((label.to_string(), value.to_string(), source.to_string()));
    }

    fn check(&mut self, name: &str, value: f64, limit: f64) {
        self.checks.push(Check { name: name.to_string(), value, limit });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn print(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "{}", self.name)?;
        let width = self.lines.iter().map(|l| l.0.len()).max().unwrap_or(0);
        for (label, value, source) in &self.lines {
            writeln!(out, "  {label:<width$}  {value:<24}  {source}")?;
        }
        for c in &self.checks {
            let verdict = if c.passed() { "ok" } else { "FAIL" };
            writeln!(out, "  check {:<28} {:>10.3e} <= {:<8.0e} {verdict}", c.name, c.value, c.limit)?;
        }
        Ok(())
    }
}

/// Exponential utility on a compound Poisson market with two-sided
/// exponential jumps around 1.
pub fn compound_poisson(rate: f64, horizon: f64, nu: f64) -> crate::Result<Reproduction> {
    let spec = CompoundPoissonSpec::new(rate, horizon, nu)?;
    let r = compound_poisson_optimum(&spec)?;
    let mut rep = Reproduction::new("ex35");
    rep.line("a*", format!("{:.12}", r.position), "numeric argmin of the jump mgf M(-a)");
    rep.line("sqrt(1+nu^2)-1", format!("{:.12}", r.closed_form), "root of a^2 + 2a - nu^2 = 0");
    rep.line("optimal value", format!("{:.12}", r.value), "-exp(rate*T*(M(-a*)-1))");
    rep.line("E[exp(-a* S_T)]", format!("{:.12}", r.normalizer), "normalizer of the optimal density");
    rep.check("|a* - closed form|", (r.position - r.closed_form).abs(), 1e-8);
    Ok(rep)
}

fn describe_z(rep: &mut Reproduction, spec: &DiscreteZSpec) {
    rep.line("P(Z = 1)", format!("{:.12}", spec.p1()), "mass at z = 1");
    for (n, z, p) in spec.atoms().skip(1).take(8) {
        rep.line(&format!("P(Z = {z:.4})"), format!("{p:.12}"), &format!("atom n = {n}"));
    }
}

/// Discrete `Z` with an exponential factor: singular mass at the boundary.
pub fn discrete_z(spec: &DiscreteZSpec) -> crate::Result<Reproduction> {
    let mut rep = Reproduction::new("ex36");
    describe_z(&mut rep, spec);
    let (lo, hi) = spec.finiteness_region();
    rep.line("finiteness region", format!("({lo}, {hi})"), "1 + h z_n > 0 on the supplied atoms");
    rep.line("g'(1)", format!("{:.12}", spec.gprime_at_one()), "p1/4 - sum p_n n(n-1)");
    rep.line("E[exp(-S1)]", format!("{:.12}", spec.exp_moment_at_one()), "p1/2 + sum p_n n");
    let mass = discrete_z_singular_mass(spec)?;
    rep.line("singular mass", format!("{mass:.12}"), "g'(1)/E[exp(-S1)], g' > 0 on (-1, 1)");
    let opt = discrete_z_optimum(spec)?;
    rep.line("optimal position", format!("{:.12}", opt.position), "argmax of g on (-1, 1]");
    rep.line("optimal value", format!("{:.12}", opt.value), "g at the optimal position");
    let grid_min = (1..1000)
        .map(|k| -1.0 + 2.0 * k as f64 / 1000.0)
        .map(|h| discrete_z_gprime(h, spec).value.to_f64())
        .fold(f64::INFINITY, f64::min);
    rep.check("-min g' on grid", -grid_min, 0.0);
    rep.check("-singular mass", -mass, 0.0);
    Ok(rep)
}

/// Calibration that puts `g'(1)` at zero.
pub fn flat_boundary(weights: &[f64]) -> crate::Result<Reproduction> {
    let spec = calibrate_flat_boundary(weights)?;
    let mut rep = Reproduction::new("ex37");
    describe_z(&mut rep, &spec);
    let g1 = spec.gprime_at_one();
    rep.line("g'(1)", format!("{g1:.3e}"), "p1/4 - sum p_n n(n-1) after calibration");
    rep.line("E[exp(-S1)]", format!("{:.12}", spec.exp_moment_at_one()), "p1/2 + sum p_n n");
    rep.check("|g'(1)|", g1.abs(), 1e-12);
    Ok(rep)
}

/// Matrix model: finiteness of `E[e^{-hS1}]` across `h` and the diagonal
/// growth functional.
pub fn matrix_model(exponent: f64, depth: usize, hs: &[f64]) -> crate::Result<Reproduction> {
    let spec = MatrixModelSpec::new(exponent, depth)?;
    let mut rep = Reproduction::new("ex38");
    rep.line("P(row 1)", format!("{:.12}", spec.first_row_mass()), "1 - sum_{i>=2} i^-r e^-4i");
    for &h in hs {
        let s = matrix_series(&spec, h);
        let verdict = if s.finite {
            format!("finite, g = {:.10}", s.g.to_f64())
        } else {
            format!("divergent from row {}", s.divergence_from_row.map_or("?".into(), |r| r.to_string()))
        };
        let note = if s.finite { format!("g'(h) = {:.6e}, tail <= {:.1e}", s.gprime.to_f64(), s.tail_bound) } else { "terms grow like i^-r e^{(h-5)i}".into() };
        rep.line(&format!("h = {h}"), verdict, &note);
    }
    let boundary = matrix_finiteness_boundary(&spec, 4.0, 6.0, 0.05);
    rep.line(
        "largest finite h",
        boundary.map_or("none".into(), |b| format!("{b:.2}")),
        "grid 4.00, 4.05, ..., 6.00",
    );
    let psi_price = diagonal_growth(&negative_price_diagonal(1000))?;
    rep.line("psi(-S1)", psi_price, "limsup f_ii / i, declared linear asymptotics");
    let bounded = DiagonalSequence {
        rule: Arc::new(|i| if i % 2 == 0 { 1.0 } else { -1.0 }),
        horizon: 1000,
        asymptotics: DiagonalAsymptotics::Bounded { bound: 1.0 },
    };
    let psi_bounded = diagonal_growth(&bounded)?;
    rep.line("psi(bounded)", psi_bounded, "bounded diagonals have zero growth");
    rep.check("|psi(-S1) - 1|", (psi_price - 1.0).abs(), 0.0);
    rep.check("|psi(bounded)|", psi_bounded.abs(), 0.0);
    if let Some(b) = boundary {
        rep.check("|boundary - 5|", (b - 5.0).abs(), 1e-9);
    }
    Ok(rep)
}

/// Two-atom discrete input: `P(Z = 1) = p1`, `P(Z = z_2) = p2`.
pub fn two_atom_spec(p1: f64, p2: f64) -> crate::Result<DiscreteZSpec> {
    DiscreteZSpec::new(p1, vec![p2])
}
