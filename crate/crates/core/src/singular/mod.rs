//! Semi-analytic models with unbounded jumps: compound Poisson with
//! double-exponential jumps, the `S₁ = ZY` family where the dual optimum can
//! carry a singular part, and a two-index matrix model with many optimal
//! functionals.

mod truncation;

pub use truncation::{truncation_study, TruncationRow, TruncationScenario, TruncationTable};

use std::f64::consts::E;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::numeric::{compensated_sum, golden_section_min, safeguarded_newton};
use crate::utility::ExtendedReal;

/// Compound Poisson price with jump rate, horizon and Laplace jumps centered at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompoundPoissonSpec {
    pub rate: f64,
    pub horizon: f64,
    pub nu: f64,
}

impl CompoundPoissonSpec {
    pub fn new(rate: f64, horizon: f64, nu: f64) -> Result<Self> {
        for (name, v) in [("rate", rate), ("horizon", horizon), ("nu", nu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { rate, horizon, nu })
    }

    /// `E[e^{sY}] = e^s ν²/(ν² − s²)` for `|s| < ν`.
    pub fn jump_mgf(&self, s: f64) -> f64 {
        let nu2 = self.nu * self.nu;
        if s.abs() >= self.nu {
            return f64::INFINITY;
        }
        s.exp() * nu2 / (nu2 - s * s)
    }

    /// `E[e^{−a S_T}] = exp(λT(M(−a) − 1))`.
    pub fn terminal_exp_moment(&self, a: f64) -> f64 {
        (self.rate * self.horizon * (self.jump_mgf(-a) - 1.0)).exp()
    }

    /// Jump CDF.
    pub fn jump_cdf(&self, y: f64) -> f64 {
        if y < 1.0 {
            0.5 * (self.nu * (y - 1.0)).exp()
        } else {
            1.0 - 0.5 * (-self.nu * (y - 1.0)).exp()
        }
    }
}

/// Optimal buy-and-hold position for exponential utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompoundPoissonOptimum {
    /// Numerical argmin of `M(−a)`.
    pub position: f64,
    /// `√(1 + ν²) − 1`.
    pub closed_form: f64,
    /// `−exp(λT(M(−a*) − 1))`.
    pub value: f64,
    /// `E[e^{−a* S_T}]`, the denominator of the optimal density.
    pub normalizer: f64,
}

/// Minimizes the jump moment generating function over `(−ν, ν)` and checks
/// the root of `a² + 2a − ν² = 0`.
pub fn compound_poisson_optimum(spec: &CompoundPoissonSpec) -> Result<CompoundPoissonOptimum> {
    let nu = spec.nu;
    let log_mgf = |a: f64| -a + 2.0 * nu.ln() - (nu * nu - a * a).ln();
    let (guess, _) = golden_section_min(log_mgf, -nu * (1.0 - 1e-12), nu * (1.0 - 1e-12), 1e-10 * nu);
    let slope = |a: f64| {
        let d = nu * nu - a * a;
        (-1.0 + 2.0 * a / d, 2.0 * (nu * nu + a * a) / (d * d))
    };
    let lo = (guess - 1e-6 * nu).max(-nu * (1.0 - 1e-12));
    let hi = (guess + 1e-6 * nu).min(nu * (1.0 - 1e-12));
    let position = if slope(lo).0 < 0.0 && slope(hi).0 > 0.0 {
        safeguarded_newton(slope, lo, hi, 1e-15, 200)?
    } else {
        guess
    };
    let closed_form = (1.0 + nu * nu).sqrt() - 1.0;
    if (position - closed_form).abs() > 1e-8 {
        return Err(Error::NotConverged { iterations: 200, residual: (position - closed_form).abs() });
    }
    let normalizer = spec.terminal_exp_moment(position);
    Ok(CompoundPoissonOptimum { position, closed_form, value: -normalizer, normalizer })
}

/// Law of `Z` on `{1/n − 1 : n ≥ 1}`; `tail[k]` is the mass at `n = k + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteZSpec {
    p1: f64,
    tail: Vec<f64>,
}

impl DiscreteZSpec {
    pub fn new(p1: f64, tail: Vec<f64>) -> Result<Self> {
        if !(p1 > 0.0 && p1 <= 1.0) {
            return Err(invalid(format!("mass at z = 1 must lie in (0, 1], got {p1}")));
        }
        if let Some(bad) = tail.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(invalid(format!("tail masses must be finite and nonnegative, got {bad}")));
        }
        let total = p1 + compensated_sum(tail.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self { p1, tail })
    }

    /// `p₁ = 1 − θΣw`, `p_n = θ w_n` with `θ` chosen by the caller.
    fn from_weights(p1: f64, tail: Vec<f64>) -> Self {
        Self { p1, tail }
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    pub fn z(n: usize) -> f64 {
        1.0 / n as f64 - 1.0
    }

    /// `(n, z_n, p_n)` over atoms with positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        std::iter::once((1, 1.0, self.p1))
            .chain(self.tail.iter().enumerate().map(|(k, &p)| (k + 2, Self::z(k + 2), p)))
            .filter(|a| a.2 > 0.0)
    }

    /// Largest `n` with positive mass.
    pub fn max_atom(&self) -> usize {
        self.atoms().map(|a| a.0).max().unwrap_or(1)
    }

    /// Keeps atoms `n ≤ depth` and renormalizes.
    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(invalid("truncation depth must be at least 1"));
        }
        let keep = depth.saturating_sub(1).min(self.tail.len());
        let mass = self.p1 + compensated_sum(self.tail[..keep].iter().copied());
        Ok(Self { p1: self.p1 / mass, tail: self.tail[..keep].iter().map(|p| p / mass).collect() })
    }

    /// `E[e^{−S₁}] = p₁/2 + Σ p_n n`.
    pub fn exp_moment_at_one(&self) -> f64 {
        compensated_sum(self.atoms().map(|(n, _, p)| if n == 1 { p / 2.0 } else { p * n as f64 }))
    }

    /// `g'(1) = p₁/4 − Σ p_n n(n−1)` from the identity `1 + z_n = 1/n`.
    pub fn gprime_at_one(&self) -> f64 {
        compensated_sum(self.atoms().map(|(n, _, p)| {
            if n == 1 {
                p / 4.0
            } else {
                let n = n as f64;
                -p * n * (n - 1.0)
            }
        }))
    }

    /// Open interval of `h` where every exponential moment is finite.
    pub fn finiteness_region(&self) -> (f64, f64) {
        let n = self.max_atom();
        let upper = if n == 1 { f64::INFINITY } else { n as f64 / (n as f64 - 1.0) };
        (-1.0, upper)
    }
}

/// A series value together with its divergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: ExtendedReal,
    pub divergent: bool,
}

impl SeriesValue {
    fn finite(v: f64) -> Self {
        Self { value: ExtendedReal::Finite(v), divergent: false }
    }

    fn diverges(value: ExtendedReal) -> Self {
        Self { value, divergent: true }
    }
}

/// `g(h) = E[−e^{−hS₁}] = −Σ p_n/(1 + h z_n)` with `Y` standard exponential.
pub fn discrete_z_g(h: f64, spec: &DiscreteZSpec) -> SeriesValue {
    let mut terms = Vec::new();
    for (_, z, p) in spec.atoms() {
        let s = 1.0 + h * z;
        if s <= 0.0 {
            return SeriesValue::diverges(ExtendedReal::NegInf);
        }
        terms.push(-p / s);
    }
    SeriesValue::finite(compensated_sum(terms))
}

/// `g'(h) = Σ p_n z_n E[Y e^{−h z_n Y}] = Σ p_n z_n/(1 + h z_n)²`.
pub fn discrete_z_gprime(h: f64, spec: &DiscreteZSpec) -> SeriesValue {
    if h <= -1.0 {
        return SeriesValue::diverges(ExtendedReal::PosInf);
    }
    let mut terms = Vec::new();
    for (_, z, p) in spec.atoms() {
        let s = 1.0 + h * z;
        if s <= 0.0 {
            return SeriesValue::diverges(ExtendedReal::NegInf);
        }
        terms.push(p * z / (s * s));
    }
    SeriesValue::finite(compensated_sum(terms))
}

/// `(−1, 1)` sampled at `points` interior nodes.
fn open_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (1..=points).map(move |k| lo + (hi - lo) * k as f64 / (points + 1) as f64)
}

/// Mass of the singular part when `g' > 0` on `(−1, 1]`, so that the
/// optimum sits at the right end of the limiting region:
/// `g'(1)/E[e^{−S₁}]`.
pub fn discrete_z_singular_mass(spec: &DiscreteZSpec) -> Result<f64> {
    for h in open_grid(-1.0, 1.0, 1000) {
        match discrete_z_gprime(h, spec).value {
            ExtendedReal::Finite(v) if v > 0.0 => {}
            other => return Err(Error::Precondition(format!("g'({h}) = {other} is not positive"))),
        }
    }
    let at_one = spec.gprime_at_one();
    if at_one < -1e-12 {
        return Err(Error::Precondition(format!("g'(1) = {at_one} is negative")));
    }
    Ok(at_one.max(0.0) / spec.exp_moment_at_one())
}

/// Optimum over the limiting region `(−1, 1]`: position, value and the
/// expectation of `S₁` under the regular part of the optimal measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteZOptimum {
    pub position: f64,
    pub value: f64,
    pub singular_mass: f64,
}

pub fn discrete_z_optimum(spec: &DiscreteZSpec) -> Result<DiscreteZOptimum> {
    let at_one = spec.gprime_at_one();
    if at_one >= 0.0 {
        let value = -spec.exp_moment_at_one();
        return Ok(DiscreteZOptimum { position: 1.0, value, singular_mass: at_one / spec.exp_moment_at_one() });
    }
    let fd = |h: f64| {
        let d1 = discrete_z_gprime(h, spec).value.to_f64();
        let d2 = -compensated_sum(spec.atoms().map(|(_, z, p)| 2.0 * p * z * z / (1.0 + h * z).powi(3)));
        (-d1, -d2)
    };
    let mut lo = 0.0;
    while fd(lo).0 >= 0.0 {
        lo = -1.0 + (lo + 1.0) / 2.0;
        if lo + 1.0 < 1e-15 {
            return Err(Error::NotConverged { iterations: 60, residual: fd(lo).0 });
        }
    }
    let position = safeguarded_newton(fd, lo, 1.0, 1e-15, 200)?;
    Ok(DiscreteZOptimum { position, value: discrete_z_g(position, spec).value.to_f64(), singular_mass: 0.0 })
}

/// Chooses `θ` with `p_n = θ w_n` and `p₁ = 1 − θΣw` so that `g'(1) = 0`,
/// i.e. `p₁/4 = Σ p_n n(n − 1)`. `weights[k]` is `w_{k+2}`.
pub fn calibrate_flat_boundary(weights: &[f64]) -> Result<DiscreteZSpec> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("weights must be finite and nonnegative"));
    }
    let total = compensated_sum(weights.iter().copied());
    let moment = compensated_sum(weights.iter().enumerate().map(|(k, &w)| {
        let n = (k + 2) as f64;
        w * n * (n - 1.0)
    }));
    if !(total > 0.0 && moment.is_finite()) {
        return Err(Error::Infeasible("weights must have positive finite mass".into()));
    }
    let theta = 1.0 / (total + 4.0 * moment);
    let tail: Vec<f64> = weights.iter().map(|w| theta * w).collect();
    let p1 = 1.0 - compensated_sum(tail.iter().copied());
    if !(p1 > 0.0) {
        return Err(Error::Infeasible(format!("calibration forces p1 = {p1}")));
    }
    let spec = DiscreteZSpec::from_weights(p1, tail);
    let residual = spec.gprime_at_one();
    if residual.abs() > 1e-12 {
        return Err(Error::NotConverged { iterations: 1, residual: residual.abs() });
    }
    for h in open_grid(-0.99, 0.999, 1000) {
        let v = discrete_z_gprime(h, &spec).value.to_f64();
        if !(v > 0.0) {
            return Err(Error::Precondition(format!("calibrated g'({h}) = {v} is not positive")));
        }
    }
    Ok(spec)
}

/// Matrix model on rows `i` and columns `j`: `P(W = j) = (e − 1)e^{−j}`,
/// row masses `p_i = i^{−r} e^{−4i}` for `i ≥ 2` and `p₁ = 1 − Σ p_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixModelSpec {
    pub exponent: f64,
    pub depth: usize,
}

/// Growth threshold of the row tail: terms behave like `i^{−r} e^{(h−5)i}`.
const ROW_RATE: f64 = 4.0;

impl MatrixModelSpec {
    pub fn new(exponent: f64, depth: usize) -> Result<Self> {
        if !(exponent > 3.0 && exponent.is_finite()) {
            return Err(invalid(format!("exponent must exceed 3, got {exponent}")));
        }
        if depth < 10 {
            return Err(invalid(format!("depth must be at least 10, got {depth}")));
        }
        Ok(Self { exponent, depth })
    }

    pub fn ln_row_mass(&self, i: usize) -> f64 {
        -self.exponent * (i as f64).ln() - ROW_RATE * i as f64
    }

    /// `Σ_{i>depth} p_i`, bounded by a geometric tail.
    fn row_tail_mass_bound(&self) -> f64 {
        let n = self.depth + 1;
        self.ln_row_mass(n).exp() / (1.0 - (-ROW_RATE).exp())
    }

    /// `p₁`, exact up to the geometric tail bound.
    pub fn first_row_mass(&self) -> f64 {
        let head = compensated_sum((2..=self.depth).map(|i| self.ln_row_mass(i).exp()));
        1.0 - head - self.row_tail_mass_bound()
    }
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ_{k=1}^{i} e^{ck}`.
fn ln_geometric(c: f64, i: usize) -> f64 {
    let n = i as f64;
    if c == 0.0 {
        n.ln()
    } else if c > 0.0 {
        c * n + (-(-c * n).exp_m1()).ln() - (-(-c).exp_m1()).ln()
    } else {
        c + (-(c * n).exp_m1()).ln() - (-c.exp_m1()).ln()
    }
}

/// Series evaluation with a certified tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixSeries {
    /// `g(h) = E[−e^{−hS₁}]`.
    pub g: ExtendedReal,
    /// `g'(h) = E[S₁ e^{−hS₁}]`.
    pub gprime: ExtendedReal,
    pub finite: bool,
    /// Upper bound on the omitted rows' contribution to `|g|`, or the first
    /// row index from which the terms increase without bound.
    pub tail_bound: f64,
    pub divergence_from_row: Option<usize>,
}

/// Evaluates `g` and `g'` using `E[e^{hW1_{W≤i}}] = (e−1)Σ_{k≤i} e^{(h−1)k} + e^{−i}`.
pub fn matrix_series(spec: &MatrixModelSpec, h: f64) -> MatrixSeries {
    let r = spec.exponent;
    if h <= -1.0 {
        return MatrixSeries {
            g: ExtendedReal::NegInf,
            gprime: ExtendedReal::PosInf,
            finite: false,
            tail_bound: f64::INFINITY,
            divergence_from_row: Some(1),
        };
    }
    if h > 1.0 + ROW_RATE {
        // i^{−r} e^{(h−5)i} increases once i > r/(h − 5).
        let from = (r / (h - 1.0 - ROW_RATE)).ceil() as usize + 1;
        return MatrixSeries {
            g: ExtendedReal::NegInf,
            gprime: ExtendedReal::NegInf,
            finite: false,
            tail_bound: f64::INFINITY,
            divergence_from_row: Some(from.max(2)),
        };
    }
    let ln_em1 = (E - 1.0).ln();
    let x = (-(1.0 + h)).exp();
    let p1 = spec.first_row_mass();
    let first_g = -p1 * (E - 1.0) * x / (1.0 - x);
    let first_gp = p1 * (E - 1.0) * x / ((1.0 - x) * (1.0 - x));
    let mut g_terms = vec![first_g];
    let mut gp_terms = vec![first_gp];
    let c = h - 1.0;
    let mut ln_weighted = f64::NEG_INFINITY;
    for k in 1..=spec.depth {
        let kf = k as f64;
        ln_weighted = ln_add(ln_weighted, kf.ln() + c * kf);
        if k < 2 {
            continue;
        }
        let ln_p = spec.ln_row_mass(k);
        let ln_moment = ln_add(ln_em1 + ln_geometric(c, k), -kf);
        g_terms.push(-(ln_p + ln_moment).exp());
        gp_terms.push(-(ln_p + ln_em1 + ln_weighted).exp());
    }
    // Rows past the depth, using p_i = i^{−r} e^{−4i}.
    let n = spec.depth + 1;
    let growth = c.max(0.0) - ROW_RATE;
    // Σ_{k≤i} k e^{ck} ≤ i² for c ≤ 0 and ≤ i e^{ci}/(1 − e^{−c}) otherwise.
    let geometric = if c <= 0.0 { 1.0 } else { 1.0 / (-(-c).exp_m1()) };
    let tail_bound = (E - 1.0) * geometric * tail_sum_bound(r - 2.0, growth, n) + tail_sum_bound(r, -ROW_RATE, n);
    MatrixSeries {
        g: ExtendedReal::Finite(compensated_sum(g_terms)),
        gprime: ExtendedReal::Finite(compensated_sum(gp_terms)),
        finite: true,
        tail_bound,
        divergence_from_row: None,
    }
}

/// `Σ_{i≥n} i^{−s} e^{γi}` for `γ ≤ 0`, `s > 1`, by the integral bound.
fn tail_sum_bound(s: f64, gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    let first = (-s * nf.ln() + gamma * nf).exp();
    if gamma < 0.0 {
        first / (1.0 - gamma.exp())
    } else {
        first + nf.powf(1.0 - s) / (s - 1.0)
    }
}

/// Largest `h` on the grid `lo, lo + step, …, hi` with a finite verdict.
pub fn matrix_finiteness_boundary(spec: &MatrixModelSpec, lo: f64, hi: f64, step: f64) -> Option<f64> {
    let steps = ((hi - lo) / step).round() as usize;
    (0..=steps).map(|k| lo + k as f64 * step).take_while(|&h| matrix_series(spec, h).finite).last()
}

/// Declared growth of a diagonal sequence `f_ii`.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagonalAsymptotics {
    /// `|f_ii| ≤ bound`.
    Bounded { bound: f64 },
    /// `|f_ii − slope·i| ≤ c·i^e` with `e < 1`.
    Linear { slope: f64, remainder_scale: f64, remainder_exponent: f64 },
    /// `f_ii = P(i)/Q(i)`, coefficients in increasing degree.
    Rational { numerator: Vec<f64>, denominator: Vec<f64> },
    /// `f_ii = c·b^i`.
    Exponential { scale: f64, base: f64 },
}

/// A diagonal rule sampled up to `horizon` with its declared asymptotics.
#[derive(Clone)]
pub struct DiagonalSequence {
    pub rule: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    pub horizon: usize,
    pub asymptotics: DiagonalAsymptotics,
}

impl std::fmt::Debug for DiagonalSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiagonalSequence").field("horizon", &self.horizon).field("asymptotics", &self.asymptotics).finish()
    }
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn degree(coeffs: &[f64]) -> Option<usize> {
    coeffs.iter().rposition(|c| *c != 0.0)
}

/// `limsup_i f_ii/i` read off the declared form, after checking the rule
/// against it on `1..=horizon`.
pub fn diagonal_growth(f: &DiagonalSequence) -> Result<f64> {
    let check = |model: &dyn Fn(f64) -> bool| -> Result<()> {
        match (1..=f.horizon).find(|&i| !model(i as f64)) {
            None => Ok(()),
            Some(i) => Err(invalid(format!("f_ii at i = {i} contradicts the declared asymptotics"))),
        }
    };
    let value = |i: f64| (f.rule)(i as usize);
    match &f.asymptotics {
        DiagonalAsymptotics::Bounded { bound } => {
            check(&|i| value(i).abs() <= *bound)?;
            Ok(0.0)
        }
        DiagonalAsymptotics::Linear { slope, remainder_scale, remainder_exponent } => {
            if !(*remainder_exponent < 1.0) {
                return Err(Error::UnsupportedAsymptotics("remainder must grow slower than i".into()));
            }
            check(&|i| (value(i) - slope * i).abs() <= remainder_scale * i.powf(*remainder_exponent) * (1.0 + 1e-12))?;
            Ok(*slope)
        }
        DiagonalAsymptotics::Rational { numerator, denominator } => {
            let (Some(dn), Some(dd)) = (degree(numerator), degree(denominator)) else {
                return Err(invalid("rational form needs a nonzero denominator"));
            };
            check(&|i| {
                let m = poly(numerator, i) / poly(denominator, i);
                (value(i) - m).abs() <= 1e-9 * (1.0 + m.abs())
            })?;
            match dn.cmp(&(dd + 1)) {
                std::cmp::Ordering::Less => Ok(0.0),
                std::cmp::Ordering::Equal => Ok(numerator[dn] / denominator[dd]),
                std::cmp::Ordering::Greater => Err(Error::UnsupportedAsymptotics("superlinear rational growth".into())),
            }
        }
        DiagonalAsymptotics::Exponential { scale, base } => {
            check(&|i| {
                let m = scale * base.powf(i);
                (value(i) - m).abs() <= 1e-9 * (1.0 + m.abs())
            })?;
            if base.abs() <= 1.0 || *scale == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::UnsupportedAsymptotics("exponential growth has no finite limsup".into()))
            }
        }
    }
}

/// Diagonal of `−S₁`: `−1` on the first row, `i` on row `i > 1`.
pub fn negative_price_diagonal(horizon: usize) -> DiagonalSequence {
    DiagonalSequence {
        rule: Arc::new(|i| if i == 1 { -1.0 } else { i as f64 }),
        horizon,
        asymptotics: DiagonalAsymptotics::Linear { slope: 1.0, remainder_scale: 2.0, remainder_exponent: 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compound_poisson_positions() {
        for (nu, want) in [(2.0, 1.2360679774997898), (1.0, 0.41421356237309515)] {
            let r = compound_poisson_optimum(&CompoundPoissonSpec::new(1.0, 1.0, nu).unwrap()).unwrap();
            assert!((r.position - want).abs() < 1e-12, "{r:?}");
        }
        let a2 = compound_poisson_optimum(&CompoundPoissonSpec::new(1.0, 1.0, 2.0).unwrap()).unwrap().position;
        let a3 = compound_poisson_optimum(&CompoundPoissonSpec::new(1.0, 1.0, 3.0).unwrap()).unwrap().position;
        assert!(a3 > a2);
    }

    #[test]
    fn boundary_derivative_examples() {
        let pure = DiscreteZSpec::new(1.0, vec![]).unwrap();
        assert_eq!(discrete_z_gprime(1.0, &pure).value, ExtendedReal::Finite(0.25));
        assert!((discrete_z_gprime(0.5, &pure).value.to_f64() - 1.0 / 2.25).abs() < 1e-15);
        assert!(discrete_z_gprime(-1.0, &pure).divergent);
        assert!(discrete_z_g(-1.0, &pure).divergent);
        let two = DiscreteZSpec::new(0.9, vec![0.1]).unwrap();
        assert!((discrete_z_gprime(1.0, &two).value.to_f64() - 0.025).abs() < 1e-15);
        assert!((two.gprime_at_one() - 0.025).abs() < 1e-15);
        assert!((discrete_z_singular_mass(&two).unwrap() - 0.025 / 0.65).abs() < 1e-15);
        assert_eq!(two.finiteness_region(), (-1.0, 2.0));
        assert!(discrete_z_g(2.0, &two).divergent);
    }

    #[test]
    fn single_atom_calibration() {
        let s = calibrate_flat_boundary(&[1.0]).unwrap();
        assert!((s.tail()[0] - 1.0 / 9.0).abs() < 1e-16);
        assert!((s.p1() - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(discrete_z_singular_mass(&s).unwrap(), 0.0);
    }

    #[test]
    fn matrix_boundary() {
        let spec = MatrixModelSpec::new(4.0, 60).unwrap();
        assert!(matrix_series(&spec, 5.0).finite);
        assert!(!matrix_series(&spec, 5.1).finite);
        assert_eq!(matrix_finiteness_boundary(&spec, 4.9, 5.1, 0.01).map(|h| (h * 100.0).round()), Some(500.0));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(diagonal_growth(&negative_price_diagonal(10_000)).unwrap(), 1.0);
        let bounded = DiagonalSequence {
            rule: Arc::new(|i| (i as f64).sin()),
            horizon: 1000,
            asymptotics: DiagonalAsymptotics::Bounded { bound: 1.0 },
        };
        assert_eq!(diagonal_growth(&bounded).unwrap(), 0.0);
        let sqrt = DiagonalSequence {
            rule: Arc::new(|i| 3.0 * i as f64 + (i as f64).sqrt()),
            horizon: 1000,
            asymptotics: DiagonalAsymptotics::Linear { slope: 3.0, remainder_scale: 1.0, remainder_exponent: 0.5 },
        };
        assert_eq!(diagonal_growth(&sqrt).unwrap(), 3.0);
        let wrong = DiagonalSequence { rule: Arc::new(|i| 2.0 * i as f64), ..sqrt };
        assert!(diagonal_growth(&wrong).is_err());
    }
}
