//! Utility functions, their convex conjugates, and the Young functions
//! `û(x) = −u(−|x|) + u(0)` and `Φ̂` built from them.

mod conjugate;
mod diagnostics;
mod extended;

use std::fmt;
use std::sync::Arc;

pub use diagnostics::{A2Report, A2Row, InadaReport, LimitCheck};
pub use extended::ExtendedReal;

use crate::error::{invalid, Error, Result};

/// Scalar callback used by custom utilities.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Side of a one-sided derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A user-supplied increasing concave utility.
///
/// `endpoint` is the left end `a` of the effective domain (may be `−∞`).
/// The value callback is only called on `(a, ∞)`, plus at `a` itself.
#[derive(Clone)]
pub struct CustomUtility {
    endpoint: f64,
    value: ScalarFn,
    derivative: Option<ScalarFn>,
    strictly_concave: bool,
}

impl CustomUtility {
    pub fn new(endpoint: f64, value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomUtility { endpoint, value: Arc::new(value), derivative: None, strictly_concave: true }
    }

    pub fn with_derivative(mut self, derivative: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// Declares whether the utility is strictly concave (defaults to true).
    pub fn strictly_concave(mut self, flag: bool) -> Self {
        self.strictly_concave = flag;
        self
    }
}

impl fmt::Debug for CustomUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomUtility")
            .field("endpoint", &self.endpoint)
            .field("has_derivative", &self.derivative.is_some())
            .field("strictly_concave", &self.strictly_concave)
            .finish()
    }
}

#[derive(Debug, Clone)]
enum Family {
    Exponential { gamma: f64 },
    LogShifted { a: f64 },
    PowerShifted { a: f64, exponent: f64 },
    Linear,
    Custom(CustomUtility),
}

/// Which parametric family a utility belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Exponential,
    LogShifted,
    PowerShifted,
    Linear,
    Custom,
}

/// An increasing concave utility together with its conjugate data.
///
/// Utilities whose domain endpoint is nonnegative are translated so the
/// stored endpoint is `−1`; `shift()` reports the translation `s`, with
/// `u_stored(x) = u_user(x + s)`.
#[derive(Debug, Clone)]
pub struct UtilityFunction {
    family: Family,
    shift: f64,
}

/// The conjugate `Φ` of a utility together with `β` and `Φ(β)`.
#[derive(Debug, Clone, Copy)]
pub struct ConjugatePair<'a> {
    utility: &'a UtilityFunction,
    pub beta: f64,
    pub phi_at_beta: f64,
}

impl ConjugatePair<'_> {
    pub fn phi(&self, y: f64) -> ExtendedReal {
        self.utility.phi(y)
    }

    pub fn phi_prime(&self, y: f64) -> Result<f64> {
        self.utility.phi_prime(y)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be a positive finite number, got {v}")))
    }
}

/// Splits a user endpoint into (stored endpoint, shift).
fn normalize_endpoint(a: f64) -> Result<(f64, f64)> {
    if a.is_nan() || a == f64::INFINITY {
        return Err(invalid(format!("domain endpoint must be finite or -inf, got {a}")));
    }
    if a < 0.0 {
        Ok((a, 0.0))
    } else {
        Ok((-1.0, a + 1.0))
    }
}

impl UtilityFunction {
    /// `u(x) = −e^{−γx}`.
    pub fn exponential(gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(UtilityFunction { family: Family::Exponential { gamma }, shift: 0.0 })
    }

    /// `u(x) = ln(x − a)`.
    pub fn log_shifted(a: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(invalid(format!("log utility needs a finite endpoint, got {a}")));
        }
        let (a, shift) = normalize_endpoint(a)?;
        Ok(UtilityFunction { family: Family::LogShifted { a }, shift })
    }

    /// `u(x) = (x − a)^p` with `p ∈ (0, 1)`.
    pub fn power_shifted(a: f64, exponent: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(invalid(format!("power utility needs a finite endpoint, got {a}")));
        }
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(invalid(format!("power exponent must lie in (0, 1), got {exponent}")));
        }
        let (a, shift) = normalize_endpoint(a)?;
        Ok(UtilityFunction { family: Family::PowerShifted { a, exponent }, shift })
    }

    /// `u(x) = x`. Concave but not strictly so.
    pub fn linear() -> Self {
        UtilityFunction { family: Family::Linear, shift: 0.0 }
    }

    pub fn custom(custom: CustomUtility) -> Result<Self> {
        let (a, shift) = normalize_endpoint(custom.endpoint)?;
        if shift == 0.0 {
            return Ok(UtilityFunction { family: Family::Custom(custom), shift: 0.0 });
        }
        let value = custom.value.clone();
        let derivative = custom.derivative.clone();
        let shifted = CustomUtility {
            endpoint: a,
            value: Arc::new(move |x| value(x + shift)),
            derivative: derivative.map(|d| Arc::new(move |x| d(x + shift)) as ScalarFn),
            strictly_concave: custom.strictly_concave,
        };
        Ok(UtilityFunction { family: Family::Custom(shifted), shift })
    }

    pub fn kind(&self) -> FamilyKind {
        match self.family {
            Family::Exponential { .. } => FamilyKind::Exponential,
            Family::LogShifted { .. } => FamilyKind::LogShifted,
            Family::PowerShifted { .. } => FamilyKind::PowerShifted,
            Family::Linear => FamilyKind::Linear,
            Family::Custom(_) => FamilyKind::Custom,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.kind() {
            FamilyKind::Exponential => "exponential",
            FamilyKind::LogShifted => "log_shifted",
            FamilyKind::PowerShifted => "power_shifted",
            FamilyKind::Linear => "linear",
            FamilyKind::Custom => "custom",
        }
    }

    /// Risk aversion of the exponential family.
    pub fn exponential_gamma(&self) -> Option<f64> {
        match self.family {
            Family::Exponential { gamma } => Some(gamma),
            _ => None,
        }
    }

    /// Translation applied at construction.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Left endpoint `a` of the effective domain, possibly `−∞`.
    pub fn endpoint(&self) -> f64 {
        match &self.family {
            Family::Exponential { .. } | Family::Linear => f64::NEG_INFINITY,
            Family::LogShifted { a } | Family::PowerShifted { a, .. } => *a,
            Family::Custom(c) => c.endpoint,
        }
    }

    pub fn domain_endpoint(&self) -> ExtendedReal {
        ExtendedReal::from_f64(self.endpoint())
    }

    pub fn is_strictly_concave(&self) -> bool {
        match &self.family {
            Family::Linear => false,
            Family::Custom(c) => c.strictly_concave,
            _ => true,
        }
    }

    /// `u(x)`, equal to `−∞` below the domain.
    pub fn eval(&self, x: f64) -> ExtendedReal {
        let a = self.endpoint();
        if x < a {
            return ExtendedReal::NegInf;
        }
        let v = match &self.family {
            Family::Exponential { gamma } => -(-gamma * x).exp(),
            Family::LogShifted { a } => (x - a).ln(),
            Family::PowerShifted { a, exponent } => (x - a).powf(*exponent),
            Family::Linear => x,
            Family::Custom(c) => (c.value)(x),
        };
        if v.is_nan() {
            ExtendedReal::NegInf
        } else {
            ExtendedReal::from_f64(v)
        }
    }

    /// `u(x)` as a float (`−∞` below the domain).
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).to_f64()
    }

    /// `u'(x)` for `x` in the interior of the domain; `+∞` at or below `a`.
    pub fn derivative(&self, x: f64) -> f64 {
        if x <= self.endpoint() {
            return f64::INFINITY;
        }
        match &self.family {
            Family::Exponential { gamma } => gamma * (-gamma * x).exp(),
            Family::LogShifted { a } => 1.0 / (x - a),
            Family::PowerShifted { a, exponent } => exponent * (x - a).powf(exponent - 1.0),
            Family::Linear => 1.0,
            Family::Custom(c) => match &c.derivative {
                Some(d) => d(x),
                None => self.numeric_derivative(x),
            },
        }
    }

    /// One-sided derivative. Named families are differentiable, so both sides agree.
    pub fn one_sided_derivative(&self, x: f64, side: Side) -> f64 {
        match &self.family {
            Family::Custom(c) if c.derivative.is_none() => {
                let a = self.endpoint();
                let mut h = 1e-4 * (1.0 + x.abs());
                if side == Side::Left && a.is_finite() {
                    h = h.min(0.5 * (x - a));
                }
                let u0 = self.value(x);
                let quotient = |h: f64| match side {
                    Side::Left => (u0 - self.value(x - h)) / h,
                    Side::Right => (self.value(x + h) - u0) / h,
                };
                2.0 * quotient(0.5 * h) - quotient(h)
            }
            _ => self.derivative(x),
        }
    }

    fn numeric_derivative(&self, x: f64) -> f64 {
        let a = self.endpoint();
        let mut h = 1e-5 * (1.0 + x.abs());
        if a.is_finite() {
            h = h.min(0.25 * (x - a));
        }
        (self.value(x + h) - self.value(x - h)) / (2.0 * h)
    }

    /// `u''(x)` on the interior of the domain.
    pub fn second_derivative(&self, x: f64) -> f64 {
        match &self.family {
            Family::Exponential { gamma } => -gamma * gamma * (-gamma * x).exp(),
            Family::LogShifted { a } => -1.0 / ((x - a) * (x - a)),
            Family::PowerShifted { a, exponent } => {
                exponent * (exponent - 1.0) * (x - a).powf(exponent - 2.0)
            }
            Family::Linear => 0.0,
            Family::Custom(_) => {
                let a = self.endpoint();
                let mut h = 1e-4 * (1.0 + x.abs());
                if a.is_finite() {
                    h = h.min(0.25 * (x - a));
                }
                (self.derivative(x + h) - self.derivative(x - h)) / (2.0 * h)
            }
        }
    }

    /// `u(∞) = lim u(x)`.
    pub fn u_at_infinity(&self) -> ExtendedReal {
        match &self.family {
            Family::Exponential { .. } => ExtendedReal::ZERO,
            Family::Custom(_) => conjugate::limit_at_infinity(self),
            _ => ExtendedReal::PosInf,
        }
    }

    /// `Φ(y) = sup_x {u(x) − xy}`.
    pub fn phi(&self, y: f64) -> ExtendedReal {
        if y < 0.0 || y.is_nan() {
            return ExtendedReal::PosInf;
        }
        if y == 0.0 {
            return self.u_at_infinity();
        }
        if y == f64::INFINITY {
            return ExtendedReal::PosInf;
        }
        match &self.family {
            Family::Exponential { gamma } => {
                let r = y / gamma;
                ExtendedReal::Finite(r * (r.ln() - 1.0))
            }
            Family::LogShifted { a } => ExtendedReal::Finite(-y.ln() - a * y - 1.0),
            Family::PowerShifted { a, exponent } => {
                let p = *exponent;
                let t = (y / p).powf(1.0 / (p - 1.0));
                ExtendedReal::Finite(t * y * (1.0 / p - 1.0) - a * y)
            }
            Family::Linear => {
                if y == 1.0 {
                    ExtendedReal::ZERO
                } else {
                    ExtendedReal::PosInf
                }
            }
            Family::Custom(_) => conjugate::numeric_conjugate(self, y).0,
        }
    }

    /// `Φ(y)` as a float.
    pub fn phi_value(&self, y: f64) -> f64 {
        self.phi(y).to_f64()
    }

    /// `Φ'(y) = −(u')^{−1}(y)` for `y > 0`.
    pub fn phi_prime(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("phi_prime needs y > 0, got {y}")));
        }
        match &self.family {
            Family::Exponential { gamma } => Ok((y / gamma).ln() / gamma),
            Family::LogShifted { a } => Ok(-1.0 / y - a),
            Family::PowerShifted { a, exponent } => {
                let p = *exponent;
                Ok(-a - (y / p).powf(1.0 / (p - 1.0)))
            }
            Family::Linear => Err(Error::UndefinedDerivative(
                "the conjugate of linear utility is an indicator".into(),
            )),
            Family::Custom(_) => match conjugate::numeric_conjugate(self, y).1 {
                Some(x) => Ok(-x),
                None => Err(Error::Domain(format!("conjugate has no maximizer at y = {y}"))),
            },
        }
    }

    /// `Φ''(y) = −1/u''(−Φ'(y))`.
    pub fn phi_second(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("phi_second needs y > 0, got {y}")));
        }
        match &self.family {
            Family::Exponential { gamma } => Ok(1.0 / (gamma * y)),
            Family::LogShifted { .. } => Ok(1.0 / (y * y)),
            Family::PowerShifted { exponent, .. } => {
                let p = *exponent;
                let t = (y / p).powf(1.0 / (p - 1.0));
                Ok(1.0 / (p * (1.0 - p) * t.powf(p - 2.0)))
            }
            Family::Linear => Err(Error::UndefinedDerivative(
                "the conjugate of linear utility is an indicator".into(),
            )),
            Family::Custom(_) => {
                let x = -self.phi_prime(y)?;
                Ok(-1.0 / self.second_derivative(x))
            }
        }
    }

    /// Maximizer of `u(x) − xy`, i.e. `(u')^{−1}(y)`.
    pub fn inverse_marginal(&self, y: f64) -> Result<f64> {
        self.phi_prime(y).map(|v| -v)
    }

    /// `β`, the left derivative of `u` at 0.
    pub fn beta(&self) -> f64 {
        match &self.family {
            Family::Exponential { gamma } => *gamma,
            Family::LogShifted { a } => -1.0 / a,
            Family::PowerShifted { a, exponent } => exponent * (-a).powf(exponent - 1.0),
            Family::Linear => 1.0,
            Family::Custom(c) => match &c.derivative {
                Some(d) => d(0.0),
                None => self.one_sided_derivative(0.0, Side::Left),
            },
        }
    }

    pub fn conjugate_pair(&self) -> ConjugatePair<'_> {
        ConjugatePair { utility: self, beta: self.beta(), phi_at_beta: self.value(0.0) }
    }

    /// `û(x) = −u(−|x|) + u(0)`.
    pub fn hat_u(&self, x: f64) -> ExtendedReal {
        let ax = x.abs();
        let u0 = self.value(0.0);
        match self.eval(-ax) {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(u0 - v),
            ExtendedReal::NegInf => ExtendedReal::PosInf,
            ExtendedReal::PosInf => ExtendedReal::NegInf,
        }
    }

    /// `Φ̂(y) = 0` for `|y| ≤ β`, else `Φ(|y|) − Φ(β)`.
    pub fn hat_phi(&self, y: f64) -> ExtendedReal {
        let ay = y.abs();
        let beta = self.beta();
        if ay <= beta {
            return ExtendedReal::ZERO;
        }
        match self.phi(ay) {
            ExtendedReal::Finite(v) => ExtendedReal::Finite((v - self.value(0.0)).max(0.0)),
            other => other,
        }
    }

    pub fn check_inada(&self) -> InadaReport {
        diagnostics::check_inada(self)
    }

    pub fn a2_growth_scan(&self, multipliers: &[f64], y_max: f64) -> Result<A2Report> {
        diagnostics::a2_growth_scan(self, multipliers, y_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn u_eval_examples() {
        let exp = UtilityFunction::exponential(1.0).unwrap();
        assert_eq!(exp.eval(0.0), ExtendedReal::Finite(-1.0));
        let log = UtilityFunction::log_shifted(-2.0).unwrap();
        assert!(close(log.value(0.0), LN_2, 1e-15));
        assert_eq!(log.eval(-3.0), ExtendedReal::NegInf);
        assert_eq!(log.eval(-2.0), ExtendedReal::NegInf);
    }

    #[test]
    fn phi_examples() {
        let exp = UtilityFunction::exponential(1.0).unwrap();
        assert!(close(exp.phi_value(1.0), -1.0, 1e-15));
        let log = UtilityFunction::log_shifted(-2.0).unwrap();
        assert!(close(log.phi_value(0.5), LN_2, 1e-15));
        let pow = UtilityFunction::power_shifted(-4.0, 0.5).unwrap();
        assert!(close(pow.phi_value(0.25), 2.0, 1e-14));
        for &y in &[0.1, 0.7, 3.0] {
            assert!(close(pow.phi_value(y), 1.0 / (4.0 * y) + 4.0 * y, 1e-12));
        }
        let lin = UtilityFunction::linear();
        assert_eq!(lin.phi(1.0), ExtendedReal::ZERO);
        assert_eq!(lin.phi(0.5), ExtendedReal::PosInf);
    }

    #[test]
    fn phi_prime_examples() {
        let exp = UtilityFunction::exponential(1.0).unwrap();
        assert!(close(exp.phi_prime(1.0).unwrap(), 0.0, 1e-15));
        let log = UtilityFunction::log_shifted(-2.0).unwrap();
        assert!(close(log.phi_prime(0.5).unwrap(), 0.0, 1e-15));
        assert!(close(log.phi_prime(1e12).unwrap(), 2.0, 1e-11));
        assert!(matches!(
            UtilityFunction::linear().phi_prime(1.0),
            Err(Error::UndefinedDerivative(_))
        ));
    }

    #[test]
    fn hat_examples() {
        let exp = UtilityFunction::exponential(1.0).unwrap();
        assert!(close(exp.hat_u(1.0).to_f64(), E - 1.0, 1e-14));
        assert!(close(exp.hat_u(-1.0).to_f64(), E - 1.0, 1e-14));
        assert!(close(exp.hat_phi(E).to_f64(), 1.0, 1e-14));
        let log = UtilityFunction::log_shifted(-2.0).unwrap();
        assert!(close(log.hat_u(1.0).to_f64(), LN_2, 1e-15));
        assert_eq!(log.hat_u(2.0), ExtendedReal::PosInf);
        assert!(close(log.hat_phi(1.0).to_f64(), 1.0 - LN_2, 1e-15));
        assert_eq!(log.hat_phi(0.3), ExtendedReal::ZERO);
        assert_eq!(log.hat_u(0.0), ExtendedReal::ZERO);
    }

    #[test]
    fn beta_examples() {
        assert_eq!(UtilityFunction::exponential(1.0).unwrap().beta(), 1.0);
        assert_eq!(UtilityFunction::log_shifted(-2.0).unwrap().beta(), 0.5);
        assert!(close(UtilityFunction::power_shifted(-4.0, 0.5).unwrap().beta(), 0.25, 1e-15));
    }

    #[test]
    fn conjugate_limits() {
        let log = UtilityFunction::log_shifted(-2.0).unwrap();
        assert_eq!(log.phi(0.0), ExtendedReal::PosInf);
        let exp = UtilityFunction::exponential(2.0).unwrap();
        assert_eq!(exp.phi(0.0), ExtendedReal::ZERO);
        assert!(exp.phi_value(1e9) > 1e8);
    }

    #[test]
    fn shift_is_recorded() {
        let u = UtilityFunction::log_shifted(1.5).unwrap();
        assert_eq!(u.endpoint(), -1.0);
        assert_eq!(u.shift(), 2.5);
        let c = UtilityFunction::custom(CustomUtility::new(0.0, |x: f64| x.sqrt())).unwrap();
        assert_eq!(c.shift(), 1.0);
        assert!(close(c.value(0.0), 1.0, 1e-15));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(UtilityFunction::exponential(0.0).is_err());
        assert!(UtilityFunction::exponential(f64::NAN).is_err());
        assert!(UtilityFunction::power_shifted(-1.0, 1.0).is_err());
        assert!(UtilityFunction::log_shifted(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn second_derivative_identity() {
        let fams = [
            UtilityFunction::exponential(1.3).unwrap(),
            UtilityFunction::log_shifted(-2.0).unwrap(),
            UtilityFunction::power_shifted(-3.0, 0.3).unwrap(),
        ];
        for u in &fams {
            for &y in &[0.05, 0.4, 2.0, 9.0] {
                let h = 1e-6 * y;
                let fd = (u.phi_prime(y + h).unwrap() - u.phi_prime(y - h).unwrap()) / (2.0 * h);
                let an = u.phi_second(y).unwrap();
                assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{} {y}", u.family_name());
            }
        }
    }
}
