use std::f64::consts::PI;

use super::FiniteRV;
use crate::error::{invalid, Error, Result};
use crate::numeric::adaptive_simpson;
use crate::utility::{FamilyKind, UtilityFunction};

/// Analytic densities for a one-period increment `S_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailFamily {
    Gaussian { mean: f64, std_dev: f64 },
    /// Density `(λ/2) e^{−λ|s|}`.
    TwoSidedExponential { rate: f64 },
    Cauchy { scale: f64 },
}

impl TailFamily {
    pub fn gaussian(mean: f64, std_dev: f64) -> Result<Self> {
        if !(mean.is_finite() && std_dev > 0.0 && std_dev.is_finite()) {
            return Err(invalid("gaussian needs a finite mean and a positive standard deviation"));
        }
        Ok(TailFamily::Gaussian { mean, std_dev })
    }

    pub fn two_sided_exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid("two-sided exponential needs a positive rate"));
        }
        Ok(TailFamily::TwoSidedExponential { rate })
    }

    pub fn cauchy(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("cauchy needs a positive scale"));
        }
        Ok(TailFamily::Cauchy { scale })
    }

    pub fn log_density(&self, s: f64) -> f64 {
        match *self {
            TailFamily::Gaussian { mean, std_dev } => {
                let z = (s - mean) / std_dev;
                -0.5 * z * z - std_dev.ln() - 0.5 * (2.0 * PI).ln()
            }
            TailFamily::TwoSidedExponential { rate } => (0.5 * rate).ln() - rate * s.abs(),
            TailFamily::Cauchy { scale } => -(PI * scale * (1.0 + (s / scale).powi(2))).ln(),
        }
    }

    fn center(&self) -> f64 {
        match *self {
            TailFamily::Gaussian { mean, .. } => mean,
            _ => 0.0,
        }
    }

    fn width(&self) -> f64 {
        match *self {
            TailFamily::Gaussian { std_dev, .. } => std_dev,
            TailFamily::TwoSidedExponential { rate } => 1.0 / rate,
            TailFamily::Cauchy { scale } => scale,
        }
    }
}

/// A loss bound given either by a tail law (`W = 1 + |S_1|`) or by a finite table.
#[derive(Debug, Clone)]
pub enum LossBoundInput {
    Tail(TailFamily),
    Finite(FiniteRV),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Compatibility {
    /// `E[u(−αW)] > −∞` for every `α > 0`.
    Compatible,
    /// Finite exactly for `α` below the critical scale.
    WeaklyCompatible { critical_alpha: f64 },
    /// `E[u(−αW)] = −∞` for every `α > 0`.
    Incompatible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralVerdict {
    Convergent(f64),
    Divergent,
    Inconclusive,
}

/// Quadrature evidence at probe scales.
#[derive(Debug, Clone)]
pub struct NumericCheck {
    pub probes: Vec<(f64, IntegralVerdict)>,
    pub agrees: bool,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Compatibility,
    pub numeric: Option<NumericCheck>,
    pub note: String,
}

/// Classifies `W` by the integrability of `u(−αW)`.
///
/// The test is `E[u(−αW)] > −∞`, the characterization of the Orlicz heart
/// through negative arguments. Definition-style statements written with
/// `u(αW)` are read in this negative-argument form.
pub fn classify_loss_bound(u: &UtilityFunction, w: &LossBoundInput) -> Result<Classification> {
    match w {
        LossBoundInput::Finite(rv) => classify_finite(u, rv),
        LossBoundInput::Tail(tail) => classify_tail(u, tail),
    }
}

fn classify_finite(u: &UtilityFunction, w: &FiniteRV) -> Result<Classification> {
    if w.min() < 0.0 {
        return Err(invalid("loss bounds must be nonnegative"));
    }
    let a = u.endpoint();
    let max_w = w.max();
    if a.is_finite() && max_w > 0.0 {
        let critical_alpha = -a / max_w;
        return Ok(Classification {
            verdict: Compatibility::WeaklyCompatible { critical_alpha },
            numeric: None,
            note: format!(
                "finite space with finite endpoint: u(-aW) is finite iff a*max W stays inside the domain, so the heart is {{0}} and alpha* = {critical_alpha}"
            ),
        });
    }
    Ok(Classification {
        verdict: Compatibility::Compatible,
        numeric: None,
        note: "finite space: every bounded variable has all exponential moments".into(),
    })
}

fn classify_tail(u: &UtilityFunction, tail: &TailFamily) -> Result<Classification> {
    let kind = u.kind();
    let verdict = match kind {
        FamilyKind::Custom => {
            return Err(Error::UnsupportedFamily(
                "tail classification is available for the named utility families only".into(),
            ))
        }
        FamilyKind::LogShifted | FamilyKind::PowerShifted => Compatibility::Incompatible,
        FamilyKind::Exponential => {
            let gamma = u.exponential_gamma().expect("exponential family");
            match *tail {
                TailFamily::Gaussian { .. } => Compatibility::Compatible,
                TailFamily::TwoSidedExponential { rate } => {
                    Compatibility::WeaklyCompatible { critical_alpha: rate / gamma }
                }
                TailFamily::Cauchy { .. } => Compatibility::Incompatible,
            }
        }
        FamilyKind::Linear => match tail {
            TailFamily::Cauchy { .. } => Compatibility::Incompatible,
            _ => Compatibility::Compatible,
        },
    };
    let (numeric, note) = match kind {
        FamilyKind::Exponential | FamilyKind::Linear => {
            let probes: Vec<f64> = match verdict {
                Compatibility::Compatible => vec![0.5, 1.0, 2.0],
                Compatibility::WeaklyCompatible { critical_alpha } => {
                    vec![0.5 * critical_alpha, 0.9 * critical_alpha, 1.1 * critical_alpha, 2.0 * critical_alpha]
                }
                Compatibility::Incompatible => vec![0.05, 0.5],
            };
            let results: Vec<(f64, IntegralVerdict)> =
                probes.iter().map(|&alpha| (alpha, tail_integral(u, tail, alpha))).collect();
            let agrees = results.iter().all(|&(alpha, v)| {
                let expect_finite = match verdict {
                    Compatibility::Compatible => true,
                    Compatibility::WeaklyCompatible { critical_alpha } => alpha < critical_alpha,
                    Compatibility::Incompatible => false,
                };
                matches!((expect_finite, v), (true, IntegralVerdict::Convergent(_)) | (false, IntegralVerdict::Divergent))
            });
            (Some(NumericCheck { probes: results, agrees }), "analytic verdict with quadrature cross-check".to_string())
        }
        _ => (
            None,
            "finite endpoint and unbounded W: u(-aW) = -inf on a set of positive probability for every a > 0".to_string(),
        ),
    };
    Ok(Classification { verdict, numeric, note })
}

/// `E[−u(−α(1 + |S_1|))]` by adaptive quadrature on doubling intervals.
fn tail_integral(u: &UtilityFunction, tail: &TailFamily, alpha: f64) -> IntegralVerdict {
    let log_integrand = |s: f64| -> f64 {
        let w = alpha * (1.0 + s.abs());
        let log_loss = match u.exponential_gamma() {
            Some(gamma) => gamma * w,
            None => w.ln(),
        };
        log_loss + tail.log_density(s)
    };
    let f = |s: f64| log_integrand(s).exp();
    let c = tail.center();
    let mut half = tail.width();
    let piece = |a: f64, b: f64| {
        let crude = (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        adaptive_simpson(&f, a, b, 1e-12 * (1.0 + crude.abs()), 48)
    };
    let mut total = piece(c - half, c) + piece(c, c + half);
    let mut increments: Vec<f64> = Vec::new();
    for _ in 0..64 {
        let inc = piece(c + half, c + 2.0 * half) + piece(c - 2.0 * half, c - half);
        half *= 2.0;
        total += inc;
        if !total.is_finite() {
            return IntegralVerdict::Divergent;
        }
        increments.push(inc);
        let k = increments.len();
        if inc <= 1e-13 * (1.0 + total.abs()) && k >= 3 {
            return IntegralVerdict::Convergent(total);
        }
        if total > 1e12 && k >= 3 && increments[k - 3..].iter().all(|&d| d > 0.0) {
            return IntegralVerdict::Divergent;
        }
        if k >= 12 && increments[k - 10..].windows(2).all(|w| w[0] > 0.0 && w[1] >= 0.9 * w[0]) {
            return IntegralVerdict::Divergent;
        }
    }
    IntegralVerdict::Inconclusive
}
