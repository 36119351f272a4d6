//! Numerical diagnostics: Inada limits and the growth condition on `Φ̂`.

use super::{ExtendedReal, UtilityFunction};
use crate::error::{invalid, Result};

/// Sampled marginal utilities approaching one end of the domain.
#[derive(Debug, Clone)]
pub struct LimitCheck {
    pub samples: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Outcome of the Inada scan: `u'(a⁺) = ∞` and `u'(∞) = 0`.
#[derive(Debug, Clone)]
pub struct InadaReport {
    pub at_endpoint: LimitCheck,
    pub at_infinity: LimitCheck,
}

impl InadaReport {
    pub fn pass(&self) -> bool {
        self.at_endpoint.pass && self.at_infinity.pass
    }
}

#[derive(Debug, Clone)]
pub struct A2Row {
    pub multiplier: f64,
    pub sup_ratio: ExtendedReal,
    pub bounded: bool,
}

/// Growth scan of `Φ̂(λy)/(1 + Φ̂(y))` for `y ∈ [β, y_max]`.
///
/// On a finite probability space the growth condition holds automatically,
/// since every random variable is bounded; `holds_on_finite_spaces` records that.
#[derive(Debug, Clone)]
pub struct A2Report {
    pub rows: Vec<A2Row>,
    pub y_range: (f64, f64),
    pub holds_on_finite_spaces: bool,
}

impl A2Report {
    pub fn bounded(&self) -> bool {
        self.rows.iter().all(|r| r.bounded)
    }
}

fn strictly_monotone(values: &[f64], increasing: bool) -> bool {
    values.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

pub(super) fn check_inada(u: &UtilityFunction) -> InadaReport {
    let a = u.endpoint();
    let left: Vec<f64> = if a.is_finite() {
        (1..=12).map(|k| a + 10f64.powi(-k)).collect()
    } else {
        (1..=10).map(|k| -(2f64.powi(k))).collect()
    };
    let left_samples: Vec<(f64, f64)> = left.iter().map(|&x| (x, u.derivative(x))).collect();
    let lv: Vec<f64> = left_samples.iter().map(|s| s.1).collect();
    let left_pass = strictly_monotone(&lv, true) && lv[lv.len() - 1] >= 1e3 * lv[0].max(1e-300);

    let start = a.max(0.0) + 1.0;
    let right_samples: Vec<(f64, f64)> = (0..=1000)
        .step_by(50)
        .map(|k| {
            let x = start * 2f64.powi(k);
            (x, u.derivative(x))
        })
        .collect();
    let rv: Vec<f64> = right_samples.iter().map(|s| s.1).collect();
    let decreasing = rv.windows(2).all(|w| w[1] <= w[0]) && rv[rv.len() - 1] < rv[0];
    let right_pass = decreasing && rv[rv.len() - 1] <= 0.5 * rv[0];

    InadaReport {
        at_endpoint: LimitCheck { samples: left_samples, pass: left_pass },
        at_infinity: LimitCheck { samples: right_samples, pass: right_pass },
    }
}

pub(super) fn a2_growth_scan(u: &UtilityFunction, multipliers: &[f64], y_max: f64) -> Result<A2Report> {
    let beta = u.beta();
    if !(y_max > beta) {
        return Err(invalid(format!("y_max = {y_max} must exceed beta = {beta}")));
    }
    if multipliers.iter().any(|&m| !(m > 0.0)) {
        return Err(invalid("multipliers must be positive"));
    }
    let y0 = beta.max(1e-12);
    let points = 400;
    let grid: Vec<f64> = (0..=points)
        .map(|i| y0 * (y_max / y0).powf(i as f64 / points as f64))
        .collect();
    let rows = multipliers
        .iter()
        .map(|&m| {
            let ratios: Vec<ExtendedReal> = grid
                .iter()
                .map(|&y| match (u.hat_phi(m * y), u.hat_phi(y)) {
                    (ExtendedReal::Finite(num), ExtendedReal::Finite(den)) => {
                        ExtendedReal::Finite(num / (1.0 + den))
                    }
                    (ExtendedReal::Finite(_), _) => ExtendedReal::ZERO,
                    _ => ExtendedReal::PosInf,
                })
                .collect();
            let sup_ratio = ExtendedReal::sup(ratios.iter().copied());
            let bounded = match sup_ratio {
                ExtendedReal::Finite(_) => {
                    let end = ratios[points].to_f64();
                    let mid = ratios[points / 2].to_f64();
                    end <= m.max(2.0) * mid.max(1e-300) || end <= 1.0
                }
                _ => false,
            };
            A2Row { multiplier: m, sup_ratio, bounded }
        })
        .collect();
    Ok(A2Report { rows, y_range: (y0, y_max), holds_on_finite_spaces: true })
}
