//! Numerical conjugate for custom utilities.

use super::{ExtendedReal, UtilityFunction};
use crate::numeric::{golden_section_min, safeguarded_newton};

const MAX_DOUBLINGS: usize = 1100;

/// `lim_{x→∞} u(x)` by geometric sampling.
pub(super) fn limit_at_infinity(u: &UtilityFunction) -> ExtendedReal {
    let mut x = u.endpoint().max(0.0) + 1.0;
    let mut prev = u.value(x);
    for _ in 0..MAX_DOUBLINGS {
        x *= 2.0;
        if !x.is_finite() {
            break;
        }
        let cur = u.value(x);
        if !cur.is_finite() {
            return ExtendedReal::from_f64(cur);
        }
        if (cur - prev).abs() <= 1e-14 * (1.0 + cur.abs()) {
            return ExtendedReal::Finite(cur);
        }
        prev = cur;
    }
    ExtendedReal::PosInf
}

/// `Φ(y)` and the maximizer of `u(x) − xy` for `y > 0`.
pub(super) fn numeric_conjugate(u: &UtilityFunction, y: f64) -> (ExtendedReal, Option<f64>) {
    let a = u.endpoint();
    let gap = |x: f64| u.derivative(x) - y;

    let mut hi = if a.is_finite() { a + 1.0 } else { 1.0 };
    let mut step = 1.0;
    let mut grown = 0;
    while gap(hi) >= 0.0 {
        hi += step;
        step *= 2.0;
        grown += 1;
        if grown > MAX_DOUBLINGS || !hi.is_finite() {
            return (ExtendedReal::PosInf, None);
        }
    }

    let lo = if a.is_finite() {
        let lo = a + 1e-12 * a.abs().max(1.0);
        if gap(lo) <= 0.0 {
            // u' stays below y near the endpoint: the supremum sits at a.
            return (ExtendedReal::from_f64(u.value(lo) - lo * y), Some(lo));
        }
        lo
    } else {
        let mut lo = hi.min(0.0) - 1.0;
        let mut step = 1.0;
        let mut shrunk = 0;
        while gap(lo) <= 0.0 {
            lo -= step;
            step *= 2.0;
            shrunk += 1;
            if shrunk > MAX_DOUBLINGS || !lo.is_finite() {
                return (ExtendedReal::PosInf, None);
            }
        }
        lo
    };

    let objective = |x: f64| -(u.value(x) - x * y);
    let (x0, _) = golden_section_min(objective, lo, hi, 1e-6 * (hi - lo));
    let radius = 1e-5 * (hi - lo) + 1e-9;
    let (mut blo, mut bhi) = ((x0 - radius).max(lo), (x0 + radius).min(hi));
    if !(gap(blo) > 0.0 && gap(bhi) < 0.0) {
        blo = lo;
        bhi = hi;
    }
    let stationarity = |x: f64| (y - u.derivative(x), -u.second_derivative(x));
    let x = safeguarded_newton(stationarity, blo, bhi, 1e-10 * y.max(1e-3), 400).unwrap_or(x0);
    (ExtendedReal::from_f64(u.value(x) - x * y), Some(x))
}
