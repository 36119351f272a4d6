//! Luxemburg and Orlicz norms on finite probability spaces and the
//! classification of loss bounds by the integrability of `u(−αW)`.

mod classify;
mod rv;

pub use classify::{
    classify_loss_bound, Classification, Compatibility, IntegralVerdict, LossBoundInput, NumericCheck, TailFamily,
};
pub use rv::FiniteRV;

use crate::error::{invalid, Result};
use crate::numeric::{bisect_predicate, golden_section_min};
use crate::utility::{ExtendedReal, FamilyKind, UtilityFunction};

/// An even convex function vanishing at 0, possibly jumping to `+∞`.
pub trait YoungFunction {
    fn eval(&self, x: f64) -> ExtendedReal;

    /// `Some(r)` when the function is `+∞` for `|x| > r`.
    fn jump_radius(&self) -> Option<f64> {
        None
    }
}

/// `û` of a utility.
#[derive(Debug, Clone, Copy)]
pub struct HatU<'a>(pub &'a UtilityFunction);

/// `Φ̂` of a utility.
#[derive(Debug, Clone, Copy)]
pub struct HatPhi<'a>(pub &'a UtilityFunction);

/// `|x|^p` with `p ≥ 1`.
#[derive(Debug, Clone, Copy)]
pub struct PowerYoung(pub f64);

impl YoungFunction for HatU<'_> {
    fn eval(&self, x: f64) -> ExtendedReal {
        self.0.hat_u(x)
    }

    fn jump_radius(&self) -> Option<f64> {
        let a = self.0.endpoint();
        a.is_finite().then_some(-a)
    }
}

impl YoungFunction for HatPhi<'_> {
    fn eval(&self, y: f64) -> ExtendedReal {
        self.0.hat_phi(y)
    }

    fn jump_radius(&self) -> Option<f64> {
        (self.0.kind() == FamilyKind::Linear).then(|| self.0.beta())
    }
}

impl YoungFunction for PowerYoung {
    fn eval(&self, x: f64) -> ExtendedReal {
        ExtendedReal::Finite(x.abs().powf(self.0))
    }
}

/// `E[Ψ(f)]` with `+∞` absorbing.
pub fn young_expectation<Y: YoungFunction + ?Sized>(psi: &Y, f: &FiniteRV, scale: f64) -> ExtendedReal {
    f.iter().fold(ExtendedReal::ZERO, |acc, (v, p)| acc.add_upper(psi.eval(v * scale).scale(p)))
}

/// Luxemburg norm `inf{c > 0 : E[Ψ(f/c)] ≤ 1}`.
pub fn luxemburg_norm<Y: YoungFunction + ?Sized>(psi: &Y, f: &FiniteRV) -> f64 {
    let m = f.sup_norm();
    if m == 0.0 {
        return 0.0;
    }
    let radius = psi.jump_radius();
    let feasible = |c: f64| {
        if let Some(r) = radius {
            if m / c > r {
                return false;
            }
        }
        young_expectation(psi, f, 1.0 / c) <= ExtendedReal::Finite(1.0)
    };
    let lo = m * 1e-12;
    if feasible(lo) {
        return lo;
    }
    let mut hi = m;
    while !feasible(hi) {
        hi *= 2.0;
    }
    let mut lo = lo.max(radius.map_or(0.0, |r| m / r * (1.0 - 1e-15)));
    if lo >= hi {
        lo = m * 1e-12;
    }
    // Bisection to machine precision on the infeasible/feasible boundary.
    let infeasible_side = bisect_predicate(|c| !feasible(c), lo, hi, 2000);
    let mut c = infeasible_side;
    while !feasible(c) {
        c = c.next_up();
    }
    c
}

/// Orlicz norm of `g` via the Amemiya formula `inf_k (1 + E[Φ̂(kg)])/k`.
pub fn orlicz_dual_norm(u: &UtilityFunction, g: &FiniteRV) -> ExtendedReal {
    let m = g.sup_norm();
    if m == 0.0 {
        return ExtendedReal::ZERO;
    }
    let psi = HatPhi(u);
    let amemiya = |k: f64| match young_expectation(&psi, g, k) {
        ExtendedReal::Finite(h) => (1.0 + h) / k,
        _ => f64::INFINITY,
    };
    let grid: Vec<(i32, f64)> = (-80..=80).map(|j| (j, amemiya(2f64.powi(j) / m))).collect();
    let Some(&(jbest, _)) = grid
        .iter()
        .filter(|(_, v)| v.is_finite())
        .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
    else {
        return ExtendedReal::PosInf;
    };
    let k_at = |j: i32| 2f64.powi(j) / m;
    let mut lo = k_at(jbest - 1);
    let mut hi = k_at(jbest + 1);
    if !amemiya(hi).is_finite() {
        hi = bisect_predicate(|k| amemiya(k).is_finite(), k_at(jbest), hi, 2000);
    }
    if !amemiya(lo).is_finite() {
        lo = k_at(jbest);
    }
    let (log_k, val) = golden_section_min(|t| amemiya(t.exp()), lo.ln(), hi.ln(), 1e-13);
    let best = [val, amemiya(hi), amemiya(k_at(jbest)), amemiya(log_k.exp())]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    ExtendedReal::Finite(best)
}

/// Quantities in `k·N(f) ≤ ‖f‖_∞ ≤ −a·N(f)` for utilities with finite `a`.
#[derive(Debug, Clone)]
pub struct SupNormBounds {
    pub luxemburg: f64,
    pub sup_norm: f64,
    pub k: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// Two-sided comparison of the `û`-Luxemburg norm with the sup norm.
pub fn sup_norm_bounds(u: &UtilityFunction, f: &FiniteRV) -> Result<SupNormBounds> {
    let a = u.endpoint();
    if !a.is_finite() {
        return Err(invalid("the sup-norm comparison needs a finite domain endpoint"));
    }
    let target = u.hat_u(-a).to_f64().min(1.0);
    let k = if u.hat_u(-a).to_f64() <= 1.0 {
        -a
    } else {
        bisect_predicate(|x| u.hat_u(x).to_f64() <= target, 0.0, -a, 2000)
    };
    let luxemburg = luxemburg_norm(&HatU(u), f);
    let sup_norm = f.sup_norm();
    let lower = k * luxemburg;
    let upper = -a * luxemburg;
    let tol = 1e-12 * sup_norm.max(1e-300);
    Ok(SupNormBounds {
        luxemburg,
        sup_norm,
        k,
        lower,
        upper,
        lower_holds: lower <= sup_norm + tol,
        upper_holds: sup_norm <= upper + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn luxemburg_examples() {
        let lin = UtilityFunction::linear();
        let f = FiniteRV::uniform(vec![2.0, 4.0]).unwrap();
        assert!((luxemburg_norm(&HatU(&lin), &f) - 3.0).abs() < 1e-14);
        let exp = UtilityFunction::exponential(1.0).unwrap();
        let c = FiniteRV::constant(1.7).unwrap();
        assert!((luxemburg_norm(&HatU(&exp), &c) - 1.7 / LN_2).abs() < 1e-14);
        let log = UtilityFunction::log_shifted(-2.0).unwrap();
        let one = FiniteRV::constant(1.0).unwrap();
        let n = luxemburg_norm(&HatU(&log), &one);
        assert!((n - E / (2.0 * E - 2.0)).abs() < 1e-14, "{n}");
        assert_eq!(luxemburg_norm(&HatU(&log), &FiniteRV::constant(0.0).unwrap()), 0.0);
    }

    #[test]
    fn dual_norm_examples() {
        let lin = UtilityFunction::linear();
        let g = FiniteRV::uniform(vec![1.0, 3.0]).unwrap();
        assert!((orlicz_dual_norm(&lin, &g).to_f64() - 3.0).abs() < 1e-12);
        let exp = UtilityFunction::exponential(1.0).unwrap();
        assert!((orlicz_dual_norm(&exp, &FiniteRV::constant(1.0).unwrap()).to_f64() - LN_2).abs() < 1e-12);
        assert_eq!(orlicz_dual_norm(&exp, &FiniteRV::constant(0.0).unwrap()), ExtendedReal::ZERO);
    }

    #[test]
    fn sup_norm_bound_examples() {
        let log = UtilityFunction::log_shifted(-2.0).unwrap();
        let r = sup_norm_bounds(&log, &FiniteRV::constant(1.0).unwrap()).unwrap();
        assert!((r.k - (2.0 - 2.0 / E)).abs() < 1e-14);
        assert!((r.lower - 1.0).abs() < 1e-14);
        assert!(r.lower_holds && r.upper_holds);
        let z = sup_norm_bounds(&log, &FiniteRV::constant(0.0).unwrap()).unwrap();
        assert_eq!((z.luxemburg, z.sup_norm, z.lower), (0.0, 0.0, 0.0));
        let two = sup_norm_bounds(&log, &FiniteRV::uniform(vec![0.5, 1.5]).unwrap()).unwrap();
        assert!(two.lower_holds && two.upper_holds);
        assert!(sup_norm_bounds(&UtilityFunction::exponential(1.0).unwrap(), &FiniteRV::constant(1.0).unwrap()).is_err());
    }
}
