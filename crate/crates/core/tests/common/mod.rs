//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use orlicz_duality::EventTree;

/// Utility families with closed forms written out here, independent of the
/// library's implementation.
#[derive(Debug, Clone, Copy)]
pub enum Closed {
    /// `−e^{−x}`.
    Exp,
    /// `ln(x − a)`.
    Log(f64),
}

impl Closed {
    pub fn u(self, x: f64) -> f64 {
        match self {
            Closed::Exp => -(-x).exp(),
            Closed::Log(a) => {
                if x > a {
                    (x - a).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `û(f) = u(0) − u(−f)` for `f ≥ 0`.
    pub fn hat_u(self, f: f64) -> f64 {
        self.u(0.0) - self.u(-f)
    }

    /// Inverse of `û'` on `[0, ∞)`, clipped at 0.
    fn hat_u_prime_inv(self, t: f64) -> f64 {
        match self {
            Closed::Exp => t.ln().max(0.0),
            Closed::Log(a) => (-a - 1.0 / t).max(0.0),
        }
    }
}

/// Expected utility of `x + h·ΔS` on a one-period tree.
pub fn expected_utility(u: Closed, tree: &EventTree, x: f64, h: &[f64]) -> f64 {
    let g = tree.gains_matrix();
    g.iter()
        .zip(tree.path_probs())
        .map(|(row, p)| p * u.u(x + row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>()))
        .sum()
}

/// Grid refinement over positions in at most two dimensions: a 41-point
/// grid per axis on a box that shrinks by 4 around the best point.
pub fn grid_primal(u: Closed, tree: &EventTree, x: f64) -> (f64, Vec<f64>) {
    let d = tree.strategy_dim();
    assert!(d <= 2, "grid oracle handles at most two positions");
    let mut center = vec![0.0; d];
    let mut radius = 64.0;
    let mut best = (expected_utility(u, tree, x, &center), center.clone());
    for _ in 0..40 {
        let ticks: Vec<f64> = (0..41).map(|k| -1.0 + k as f64 / 20.0).collect();
        let points: Vec<Vec<f64>> = match d {
            0 => vec![vec![]],
            1 => ticks.iter().map(|t| vec![center[0] + radius * t]).collect(),
            _ => ticks
                .iter()
                .flat_map(|s| ticks.iter().map(move |t| (*s, *t)))
                .map(|(s, t)| vec![center[0] + radius * s, center[1] + radius * t])
                .collect(),
        };
        for h in points {
            let v = expected_utility(u, tree, x, &h);
            if v > best.0 {
                best = (v, h);
            }
        }
        center = best.1.clone();
        radius /= 4.0;
    }
    best
}

/// `sup{E[f|g|] : f ≥ 0, E[û(f)] ≤ 1}` by bisection on the multiplier of
/// the constraint; the maximizer is `f = (û')^{-1}(|g|/μ)`.
pub fn direct_sup_norm(u: Closed, g: &[f64], p: &[f64]) -> f64 {
    let m = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let f_at = |mu: f64| -> Vec<f64> { g.iter().map(|gi| u.hat_u_prime_inv(gi.abs() / mu)).collect() };
    let cost = |mu: f64| -> f64 { f_at(mu).iter().zip(p).map(|(f, pi)| pi * u.hat_u(*f)).sum() };
    // cost decreases in μ.
    let (mut lo, mut hi) = (1e-12 * m, m);
    while cost(hi) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if cost(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    f_at(hi).iter().zip(g).zip(p).map(|((f, gi), pi)| pi * f * gi.abs()).sum()
}
