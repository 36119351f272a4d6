//! Direct maximization over strategies, recovery of the optimal claim from
//! dual data, and the duality and replication checks built on both solvers.

use nalgebra::{DMatrix, DVector};

use crate::dual::{dual_optimize, k_phi_membership, DualSolution};
use crate::error::{invalid, Error, Result};
use crate::lp::{self, LpStatus};
use crate::market::{admissible, martingale_polytope, EventTree, LossBound, MartingalePolytope, Strategy};
use crate::numeric::compensated_sum;
use crate::orlicz::FiniteRV;
use crate::utility::UtilityFunction;

/// Optimal strategy with its terminal wealth and expected utility.
#[derive(Debug, Clone)]
pub struct PrimalSolution {
    pub strategy: Strategy,
    /// Terminal wealth `x + (H·S)_T` per path.
    pub claim: FiniteRV,
    pub value: f64,
    /// Smallest `c` with `(H·S)_t ≥ −cW`.
    pub admissibility: f64,
    pub iterations: usize,
    /// `‖∇_h E[u(x + (H·S)_T)]‖_∞` at the returned strategy.
    pub gradient_norm: f64,
}

struct Objective<'a> {
    u: &'a UtilityFunction,
    g: DMatrix<f64>,
    p: Vec<f64>,
    x: f64,
    a: f64,
}

impl<'a> Objective<'a> {
    fn new(u: &'a UtilityFunction, tree: &EventTree, x: f64) -> Self {
        let g = tree.gains_matrix();
        Objective {
            u,
            g: DMatrix::from_fn(tree.path_count(), tree.strategy_dim(), |i, j| g[i][j]),
            p: tree.path_probs().to_vec(),
            x,
            a: u.endpoint(),
        }
    }

    fn wealth(&self, h: &DVector<f64>) -> DVector<f64> {
        (&self.g * h).add_scalar(self.x)
    }

    fn value(&self, h: &DVector<f64>) -> Option<f64> {
        let w = self.wealth(h);
        if w.iter().any(|&v| v <= self.a) {
            return None;
        }
        let v = compensated_sum(w.iter().zip(&self.p).map(|(&wi, &pi)| pi * self.u.value(wi)));
        v.is_finite().then_some(v)
    }

    fn gradient(&self, h: &DVector<f64>) -> DVector<f64> {
        let w = self.wealth(h);
        let weights = DVector::from_iterator(w.len(), w.iter().zip(&self.p).map(|(&wi, &pi)| pi * self.u.derivative(wi)));
        self.g.transpose() * weights
    }

    fn hessian(&self, h: &DVector<f64>) -> DMatrix<f64> {
        let w = self.wealth(h);
        let mut scaled = self.g.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= self.p[i] * self.u.second_derivative(w[i]);
        }
        self.g.transpose() * scaled
    }
}

/// `∇_h E[u(x + (H·S)_T)]` at `h`, in the order of [`Strategy::flat`].
pub fn expected_utility_gradient(u: &UtilityFunction, tree: &EventTree, x: f64, h: &Strategy) -> Result<Vec<f64>> {
    let flat = h.flat();
    if flat.len() != tree.strategy_dim() {
        return Err(invalid("strategy does not match the market"));
    }
    let obj = Objective::new(u, tree, x);
    let hv = DVector::from_vec(flat);
    if obj.value(&hv).is_none() {
        return Err(Error::Domain("terminal wealth leaves the utility's domain".into()));
    }
    Ok(obj.gradient(&hv).as_slice().to_vec())
}

/// Minimal-norm solution of `A d = b` for symmetric positive semidefinite `A`.
fn min_norm_solve(a: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-13;
    svd.solve(b, tol.max(f64::MIN_POSITIVE)).unwrap_or_else(|_| DVector::zeros(b.len()))
}

/// Linear constraints `rows · h ≥ rhs`.
struct Constraints {
    rows: Vec<DVector<f64>>,
    rhs: Vec<f64>,
}

impl Constraints {
    fn slacks(&self, h: &DVector<f64>) -> Vec<f64> {
        self.rows.iter().zip(&self.rhs).map(|(r, b)| r.dot(h) - b).collect()
    }

    /// Largest step keeping 1% of every slack.
    fn max_step(&self, h: &DVector<f64>, d: &DVector<f64>) -> f64 {
        let mut alpha = 1.0f64;
        for (r, s) in self.rows.iter().zip(self.slacks(h)) {
            let rate = r.dot(d);
            if rate < 0.0 {
                alpha = alpha.min(0.99 * s / -rate);
            }
        }
        alpha
    }
}

/// Damped Newton ascent on `value` with optional barrier weight `mu`.
fn newton_ascent(obj: &Objective, cons: Option<(&Constraints, f64)>, mut h: DVector<f64>, max_iter: usize) -> (DVector<f64>, usize) {
    let total = |h: &DVector<f64>| -> Option<f64> {
        let v = obj.value(h)?;
        match cons {
            None => Some(v),
            Some((c, mu)) => {
                let s = c.slacks(h);
                if s.iter().any(|&si| si <= 0.0) {
                    return None;
                }
                Some(v + mu * compensated_sum(s.iter().map(|si| si.ln())))
            }
        }
    };
    let mut current = match total(&h) {
        Some(v) => v,
        None => return (h, 0),
    };
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut g = obj.gradient(&h);
        let mut neg_hess = -obj.hessian(&h);
        if let Some((c, mu)) = cons {
            for (r, s) in c.rows.iter().zip(c.slacks(&h)) {
                g += r * (mu / s);
                neg_hess += r * r.transpose() * (mu / (s * s));
            }
        }
        if g.amax() <= 1e-15 * (1.0 + current.abs()) {
            break;
        }
        let d = min_norm_solve(neg_hess, &g);
        let slope = g.dot(&d);
        if !(slope > 1e-30 * (1.0 + current.abs())) {
            break;
        }
        let mut alpha = cons.map_or(1.0, |(c, _)| c.max_step(&h, &d));
        let mut accepted = false;
        for _ in 0..80 {
            let cand = &h + &d * alpha;
            if let Some(v) = total(&cand) {
                if v >= current + 1e-4 * alpha * slope {
                    h = cand;
                    current = v;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (h, iterations)
}

/// An arbitrage direction: `(H·S)_T ≥ 0` on every path, positive somewhere.
fn arbitrage_certificate(tree: &EventTree, poly: &MartingalePolytope) -> Vec<f64> {
    let g = tree.gains_matrix();
    let n = tree.path_count();
    let k = tree.strategy_dim();
    let target: Vec<bool> = if poly.is_empty() { vec![true; n] } else { poly.free_paths().iter().map(|f| !f).collect() };
    // Variables: h⁺ (k), h⁻ (k), s (n), t (k).
    let width = 3 * k + n;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; width];
        for j in 0..k {
            row[j] = g[i][j];
            row[k + j] = -g[i][j];
        }
        row[2 * k + i] = -1.0;
        a.push(row);
        b.push(0.0);
    }
    for j in 0..k {
        let mut row = vec![0.0; width];
        row[j] = 1.0;
        row[k + j] = 1.0;
        row[2 * k + n + j] = 1.0;
        a.push(row);
        b.push(1.0);
    }
    let mut c = vec![0.0; width];
    for i in (0..n).filter(|&i| target[i]) {
        for j in 0..k {
            c[j] += g[i][j];
            c[k + j] -= g[i][j];
        }
    }
    let sol = lp::maximize(&a, &b, &c);
    if sol.status != LpStatus::Optimal {
        return vec![0.0; k];
    }
    (0..k).map(|j| sol.x[j] - sol.x[k + j]).collect()
}

/// Maximizes `E[u(x + (H·S)_T)]` over strategies, optionally subject to
/// `(H·S)_t ≥ −c_max·W` on every path and date.
pub fn primal_optimize(
    u: &UtilityFunction,
    tree: &EventTree,
    x: f64,
    w: &LossBound,
    c_max: Option<f64>,
) -> Result<PrimalSolution> {
    let a = u.endpoint();
    if !x.is_finite() || (a.is_finite() && x <= a) {
        return Err(Error::Domain(format!("endowment x = {x} must exceed the domain endpoint {a}")));
    }
    if w.values().len() != tree.path_count() {
        return Err(invalid("loss bound does not match the market"));
    }
    if let Some(c) = c_max {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("c_max must be positive and finite, got {c}")));
        }
    }
    let poly = martingale_polytope(tree);
    if !poly.has_equivalent_measure() {
        let direction = arbitrage_certificate(tree, &poly);
        let g = tree.gains_matrix();
        let ray_gain = |scale: f64| -> f64 {
            compensated_sum(g.iter().zip(tree.path_probs()).map(|(row, &p)| {
                p * u.value(x + scale * row.iter().zip(&direction).map(|(a, b)| a * b).sum::<f64>())
            }))
        };
        let increasing = (0..60).all(|k| ray_gain(2f64.powi(k + 1)) >= ray_gain(2f64.powi(k)));
        return Err(Error::Unbounded {
            reason: format!(
                "the market admits arbitrage; expected utility {} along the certificate ray",
                if increasing { "increases over 60 doublings" } else { "is not monotone" }
            ),
            direction,
        });
    }
    let k = tree.strategy_dim();
    let obj = Objective::new(u, tree, x);
    let h0 = DVector::zeros(k);
    let (h, iterations) = match c_max {
        None => newton_ascent(&obj, None, h0, 500),
        Some(c) => constrained_solve(&obj, tree, w, c, h0),
    };
    let strategy = Strategy::from_flat(tree, h.as_slice())?;
    let wealth = obj.wealth(&h);
    let value = obj.value(&h).ok_or_else(|| Error::Domain("optimal wealth left the utility domain".into()))?;
    let claim = tree.path_rv(wealth.iter().copied().collect())?;
    let admissibility = admissible(tree, &strategy, w)?;
    let gradient_norm = obj.gradient(&h).amax();
    Ok(PrimalSolution { strategy, claim, value, admissibility, iterations, gradient_norm })
}

fn constrained_solve(obj: &Objective, tree: &EventTree, w: &LossBound, c: f64, h0: DVector<f64>) -> (DVector<f64>, usize) {
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (path_rows, &wv) in tree.running_gain_rows().iter().zip(w.values()) {
        for r in path_rows {
            let v = DVector::from_column_slice(r);
            let b = -c * wv;
            let dup = rows.iter().zip(&rhs).any(|(er, &eb)| eb == b && (er - &v).amax() == 0.0);
            if !dup && v.amax() > 0.0 {
                rows.push(v);
                rhs.push(b);
            }
        }
    }
    let cons = Constraints { rows, rhs };
    let mut h = h0;
    let mut iterations = 0;
    for kexp in 1..=8 {
        let mu = 10f64.powi(-kexp);
        let (next, it) = newton_ascent(obj, Some((&cons, mu)), h, 200);
        h = next;
        iterations += it;
    }
    let (polished, it) = active_set_polish(obj, &cons, &h);
    iterations += it;
    match polished {
        Some(p) => (p, iterations),
        None => (h, iterations),
    }
}

/// Newton on the face of nearly active constraints, accepted when it stays
/// feasible, improves the objective and has nonnegative multipliers.
fn active_set_polish(obj: &Objective, cons: &Constraints, h: &DVector<f64>) -> (Option<DVector<f64>>, usize) {
    let slacks = cons.slacks(h);
    let active: Vec<usize> = (0..slacks.len()).filter(|&j| slacks[j] < 1e-4 * (1.0 + cons.rhs[j].abs())).collect();
    let base = match obj.value(h) {
        Some(v) => v,
        None => return (None, 0),
    };
    let k = h.len();
    if active.is_empty() {
        let (hn, it) = newton_ascent(obj, None, h.clone(), 200);
        let ok = cons.slacks(&hn).iter().all(|&s| s >= -1e-12) && obj.value(&hn).is_some_and(|v| v >= base);
        return (ok.then_some(hn), it);
    }
    let am = DMatrix::from_fn(active.len(), k, |i, j| cons.rows[active[i]][j]);
    let ab = DVector::from_iterator(active.len(), active.iter().map(|&j| cons.rhs[j]));
    let svd = am.clone().svd(true, true);
    let Ok(corr) = svd.solve(&(&ab - &am * h), 1e-12) else { return (None, 0) };
    let mut hp = h + corr;
    // Null-space basis of the active rows.
    let full = DMatrix::from_fn(k, k, |i, j| if i < active.len() { am[(i, j)] } else { 0.0 });
    let fsvd = full.svd(false, true);
    let vt = fsvd.v_t.expect("requested");
    let smax = fsvd.singular_values.max();
    let null: Vec<DVector<f64>> = (0..k)
        .filter(|&i| fsvd.singular_values[i] <= 1e-10 * smax.max(1e-300))
        .map(|i| vt.row(i).transpose())
        .collect();
    let mut iterations = 0;
    if !null.is_empty() {
        let z = DMatrix::from_columns(&null);
        let mut current = match obj.value(&hp) {
            Some(v) => v,
            None => return (None, 0),
        };
        for _ in 0..200 {
            iterations += 1;
            let g = z.transpose() * obj.gradient(&hp);
            if g.amax() <= 1e-15 * (1.0 + current.abs()) {
                break;
            }
            let nh = -(z.transpose() * obj.hessian(&hp) * &z);
            let d = &z * min_norm_solve(nh, &g);
            let slope = obj.gradient(&hp).dot(&d);
            if !(slope > 1e-30 * (1.0 + current.abs())) {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let cand = &hp + &d * alpha;
                if let Some(v) = obj.value(&cand) {
                    if v >= current + 1e-4 * alpha * slope {
                        hp = cand;
                        current = v;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    let feasible = cons.slacks(&hp).iter().all(|&s| s >= -1e-12 * (1.0 + s.abs()));
    let grad = obj.gradient(&hp);
    // grad + Aᵀν = 0 with ν ≥ 0 for constraints A h ≥ b.
    let msvd = am.transpose().svd(true, true);
    let multipliers_ok = match msvd.solve(&(-&grad), 1e-12) {
        Ok(nu) => nu.iter().all(|&v| v >= -1e-9),
        Err(_) => false,
    };
    let improves = obj.value(&hp).is_some_and(|v| v >= base - 1e-14 * (1.0 + base.abs()));
    ((feasible && multipliers_ok && improves).then_some(hp), iterations)
}

/// `f_x = −Φ'(λ* q*/p)` per path.
pub fn recover_claim(u: &UtilityFunction, _x: f64, dual: &DualSolution) -> Result<FiniteRV> {
    if !dual.excluded_paths.is_empty() || dual.q.iter().any(|&q| q <= 0.0) {
        return Err(Error::Precondition("the optimal measure must charge every path".into()));
    }
    let values = dual
        .density
        .iter()
        .map(|&d| u.phi_prime(dual.lambda * d).map(|v| -v))
        .collect::<Result<Vec<f64>>>()?;
    FiniteRV::new(values, dual.reference.clone())
}

/// Primal/dual agreement on one market.
#[derive(Debug, Clone)]
pub struct DualityReport {
    pub primal: PrimalSolution,
    pub dual: DualSolution,
    pub recovered: FiniteRV,
    pub gap: f64,
    /// `|E_{q*}[f_x] − x − m|` for the recovered claim.
    pub budget_residual: f64,
    /// Largest pathwise difference between recovered and primal claims.
    pub claim_mismatch: f64,
    pub complete_market: bool,
    pub k_phi_member: bool,
}

/// Runs both solvers and compares values, budgets and claims.
pub fn verify_duality(u: &UtilityFunction, tree: &EventTree, x: f64, w: &LossBound) -> Result<DualityReport> {
    let primal = primal_optimize(u, tree, x, w, None)?;
    let dual = dual_optimize(u, tree, x, w)?;
    let recovered = recover_claim(u, x, &dual)?;
    let poly = martingale_polytope(tree);
    let budget = compensated_sum(dual.q.iter().zip(recovered.values()).map(|(q, f)| q * f));
    let budget_residual = (budget - x - dual.singular_mass).abs();
    let claim_mismatch = recovered
        .values()
        .iter()
        .zip(primal.claim.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DualityReport {
        gap: (primal.value - dual.value).abs(),
        budget_residual,
        claim_mismatch,
        complete_market: poly.is_singleton(),
        k_phi_member: k_phi_membership(&recovered, x, &poly, dual.singular_mass),
        primal,
        dual,
        recovered,
    })
}

/// Exact replication or the cheapest superreplication of a claim.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    /// A strategy with `x + (H·S)_T = f` on every path, when one exists.
    pub replicating: Option<Strategy>,
    /// `min{c : c + (H·S)_T ≥ f}`.
    pub superreplication_cost: f64,
    pub superreplicating: Option<Strategy>,
}

/// Solves `f − x = (H·S)_T` exactly when possible, and always reports the
/// superreplication price of `f`.
pub fn replication_check(tree: &EventTree, f: &FiniteRV, x: f64) -> Result<ReplicationOutcome> {
    let n = tree.path_count();
    if f.len() != n {
        return Err(invalid("claim does not match the market"));
    }
    let g = tree.gains_matrix();
    let k = tree.strategy_dim();
    let gm = DMatrix::from_fn(n, k, |i, j| g[i][j]);
    let target = DVector::from_iterator(n, f.values().iter().map(|v| v - x));
    let replicating = if k == 0 {
        (target.amax() <= 1e-9).then(|| Strategy::zeros(tree))
    } else {
        let svd = gm.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let h = svd.solve(&target, (smax * 1e-12).max(f64::MIN_POSITIVE)).unwrap_or_else(|_| DVector::zeros(k));
        let resid = (&gm * &h - &target).amax();
        if resid <= 1e-9 * (1.0 + target.amax()) {
            Some(Strategy::from_flat(tree, h.as_slice())?)
        } else {
            None
        }
    };
    // Variables: c⁺, c⁻, h⁺ (k), h⁻ (k), s (n); c + G h − s = f.
    let width = 2 + 2 * k + n;
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![0.0; width];
        row[0] = 1.0;
        row[1] = -1.0;
        for j in 0..k {
            row[2 + j] = g[i][j];
            row[2 + k + j] = -g[i][j];
        }
        row[2 + 2 * k + i] = -1.0;
        a.push(row);
    }
    let mut c = vec![0.0; width];
    c[0] = -1.0;
    c[1] = 1.0;
    let sol = lp::maximize(&a, f.values(), &c);
    let (cost, sup) = match sol.status {
        LpStatus::Optimal => {
            let h: Vec<f64> = (0..k).map(|j| sol.x[2 + j] - sol.x[2 + k + j]).collect();
            (sol.x[0] - sol.x[1], Some(Strategy::from_flat(tree, &h)?))
        }
        LpStatus::Unbounded => (f64::NEG_INFINITY, None),
        LpStatus::Infeasible => (f64::INFINITY, None),
    };
    Ok(ReplicationOutcome { replicating, superreplication_cost: cost, superreplicating: sup })
}

/// Budget checks for the wealth `x + X̂ ≥ 0` of the translated utility `u(· + a)`.
#[derive(Debug, Clone)]
pub struct ReplicationReport {
    pub dual: DualSolution,
    /// Optimal wealth `x + X̂` per path.
    pub wealth: Vec<f64>,
    /// `E_Q[x + X̂]` at each vertex.
    pub vertex_expectations: Vec<f64>,
    /// `max_Q E_Q[x + X̂] − x`; nonpositive when the supermartingale budget holds.
    pub max_excess: f64,
    /// `|E_{Q*}[x + X̂] − x|`.
    pub optimum_residual: f64,
    /// `x − min_Q E_Q[x + X̂]`.
    pub max_slack: f64,
    /// `|dual value − (λx + E[Φ⁰(λq/p)])|` with `Φ⁰(y) = Φ(y) + ay`.
    pub shifted_conjugate_residual: f64,
}

/// Checks that the optimal wealth costs at most `x` under every martingale
/// measure and exactly `x` under the dual optimum.
pub fn replication_checks(u: &UtilityFunction, tree: &EventTree, x: f64) -> Result<ReplicationReport> {
    let a = u.endpoint();
    if !a.is_finite() {
        return Err(invalid("the translated budget check needs a finite domain endpoint"));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x = {x} must be positive for the translated utility")));
    }
    let w = LossBound::constant(tree, 1.0)?;
    let dual = dual_optimize(u, tree, x + a, &w)?;
    let claim = recover_claim(u, x + a, &dual)?;
    let wealth: Vec<f64> = claim.values().iter().map(|f| f - a).collect();
    let poly = martingale_polytope(tree);
    let vertices: Vec<Vec<f64>> = match poly.vertices() {
        Some(v) => v.to_vec(),
        None => vec![poly.max_linear(&wealth).map(|(_, v)| v).ok_or(Error::EmptyPolytope)?],
    };
    let vertex_expectations: Vec<f64> = vertices
        .iter()
        .map(|v| compensated_sum(v.iter().zip(&wealth).map(|(q, f)| q * f)))
        .collect();
    let at_opt = compensated_sum(dual.q.iter().zip(&wealth).map(|(q, f)| q * f));
    let p = tree.path_probs();
    let shifted = dual.lambda * x
        + compensated_sum(dual.q.iter().zip(p).map(|(&q, &pi)| {
            let y = dual.lambda * q / pi;
            pi * (u.phi_value(y) + a * y)
        }));
    Ok(ReplicationReport {
        max_excess: vertex_expectations.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v - x)),
        max_slack: vertex_expectations.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(x - v)),
        optimum_residual: (at_opt - x).abs(),
        shifted_conjugate_residual: (dual.value - shifted).abs(),
        vertex_expectations,
        wealth,
        dual,
    })
}

/// Constrained values for two nested loss bounds against the dual value.
#[derive(Debug, Clone)]
pub struct LossBoundMonotonicity {
    pub value_w1: f64,
    pub value_w2: f64,
    pub dual_value: f64,
    pub ordered: bool,
}

/// `U^{W₁}(x) ≤ U^{W₂}(x) ≤` dual value for `W₁ ≤ W₂` at a common `c_max`.
pub fn loss_bound_monotonicity(
    u: &UtilityFunction,
    tree: &EventTree,
    x: f64,
    w1: &LossBound,
    w2: &LossBound,
    c_max: f64,
) -> Result<LossBoundMonotonicity> {
    if !w1.dominated_by(w2) {
        return Err(Error::Precondition("the first loss bound must be dominated by the second".into()));
    }
    let v1 = primal_optimize(u, tree, x, w1, Some(c_max))?.value;
    let v2 = primal_optimize(u, tree, x, w2, Some(c_max))?.value;
    let dual_value = dual_optimize(u, tree, x, w2)?.value;
    let slack = 1e-8;
    Ok(LossBoundMonotonicity { value_w1: v1, value_w2: v2, dual_value, ordered: v1 <= v2 + slack && v2 <= dual_value + slack })
}

#[cfg(test)]
mod tests {
    use super::*;

    const H_STAR: f64 = 1.1945063128187032;

    fn binomial() -> EventTree {
        EventTree::binomial(1.0, 2.0, 0.5, 0.75, 1).unwrap()
    }

    #[test]
    fn binomial_primal() {
        let t = binomial();
        let w = LossBound::constant(&t, 1.0).unwrap();
        let u = UtilityFunction::exponential(1.0).unwrap();
        let s = primal_optimize(&u, &t, 0.0, &w, None).unwrap();
        assert!((s.strategy.flat()[0] - H_STAR).abs() < 1e-12);
        assert!((s.value + 0.6814202223120523).abs() < 1e-13);
        assert!(s.gradient_norm < 1e-12);
    }

    #[test]
    fn constant_market_tie_break() {
        let t = EventTree::constant(vec![1.0], &[0.5, 0.5]).unwrap();
        let w = LossBound::constant(&t, 1.0).unwrap();
        let u = UtilityFunction::log_shifted(-2.0).unwrap();
        let s = primal_optimize(&u, &t, 0.5, &w, None).unwrap();
        assert_eq!(s.strategy.flat(), vec![0.0]);
        assert!((s.value - 2.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn trinomial_primal() {
        let t = EventTree::trinomial(1.0, [2.0, 1.0, 0.5], [0.3, 0.4, 0.3], 1).unwrap();
        let w = LossBound::constant(&t, 1.0).unwrap();
        let u = UtilityFunction::exponential(1.0).unwrap();
        let s = primal_optimize(&u, &t, 0.0, &w, None).unwrap();
        assert!((s.strategy.flat()[0] - 0.46209812037329684).abs() < 1e-12);
    }

    #[test]
    fn arbitrage_is_unbounded() {
        let t = EventTree::one_period(vec![1.0], &[(0.5, vec![2.0]), (0.5, vec![1.0])]).unwrap();
        let w = LossBound::constant(&t, 1.0).unwrap();
        let u = UtilityFunction::log_shifted(-1.0).unwrap();
        match primal_optimize(&u, &t, 0.0, &w, None) {
            Err(Error::Unbounded { direction, .. }) => assert!(direction[0] > 0.0),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn recovered_claim_binomial() {
        let t = binomial();
        let w = LossBound::constant(&t, 1.0).unwrap();
        let u = UtilityFunction::exponential(1.0).unwrap();
        let r = verify_duality(&u, &t, 0.0, &w).unwrap();
        assert!((r.recovered.values()[0] - H_STAR).abs() < 1e-12);
        assert!((r.recovered.values()[1] + 0.5 * H_STAR).abs() < 1e-12);
        assert!(r.gap < 1e-12 && r.budget_residual < 1e-12 && r.claim_mismatch < 1e-12);
        assert!(r.complete_market && r.k_phi_member);
    }

    #[test]
    fn replication_examples() {
        let t = binomial();
        let f = t.path_rv(vec![H_STAR, -0.5 * H_STAR]).unwrap();
        let r = replication_check(&t, &f, 0.0).unwrap();
        assert!((r.replicating.unwrap().flat()[0] - H_STAR).abs() < 1e-12);
        let flat = t.path_rv(vec![0.7, 0.7]).unwrap();
        assert_eq!(replication_check(&t, &flat, 0.7).unwrap().replicating.unwrap().flat(), vec![0.0]);
        let tri = EventTree::trinomial(1.0, [2.0, 1.0, 0.5], [0.3, 0.4, 0.3], 1).unwrap();
        let g = tri.path_rv(vec![1.0, 0.0, 1.0]).unwrap();
        let r = replication_check(&tri, &g, 0.0).unwrap();
        assert!(r.replicating.is_none());
        assert!((r.superreplication_cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_bound_monotone_on_binomial() {
        let t = binomial();
        let u = UtilityFunction::exponential(1.0).unwrap();
        let w1 = LossBound::constant(&t, 1.0).unwrap();
        let w2 = LossBound::constant(&t, 2.0).unwrap();
        let r = loss_bound_monotonicity(&u, &t, 0.0, &w1, &w2, 0.1).unwrap();
        assert!(r.ordered, "{r:?}");
        assert!((r.value_w1 - -(0.75 * (-0.2f64).exp() + 0.25 * 0.1f64.exp())).abs() < 1e-10, "{r:?}");
        let slack = loss_bound_monotonicity(&u, &t, 0.0, &w1, &w2, 1e3).unwrap();
        assert!((slack.value_w1 - slack.dual_value).abs() < 1e-10);
        assert!((slack.value_w2 - slack.dual_value).abs() < 1e-10);
    }
}
