//! The dual problem `min_{λ>0, Q} λ(x + m) + E[Φ(λ dQ/dP)]` on finite models.
//!
//! `λ` is eliminated by a monotone root-find; the remaining problem in `q`
//! is solved by projected Newton steps in the affine hull of the martingale
//! constraints, with a Frank–Wolfe fallback.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::market::{martingale_polytope, EventTree, LossBound, MartingalePolytope};
use crate::numeric::{compensated_sum, golden_section_min, safeguarded_newton};
use crate::orlicz::FiniteRV;
use crate::utility::{ExtendedReal, UtilityFunction};

/// Solver settings.
#[derive(Debug, Clone)]
pub struct DualOptions {
    /// Target for the variational residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Optional starting measure (path probabilities).
    pub start: Option<Vec<f64>>,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions { tolerance: 1e-8, max_iterations: 10_000, start: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualMethod {
    SinglePoint,
    Newton,
    FrankWolfe,
}

/// Dual optimum on a finite model.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub lambda: f64,
    /// Optimal measure as path probabilities.
    pub q: Vec<f64>,
    /// `q / p` per path.
    pub density: Vec<f64>,
    pub value: f64,
    pub first_order_residual: f64,
    pub variational_residual: f64,
    /// Always 0 on finite models.
    pub singular_mass: f64,
    pub iterations: usize,
    pub method: DualMethod,
    /// Paths no martingale measure charges.
    pub excluded_paths: Vec<usize>,
    /// Reference probabilities `p`.
    pub reference: Vec<f64>,
}

fn check_measure(q: &[f64], p: &[f64]) -> Result<()> {
    if q.len() != p.len() {
        return Err(invalid(format!("measure has {} entries, probabilities {}", q.len(), p.len())));
    }
    if q.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("measure entries must be finite and nonnegative"));
    }
    if p.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("reference probabilities must be positive"));
    }
    Ok(())
}

/// Root `λ*` of `c + Σ q Φ'(λ q/p) = 0`.
///
/// With a finite endpoint `a` the root exists iff `c > a·Q(Ω)`.
pub fn lambda_star(u: &UtilityFunction, c: f64, q: &[f64], p: &[f64]) -> Result<f64> {
    check_measure(q, p)?;
    let mass = compensated_sum(q.iter().copied());
    if mass <= 0.0 {
        return Err(invalid("the measure has no mass"));
    }
    let a = u.endpoint();
    if a.is_finite() && c <= a * mass {
        return Err(Error::Domain(format!(
            "c = {c} must exceed a·Q(Ω) = {}: the minimum over lambda is not attained",
            a * mass
        )));
    }
    let support: Vec<(f64, f64)> = q.iter().zip(p).filter(|(qi, _)| **qi > 0.0).map(|(&qi, &pi)| (qi, qi / pi)).collect();
    let eval = |lambda: f64| -> Result<(f64, f64)> {
        let mut f = Vec::with_capacity(support.len() + 1);
        let mut df = Vec::with_capacity(support.len());
        f.push(c);
        for &(qi, ri) in &support {
            let y = lambda * ri;
            f.push(qi * u.phi_prime(y)?);
            df.push(qi * ri * u.phi_second(y)?);
        }
        Ok((compensated_sum(f), compensated_sum(df)))
    };
    let (f1, _) = eval(1.0)?;
    if f1 == 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut steps = 0;
    if f1 < 0.0 {
        loop {
            hi *= 2.0;
            steps += 1;
            let (fh, _) = eval(hi)?;
            if fh > 0.0 {
                break;
            }
            lo = hi;
            if fh == 0.0 {
                return Ok(hi);
            }
            if steps > 1100 {
                return Err(Error::Domain("lambda bracket expansion failed".into()));
            }
        }
    } else {
        loop {
            lo *= 0.5;
            steps += 1;
            let (fl, _) = eval(lo)?;
            if fl < 0.0 {
                break;
            }
            hi = lo;
            if fl == 0.0 {
                return Ok(lo);
            }
            if steps > 1100 {
                return Err(Error::Domain("lambda bracket contraction failed".into()));
            }
        }
    }
    let scale = 1.0 + c.abs();
    let mut err = None;
    let root = safeguarded_newton(
        |l| match eval(l) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                (f64::NAN, 1.0)
            }
        },
        lo,
        hi,
        1e-13 * scale,
        500,
    );
    if let Some(e) = err {
        return Err(e);
    }
    root
}

/// `λ(x + m) + E[Φ(λ q/p)]`.
pub fn dual_objective(u: &UtilityFunction, x: f64, lambda: f64, q: &[f64], p: &[f64], singular_mass: f64) -> ExtendedReal {
    let mut total = ExtendedReal::Finite(lambda * (x + singular_mass));
    let mut finite = Vec::with_capacity(q.len());
    for (&qi, &pi) in q.iter().zip(p) {
        match u.phi(lambda * qi / pi) {
            ExtendedReal::Finite(v) => finite.push(pi * v),
            other => total = total.add_upper(other),
        }
    }
    total.add_upper(ExtendedReal::Finite(compensated_sum(finite)))
}

/// `f = −Φ'(λ q/p)` on charged paths, 0 elsewhere.
fn marginal_claim(u: &UtilityFunction, lambda: f64, q: &[f64], p: &[f64]) -> Vec<f64> {
    q.iter()
        .zip(p)
        .map(|(&qi, &pi)| if qi > 0.0 { -u.phi_prime(lambda * qi / pi).unwrap_or(0.0) } else { 0.0 })
        .collect()
}

/// `max_Q (E_Q[f] − ‖Q_s‖) − (E_{q*}[f] − m)` over the given vertices with
/// `f = −Φ'(λ* q*/p)`, clipped at 0. Vertices are regular measures.
pub fn variational_residual(
    u: &UtilityFunction,
    lambda: f64,
    q: &[f64],
    p: &[f64],
    vertices: &[Vec<f64>],
    singular_mass: f64,
) -> f64 {
    let f = marginal_claim(u, lambda, q, p);
    let at_q = compensated_sum(q.iter().zip(&f).map(|(a, b)| a * b));
    let best = vertices
        .iter()
        .map(|v| compensated_sum(v.iter().zip(&f).map(|(a, b)| a * b)))
        .fold(f64::NEG_INFINITY, f64::max);
    (best - (at_q - singular_mass)).max(0.0)
}

fn residual_on_polytope(u: &UtilityFunction, lambda: f64, q: &[f64], p: &[f64], poly: &MartingalePolytope) -> f64 {
    let f = marginal_claim(u, lambda, q, p);
    let at_q = compensated_sum(q.iter().zip(&f).map(|(a, b)| a * b));
    match poly.max_linear(&f) {
        Some((best, _)) => (best - at_q).max(0.0),
        None => f64::INFINITY,
    }
}

/// `E_Q[f] ≤ x + m` at every vertex of the polytope.
pub fn k_phi_membership(f: &FiniteRV, x: f64, poly: &MartingalePolytope, singular_mass: f64) -> bool {
    let bound = x + singular_mass + 1e-9 * (1.0 + x.abs());
    match poly.vertices() {
        Some(vs) => vs.iter().all(|v| compensated_sum(v.iter().zip(f.values()).map(|(a, b)| a * b)) <= bound),
        None => poly.max_linear(f.values()).is_some_and(|(best, _)| best <= bound),
    }
}

/// Solves the dual problem for the market's martingale polytope.
///
/// On finite trees every strategy is admissible for every loss bound, so
/// `w` only has to match the market; the dual does not depend on it.
pub fn dual_optimize(u: &UtilityFunction, tree: &EventTree, x: f64, w: &LossBound) -> Result<DualSolution> {
    if w.values().len() != tree.path_count() {
        return Err(invalid("loss bound does not match the market"));
    }
    let poly = martingale_polytope(tree);
    dual_optimize_with(u, &poly, tree.path_probs(), x, &DualOptions::default())
}

/// Reduced problem restricted to the free paths.
struct Reduced<'a> {
    u: &'a UtilityFunction,
    p: Vec<f64>,
    x: f64,
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
    gram_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

struct Point {
    q: Vec<f64>,
    lambda: f64,
    value: f64,
}

impl Reduced<'_> {
    fn evaluate(&self, q: Vec<f64>) -> Option<Point> {
        if q.iter().any(|v| !(*v >= 0.0)) {
            return None;
        }
        let lambda = lambda_star(self.u, self.x, &q, &self.p).ok()?;
        let value = dual_objective(self.u, self.x, lambda, &q, &self.p, 0.0).finite()?;
        Some(Point { q, lambda, value })
    }

    /// Euclidean correction back onto `rows · q = rhs`.
    fn reproject(&self, q: &mut [f64]) {
        if self.rows.nrows() == 0 {
            return;
        }
        let qv = DVector::from_column_slice(q);
        let r = &self.rhs - &self.rows * &qv;
        if let Some(z) = self.gram_lu.solve(&r) {
            let corr = self.rows.transpose() * z;
            for (qi, c) in q.iter_mut().zip(corr.iter()) {
                *qi += c;
            }
        }
    }

    /// Correction back onto `rows · q = rhs` proportional to `q` itself, so
    /// small coordinates keep their relative precision.
    fn reproject_relative(&self, q: &mut [f64]) {
        if self.rows.nrows() == 0 {
            return;
        }
        let qv = DVector::from_column_slice(q);
        let r = &self.rhs - &self.rows * &qv;
        let weights = qv.map(|v| v.max(0.0));
        let rw = DMatrix::from_fn(self.rows.nrows(), self.rows.ncols(), |i, j| self.rows[(i, j)] * weights[j]);
        let gram = &rw * self.rows.transpose();
        match gram.lu().solve(&r) {
            Some(z) => {
                let corr = rw.transpose() * z;
                for (qi, c) in q.iter_mut().zip(corr.iter()) {
                    *qi += c;
                }
            }
            None => self.reproject(q),
        }
    }

    /// `M v` with `M = D⁻¹ − D⁻¹Rᵀ(RD⁻¹Rᵀ)⁻¹RD⁻¹`.
    fn scaled_projection(&self, dinv: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let w = dinv.component_mul(v);
        if self.rows.nrows() == 0 {
            return Some(w);
        }
        let rd = DMatrix::from_fn(self.rows.nrows(), self.rows.ncols(), |i, j| self.rows[(i, j)] * dinv[j]);
        let gram = &rd * self.rows.transpose();
        let z = gram.lu().solve(&(&self.rows * &w))?;
        Some(w - dinv.component_mul(&(self.rows.transpose() * z)))
    }

    /// Projected Newton direction, the directional derivative `gᵀd`, and
    /// `max_i |g_i − (Rᵀz)_i|`, the unweighted distance of the gradient from
    /// the constraint span.
    fn newton_direction(&self, pt: &Point) -> Option<(DVector<f64>, f64, f64)> {
        let n = pt.q.len();
        let lam = pt.lambda;
        let mut g = DVector::zeros(n);
        let mut dinv = DVector::zeros(n);
        let mut c = DVector::zeros(n);
        let mut kappa = 0.0;
        for i in 0..n {
            let y = lam * pt.q[i] / self.p[i];
            let d1 = self.u.phi_prime(y).ok()?;
            let d2 = self.u.phi_second(y).ok()?;
            g[i] = lam * d1;
            dinv[i] = self.p[i] / (lam * lam * d2);
            c[i] = d1 + y * d2;
            kappa += pt.q[i] * pt.q[i] / self.p[i] * d2;
        }
        let mg = self.scaled_projection(&dinv, &g)?;
        // g − Rᵀz; directions lie in the null space of R, so gᵀd = rᵀd
        // without the cancellation of the span component.
        let reduced = mg.component_div(&dinv);
        let stationarity = reduced.amax();
        let mut d = -&mg;
        if let Some(mc) = self.scaled_projection(&dinv, &c) {
            let denom = kappa - c.dot(&mc);
            if denom > 1e-12 * kappa {
                let full = -(&mg + &mc * (c.dot(&mg) / denom));
                if reduced.dot(&full) < 0.0 {
                    d = full;
                }
            }
        }
        let slope = reduced.dot(&d);
        Some((d, slope, stationarity))
    }
}

/// Solves the dual problem over a given polytope with reference probabilities `p`.
pub fn dual_optimize_with(
    u: &UtilityFunction,
    poly: &MartingalePolytope,
    p: &[f64],
    x: f64,
    opts: &DualOptions,
) -> Result<DualSolution> {
    if !u.is_strictly_concave() {
        return Err(Error::StrictConcavityRequired);
    }
    if poly.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    if p.len() != poly.path_count() {
        return Err(invalid("probabilities do not match the polytope"));
    }
    if !x.is_finite() {
        return Err(invalid("endowment must be finite"));
    }
    let a = u.endpoint();
    if a.is_finite() && x <= a {
        return Err(Error::Domain(format!("endowment x = {x} must exceed the domain endpoint {a}")));
    }
    let n = p.len();
    let free_mask = poly.free_paths();
    let free: Vec<usize> = (0..n).filter(|&i| free_mask[i]).collect();
    let excluded: Vec<usize> = (0..n).filter(|&i| !free_mask[i]).collect();
    let excluded_mass: f64 = excluded.iter().map(|&i| p[i]).sum();
    let offset = if excluded.is_empty() {
        0.0
    } else {
        match u.u_at_infinity() {
            ExtendedReal::Finite(v) => v * excluded_mass,
            _ => {
                return Err(Error::Unbounded {
                    reason: "no martingale measure charges every path and the utility is unbounded above".into(),
                    direction: vec![],
                })
            }
        }
    };

    let expand = |qf: &[f64]| {
        let mut q = vec![0.0; n];
        for (k, &i) in free.iter().enumerate() {
            q[i] = qf[k];
        }
        q
    };
    let finish = |q: Vec<f64>, lambda: f64, iterations: usize, method: DualMethod, variational: f64| {
        let value = dual_objective(u, x, lambda, &q, p, 0.0).to_f64();
        let fo = compensated_sum(
            std::iter::once(x).chain(
                q.iter()
                    .zip(p)
                    .filter(|(qi, _)| **qi > 0.0)
                    .map(|(&qi, &pi)| qi * u.phi_prime(lambda * qi / pi).unwrap_or(f64::NAN)),
            ),
        )
        .abs();
        let density = q.iter().zip(p).map(|(a, b)| a / b).collect();
        DualSolution {
            lambda,
            q,
            density,
            value,
            first_order_residual: fo,
            variational_residual: variational,
            singular_mass: 0.0,
            iterations,
            method,
            excluded_paths: excluded.clone(),
            reference: p.to_vec(),
        }
    };
    debug_assert!(offset.is_finite());

    if poly.is_singleton() {
        let q = match poly.vertices() {
            Some([v]) => v.clone(),
            _ => poly.interior_point().expect("nonempty").to_vec(),
        };
        let lambda = lambda_star(u, x, &q, p)?;
        return Ok(finish(q, lambda, 0, DualMethod::SinglePoint, 0.0));
    }

    let (a_full, b_full) = poly.constraints();
    let restricted: Vec<Vec<f64>> = a_full.iter().map(|r| free.iter().map(|&j| r[j]).collect()).collect();
    let (rows, rhs) = crate::lp::independent_rows(&restricted, b_full).ok_or(Error::EmptyPolytope)?;
    let m = rows.len();
    let nf = free.len();
    let rows_mat = DMatrix::from_fn(m, nf, |i, j| rows[i][j]);
    let gram = &rows_mat * rows_mat.transpose();
    let red = Reduced {
        u,
        p: free.iter().map(|&i| p[i]).collect(),
        x,
        rhs: DVector::from_column_slice(&rhs),
        gram_lu: gram.lu(),
        rows: rows_mat,
    };

    let interior: Vec<f64> = free.iter().map(|&i| poly.interior_point().expect("nonempty")[i]).collect();
    let mut q0: Vec<f64> = match &opts.start {
        Some(s) => {
            if s.len() != n || !poly.contains(s, 1e-9) {
                return Err(invalid("starting measure is not in the martingale polytope"));
            }
            free.iter().map(|&i| s[i]).collect()
        }
        None => {
            let mut proj = red.p.clone();
            red.reproject(&mut proj);
            proj
        }
    };
    let min_int = interior.iter().copied().fold(f64::INFINITY, f64::min);
    let thr = 1e-6f64.min(0.5 * min_int);
    if q0.iter().any(|&v| v < thr) {
        let t = q0
            .iter()
            .zip(&interior)
            .filter(|(qv, _)| **qv < thr)
            .map(|(qv, zv)| (thr - qv) / (zv - qv))
            .fold(0.0f64, f64::max)
            .min(1.0);
        q0 = q0.iter().zip(&interior).map(|(qv, zv)| (1.0 - t) * qv + t * zv).collect();
    }

    let mut pt = red.evaluate(q0).ok_or_else(|| Error::Domain("dual objective is not finite at the start".into()))?;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let Some((d, slope, stationarity)) = red.newton_direction(&pt) else { break };
        // Bounds the variational residual by 2σ/λ.
        if !(slope < 0.0) || 2.0 * stationarity / pt.lambda <= 1e-3 * opts.tolerance {
            break;
        }
        let noise = -slope <= 1e-10 * (1.0 + pt.value.abs());
        // Decreasing coordinates move multiplicatively, which agrees with the
        // Newton step to first order and never reaches the boundary.
        let mut alpha = 1.0f64;
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand: Vec<f64> = pt
                .q
                .iter()
                .zip(d.iter())
                .map(|(qi, di)| if *di >= 0.0 { qi + alpha * di } else { qi * (alpha * di / qi).exp() })
                .collect();
            red.reproject_relative(&mut cand);
            if let Some(np) = red.evaluate(cand) {
                if np.value <= pt.value + 1e-4 * alpha * slope {
                    accepted = Some(np);
                    break;
                }
                // Below round-off in the value, progress is judged by stationarity.
                if noise && np.value <= pt.value + 1e-11 * (1.0 + pt.value.abs()) {
                    if let Some((_, _, next)) = red.newton_direction(&np) {
                        if next < 0.9 * stationarity {
                            accepted = Some(np);
                            break;
                        }
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(np) => pt = np,
            None => break,
        }
    }

    let full = expand(&pt.q);
    let mut residual = residual_on_polytope(u, pt.lambda, &full, p, poly);
    let mut method = DualMethod::Newton;
    if residual > opts.tolerance {
        log::debug!("newton stalled with residual {residual:e}; switching to Frank-Wolfe");
        method = DualMethod::FrankWolfe;
        while iterations < opts.max_iterations && residual > opts.tolerance {
            iterations += 1;
            let full = expand(&pt.q);
            let f = marginal_claim(u, pt.lambda, &full, p);
            let Some((_, vertex)) = poly.max_linear(&f) else { break };
            let target: Vec<f64> = free.iter().map(|&i| vertex[i]).collect();
            let dir: Vec<f64> = target.iter().zip(&pt.q).map(|(s, q)| s - q).collect();
            let value_at = |t: f64| {
                let cand: Vec<f64> = pt.q.iter().zip(&dir).map(|(q, d)| q + t * d).collect();
                red.evaluate(cand).map_or(f64::INFINITY, |np| np.value)
            };
            let (t, v) = golden_section_min(value_at, 0.0, 1.0, 1e-12);
            if !(v < pt.value) {
                break;
            }
            let cand: Vec<f64> = pt.q.iter().zip(&dir).map(|(q, d)| q + t * d).collect();
            match red.evaluate(cand) {
                Some(np) => pt = np,
                None => break,
            }
            residual = residual_on_polytope(u, pt.lambda, &expand(&pt.q), p, poly);
        }
    }
    if residual > opts.tolerance {
        return Err(Error::NotConverged { iterations, residual });
    }
    let q = expand(&pt.q);
    let mut sol = finish(q, pt.lambda, iterations, method, residual);
    sol.value += offset;
    Ok(sol)
}
