//! Dense two-phase simplex (Bland's rule) and vertex enumeration for
//! polytopes `{x ≥ 0 : Ax = b}`.

use std::collections::{HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
}

/// Gaussian elimination with partial pivoting; drops dependent rows.
///
/// Returns `None` when the system is inconsistent.
pub fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = a.first().map_or(0, |r| r.len());
    let mut rows: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut v = r.clone();
            v.push(bi);
            v
        })
        .collect();
    let scale = rows
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let tol = 1e-10 * scale;
    let mut rank = 0;
    for col in 0..n {
        if rank == rows.len() {
            break;
        }
        let (piv, best) = (rank..rows.len())
            .map(|i| (i, rows[i][col].abs()))
            .fold((rank, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if best <= tol {
            continue;
        }
        rows.swap(rank, piv);
        let p = rows[rank][col];
        for v in rows[rank].iter_mut() {
            *v /= p;
        }
        let pivot_row = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank {
                let f = row[col];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r[n].abs() > 1e-9 * scale.max(1.0)) {
        return None;
    }
    rows.truncate(rank);
    let bb = rows.iter().map(|r| r[n]).collect();
    let aa = rows
        .into_iter()
        .map(|mut r| {
            r.truncate(n);
            r
        })
        .collect();
    Some((aa, bb))
}

struct Tableau {
    m: usize,
    width: usize,
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = self.t[i][col];
            if f != 0.0 {
                for (v, pv) in self.t[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost·x` over the current tableau with Bland's rule.
    fn run(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> LpStatus {
        let max_iter = 50_000 + 50 * (self.m + self.width);
        for _ in 0..max_iter {
            let entering = (0..self.width).find(|&j| {
                if !allowed(j) || self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - (0..self.m).map(|i| cost[self.basis[i]] * self.t[i][j]).sum::<f64>();
                reduced > COST_TOL
            });
            let Some(j) = entering else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let d = self.t[i][j];
                if d > PIVOT_TOL {
                    let ratio = self.rhs(i) / d;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return LpStatus::Unbounded,
                Some((i, _)) => self.pivot(i, j),
            }
        }
        log::warn!("simplex iteration cap reached");
        LpStatus::Optimal
    }
}

/// Phase one on an independent system; returns a feasible tableau without
/// artificial columns in the basis.
fn phase_one(a: &[Vec<f64>], b: &[f64], n: usize) -> Option<Tableau> {
    let m = a.len();
    let width = n + m;
    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width + 1];
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = 1.0;
        row[width] = sign * b[i];
        t.push(row);
    }
    let mut tab = Tableau { m, width, t, basis: (n..n + m).collect() };
    let cost: Vec<f64> = (0..width).map(|j| if j >= n { -1.0 } else { 0.0 }).collect();
    tab.run(&cost, &|_| true);
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.rhs(i)).sum();
    if infeas > 1e-9 {
        return None;
    }
    for i in 0..m {
        if tab.basis[i] >= n {
            let col = (0..n)
                .filter(|j| !tab.basis.contains(j))
                .max_by(|&x, &y| tab.t[i][x].abs().partial_cmp(&tab.t[i][y].abs()).unwrap());
            match col {
                Some(j) if tab.t[i][j].abs() > PIVOT_TOL => tab.pivot(i, j),
                _ => return None,
            }
        }
    }
    Some(tab)
}

/// Maximizes `c·x` subject to `Ax = b`, `x ≥ 0`.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpSolution {
    let n = c.len();
    let infeasible = LpSolution { status: LpStatus::Infeasible, x: vec![], value: f64::NEG_INFINITY };
    let Some((a, b)) = independent_rows(a, b) else {
        return infeasible;
    };
    if a.is_empty() {
        // Only x ≥ 0: bounded iff c ≤ 0.
        if c.iter().any(|&v| v > COST_TOL) {
            return LpSolution { status: LpStatus::Unbounded, x: vec![0.0; n], value: f64::INFINITY };
        }
        return LpSolution { status: LpStatus::Optimal, x: vec![0.0; n], value: 0.0 };
    }
    let Some(mut tab) = phase_one(&a, &b, n) else {
        return infeasible;
    };
    let mut cost = c.to_vec();
    cost.resize(tab.width, 0.0);
    let status = tab.run(&cost, &|j| j < n);
    let mut x = vec![0.0; n];
    for i in 0..tab.m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let value = if status == LpStatus::Unbounded {
        f64::INFINITY
    } else {
        x.iter().zip(c).map(|(xi, ci)| xi * ci).sum()
    };
    LpSolution { status, x, value }
}

/// Lists the vertices of `{x ≥ 0 : Ax = b}` by breadth-first search over
/// feasible bases. Fails when more than `max_bases` bases are visited.
pub fn enumerate_vertices(a: &[Vec<f64>], b: &[f64], n: usize, max_bases: usize) -> Result<Vec<Vec<f64>>> {
    let Some((a, b)) = independent_rows(a, b) else {
        return Ok(vec![]);
    };
    if a.is_empty() {
        return Err(Error::InvalidInput("vertex enumeration needs a bounded polytope".into()));
    }
    let Some(tab) = phase_one(&a, &b, n) else {
        return Ok(vec![]);
    };
    let m = a.len();
    let amat = DMatrix::from_fn(m, n, |i, j| a[i][j]);
    let bvec = DVector::from_column_slice(&b);

    let mut start = tab.basis.clone();
    start.sort_unstable();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut keys: HashSet<Vec<i64>> = HashSet::new();

    while let Some(basis) = queue.pop_front() {
        let bmat = DMatrix::from_fn(m, m, |i, k| amat[(i, basis[k])]);
        let lu = bmat.lu();
        let Some(xb) = lu.solve(&bvec) else { continue };
        let mut x = vec![0.0; n];
        for (k, &j) in basis.iter().enumerate() {
            x[j] = xb[k].max(0.0);
        }
        let key: Vec<i64> = x.iter().map(|v| (v * 1e9).round() as i64).collect();
        if keys.insert(key) {
            vertices.push(x);
        }
        for j in 0..n {
            if basis.binary_search(&j).is_ok() {
                continue;
            }
            let Some(d) = lu.solve(&amat.column(j).into_owned()) else { continue };
            let mut best = f64::INFINITY;
            for k in 0..m {
                if d[k] > PIVOT_TOL {
                    best = best.min(xb[k].max(0.0) / d[k]);
                }
            }
            if !best.is_finite() {
                continue;
            }
            for k in 0..m {
                if d[k] > PIVOT_TOL && xb[k].max(0.0) / d[k] <= best + 1e-12 {
                    let mut next = basis.clone();
                    next[k] = j;
                    next.sort_unstable();
                    if seen.insert(next.clone()) {
                        if seen.len() > max_bases {
                            return Err(Error::InvalidInput(format!(
                                "vertex enumeration exceeded {max_bases} bases"
                            )));
                        }
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    vertices.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_lp() {
        // max x + y, x + 2y + s = 4, 3x + y + t = 6
        let a = vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]];
        let b = vec![4.0, 6.0];
        let sol = maximize(&a, &b, &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 2.8).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![1.0, 1.0]];
        assert_eq!(maximize(&a, &[-1.0], &[1.0, 0.0]).status, LpStatus::Infeasible);
        let a = vec![vec![1.0, -1.0]];
        assert_eq!(maximize(&a, &[1.0], &[1.0, 0.0]).status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
        let (aa, _) = independent_rows(&a, &[1.0, 2.0]).unwrap();
        assert_eq!(aa.len(), 1);
        assert!(independent_rows(&a, &[1.0, 3.0]).is_none());
    }

    #[test]
    fn simplex_vertices() {
        let a = vec![vec![1.0, 1.0, 1.0]];
        let v = enumerate_vertices(&a, &[1.0], 3, 1000).unwrap();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn trinomial_segment_vertices() {
        // q·(1, 0, -0.5) = 0, sum q = 1
        let a = vec![vec![1.0, 0.0, -0.5], vec![1.0, 1.0, 1.0]];
        let v = enumerate_vertices(&a, &[0.0, 1.0], 3, 1000).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v[0][1] - 1.0).abs() < 1e-12);
        assert!((v[1][0] - 1.0 / 3.0).abs() < 1e-12 && (v[1][2] - 2.0 / 3.0).abs() < 1e-12);
    }
}
