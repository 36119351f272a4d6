use super::{EventTree, Strategy};
use crate::lp::{self, LpStatus};
use crate::numeric::compensated_sum;

const MAX_VERTEX_PATHS: usize = 64;
const MAX_BASES: usize = 200_000;
const SUPPORT_TOL: f64 = 1e-12;

/// Martingale measures on the paths of a finite tree, `{q ≥ 0 : Aq = b}`.
#[derive(Debug, Clone)]
pub struct MartingalePolytope {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    n: usize,
    empty: bool,
    vertices: Option<Vec<Vec<f64>>>,
    free: Vec<bool>,
    interior: Option<Vec<f64>>,
    dimension: usize,
}

/// Builds the polytope, its free paths (those charged by some martingale
/// measure) and, for at most 64 paths, its vertex list.
///
/// Martingale measures factor into conditional one-period measures, so the
/// free paths are found node by node: a child is usable when some local
/// martingale measure over the usable children charges it.
pub fn martingale_polytope(tree: &EventTree) -> MartingalePolytope {
    let (a, b) = tree.martingale_constraints();
    let n = tree.path_count();
    let nodes = tree.nodes();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(nodes[i].time));
    // Strictly positive local measure on the usable children, or None when
    // no martingale measure reaches the node.
    let mut local: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
    for &i in &order {
        let node = &nodes[i];
        if node.children.is_empty() {
            local[i] = Some(Vec::new());
            continue;
        }
        let viable: Vec<usize> = (0..node.children.len()).filter(|&k| local[node.children[k]].is_some()).collect();
        let deltas: Vec<Vec<f64>> = viable
            .iter()
            .map(|&k| nodes[node.children[k]].prices.iter().zip(&node.prices).map(|(c, p)| c - p).collect())
            .collect();
        local[i] = local_measure(&deltas).map(|w| {
            let mut full = vec![0.0; node.children.len()];
            for (&k, wk) in viable.iter().zip(w) {
                full[k] = wk;
            }
            full
        });
    }
    let root = nodes.iter().position(|nd| nd.parent.is_none()).expect("tree has a root");
    if local[root].is_none() {
        return MartingalePolytope::empty(a, b, n);
    }
    let mut interior = vec![0.0; n];
    for (path, weight) in tree.paths().iter().zip(interior.iter_mut()) {
        *weight = path
            .windows(2)
            .map(|step| {
                let parent = &nodes[step[0]];
                let k = parent.children.iter().position(|&c| c == step[1]).expect("path follows the tree");
                local[step[0]].as_ref().map_or(0.0, |w| w[k])
            })
            .product();
    }
    let free: Vec<bool> = interior.iter().map(|&w| w > 0.0).collect();
    MartingalePolytope::from_parts(a, b, n, free, interior)
}

/// A strictly positive martingale measure on the maximal support of
/// `{π ≥ 0 : Σπ = 1, Σπ·Δ = 0}`.
fn local_measure(deltas: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = deltas.len();
    if m == 0 {
        return None;
    }
    if deltas[0].len() == 1 {
        let d: Vec<f64> = deltas.iter().map(|v| v[0]).collect();
        let pos: Vec<usize> = (0..m).filter(|&k| d[k] > 0.0).collect();
        let neg: Vec<usize> = (0..m).filter(|&k| d[k] < 0.0).collect();
        let zero: Vec<usize> = (0..m).filter(|&k| d[k] == 0.0).collect();
        let mut w = vec![0.0; m];
        let mut count = 0.0;
        for &k in &zero {
            w[k] += 1.0;
            count += 1.0;
        }
        if !pos.is_empty() && !neg.is_empty() {
            let pairs = pos.iter().map(|&i| (i, neg[0])).chain(neg.iter().skip(1).map(|&j| (pos[0], j)));
            for (i, j) in pairs {
                let span = d[i] - d[j];
                w[i] += -d[j] / span;
                w[j] += d[i] / span;
                count += 1.0;
            }
        }
        if count == 0.0 {
            return None;
        }
        return Some(w.into_iter().map(|v| v / count).collect());
    }
    let assets = deltas[0].len();
    let mut rows: Vec<Vec<f64>> = (0..assets)
        .map(|k| deltas.iter().map(|v| v[k]).collect::<Vec<f64>>())
        .filter(|r: &Vec<f64>| r.iter().any(|v| *v != 0.0))
        .collect();
    let mut rhs = vec![0.0; rows.len()];
    rows.push(vec![1.0; m]);
    rhs.push(1.0);
    let mut covered = vec![false; m];
    let mut w = vec![0.0; m];
    let mut count = 0.0;
    for i in 0..m {
        if covered[i] {
            continue;
        }
        let mut c = vec![0.0; m];
        c[i] = 1.0;
        let sol = lp::maximize(&rows, &rhs, &c);
        match sol.status {
            LpStatus::Optimal => {}
            _ => return None,
        }
        covered[i] = true;
        if sol.value > SUPPORT_TOL {
            for (k, &v) in sol.x.iter().enumerate() {
                if v > SUPPORT_TOL {
                    covered[k] = true;
                }
                w[k] += v;
            }
            count += 1.0;
        }
    }
    (count > 0.0).then(|| w.into_iter().map(|v| if v > SUPPORT_TOL * count { v / count } else { 0.0 }).collect())
}

impl MartingalePolytope {
    fn empty(a: Vec<Vec<f64>>, b: Vec<f64>, n: usize) -> Self {
        MartingalePolytope { a, b, n, empty: true, vertices: Some(vec![]), free: vec![false; n], interior: None, dimension: 0 }
    }

    fn from_parts(a: Vec<Vec<f64>>, b: Vec<f64>, n: usize, free: Vec<bool>, interior: Vec<f64>) -> Self {
        let free_cols: Vec<usize> = (0..n).filter(|&j| free[j]).collect();
        let restricted: Vec<Vec<f64>> = a.iter().map(|r| free_cols.iter().map(|&j| r[j]).collect()).collect();
        let rank = lp::independent_rows(&restricted, &b).map_or(0, |(r, _)| r.len());
        let dimension = free_cols.len() - rank;
        let vertices = if n <= MAX_VERTEX_PATHS {
            match lp::enumerate_vertices(&a, &b, n, MAX_BASES) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!("vertex enumeration skipped: {e}");
                    None
                }
            }
        } else {
            None
        };
        MartingalePolytope { a, b, n, empty: false, vertices, free, interior: Some(interior), dimension }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn path_count(&self) -> usize {
        self.n
    }

    /// Equality system `(A, b)`.
    pub fn constraints(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.a, &self.b)
    }

    /// Vertex list, when enumerated.
    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        self.vertices.as_deref()
    }

    /// Paths charged by at least one martingale measure.
    pub fn free_paths(&self) -> &[bool] {
        &self.free
    }

    /// Whether some martingale measure charges every path.
    pub fn has_equivalent_measure(&self) -> bool {
        !self.empty && self.free.iter().all(|&f| f)
    }

    /// A point in the relative interior.
    pub fn interior_point(&self) -> Option<&[f64]> {
        self.interior.as_deref()
    }

    /// Affine dimension of the polytope.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_singleton(&self) -> bool {
        !self.empty && self.dimension == 0
    }

    /// Largest violation of `q ≥ 0`, `Aq = b`.
    pub fn residual(&self, q: &[f64]) -> f64 {
        let neg = q.iter().fold(0.0f64, |m, &v| m.max(-v));
        let eq = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(row, &bi)| (compensated_sum(row.iter().zip(q).map(|(x, y)| x * y)) - bi).abs())
            .fold(0.0, f64::max);
        neg.max(eq)
    }

    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        q.len() == self.n && !self.empty && self.residual(q) <= tol
    }

    /// `max_{Q} E_Q[f]` (with `f` indexed by path) and a maximizing measure.
    pub fn max_linear(&self, f: &[f64]) -> Option<(f64, Vec<f64>)> {
        if self.empty {
            return None;
        }
        if let Some(vs) = &self.vertices {
            return vs
                .iter()
                .map(|v| (compensated_sum(v.iter().zip(f).map(|(a, b)| a * b)), v))
                .max_by(|x, y| x.0.partial_cmp(&y.0).unwrap())
                .map(|(val, v)| (val, v.clone()));
        }
        let sol = lp::maximize(&self.a, &self.b, f);
        (sol.status == LpStatus::Optimal).then(|| (compensated_sum(sol.x.iter().zip(f).map(|(a, b)| a * b)), sol.x))
    }
}

/// Outcome of a conditional-drift check of `H·S` under `q`.
#[derive(Debug, Clone)]
pub struct SupermartingaleCheck {
    pub holds: bool,
    pub worst_residual: f64,
    pub worst_node: Option<usize>,
}

/// Checks `E_q[h·ΔS | node] ≤ tol` at every node that `q` charges.
pub fn supermartingale_check(tree: &EventTree, q: &[f64], h: &Strategy, tol: f64) -> SupermartingaleCheck {
    let nodes = tree.nodes();
    let mut mass = vec![0.0; nodes.len()];
    for (path, &qp) in tree.paths().iter().zip(q) {
        for &n in path {
            mass[n] += qp;
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_node = None;
    for &n in tree.nonterminal_nodes() {
        if mass[n] <= 0.0 {
            continue;
        }
        let pos = h.at_node(tree, n).expect("interior node");
        let drift: f64 = nodes[n]
            .children
            .iter()
            .map(|&c| {
                let inc: f64 = (0..tree.assets()).map(|i| pos[i] * (nodes[c].prices[i] - nodes[n].prices[i])).sum();
                mass[c] / mass[n] * inc
            })
            .sum();
        if drift > worst {
            worst = drift;
            worst_node = Some(n);
        }
    }
    let worst = worst.max(0.0);
    SupermartingaleCheck { holds: worst <= tol, worst_residual: worst, worst_node }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_polytope_is_a_point() {
        let t = EventTree::binomial(1.0, 2.0, 0.5, 0.75, 1).unwrap();
        let p = martingale_polytope(&t);
        assert!(p.is_singleton());
        let v = p.vertices().unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0][0] - 1.0 / 3.0).abs() < 1e-14 && (v[0][1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn constant_market_gives_simplex() {
        let t = EventTree::constant(vec![1.0], &[0.2, 0.3, 0.5]).unwrap();
        let p = martingale_polytope(&t);
        assert_eq!(p.dimension(), 2);
        assert_eq!(p.vertices().unwrap().len(), 3);
    }

    #[test]
    fn trinomial_segment() {
        let t = EventTree::trinomial(1.0, [2.0, 1.0, 0.5], [0.3, 0.4, 0.3], 1).unwrap();
        let p = martingale_polytope(&t);
        assert_eq!(p.dimension(), 1);
        let v = p.vertices().unwrap();
        assert_eq!(v.len(), 2);
        assert!(p.has_equivalent_measure());
    }

    #[test]
    fn arbitrage_market_is_empty() {
        let t = EventTree::one_period(vec![1.0], &[(0.5, vec![2.0]), (0.5, vec![1.5])]).unwrap();
        assert!(martingale_polytope(&t).is_empty());
    }

    #[test]
    fn supermartingale_examples() {
        let t = EventTree::binomial(1.0, 2.0, 0.5, 0.75, 1).unwrap();
        let h = Strategy::constant(&t, &[1.0]).unwrap();
        let q = [1.0 / 3.0, 2.0 / 3.0];
        let chk = supermartingale_check(&t, &q, &h, 1e-12);
        assert!(chk.holds && chk.worst_residual < 1e-15);
        let drifted = [0.5, 0.5];
        assert!(!supermartingale_check(&t, &drifted, &h, 1e-12).holds);
        assert!(supermartingale_check(&t, &drifted, &Strategy::zeros(&t), 1e-12).holds);
    }
}
