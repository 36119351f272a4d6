//! Finite multi-period markets on event trees, trading strategies, loss
//! bounds and the polytope of martingale measures on paths.

mod polytope;
mod random;

pub use polytope::{martingale_polytope, supermartingale_check, MartingalePolytope, SupermartingaleCheck};
pub use random::{random_one_period, seeded_one_period};

use crate::error::{invalid, Result};
use crate::numeric::compensated_sum;
use crate::orlicz::{FiniteRV, TailFamily};
use crate::utility::UtilityFunction;

/// A node of an event tree.
#[derive(Debug, Clone)]
pub struct Node {
    pub time: usize,
    pub prices: Vec<f64>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Probability of reaching this node from its parent (1 at the root).
    pub transition_prob: f64,
}

/// A finite market: a rooted tree of price vectors. Paths (root to leaf) are
/// the sample space; every leaf sits at the horizon.
#[derive(Debug, Clone)]
pub struct EventTree {
    nodes: Vec<Node>,
    assets: usize,
    horizon: usize,
    paths: Vec<Vec<usize>>,
    path_probs: Vec<f64>,
    nonterminal: Vec<usize>,
    slot: Vec<Option<usize>>,
}

/// Incremental construction of an [`EventTree`].
#[derive(Debug, Clone)]
pub struct EventTreeBuilder {
    nodes: Vec<Node>,
    assets: usize,
}

impl EventTreeBuilder {
    /// Adds a child and returns its node id.
    pub fn add_child(&mut self, parent: usize, prob: f64, prices: Vec<f64>) -> Result<usize> {
        if parent >= self.nodes.len() {
            return Err(invalid(format!("unknown parent node {parent}")));
        }
        if prices.len() != self.assets {
            return Err(invalid(format!(
                "node has {} prices, expected {}",
                prices.len(),
                self.assets
            )));
        }
        if prices.iter().any(|p| !p.is_finite()) {
            return Err(invalid("prices must be finite"));
        }
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(invalid(format!("transition probabilities must lie in (0, 1], got {prob}")));
        }
        let id = self.nodes.len();
        let time = self.nodes[parent].time + 1;
        self.nodes.push(Node { time, prices, parent: Some(parent), children: vec![], transition_prob: prob });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    pub fn build(self) -> Result<EventTree> {
        EventTree::from_nodes(self.nodes)
    }
}

impl EventTree {
    pub fn builder(root_prices: Vec<f64>) -> Result<EventTreeBuilder> {
        if root_prices.is_empty() {
            return Err(invalid("a market needs at least one asset"));
        }
        if root_prices.iter().any(|p| !p.is_finite()) {
            return Err(invalid("prices must be finite"));
        }
        let assets = root_prices.len();
        Ok(EventTreeBuilder {
            nodes: vec![Node { time: 0, prices: root_prices, parent: None, children: vec![], transition_prob: 1.0 }],
            assets,
        })
    }

    /// Validates a node list whose first entry is the root.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("empty tree"));
        }
        let assets = nodes[0].prices.len();
        if assets == 0 {
            return Err(invalid("a market needs at least one asset"));
        }
        if nodes[0].parent.is_some() {
            return Err(invalid("node 0 must be the root"));
        }
        for (id, node) in nodes.iter().enumerate() {
            if node.prices.len() != assets {
                return Err(invalid(format!("node {id} has {} prices, expected {assets}", node.prices.len())));
            }
            if id > 0 && node.parent.is_none() {
                return Err(invalid(format!("node {id} has no parent; the root must be unique")));
            }
            if !node.children.is_empty() {
                let total = compensated_sum(node.children.iter().map(|&c| nodes[c].transition_prob));
                if (total - 1.0).abs() > 1e-12 {
                    return Err(invalid(format!("transition probabilities at node {id} sum to {total}")));
                }
                for &c in &node.children {
                    if c >= nodes.len() || nodes[c].parent != Some(id) || nodes[c].time != node.time + 1 {
                        return Err(invalid(format!("inconsistent child link {id} -> {c}")));
                    }
                }
            }
        }
        let mut paths = Vec::new();
        let mut stack = vec![vec![0usize]];
        while let Some(path) = stack.pop() {
            let last = *path.last().unwrap();
            if nodes[last].children.is_empty() {
                paths.push(path);
            } else {
                for &c in nodes[last].children.iter().rev() {
                    let mut next = path.clone();
                    next.push(c);
                    stack.push(next);
                }
            }
        }
        let horizon = paths[0].len() - 1;
        if horizon == 0 {
            return Err(invalid("the horizon must be at least one period"));
        }
        if paths.iter().any(|p| p.len() - 1 != horizon) {
            return Err(invalid("every leaf must sit at the horizon"));
        }
        let path_probs: Vec<f64> = paths
            .iter()
            .map(|p| p[1..].iter().map(|&n| nodes[n].transition_prob).product())
            .collect();
        let nonterminal: Vec<usize> = (0..nodes.len()).filter(|&n| !nodes[n].children.is_empty()).collect();
        let mut slot = vec![None; nodes.len()];
        for (k, &n) in nonterminal.iter().enumerate() {
            slot[n] = Some(k);
        }
        Ok(EventTree { nodes, assets, horizon, paths, path_probs, nonterminal, slot })
    }

    /// Multiplicative binomial tree with `periods` steps (non-recombining nodes).
    pub fn binomial(s0: f64, up: f64, down: f64, p_up: f64, periods: usize) -> Result<Self> {
        Self::iid_product(vec![s0], &[(p_up, vec![up]), (1.0 - p_up, vec![down])], periods)
    }

    /// Multiplicative trinomial tree.
    pub fn trinomial(s0: f64, factors: [f64; 3], probs: [f64; 3], periods: usize) -> Result<Self> {
        let steps: Vec<(f64, Vec<f64>)> = probs.iter().zip(factors.iter()).map(|(&p, &f)| (p, vec![f])).collect();
        Self::iid_product(vec![s0], &steps, periods)
    }

    /// Every node branches into the same steps; each step multiplies the
    /// asset prices by its factor vector.
    pub fn iid_product(s0: Vec<f64>, steps: &[(f64, Vec<f64>)], periods: usize) -> Result<Self> {
        if periods == 0 {
            return Err(invalid("the horizon must be at least one period"));
        }
        if steps.is_empty() {
            return Err(invalid("at least one step is required"));
        }
        let mut b = EventTree::builder(s0)?;
        let mut frontier = vec![0usize];
        for _ in 0..periods {
            let mut next = Vec::new();
            for &n in &frontier {
                let base = b.nodes[n].prices.clone();
                for (p, factors) in steps {
                    if factors.len() != base.len() {
                        return Err(invalid("step factor length must match the number of assets"));
                    }
                    let prices = base.iter().zip(factors).map(|(s, f)| s * f).collect();
                    next.push(b.add_child(n, *p, prices)?);
                }
            }
            frontier = next;
        }
        b.build()
    }

    /// One period: the root at `s0`, one child per `(probability, prices)`.
    pub fn one_period(s0: Vec<f64>, outcomes: &[(f64, Vec<f64>)]) -> Result<Self> {
        let mut b = EventTree::builder(s0)?;
        for (p, prices) in outcomes {
            b.add_child(0, *p, prices.clone())?;
        }
        b.build()
    }

    /// One period with constant prices and the given state probabilities.
    pub fn constant(s0: Vec<f64>, probs: &[f64]) -> Result<Self> {
        let outcomes: Vec<(f64, Vec<f64>)> = probs.iter().map(|&p| (p, s0.clone())).collect();
        Self::one_period(s0, &outcomes)
    }

    /// The same market with the children of every node listed in reverse.
    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        for n in nodes.iter_mut() {
            n.children.reverse();
        }
        EventTree::from_nodes(nodes).expect("reversal preserves validity")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn path_probs(&self) -> &[f64] {
        &self.path_probs
    }

    /// Node ids that carry a position.
    pub fn nonterminal_nodes(&self) -> &[usize] {
        &self.nonterminal
    }

    /// Number of scalar strategy coordinates: assets × non-terminal nodes.
    pub fn strategy_dim(&self) -> usize {
        self.assets * self.nonterminal.len()
    }

    pub fn strategy_slot(&self, node: usize) -> Option<usize> {
        self.slot.get(node).copied().flatten()
    }

    /// A random variable on paths with the market's path probabilities.
    pub fn path_rv(&self, values: Vec<f64>) -> Result<FiniteRV> {
        FiniteRV::new(values, self.path_probs.clone())
    }

    /// Rows of the linear map from flattened strategies to running gains:
    /// `rows[path][t − 1] · h = (H·S)_t` along `path`.
    pub fn running_gain_rows(&self) -> Vec<Vec<Vec<f64>>> {
        let dim = self.strategy_dim();
        self.paths
            .iter()
            .map(|path| {
                let mut acc = vec![0.0; dim];
                let mut rows = Vec::with_capacity(self.horizon);
                for w in path.windows(2) {
                    let k = self.slot[w[0]].expect("interior node");
                    for i in 0..self.assets {
                        acc[k * self.assets + i] += self.nodes[w[1]].prices[i] - self.nodes[w[0]].prices[i];
                    }
                    rows.push(acc.clone());
                }
                rows
            })
            .collect()
    }

    /// `G` with `(G h)_path = (H·S)_T` along `path`.
    pub fn gains_matrix(&self) -> Vec<Vec<f64>> {
        self.running_gain_rows().into_iter().map(|mut r| r.pop().unwrap()).collect()
    }

    /// Path-level equality system of martingale measures: for every
    /// non-terminal node and asset, `Σ_{paths through node} q (S_child − S_node) = 0`,
    /// plus `Σ q = 1`.
    pub fn martingale_constraints(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.path_count();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let gains = self.gains_matrix();
        for k in 0..self.strategy_dim() {
            let row: Vec<f64> = gains.iter().map(|g| g[k]).collect();
            if row.iter().any(|v| *v != 0.0) {
                rows.push(row);
                rhs.push(0.0);
            }
        }
        rows.push(vec![1.0; n]);
        rhs.push(1.0);
        (rows, rhs)
    }
}

/// Positions per non-terminal node; entry `k` belongs to `tree.nonterminal_nodes()[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    positions: Vec<Vec<f64>>,
}

impl Strategy {
    pub fn zeros(tree: &EventTree) -> Self {
        Strategy { positions: vec![vec![0.0; tree.assets()]; tree.nonterminal_nodes().len()] }
    }

    /// The same position vector at every node.
    pub fn constant(tree: &EventTree, h: &[f64]) -> Result<Self> {
        if h.len() != tree.assets() {
            return Err(invalid(format!("position has {} entries, expected {}", h.len(), tree.assets())));
        }
        Ok(Strategy { positions: vec![h.to_vec(); tree.nonterminal_nodes().len()] })
    }

    /// From the flattened layout `[node 0 assets..., node 1 assets..., ...]`.
    pub fn from_flat(tree: &EventTree, flat: &[f64]) -> Result<Self> {
        if flat.len() != tree.strategy_dim() {
            return Err(invalid(format!("flat strategy has {} entries, expected {}", flat.len(), tree.strategy_dim())));
        }
        Ok(Strategy { positions: flat.chunks(tree.assets()).map(|c| c.to_vec()).collect() })
    }

    pub fn flat(&self) -> Vec<f64> {
        self.positions.iter().flatten().copied().collect()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn at_node(&self, tree: &EventTree, node: usize) -> Option<&[f64]> {
        tree.strategy_slot(node).map(|k| self.positions[k].as_slice())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Strategy { positions: self.positions.iter().map(|p| p.iter().map(|v| v * alpha).collect()).collect() }
    }

    fn check(&self, tree: &EventTree) -> Result<()> {
        if self.positions.len() != tree.nonterminal_nodes().len()
            || self.positions.iter().any(|p| p.len() != tree.assets())
        {
            return Err(invalid("strategy shape does not match the market"));
        }
        Ok(())
    }
}

/// Per-path loss bound `W ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBound {
    values: Vec<f64>,
}

impl LossBound {
    pub fn constant(tree: &EventTree, w: f64) -> Result<Self> {
        Self::per_path(tree, vec![w; tree.path_count()])
    }

    pub fn per_path(tree: &EventTree, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.path_count() {
            return Err(invalid(format!("loss bound has {} entries, expected {}", values.len(), tree.path_count())));
        }
        if let Some(w) = values.iter().find(|&&w| !(w >= 1.0 && w.is_finite())) {
            return Err(invalid(format!("loss bounds must be finite and at least 1, got {w}")));
        }
        Ok(LossBound { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Ok(LossBound { values: self.values.iter().map(|w| w * alpha).collect() }).and_then(|lb| {
            if lb.values.iter().all(|&w| w >= 1.0) {
                Ok(lb)
            } else {
                Err(invalid("scaled loss bound drops below 1"))
            }
        })
    }

    /// Pathwise `self ≤ other`.
    pub fn dominated_by(&self, other: &LossBound) -> bool {
        self.values.len() == other.values.len() && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

/// Running gains `(H·S)_t` per path for `t = 0..=T`.
pub fn running_gains(tree: &EventTree, h: &Strategy) -> Result<Vec<Vec<f64>>> {
    h.check(tree)?;
    let flat = h.flat();
    Ok(tree
        .running_gain_rows()
        .iter()
        .map(|rows| {
            let mut g = vec![0.0];
            g.extend(rows.iter().map(|r| r.iter().zip(&flat).map(|(a, b)| a * b).sum::<f64>()));
            g
        })
        .collect())
}

/// Terminal gains `(H·S)_T` as a random variable on paths.
pub fn terminal_wealth(tree: &EventTree, h: &Strategy) -> Result<FiniteRV> {
    let g = running_gains(tree, h)?;
    tree.path_rv(g.into_iter().map(|mut v| v.pop().unwrap()).collect())
}

/// Smallest `c ≥ 0` with `(H·S)_t ≥ −cW` along every path.
pub fn admissible(tree: &EventTree, h: &Strategy, w: &LossBound) -> Result<f64> {
    let g = running_gains(tree, h)?;
    if w.values.len() != tree.path_count() {
        return Err(invalid("loss bound does not match the market"));
    }
    Ok(g.iter()
        .zip(&w.values)
        .flat_map(|(path, &wv)| path.iter().map(move |&v| (-v).max(0.0) / wv))
        .fold(0.0, f64::max))
}

/// Per-asset scalars `ε_i` with `ε_i |S^i_t − S^i_0| ≤ W` on every path,
/// chosen maximal. Always exists on finite trees.
pub fn suitability_witness(tree: &EventTree, w: &LossBound) -> Option<Vec<f64>> {
    let root = &tree.nodes[0].prices;
    let eps = (0..tree.assets)
        .map(|i| {
            let mut best = f64::INFINITY;
            for (path, &wv) in tree.paths.iter().zip(&w.values) {
                for &n in path {
                    let exc = (tree.nodes[n].prices[i] - root[i]).abs();
                    if exc > 0.0 {
                        best = best.min(wv / exc);
                    }
                }
            }
            if best.is_finite() {
                best
            } else {
                1.0
            }
        })
        .collect();
    Some(eps)
}

/// Loss bounds for one-period models whose increment has an analytic density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailLossBound {
    /// `W = 1 + |S_1|`.
    OnePlusAbsIncrement,
    /// `W ≡ c`.
    Constant(f64),
}

/// Suitability for a one-period model with unbounded increments: `1 + |S_1|`
/// admits the witness `H = 1`; no constant dominates an unbounded integral.
pub fn suitability_witness_tail(_tail: &TailFamily, w: TailLossBound) -> Option<f64> {
    match w {
        TailLossBound::OnePlusAbsIncrement => Some(1.0),
        TailLossBound::Constant(_) => None,
    }
}

/// Capped-claim values against the unconstrained optimum.
#[derive(Debug, Clone)]
pub struct SupsCheck {
    pub unconstrained: f64,
    pub capped: Vec<(f64, f64)>,
    pub monotone: bool,
    pub converged: bool,
}

/// Compares the optimal value with `E[u(x + k ∧ n)]` for the optimal gain
/// `k` and each cap `n` of the grid (sorted ascending).
pub fn equality_of_sups_check(
    tree: &EventTree,
    u: &UtilityFunction,
    x: f64,
    w: &LossBound,
    caps: &[f64],
) -> Result<SupsCheck> {
    let sol = crate::primal::primal_optimize(u, tree, x, w, None)?;
    let gains: Vec<f64> = sol.claim.values().iter().map(|v| v - x).collect();
    let mut caps = caps.to_vec();
    caps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let probs = tree.path_probs();
    let capped: Vec<(f64, f64)> = caps
        .iter()
        .map(|&n| {
            let v = compensated_sum(gains.iter().zip(probs).map(|(&k, &p)| p * u.value(x + k.min(n))));
            (n, v)
        })
        .collect();
    let tol = 1e-12 * (1.0 + sol.value.abs());
    let monotone = capped.windows(2).all(|w| w[1].1 >= w[0].1 - tol) && capped.iter().all(|c| c.1 <= sol.value + tol);
    let converged = capped.last().is_some_and(|c| (c.1 - sol.value).abs() <= 1e-9 * (1.0 + sol.value.abs()));
    Ok(SupsCheck { unconstrained: sol.value, capped, monotone, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial() -> EventTree {
        EventTree::binomial(1.0, 2.0, 0.5, 0.75, 1).unwrap()
    }

    #[test]
    fn terminal_wealth_examples() {
        let t = binomial();
        let h = Strategy::constant(&t, &[1.0]).unwrap();
        assert_eq!(terminal_wealth(&t, &h).unwrap().values(), &[1.0, -0.5]);
        assert_eq!(terminal_wealth(&t, &Strategy::zeros(&t)).unwrap().values(), &[0.0, 0.0]);
        let t2 = EventTree::binomial(1.0, 2.0, 0.5, 0.5, 2).unwrap();
        let h2 = Strategy::constant(&t2, &[1.0]).unwrap();
        let g = terminal_wealth(&t2, &h2).unwrap();
        for (path, v) in t2.paths().iter().zip(g.values()) {
            let last = t2.nodes()[*path.last().unwrap()].prices[0];
            assert!((v - (last - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn admissible_examples() {
        let t = binomial();
        let w = LossBound::constant(&t, 1.0).unwrap();
        assert_eq!(admissible(&t, &Strategy::constant(&t, &[1.0]).unwrap(), &w).unwrap(), 0.5);
        assert_eq!(admissible(&t, &Strategy::zeros(&t), &w).unwrap(), 0.0);
        assert_eq!(admissible(&t, &Strategy::constant(&t, &[-2.0]).unwrap(), &w).unwrap(), 2.0);
    }

    #[test]
    fn suitability_examples() {
        let t = binomial();
        let w = LossBound::constant(&t, 1.0).unwrap();
        assert_eq!(suitability_witness(&t, &w).unwrap(), vec![1.0]);
        let c = EventTree::constant(vec![3.0], &[0.5, 0.5]).unwrap();
        assert_eq!(suitability_witness(&c, &LossBound::constant(&c, 1.0).unwrap()).unwrap(), vec![1.0]);
        let g = TailFamily::gaussian(0.0, 1.0).unwrap();
        assert_eq!(suitability_witness_tail(&g, TailLossBound::OnePlusAbsIncrement), Some(1.0));
        assert_eq!(suitability_witness_tail(&g, TailLossBound::Constant(1.0)), None);
    }

    #[test]
    fn tree_validation() {
        let mut b = EventTree::builder(vec![1.0]).unwrap();
        b.add_child(0, 0.5, vec![2.0]).unwrap();
        assert!(b.clone().build().is_err());
        b.add_child(0, 0.5, vec![0.5]).unwrap();
        assert!(b.build().is_ok());
        assert!(EventTree::builder(vec![1.0]).unwrap().build().is_err());
        assert!(LossBound::constant(&binomial(), 0.5).is_err());
    }

    #[test]
    fn martingale_rows() {
        let t = binomial();
        let (a, b) = t.martingale_constraints();
        assert_eq!(a, vec![vec![1.0, -0.5], vec![1.0, 1.0]]);
        assert_eq!(b, vec![0.0, 1.0]);
    }
}
