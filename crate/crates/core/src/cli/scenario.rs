//! Scenario documents: JSON with `market`, `utility` and `solver` sections.

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dual::DualOptions;
use crate::market::{seeded_one_period, EventTree, LossBound};
use crate::singular::{CompoundPoissonSpec, DiscreteZSpec, TruncationScenario};
use crate::utility::UtilityFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub market: MarketSpec,
    pub utility: UtilitySpec,
    /// Initial endowment.
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub loss_bound: LossBoundSpec,
    /// Optional cap `(H·S)_t ≥ −c_max·W` for a constrained primal run.
    #[serde(default)]
    pub c_max: Option<f64>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarketSpec {
    Binomial {
        s0: f64,
        up: f64,
        down: f64,
        p_up: f64,
        #[serde(default = "one")]
        periods: usize,
    },
    Trinomial {
        s0: f64,
        factors: [f64; 3],
        probs: [f64; 3],
        #[serde(default = "one")]
        periods: usize,
    },
    /// Every node branches into the same multiplicative steps.
    IidProduct {
        s0: Vec<f64>,
        steps: Vec<StepSpec>,
        #[serde(default = "one")]
        periods: usize,
    },
    OnePeriod {
        s0: Vec<f64>,
        outcomes: Vec<OutcomeSpec>,
    },
    Constant {
        s0: Vec<f64>,
        probs: Vec<f64>,
    },
    /// Explicit tree: node `k + 1` is `nodes[k]`; the root is node 0.
    Tree {
        root_prices: Vec<f64>,
        nodes: Vec<NodeSpec>,
    },
    /// Arbitrage-free one-period market drawn from the scenario seed.
    Random {
        states: usize,
        assets: usize,
    },
    /// Finite truncation of a singular example at a given level.
    Truncation {
        scenario: TruncationSpec,
        level: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub prob: f64,
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSpec {
    pub prob: f64,
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub parent: usize,
    pub prob: f64,
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    Exponential {
        #[serde(default = "one_f")]
        gamma: f64,
    },
    LogShifted {
        a: f64,
    },
    PowerShifted {
        a: f64,
        exponent: f64,
    },
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LossBoundSpec {
    Constant(f64),
    PerPath(Vec<f64>),
}

impl Default for LossBoundSpec {
    fn default() -> Self {
        LossBoundSpec::Constant(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { tolerance: default_tolerance(), max_iterations: default_iterations() }
    }
}

impl SolverSpec {
    pub fn dual_options(&self) -> DualOptions {
        DualOptions { tolerance: self.tolerance, max_iterations: self.max_iterations, start: None }
    }
}

/// Truncation-study document: a scenario and the levels to tabulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub scenario: TruncationSpec,
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationSpec {
    /// `P(Z = z_n)`: `p1` at `n = 1` and either explicit `tail` masses for
    /// `n = 2, 3, …` or a power law `∝ n^{−tail_exponent}` up to `max_atom`.
    Ex36 {
        p1: f64,
        #[serde(default)]
        tail: Option<Vec<f64>>,
        #[serde(default)]
        tail_exponent: Option<f64>,
        #[serde(default)]
        max_atom: Option<usize>,
        #[serde(default = "default_y_atoms")]
        y_atoms: usize,
    },
    Ex35 {
        #[serde(default = "one_f")]
        rate: f64,
        #[serde(default = "one_f")]
        horizon: f64,
        nu: f64,
        #[serde(default = "default_max_jumps")]
        max_jumps: usize,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
    Ex38 {
        exponent: f64,
    },
    Binomial {
        s0: f64,
        up: f64,
        down: f64,
        p_up: f64,
    },
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_iterations() -> usize {
    10_000
}
fn default_y_atoms() -> usize {
    200
}
fn default_max_jumps() -> usize {
    10
}
fn default_half_width() -> f64 {
    20.0
}

fn from_json<T: serde::de::DeserializeOwned>(document: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Parse { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })
}

/// Parses and validates a scenario document.
pub fn parse_scenario(document: &str) -> Result<ScenarioSpec, CliError> {
    let spec: ScenarioSpec = from_json(document)?;
    let problems = spec.violations();
    if problems.is_empty() {
        Ok(spec)
    } else {
        Err(CliError::Validation(problems))
    }
}

pub fn parse_study(document: &str) -> Result<StudySpec, CliError> {
    let spec: StudySpec = from_json(document)?;
    let mut problems = Vec::new();
    if spec.levels.is_empty() {
        problems.push("levels: at least one level is required".to_string());
    }
    if spec.levels.contains(&0) {
        problems.push("levels: levels must be positive".to_string());
    }
    if let Err(e) = spec.scenario.build() {
        problems.push(format!("scenario: {e}"));
    }
    if problems.is_empty() {
        Ok(spec)
    } else {
        Err(CliError::Validation(problems))
    }
}

impl UtilitySpec {
    pub fn build(&self) -> crate::Result<UtilityFunction> {
        match *self {
            UtilitySpec::Exponential { gamma } => UtilityFunction::exponential(gamma),
            UtilitySpec::LogShifted { a } => UtilityFunction::log_shifted(a),
            UtilitySpec::PowerShifted { a, exponent } => UtilityFunction::power_shifted(a, exponent),
            UtilitySpec::Linear => Ok(UtilityFunction::linear()),
        }
    }
}

impl TruncationSpec {
    pub fn build(&self) -> crate::Result<TruncationScenario> {
        Ok(match self {
            TruncationSpec::Ex36 { p1, tail, tail_exponent, max_atom, y_atoms } => {
                let tail = match (tail, tail_exponent) {
                    (Some(t), None) => t.clone(),
                    (None, Some(e)) => {
                        let top = max_atom.unwrap_or(200).max(2);
                        let raw: Vec<f64> = (2..=top).map(|n| (n as f64).powf(-e)).collect();
                        let s: f64 = raw.iter().sum();
                        raw.iter().map(|v| (1.0 - p1) * v / s).collect()
                    }
                    _ => return Err(crate::error::invalid("give exactly one of tail and tail_exponent")),
                };
                TruncationScenario::DiscreteZ { spec: DiscreteZSpec::new(*p1, tail)?, y_atoms: *y_atoms }
            }
            TruncationSpec::Ex35 { rate, horizon, nu, max_jumps, half_width } => TruncationScenario::CompoundPoisson {
                spec: CompoundPoissonSpec::new(*rate, *horizon, *nu)?,
                max_jumps: *max_jumps,
                half_width: *half_width,
            },
            TruncationSpec::Ex38 { exponent } => TruncationScenario::Matrix { exponent: *exponent },
            TruncationSpec::Binomial { s0, up, down, p_up } => {
                TruncationScenario::Binomial { s0: *s0, up: *up, down: *down, p_up: *p_up }
            }
        })
    }
}

impl MarketSpec {
    pub fn build(&self, seed: u64) -> crate::Result<EventTree> {
        match self {
            MarketSpec::Binomial { s0, up, down, p_up, periods } => EventTree::binomial(*s0, *up, *down, *p_up, *periods),
            MarketSpec::Trinomial { s0, factors, probs, periods } => EventTree::trinomial(*s0, *factors, *probs, *periods),
            MarketSpec::IidProduct { s0, steps, periods } => {
                let steps: Vec<(f64, Vec<f64>)> = steps.iter().map(|s| (s.prob, s.factors.clone())).collect();
                EventTree::iid_product(s0.clone(), &steps, *periods)
            }
            MarketSpec::OnePeriod { s0, outcomes } => {
                let outcomes: Vec<(f64, Vec<f64>)> = outcomes.iter().map(|o| (o.prob, o.prices.clone())).collect();
                EventTree::one_period(s0.clone(), &outcomes)
            }
            MarketSpec::Constant { s0, probs } => EventTree::constant(s0.clone(), probs),
            MarketSpec::Tree { root_prices, nodes } => {
                let mut b = EventTree::builder(root_prices.clone())?;
                for (k, n) in nodes.iter().enumerate() {
                    if n.parent > k {
                        return Err(crate::error::invalid(format!(
                            "node {} refers to parent {} which is not defined before it",
                            k + 1,
                            n.parent
                        )));
                    }
                    b.add_child(n.parent, n.prob, n.prices.clone())?;
                }
                b.build()
            }
            MarketSpec::Random { states, assets } => seeded_one_period(seed, *states, *assets),
            MarketSpec::Truncation { scenario, level } => scenario.build()?.market(*level),
        }
    }
}

impl ScenarioSpec {
    /// Every violated invariant, each prefixed by the field it concerns.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let utility = match self.utility.build() {
            Ok(u) => Some(u),
            Err(e) => {
                out.push(format!("utility: {e}"));
                None
            }
        };
        if !self.x.is_finite() {
            out.push(format!("x: endowment must be finite, got {}", self.x));
        } else if let Some(u) = &utility {
            let a = u.endpoint();
            if a.is_finite() && self.x <= a {
                out.push(format!("x: endowment {} must exceed the utility's domain endpoint {a}", self.x));
            }
        }
        let tree = match self.market.build(self.seed) {
            Ok(t) => Some(t),
            Err(e) => {
                out.push(format!("market: {e}"));
                None
            }
        };
        if let Some(tree) = &tree {
            if let Err(e) = self.loss_bound.build(tree) {
                out.push(format!("loss_bound: {e}"));
            }
        }
        if let Some(c) = self.c_max {
            if !(c > 0.0 && c.is_finite()) {
                out.push(format!("c_max: must be positive and finite, got {c}"));
            }
        }
        if !(self.solver.tolerance > 0.0 && self.solver.tolerance.is_finite()) {
            out.push(format!("solver.tolerance: must be positive, got {}", self.solver.tolerance));
        }
        if self.solver.max_iterations == 0 {
            out.push("solver.max_iterations: must be positive".to_string());
        }
        out
    }
}

impl LossBoundSpec {
    pub fn build(&self, tree: &EventTree) -> crate::Result<LossBound> {
        match self {
            LossBoundSpec::Constant(w) => LossBound::constant(tree, *w),
            LossBoundSpec::PerPath(v) => LossBound::per_path(tree, v.clone()),
        }
    }
}
