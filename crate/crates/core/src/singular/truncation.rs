//! Finite approximations of the unbounded models, solved level by level.

use std::f64::consts::E;

use rayon::prelude::*;

use super::{compound_poisson_optimum, discrete_z_optimum, matrix_series, CompoundPoissonSpec, DiscreteZSpec, MatrixModelSpec};
use crate::dual::dual_optimize;
use crate::error::{invalid, Result};
use crate::market::{EventTree, LossBound};
use crate::numeric::compensated_sum;
use crate::primal::primal_optimize;
use crate::utility::UtilityFunction;

/// Atoms below this probability are dropped before renormalizing.
const MIN_ATOM: f64 = 1e-14;

/// A family of finite markets indexed by a refinement level.
#[derive(Debug, Clone, PartialEq)]
pub enum TruncationScenario {
    /// `Z` cut at `n ≤ level` and renormalized, `Y` on `y_atoms` equal-mass cells.
    DiscreteZ { spec: DiscreteZSpec, y_atoms: usize },
    /// Jumps on a lattice with `level` cells per unit, at most `max_jumps`
    /// jumps and `|Y − 1| ≤ half_width`.
    CompoundPoisson { spec: CompoundPoissonSpec, max_jumps: usize, half_width: f64 },
    /// Matrix model on rows and columns `1..=level`.
    Matrix { exponent: f64 },
    /// The same binomial market at every level.
    Binomial { s0: f64, up: f64, down: f64, p_up: f64 },
}

impl TruncationScenario {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DiscreteZ { .. } => "ex36",
            Self::CompoundPoisson { .. } => "ex35",
            Self::Matrix { .. } => "ex38",
            Self::Binomial { .. } => "binomial",
        }
    }

    /// One-period market at the given level.
    pub fn market(&self, level: usize) -> Result<EventTree> {
        if level == 0 {
            return Err(invalid("levels must be positive"));
        }
        let atoms = match self {
            Self::DiscreteZ { spec, y_atoms } => discrete_z_atoms(&spec.truncated(level)?, *y_atoms)?,
            Self::CompoundPoisson { spec, max_jumps, half_width } => compound_poisson_atoms(spec, level, *max_jumps, *half_width)?,
            Self::Matrix { exponent } => matrix_atoms(*exponent, level)?,
            Self::Binomial { s0, up, down, p_up } => return EventTree::binomial(*s0, *up, *down, *p_up, 1),
        };
        let total = compensated_sum(atoms.iter().map(|a| a.0));
        let outcomes: Vec<(f64, Vec<f64>)> = atoms.into_iter().map(|(p, s)| (p / total, vec![s])).collect();
        EventTree::one_period(vec![0.0], &outcomes)
    }

    /// Value and `E_{Q_r*}[S₁]` of the untruncated model, where known.
    fn analytic(&self) -> Result<Option<(f64, f64)>> {
        Ok(match self {
            Self::DiscreteZ { spec, .. } => {
                let opt = discrete_z_optimum(spec)?;
                Some((opt.value, opt.singular_mass))
            }
            Self::CompoundPoisson { spec, .. } => Some((compound_poisson_optimum(spec)?.value, 0.0)),
            Self::Matrix { exponent } => {
                let spec = MatrixModelSpec::new(*exponent, 200)?;
                let at_five = matrix_series(&spec, 5.0);
                (at_five.gprime.to_f64() > 0.0).then(|| {
                    let g = at_five.g.to_f64();
                    let gp = at_five.gprime.to_f64();
                    // E[S₁ e^{−5S₁}]/E[e^{−5S₁}] with g = −E[e^{−5S₁}].
                    (g, gp / -g)
                })
            }
            Self::Binomial { .. } => None,
        })
    }
}

fn discrete_z_atoms(spec: &DiscreteZSpec, y_atoms: usize) -> Result<Vec<(f64, f64)>> {
    if y_atoms < 2 {
        return Err(invalid("at least two Y cells are needed"));
    }
    let m = y_atoms as f64;
    let cells: Vec<f64> = (0..y_atoms)
        .map(|k| {
            let (sa, sb) = (1.0 - k as f64 / m, 1.0 - (k + 1) as f64 / m);
            let a = -sa.ln();
            if k + 1 == y_atoms {
                a + 1.0
            } else {
                let b = -sb.ln();
                (a * sa + sa - b * sb - sb) / (sa - sb)
            }
        })
        .collect();
    Ok(spec.atoms().flat_map(|(_, z, p)| cells.iter().map(move |&y| (p / m, z * y))).collect())
}

fn compound_poisson_atoms(spec: &CompoundPoissonSpec, level: usize, max_jumps: usize, half_width: f64) -> Result<Vec<(f64, f64)>> {
    if !(half_width > 0.0) || max_jumps == 0 {
        return Err(invalid("lattice needs a positive half width and at least one jump"));
    }
    let delta = 1.0 / level as f64;
    let k = (half_width / delta).ceil() as i64;
    let mut jump: Vec<f64> =
        (-k..=k).map(|i| spec.jump_cdf(1.0 + (i as f64 + 0.5) * delta) - spec.jump_cdf(1.0 + (i as f64 - 0.5) * delta)).collect();
    let jt = compensated_sum(jump.iter().copied());
    jump.iter_mut().for_each(|p| *p /= jt);
    // Lattice index m ↦ S = mδ; one jump moves by level + i.
    let step = level as i64;
    let mean = spec.rate * spec.horizon;
    let mut weights: Vec<f64> = Vec::with_capacity(max_jumps + 1);
    let mut w = (-mean).exp();
    for j in 0..=max_jumps {
        weights.push(w);
        w *= mean / (j + 1) as f64;
    }
    let width = (max_jumps as i64) * (step + k) + 1;
    let offset = (max_jumps as i64) * k;
    let size = (width + offset) as usize;
    let mut law = vec![0.0; size];
    let mut current = vec![0.0; size];
    current[offset as usize] = 1.0;
    for (j, &wj) in weights.iter().enumerate() {
        for (acc, c) in law.iter_mut().zip(&current) {
            *acc += wj * c;
        }
        if j == max_jumps {
            break;
        }
        let mut next = vec![0.0; size];
        for (m, &c) in current.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (i, &pj) in jump.iter().enumerate() {
                let target = m as i64 + step + i as i64 - k;
                next[target as usize] += c * pj;
            }
        }
        current = next;
    }
    Ok(law
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > MIN_ATOM)
        .map(|(m, p)| (p, (m as i64 - offset) as f64 * delta))
        .collect())
}

fn matrix_atoms(exponent: f64, level: usize) -> Result<Vec<(f64, f64)>> {
    let spec = MatrixModelSpec::new(exponent, level.max(10))?;
    let rows: Vec<f64> =
        (1..=level).map(|i| if i == 1 { spec.first_row_mass() } else { spec.ln_row_mass(i).exp() }).collect();
    let cols: Vec<f64> = (1..=level).map(|j| (E - 1.0) * (-(j as f64)).exp()).collect();
    let mut atoms = Vec::with_capacity(level * level);
    for (i, &pr) in rows.iter().enumerate() {
        for (j, &pc) in cols.iter().enumerate() {
            let w = (j + 1) as f64;
            let s = if i == 0 {
                w
            } else if j <= i {
                -w
            } else {
                0.0
            };
            if pr * pc > MIN_ATOM {
                atoms.push((pr * pc, s));
            }
        }
    }
    Ok(atoms)
}

/// One refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub level: usize,
    pub paths: usize,
    pub value_primal: f64,
    pub value_dual: f64,
    pub lambda_star: f64,
    pub position: f64,
    /// `E_{q*}[S₁]` under the finite model's dual optimum.
    pub dual_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationTable {
    pub scenario: &'static str,
    pub rows: Vec<TruncationRow>,
    pub analytic_value: Option<f64>,
    /// `E_{Q_r*}[S₁]` of the untruncated optimum.
    pub analytic_mean: Option<f64>,
    /// Values within 1e−9 of a nondecreasing sequence.
    pub nondecreasing: bool,
    pub nonincreasing: bool,
    /// Distance to the analytic value strictly decreases.
    pub error_shrinks: Option<bool>,
}

impl TruncationTable {
    pub fn errors(&self) -> Option<Vec<f64>> {
        self.analytic_value.map(|a| self.rows.iter().map(|r| (r.value_dual - a).abs()).collect())
    }
}

/// Solves the primal and dual problems for exponential utility at `x = 0`
/// on each level.
pub fn truncation_study(scenario: &TruncationScenario, levels: &[usize]) -> Result<TruncationTable> {
    if levels.is_empty() {
        return Err(invalid("at least one level is required"));
    }
    let u = UtilityFunction::exponential(1.0)?;
    let rows = levels
        .par_iter()
        .map(|&level| -> Result<TruncationRow> {
            let tree = scenario.market(level)?;
            let w = LossBound::constant(&tree, 1.0)?;
            let dual = dual_optimize(&u, &tree, 0.0, &w)?;
            let primal = primal_optimize(&u, &tree, 0.0, &w, None)?;
            let gains = tree.gains_matrix();
            let dual_mean = compensated_sum(dual.q.iter().zip(&gains).map(|(q, g)| q * g[0]));
            Ok(TruncationRow {
                level,
                paths: tree.path_count(),
                value_primal: primal.value,
                value_dual: dual.value,
                lambda_star: dual.lambda,
                position: primal.strategy.flat()[0],
                dual_mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let analytic = scenario.analytic()?;
    let values: Vec<f64> = rows.iter().map(|r| r.value_dual).collect();
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let error_shrinks = analytic.map(|(a, _)| values.windows(2).all(|w| (w[1] - a).abs() < (w[0] - a).abs()));
    Ok(TruncationTable {
        scenario: scenario.name(),
        rows,
        analytic_value: analytic.map(|a| a.0),
        analytic_mean: analytic.map(|a| a.1),
        nondecreasing,
        nonincreasing,
        error_shrinks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_is_constant() {
        let s = TruncationScenario::Binomial { s0: 1.0, up: 2.0, down: 0.5, p_up: 0.75 };
        let t = truncation_study(&s, &[1, 2, 5]).unwrap();
        assert!(t.nondecreasing && t.nonincreasing);
        assert!((t.rows[0].value_dual + 0.6814202223120523).abs() < 1e-12);
    }

    #[test]
    fn y_cells_keep_the_mean() {
        let spec = DiscreteZSpec::new(1.0, vec![]).unwrap();
        let atoms = discrete_z_atoms(&spec, 200).unwrap();
        let mean = compensated_sum(atoms.iter().map(|(p, s)| p * s));
        assert!((mean - 1.0).abs() < 1e-12);
    }
}
