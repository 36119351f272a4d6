use crate::error::{invalid, Result};
use crate::numeric::compensated_sum;

/// A finitely supported random variable: values with strictly positive
/// probabilities summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRV {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl FiniteRV {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("a finite random variable needs at least one outcome"));
        }
        if values.len() != probs.len() {
            return Err(invalid(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("outcome values must be finite, got {v}")));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
            return Err(invalid(format!("probabilities must be strictly positive, got {p}")));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(FiniteRV { values, probs })
    }

    /// Equally likely outcomes.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        FiniteRV::new(values, vec![1.0 / n.max(1) as f64; n])
    }

    /// The constant `c` on a single atom.
    pub fn constant(c: f64) -> Result<Self> {
        FiniteRV::new(vec![c], vec![1.0])
    }

    /// Same probabilities, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        FiniteRV::new(values, self.probs.clone())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.iter().map(|(v, p)| v * p))
    }

    /// `E[g(X)]` for finite-valued `g`.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(self.iter().map(|(v, p)| p * g(v)))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| g(v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(FiniteRV::new(vec![], vec![]).is_err());
        assert!(FiniteRV::new(vec![1.0], vec![0.5]).is_err());
        assert!(FiniteRV::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(FiniteRV::new(vec![1.0, 2.0], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn moments() {
        let f = FiniteRV::uniform(vec![2.0, -4.0]).unwrap();
        assert_eq!(f.mean(), -1.0);
        assert_eq!(f.sup_norm(), 4.0);
    }
}
