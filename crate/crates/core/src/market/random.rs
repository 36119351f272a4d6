use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EventTree;
use crate::error::{invalid, Result};

/// One-period market with `states` outcomes and `assets` assets that admits a
/// strictly positive martingale measure by construction.
///
/// A positive measure `q` is drawn first and the price increments are
/// centered under it, so `q` lies in the relative interior of the polytope.
pub fn random_one_period<R: Rng + ?Sized>(rng: &mut R, states: usize, assets: usize) -> Result<EventTree> {
    if states < 2 {
        return Err(invalid("a random market needs at least two states"));
    }
    if assets == 0 {
        return Err(invalid("a random market needs at least one asset"));
    }
    let weights = |rng: &mut R| -> Vec<f64> {
        let w: Vec<f64> = (0..states).map(|_| 0.2 + rng.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    };
    let p = weights(rng);
    let q = weights(rng);
    let s0: Vec<f64> = (0..assets).map(|_| 1.0 + rng.random::<f64>()).collect();
    let mut moves: Vec<Vec<f64>> = (0..states)
        .map(|_| (0..assets).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    for j in 0..assets {
        let mean: f64 = moves.iter().zip(&q).map(|(m, qi)| m[j] * qi).sum();
        for m in &mut moves {
            m[j] -= mean;
        }
    }
    let outcomes: Vec<(f64, Vec<f64>)> = p
        .iter()
        .zip(&moves)
        .map(|(&pi, m)| (pi, s0.iter().zip(m).map(|(s, d)| s + d).collect()))
        .collect();
    EventTree::one_period(s0, &outcomes)
}

/// [`random_one_period`] driven by a ChaCha stream seeded with `seed`.
pub fn seeded_one_period(seed: u64, states: usize, assets: usize) -> Result<EventTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_one_period(&mut rng, states, assets)
}
