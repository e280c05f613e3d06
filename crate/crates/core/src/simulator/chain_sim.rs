//! Direct simulation of the parking order-cycle chain, one step per demand.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::parking::{MarkovModel, Outcome};

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSimStats {
    pub steps: u64,
    /// fraction of steps spent in each state
    pub occupancy: Vec<f64>,
    pub orders_per_arrival: f64,
    /// mean batches of each constellation per order
    pub order_quantity: Vec<f64>,
}

impl ChainSimStats {
    pub fn max_occupancy_gap(&self, pi: &[f64]) -> f64 {
        self.occupancy.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub fn simulate_chain(model: &MarkovModel, steps: u64, burn_in: u64, seed: u64) -> Result<ChainSimStats> {
    let pick = WeightedIndex::new(model.probs()).map_err(|e| Error::Simulation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = model.m();
    let space = model.space();
    let mut idx = 0usize;
    let mut visits = vec![0u64; model.len()];
    let mut orders = 0u64;
    let mut ordered = vec![0u64; m];
    for step in 0..burn_in + steps {
        let j = pick.sample(&mut rng);
        let counted = step >= burn_in;
        if counted {
            visits[idx] += 1;
        }
        match model.outcome(idx, j) {
            Outcome::Advance => {}
            outcome => {
                if counted {
                    orders += 1;
                    for (k, w) in space.state(idx).iter().enumerate() {
                        ordered[k] += *w as u64;
                    }
                    if outcome == Outcome::JointReset {
                        ordered[j] += 1;
                    }
                }
            }
        }
        idx = model.successor(idx, j);
    }
    let n = steps as f64;
    Ok(ChainSimStats {
        steps,
        occupancy: visits.iter().map(|&v| v as f64 / n).collect(),
        orders_per_arrival: orders as f64 / n,
        order_quantity: ordered
            .iter()
            .map(|&q| if orders > 0 { q as f64 / orders as f64 } else { 0.0 })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parking::{solve_chain, RegenerativeSolver, StateSpace};

    #[test]
    fn alternating_chain() {
        // a=(1), U=2: every second demand triggers an order of two batches
        let model = MarkovModel::new(StateSpace::enumerate(&[1], 2, 2, 1000).unwrap(), &[1.0]).unwrap();
        let s = simulate_chain(&model, 1_000_000, 0, 3).unwrap();
        assert!((s.orders_per_arrival - 0.5).abs() < 1e-5);
        assert_eq!(s.order_quantity, vec![2.0]);
    }

    #[test]
    fn agrees_with_the_stationary_solution() {
        let summary = solve_chain(&[1, 2], 5, 5, &[0.3, 0.7], &RegenerativeSolver, 1000).unwrap();
        let model = MarkovModel::new(StateSpace::enumerate(&[1, 2], 5, 5, 1000).unwrap(), &[0.3, 0.7]).unwrap();
        let s = simulate_chain(&model, 1_000_000, 1000, 11).unwrap();
        assert!((s.orders_per_arrival / summary.orders_per_arrival - 1.0).abs() < 0.01);
        for j in 0..2 {
            assert!((s.order_quantity[j] / summary.order_quantity[j] - 1.0).abs() < 0.01);
        }
    }
}
