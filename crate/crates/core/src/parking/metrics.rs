//! Parking-echelon inventory parameters derived from the stationary chain.

use crate::error::{Error, Result};
use crate::numerics::{gauss_laguerre, poisson_loss_table, NumericsConfig};
use crate::scenario::{ConstellationSpec, LaunchServiceSpec};

use super::chain::{stationary_distribution, MarkovModel, Outcome, StationarySolver};
use super::space::StateSpace;

/// Batches of constellation j requested from one parking orbit per time unit.
pub fn parking_demand_rate(spec: &ConstellationSpec, plane_rate: f64, n_parking: u32, batch_size: u32) -> f64 {
    spec.n_planes as f64 * plane_rate / (n_parking as f64 * batch_size as f64)
}

/// Chain quantities that depend only on (a, U, A) and the rate ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub n_states: usize,
    pub zero_pruned: bool,
    /// Σ_j π(e_j): orders per demand arrival.
    pub orders_per_arrival: f64,
    /// Probability flux through order-triggering transitions, per arrival.
    pub trigger_flux: f64,
    /// Batches of each constellation per order.
    pub order_quantity: Vec<f64>,
    /// marginals[j][ω] = P(w_j = ω)
    pub marginals: Vec<Vec<f64>>,
    pub mean_drop: Vec<f64>,
    pub residual: f64,
}

impl ChainSummary {
    pub fn order_slots(&self, batch: &[u32]) -> f64 {
        self.order_quantity.iter().zip(batch).map(|(q, &a)| q * a as f64).sum()
    }
}

pub fn summarize(model: &MarkovModel, pi: &[f64]) -> Result<ChainSummary> {
    let space = model.space();
    let m = model.m();
    let probs = model.probs();
    let mut marginals: Vec<Vec<f64>> = (0..m)
        .map(|j| vec![0.0; ((space.srop() - 1) / space.batch()[j] + 1) as usize])
        .collect();
    let mut num = vec![0.0; m];
    let mut flux = 0.0;
    for (idx, &p) in pi.iter().enumerate() {
        let w = space.state(idx);
        for j in 0..m {
            marginals[j][w[j] as usize] += p;
        }
        for jp in 0..m {
            let f = p * probs[jp];
            if f == 0.0 {
                continue;
            }
            match model.outcome(idx, jp) {
                Outcome::Advance => {}
                Outcome::JointReset => {
                    flux += f;
                    for j in 0..m {
                        num[j] += f * (w[j] + u32::from(j == jp)) as f64;
                    }
                }
                Outcome::Overflow => {
                    flux += f;
                    for j in 0..m {
                        num[j] += f * w[j] as f64;
                    }
                }
            }
        }
    }
    if !(flux > 0.0) {
        return Err(Error::NoOrders);
    }
    for mj in marginals.iter_mut() {
        while mj.len() > 1 && *mj.last().unwrap() == 0.0 {
            mj.pop();
        }
    }
    let mean_drop = marginals
        .iter()
        .map(|mj| mj.iter().enumerate().map(|(k, p)| k as f64 * p).sum())
        .collect();
    // Σ_j π(e_j) counts every order once; when some a_j ≥ U the state e_j
    // does not exist and the trigger flux is the same quantity
    let units: Option<Vec<usize>> = (0..m).map(|j| space.unit_index(j)).collect();
    let orders_per_arrival = match units {
        Some(units) => units.iter().map(|&i| pi[i]).sum(),
        None => flux,
    };
    Ok(ChainSummary {
        n_states: space.len(),
        zero_pruned: space.zero_pruned(),
        orders_per_arrival,
        trigger_flux: flux,
        order_quantity: num.into_iter().map(|x| x / flux).collect(),
        marginals,
        mean_drop,
        residual: model.residual(pi),
    })
}

/// Enumerate, build, solve and summarize in one go.
pub fn solve_chain(
    batch: &[u32],
    srop: u32,
    capacity: u32,
    rates: &[f64],
    solver: &dyn StationarySolver,
    state_cap: usize,
) -> Result<ChainSummary> {
    let space = StateSpace::enumerate(batch, srop, capacity, state_cap)?;
    let model = MarkovModel::new(space, rates)?;
    let pi = stationary_distribution(&model, solver)?;
    summarize(&model, &pi)
}

/// Parking orders per time unit for one orbit.
pub fn order_frequency_parking(summary: &ChainSummary, total_rate: f64) -> f64 {
    total_rate * summary.orders_per_arrival
}

fn shortage_at_order(order_up_to: u32, marginal: &[f64], demand_rate: f64, rule_order: usize, t_lau: f64, mu_lau: f64, tail_tol: f64) -> f64 {
    let rule = gauss_laguerre(rule_order);
    let s = order_up_to as i64;
    let w_max = marginal.len() as i64 - 1;
    let mut total = 0.0;
    for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
        if wt == 0.0 {
            continue;
        }
        let losses = poisson_loss_table(demand_rate * (t_lau + mu_lau * x), s - w_max, s, tail_tol);
        let mut inner = 0.0;
        for (omega, &p) in marginal.iter().enumerate() {
            if p != 0.0 {
                inner += p * losses[(w_max - omega as i64) as usize];
            }
        }
        total += wt * inner;
    }
    total
}

/// Expected backlog at the parking orbit when a launch arrives, batches.
/// The shifted-exponential lead time is integrated by Gauss–Laguerre with
/// order doubling.
pub fn expected_shortage_parking(
    order_up_to: u32,
    marginal: &[f64],
    demand_rate: f64,
    launcher: &LaunchServiceSpec,
    num: &NumericsConfig,
) -> f64 {
    let eval = |n: usize| {
        shortage_at_order(
            order_up_to,
            marginal,
            demand_rate,
            n,
            launcher.order_processing_time,
            launcher.mean_wait,
            num.tail_tol,
        )
    };
    let mut order = num.laguerre_order;
    let mut prev = eval(order);
    while order < num.laguerre_max_order {
        order *= 2;
        let next = eval(order);
        let converged = (next - prev).abs() <= num.rel_tol * next.abs().max(f64::MIN_POSITIVE);
        prev = next;
        if converged {
            break;
        }
    }
    prev.max(0.0)
}

pub fn mean_stock_parking(order_up_to: u32, mean_drop: f64, demand_rate: f64, launcher: &LaunchServiceSpec, es: f64) -> f64 {
    order_up_to as f64 - mean_drop - demand_rate * (launcher.order_processing_time + launcher.mean_wait) + es
}

/// 1 − ES/EQ clamped to [0, 1]; the flag reports whether clamping happened.
pub fn fill_rate_parking(es: f64, eq: f64) -> (f64, bool) {
    let raw = 1.0 - es / eq;
    let clamped = raw.clamp(0.0, 1.0);
    (clamped, clamped != raw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParkingConstellationMetrics {
    pub demand_rate: f64,
    pub order_quantity: f64,
    pub expected_shortage: f64,
    pub mean_stock: f64,
    pub fill_rate: f64,
    pub fill_rate_clamped: bool,
}

pub fn evaluate_constellation(
    j: usize,
    order_up_to: u32,
    demand_rate: f64,
    summary: &ChainSummary,
    launcher: &LaunchServiceSpec,
    num: &NumericsConfig,
) -> ParkingConstellationMetrics {
    let es = expected_shortage_parking(order_up_to, &summary.marginals[j], demand_rate, launcher, num);
    let eq = summary.order_quantity[j];
    let (fill_rate, fill_rate_clamped) = fill_rate_parking(es, eq);
    ParkingConstellationMetrics {
        demand_rate,
        order_quantity: eq,
        expected_shortage: es,
        mean_stock: mean_stock_parking(order_up_to, summary.mean_drop[j], demand_rate, launcher, es),
        fill_rate,
        fill_rate_clamped,
    }
}
