//! End-to-end analytic evaluation of a strategy and its feasibility verdict.
//!
//! The parking chain is solved first: its fill rates feed the in-plane
//! lead-time mixture, and nothing at the parking echelon depends on s_j.

use std::sync::Arc;

use dashmap::DashMap;
use serde::Serialize;

use crate::cost::{
    holding_cost, launch_cost_annual, maneuvering_cost, manufacturing_cost, slot_share_fractions, tessac,
    CostBreakdown,
};
use crate::error::{Error, Result};
use crate::inplane::{evaluate_plane, leadtime_mixture, plane_demand_rate, InPlaneMetrics};
use crate::numerics::NumericsConfig;
use crate::orbital::{transfer_profile, TransferProfile};
use crate::parking::{
    evaluate_constellation, order_frequency_parking, solve_chain, solver_registry, ChainSummary,
    ParkingConstellationMetrics, StationarySolver, DEFAULT_STATE_CAP,
};
use crate::scenario::{Scenario, ServiceThresholds};

#[derive(Debug, Clone)]
pub struct EvaluationOptions {
    pub numerics: NumericsConfig,
    pub solver: String,
    pub state_cap: usize,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        EvaluationOptions {
            numerics: NumericsConfig::default(),
            solver: solver_registry().default_name().to_string(),
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstellationResult {
    pub transfer: TransferProfile,
    pub plane: InPlaneMetrics,
    pub parking: ParkingConstellationMetrics,
}

#[derive(Debug, Clone)]
pub struct EvaluationResult {
    pub constellations: Vec<ConstellationResult>,
    /// total parking demand per orbit, batches per time unit
    pub total_parking_rate: f64,
    /// parking orders per orbit per time unit
    pub order_frequency_parking: f64,
    pub chain: Arc<ChainSummary>,
    pub costs: CostBreakdown,
}

impl EvaluationResult {
    pub fn fill_rates_plane(&self) -> Vec<f64> {
        self.constellations.iter().map(|c| c.plane.fill_rate).collect()
    }

    pub fn fill_rates_parking(&self) -> Vec<f64> {
        self.constellations.iter().map(|c| c.parking.fill_rate).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ChainKey {
    batch: Vec<u32>,
    srop: u32,
    capacity: u32,
    rates: Vec<u64>,
}

/// Evaluates scenarios, memoizing parking-chain solutions. Safe to share
/// across threads.
pub struct Evaluator {
    options: EvaluationOptions,
    solver: Box<dyn StationarySolver>,
    chains: DashMap<ChainKey, Arc<ChainSummary>>,
}

impl Evaluator {
    pub fn new(options: EvaluationOptions) -> Result<Self> {
        let solver = solver_registry().create(&options.solver)?;
        Ok(Evaluator {
            options,
            solver,
            chains: DashMap::new(),
        })
    }

    pub fn options(&self) -> &EvaluationOptions {
        &self.options
    }

    pub fn cached_chains(&self) -> usize {
        self.chains.len()
    }

    /// Chain for batch sizes `batch` under base demand rates. The rates only
    /// enter through their ratios, so N_parking never splits the cache.
    pub fn chain(&self, batch: &[u32], srop: u32, capacity: u32, rates: &[f64]) -> Result<Arc<ChainSummary>> {
        let key = ChainKey {
            batch: batch.to_vec(),
            srop,
            capacity,
            rates: rates.iter().map(|r| r.to_bits()).collect(),
        };
        if let Some(hit) = self.chains.get(&key) {
            return Ok(hit.clone());
        }
        let summary = Arc::new(solve_chain(batch, srop, capacity, rates, &*self.solver, self.options.state_cap)?);
        self.chains.insert(key, summary.clone());
        Ok(summary)
    }

    pub fn evaluate(&self, sc: &Scenario) -> Result<EvaluationResult> {
        sc.validate()?;
        let num = &self.options.numerics;
        let shared = sc.design.shared;
        let n_t = sc.time.n_t();
        let parking_orbit = sc.parking_orbit()?;
        let m = sc.m();

        let mut transfers = Vec::with_capacity(m);
        let mut plane_rates = Vec::with_capacity(m);
        let mut base_rates = Vec::with_capacity(m);
        for (c, p) in sc.constellations.iter().zip(&sc.design.policies) {
            let plane = c.plane_orbit(sc.inclination_deg)?;
            if parking_orbit.altitude_km() >= plane.altitude_km() {
                return Err(Error::ParkingNotBelowPlane {
                    parking_km: parking_orbit.altitude_km(),
                    plane_km: plane.altitude_km(),
                });
            }
            transfers.push(transfer_profile(&parking_orbit, &plane, &c.propulsion(), &sc.consts, &sc.time)?);
            let lp = plane_demand_rate(c, n_t);
            plane_rates.push(lp);
            base_rates.push(c.n_planes as f64 * lp / p.batch_size as f64);
        }

        let batch = sc.design.batch_slots(&sc.constellations);
        let chain = self.chain(&batch, shared.srop_slots, sc.launcher.capacity_slots, &base_rates)?;
        let per_orbit: Vec<f64> = base_rates.iter().map(|r| r / shared.n_parking as f64).collect();
        let total_parking_rate: f64 = per_orbit.iter().sum();
        let n_parking_orders = order_frequency_parking(&chain, total_parking_rate);

        let mut constellations = Vec::with_capacity(m);
        for j in 0..m {
            let policy = sc.design.policies[j];
            let parking = evaluate_constellation(j, policy.order_up_to, per_orbit[j], &chain, &sc.launcher, num);
            let mixture = leadtime_mixture(
                transfers[j].transfer_time,
                transfers[j].relative_drift,
                shared.n_parking,
                parking.fill_rate,
            )?;
            let plane = evaluate_plane(policy.reorder_point, policy.batch_size, plane_rates[j], mixture, num);
            constellations.push(ConstellationResult {
                transfer: transfers[j],
                plane,
                parking,
            });
        }

        let mut holding = Vec::with_capacity(m);
        let mut maneuvering = Vec::with_capacity(m);
        let mut manufacturing = Vec::with_capacity(m);
        for (j, c) in sc.constellations.iter().enumerate() {
            let r = &constellations[j];
            let q = sc.design.policies[j].batch_size;
            holding.push(holding_cost(
                c.holding_cost_musd_per_year,
                r.plane.mean_stock,
                c.n_planes,
                r.parking.mean_stock,
                q,
                shared.n_parking,
            ));
            maneuvering.push(maneuvering_cost(
                r.transfer.fuel_kg,
                c.fuel_cost_musd_per_kg,
                r.plane.order_frequency,
                c.n_planes,
                q,
                n_t,
            ));
            manufacturing.push(manufacturing_cost(c));
        }
        let launch_total = launch_cost_annual(sc.launcher.cost_musd, n_parking_orders, shared.n_parking, n_t);
        let fractions = match &sc.design.launch_cost_fractions {
            Some(y) => y.clone(),
            None => slot_share_fractions(&chain.order_quantity, &batch),
        };
        let costs = tessac(holding, maneuvering, manufacturing, launch_total, fractions)?;

        Ok(EvaluationResult {
            constellations,
            total_parking_rate,
            order_frequency_parking: n_parking_orders,
            chain,
            costs,
        })
    }

    /// Structural conditions always; service conditions when the model can
    /// be evaluated.
    pub fn check_feasibility(&self, sc: &Scenario, thresholds: &ServiceThresholds) -> Result<Feasibility> {
        Ok(self.assess(sc, thresholds)?.0)
    }

    /// Feasibility verdict together with the evaluation it was based on.
    /// Designs whose chain cannot be built come back without an evaluation.
    pub fn assess(&self, sc: &Scenario, thresholds: &ServiceThresholds) -> Result<(Feasibility, Option<EvaluationResult>)> {
        sc.validate()?;
        let mut f = Feasibility::structural(sc);
        let structurally_solvable = !f.violations.iter().any(|v| v.condition == Condition::BatchBelowSrop);
        let eval = if structurally_solvable {
            match self.evaluate(sc) {
                Ok(e) => Some(e),
                Err(Error::StateSpaceTooLarge { .. }) | Err(Error::TargetOutsideStateSpace { .. }) | Err(Error::NoOrders) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        match &eval {
            Some(e) => f.add_service(e, thresholds),
            None => f.service_evaluated = false,
        }
        Ok((f, eval))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Condition {
    /// s_j ≤ Q_j
    ReorderWithinBatch = 1,
    /// Σ S_j·v_j·Q_j ≥ U
    CycleCoverage = 2,
    /// v_j·Q_j + 1 ≤ U
    BatchBelowSrop = 3,
    /// ρ_parking,j ≥ threshold
    ParkingFillRate = 4,
    /// ρ_plane,j ≥ threshold
    PlaneFillRate = 5,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::ReorderWithinBatch,
        Condition::CycleCoverage,
        Condition::BatchBelowSrop,
        Condition::ParkingFillRate,
        Condition::PlaneFillRate,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            Condition::ReorderWithinBatch => "reorder point within batch",
            Condition::CycleCoverage => "order-up-to levels cover the SROP",
            Condition::BatchBelowSrop => "batch fits below the SROP",
            Condition::ParkingFillRate => "parking fill rate",
            Condition::PlaneFillRate => "in-plane fill rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub constellation: Option<usize>,
    /// Normalized shortfall, > 0.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub violations: Vec<Violation>,
    /// False when conditions 4–5 could not be computed.
    pub service_evaluated: bool,
}

impl Feasibility {
    /// Conditions 1–3 only; needs no model evaluation.
    pub fn structural(sc: &Scenario) -> Feasibility {
        let mut violations = Vec::new();
        let u = sc.design.shared.srop_slots as f64;
        let mut coverage = 0.0;
        for (j, (c, p)) in sc.constellations.iter().zip(&sc.design.policies).enumerate() {
            if p.reorder_point > p.batch_size {
                violations.push(Violation {
                    condition: Condition::ReorderWithinBatch,
                    constellation: Some(j),
                    amount: (p.reorder_point - p.batch_size) as f64 / p.batch_size as f64,
                });
            }
            let a = (c.shipping_size_slots * p.batch_size) as f64;
            coverage += p.order_up_to as f64 * a;
            if a + 1.0 > u {
                violations.push(Violation {
                    condition: Condition::BatchBelowSrop,
                    constellation: Some(j),
                    amount: (a + 1.0 - u) / u,
                });
            }
        }
        if coverage < u {
            violations.push(Violation {
                condition: Condition::CycleCoverage,
                constellation: None,
                amount: (u - coverage) / u,
            });
        }
        Feasibility {
            violations,
            service_evaluated: true,
        }
    }

    fn add_service(&mut self, e: &EvaluationResult, t: &ServiceThresholds) {
        for (j, c) in e.constellations.iter().enumerate() {
            if c.parking.fill_rate < t.rho_parking {
                self.violations.push(Violation {
                    condition: Condition::ParkingFillRate,
                    constellation: Some(j),
                    amount: t.rho_parking - c.parking.fill_rate,
                });
            }
            if c.plane.fill_rate < t.rho_plane {
                self.violations.push(Violation {
                    condition: Condition::PlaneFillRate,
                    constellation: Some(j),
                    amount: t.rho_plane - c.plane.fill_rate,
                });
            }
        }
        self.violations.sort_by(|a, b| (a.condition, a.constellation).cmp(&(b.condition, b.constellation)));
    }

    pub fn is_feasible(&self) -> bool {
        self.service_evaluated && self.violations.is_empty()
    }

    pub fn violates(&self, c: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == c)
            || (!self.service_evaluated && matches!(c, Condition::ParkingFillRate | Condition::PlaneFillRate))
    }

    /// Per-condition pass flags, conditions 1..=5.
    pub fn flags(&self) -> [bool; 5] {
        Condition::ALL.map(|c| !self.violates(c))
    }

    /// Graded total violation; unevaluable service conditions count 1 each.
    pub fn total_violation(&self) -> f64 {
        let unevaluated = if self.service_evaluated { 0.0 } else { 2.0 };
        self.violations.iter().map(|v| v.amount).sum::<f64>() + unevaluated
    }

    pub fn describe(&self) -> String {
        if self.is_feasible() {
            return "feasible".into();
        }
        let mut parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v.constellation {
                Some(j) => format!("condition {} ({}) violated by constellation {}", v.condition.number(), v.condition.label(), j + 1),
                None => format!("condition {} ({}) violated", v.condition.number(), v.condition.label()),
            })
            .collect();
        if !self.service_evaluated {
            parts.push("conditions 4-5 not evaluable: the parking chain cannot be built".into());
        }
        parts.join("; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::reference_scenario;

    #[test]
    fn structural_flags() {
        let ev = Evaluator::new(EvaluationOptions::default()).unwrap();
        let t = ServiceThresholds::default();
        let mut sc = reference_scenario();
        sc.design.policies[0].reorder_point = sc.design.policies[0].batch_size + 1;
        let f = ev.check_feasibility(&sc, &t).unwrap();
        assert!(!f.flags()[0]);
        assert!(!f.is_feasible());

        let mut sc = reference_scenario();
        // coverage Σ S·a = U − 1
        sc.design.shared.srop_slots = 40;
        sc.design.policies = vec![
            crate::scenario::ConstellationPolicy { reorder_point: 1, batch_size: 1, order_up_to: 1 },
            crate::scenario::ConstellationPolicy { reorder_point: 1, batch_size: 1, order_up_to: 1 },
            crate::scenario::ConstellationPolicy { reorder_point: 1, batch_size: 1, order_up_to: 17 },
        ];
        let f = ev.check_feasibility(&sc, &t).unwrap();
        assert!(!f.flags()[1]);
        assert!(f.flags()[2]);
    }

    #[test]
    fn oversized_batch_skips_service_conditions() {
        let ev = Evaluator::new(EvaluationOptions::default()).unwrap();
        let mut sc = reference_scenario();
        sc.design.shared.srop_slots = 20;
        let f = ev.check_feasibility(&sc, &ServiceThresholds::default()).unwrap();
        assert!(!f.flags()[2]);
        assert!(!f.service_evaluated);
        assert!(f.total_violation() >= 2.0);
    }

    #[test]
    fn chain_cache_ignores_parking_count() {
        let ev = Evaluator::new(EvaluationOptions::default()).unwrap();
        let mut sc = reference_scenario();
        sc.design.shared.srop_slots = 60;
        sc.design.policies[2].order_up_to = 40;
        let a = ev.evaluate(&sc).unwrap();
        sc.design.shared.n_parking = 4;
        let b = ev.evaluate(&sc).unwrap();
        assert_eq!(ev.cached_chains(), 1);
        assert!((a.order_frequency_parking - 4.0 * b.order_frequency_parking).abs() < 1e-15);
    }
}
