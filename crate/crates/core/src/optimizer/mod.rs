//! Design search: a constrained GA for the single-authority problem and an
//! NSGA-II front plus weighted-sum agreement for independent operators.

pub mod centralized;
pub mod decentralized;
pub mod genome;
pub mod io;

use std::cmp::Ordering;
use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use crate::cost::CostBreakdown;
use crate::error::{invalid, Result};
use crate::evaluate::{Evaluator, Feasibility};
use crate::registry::Registry;
use crate::scenario::{ConstellationPolicy, Scenario, ServiceThresholds, StrategyDesign};

pub use centralized::{optimize_centralized, CentralizedResult, GaConfig, GenerationLog, Replacement};
pub use decentralized::{optimize_decentralized_front, select_agreement, DecentralizedResult, FrontLog, FrontSolution, NsgaConfig};

/// Admissible decision values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBounds {
    pub parking_altitudes_km: Vec<f64>,
    pub n_parking: [u32; 2],
    pub srop_slots: [u32; 2],
    pub reorder_point: [u32; 2],
    pub batch_size_min: u32,
    /// `None` means ⌊A / v_j⌋ for each constellation
    #[serde(default)]
    pub batch_size_max: Option<u32>,
    pub order_up_to: [u32; 2],
}

impl DesignBounds {
    /// 500–1000 km every 50 km, up to 20 parking orbits, U in [200, 250],
    /// s in [1, 10], Q up to ⌊A/v⌋, S in [1, 40].
    pub fn reference() -> Self {
        DesignBounds {
            parking_altitudes_km: altitude_grid(500.0, 1000.0, 50.0),
            n_parking: [1, 20],
            srop_slots: [200, 250],
            reorder_point: [1, 10],
            batch_size_min: 1,
            batch_size_max: None,
            order_up_to: [1, 40],
        }
    }

    /// The bounds that admit exactly `design` (plus its y, if any).
    pub fn point(design: &StrategyDesign) -> Self {
        let pick = |f: fn(&ConstellationPolicy) -> u32| {
            let v: Vec<u32> = design.policies.iter().map(f).collect();
            [*v.iter().min().unwrap_or(&1), *v.iter().max().unwrap_or(&1)]
        };
        let q = pick(|p| p.batch_size);
        DesignBounds {
            parking_altitudes_km: vec![design.shared.parking_altitude_km],
            n_parking: [design.shared.n_parking; 2],
            srop_slots: [design.shared.srop_slots; 2],
            reorder_point: pick(|p| p.reorder_point),
            batch_size_min: q[0],
            batch_size_max: Some(q[1]),
            order_up_to: pick(|p| p.order_up_to),
        }
    }

    pub fn batch_max(&self, j: usize, sc: &Scenario) -> u32 {
        let cap = sc.launcher.capacity_slots / sc.constellations[j].shipping_size_slots;
        self.batch_size_max.unwrap_or(cap)
    }

    pub fn validate(&self, sc: &Scenario) -> Result<()> {
        if self.parking_altitudes_km.is_empty() {
            return Err(invalid("at least one admissible parking altitude is required"));
        }
        let lowest_plane = sc.constellations.iter().map(|c| c.plane_altitude_km).fold(f64::INFINITY, f64::min);
        if let Some(h) = self.parking_altitudes_km.iter().find(|h| !(**h > 0.0 && **h < lowest_plane)) {
            return Err(invalid(format!("parking altitude {h} km is not strictly below every plane ({lowest_plane} km)")));
        }
        for (name, [lo, hi]) in [
            ("n_parking", self.n_parking),
            ("srop_slots", self.srop_slots),
            ("reorder_point", self.reorder_point),
            ("order_up_to", self.order_up_to),
        ] {
            if lo == 0 || lo > hi {
                return Err(invalid(format!("bounds for {name} must satisfy 1 <= lo <= hi (got [{lo}, {hi}])")));
            }
        }
        if self.srop_slots[1] > sc.launcher.capacity_slots {
            return Err(invalid("SROP upper bound exceeds the launch capacity"));
        }
        for j in 0..sc.m() {
            let hi = self.batch_max(j, sc);
            if self.batch_size_min == 0 || self.batch_size_min > hi {
                return Err(invalid(format!("empty batch-size range for constellation {}", j + 1)));
            }
        }
        Ok(())
    }
}

pub fn altitude_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

/// Everything a search needs besides its own hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    /// Constellations, launcher and environment; its design is ignored.
    pub base: Scenario,
    pub bounds: DesignBounds,
    pub thresholds: ServiceThresholds,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.bounds.validate(&self.base)
    }

    pub fn scenario_for(&self, design: &StrategyDesign) -> Scenario {
        Scenario {
            design: design.clone(),
            ..self.base.clone()
        }
    }
}

/// Verdict and costs of one design, independent of launch-cost fractions.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub feasibility: Feasibility,
    /// Costs with the default slot-share split; `None` when not evaluable.
    pub costs: Option<CostBreakdown>,
}

impl Assessment {
    pub fn violation(&self) -> f64 {
        self.feasibility.total_violation()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct DesignKey {
    altitude_bits: u64,
    n_parking: u32,
    srop: u32,
    policies: Vec<ConstellationPolicy>,
}

impl DesignKey {
    fn of(d: &StrategyDesign) -> Self {
        DesignKey {
            altitude_bits: d.shared.parking_altitude_km.to_bits(),
            n_parking: d.shared.n_parking,
            srop: d.shared.srop_slots,
            policies: d.policies.clone(),
        }
    }
}

/// Memoized assessments. Fractions are stripped before lookup, so changing
/// y never triggers a re-evaluation.
pub struct Assessor<'a> {
    pub problem: &'a Problem,
    pub evaluator: &'a Evaluator,
    cache: DashMap<DesignKey, Arc<Assessment>>,
}

impl<'a> Assessor<'a> {
    pub fn new(problem: &'a Problem, evaluator: &'a Evaluator) -> Self {
        Assessor {
            problem,
            evaluator,
            cache: DashMap::new(),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    pub fn assess(&self, design: &StrategyDesign) -> Result<Arc<Assessment>> {
        let key = DesignKey::of(design);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let mut sc = self.problem.scenario_for(design);
        sc.design.launch_cost_fractions = None;
        let (feasibility, eval) = self.evaluator.assess(&sc, &self.problem.thresholds)?;
        let a = Arc::new(Assessment {
            feasibility,
            costs: eval.map(|e| e.costs),
        });
        self.cache.insert(key, a.clone());
        Ok(a)
    }
}

/// `a` dominates `b` when it is no worse everywhere and better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Total order on designs used for deterministic tie-breaks.
pub fn design_order(a: &StrategyDesign, b: &StrategyDesign) -> Ordering {
    let ya = a.launch_cost_fractions.as_deref().unwrap_or(&[]);
    let yb = b.launch_cost_fractions.as_deref().unwrap_or(&[]);
    a.shared
        .parking_altitude_km
        .total_cmp(&b.shared.parking_altitude_km)
        .then(a.shared.n_parking.cmp(&b.shared.n_parking))
        .then(a.shared.srop_slots.cmp(&b.shared.srop_slots))
        .then_with(|| a.policies.cmp(&b.policies))
        .then_with(|| {
            ya.iter()
                .zip(yb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(ya.len().cmp(&yb.len()))
        })
}

/// Settings shared by the registered workflows.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowSettings {
    pub ga: GaConfig,
    pub nsga: NsgaConfig,
    /// per-operator cost ceilings for the decentralized workflow
    pub reference_costs: Option<Vec<f64>>,
    /// bargaining weights to select agreements with
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub enum WorkflowOutcome {
    Centralized(CentralizedResult),
    Decentralized {
        result: DecentralizedResult,
        /// (weights, selected solution) in the order the weights were given
        selections: Vec<(Vec<f64>, FrontSolution)>,
    },
}

pub trait Workflow: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, problem: &Problem, evaluator: &Evaluator, settings: &WorkflowSettings) -> Result<WorkflowOutcome>;
}

pub struct CentralizedWorkflow;

impl Workflow for CentralizedWorkflow {
    fn name(&self) -> &'static str {
        "centralized"
    }

    fn run(&self, problem: &Problem, evaluator: &Evaluator, settings: &WorkflowSettings) -> Result<WorkflowOutcome> {
        Ok(WorkflowOutcome::Centralized(optimize_centralized(problem, evaluator, &settings.ga)?))
    }
}

pub struct DecentralizedWorkflow;

impl Workflow for DecentralizedWorkflow {
    fn name(&self) -> &'static str {
        "decentralized"
    }

    fn run(&self, problem: &Problem, evaluator: &Evaluator, settings: &WorkflowSettings) -> Result<WorkflowOutcome> {
        let refs = settings
            .reference_costs
            .as_ref()
            .ok_or_else(|| invalid("the decentralized workflow needs per-operator reference costs"))?;
        let result = optimize_decentralized_front(problem, evaluator, refs, &settings.nsga)?;
        let selections = settings
            .weights
            .iter()
            .map(|w| Ok((w.clone(), select_agreement(&result.front, w)?.clone())))
            .collect::<Result<_>>()?;
        Ok(WorkflowOutcome::Decentralized { result, selections })
    }
}

pub fn workflow_registry() -> Registry<dyn Workflow> {
    let mut r: Registry<dyn Workflow> = Registry::new("workflow", "centralized");
    r.register("centralized", || Box::new(CentralizedWorkflow));
    r.register("decentralized", || Box::new(DecentralizedWorkflow));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{reference_design, reference_scenario};

    #[test]
    fn dominance_definition() {
        assert!(dominates(&[1.0, 2.0], &[1.0, 3.0]));
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]));
        assert!(!dominates(&[0.0, 3.0], &[1.0, 2.0]));
    }

    #[test]
    fn reference_bounds_are_valid() {
        let b = DesignBounds::reference();
        assert_eq!(b.parking_altitudes_km.len(), 11);
        assert_eq!(b.parking_altitudes_km[10], 1000.0);
        let sc = reference_scenario();
        b.validate(&sc).unwrap();
        assert_eq!(b.batch_max(0, &sc), 250);
        assert_eq!(b.batch_max(1, &sc), 125);
        DesignBounds::point(&reference_design()).validate(&sc).unwrap();
        let mut high = b.clone();
        high.parking_altitudes_km.push(1150.0);
        assert!(high.validate(&sc).is_err());
    }

    #[test]
    fn assessments_ignore_fractions() {
        let p = Problem {
            base: reference_scenario(),
            bounds: DesignBounds::reference(),
            thresholds: ServiceThresholds::default(),
        };
        let ev = Evaluator::new(Default::default()).unwrap();
        let a = Assessor::new(&p, &ev);
        let mut d = reference_design();
        let first = a.assess(&d).unwrap();
        d.launch_cost_fractions = Some(vec![0.2, 0.3, 0.5]);
        let second = a.assess(&d).unwrap();
        assert!(Arc::ptr_eq(&first, &second));
        assert_eq!(a.cached(), 1);
        assert!(first.feasibility.is_feasible());
    }

    #[test]
    fn registry_names() {
        let r = workflow_registry();
        assert_eq!(r.names(), vec!["centralized", "decentralized"]);
        assert!(r.create("anarchic").is_err());
    }
}
