//! Monte Carlo counterpart of the analytic model, plus the validation harness.

pub mod alignment;
pub mod chain_sim;
pub mod engine;
pub mod errors;
pub mod generate;
pub mod validation;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{holding_cost, launch_cost_annual, maneuvering_cost, tessac};
use crate::error::{invalid, Error, Result};
use crate::evaluate::Feasibility;
use crate::orbital::{transfer_profile, TransferProfile};
use crate::scenario::Scenario;

pub use alignment::{alignment_registry, AlignmentModel, GeometricAlignment, Geometry, SampledAlignment};
pub use chain_sim::{simulate_chain, ChainSimStats};
pub use engine::{run_replication, ConstellationCounts, EngineInput, PlaneLedger, ReplicationOutput};
pub use errors::{error_metrics, write_error_csv, ErrorRow, ErrorTable};
pub use generate::{generate_instances, GenerationReport, SamplingRanges};
pub use validation::{envelope_limit, run_validation, write_envelope_csv, ValidationReport, ValidationSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub horizon_years: f64,
    pub replications: usize,
    pub seed: u64,
    pub warmup_fraction: f64,
    pub warmup_min_years: f64,
    /// name in [`alignment_registry`]
    pub alignment: String,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon_years: 20.0,
            replications: 100,
            seed: 1,
            warmup_fraction: 0.2,
            warmup_min_years: 2.0,
            alignment: "geometry".into(),
        }
    }
}

impl SimulationConfig {
    /// Warm-up in years. Never more than half the horizon, so short runs
    /// still observe something.
    pub fn warmup_years(&self) -> f64 {
        (self.horizon_years * self.warmup_fraction)
            .max(self.warmup_min_years)
            .min(0.5 * self.horizon_years)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_years >= 1.0) || !self.horizon_years.is_finite() {
            return Err(invalid("horizon must be at least 1 year"));
        }
        if self.replications == 0 {
            return Err(invalid("at least one replication is required"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) || !(self.warmup_min_years >= 0.0) {
            return Err(invalid("warm-up fraction must lie in [0, 1) and the minimum must be >= 0"));
        }
        Ok(())
    }
}

/// Metrics of one replication. Fill rates are `None` when nothing was
/// demanded after warm-up.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalConstellation {
    pub lambda_parking: f64,
    pub mean_stock_plane: f64,
    pub mean_stock_parking: f64,
    pub fill_rate_plane: Option<f64>,
    pub fill_rate_parking: Option<f64>,
    pub order_frequency_plane: f64,
    pub tessac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalReplication {
    pub constellations: Vec<EmpiricalConstellation>,
    pub order_frequency_parking: f64,
    pub launch_cost: f64,
    pub tessac_total: f64,
}

/// Mean and standard error over the replications that produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: impl IntoIterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = xs.into_iter().flatten().collect();
        let n = v.len();
        if n == 0 {
            return Self { mean: None, std_err: None, samples: 0 };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std_err = (n > 1).then(|| {
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Self { mean: Some(mean), std_err, samples: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstellationEstimates {
    pub lambda_parking: Estimate,
    pub mean_stock_plane: Estimate,
    pub mean_stock_parking: Estimate,
    pub fill_rate_plane: Estimate,
    pub fill_rate_parking: Estimate,
    pub order_frequency_plane: Estimate,
    pub tessac: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub replications: usize,
    pub horizon_years: f64,
    pub warmup_years: f64,
    pub alignment: String,
    pub constellations: Vec<ConstellationEstimates>,
    pub order_frequency_parking: Estimate,
    pub launch_cost: Estimate,
    pub tessac_total: Estimate,
    pub events: u64,
    pub max_launch_slots: u32,
    #[serde(skip)]
    pub per_replication: Vec<EmpiricalReplication>,
}

/// Turns raw counts into per-time-unit metrics and an empirical cost.
pub fn empirical_metrics(sc: &Scenario, transfers: &[TransferProfile], out: &ReplicationOutput) -> Result<EmpiricalReplication> {
    let n_t = sc.time.n_t();
    let n_parking = sc.design.shared.n_parking;
    let t = out.observed;
    let np = n_parking as f64;
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let slots = sc.design.batch_slots(&sc.constellations);

    let mut constellations = Vec::with_capacity(sc.m());
    let (mut hold, mut man, mut manuf) = (Vec::new(), Vec::new(), Vec::new());
    for (j, (c, cnt)) in sc.constellations.iter().zip(&out.per_constellation).enumerate() {
        let pol = sc.design.policies[j];
        let planes = c.n_planes as f64;
        let e = EmpiricalConstellation {
            lambda_parking: cnt.withdrawals as f64 / (np * t),
            mean_stock_plane: cnt.plane_stock_area / (planes * t),
            mean_stock_parking: cnt.parking_stock_area / (np * t),
            fill_rate_plane: ratio(cnt.immediate_fills, cnt.failures),
            fill_rate_parking: ratio(cnt.first_alignment_hits, cnt.requests),
            order_frequency_plane: cnt.plane_orders as f64 / (planes * t),
            tessac: 0.0,
        };
        hold.push(holding_cost(
            c.holding_cost_musd_per_year,
            e.mean_stock_plane,
            c.n_planes,
            e.mean_stock_parking,
            pol.batch_size,
            n_parking,
        ));
        man.push(maneuvering_cost(
            transfers[j].fuel_kg,
            c.fuel_cost_musd_per_kg,
            e.order_frequency_plane,
            c.n_planes,
            pol.batch_size,
            n_t,
        ));
        manuf.push(c.manufac_cost_musd * cnt.failures as f64 / t * n_t);
        constellations.push(e);
    }
    let n_parking_orders = out.launches as f64 / (np * t);
    let launch = launch_cost_annual(sc.launcher.cost_musd, n_parking_orders, n_parking, n_t);
    let fractions = match &sc.design.launch_cost_fractions {
        Some(y) => y.clone(),
        None => {
            let launched: Vec<f64> = out.per_constellation.iter().map(|c| c.launched_batches as f64).collect();
            crate::cost::slot_share_fractions(&launched, &slots)
        }
    };
    let costs = tessac(hold, man, manuf, launch, fractions)?;
    for (e, v) in constellations.iter_mut().zip(&costs.tessac_per_constellation) {
        e.tessac = *v;
    }
    let rep = EmpiricalReplication {
        constellations,
        order_frequency_parking: n_parking_orders,
        launch_cost: launch,
        tessac_total: costs.tessac_total,
    };
    let finite = rep.tessac_total.is_finite()
        && rep.constellations.iter().all(|c| {
            [c.lambda_parking, c.mean_stock_plane, c.mean_stock_parking, c.order_frequency_plane, c.tessac]
                .iter()
                .all(|x| x.is_finite())
        });
    if !finite {
        return Err(Error::Simulation(format!("non-finite metric in replication: {rep:?}")));
    }
    Ok(rep)
}

pub fn transfers_for(sc: &Scenario) -> Result<Vec<TransferProfile>> {
    let parking = sc.parking_orbit()?;
    sc.constellations
        .iter()
        .map(|c| transfer_profile(&parking, &c.plane_orbit(sc.inclination_deg)?, &c.propulsion(), &sc.consts, &sc.time))
        .collect()
}

/// Random stream for replication `rep`: one ChaCha key, one stream per replication.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

pub fn simulate(sc: &Scenario, cfg: &SimulationConfig) -> Result<SimulationReport> {
    sc.validate()?;
    cfg.validate()?;
    let structural = Feasibility::structural(sc);
    if !structural.violations.is_empty() {
        return Err(invalid(format!("instance rejected before simulation: {}", structural.describe())));
    }
    let alignment = alignment_registry().create(&cfg.alignment)?;
    let transfers = transfers_for(sc)?;
    if transfers.iter().any(|t| t.relative_drift == 0.0) {
        return Err(Error::ZeroRelativeDrift);
    }
    let horizon = sc.time.years_to_units(cfg.horizon_years);
    let warmup_years = cfg.warmup_years();
    let input = EngineInput {
        scenario: sc,
        transfers: &transfers,
        horizon,
        warmup: sc.time.years_to_units(warmup_years),
        alignment: &*alignment,
    };
    let outputs: Vec<ReplicationOutput> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(&input, replication_rng(cfg.seed, r)))
        .collect::<Result<_>>()?;
    let reps: Vec<EmpiricalReplication> = outputs
        .iter()
        .map(|o| empirical_metrics(sc, &transfers, o))
        .collect::<Result<_>>()?;

    let per = |f: &dyn Fn(&EmpiricalConstellation) -> Option<f64>, j: usize| {
        Estimate::from_samples(reps.iter().map(|r| f(&r.constellations[j])))
    };
    let constellations = (0..sc.m())
        .map(|j| ConstellationEstimates {
            lambda_parking: per(&|c| Some(c.lambda_parking), j),
            mean_stock_plane: per(&|c| Some(c.mean_stock_plane), j),
            mean_stock_parking: per(&|c| Some(c.mean_stock_parking), j),
            fill_rate_plane: per(&|c| c.fill_rate_plane, j),
            fill_rate_parking: per(&|c| c.fill_rate_parking, j),
            order_frequency_plane: per(&|c| Some(c.order_frequency_plane), j),
            tessac: per(&|c| Some(c.tessac), j),
        })
        .collect();
    Ok(SimulationReport {
        replications: cfg.replications,
        horizon_years: cfg.horizon_years,
        warmup_years,
        alignment: alignment.name().to_string(),
        constellations,
        order_frequency_parking: Estimate::from_samples(reps.iter().map(|r| Some(r.order_frequency_parking))),
        launch_cost: Estimate::from_samples(reps.iter().map(|r| Some(r.launch_cost))),
        tessac_total: Estimate::from_samples(reps.iter().map(|r| Some(r.tessac_total))),
        events: outputs.iter().map(|o| o.events).sum(),
        max_launch_slots: outputs.iter().map(|o| o.max_launch_slots).max().unwrap_or(0),
        per_replication: reps,
    })
}
