//! Rejection sampling of validation instances.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evaluate::{Evaluator, Feasibility};
use crate::orbital::{PhysicalConstants, TimeBase};
use crate::parking::count_states;
use crate::scenario::{
    ConstellationPolicy, ConstellationSpec, LaunchServiceSpec, Scenario, ServiceThresholds, SharedDesign, SlotProportionality,
    StrategyDesign,
};

/// Closed intervals sampled uniformly, plus the parameters every instance
/// shares. Durations are in weeks and converted to the time base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingRanges {
    pub launch_processing_weeks: [f64; 2],
    pub launch_mean_wait_weeks: [f64; 2],
    pub inclination_deg: [f64; 2],
    pub failure_rate_per_year: [f64; 2],
    pub n_planes: [u32; 2],
    pub n_parking: [u32; 2],
    pub sats_per_plane: [u32; 2],
    pub plane_altitude_km: [f64; 2],
    pub parking_altitude_km: [f64; 2],
    pub reorder_point: [u32; 2],
    pub batch_size: [u32; 2],
    pub order_up_to: [u32; 2],
    pub srop_slots: [u32; 2],
    pub shipping_size_slots: [u32; 2],

    pub launch_cost_musd: f64,
    pub capacity_slots: u32,
    pub exhaust_velocity_km_s: f64,
    pub holding_cost_musd_per_year: f64,
    pub fuel_cost_musd_per_kg: f64,
    pub proportionality: SlotProportionality,
    pub units_per_year: u32,

    /// candidates whose parking chain would exceed this are rejected unevaluated
    pub max_states: u64,
    pub max_draws: u64,
}

impl Default for SamplingRanges {
    fn default() -> Self {
        Self {
            launch_processing_weeks: [20.0, 80.0],
            launch_mean_wait_weeks: [20.0, 80.0],
            inclination_deg: [40.0, 80.0],
            failure_rate_per_year: [0.05, 0.2],
            n_planes: [20, 40],
            n_parking: [1, 20],
            sats_per_plane: [20, 60],
            plane_altitude_km: [500.0, 2000.0],
            parking_altitude_km: [400.0, 1000.0],
            reorder_point: [1, 20],
            batch_size: [1, 40],
            order_up_to: [1, 40],
            srop_slots: [10, 250],
            shipping_size_slots: [1, 4],
            launch_cost_musd: 200.0,
            capacity_slots: 250,
            exhaust_velocity_km_s: 11.77,
            holding_cost_musd_per_year: 0.5,
            fuel_cost_musd_per_kg: 0.01,
            proportionality: SlotProportionality::default(),
            units_per_year: 52,
            max_states: 1_000_000,
            max_draws: 5_000_000,
        }
    }
}

impl SamplingRanges {
    pub fn validate(&self) -> Result<()> {
        let f = [
            ("launch_processing_weeks", self.launch_processing_weeks),
            ("launch_mean_wait_weeks", self.launch_mean_wait_weeks),
            ("inclination_deg", self.inclination_deg),
            ("failure_rate_per_year", self.failure_rate_per_year),
            ("plane_altitude_km", self.plane_altitude_km),
            ("parking_altitude_km", self.parking_altitude_km),
        ];
        for (name, [lo, hi]) in f {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(invalid(format!("range {name} = [{lo}, {hi}] is empty")));
            }
        }
        let u = [
            ("n_planes", self.n_planes),
            ("n_parking", self.n_parking),
            ("sats_per_plane", self.sats_per_plane),
            ("reorder_point", self.reorder_point),
            ("batch_size", self.batch_size),
            ("order_up_to", self.order_up_to),
            ("srop_slots", self.srop_slots),
            ("shipping_size_slots", self.shipping_size_slots),
        ];
        for (name, [lo, hi]) in u {
            if lo > hi || lo == 0 {
                return Err(invalid(format!("range {name} = [{lo}, {hi}] must be non-empty and start at 1 or above")));
            }
        }
        if self.srop_slots[1] > self.capacity_slots {
            return Err(invalid("SROP range exceeds the launch capacity"));
        }
        if self.units_per_year == 0 || self.max_draws == 0 {
            return Err(invalid("units_per_year and max_draws must be positive"));
        }
        Ok(())
    }

    fn draw(&self, m: usize, rng: &mut ChaCha8Rng) -> Scenario {
        let uf = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| if lo == hi { lo } else { rng.random_range(lo..=hi) };
        let ui = |rng: &mut ChaCha8Rng, [lo, hi]: [u32; 2]| rng.random_range(lo..=hi);
        let time = TimeBase { units_per_year: self.units_per_year };
        let weeks = |w: f64| time.years_to_units(w / 52.0);

        let launcher = LaunchServiceSpec {
            cost_musd: self.launch_cost_musd,
            capacity_slots: self.capacity_slots,
            order_processing_time: weeks(uf(rng, self.launch_processing_weeks)),
            mean_wait: weeks(uf(rng, self.launch_mean_wait_weeks)),
        };
        let inclination_deg = uf(rng, self.inclination_deg);
        let shared = SharedDesign {
            parking_altitude_km: uf(rng, self.parking_altitude_km),
            n_parking: ui(rng, self.n_parking),
            srop_slots: ui(rng, self.srop_slots),
        };
        let mut constellations = Vec::with_capacity(m);
        let mut policies = Vec::with_capacity(m);
        for j in 0..m {
            let mut c = ConstellationSpec {
                name: format!("c{}", j + 1),
                plane_altitude_km: uf(rng, self.plane_altitude_km),
                n_planes: ui(rng, self.n_planes),
                sats_per_plane: ui(rng, self.sats_per_plane),
                sat_failure_rate_per_year: uf(rng, self.failure_rate_per_year),
                shipping_size_slots: ui(rng, self.shipping_size_slots),
                dry_mass_kg: 0.0,
                mass_flow_rate_kg_s: 0.0,
                exhaust_velocity_km_s: self.exhaust_velocity_km_s,
                manufac_cost_musd: 0.0,
                holding_cost_musd_per_year: self.holding_cost_musd_per_year,
                fuel_cost_musd_per_kg: self.fuel_cost_musd_per_kg,
            };
            self.proportionality.apply(&mut c);
            constellations.push(c);
            policies.push(ConstellationPolicy {
                reorder_point: ui(rng, self.reorder_point),
                batch_size: ui(rng, self.batch_size),
                order_up_to: ui(rng, self.order_up_to),
            });
        }
        Scenario {
            constellations,
            launcher,
            design: StrategyDesign { shared, policies, launch_cost_fractions: None },
            inclination_deg,
            time,
            consts: PhysicalConstants::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationReport {
    pub instances: Vec<Scenario>,
    pub draws: u64,
    /// draws violating each of conditions 1–5; a draw can count more than once
    pub condition_rejections: [u64; 5],
    /// parking orbit not strictly below every plane
    pub altitude_rejections: u64,
    /// chain above `max_states`
    pub state_space_rejections: u64,
}

impl GenerationReport {
    pub fn acceptance_rate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.instances.len() as f64 / self.draws as f64
        }
    }

    pub fn diagnostics(&self) -> String {
        let per: Vec<String> = self
            .condition_rejections
            .iter()
            .enumerate()
            .map(|(i, n)| format!("condition {}: {n}", i + 1))
            .collect();
        format!(
            "{}; altitude ordering: {}; state space: {}",
            per.join(", "),
            self.altitude_rejections,
            self.state_space_rejections
        )
    }
}

enum Verdict {
    Accepted,
    Altitude,
    StateSpace,
    Conditions([bool; 5]),
}

fn judge(sc: &Scenario, ranges: &SamplingRanges, evaluator: &Evaluator, thresholds: &ServiceThresholds) -> Result<Verdict> {
    if sc.constellations.iter().any(|c| sc.design.shared.parking_altitude_km >= c.plane_altitude_km) {
        return Ok(Verdict::Altitude);
    }
    let structural = Feasibility::structural(sc);
    if !structural.violations.is_empty() {
        let mut flags = [false; 5];
        for v in &structural.violations {
            flags[v.condition.number() as usize - 1] = true;
        }
        return Ok(Verdict::Conditions(flags));
    }
    let slots = sc.design.batch_slots(&sc.constellations);
    if count_states(&slots, sc.design.shared.srop_slots) > ranges.max_states as u128 {
        return Ok(Verdict::StateSpace);
    }
    let f = evaluator.check_feasibility(sc, thresholds)?;
    if f.is_feasible() {
        Ok(Verdict::Accepted)
    } else {
        Ok(Verdict::Conditions(f.flags().map(|ok| !ok)))
    }
}

const STARVATION_RATE: f64 = 1e-4;
const STARVATION_MIN_DRAWS: u64 = 200_000;

/// Draws candidates sequentially from one stream and judges them in
/// parallel chunks; acceptance follows draw order, so the result depends
/// only on the seed.
pub fn generate_instances(
    m: usize,
    ranges: &SamplingRanges,
    thresholds: &ServiceThresholds,
    count: usize,
    seed: u64,
    evaluator: &Evaluator,
) -> Result<GenerationReport> {
    if m == 0 {
        return Err(invalid("at least one constellation is required"));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GenerationReport::default();
    const CHUNK: usize = 256;
    while report.instances.len() < count {
        if report.draws >= ranges.max_draws
            || (report.draws >= STARVATION_MIN_DRAWS && report.acceptance_rate() < STARVATION_RATE)
        {
            return Err(Error::GenerationStarved {
                draws: report.draws,
                accepted: report.instances.len(),
                diagnostics: report.diagnostics(),
            });
        }
        let batch: Vec<Scenario> = (0..CHUNK).map(|_| ranges.draw(m, &mut rng)).collect();
        let verdicts: Vec<Verdict> = batch
            .par_iter()
            .map(|sc| judge(sc, ranges, evaluator, thresholds))
            .collect::<Result<_>>()?;
        for (sc, v) in batch.into_iter().zip(verdicts) {
            if report.instances.len() == count {
                break;
            }
            report.draws += 1;
            match v {
                Verdict::Accepted => report.instances.push(sc),
                Verdict::Altitude => report.altitude_rejections += 1,
                Verdict::StateSpace => report.state_space_rejections += 1,
                Verdict::Conditions(flags) => {
                    for (i, bad) in flags.iter().enumerate() {
                        if *bad {
                            report.condition_rejections[i] += 1;
                        }
                    }
                }
            }
        }
    }
    log::info!(
        "generated {} instances for m={m} from {} draws ({})",
        report.instances.len(),
        report.draws,
        report.diagnostics()
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::EvaluationOptions;

    #[test]
    fn vacuous_thresholds_accept_structurally_valid_draws() {
        let ev = Evaluator::new(EvaluationOptions::default()).unwrap();
        let t = ServiceThresholds { rho_plane: 0.0, rho_parking: 0.0 };
        let r = generate_instances(2, &SamplingRanges::default(), &t, 5, 3, &ev).unwrap();
        assert_eq!(r.instances.len(), 5);
        assert_eq!(r.condition_rejections[3] + r.condition_rejections[4], 0);
        for sc in &r.instances {
            let f = ev.check_feasibility(sc, &t).unwrap();
            assert!(f.is_feasible(), "{}", f.describe());
        }
        let again = generate_instances(2, &SamplingRanges::default(), &t, 5, 3, &ev).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn impossible_ranges_starve_with_diagnostics() {
        let ev = Evaluator::new(EvaluationOptions::default()).unwrap();
        let ranges = SamplingRanges {
            reorder_point: [30, 30],
            batch_size: [1, 20],
            max_draws: 2000,
            ..Default::default()
        };
        match generate_instances(2, &ranges, &ServiceThresholds::default(), 1, 1, &ev) {
            Err(Error::GenerationStarved { draws, accepted: 0, diagnostics }) => {
                assert!(draws >= 2000);
                assert!(diagnostics.contains("condition 1"));
            }
            other => panic!("expected starvation, got {other:?}"),
        }
    }
}
