//! Scenario data: constellations, launcher, and the replenishment strategy.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::orbital::{CircularOrbit, PhysicalConstants, PropulsionSpec, TimeBase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSpec {
    #[serde(default)]
    pub name: String,
    pub plane_altitude_km: f64,
    pub n_planes: u32,
    pub sats_per_plane: u32,
    pub sat_failure_rate_per_year: f64,
    pub shipping_size_slots: u32,
    pub dry_mass_kg: f64,
    pub mass_flow_rate_kg_s: f64,
    pub exhaust_velocity_km_s: f64,
    pub manufac_cost_musd: f64,
    pub holding_cost_musd_per_year: f64,
    pub fuel_cost_musd_per_kg: f64,
}

impl ConstellationSpec {
    pub fn validate(&self) -> Result<()> {
        let who = if self.name.is_empty() { "constellation" } else { &self.name };
        if self.n_planes == 0 || self.sats_per_plane == 0 || self.shipping_size_slots == 0 {
            return Err(invalid(format!("{who}: counts and shipping size must be positive integers")));
        }
        // zero failure rate is allowed (no-demand simulations)
        if !(self.sat_failure_rate_per_year >= 0.0 && self.sat_failure_rate_per_year.is_finite()) {
            return Err(invalid(format!("{who}: failure rate must be finite and >= 0")));
        }
        for (label, v) in [
            ("plane altitude", self.plane_altitude_km),
            ("dry mass", self.dry_mass_kg),
            ("mass flow rate", self.mass_flow_rate_kg_s),
            ("exhaust velocity", self.exhaust_velocity_km_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{who}: {label} must be > 0")));
            }
        }
        for (label, v) in [
            ("manufacturing cost", self.manufac_cost_musd),
            ("holding cost", self.holding_cost_musd_per_year),
            ("fuel cost coefficient", self.fuel_cost_musd_per_kg),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{who}: {label} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn propulsion(&self) -> PropulsionSpec {
        PropulsionSpec {
            dry_mass_kg: self.dry_mass_kg,
            exhaust_velocity_km_s: self.exhaust_velocity_km_s,
            mass_flow_rate_kg_s: self.mass_flow_rate_kg_s,
        }
    }

    pub fn plane_orbit(&self, inclination_deg: f64) -> Result<CircularOrbit> {
        CircularOrbit::new(self.plane_altitude_km, inclination_deg)
    }

    /// Satellites lost per year across the whole constellation.
    pub fn annual_failures(&self) -> f64 {
        self.sat_failure_rate_per_year * self.n_planes as f64 * self.sats_per_plane as f64
    }
}

/// Per-slot proportionality coefficients used to complete a constellation
/// from its shipping size alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotProportionality {
    pub dry_mass_kg_per_slot: f64,
    pub mass_flow_kg_s_per_slot: f64,
    pub manufac_cost_musd_per_slot: f64,
}

impl Default for SlotProportionality {
    fn default() -> Self {
        SlotProportionality {
            dry_mass_kg_per_slot: 150.0,
            mass_flow_kg_s_per_slot: 1.3e-3,
            manufac_cost_musd_per_slot: 0.5,
        }
    }
}

impl SlotProportionality {
    pub fn apply(&self, spec: &mut ConstellationSpec) {
        let v = spec.shipping_size_slots as f64;
        spec.dry_mass_kg = self.dry_mass_kg_per_slot * v;
        spec.mass_flow_rate_kg_s = self.mass_flow_kg_s_per_slot * v;
        spec.manufac_cost_musd = self.manufac_cost_musd_per_slot * v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchServiceSpec {
    pub cost_musd: f64,
    pub capacity_slots: u32,
    /// fixed order-processing time t_lau, time units
    pub order_processing_time: f64,
    /// mean of the exponential wait for the next launch, time units
    pub mean_wait: f64,
}

impl LaunchServiceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.capacity_slots == 0 {
            return Err(invalid("launcher capacity must be a positive integer"));
        }
        if !(self.cost_musd >= 0.0 && self.order_processing_time >= 0.0 && self.mean_wait > 0.0) {
            return Err(invalid("launch cost and processing time must be >= 0, mean wait > 0"));
        }
        Ok(())
    }

    /// Heavy-lift launcher.
    pub fn mega() -> Self {
        LaunchServiceSpec {
            cost_musd: 200.0,
            capacity_slots: 250,
            order_processing_time: 32.0,
            mean_wait: 20.0,
        }
    }

    pub fn normal() -> Self {
        LaunchServiceSpec {
            cost_musd: 67.0,
            capacity_slots: 40,
            order_processing_time: 12.0,
            mean_wait: 8.0,
        }
    }
}

/// Decisions shared by all constellations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharedDesign {
    pub parking_altitude_km: f64,
    pub n_parking: u32,
    /// shipping-size reorder point U
    pub srop_slots: u32,
}

/// (s_j, Q_j, S_j) for one constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationPolicy {
    pub reorder_point: u32,
    pub batch_size: u32,
    /// order-up-to level at the parking orbit, in batches
    pub order_up_to: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyDesign {
    pub shared: SharedDesign,
    pub policies: Vec<ConstellationPolicy>,
    /// Launch-cost fractions y_j; `None` splits by launched slot volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub launch_cost_fractions: Option<Vec<f64>>,
}

impl StrategyDesign {
    /// Batch shipping sizes a_j = v_j Q_j.
    pub fn batch_slots(&self, constellations: &[ConstellationSpec]) -> Vec<u32> {
        constellations
            .iter()
            .zip(&self.policies)
            .map(|(c, p)| c.shipping_size_slots * p.batch_size)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceThresholds {
    pub rho_plane: f64,
    pub rho_parking: f64,
}

impl Default for ServiceThresholds {
    fn default() -> Self {
        ServiceThresholds {
            rho_plane: 0.98,
            rho_parking: 0.98,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub constellations: Vec<ConstellationSpec>,
    pub launcher: LaunchServiceSpec,
    pub design: StrategyDesign,
    pub inclination_deg: f64,
    pub time: TimeBase,
    pub consts: PhysicalConstants,
}

impl Scenario {
    pub fn m(&self) -> usize {
        self.constellations.len()
    }

    /// Shape checks only; policy feasibility is a separate verdict.
    pub fn validate(&self) -> Result<()> {
        if self.constellations.is_empty() {
            return Err(invalid("at least one constellation is required"));
        }
        if self.design.policies.len() != self.m() {
            return Err(invalid(format!(
                "{} policies given for {} constellations",
                self.design.policies.len(),
                self.m()
            )));
        }
        for c in &self.constellations {
            c.validate()?;
        }
        self.launcher.validate()?;
        self.consts.validate()?;
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(invalid("inclination must lie in [0, 180] deg"));
        }
        let sh = &self.design.shared;
        if sh.n_parking == 0 {
            return Err(invalid("N_parking must be >= 1"));
        }
        if sh.srop_slots == 0 {
            return Err(invalid("SROP U must be >= 1"));
        }
        if sh.srop_slots > self.launcher.capacity_slots {
            return Err(invalid(format!(
                "SROP U = {} exceeds launcher capacity A = {}",
                sh.srop_slots, self.launcher.capacity_slots
            )));
        }
        if !(sh.parking_altitude_km > 0.0) {
            return Err(invalid("parking altitude must be > 0"));
        }
        for p in &self.design.policies {
            if p.batch_size == 0 || p.reorder_point == 0 || p.order_up_to == 0 {
                return Err(invalid("s_j, Q_j and S_j must be positive integers"));
            }
        }
        if let Some(y) = &self.design.launch_cost_fractions {
            validate_fractions(y, self.m())?;
        }
        Ok(())
    }

    pub fn parking_orbit(&self) -> Result<CircularOrbit> {
        CircularOrbit::new(self.design.shared.parking_altitude_km, self.inclination_deg)
    }
}

pub fn validate_fractions(y: &[f64], m: usize) -> Result<()> {
    if y.len() != m {
        return Err(invalid(format!("{} launch-cost fractions for {m} constellations", y.len())));
    }
    if y.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("launch-cost fractions must be >= 0"));
    }
    let sum: f64 = y.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("launch-cost fractions must sum to 1 (got {sum})")));
    }
    Ok(())
}

/// Three-operator reference constellations.
pub fn reference_constellations() -> Vec<ConstellationSpec> {
    let base = |name: &str, h, lam, np, ns, v, m, c, md| ConstellationSpec {
        name: name.to_string(),
        plane_altitude_km: h,
        n_planes: np,
        sats_per_plane: ns,
        sat_failure_rate_per_year: lam,
        shipping_size_slots: v,
        dry_mass_kg: m,
        mass_flow_rate_kg_s: md,
        exhaust_velocity_km_s: 11.77,
        manufac_cost_musd: c,
        holding_cost_musd_per_year: 0.5,
        fuel_cost_musd_per_kg: 0.01,
    };
    vec![
        base("c1", 1100.0, 0.10, 24, 20, 1, 200.0, 0.5, 1.7e-5),
        base("c2", 1300.0, 0.11, 26, 22, 2, 280.0, 1.0, 2.4e-5),
        base("c3", 1200.0, 0.12, 20, 24, 2, 350.0, 1.0, 3.0e-5),
    ]
}

/// Reference centralized design for the three-operator scenario.
pub fn reference_design() -> StrategyDesign {
    StrategyDesign {
        shared: SharedDesign {
            parking_altitude_km: 500.0,
            n_parking: 1,
            srop_slots: 244,
        },
        policies: vec![
            ConstellationPolicy { reorder_point: 3, batch_size: 5, order_up_to: 30 },
            ConstellationPolicy { reorder_point: 3, batch_size: 5, order_up_to: 32 },
            ConstellationPolicy { reorder_point: 3, batch_size: 10, order_up_to: 16 },
        ],
        launch_cost_fractions: None,
    }
}

pub fn reference_scenario() -> Scenario {
    Scenario {
        constellations: reference_constellations(),
        launcher: LaunchServiceSpec::mega(),
        design: reference_design(),
        inclination_deg: 60.0,
        time: TimeBase::default(),
        consts: PhysicalConstants::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_well_formed() {
        let s = reference_scenario();
        s.validate().unwrap();
        assert_eq!(s.design.batch_slots(&s.constellations), vec![5, 10, 20]);
    }

    #[test]
    fn fraction_simplex() {
        assert!(validate_fractions(&[0.5, 0.5], 2).is_ok());
        assert!(validate_fractions(&[0.5, 0.6], 2).is_err());
        assert!(validate_fractions(&[1.2, -0.2], 2).is_err());
        assert!(validate_fractions(&[1.0], 2).is_err());
    }

    #[test]
    fn proportional_completion() {
        let mut c = reference_constellations().remove(1);
        SlotProportionality::default().apply(&mut c);
        assert_eq!(c.dry_mass_kg, 300.0);
        assert!((c.mass_flow_rate_kg_s - 2.6e-3).abs() < 1e-15);
        assert_eq!(c.manufac_cost_musd, 1.0);
    }
}
