//! Versioned TOML scenario document. Every physical field carries its unit
//! in the key; a "period" is 1/units_per_year of a year.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::EvaluationOptions;
use crate::optimizer::{DesignBounds, GaConfig, NsgaConfig, Problem, WorkflowSettings};
use crate::orbital::{PhysicalConstants, TimeBase};
use crate::parking::DEFAULT_STATE_CAP;
use crate::scenario::{
    reference_scenario, ConstellationPolicy, ConstellationSpec, LaunchServiceSpec, Scenario, ServiceThresholds,
    SharedDesign, StrategyDesign,
};
use crate::simulator::{SamplingRanges, SimulationConfig, ValidationSettings};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentDoc>,
    #[serde(default)]
    pub thresholds: ServiceThresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub launcher: Option<LauncherDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constellations: Vec<ConstellationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<DesignBounds>,
    #[serde(default)]
    pub evaluation: EvaluationDoc,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub optimizer: OptimizerDoc,
    #[serde(default)]
    pub validation: ValidationDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDoc {
    pub inclination_deg: f64,
    #[serde(default = "default_units_per_year")]
    pub units_per_year: u32,
    #[serde(default = "default_mu")]
    pub mu_earth_km3_s2: f64,
    #[serde(default = "default_r_earth")]
    pub r_earth_km: f64,
    #[serde(default = "default_j2")]
    pub j2: f64,
}

fn default_units_per_year() -> u32 {
    TimeBase::default().units_per_year
}
fn default_mu() -> f64 {
    PhysicalConstants::default().mu_earth
}
fn default_r_earth() -> f64 {
    PhysicalConstants::default().r_earth
}
fn default_j2() -> f64 {
    PhysicalConstants::default().j2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LauncherDoc {
    pub cost_musd: f64,
    pub capacity_slots: u32,
    pub order_processing_periods: f64,
    pub mean_wait_periods: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDoc {
    pub parking_altitude_km: f64,
    pub n_parking: u32,
    pub srop_slots: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub launch_cost_fractions: Option<Vec<f64>>,
    pub policies: Vec<PolicyDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDoc {
    pub reorder_point_sats: u32,
    pub batch_size_sats: u32,
    pub order_up_to_batches: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationDoc {
    pub solver: String,
    pub state_cap_states: usize,
}

impl Default for EvaluationDoc {
    fn default() -> Self {
        let o = EvaluationOptions::default();
        EvaluationDoc {
            solver: o.solver,
            state_cap_states: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerDoc {
    pub ga: GaConfig,
    pub nsga: NsgaConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_costs_musd_per_year: Option<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationDoc {
    pub constellation_counts: Vec<usize>,
    pub instances_per_count: usize,
    pub seed: u64,
    pub ranges: SamplingRanges,
}

impl Default for ValidationDoc {
    fn default() -> Self {
        ValidationDoc {
            constellation_counts: vec![2, 3],
            instances_per_count: 10,
            seed: 1,
            ranges: SamplingRanges::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioDocument {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ScenarioDocument = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Document holding `sc` as its constellations, launcher and design.
    pub fn from_scenario(sc: &Scenario) -> Self {
        ScenarioDocument {
            schema_version: SCHEMA_VERSION,
            environment: Some(EnvironmentDoc {
                inclination_deg: sc.inclination_deg,
                units_per_year: sc.time.units_per_year,
                mu_earth_km3_s2: sc.consts.mu_earth,
                r_earth_km: sc.consts.r_earth,
                j2: sc.consts.j2,
            }),
            thresholds: ServiceThresholds::default(),
            launcher: Some(LauncherDoc {
                cost_musd: sc.launcher.cost_musd,
                capacity_slots: sc.launcher.capacity_slots,
                order_processing_periods: sc.launcher.order_processing_time,
                mean_wait_periods: sc.launcher.mean_wait,
            }),
            constellations: sc.constellations.clone(),
            design: Some(design_doc(&sc.design)),
            bounds: None,
            evaluation: EvaluationDoc::default(),
            simulation: SimulationConfig::default(),
            optimizer: OptimizerDoc::default(),
            validation: ValidationDoc::default(),
        }
    }

    /// Three-operator case with its reference design, search bounds,
    /// per-operator cost ceilings and two bargaining-weight vectors.
    pub fn reference() -> Self {
        let mut doc = Self::from_scenario(&reference_scenario());
        doc.bounds = Some(DesignBounds::reference());
        doc.optimizer.reference_costs_musd_per_year = Some(vec![178.6, 297.8, 268.9]);
        doc.optimizer.weights = vec![vec![0.2, 0.4, 0.4], vec![0.6, 0.2, 0.2]];
        doc
    }

    pub fn with_design(&self, design: &StrategyDesign) -> Self {
        ScenarioDocument {
            design: Some(design_doc(design)),
            ..self.clone()
        }
    }

    fn scenario_with(&self, design: StrategyDesign) -> Result<Scenario> {
        let env = self.environment.ok_or_else(|| config_err("missing [environment] table"))?;
        let l = self.launcher.ok_or_else(|| config_err("missing [launcher] table"))?;
        if self.constellations.is_empty() {
            return Err(config_err("no [[constellations]] given"));
        }
        let sc = Scenario {
            constellations: self.constellations.clone(),
            launcher: LaunchServiceSpec {
                cost_musd: l.cost_musd,
                capacity_slots: l.capacity_slots,
                order_processing_time: l.order_processing_periods,
                mean_wait: l.mean_wait_periods,
            },
            design,
            inclination_deg: env.inclination_deg,
            time: TimeBase::new(env.units_per_year)?,
            consts: PhysicalConstants {
                mu_earth: env.mu_earth_km3_s2,
                r_earth: env.r_earth_km,
                j2: env.j2,
            },
        };
        sc.validate()?;
        Ok(sc)
    }

    /// Scenario with the document's design; errors when there is none.
    pub fn scenario(&self) -> Result<Scenario> {
        let d = self.design.as_ref().ok_or_else(|| config_err("missing [design] table"))?;
        let design = StrategyDesign {
            shared: SharedDesign {
                parking_altitude_km: d.parking_altitude_km,
                n_parking: d.n_parking,
                srop_slots: d.srop_slots,
            },
            policies: d
                .policies
                .iter()
                .map(|p| ConstellationPolicy {
                    reorder_point: p.reorder_point_sats,
                    batch_size: p.batch_size_sats,
                    order_up_to: p.order_up_to_batches,
                })
                .collect(),
            launch_cost_fractions: d.launch_cost_fractions.clone(),
        };
        self.scenario_with(design)
    }

    pub fn problem(&self) -> Result<Problem> {
        let bounds = self.bounds.clone().ok_or_else(|| config_err("missing [bounds] table"))?;
        let base = match self.design {
            Some(_) => self.scenario()?,
            None => self.scenario_with(placeholder_design(self))?,
        };
        let p = Problem {
            base,
            bounds,
            thresholds: self.thresholds,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn evaluation_options(&self) -> EvaluationOptions {
        EvaluationOptions {
            solver: self.evaluation.solver.clone(),
            state_cap: self.evaluation.state_cap_states,
            ..EvaluationOptions::default()
        }
    }

    pub fn validation_settings(&self) -> ValidationSettings {
        ValidationSettings {
            constellation_counts: self.validation.constellation_counts.clone(),
            instances_per_count: self.validation.instances_per_count,
            seed: self.validation.seed,
            ranges: self.validation.ranges.clone(),
            thresholds: self.thresholds,
            simulation: self.simulation.clone(),
        }
    }

    pub fn workflow_settings(&self) -> WorkflowSettings {
        WorkflowSettings {
            ga: self.optimizer.ga.clone(),
            nsga: self.optimizer.nsga.clone(),
            reference_costs: self.optimizer.reference_costs_musd_per_year.clone(),
            weights: self.optimizer.weights.clone(),
        }
    }
}

fn design_doc(d: &StrategyDesign) -> DesignDoc {
    DesignDoc {
        parking_altitude_km: d.shared.parking_altitude_km,
        n_parking: d.shared.n_parking,
        srop_slots: d.shared.srop_slots,
        launch_cost_fractions: d.launch_cost_fractions.clone(),
        policies: d
            .policies
            .iter()
            .map(|p| PolicyDoc {
                reorder_point_sats: p.reorder_point,
                batch_size_sats: p.batch_size,
                order_up_to_batches: p.order_up_to,
            })
            .collect(),
    }
}

/// Lower corner of the bounds, used only as the unused design slot of a
/// search base scenario.
fn placeholder_design(doc: &ScenarioDocument) -> StrategyDesign {
    let b = doc.bounds.clone().unwrap_or_else(DesignBounds::reference);
    StrategyDesign {
        shared: SharedDesign {
            parking_altitude_km: b.parking_altitudes_km.first().copied().unwrap_or(500.0),
            n_parking: b.n_parking[0],
            srop_slots: b.srop_slots[0],
        },
        policies: vec![
            ConstellationPolicy {
                reorder_point: b.reorder_point[0],
                batch_size: b.batch_size_min,
                order_up_to: b.order_up_to[0],
            };
            doc.constellations.len()
        ],
        launch_cost_fractions: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips_through_toml() {
        let doc = ScenarioDocument::reference();
        let text = doc.to_toml_string().unwrap();
        let back = ScenarioDocument::from_toml_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.scenario().unwrap(), reference_scenario());
        back.problem().unwrap();
    }

    #[test]
    fn shipped_configs_parse() {
        let r = ScenarioDocument::from_toml_str(include_str!("../../../configs/reference.toml")).unwrap();
        assert_eq!(r, ScenarioDocument::reference());
        let v = ScenarioDocument::from_toml_str(include_str!("../../../configs/validation.toml")).unwrap();
        assert_eq!(v.validation, ValidationDoc::default());
        assert!(v.design.is_none());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "schema_version = 1\n\n[launcher]\ncost_musd = \"lots\"\n";
        let e = ScenarioDocument::from_toml_str(text).unwrap_err().to_string();
        assert!(e.contains("line 4"), "{e}");
        let e = ScenarioDocument::from_toml_str("schema_version = 7\n").unwrap_err().to_string();
        assert!(e.contains("schema_version 7"), "{e}");
        let e = ScenarioDocument::from_toml_str("schema_version = 1\nsurprise = 3\n").unwrap_err().to_string();
        assert!(e.contains("surprise"), "{e}");
    }

    #[test]
    fn missing_tables_are_named() {
        let doc = ScenarioDocument::from_toml_str("schema_version = 1\n").unwrap();
        assert!(doc.scenario().unwrap_err().to_string().contains("[design]"));
        assert!(doc.problem().unwrap_err().to_string().contains("[bounds]"));
    }

    #[test]
    fn search_base_without_design() {
        let mut doc = ScenarioDocument::reference();
        doc.design = None;
        let p = doc.problem().unwrap();
        assert_eq!(p.base.m(), 3);
    }

    #[test]
    fn with_design_replaces_only_the_design() {
        let doc = ScenarioDocument::reference();
        let mut d = reference_scenario().design;
        d.shared.srop_slots = 240;
        d.launch_cost_fractions = Some(vec![0.5, 0.25, 0.25]);
        let out = doc.with_design(&d);
        assert_eq!(out.scenario().unwrap().design, d);
        assert_eq!(out.bounds, doc.bounds);
    }
}
