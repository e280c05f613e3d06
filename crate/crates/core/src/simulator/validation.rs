//! Draw feasible instances per constellation count, simulate each, and
//! average the per-instance worst-case errors.

use std::io::Write;

use super::errors::{error_metrics, ErrorTable, METRICS};
use super::generate::{generate_instances, SamplingRanges};
use super::{simulate, SimulationConfig};
use crate::error::{invalid, Result};
use crate::evaluate::Evaluator;
use crate::scenario::{Scenario, ServiceThresholds};

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSettings {
    pub constellation_counts: Vec<usize>,
    pub instances_per_count: usize,
    /// seeds instance generation; simulations use `simulation.seed`
    pub seed: u64,
    pub ranges: SamplingRanges,
    pub thresholds: ServiceThresholds,
    pub simulation: SimulationConfig,
}

#[derive(Debug, Clone)]
pub struct InstanceOutcome {
    pub id: String,
    pub m: usize,
    pub scenario: Scenario,
    pub errors: ErrorTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub m: usize,
    pub draws: u64,
    pub acceptance_rate: f64,
    /// (metric, mean of the per-instance worst errors, instances counted)
    pub means: Vec<(&'static str, Option<f64>, usize)>,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub instances: Vec<InstanceOutcome>,
    pub groups: Vec<GroupSummary>,
    /// false with a single replication: no standard errors exist
    pub std_errors_reliable: bool,
}

/// Acceptable mean error: 3 % for relative metrics, 0.5 pp for fill rates.
pub fn envelope_limit(metric: &str) -> f64 {
    if metric.starts_with("rho_") {
        0.5
    } else {
        3.0
    }
}

impl GroupSummary {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.means.iter().find(|(m, ..)| *m == metric).and_then(|(_, v, _)| *v)
    }

    /// Metrics over the limit or undefined.
    pub fn breaches(&self) -> Vec<&'static str> {
        self.means
            .iter()
            .filter(|(m, v, _)| v.is_none_or(|v| v > envelope_limit(m)))
            .map(|(m, ..)| *m)
            .collect()
    }
}

pub fn run_validation(settings: &ValidationSettings, evaluator: &Evaluator) -> Result<ValidationReport> {
    settings.simulation.validate()?;
    if settings.constellation_counts.is_empty() || settings.instances_per_count == 0 {
        return Err(invalid("validation needs at least one constellation count and one instance"));
    }
    let mut instances = Vec::new();
    let mut groups = Vec::new();
    for &m in &settings.constellation_counts {
        let generated = generate_instances(
            m,
            &settings.ranges,
            &settings.thresholds,
            settings.instances_per_count,
            settings.seed.wrapping_add(m as u64),
            evaluator,
        )?;
        let mut tables = Vec::with_capacity(generated.instances.len());
        for (k, sc) in generated.instances.iter().enumerate() {
            let analytic = evaluator.evaluate(sc)?;
            let cfg = SimulationConfig {
                seed: settings.simulation.seed.wrapping_add((1000 * m + k) as u64),
                ..settings.simulation.clone()
            };
            let report = simulate(sc, &cfg)?;
            let errors = error_metrics(&analytic, &report);
            log::info!("m = {m}, instance {}: {:?}", k + 1, errors.summaries());
            tables.push(errors.clone());
            instances.push(InstanceOutcome {
                id: format!("m{m}-{:02}", k + 1),
                m,
                scenario: sc.clone(),
                errors,
            });
        }
        let means = METRICS
            .iter()
            .map(|&metric| {
                let v: Vec<f64> = tables.iter().filter_map(|t| t.summary(metric)).collect();
                let mean = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
                (metric, mean, v.len())
            })
            .collect();
        groups.push(GroupSummary {
            m,
            draws: generated.draws,
            acceptance_rate: generated.acceptance_rate(),
            means,
        });
    }
    Ok(ValidationReport {
        instances,
        groups,
        std_errors_reliable: settings.simulation.replications > 1,
    })
}

/// One row per metric, one column per constellation count; cells are mean
/// worst-case errors (% or pp, see `units`).
pub fn write_envelope_csv<W: Write>(out: W, report: &ValidationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["metric".to_string(), "units".to_string()];
    header.extend(report.groups.iter().map(|g| format!("m={}", g.m)));
    header.push("limit".into());
    w.write_record(&header)?;
    for metric in METRICS {
        let mut row = vec![metric.to_string(), if metric.starts_with("rho_") { "pp" } else { "%" }.to_string()];
        row.extend(report.groups.iter().map(|g| g.mean(metric).map_or_else(|| "undefined".into(), |v| format!("{v:.4}"))));
        row.push(envelope_limit(metric).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
