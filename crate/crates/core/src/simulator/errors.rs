//! Model-vs-simulation error tables.

use std::io::Write;

use serde::Serialize;

use super::SimulationReport;
use crate::error::Result;
use crate::evaluate::EvaluationResult;

pub const METRICS: [&str; 7] = [
    "lambda_parking",
    "sl_plane",
    "sl_parking",
    "n_parking",
    "tessac",
    "rho_plane",
    "rho_parking",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub metric: &'static str,
    /// `None` for system-wide scalars
    pub constellation: Option<usize>,
    pub analytic: f64,
    pub empirical: Option<f64>,
    /// `None` when the empirical value is missing or zero (relative metrics)
    pub error: Option<f64>,
    pub units: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Worst row of a metric; undefined as soon as one row is.
    pub fn summary(&self, metric: &str) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for r in self.rows.iter().filter(|r| r.metric == metric) {
            let e = r.error?;
            worst = Some(worst.map_or(e, |w| w.max(e)));
        }
        worst
    }

    pub fn summaries(&self) -> Vec<(&'static str, Option<f64>)> {
        METRICS.iter().map(|&m| (m, self.summary(m))).collect()
    }
}

/// |sim − model| / sim in percent.
pub fn relative_error(model: f64, sim: f64) -> Option<f64> {
    (sim != 0.0).then(|| (sim - model).abs() / sim.abs() * 100.0)
}

/// |sim − model| for fractions, in percentage points.
pub fn absolute_error_pp(model: f64, sim: f64) -> f64 {
    (sim - model).abs() * 100.0
}

pub fn error_metrics(analytic: &EvaluationResult, empirical: &SimulationReport) -> ErrorTable {
    let mut rows = Vec::new();
    let mut rel = |metric, constellation, a: f64, e: Option<f64>| {
        rows.push(ErrorRow {
            metric,
            constellation,
            analytic: a,
            empirical: e,
            error: e.and_then(|e| relative_error(a, e)),
            units: "%",
        })
    };
    for (j, (a, e)) in analytic.constellations.iter().zip(&empirical.constellations).enumerate() {
        rel("lambda_parking", Some(j), a.parking.demand_rate, e.lambda_parking.mean);
        rel("sl_plane", Some(j), a.plane.mean_stock, e.mean_stock_plane.mean);
        rel("sl_parking", Some(j), a.parking.mean_stock, e.mean_stock_parking.mean);
    }
    rel("n_parking", None, analytic.order_frequency_parking, empirical.order_frequency_parking.mean);
    rel("tessac", None, analytic.costs.tessac_total, empirical.tessac_total.mean);
    for (j, (a, e)) in analytic.constellations.iter().zip(&empirical.constellations).enumerate() {
        for (metric, model, sim) in [
            ("rho_plane", a.plane.fill_rate, e.fill_rate_plane.mean),
            ("rho_parking", a.parking.fill_rate, e.fill_rate_parking.mean),
        ] {
            rows.push(ErrorRow {
                metric,
                constellation: Some(j),
                analytic: model,
                empirical: sim,
                error: sim.map(|s| absolute_error_pp(model, s)),
                units: "pp",
            });
        }
    }
    ErrorTable { rows }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| format!("{v}"))
}

/// Columns: instance_id, metric, analytic, empirical, error, units. Metrics
/// of one constellation carry a `.c<j>` suffix (1-based).
pub fn write_error_csv<W: Write>(out: W, tables: &[(String, &ErrorTable)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instance_id", "metric", "analytic", "empirical", "error", "units"])?;
    for (id, t) in tables {
        for r in &t.rows {
            let metric = match r.constellation {
                Some(j) => format!("{}.c{}", r.metric, j + 1),
                None => r.metric.to_string(),
            };
            w.write_record([id.clone(), metric, format!("{}", r.analytic), opt(r.empirical), opt(r.error), r.units.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_definition() {
        assert_eq!(relative_error(1.0, 1.0), Some(0.0));
        assert!((relative_error(0.98, 1.0).unwrap() - 2.0).abs() < 1e-12);
        // swapping only changes the denominator
        assert!((relative_error(1.0, 0.98).unwrap() - 2.0 / 0.98).abs() < 1e-12);
        assert_eq!(relative_error(1.0, 0.0), None);
        assert!((absolute_error_pp(0.985, 0.99) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn summary_takes_the_worst_and_flags_undefined() {
        let row = |c, e| ErrorRow { metric: "sl_plane", constellation: Some(c), analytic: 1.0, empirical: Some(1.0), error: e, units: "%" };
        let t = ErrorTable { rows: vec![row(0, Some(0.3)), row(1, Some(0.6)), row(2, Some(0.4))] };
        assert_eq!(t.summary("sl_plane"), Some(0.6));
        let t = ErrorTable { rows: vec![row(0, Some(0.3)), row(1, None)] };
        assert_eq!(t.summary("sl_plane"), None);
    }

    #[test]
    fn csv_layout() {
        let t = ErrorTable {
            rows: vec![ErrorRow { metric: "n_parking", constellation: None, analytic: 2.0, empirical: None, error: None, units: "%" }],
        };
        let mut buf = Vec::new();
        write_error_csv(&mut buf, &[("i1".into(), &t)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "instance_id,metric,analytic,empirical,error,units\ni1,n_parking,2,undefined,undefined,%\n");
    }
}
