//! Long-format CSV reports: one `quantity,constellation,value,units` row
//! per number. System-wide rows leave `constellation` empty.

use std::io::Write;

use crate::error::Result;
use crate::evaluate::{Condition, EvaluationResult, Feasibility};
use crate::simulator::{Estimate, SimulationReport};

struct Rows<W: Write> {
    w: csv::Writer<W>,
}

impl<W: Write> Rows<W> {
    fn new(out: W, header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header)?;
        Ok(Rows { w })
    }

    fn put(&mut self, quantity: &str, j: Option<usize>, cells: &[String], units: &str) -> Result<()> {
        let mut rec = vec![quantity.to_string(), j.map_or_else(String::new, |j| (j + 1).to_string())];
        rec.extend_from_slice(cells);
        rec.push(units.to_string());
        self.w.write_record(&rec)?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

fn num(v: f64) -> Vec<String> {
    vec![v.to_string()]
}

/// Inventory parameters, cost breakdown and condition flags. `eval` is
/// `None` when the model could not be evaluated; only flags are written.
pub fn write_evaluation_csv<W: Write>(out: W, eval: Option<&EvaluationResult>, feasibility: &Feasibility) -> Result<()> {
    let mut r = Rows::new(out, &["quantity", "constellation", "value", "units"])?;
    if let Some(e) = eval {
        for (j, c) in e.constellations.iter().enumerate() {
            let t = &c.transfer;
            for (q, v, u) in [
                ("delta_v", t.delta_v_km_s, "km/s"),
                ("fuel", t.fuel_kg, "kg"),
                ("transfer_time", t.transfer_time, "period"),
                ("relative_drift", t.relative_drift, "rad/period"),
                ("lambda_plane", c.plane.demand_rate, "sat/period/plane"),
                ("es_plane", c.plane.expected_shortage, "sat/order"),
                ("rho_plane", c.plane.fill_rate, "fraction"),
                ("sl_plane", c.plane.mean_stock, "sat/plane"),
                ("n_plane", c.plane.order_frequency, "order/period/plane"),
                ("lambda_parking", c.parking.demand_rate, "batch/period/orbit"),
                ("eq_parking", c.parking.order_quantity, "batch/order"),
                ("es_parking", c.parking.expected_shortage, "batch/order"),
                ("rho_parking", c.parking.fill_rate, "fraction"),
                ("sl_parking", c.parking.mean_stock, "batch/orbit"),
                ("holding", e.costs.holding[j], "MUSD/yr"),
                ("maneuvering", e.costs.maneuvering[j], "MUSD/yr"),
                ("manufacturing", e.costs.manufacturing[j], "MUSD/yr"),
                ("launch_fraction", e.costs.fractions[j], "fraction"),
                ("tessac", e.costs.tessac_per_constellation[j], "MUSD/yr"),
            ] {
                r.put(q, Some(j), &num(v), u)?;
            }
        }
        r.put("chain_states", None, &[e.chain.n_states.to_string()], "count")?;
        r.put("n_parking", None, &num(e.order_frequency_parking), "order/period/orbit")?;
        r.put("launch", None, &num(e.costs.launch_total), "MUSD/yr")?;
        r.put("tessac_total", None, &num(e.costs.tessac_total), "MUSD/yr")?;
    }
    for c in Condition::ALL {
        let ok = !feasibility.violates(c);
        r.put(&format!("cond_{}", c.number()), None, &[u8::from(ok).to_string()], "flag")?;
    }
    r.put("service_evaluated", None, &[u8::from(feasibility.service_evaluated).to_string()], "flag")?;
    r.finish()
}

fn est(e: &Estimate) -> Vec<String> {
    let f = |x: Option<f64>| x.map_or_else(|| "undefined".to_string(), |v| v.to_string());
    vec![f(e.mean), f(e.std_err), e.samples.to_string()]
}

/// Replication means with standard errors (`undefined` below two samples).
pub fn write_simulation_csv<W: Write>(out: W, rep: &SimulationReport) -> Result<()> {
    let mut r = Rows::new(out, &["quantity", "constellation", "mean", "std_err", "samples", "units"])?;
    for (j, c) in rep.constellations.iter().enumerate() {
        for (q, e, u) in [
            ("lambda_parking", &c.lambda_parking, "batch/period/orbit"),
            ("sl_plane", &c.mean_stock_plane, "sat/plane"),
            ("sl_parking", &c.mean_stock_parking, "batch/orbit"),
            ("rho_plane", &c.fill_rate_plane, "fraction"),
            ("rho_parking", &c.fill_rate_parking, "fraction"),
            ("n_plane", &c.order_frequency_plane, "order/period/plane"),
            ("tessac", &c.tessac, "MUSD/yr"),
        ] {
            r.put(q, Some(j), &est(e), u)?;
        }
    }
    r.put("n_parking", None, &est(&rep.order_frequency_parking), "order/period/orbit")?;
    r.put("launch", None, &est(&rep.launch_cost), "MUSD/yr")?;
    r.put("tessac_total", None, &est(&rep.tessac_total), "MUSD/yr")?;
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::Evaluator;
    use crate::scenario::{reference_scenario, ServiceThresholds};

    #[test]
    fn evaluation_csv_is_deterministic() {
        let sc = reference_scenario();
        let write = || {
            let ev = Evaluator::new(Default::default()).unwrap();
            let (f, e) = ev.assess(&sc, &ServiceThresholds::default()).unwrap();
            let mut buf = Vec::new();
            write_evaluation_csv(&mut buf, e.as_ref(), &f).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = write();
        assert_eq!(a, write());
        assert!(a.starts_with("quantity,constellation,value,units\ndelta_v,1,"));
        assert!(a.contains("\ncond_1,,1,flag\n"));
        assert!(a.lines().any(|l| l.starts_with("tessac_total,,")));
    }
}
