//! CSV output of searches, and reading a solution row back as a design.

use std::io::{Read, Write};

use super::{CentralizedResult, FrontLog, FrontSolution, GenerationLog};
use crate::error::{invalid, Error, Result};
use crate::scenario::{ConstellationPolicy, SharedDesign, StrategyDesign};

pub fn solution_header(m: usize) -> Vec<String> {
    let mut h: Vec<String> = ["h_parking_km", "n_parking", "srop_slots"].map(String::from).to_vec();
    for j in 1..=m {
        h.extend([format!("s_{j}"), format!("Q_{j}"), format!("S_{j}")]);
    }
    h.extend((1..=m).map(|j| format!("y_{j}")));
    h.extend((1..=m).map(|j| format!("tessac_{j}")));
    h.push("tessac_total".into());
    h.extend((1..=5).map(|k| format!("cond_{k}")));
    h
}

fn solution_record(s: &FrontSolution) -> Result<Vec<String>> {
    let d = &s.design;
    let y = d
        .launch_cost_fractions
        .as_ref()
        .ok_or_else(|| invalid("solution rows need explicit launch-cost fractions"))?;
    let mut r = vec![
        d.shared.parking_altitude_km.to_string(),
        d.shared.n_parking.to_string(),
        d.shared.srop_slots.to_string(),
    ];
    for p in &d.policies {
        r.extend([p.reorder_point, p.batch_size, p.order_up_to].map(|v| v.to_string()));
    }
    // `{}` on f64 prints the shortest string that parses back to the same bits
    r.extend(y.iter().map(f64::to_string));
    r.extend(s.tessac.iter().map(f64::to_string));
    r.push(s.tessac_total.to_string());
    r.extend(s.flags.iter().map(|&f| u8::from(f).to_string()));
    Ok(r)
}

pub fn write_solutions_csv<W: Write>(out: W, rows: &[FrontSolution]) -> Result<()> {
    let m = rows.first().map_or(0, |r| r.design.policies.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(solution_header(m))?;
    for s in rows {
        w.write_record(solution_record(s)?)?;
    }
    w.flush()?;
    Ok(())
}

/// The centralized winner as a solution row, with the split its costs used.
pub fn centralized_solution(r: &CentralizedResult) -> Result<FrontSolution> {
    let eval = r
        .evaluation
        .as_ref()
        .ok_or_else(|| Error::Optimization(format!("best design has no evaluation: {}", r.feasibility.describe())))?;
    let mut design = r.design.clone();
    design.launch_cost_fractions = Some(eval.costs.fractions.clone());
    Ok(FrontSolution {
        design,
        tessac: eval.costs.tessac_per_constellation.clone(),
        tessac_total: eval.costs.tessac_total,
        flags: r.feasibility.flags(),
    })
}

pub fn write_generation_log_csv<W: Write>(out: W, log: &[GenerationLog]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in log {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_front_log_csv<W: Write>(out: W, log: &[FrontLog]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in log {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Selected agreements: `beta_j` columns followed by the solution columns,
/// so the file can also be fed to `read_solution_csv`.
pub fn write_agreements_csv<W: Write>(out: W, selections: &[(Vec<f64>, FrontSolution)]) -> Result<()> {
    let m = selections.first().map_or(0, |(w, _)| w.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=m).map(|j| format!("beta_{j}")).collect();
    header.extend(solution_header(m));
    w.write_record(&header)?;
    for (beta, s) in selections {
        let mut rec: Vec<String> = beta.iter().map(f64::to_string).collect();
        rec.extend(solution_record(s)?);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

struct Columns {
    headers: csv::StringRecord,
    m: usize,
}

impl Columns {
    fn new(headers: csv::StringRecord) -> Result<Self> {
        let m = (1..).take_while(|j| headers.iter().any(|h| h == format!("s_{j}"))).count();
        if m == 0 {
            return Err(invalid("solution CSV has no policy columns"));
        }
        Ok(Columns { headers, m })
    }

    fn has(&self, name: &str) -> bool {
        self.headers.iter().any(|h| h == name)
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Result<&'r str> {
        let k = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| invalid(format!("solution CSV lacks column '{name}'")))?;
        Ok(rec.get(k).unwrap_or("").trim())
    }

    fn int(&self, rec: &csv::StringRecord, name: &str) -> Result<u32> {
        let v = self.get(rec, name)?;
        v.parse().map_err(|_| invalid(format!("column '{name}': '{v}' is not a non-negative integer")))
    }

    fn real(&self, rec: &csv::StringRecord, name: &str) -> Result<f64> {
        let v = self.get(rec, name)?;
        v.parse().map_err(|_| invalid(format!("column '{name}': '{v}' is not a number")))
    }

    fn reals(&self, rec: &csv::StringRecord, prefix: &str) -> Result<Vec<f64>> {
        (1..=self.m).map(|j| self.real(rec, &format!("{prefix}_{j}"))).collect()
    }

    fn design(&self, rec: &csv::StringRecord) -> Result<StrategyDesign> {
        let policies = (1..=self.m)
            .map(|j| {
                Ok(ConstellationPolicy {
                    reorder_point: self.int(rec, &format!("s_{j}"))?,
                    batch_size: self.int(rec, &format!("Q_{j}"))?,
                    order_up_to: self.int(rec, &format!("S_{j}"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let launch_cost_fractions = if self.has("y_1") { Some(self.reals(rec, "y")?) } else { None };
        Ok(StrategyDesign {
            shared: SharedDesign {
                parking_altitude_km: self.real(rec, "h_parking_km")?,
                n_parking: self.int(rec, "n_parking")?,
                srop_slots: self.int(rec, "srop_slots")?,
            },
            policies,
            launch_cost_fractions,
        })
    }

    fn solution(&self, rec: &csv::StringRecord) -> Result<FrontSolution> {
        let mut flags = [false; 5];
        for (k, f) in flags.iter_mut().enumerate() {
            *f = self.int(rec, &format!("cond_{}", k + 1))? == 1;
        }
        Ok(FrontSolution {
            design: self.design(rec)?,
            tessac: self.reals(rec, "tessac")?,
            tessac_total: self.real(rec, "tessac_total")?,
            flags,
        })
    }
}

/// Design stored in data row `row` (0-based) of a solution CSV.
pub fn read_solution_csv<R: Read>(input: R, row: usize) -> Result<StrategyDesign> {
    let mut rd = csv::Reader::from_reader(input);
    let cols = Columns::new(rd.headers()?.clone())?;
    let rec = rd
        .records()
        .nth(row)
        .ok_or_else(|| invalid(format!("solution CSV has no row {row}")))??;
    cols.design(&rec)
}

/// Every row of a saved front, costs and flags included.
pub fn read_solutions_csv<R: Read>(input: R) -> Result<Vec<FrontSolution>> {
    let mut rd = csv::Reader::from_reader(input);
    let cols = Columns::new(rd.headers()?.clone())?;
    rd.records().map(|rec| cols.solution(&rec?)).collect()
}
