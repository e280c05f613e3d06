//! Annual cost components and their split across operators. All amounts
//! are $M per year.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scenario::{validate_fractions, ConstellationSpec};

/// c_hold·(SL_plane·N_plane + SL_parking·Q·N_parking)
pub fn holding_cost(
    holding_cost_per_sat: f64,
    mean_stock_plane: f64,
    n_planes: u32,
    mean_stock_parking: f64,
    batch_size: u32,
    n_parking: u32,
) -> f64 {
    holding_cost_per_sat
        * (mean_stock_plane * n_planes as f64 + mean_stock_parking * batch_size as f64 * n_parking as f64)
}

/// Fuel spent raising every shipped satellite, priced per kg.
pub fn maneuvering_cost(
    fuel_kg: f64,
    fuel_cost_per_kg: f64,
    order_frequency_plane: f64,
    n_planes: u32,
    batch_size: u32,
    n_t: f64,
) -> f64 {
    fuel_kg * fuel_cost_per_kg * order_frequency_plane * n_planes as f64 * batch_size as f64 * n_t
}

pub fn manufacturing_cost(spec: &ConstellationSpec) -> f64 {
    spec.manufac_cost_musd * spec.annual_failures()
}

/// c_lau·n_parking·N_parking·N_t
pub fn launch_cost_annual(launch_cost: f64, order_frequency_parking: f64, n_parking: u32, n_t: f64) -> f64 {
    launch_cost * order_frequency_parking * n_parking as f64 * n_t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub holding: Vec<f64>,
    pub maneuvering: Vec<f64>,
    pub manufacturing: Vec<f64>,
    pub launch_total: f64,
    pub fractions: Vec<f64>,
    pub tessac_per_constellation: Vec<f64>,
    pub tessac_total: f64,
}

impl CostBreakdown {
    /// C_j: everything but the launch share.
    pub fn own_cost(&self, j: usize) -> f64 {
        self.holding[j] + self.maneuvering[j] + self.manufacturing[j]
    }

    /// Same components re-split with other launch-cost fractions.
    pub fn with_fractions(&self, fractions: &[f64]) -> Result<CostBreakdown> {
        tessac(
            self.holding.clone(),
            self.maneuvering.clone(),
            self.manufacturing.clone(),
            self.launch_total,
            fractions.to_vec(),
        )
    }
}

pub fn tessac(
    holding: Vec<f64>,
    maneuvering: Vec<f64>,
    manufacturing: Vec<f64>,
    launch_total: f64,
    fractions: Vec<f64>,
) -> Result<CostBreakdown> {
    let m = holding.len();
    if maneuvering.len() != m || manufacturing.len() != m {
        return Err(invalid("cost component vectors differ in length"));
    }
    validate_fractions(&fractions, m)?;
    let per: Vec<f64> = (0..m)
        .map(|j| fractions[j] * launch_total + holding[j] + maneuvering[j] + manufacturing[j])
        .collect();
    let own: f64 = (0..m).map(|j| holding[j] + maneuvering[j] + manufacturing[j]).sum();
    Ok(CostBreakdown {
        holding,
        maneuvering,
        manufacturing,
        launch_total,
        fractions,
        tessac_per_constellation: per,
        tessac_total: launch_total + own,
    })
}

/// Fractions proportional to each operator's share of launched slots.
pub fn slot_share_fractions(order_quantity: &[f64], batch_slots: &[u32]) -> Vec<f64> {
    let vol: Vec<f64> = order_quantity
        .iter()
        .zip(batch_slots)
        .map(|(q, &a)| (q * a as f64).max(0.0))
        .collect();
    let total: f64 = vol.iter().sum();
    if total > 0.0 {
        vol.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / vol.len() as f64; vol.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::reference_constellations;
    use approx::assert_relative_eq;

    #[test]
    fn component_arithmetic() {
        assert_eq!(holding_cost(0.5, 0.0, 30, 0.0, 5, 3), 0.0);
        assert_relative_eq!(holding_cost(0.5, 5.5, 30, 10.0, 5, 3), 157.5, epsilon = 1e-12);
        assert_relative_eq!(holding_cost(1.0, 5.5, 30, 10.0, 5, 3), 315.0, epsilon = 1e-12);
        assert_eq!(maneuvering_cost(4.66, 0.01, 0.0, 30, 5, 52.0), 0.0);
        // n·Q·N_plane·N_t is the number of satellites shipped per year
        let shipped = 0.02 * 5.0 * 30.0 * 52.0;
        assert_relative_eq!(maneuvering_cost(4.66, 0.01, 0.02, 30, 5, 52.0), 4.66 * 0.01 * shipped, max_relative = 1e-14);
        assert_relative_eq!(maneuvering_cost(4.66, 0.02, 0.02, 30, 5, 52.0), 2.0 * 4.66 * 0.01 * shipped, max_relative = 1e-14);
        assert_eq!(launch_cost_annual(200.0, 0.0, 1, 52.0), 0.0);
    }

    #[test]
    fn manufacturing_examples() {
        let mut c = reference_constellations().remove(0);
        c.manufac_cost_musd = 0.5;
        c.sat_failure_rate_per_year = 0.2;
        c.n_planes = 30;
        c.sats_per_plane = 30;
        assert_relative_eq!(manufacturing_cost(&c), 90.0, epsilon = 1e-12);
        let c2 = reference_constellations().remove(1);
        assert_relative_eq!(manufacturing_cost(&c2), 62.92, epsilon = 1e-12);
        c.sat_failure_rate_per_year = 0.0;
        assert_eq!(manufacturing_cost(&c), 0.0);
    }

    #[test]
    fn total_is_invariant_to_fractions() {
        let b = tessac(vec![10.0, 20.0, 5.0], vec![1.0, 2.0, 3.0], vec![7.0, 8.0, 9.0], 100.0, vec![0.2, 0.3, 0.5]).unwrap();
        assert_relative_eq!(b.tessac_per_constellation.iter().sum::<f64>(), b.tessac_total, epsilon = 1e-9);
        let p = b.with_fractions(&[0.5, 0.2, 0.3]).unwrap();
        assert_eq!(b.tessac_total, p.tessac_total);
        assert_relative_eq!(p.tessac_per_constellation[0], 50.0 + 18.0, epsilon = 1e-12);
        assert!(b.with_fractions(&[0.5, 0.5, 0.5]).is_err());
        let single = tessac(vec![1.0], vec![2.0], vec![3.0], 4.0, vec![1.0]).unwrap();
        assert_eq!(single.tessac_total, 10.0);
    }

    #[test]
    fn slot_share() {
        let y = slot_share_fractions(&[2.0, 1.0], &[5, 10]);
        assert_eq!(y, vec![0.5, 0.5]);
    }
}
