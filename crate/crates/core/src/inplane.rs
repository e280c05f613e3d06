//! (s, Q) policy for in-plane spares with an alignment-driven lead time.
//!
//! A replenishment order leaves the first parking orbit that drifts into
//! alignment while holding stock. With N parking orbits evenly spread in
//! RAAN the wait for the k-th orbit is uniform on an interval of length
//! 2π/(N·|Ω̇_rel|), shifted by the transfer time.

use std::f64::consts::TAU;

use crate::error::{invalid, Error, Result};
use crate::numerics::{expected_shortage, gauss_legendre, NumericsConfig};
use crate::scenario::ConstellationSpec;

/// Failures per plane per time unit.
pub fn plane_demand_rate(spec: &ConstellationSpec, n_t: f64) -> f64 {
    spec.sats_per_plane as f64 * spec.sat_failure_rate_per_year / n_t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadTimeInterval {
    pub lower: f64,
    pub upper: f64,
    pub weight: f64,
}

/// Piecewise-uniform lead-time density.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadTimeMixture {
    pub intervals: Vec<LeadTimeInterval>,
}

impl LeadTimeMixture {
    /// A point mass at `tau`.
    pub fn degenerate(tau: f64) -> Self {
        LeadTimeMixture {
            intervals: vec![LeadTimeInterval { lower: tau, upper: tau, weight: 1.0 }],
        }
    }

    pub fn mean(&self) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.weight * 0.5 * (iv.lower + iv.upper))
            .sum()
    }

    pub fn support_max(&self) -> f64 {
        self.intervals
            .iter()
            .filter(|iv| iv.weight > 0.0)
            .map(|iv| iv.upper)
            .fold(0.0, f64::max)
    }

    /// ∫ f(τ) g(τ) dτ with an `order`-point Legendre rule per interval.
    pub fn expect(&self, order: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let rule = gauss_legendre(order);
        let mut total = 0.0;
        for iv in &self.intervals {
            if iv.weight == 0.0 {
                continue;
            }
            let width = iv.upper - iv.lower;
            if width == 0.0 {
                total += iv.weight * f(iv.lower);
            } else {
                total += iv.weight / width * rule.integrate_interval(iv.lower, iv.upper, &mut f);
            }
        }
        total
    }
}

/// Time between successive alignments of one plane with any of
/// `n_parking` evenly spaced parking orbits.
pub fn alignment_period(relative_drift: f64, n_parking: u32) -> Result<f64> {
    if relative_drift == 0.0 || !relative_drift.is_finite() {
        return Err(Error::ZeroRelativeDrift);
    }
    Ok(TAU / (n_parking as f64 * relative_drift.abs()))
}

/// Weights (1−ρ)^{k−1}ρ over k = 1..N, normalized. ρ ≤ 0 is taken in the
/// limit, which is the uniform vector.
pub fn availability_weights(n_parking: u32, rho_parking: f64) -> Vec<f64> {
    let n = n_parking as usize;
    if rho_parking <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    let rho = rho_parking.min(1.0);
    let mut w = Vec::with_capacity(n);
    let mut p = rho;
    for _ in 0..n {
        w.push(p);
        p *= 1.0 - rho;
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

pub fn leadtime_mixture(
    transfer_time: f64,
    relative_drift: f64,
    n_parking: u32,
    rho_parking: f64,
) -> Result<LeadTimeMixture> {
    if n_parking == 0 {
        return Err(invalid("N_parking must be >= 1"));
    }
    if !(transfer_time >= 0.0) {
        return Err(invalid("transfer time must be >= 0"));
    }
    let period = alignment_period(relative_drift, n_parking)?;
    let intervals = availability_weights(n_parking, rho_parking)
        .into_iter()
        .enumerate()
        .map(|(k, weight)| LeadTimeInterval {
            lower: k as f64 * period + transfer_time,
            upper: (k + 1) as f64 * period + transfer_time,
            weight,
        })
        .collect();
    Ok(LeadTimeMixture { intervals })
}

/// Expected shortage per cycle, mixing the Poisson closed form over the
/// lead-time density. The Legendre order is doubled until two passes agree.
pub fn expected_shortage_plane(
    reorder_point: u32,
    demand_rate: f64,
    mixture: &LeadTimeMixture,
    num: &NumericsConfig,
) -> f64 {
    if demand_rate == 0.0 {
        return 0.0;
    }
    let eval = |order: usize| {
        mixture.expect(order, |tau| expected_shortage(reorder_point, demand_rate * tau, num.tail_tol))
    };
    let mut order = num.legendre_order;
    let mut prev = eval(order);
    while order < 4 * num.legendre_order {
        order *= 2;
        let next = eval(order);
        let converged = (next - prev).abs() <= num.rel_tol * next.abs().max(f64::MIN_POSITIVE);
        prev = next;
        if converged {
            break;
        }
    }
    prev
}

/// 1 − ES/Q, clamped to [0, 1].
pub fn fill_rate_plane(batch_size: u32, es: f64) -> f64 {
    (1.0 - es / batch_size as f64).clamp(0.0, 1.0)
}

/// Mean on-hand level; the integrand is affine in τ so the mixture mean
/// gives it exactly.
pub fn mean_stock_plane(reorder_point: u32, batch_size: u32, demand_rate: f64, mixture: &LeadTimeMixture) -> f64 {
    reorder_point as f64 - demand_rate * mixture.mean() + 0.5 * batch_size as f64 + 0.5
}

pub fn order_frequency_plane(demand_rate: f64, batch_size: u32) -> f64 {
    demand_rate / batch_size as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct InPlaneMetrics {
    pub demand_rate: f64,
    pub mixture: LeadTimeMixture,
    pub expected_shortage: f64,
    pub fill_rate: f64,
    pub mean_stock: f64,
    pub order_frequency: f64,
    /// ES came out above Q, so the fill rate was clamped at 0.
    pub fill_rate_clamped: bool,
}

pub fn evaluate_plane(
    reorder_point: u32,
    batch_size: u32,
    demand_rate: f64,
    mixture: LeadTimeMixture,
    num: &NumericsConfig,
) -> InPlaneMetrics {
    let es = expected_shortage_plane(reorder_point, demand_rate, &mixture, num);
    InPlaneMetrics {
        demand_rate,
        expected_shortage: es,
        fill_rate: fill_rate_plane(batch_size, es),
        mean_stock: mean_stock_plane(reorder_point, batch_size, demand_rate, &mixture),
        order_frequency: order_frequency_plane(demand_rate, batch_size),
        fill_rate_clamped: es > batch_size as f64,
        mixture,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::reference_constellations;
    use approx::assert_relative_eq;
    use statrs::distribution::{DiscreteCDF, Poisson};

    fn num() -> NumericsConfig {
        NumericsConfig::default()
    }

    #[test]
    fn demand_rate_arithmetic() {
        let mut c = reference_constellations().remove(0);
        c.sats_per_plane = 30;
        c.sat_failure_rate_per_year = 0.2;
        assert_relative_eq!(plane_demand_rate(&c, 52.0), 6.0 / 52.0, epsilon = 1e-15);
        c.sats_per_plane = 60;
        assert_relative_eq!(plane_demand_rate(&c, 52.0), 12.0 / 52.0, epsilon = 1e-15);
    }

    #[test]
    fn mixture_weights() {
        assert_eq!(availability_weights(3, 1.0), vec![1.0, 0.0, 0.0]);
        let w = availability_weights(3, 0.98);
        let raw = [0.98, 0.0196, 0.000392];
        let sum: f64 = raw.iter().sum();
        for (a, b) in w.iter().zip(raw) {
            assert_relative_eq!(*a, b / sum, max_relative = 1e-12);
        }
        assert_eq!(availability_weights(1, 0.3), vec![1.0]);
        assert_eq!(availability_weights(4, 0.0), vec![0.25; 4]);
    }

    #[test]
    fn mixture_intervals_tile_from_transfer_time() {
        let m = leadtime_mixture(0.4, -0.13, 3, 0.9).unwrap();
        let period = TAU / (3.0 * 0.13);
        assert_eq!(m.intervals[0].lower, 0.4);
        for (k, iv) in m.intervals.iter().enumerate() {
            assert_relative_eq!(iv.upper - iv.lower, period, max_relative = 1e-12);
            if k > 0 {
                assert_eq!(iv.lower, m.intervals[k - 1].upper);
            }
        }
        let total = m.expect(64, |_| 1.0);
        assert_relative_eq!(total, 1.0, epsilon = 1e-13);
        assert!(matches!(leadtime_mixture(0.4, 0.0, 3, 0.9), Err(Error::ZeroRelativeDrift)));
    }

    #[test]
    fn degenerate_lead_time_reduces_to_closed_forms() {
        let m = LeadTimeMixture::degenerate(2.0);
        assert_relative_eq!(expected_shortage_plane(0, 0.25, &m, &num()), 0.5, epsilon = 1e-12);
        assert_relative_eq!(mean_stock_plane(3, 5, 0.25, &m), 5.5, epsilon = 1e-12);
        assert_relative_eq!(mean_stock_plane(3, 5, 0.0, &m), 3.0 + 2.5 + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn shortage_vanishes_for_large_reorder_point() {
        let m = leadtime_mixture(0.5, -0.1, 2, 0.95).unwrap();
        let lam = 0.2;
        let mean_max = lam * m.support_max();
        let s = (mean_max + 10.0 * mean_max.sqrt()).ceil() as u32 + 1;
        assert!(expected_shortage_plane(s, lam, &m, &num()) <= 1e-6);
    }

    #[test]
    fn shortage_monotone_and_stock_linear_in_s() {
        let m = leadtime_mixture(0.5, -0.08, 3, 0.9).unwrap();
        let lam = 0.15;
        let mut prev = f64::INFINITY;
        for s in 0..12 {
            let es = expected_shortage_plane(s, lam, &m, &num());
            assert!(es <= prev + 1e-15);
            prev = es;
            let d = mean_stock_plane(s + 1, 4, lam, &m) - mean_stock_plane(s, 4, lam, &m);
            assert_relative_eq!(d, 1.0, epsilon = 1e-12);
        }
    }

    // Dense-grid oracle: composite Simpson on 10× the nodes, statrs CDFs.
    fn brute_force_es(s: u32, lam: f64, m: &LeadTimeMixture) -> f64 {
        let n = 1280;
        let mut total = 0.0;
        for iv in &m.intervals {
            let h = (iv.upper - iv.lower) / n as f64;
            let f = |tau: f64| {
                let mu = lam * tau;
                let p = Poisson::new(mu).unwrap();
                let upper = |k: i64| if k <= 0 { 1.0 } else { p.sf(k as u64 - 1) };
                mu * upper(s as i64) - s as f64 * upper(s as i64 + 1)
            };
            let mut acc = f(iv.lower) + f(iv.upper);
            for i in 1..n {
                let x = iv.lower + i as f64 * h;
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            total += iv.weight / (iv.upper - iv.lower) * acc * h / 3.0;
        }
        total
    }

    #[test]
    fn shortage_matches_dense_grid_oracle() {
        for (s, lam, t, drift, n, rho) in [
            (1, 0.2, 0.3, -0.1349, 1, 1.0),
            (3, 0.42, 1.2, -0.06, 3, 0.97),
            (5, 1.1, 0.1, -0.2, 5, 0.6),
        ] {
            let m = leadtime_mixture(t, drift, n, rho).unwrap();
            let es = expected_shortage_plane(s, lam, &m, &num());
            let oracle = brute_force_es(s, lam, &m);
            assert_relative_eq!(es, oracle, max_relative = 1e-7);
        }
    }

    #[test]
    fn mean_stock_matches_quadrature() {
        let m = leadtime_mixture(0.7, -0.05, 4, 0.8).unwrap();
        let (s, q, lam) = (4u32, 6u32, 0.3);
        let quad = m.expect(64, |tau| s as f64 - lam * tau + q as f64 / 2.0 + 0.5);
        assert_relative_eq!(mean_stock_plane(s, q, lam, &m), quad, max_relative = 1e-9);
    }

    #[test]
    fn fill_rate_and_frequency() {
        assert_eq!(fill_rate_plane(5, 0.0), 1.0);
        assert_eq!(fill_rate_plane(5, 5.0), 0.0);
        assert_relative_eq!(fill_rate_plane(5, 0.1), 0.98, epsilon = 1e-15);
        assert_relative_eq!(order_frequency_plane(0.115385, 5), 0.023077, epsilon = 1e-12);
        assert_eq!(order_frequency_plane(0.3, 1), 0.3);
    }
}
