//! When does a plane next line up with a parking orbit?
//!
//! Parking orbit k sits at RAAN φ₀ + 2πk/N; plane (j, p) at θ_{j,p}. Their
//! separation drifts at Ω̇_rel,j, so consecutive alignments of one plane with
//! any parking orbit are T = 2π/(N·|Ω̇_rel,j|) apart and visit the orbits in
//! a fixed cyclic order.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::registry::Registry;

/// Per-replication RAAN layout.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub n_parking: usize,
    pub parking_phase: f64,
    /// RAAN of every plane, indexed like the engine's plane list.
    pub plane_raan: Vec<f64>,
    /// Ω̇_rel per constellation, rad per time unit.
    pub drift: Vec<f64>,
}

impl Geometry {
    pub fn period(&self, j: usize) -> f64 {
        TAU / (self.n_parking as f64 * self.drift[j].abs())
    }

    /// Orbit that aligns right after `orbit` for constellation j.
    pub fn next_orbit(&self, j: usize, orbit: usize) -> usize {
        let n = self.n_parking;
        if self.drift[j] < 0.0 {
            (orbit + 1) % n
        } else {
            (orbit + n - 1) % n
        }
    }

    /// Exact time until parking orbit k next shares the plane's RAAN.
    pub fn wait_for(&self, j: usize, plane: usize, k: usize, now: f64) -> f64 {
        let r = self.drift[j];
        let sep = self.parking_phase + TAU * k as f64 / self.n_parking as f64 - self.plane_raan[plane] + r * now;
        (-sep / r).rem_euclid(TAU / r.abs())
    }
}

pub trait AlignmentModel: Send + Sync {
    fn name(&self) -> &'static str;
    /// (wait, orbit) of the first alignment after `now`.
    fn first_alignment(&self, geo: &Geometry, j: usize, plane: usize, now: f64, rng: &mut ChaCha8Rng) -> (f64, usize);
}

/// Tracks the deterministic phase drift.
#[derive(Debug, Default, Clone, Copy)]
pub struct GeometricAlignment;

impl AlignmentModel for GeometricAlignment {
    fn name(&self) -> &'static str {
        "geometry"
    }

    fn first_alignment(&self, geo: &Geometry, j: usize, plane: usize, now: f64, _rng: &mut ChaCha8Rng) -> (f64, usize) {
        (0..geo.n_parking)
            .map(|k| (geo.wait_for(j, plane, k, now), k))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one parking orbit")
    }
}

/// Draws the first wait uniformly on [0, T) and the orbit uniformly,
/// ignoring phases.
#[derive(Debug, Default, Clone, Copy)]
pub struct SampledAlignment;

impl AlignmentModel for SampledAlignment {
    fn name(&self) -> &'static str {
        "sampled"
    }

    fn first_alignment(&self, geo: &Geometry, j: usize, _plane: usize, _now: f64, rng: &mut ChaCha8Rng) -> (f64, usize) {
        let wait = rng.random::<f64>() * geo.period(j);
        (wait, rng.random_range(0..geo.n_parking))
    }
}

pub fn alignment_registry() -> Registry<dyn AlignmentModel> {
    let mut r: Registry<dyn AlignmentModel> = Registry::new("lead-time model", "geometry");
    r.register("geometry", || Box::new(GeometricAlignment));
    r.register("sampled", || Box::new(SampledAlignment));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn geo(drift: f64) -> Geometry {
        Geometry {
            n_parking: 4,
            parking_phase: 0.3,
            plane_raan: vec![1.1],
            drift: vec![drift],
        }
    }

    #[test]
    fn alignments_are_evenly_spaced_and_cycle() {
        for drift in [-0.13, 0.07] {
            let g = geo(drift);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let (w0, k0) = GeometricAlignment.first_alignment(&g, 0, 0, 5.0, &mut rng);
            assert!(w0 >= 0.0 && w0 < g.period(0));
            let k1 = g.next_orbit(0, k0);
            let w1 = g.wait_for(0, 0, k1, 5.0);
            assert!((w1 - w0 - g.period(0)).abs() < 1e-9);
            // at the alignment instant the separation is a multiple of 2π
            let t = 5.0 + w0;
            let sep = g.parking_phase + TAU * k0 as f64 / 4.0 - g.plane_raan[0] + drift * t;
            let r = sep.rem_euclid(TAU);
            assert!(r < 1e-9 || TAU - r < 1e-9);
        }
    }

    #[test]
    fn sampled_wait_is_within_one_period() {
        let g = geo(-0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (w, k) = SampledAlignment.first_alignment(&g, 0, 0, 0.0, &mut rng);
            assert!(w < g.period(0) && k < 4);
        }
    }
}
