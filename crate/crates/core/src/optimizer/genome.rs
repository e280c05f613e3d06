//! Integer genome over the shared design and per-constellation policies,
//! optionally followed by real-valued launch-cost-fraction genes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DesignBounds, Problem};
use crate::scenario::{ConstellationPolicy, SharedDesign, StrategyDesign};

#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    /// h index, N_parking, U, then (s, Q, S) per constellation
    pub ints: Vec<i64>,
    pub reals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GeneSpace {
    lo: Vec<i64>,
    hi: Vec<i64>,
    slots: Vec<u32>,
    altitudes: Vec<f64>,
    n_reals: usize,
}

impl GeneSpace {
    pub fn new(problem: &Problem, with_fractions: bool) -> Self {
        let b: &DesignBounds = &problem.bounds;
        let sc = &problem.base;
        let mut lo = vec![0, b.n_parking[0] as i64, b.srop_slots[0] as i64];
        let mut hi = vec![b.parking_altitudes_km.len() as i64 - 1, b.n_parking[1] as i64, b.srop_slots[1] as i64];
        for j in 0..sc.m() {
            lo.extend([b.reorder_point[0] as i64, b.batch_size_min as i64, b.order_up_to[0] as i64]);
            hi.extend([b.reorder_point[1] as i64, b.batch_max(j, sc) as i64, b.order_up_to[1] as i64]);
        }
        GeneSpace {
            lo,
            hi,
            slots: sc.constellations.iter().map(|c| c.shipping_size_slots).collect(),
            altitudes: b.parking_altitudes_km.clone(),
            n_reals: if with_fractions { sc.m() } else { 0 },
        }
    }

    pub fn len(&self) -> usize {
        self.lo.len() + self.n_reals
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn m(&self) -> usize {
        self.slots.len()
    }

    pub fn random(&self, rng: &mut ChaCha8Rng) -> Genome {
        let ints = self.lo.iter().zip(&self.hi).map(|(&l, &h)| rng.random_range(l..=h)).collect();
        let reals = (0..self.n_reals).map(|_| rng.random::<f64>()).collect();
        let mut g = Genome { ints, reals };
        self.repair(&mut g);
        g
    }

    /// Cheap structural repair: s ≤ Q, and v·Q + 1 ≤ U by raising U within
    /// bounds first and shrinking Q only if that is not enough.
    pub fn repair(&self, g: &mut Genome) {
        for (k, x) in g.ints.iter_mut().enumerate() {
            *x = (*x).clamp(self.lo[k], self.hi[k]);
        }
        for j in 0..self.m() {
            let need = self.slots[j] as i64 * g.ints[4 + 3 * j] + 1;
            if need > g.ints[2] {
                g.ints[2] = need.min(self.hi[2]);
            }
        }
        for j in 0..self.m() {
            let v = self.slots[j] as i64;
            let q = 4 + 3 * j;
            if v * g.ints[q] + 1 > g.ints[2] {
                g.ints[q] = ((g.ints[2] - 1) / v).max(self.lo[q]);
            }
            g.ints[q - 1] = g.ints[q - 1].min(g.ints[q]).max(self.lo[q - 1]);
        }
        for y in &mut g.reals {
            *y = y.clamp(0.0, 1.0);
        }
    }

    pub fn decode(&self, g: &Genome) -> StrategyDesign {
        let policies = (0..self.m())
            .map(|j| ConstellationPolicy {
                reorder_point: g.ints[3 + 3 * j] as u32,
                batch_size: g.ints[4 + 3 * j] as u32,
                order_up_to: g.ints[5 + 3 * j] as u32,
            })
            .collect();
        let launch_cost_fractions = (self.n_reals > 0).then(|| normalize(&g.reals));
        StrategyDesign {
            shared: SharedDesign {
                parking_altitude_km: self.altitudes[g.ints[0] as usize],
                n_parking: g.ints[1] as u32,
                srop_slots: g.ints[2] as u32,
            },
            policies,
            launch_cost_fractions,
        }
    }

    /// Sets gene `k` to `v`, rescaling the order-up-to levels so the total
    /// parking stock N·S_j·Q_j stays about level when `k` is N or a Q_j.
    fn shift_keeping_stock(&self, g: &Genome, k: usize, v: i64) -> Genome {
        let mut n = g.clone();
        n.ints[k] = v;
        let rescale = |n: &mut Genome, j: usize, ratio: f64| {
            let s = 5 + 3 * j;
            n.ints[s] = ((g.ints[s] as f64 * ratio).round() as i64).max(1);
        };
        if k == 1 {
            for j in 0..self.m() {
                rescale(&mut n, j, g.ints[1] as f64 / v as f64);
            }
        } else if k >= 3 && (k - 3) % 3 == 1 {
            rescale(&mut n, (k - 3) / 3, g.ints[k] as f64 / v as f64);
        }
        self.repair(&mut n);
        n
    }

    fn couples_stock(k: usize) -> bool {
        k == 1 || (k >= 3 && (k - 3) % 3 == 1)
    }

    /// Repaired genomes one integer step away from `g`, with and without
    /// the stock-preserving rescale, deduplicated.
    pub fn neighbors(&self, g: &Genome) -> Vec<Genome> {
        let mut out: Vec<Genome> = Vec::with_capacity(4 * g.ints.len());
        for k in 0..g.ints.len() {
            for d in [-1, 1] {
                let v = g.ints[k] + d;
                if v < self.lo[k] || v > self.hi[k] {
                    continue;
                }
                let mut plain = g.clone();
                plain.ints[k] = v;
                self.repair(&mut plain);
                let mut cands = vec![plain];
                if Self::couples_stock(k) {
                    cands.push(self.shift_keeping_stock(g, k, v));
                }
                for n in cands {
                    if n != *g && !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
        }
        out
    }

    pub fn uniform_crossover(&self, a: &Genome, b: &Genome, rng: &mut ChaCha8Rng) -> (Genome, Genome) {
        let (mut c, mut d) = (a.clone(), b.clone());
        for k in 0..c.ints.len() {
            if rng.random::<bool>() {
                std::mem::swap(&mut c.ints[k], &mut d.ints[k]);
            }
        }
        for k in 0..c.reals.len() {
            if rng.random::<bool>() {
                std::mem::swap(&mut c.reals[k], &mut d.reals[k]);
            }
        }
        (c, d)
    }

    /// Each gene mutates with probability `rate`: integers either reset
    /// uniformly or creep by up to a tenth of their range (N and Q_j creeps
    /// drag S_j along half the time), reals get a Gaussian kick.
    pub fn mutate(&self, g: &mut Genome, rate: f64, sigma: f64, rng: &mut ChaCha8Rng) {
        for k in 0..g.ints.len() {
            if rng.random::<f64>() >= rate {
                continue;
            }
            let (l, h) = (self.lo[k], self.hi[k]);
            if rng.random::<bool>() {
                g.ints[k] = rng.random_range(l..=h);
            } else {
                let step = ((h - l) / 10).max(1);
                let mut d = rng.random_range(-step..=step);
                if d == 0 {
                    d = if rng.random::<bool>() { 1 } else { -1 };
                }
                let v = (g.ints[k] + d).clamp(l, h);
                if Self::couples_stock(k) && rng.random::<bool>() {
                    *g = self.shift_keeping_stock(g, k, v);
                } else {
                    g.ints[k] = v;
                }
            }
        }
        let kick = Normal::new(0.0, sigma).expect("sigma > 0");
        for y in &mut g.reals {
            if rng.random::<f64>() < rate {
                *y += kick.sample(rng);
            }
        }
        self.repair(g);
    }
}

/// Fractions on the simplex; all-zero genes mean an even split.
pub fn normalize(y: &[f64]) -> Vec<f64> {
    let total: f64 = y.iter().sum();
    if total > 0.0 {
        y.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / y.len() as f64; y.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::DesignBounds;
    use crate::scenario::{reference_scenario, ServiceThresholds};
    use rand::SeedableRng;

    fn problem() -> Problem {
        Problem {
            base: reference_scenario(),
            bounds: DesignBounds::reference(),
            thresholds: ServiceThresholds::default(),
        }
    }

    #[test]
    fn random_genomes_are_structurally_repaired() {
        let p = problem();
        let gs = GeneSpace::new(&p, true);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let mut g = gs.random(&mut rng);
            gs.mutate(&mut g, 0.5, 0.1, &mut rng);
            let d = gs.decode(&g);
            let u = d.shared.srop_slots;
            assert!((200..=250).contains(&u));
            for (pol, c) in d.policies.iter().zip(&p.base.constellations) {
                assert!(pol.reorder_point <= pol.batch_size);
                assert!(c.shipping_size_slots * pol.batch_size < u);
                assert!(pol.batch_size <= 250 / c.shipping_size_slots);
            }
            let y = d.launch_cost_fractions.unwrap();
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_handles_zero() {
        assert_eq!(normalize(&[0.0, 0.0]), vec![0.5, 0.5]);
        assert_eq!(normalize(&[1.0, 3.0]), vec![0.25, 0.75]);
    }
}
