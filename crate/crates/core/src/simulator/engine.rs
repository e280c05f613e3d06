//! Single-replication event engine.
//!
//! Planes hold satellites, parking orbits hold whole batches. Parking demand
//! is registered when a batch leaves the orbit, so parking never backorders:
//! an empty orbit is skipped and the plane waits for the next alignment.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::alignment::{AlignmentModel, Geometry};
use crate::error::{Error, Result};
use crate::inplane::plane_demand_rate;
use crate::orbital::TransferProfile;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Failure { j: usize },
    Align { plane: usize, orbit: usize, first: bool },
    PlaneArrival { plane: usize },
    LaunchArrival { orbit: usize, launch: usize },
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    t: f64,
    seq: u64,
    ev: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // reversed: BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.seq.cmp(&self.seq))
    }
}

/// On-hand, backorders and on-order of one plane, in satellites.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlaneLedger {
    pub on_hand: u32,
    pub backorders: u32,
    pub on_order: u32,
}

impl PlaneLedger {
    pub fn inventory_position(&self) -> i64 {
        self.on_hand as i64 - self.backorders as i64 + self.on_order as i64
    }
}

/// Parking orbit stock per constellation, in batches.
#[derive(Debug, Clone, Default)]
struct ParkingLedger {
    on_hand: Vec<u32>,
    in_transit: Vec<u32>,
    /// batches drawn since the last launch order
    drops: Vec<u32>,
}

/// Time integral of a piecewise-constant level, counted after warm-up only.
#[derive(Debug, Clone, Copy, Default)]
struct Area {
    level: f64,
    last: f64,
    area: f64,
}

impl Area {
    fn shift(&mut self, t: f64, warmup: f64, delta: f64) {
        self.area += self.level * (t.max(warmup) - self.last.max(warmup));
        self.level += delta;
        self.last = t;
    }
}

/// Raw counts of one constellation after warm-up.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstellationCounts {
    pub failures: u64,
    pub immediate_fills: u64,
    pub plane_orders: u64,
    pub withdrawals: u64,
    pub requests: u64,
    pub first_alignment_hits: u64,
    pub launched_batches: u64,
    /// Σ over planes of ∫ on-hand dt
    pub plane_stock_area: f64,
    /// Σ over parking orbits of ∫ on-hand dt, batches
    pub parking_stock_area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutput {
    /// time units after warm-up
    pub observed: f64,
    pub per_constellation: Vec<ConstellationCounts>,
    pub launches: u64,
    pub events: u64,
    pub max_launch_slots: u32,
}

pub struct EngineInput<'a> {
    pub scenario: &'a Scenario,
    pub transfers: &'a [TransferProfile],
    pub horizon: f64,
    pub warmup: f64,
    pub alignment: &'a dyn AlignmentModel,
}

struct Engine<'a> {
    inp: &'a EngineInput<'a>,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    geo: Geometry,
    plane_of: Vec<usize>,
    plane_start: Vec<usize>,
    planes: Vec<PlaneLedger>,
    orbits: Vec<ParkingLedger>,
    launches: Vec<Vec<u32>>,
    slots: Vec<u32>,
    lead_wait: Option<Exp<f64>>,
    counts: Vec<ConstellationCounts>,
    plane_area: Vec<Area>,
    parking_area: Vec<Area>,
    launches_observed: u64,
    max_launch_slots: u32,
    failures_total: u64,
    replaced_total: u64,
    events: u64,
}

pub fn run_replication(inp: &EngineInput<'_>, mut rng: ChaCha8Rng) -> Result<ReplicationOutput> {
    let sc = inp.scenario;
    let m = sc.m();
    let n_parking = sc.design.shared.n_parking as usize;

    let mut plane_of = Vec::new();
    let mut plane_start = Vec::with_capacity(m);
    let mut plane_raan = Vec::new();
    let mut planes = Vec::new();
    for (j, c) in sc.constellations.iter().enumerate() {
        plane_start.push(plane_of.len());
        let pol = sc.design.policies[j];
        let raan0 = rng.random::<f64>() * TAU;
        // spread the starting positions over the stationary range s+1..=s+Q
        let stagger = rng.random_range(0..pol.batch_size);
        for p in 0..c.n_planes {
            plane_of.push(j);
            plane_raan.push((raan0 + TAU * p as f64 / c.n_planes as f64).rem_euclid(TAU));
            planes.push(PlaneLedger {
                on_hand: pol.reorder_point + 1 + (p + stagger) % pol.batch_size,
                ..Default::default()
            });
        }
    }
    let geo = Geometry {
        n_parking,
        parking_phase: rng.random::<f64>() * TAU,
        plane_raan,
        drift: inp.transfers.iter().map(|t| t.relative_drift).collect(),
    };
    let slots = sc.design.batch_slots(&sc.constellations);
    let orbits = (0..n_parking)
        .map(|_| {
            let drops = preroll_drops(sc, &slots, &mut rng)?;
            Ok(ParkingLedger {
                on_hand: sc.design.policies.iter().zip(&drops).map(|(p, w)| p.order_up_to - w).collect(),
                in_transit: vec![0; m],
                drops,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lead_wait = if sc.launcher.mean_wait > 0.0 {
        Some(Exp::new(1.0 / sc.launcher.mean_wait).map_err(|e| Error::Simulation(e.to_string()))?)
    } else {
        None
    };

    let mut plane_area = vec![Area::default(); m];
    let mut parking_area = vec![Area::default(); m];
    for j in 0..m {
        let start = plane_start[j];
        let n = sc.constellations[j].n_planes as usize;
        plane_area[j].level = planes[start..start + n].iter().map(|p| p.on_hand as f64).sum();
        parking_area[j].level = orbits.iter().map(|o| o.on_hand[j] as f64).sum();
    }

    let mut eng = Engine {
        inp,
        rng,
        queue: BinaryHeap::new(),
        seq: 0,
        geo,
        plane_of,
        plane_start,
        planes,
        orbits,
        launches: Vec::new(),
        slots,
        lead_wait,
        counts: vec![ConstellationCounts::default(); m],
        plane_area,
        parking_area,
        launches_observed: 0,
        max_launch_slots: 0,
        failures_total: 0,
        replaced_total: 0,
        events: 0,
    };
    for j in 0..m {
        eng.schedule_failure(j, 0.0);
    }
    eng.run()?;
    eng.finish()
}

/// Drops since the last order after a random number of demand arrivals,
/// so each orbit starts somewhere inside its order cycle rather than at its
/// beginning. Falls back to an empty cycle if a drop count would exceed S.
fn preroll_drops(sc: &Scenario, slots: &[u32], rng: &mut ChaCha8Rng) -> Result<Vec<u32>> {
    let m = slots.len();
    let n_t = sc.time.n_t();
    let weights: Vec<f64> = sc
        .constellations
        .iter()
        .zip(&sc.design.policies)
        .map(|(c, p)| c.n_planes as f64 * plane_demand_rate(c, n_t) / p.batch_size as f64)
        .collect();
    if !weights.iter().any(|w| *w > 0.0) {
        return Ok(vec![0; m]);
    }
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::Simulation(e.to_string()))?;
    let srop = sc.design.shared.srop_slots;
    let cap = sc.launcher.capacity_slots;
    // several cycles' worth of arrivals; a uniform count randomizes the phase
    let steps = rng.random_range(0..4 * srop.max(1) as usize);
    let mut drops = vec![0u32; m];
    for _ in 0..steps {
        let j = pick.sample(rng);
        let load: u32 = drops.iter().zip(slots).map(|(w, a)| w * a).sum();
        if load + slots[j] < srop {
            drops[j] += 1;
        } else {
            drops.iter_mut().for_each(|w| *w = 0);
            if load + slots[j] > cap {
                drops[j] = 1;
            }
        }
    }
    if drops.iter().zip(&sc.design.policies).any(|(w, p)| *w > p.order_up_to) {
        drops.iter_mut().for_each(|w| *w = 0);
    }
    Ok(drops)
}

impl Engine<'_> {
    fn push(&mut self, t: f64, ev: Event) {
        self.seq += 1;
        self.queue.push(Scheduled { t, seq: self.seq, ev });
    }

    fn observed(&self, t: f64) -> bool {
        t >= self.inp.warmup
    }

    fn schedule_failure(&mut self, j: usize, now: f64) {
        let rate = self.inp.scenario.constellations[j].annual_failures() / self.inp.scenario.time.n_t();
        if rate > 0.0 {
            let dt = Exp::new(rate).expect("positive rate").sample(&mut self.rng);
            self.push(now + dt, Event::Failure { j });
        }
    }

    fn run(&mut self) -> Result<()> {
        while let Some(Scheduled { t, ev, .. }) = self.queue.pop() {
            if t > self.inp.horizon {
                break;
            }
            self.events += 1;
            match ev {
                Event::Failure { j } => self.on_failure(j, t),
                Event::Align { plane, orbit, first } => self.on_align(plane, orbit, first, t)?,
                Event::PlaneArrival { plane } => self.on_plane_arrival(plane, t),
                Event::LaunchArrival { orbit, launch } => self.on_launch_arrival(orbit, launch, t),
            }
            self.check_ledgers(&ev)?;
        }
        Ok(())
    }

    fn on_failure(&mut self, j: usize, t: f64) {
        let n = self.inp.scenario.constellations[j].n_planes as usize;
        let plane = self.plane_start[j] + self.rng.random_range(0..n);
        self.failures_total += 1;
        let obs = self.observed(t);
        if obs {
            self.counts[j].failures += 1;
        }
        let led = &mut self.planes[plane];
        if led.on_hand > 0 {
            led.on_hand -= 1;
            self.replaced_total += 1;
            if obs {
                self.counts[j].immediate_fills += 1;
            }
            self.plane_area[j].shift(t, self.inp.warmup, -1.0);
        } else {
            led.backorders += 1;
        }
        self.maybe_order(plane, t);
        self.schedule_failure(j, t);
    }

    /// Assumption: at most one order per plane is outstanding.
    fn maybe_order(&mut self, plane: usize, t: f64) {
        let j = self.plane_of[plane];
        let pol = self.inp.scenario.design.policies[j];
        let led = &mut self.planes[plane];
        if led.on_order == 0 && led.inventory_position() <= pol.reorder_point as i64 {
            led.on_order = pol.batch_size;
            if self.observed(t) {
                self.counts[j].plane_orders += 1;
            }
            let (wait, orbit) = self.inp.alignment.first_alignment(&self.geo, j, plane, t, &mut self.rng);
            self.push(t + wait, Event::Align { plane, orbit, first: true });
        }
    }

    fn on_align(&mut self, plane: usize, orbit: usize, first: bool, t: f64) -> Result<()> {
        let j = self.plane_of[plane];
        let obs = self.observed(t);
        let available = self.orbits[orbit].on_hand[j] > 0;
        if first && obs {
            self.counts[j].requests += 1;
            if available {
                self.counts[j].first_alignment_hits += 1;
            }
        }
        if !available {
            let next = self.geo.next_orbit(j, orbit);
            let period = self.geo.period(j);
            self.push(t + period, Event::Align { plane, orbit: next, first: false });
            return Ok(());
        }
        self.orbits[orbit].on_hand[j] -= 1;
        self.parking_area[j].shift(t, self.inp.warmup, -1.0);
        if obs {
            self.counts[j].withdrawals += 1;
        }
        self.register_parking_demand(orbit, j, t)?;
        let transfer = self.inp.transfers[j].transfer_time;
        self.push(t + transfer, Event::PlaneArrival { plane });
        Ok(())
    }

    /// (U, S) trigger on the slot-weighted drops since the last order.
    fn register_parking_demand(&mut self, orbit: usize, j: usize, t: f64) -> Result<()> {
        let srop = self.inp.scenario.design.shared.srop_slots;
        let cap = self.inp.scenario.launcher.capacity_slots;
        let led = &self.orbits[orbit];
        let load: u32 = led.drops.iter().zip(&self.slots).map(|(w, a)| w * a).sum();
        let a = self.slots[j];
        if load + a < srop {
            self.orbits[orbit].drops[j] += 1;
        } else if load + a <= cap {
            self.orbits[orbit].drops[j] += 1;
            self.place_launch(orbit, t)?;
        } else {
            self.place_launch(orbit, t)?;
            self.orbits[orbit].drops[j] = 1;
        }
        Ok(())
    }

    fn place_launch(&mut self, orbit: usize, t: f64) -> Result<()> {
        let contents = std::mem::replace(&mut self.orbits[orbit].drops, vec![0; self.slots.len()]);
        let slots: u32 = contents.iter().zip(&self.slots).map(|(w, a)| w * a).sum();
        if slots > self.inp.scenario.launcher.capacity_slots {
            return Err(Error::Simulation(format!(
                "launch of {slots} slots exceeds capacity {}",
                self.inp.scenario.launcher.capacity_slots
            )));
        }
        self.max_launch_slots = self.max_launch_slots.max(slots);
        for (j, &w) in contents.iter().enumerate() {
            self.orbits[orbit].in_transit[j] += w;
            if self.observed(t) {
                self.counts[j].launched_batches += w as u64;
            }
        }
        if self.observed(t) {
            self.launches_observed += 1;
        }
        let wait = self.lead_wait.map_or(0.0, |d| d.sample(&mut self.rng));
        let launch = self.launches.len();
        self.launches.push(contents);
        self.push(t + self.inp.scenario.launcher.order_processing_time + wait, Event::LaunchArrival { orbit, launch });
        Ok(())
    }

    fn on_plane_arrival(&mut self, plane: usize, t: f64) {
        let j = self.plane_of[plane];
        let led = &mut self.planes[plane];
        let received = led.on_order;
        led.on_order = 0;
        let filled = led.backorders.min(received);
        led.backorders -= filled;
        led.on_hand += received - filled;
        self.replaced_total += filled as u64;
        self.plane_area[j].shift(t, self.inp.warmup, (received - filled) as f64);
        self.maybe_order(plane, t);
    }

    fn on_launch_arrival(&mut self, orbit: usize, launch: usize, t: f64) {
        let contents = std::mem::take(&mut self.launches[launch]);
        for (j, w) in contents.into_iter().enumerate() {
            let led = &mut self.orbits[orbit];
            led.in_transit[j] -= w;
            led.on_hand[j] += w;
            if w > 0 {
                self.parking_area[j].shift(t, self.inp.warmup, w as f64);
            }
        }
    }

    fn check_ledgers(&self, ev: &Event) -> Result<()> {
        let plane = match *ev {
            Event::Failure { .. } => None,
            Event::Align { plane, .. } | Event::PlaneArrival { plane } => Some(plane),
            Event::LaunchArrival { .. } => None,
        };
        if let Some(p) = plane {
            let led = self.planes[p];
            let q = self.inp.scenario.design.policies[self.plane_of[p]].batch_size;
            if led.on_hand > 0 && led.backorders > 0 || (led.on_order != 0 && led.on_order != q) {
                return Err(Error::Simulation(format!("plane {p} ledger broken: {led:?}")));
            }
        }
        // every orbit: on-hand + in-transit = S - drops
        for (k, o) in self.orbits.iter().enumerate() {
            for (j, pol) in self.inp.scenario.design.policies.iter().enumerate() {
                if o.on_hand[j] + o.in_transit[j] + o.drops[j] != pol.order_up_to {
                    return Err(Error::Simulation(format!(
                        "parking orbit {k} ledger broken for constellation {j}: {o:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<ReplicationOutput> {
        let h = self.inp.horizon;
        let w = self.inp.warmup;
        for j in 0..self.counts.len() {
            self.plane_area[j].shift(h, w, 0.0);
            self.parking_area[j].shift(h, w, 0.0);
            self.counts[j].plane_stock_area = self.plane_area[j].area;
            self.counts[j].parking_stock_area = self.parking_area[j].area;
        }
        for (p, led) in self.planes.iter().enumerate() {
            if led.on_hand > 0 && led.backorders > 0 {
                return Err(Error::Simulation(format!("plane {p} ends with stock and backorders")));
            }
        }
        let backlog: u64 = self.planes.iter().map(|p| p.backorders as u64).sum();
        if self.failures_total != self.replaced_total + backlog {
            return Err(Error::Simulation(format!(
                "failure conservation broken: {} failures, {} replaced, {} backordered",
                self.failures_total, self.replaced_total, backlog
            )));
        }
        Ok(ReplicationOutput {
            observed: h - w,
            per_constellation: self.counts,
            launches: self.launches_observed,
            events: self.events,
            max_launch_slots: self.max_launch_slots,
        })
    }
}
