//! Per-operator cost front (NSGA-II with constraint domination) and the
//! weighted-sum agreement picked from it.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::genome::{GeneSpace, Genome};
use super::{design_order, dominates, Assessor, Problem};
use crate::error::{invalid, Error, Result};
use crate::evaluate::{Condition, Evaluator};
use crate::scenario::StrategyDesign;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NsgaConfig {
    pub population: usize,
    pub budget: u64,
    pub crossover_rate: f64,
    pub mutation_rate: Option<f64>,
    /// std-dev of the Gaussian kick on fraction genes
    pub fraction_sigma: f64,
    pub seed: u64,
}

impl Default for NsgaConfig {
    fn default() -> Self {
        NsgaConfig {
            population: 100,
            budget: 20_000,
            crossover_rate: 0.9,
            mutation_rate: None,
            fraction_sigma: 0.1,
            seed: 1,
        }
    }
}

impl NsgaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(invalid("population must be at least 4"));
        }
        if self.budget < self.population as u64 {
            return Err(invalid(format!("budget {} is below the population size {}", self.budget, self.population)));
        }
        if !(self.fraction_sigma > 0.0) {
            return Err(invalid("fraction_sigma must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontSolution {
    /// carries the launch-cost fractions
    pub design: StrategyDesign,
    pub tessac: Vec<f64>,
    pub tessac_total: f64,
    pub flags: [bool; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontLog {
    pub generation: usize,
    pub evaluations: u64,
    pub feasible_in_population: usize,
    pub front_size: usize,
    pub best_total: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DecentralizedResult {
    pub front: Vec<FrontSolution>,
    pub log: Vec<FrontLog>,
    pub evaluations: u64,
    pub distinct_designs: usize,
}

#[derive(Debug, Clone)]
struct Member {
    genome: Genome,
    design: StrategyDesign,
    objectives: Vec<f64>,
    violation: f64,
    flags: [bool; 5],
    over_ref: Vec<bool>,
    rank: usize,
    crowding: f64,
}

fn constrained_dominates(a: &Member, b: &Member) -> bool {
    match (a.violation == 0.0, b.violation == 0.0) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => dominates(&a.objectives, &b.objectives),
    }
}

fn score(space: &GeneSpace, assessor: &Assessor<'_>, refs: &[f64], genomes: Vec<Genome>) -> Result<Vec<Member>> {
    genomes
        .into_par_iter()
        .map(|genome| {
            let design = space.decode(&genome);
            let a = assessor.assess(&design)?;
            let y = design.launch_cost_fractions.clone().expect("fraction genes present");
            let objectives = match &a.costs {
                Some(c) => c.with_fractions(&y)?.tessac_per_constellation,
                None => vec![f64::INFINITY; refs.len()],
            };
            let over_ref: Vec<bool> = objectives.iter().zip(refs).map(|(f, r)| f > r).collect();
            let excess: f64 = objectives
                .iter()
                .zip(refs)
                .map(|(f, r)| if f.is_finite() { ((f - r) / r).max(0.0) } else { 0.0 })
                .sum();
            Ok(Member {
                genome,
                design,
                objectives,
                violation: a.violation() + excess,
                flags: a.feasibility.flags(),
                over_ref,
                rank: 0,
                crowding: 0.0,
            })
        })
        .collect()
}

/// Assigns ranks and crowding distances; returns the fronts as index lists.
fn sort_fronts(pop: &mut [Member]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for k in (i + 1)..n {
            if constrained_dominates(&pop[i], &pop[k]) {
                dominating[i].push(k);
                dominated_by[k] += 1;
            } else if constrained_dominates(&pop[k], &pop[i]) {
                dominating[k].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            pop[i].rank = fronts.len();
            for &k in &dominating[i] {
                dominated_by[k] -= 1;
                if dominated_by[k] == 0 {
                    next.push(k);
                }
            }
        }
        next.sort_unstable();
        crowd(pop, &current);
        fronts.push(current);
        current = next;
    }
    fronts
}

fn crowd(pop: &mut [Member], front: &[usize]) {
    for &i in front {
        pop[i].crowding = 0.0;
    }
    let m = pop[front[0]].objectives.len();
    for obj in 0..m {
        let mut order = front.to_vec();
        order.sort_by(|&a, &b| pop[a].objectives[obj].total_cmp(&pop[b].objectives[obj]).then(a.cmp(&b)));
        let lo = pop[order[0]].objectives[obj];
        let hi = pop[*order.last().unwrap()].objectives[obj];
        pop[order[0]].crowding = f64::INFINITY;
        pop[*order.last().unwrap()].crowding = f64::INFINITY;
        let span = hi - lo;
        if !(span.is_finite() && span > 0.0) {
            continue;
        }
        for w in 1..order.len().saturating_sub(1) {
            let gap = pop[order[w + 1]].objectives[obj] - pop[order[w - 1]].objectives[obj];
            pop[order[w]].crowding += gap / span;
        }
    }
}

fn crowded_order(a: &Member, b: &Member) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then(b.crowding.total_cmp(&a.crowding))
        .then_with(|| design_order(&a.design, &b.design))
}

fn survivors(mut pool: Vec<Member>, n: usize) -> Vec<Member> {
    sort_fronts(&mut pool);
    pool.sort_by(crowded_order);
    pool.truncate(n);
    pool
}

pub fn optimize_decentralized_front(
    problem: &Problem,
    evaluator: &Evaluator,
    refs: &[f64],
    cfg: &NsgaConfig,
) -> Result<DecentralizedResult> {
    problem.validate()?;
    cfg.validate()?;
    let m = problem.base.m();
    if m < 2 {
        return Err(invalid("the decentralized front needs at least two operators"));
    }
    if refs.len() != m || refs.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid(format!("need {m} positive reference costs")));
    }
    let space = GeneSpace::new(problem, true);
    let assessor = Assessor::new(problem, evaluator);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rate = cfg.mutation_rate.unwrap_or(1.0 / space.len() as f64);
    let n = cfg.population;

    let initial: Vec<Genome> = (0..n).map(|_| space.random(&mut rng)).collect();
    let mut pop = survivors(score(&space, &assessor, refs, initial)?, n);
    let mut evaluations = n as u64;
    let mut log = vec![front_log(0, evaluations, &pop)];
    let mut generation = 0;
    while evaluations + n as u64 <= cfg.budget {
        generation += 1;
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let pick = |rng: &mut ChaCha8Rng| {
                let a = &pop[rng.random_range(0..n)];
                let b = &pop[rng.random_range(0..n)];
                if crowded_order(a, b) == Ordering::Greater { b } else { a }
            };
            let a = pick(&mut rng).genome.clone();
            let b = pick(&mut rng).genome.clone();
            let (mut c, mut d) = if rng.random::<f64>() < cfg.crossover_rate {
                space.uniform_crossover(&a, &b, &mut rng)
            } else {
                (a, b)
            };
            space.mutate(&mut c, rate, cfg.fraction_sigma, &mut rng);
            space.mutate(&mut d, rate, cfg.fraction_sigma, &mut rng);
            children.push(c);
            if children.len() < n {
                children.push(d);
            }
        }
        let mut pool = pop;
        pool.extend(score(&space, &assessor, refs, children)?);
        evaluations += n as u64;
        pop = survivors(pool, n);
        log.push(front_log(generation, evaluations, &pop));
    }

    let mut front: Vec<&Member> = pop.iter().filter(|p| p.rank == 0 && p.violation == 0.0).collect();
    if front.is_empty() {
        return Err(Error::Optimization(binding_constraints(&pop, refs)));
    }
    front.sort_by(|a, b| design_order(&a.design, &b.design));
    front.dedup_by(|a, b| a.design == b.design);

    // re-verify every member independently of the search cache
    let mut out = Vec::with_capacity(front.len());
    for p in front {
        let (f, eval) = evaluator.assess(&problem.scenario_for(&p.design), &problem.thresholds)?;
        let eval = eval.filter(|_| f.is_feasible()).ok_or_else(|| {
            Error::Optimization(format!("front member failed re-verification: {}", f.describe()))
        })?;
        let tessac = eval.costs.tessac_per_constellation.clone();
        if tessac.iter().zip(refs).any(|(t, r)| t > r) {
            return Err(Error::Optimization("front member exceeds a reference cost on re-verification".into()));
        }
        out.push(FrontSolution {
            design: p.design.clone(),
            tessac,
            tessac_total: eval.costs.tessac_total,
            flags: f.flags(),
        });
    }
    Ok(DecentralizedResult {
        front: out,
        log,
        evaluations,
        distinct_designs: assessor.cached(),
    })
}

fn front_log(generation: usize, evaluations: u64, pop: &[Member]) -> FrontLog {
    let feasible: Vec<&Member> = pop.iter().filter(|p| p.violation == 0.0).collect();
    FrontLog {
        generation,
        evaluations,
        feasible_in_population: feasible.len(),
        front_size: feasible.iter().filter(|p| p.rank == 0).count(),
        best_total: feasible.iter().map(|p| p.objectives.iter().sum::<f64>()).min_by(|a, b| a.total_cmp(b)),
    }
}

fn binding_constraints(pop: &[Member], refs: &[f64]) -> String {
    let mut parts: Vec<String> = Condition::ALL
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let n = pop.iter().filter(|p| !p.flags[k]).count();
            format!("condition {} ({}): {n}", c.number(), c.label())
        })
        .collect();
    for (j, r) in refs.iter().enumerate() {
        let n = pop.iter().filter(|p| p.over_ref[j]).count();
        parts.push(format!("TESSAC_{} > {r}: {n}", j + 1));
    }
    format!("no feasible solution within the reference costs; violations in the final population: {}", parts.join(", "))
}

/// Front member minimizing Σ β_j·TESSAC_j; ties go to the smallest design.
pub fn select_agreement<'f>(front: &'f [FrontSolution], weights: &[f64]) -> Result<&'f FrontSolution> {
    if front.is_empty() {
        return Err(invalid("cannot select from an empty front"));
    }
    let m = front[0].tessac.len();
    if weights.len() != m || weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("weights must be {m} non-negative numbers summing to 1")));
    }
    let value = |s: &FrontSolution| s.tessac.iter().zip(weights).map(|(t, w)| t * w).sum::<f64>();
    Ok(front
        .iter()
        .min_by(|a, b| value(a).total_cmp(&value(b)).then_with(|| design_order(&a.design, &b.design)))
        .expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::DesignBounds;
    use crate::scenario::{reference_design, reference_scenario, ServiceThresholds};

    fn sol(t: [f64; 2], u: u32) -> FrontSolution {
        let mut d = reference_design();
        d.shared.srop_slots = u;
        FrontSolution { design: d, tessac: t.to_vec(), tessac_total: t[0] + t[1], flags: [true; 5] }
    }

    #[test]
    fn agreement_selection() {
        let front = vec![sol([1.0, 5.0], 200), sol([3.0, 3.0], 201), sol([5.0, 1.0], 202)];
        assert_eq!(select_agreement(&front, &[1.0, 0.0]).unwrap().tessac, vec![1.0, 5.0]);
        assert_eq!(select_agreement(&front, &[0.0, 1.0]).unwrap().tessac, vec![5.0, 1.0]);
        // exact tie between all three: smallest design wins
        assert_eq!(select_agreement(&front, &[0.5, 0.5]).unwrap().design.shared.srop_slots, 200);
        assert_eq!(select_agreement(&front[1..2], &[0.9, 0.1]).unwrap().tessac, vec![3.0, 3.0]);
        assert!(select_agreement(&[], &[0.5, 0.5]).is_err());
        assert!(select_agreement(&front, &[0.5, 0.6]).is_err());
    }

    #[test]
    fn small_front_is_non_dominated_and_within_refs() {
        let p = Problem {
            base: reference_scenario(),
            bounds: DesignBounds::reference(),
            thresholds: ServiceThresholds::default(),
        };
        let ev = Evaluator::new(Default::default()).unwrap();
        // loose ceilings so a tiny budget still finds feasible designs
        let refs = [2000.0, 2000.0, 2000.0];
        let cfg = NsgaConfig { population: 24, budget: 24 * 30, seed: 4, ..Default::default() };
        let r = optimize_decentralized_front(&p, &ev, &refs, &cfg).unwrap();
        assert!(!r.front.is_empty());
        for a in &r.front {
            for (t, r) in a.tessac.iter().zip(&refs) {
                assert!(t <= r);
            }
            for b in &r.front {
                assert!(!dominates(&a.tessac, &b.tessac));
            }
        }
        let again = optimize_decentralized_front(&p, &ev, &refs, &cfg).unwrap();
        assert_eq!(r.front, again.front);
    }

    #[test]
    fn impossible_refs_report_binding_constraints() {
        let p = Problem {
            base: reference_scenario(),
            bounds: DesignBounds::reference(),
            thresholds: ServiceThresholds::default(),
        };
        let ev = Evaluator::new(Default::default()).unwrap();
        let cfg = NsgaConfig { population: 8, budget: 16, ..Default::default() };
        match optimize_decentralized_front(&p, &ev, &[1.0, 1.0, 1.0], &cfg) {
            Err(Error::Optimization(msg)) => assert!(msg.contains("TESSAC_1 > 1")),
            other => panic!("expected a diagnostic, got {other:?}"),
        }
    }
}
