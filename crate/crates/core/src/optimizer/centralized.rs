//! Single-objective GA on total cost with constraint-domination selection.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::genome::{GeneSpace, Genome};
use super::{design_order, Assessor, Problem};
use crate::error::{invalid, Result};
use crate::evaluate::{EvaluationResult, Evaluator, Feasibility};
use crate::scenario::StrategyDesign;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population: usize,
    /// candidate evaluations, initial population included
    pub budget: u64,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// per-gene; `None` means 1 / genome length
    pub mutation_rate: Option<f64>,
    /// parents carried over unchanged under generational replacement
    pub elitism: usize,
    pub replacement: Replacement,
    /// hill-climb around each new incumbent, one integer step at a time
    pub local_search: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Replacement {
    /// children replace parents, except the `elitism` best
    Generational,
    /// parents and children compete; duplicates go to the back of the line
    Plus,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 100,
            budget: 20_000,
            tournament_size: 2,
            crossover_rate: 0.9,
            mutation_rate: None,
            elitism: 1,
            replacement: Replacement::Plus,
            local_search: true,
            seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || self.tournament_size == 0 || self.elitism >= self.population {
            return Err(invalid("population must be >= 2, tournament >= 1 and elitism < population"));
        }
        if self.budget < self.population as u64 {
            return Err(invalid(format!("budget {} is below the population size {}", self.budget, self.population)));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || self.mutation_rate.is_some_and(|r| !(0.0..=1.0).contains(&r)) {
            return Err(invalid("crossover and mutation rates must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub evaluations: u64,
    /// `None` until a feasible design has been seen
    pub incumbent_tessac: Option<f64>,
    pub incumbent_violation: f64,
    pub feasible_in_population: usize,
}

#[derive(Debug, Clone)]
pub struct CentralizedResult {
    pub design: StrategyDesign,
    pub feasibility: Feasibility,
    pub evaluation: Option<EvaluationResult>,
    pub log: Vec<GenerationLog>,
    pub evaluations: u64,
    pub distinct_designs: usize,
}

#[derive(Debug, Clone)]
struct Scored {
    genome: Genome,
    design: StrategyDesign,
    violation: f64,
    tessac: f64,
}

impl Scored {
    fn feasible(&self) -> bool {
        self.violation == 0.0
    }
}

/// Feasible before infeasible, then cost or violation, then design order.
fn rank(a: &Scored, b: &Scored) -> Ordering {
    a.violation
        .total_cmp(&b.violation)
        .then(a.tessac.total_cmp(&b.tessac))
        .then_with(|| design_order(&a.design, &b.design))
}

fn score(space: &GeneSpace, assessor: &Assessor<'_>, genomes: Vec<Genome>) -> Result<Vec<Scored>> {
    genomes
        .into_par_iter()
        .map(|genome| {
            let design = space.decode(&genome);
            let a = assessor.assess(&design)?;
            Ok(Scored {
                genome,
                design,
                violation: a.violation(),
                tessac: a.costs.as_ref().map_or(f64::INFINITY, |c| c.tessac_total),
            })
        })
        .collect()
}

/// Steepest descent over the unit-step neighbourhood until no neighbour is
/// better or the budget runs out.
fn climb(space: &GeneSpace, assessor: &Assessor<'_>, mut at: Scored, budget: u64, evaluations: &mut u64) -> Result<Scored> {
    loop {
        let mut next = space.neighbors(&at.genome);
        let room = budget.saturating_sub(*evaluations) as usize;
        if room == 0 {
            return Ok(at);
        }
        next.truncate(room);
        *evaluations += next.len() as u64;
        let best = score(space, assessor, next)?.into_iter().min_by(rank);
        match best {
            Some(b) if rank(&b, &at) == Ordering::Less => at = b,
            _ => return Ok(at),
        }
    }
}

fn plus_survivors(parents: Vec<Scored>, children: Vec<Scored>, n: usize) -> Vec<Scored> {
    let mut pool = parents;
    pool.extend(children);
    pool.sort_by(rank);
    let (mut unique, mut repeats): (Vec<Scored>, Vec<Scored>) = (Vec::with_capacity(n), Vec::new());
    for s in pool {
        if unique.last().is_some_and(|u: &Scored| u.design == s.design) {
            repeats.push(s);
        } else {
            unique.push(s);
        }
    }
    unique.extend(repeats);
    unique.truncate(n);
    unique
}

fn tournament<'p>(pop: &'p [Scored], k: usize, rng: &mut ChaCha8Rng) -> &'p Scored {
    (0..k)
        .map(|_| &pop[rng.random_range(0..pop.len())])
        .min_by(|a, b| rank(a, b))
        .expect("k >= 1")
}

pub fn optimize_centralized(problem: &Problem, evaluator: &Evaluator, cfg: &GaConfig) -> Result<CentralizedResult> {
    problem.validate()?;
    cfg.validate()?;
    let space = GeneSpace::new(problem, false);
    let assessor = Assessor::new(problem, evaluator);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rate = cfg.mutation_rate.unwrap_or(1.0 / space.len() as f64);
    let n = cfg.population;

    let initial: Vec<Genome> = (0..n).map(|_| space.random(&mut rng)).collect();
    let mut pop = score(&space, &assessor, initial)?;
    pop.sort_by(rank);
    let mut evaluations = n as u64;
    let mut incumbent = pop[0].clone();
    let mut log = vec![entry(0, evaluations, &incumbent, &pop)];

    let offspring = match cfg.replacement {
        Replacement::Generational => n - cfg.elitism,
        Replacement::Plus => n,
    };
    let mut generation = 0;
    while evaluations + offspring as u64 <= cfg.budget {
        generation += 1;
        let mut children = Vec::with_capacity(offspring);
        while children.len() < offspring {
            let a = tournament(&pop, cfg.tournament_size, &mut rng).genome.clone();
            let b = tournament(&pop, cfg.tournament_size, &mut rng).genome.clone();
            let (mut c, mut d) = if rng.random::<f64>() < cfg.crossover_rate {
                space.uniform_crossover(&a, &b, &mut rng)
            } else {
                (a, b)
            };
            space.mutate(&mut c, rate, 0.1, &mut rng);
            space.mutate(&mut d, rate, 0.1, &mut rng);
            children.push(c);
            if children.len() < offspring {
                children.push(d);
            }
        }
        let scored = score(&space, &assessor, children)?;
        evaluations += offspring as u64;
        pop = match cfg.replacement {
            Replacement::Generational => {
                let mut next: Vec<Scored> = pop[..cfg.elitism].to_vec();
                next.extend(scored);
                next.sort_by(rank);
                next
            }
            Replacement::Plus => plus_survivors(pop, scored, n),
        };
        if rank(&pop[0], &incumbent) == Ordering::Less {
            incumbent = pop[0].clone();
            if cfg.local_search {
                let climbed = climb(&space, &assessor, incumbent.clone(), cfg.budget, &mut evaluations)?;
                if rank(&climbed, &incumbent) == Ordering::Less {
                    incumbent = climbed.clone();
                    pop.pop();
                    pop.push(climbed);
                    pop.sort_by(rank);
                }
            }
        }
        log.push(entry(generation, evaluations, &incumbent, &pop));
        log::debug!(
            "generation {generation}: incumbent {:?} (violation {:.3e})",
            log.last().and_then(|l| l.incumbent_tessac),
            incumbent.violation
        );
    }

    // re-verify the incumbent from scratch
    let (feasibility, evaluation) = evaluator.assess(&problem.scenario_for(&incumbent.design), &problem.thresholds)?;
    if !feasibility.is_feasible() {
        log::warn!("no feasible design within the budget; best candidate: {}", feasibility.describe());
    }
    Ok(CentralizedResult {
        design: incumbent.design,
        feasibility,
        evaluation,
        log,
        evaluations,
        distinct_designs: assessor.cached(),
    })
}

fn entry(generation: usize, evaluations: u64, incumbent: &Scored, pop: &[Scored]) -> GenerationLog {
    GenerationLog {
        generation,
        evaluations,
        incumbent_tessac: incumbent.feasible().then_some(incumbent.tessac),
        incumbent_violation: incumbent.violation,
        feasible_in_population: pop.iter().filter(|s| s.feasible()).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::DesignBounds;
    use crate::scenario::{reference_design, reference_scenario, ServiceThresholds};

    fn problem(bounds: DesignBounds) -> Problem {
        Problem {
            base: reference_scenario(),
            bounds,
            thresholds: ServiceThresholds::default(),
        }
    }

    #[test]
    fn single_point_bounds_return_that_point() {
        let d = reference_design();
        let ev = Evaluator::new(Default::default()).unwrap();
        // the box collapses to one point only when all policies agree
        let mut d2 = d.clone();
        for p in &mut d2.policies {
            *p = d.policies[0];
        }
        let p = problem(DesignBounds::point(&d2));
        let r = optimize_centralized(&p, &ev, &GaConfig { population: 4, budget: 12, ..Default::default() }).unwrap();
        assert_eq!(r.design, d2);
        assert_eq!(r.distinct_designs, 1);
    }

    #[test]
    fn incumbent_is_monotone_and_seeded() {
        let ev = Evaluator::new(Default::default()).unwrap();
        let p = problem(DesignBounds::reference());
        let cfg = GaConfig { population: 20, budget: 400, seed: 9, ..Default::default() };
        let a = optimize_centralized(&p, &ev, &cfg).unwrap();
        let b = optimize_centralized(&p, &ev, &cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.design, b.design);
        assert!(a.evaluations <= 400);
        for w in a.log.windows(2) {
            let (x, y) = (&w[0], &w[1]);
            assert!(y.incumbent_violation <= x.incumbent_violation);
            if let (Some(p), Some(q)) = (x.incumbent_tessac, y.incumbent_tessac) {
                assert!(q <= p);
            }
        }
    }

    #[test]
    fn budget_below_population_is_rejected() {
        let ev = Evaluator::new(Default::default()).unwrap();
        let p = problem(DesignBounds::reference());
        assert!(optimize_centralized(&p, &ev, &GaConfig { budget: 10, ..Default::default() }).is_err());
    }
}
