//! The (U, S) order-cycle chain and its stationary solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::registry::Registry;

use super::space::StateSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Demand recorded, no order yet.
    Advance,
    /// Joint order including the triggering demand; chain restarts at 0.
    JointReset,
    /// Triggering demand would overflow the launcher; it carries over.
    Overflow,
}

/// Embedded jump chain of the parking-orbit drop process. Each step is one
/// demand arrival; constellation j arrives with probability λ_j/λ.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    space: StateSpace,
    probs: Vec<f64>,
    succ: Vec<u32>,
}

impl MarkovModel {
    /// `rates` may be in any common unit; only their ratios enter the chain.
    pub fn new(space: StateSpace, rates: &[f64]) -> Result<Self> {
        let m = space.m();
        if rates.len() != m {
            return Err(invalid(format!("{} rates for {m} constellations", rates.len())));
        }
        if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(invalid("demand rates must be finite and >= 0"));
        }
        let total: f64 = rates.iter().sum();
        let probs: Vec<f64> = if total > 0.0 {
            rates.iter().map(|r| r / total).collect()
        } else {
            vec![1.0 / m as f64; m]
        };

        let n = space.len();
        let mut succ = vec![0u32; n * m];
        let a = space.batch().to_vec();
        let u = space.srop();
        let cap = space.capacity();
        let units: Vec<Option<usize>> = (0..m).map(|j| space.unit_index(j)).collect();
        let zero = space.zero_index();
        let mut next = vec![0u32; m];
        for idx in 0..n {
            let w = space.state(idx);
            let load = space.load(idx);
            for j in 0..m {
                let new_load = load + a[j];
                let target = if new_load < u {
                    if j == m - 1 {
                        Some(idx + 1)
                    } else {
                        next.copy_from_slice(w);
                        next[j] += 1;
                        space.index_of(&next)
                    }
                } else if new_load <= cap {
                    zero
                } else {
                    units[j]
                };
                let target = target.ok_or_else(|| {
                    let mut to = w.to_vec();
                    if new_load < u {
                        to[j] += 1;
                    } else {
                        to.iter_mut().for_each(|x| *x = 0);
                        if new_load > cap {
                            to[j] = 1;
                        }
                    }
                    Error::TargetOutsideStateSpace { from: w.to_vec(), to }
                })?;
                succ[idx * m + j] = target as u32;
            }
        }
        Ok(MarkovModel { space, probs, succ })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn m(&self) -> usize {
        self.space.m()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn outcome(&self, idx: usize, j: usize) -> Outcome {
        let new_load = self.space.load(idx) + self.space.batch()[j];
        if new_load < self.space.srop() {
            Outcome::Advance
        } else if new_load <= self.space.capacity() {
            Outcome::JointReset
        } else {
            Outcome::Overflow
        }
    }

    pub fn successor(&self, idx: usize, j: usize) -> usize {
        self.succ[idx * self.m() + j] as usize
    }

    /// Row of P with same-target probabilities merged, sorted by column.
    pub fn row(&self, idx: usize) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(self.m());
        for j in 0..self.m() {
            if self.probs[j] == 0.0 {
                continue;
            }
            let t = self.successor(idx, j);
            match row.iter_mut().find(|(c, _)| *c == t) {
                Some(e) => e.1 += self.probs[j],
                None => row.push((t, self.probs[j])),
            }
        }
        row.sort_by_key(|e| e.0);
        row
    }

    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            for (c, v) in self.row(i) {
                p[(i, c)] += v;
            }
        }
        p
    }

    /// out = x P
    pub fn push_forward(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let m = self.m();
        for (idx, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for j in 0..m {
                out[self.succ[idx * m + j] as usize] += mass * self.probs[j];
            }
        }
    }

    /// ‖πP − π‖_∞
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut next = vec![0.0; pi.len()];
        self.push_forward(pi, &mut next);
        next.iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Regeneration states: 0 and every e_j that is retained.
    fn regeneration_states(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.space.zero_index().into_iter().collect();
        for j in 0..self.m() {
            if let Some(i) = self.space.unit_index(j) {
                if !r.contains(&i) {
                    r.push(i);
                }
            }
        }
        r
    }
}

pub trait StationarySolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, model: &MarkovModel) -> Result<Vec<f64>>;
}

pub const RESIDUAL_TOL: f64 = 1e-10;

fn normalize(mut pi: Vec<f64>) -> Result<Vec<f64>> {
    for v in pi.iter_mut() {
        if *v < 0.0 && *v > -1e-13 {
            *v = 0.0;
        }
    }
    if pi.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Stationary("solution has negative or non-finite entries".into()));
    }
    let s: f64 = pi.iter().sum();
    if !(s > 0.0) {
        return Err(Error::Stationary("solution has zero mass".into()));
    }
    pi.iter_mut().for_each(|v| *v /= s);
    Ok(pi)
}

/// Solve ν = νK, Σν = 1 for a small row-stochastic K.
fn small_stationary(k: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = k.nrows();
    let mut a = k.transpose() - DMatrix::identity(n, n);
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b).ok_or_else(|| {
        Error::Stationary(format!(
            "singular {n}x{n} system; the chain has more than one recurrent class"
        ))
    })
}

/// Renewal decomposition. Every joint order restarts the chain at 0 or at
/// some e_j; between restarts the drop vector only grows, so lexicographic
/// order is a topological order and visit probabilities come from one
/// forward pass per restart state.
#[derive(Debug, Default, Clone, Copy)]
pub struct RegenerativeSolver;

impl RegenerativeSolver {
    /// Push `start` through one order cycle. Returns per-state visit
    /// expectations and, per regeneration state, the mass exiting into it.
    fn sweep(model: &MarkovModel, start: &[(usize, f64)], regen: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let n = model.len();
        let m = model.m();
        let probs = model.probs();
        let mut visits = vec![0.0; n];
        let mut exits = vec![0.0; regen.len()];
        let first = start.iter().map(|s| s.0).min().unwrap_or(0);
        for &(i, v) in start {
            visits[i] += v;
        }
        for idx in first..n {
            let mass = visits[idx];
            if mass == 0.0 {
                continue;
            }
            for j in 0..m {
                let flow = mass * probs[j];
                if flow == 0.0 {
                    continue;
                }
                let t = model.succ[idx * m + j] as usize;
                if model.outcome(idx, j) == Outcome::Advance {
                    visits[t] += flow;
                } else {
                    let r = regen.iter().position(|&x| x == t).expect("exit targets are regeneration states");
                    exits[r] += flow;
                }
            }
        }
        (visits, exits)
    }
}

impl StationarySolver for RegenerativeSolver {
    fn name(&self) -> &'static str {
        "regenerative"
    }

    fn solve(&self, model: &MarkovModel) -> Result<Vec<f64>> {
        let regen = model.regeneration_states();
        let r = regen.len();
        let mut k = DMatrix::zeros(r, r);
        for (row, &start) in regen.iter().enumerate() {
            let (_, exits) = Self::sweep(model, &[(start, 1.0)], &regen);
            for (c, e) in exits.into_iter().enumerate() {
                k[(row, c)] = e;
            }
        }
        let nu = small_stationary(&k)?;
        let start: Vec<(usize, f64)> = regen
            .iter()
            .zip(nu.iter())
            .map(|(&i, &v)| (i, v.max(0.0)))
            .collect();
        let (visits, _) = Self::sweep(model, &start, &regen);
        normalize(visits)
    }
}

/// Direct LU on Pᵀπ = π with one equation replaced by Σπ = 1.
#[derive(Debug, Clone, Copy)]
pub struct DenseSolver {
    pub max_states: usize,
}

impl Default for DenseSolver {
    fn default() -> Self {
        DenseSolver { max_states: 5000 }
    }
}

impl StationarySolver for DenseSolver {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn solve(&self, model: &MarkovModel) -> Result<Vec<f64>> {
        let n = model.len();
        if n > self.max_states {
            return Err(Error::StateSpaceTooLarge { size: n, cap: self.max_states });
        }
        let p = model.dense_matrix();
        let pi = small_stationary(&p)?;
        normalize(pi.iter().copied().collect())
    }
}

/// Iterates the lazy chain (I + P)/2, which has the same stationary
/// distribution and is aperiodic even when P is not.
#[derive(Debug, Clone, Copy)]
pub struct PowerSolver {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerSolver {
    fn default() -> Self {
        PowerSolver { tol: 1e-14, max_iter: 2_000_000 }
    }
}

impl StationarySolver for PowerSolver {
    fn name(&self) -> &'static str {
        "power"
    }

    fn solve(&self, model: &MarkovModel) -> Result<Vec<f64>> {
        let n = model.len();
        let mut x = vec![1.0 / n as f64; n];
        let mut px = vec![0.0; n];
        for _ in 0..self.max_iter {
            model.push_forward(&x, &mut px);
            let mut delta = 0.0;
            for (xi, pi) in x.iter_mut().zip(&px) {
                let next = 0.5 * (*xi + pi);
                delta += (next - *xi).abs();
                *xi = next;
            }
            if delta < self.tol {
                return normalize(x);
            }
        }
        Err(Error::Stationary(format!(
            "power iteration did not reach {} in {} sweeps",
            self.tol, self.max_iter
        )))
    }
}

pub fn solver_registry() -> Registry<dyn StationarySolver> {
    let mut r: Registry<dyn StationarySolver> = Registry::new("stationary solver", "regenerative");
    r.register("regenerative", || Box::new(RegenerativeSolver));
    r.register("dense", || Box::new(DenseSolver::default()));
    r.register("power", || Box::new(PowerSolver::default()));
    r
}

/// Solve and check the balance residual.
pub fn stationary_distribution(model: &MarkovModel, solver: &dyn StationarySolver) -> Result<Vec<f64>> {
    let pi = solver.solve(model)?;
    let res = model.residual(&pi);
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::Stationary(format!(
            "{} solver left residual {res:.3e} on {} states (batches {:?}, U = {}, A = {})",
            solver.name(),
            model.len(),
            model.space().batch(),
            model.space().srop(),
            model.space().capacity()
        )));
    }
    Ok(pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parking::space::DEFAULT_STATE_CAP;
    use approx::assert_relative_eq;

    fn model(a: &[u32], u: u32, cap: u32, rates: &[f64]) -> MarkovModel {
        MarkovModel::new(StateSpace::enumerate(a, u, cap, DEFAULT_STATE_CAP).unwrap(), rates).unwrap()
    }

    #[test]
    fn alternating_chain() {
        let mc = model(&[1], 2, 2, &[0.3]);
        let p = mc.dense_matrix();
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        for s in solver_registry().names() {
            let pi = stationary_distribution(&mc, &*solver_registry().create(s).unwrap()).unwrap();
            assert_relative_eq!(pi[0], 0.5, epsilon = 1e-12);
            assert_relative_eq!(pi[1], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_type_hand_trace() {
        let mc = model(&[1, 2], 5, 5, &[1.0, 2.0]);
        let s = mc.space();
        let at = |w: &[u32]| s.index_of(w).unwrap();
        // (0,2) + type 2 → load 6 > A → carry over to e_2
        assert_eq!(mc.outcome(at(&[0, 2]), 1), Outcome::Overflow);
        assert_eq!(mc.successor(at(&[0, 2]), 1), at(&[0, 1]));
        // (0,2) + type 1 → load 5 = U ≤ A → reset
        assert_eq!(mc.outcome(at(&[0, 2]), 0), Outcome::JointReset);
        assert_eq!(mc.successor(at(&[0, 2]), 0), at(&[0, 0]));
        assert_eq!(mc.successor(at(&[1, 1]), 0), at(&[2, 1]));
        let p = mc.dense_matrix();
        for i in 0..mc.len() {
            assert_relative_eq!(p.row(i).sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn solvers_agree() {
        for (a, u, cap, rates) in [
            (vec![1u32, 2], 5u32, 5u32, vec![1.0, 2.0]),
            (vec![2, 3, 5], 30, 32, vec![0.2, 0.5, 0.3]),
            (vec![3, 4], 20, 20, vec![0.9, 0.1]),
            (vec![5, 10, 20], 60, 60, vec![0.1, 0.3, 0.6]),
        ] {
            let mc = model(&a, u, cap, &rates);
            let reference = stationary_distribution(&mc, &DenseSolver::default()).unwrap();
            for solver in [&RegenerativeSolver as &dyn StationarySolver, &PowerSolver::default()] {
                let pi = stationary_distribution(&mc, solver).unwrap();
                for (x, y) in pi.iter().zip(&reference) {
                    assert!((x - y).abs() < 1e-9, "{} vs dense: {x} {y}", solver.name());
                }
            }
        }
    }

    #[test]
    fn deterministic_cycle_is_uniform() {
        for k in [2u32, 5, 17] {
            let mc = model(&[1], k, k + 3, &[0.7]);
            let pi = stationary_distribution(&mc, &RegenerativeSolver).unwrap();
            for v in pi {
                assert!((v - 1.0 / k as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pruned_zero_chain_solves() {
        // every order overflows A, so the chain cycles through e_j only
        let mc = model(&[4, 5], 6, 7, &[0.5, 0.5]);
        assert!(mc.space().zero_pruned());
        let pi = stationary_distribution(&mc, &RegenerativeSolver).unwrap();
        let dense = stationary_distribution(&mc, &DenseSolver::default()).unwrap();
        for (x, y) in pi.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_solver_lists_alternatives() {
        let err = solver_registry().create("qr").err().unwrap().to_string();
        assert!(err.contains("dense") && err.contains("power") && err.contains("regenerative"));
    }
}
