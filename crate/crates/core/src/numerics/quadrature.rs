//! Gauss–Legendre and Gauss–Laguerre rules.
//!
//! Nodes are polished by Newton iteration on the three-term recurrences;
//! Laguerre starting guesses come from the Golub–Welsch eigenvalues of the
//! Jacobi matrix, which keeps high orders from skipping roots. Rules are
//! cached per order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn cache(kind: u8) -> &'static Mutex<HashMap<usize, Arc<Rule>>> {
    static LEGENDRE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    static LAGUERRE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    match kind {
        0 => LEGENDRE.get_or_init(Default::default),
        _ => LAGUERRE.get_or_init(Default::default),
    }
}

/// Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    assert!(n >= 1);
    let mut map = cache(0).lock().unwrap();
    map.entry(n)
        .or_insert_with(|| Arc::new(build_legendre(n)))
        .clone()
}

/// Gauss–Laguerre rule for ∫_0^∞ f(x) e^{-x} dx.
pub fn gauss_laguerre(n: usize) -> Arc<Rule> {
    assert!(n >= 1);
    let mut map = cache(1).lock().unwrap();
    map.entry(n)
        .or_insert_with(|| Arc::new(build_laguerre(n)))
        .clone()
}

fn build_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Returns (L_n(x), L_{n-1}(x)).
fn laguerre(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for j in 1..=n {
        let j = j as f64;
        let next = ((2.0 * j - 1.0 - x) * p - (j - 1.0) * p_prev) / j;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

fn build_laguerre(n: usize) -> Rule {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * i as f64 + 1.0
        } else if i + 1 == j {
            (i + 1) as f64
        } else if j + 1 == i {
            (j + 1) as f64
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigen().eigenvalues.iter().copied().collect();
    guesses.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let nf = n as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for mut z in guesses {
        for _ in 0..100 {
            let (p, p_prev) = laguerre(n, z);
            let dp = nf * (p - p_prev) / z;
            let dz = p / dp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (p, p_prev) = laguerre(n, z);
        let dp = nf * (p - p_prev) / z;
        let w = -1.0 / (dp * nf * p_prev);
        nodes.push(z);
        weights.push(if w.is_finite() { w } else { 0.0 });
    }
    Rule { nodes, weights }
}

impl Rule {
    /// Integrate `f` over [lo, hi] with a Legendre rule.
    pub fn integrate_interval(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(16);
        // degree 31 is the exactness limit for 16 nodes
        let val = rule.integrate_interval(0.0, 2.0, |x| x.powi(31));
        assert_relative_eq!(val, 2f64.powi(32) / 32.0, max_relative = 1e-12);
        let s: f64 = rule.weights.iter().sum();
        assert_relative_eq!(s, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_smooth_integral() {
        for n in [8, 64, 128] {
            let rule = gauss_legendre(n);
            let v = rule.integrate_interval(0.0, std::f64::consts::PI, f64::sin);
            assert_relative_eq!(v, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn laguerre_moments_are_factorials() {
        for n in [8, 32, 64, 128, 256] {
            let rule = gauss_laguerre(n);
            let mut fact = 1.0;
            for k in 0..12 {
                if k > 0 {
                    fact *= k as f64;
                }
                let m: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(k))
                    .sum();
                assert_relative_eq!(m, fact, max_relative = 1e-10);
            }
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn laguerre_exponential_integrand() {
        // ∫ e^{-x} e^{-x/3} dx = 3/4
        let rule = gauss_laguerre(32);
        let v: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * (-x / 3.0).exp())
            .sum();
        assert_relative_eq!(v, 0.75, max_relative = 1e-12);
    }
}
