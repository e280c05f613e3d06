//! Truncated Poisson probability tables.
//!
//! Terms are generated outward from the mode with the ratio recurrence
//! `p(k+1) = p(k)·μ/(k+1)`, so large means never underflow at `p(0)`.
//! The window is cut where the omitted mass on each side is below half
//! the tail tolerance.

use statrs::function::gamma::ln_gamma;

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PoissonTerms {
    mean: f64,
    first: usize,
    pmf: Vec<f64>,
    /// upper[i] = P(D >= first + i)
    upper: Vec<f64>,
}

impl PoissonTerms {
    pub fn new(mean: f64, tail_tol: f64) -> Self {
        assert!(mean.is_finite() && mean >= 0.0, "Poisson mean must be finite and >= 0");
        if mean == 0.0 {
            return PoissonTerms {
                mean,
                first: 0,
                pmf: vec![1.0],
                upper: vec![1.0],
            };
        }
        let half = 0.5 * tail_tol.max(f64::MIN_POSITIVE);
        let mode = mean.floor() as usize;
        let p_mode = (-mean + mode as f64 * mean.ln() - ln_gamma(mode as f64 + 1.0)).exp();

        let mut below = Vec::new();
        let mut p = p_mode;
        let mut k = mode;
        while k > 0 {
            let ratio = k as f64 / mean;
            // mass left below k-1 is bounded by a geometric series in `ratio`
            let next = p * ratio;
            below.push(next);
            p = next;
            k -= 1;
            let r = (k as f64 / mean).min(1.0);
            if r < 1.0 && p * r / (1.0 - r) < half {
                break;
            }
        }
        let first = k;

        let mut pmf: Vec<f64> = below.into_iter().rev().collect();
        pmf.push(p_mode);
        let mut p = p_mode;
        let mut k = mode;
        loop {
            let next = p * mean / (k as f64 + 1.0);
            k += 1;
            pmf.push(next);
            p = next;
            let r = mean / (k as f64 + 1.0);
            if r < 1.0 && p * r / (1.0 - r) < half {
                break;
            }
        }

        let mut upper = vec![0.0; pmf.len()];
        let mut acc = 0.0;
        for i in (0..pmf.len()).rev() {
            acc += pmf[i];
            upper[i] = acc;
        }
        PoissonTerms {
            mean,
            first,
            pmf,
            upper,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn first(&self) -> usize {
        self.first
    }

    /// Largest k carried in the table.
    pub fn last(&self) -> usize {
        self.first + self.pmf.len() - 1
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k < self.first || k > self.last() {
            0.0
        } else {
            self.pmf[k - self.first]
        }
    }

    /// P(D >= k)
    pub fn upper_tail(&self, k: i64) -> f64 {
        if k <= self.first as i64 {
            1.0
        } else if k > self.last() as i64 {
            0.0
        } else {
            self.upper[k as usize - self.first]
        }
    }

    /// P(D <= k)
    pub fn cdf(&self, k: i64) -> f64 {
        1.0 - self.upper_tail(k + 1)
    }

    /// Expected excess E[(D - c)^+].
    pub fn loss(&self, c: i64) -> f64 {
        if c < self.first as i64 {
            return self.mean - c as f64;
        }
        // E[(D-c)^+] = sum_{k > c} P(D >= k)
        let lo = (c + 1) as usize;
        if lo > self.last() {
            return 0.0;
        }
        self.upper[lo - self.first..].iter().rev().sum()
    }

    /// Loss values for every c in `c_min..=c_max`, computed from the top down.
    pub fn loss_table(&self, c_min: i64, c_max: i64) -> Vec<f64> {
        assert!(c_min <= c_max);
        let mut out = vec![0.0; (c_max - c_min + 1) as usize];
        let last = self.last() as i64;
        let mut acc = 0.0;
        // acc = sum_{k >= c+1} P(D >= k), walked from the table top
        let mut k = last;
        for c in (c_min..=c_max).rev() {
            if c >= last {
                out[(c - c_min) as usize] = 0.0;
                continue;
            }
            if c < self.first as i64 {
                out[(c - c_min) as usize] = self.mean - c as f64;
                continue;
            }
            while k > c {
                acc += self.upper[(k as usize) - self.first];
                k -= 1;
            }
            out[(c - c_min) as usize] = acc;
        }
        out
    }
}

fn ln_pmf(k: i64, mean: f64) -> f64 {
    -mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)
}

/// `E[(D - c)^+]` for every c in `c_min..=c_max`, D ~ Poisson(mean).
///
/// Only positive terms are ever added: the top value comes from the short
/// side of the distribution (the upper tail when `c_max` sits above the mean,
/// `mean - c + E[(c - D)^+]` otherwise), and lower values follow from
/// `L(c-1) = L(c) + P(D >= c)`. Far-tail values therefore keep full relative
/// precision. The upper-tail series stops once the bound on what is left
/// falls below `tail_tol` times the running sum.
pub fn poisson_loss_table(mean: f64, c_min: i64, c_max: i64, tail_tol: f64) -> Vec<f64> {
    assert!(mean.is_finite() && mean >= 0.0, "Poisson mean must be finite and >= 0");
    assert!(c_min <= c_max);
    let n = (c_max - c_min + 1) as usize;
    if mean == 0.0 {
        return (c_min..=c_max).map(|c| (-c).max(0) as f64).collect();
    }
    let top = c_max.max(-1);
    // upper = P(D >= top + 1), loss = L(top)
    let (mut upper, mut loss) = if (top + 1) as f64 > mean {
        let mut j = top + 1;
        let mut p = ln_pmf(j, mean).exp();
        let (mut tail, mut excess) = (0.0, 0.0);
        while p > 0.0 {
            tail += p;
            excess += (j - top) as f64 * p;
            // successive excess terms shrink by at least q from here on
            let q = (j + 1 - top) as f64 / (j - top) as f64 * mean / (j + 1) as f64;
            p *= mean / (j + 1) as f64;
            j += 1;
            if q < 1.0 && p * (j - top) as f64 / (1.0 - q) <= tail_tol * excess {
                break;
            }
        }
        (tail, excess)
    } else {
        // head sums over 0..=top, walked down from the top where terms are largest
        let (mut head, mut short) = (0.0, 0.0);
        let mut p = ln_pmf(top, mean).exp();
        let mut j = top;
        while j >= 0 && p > 0.0 {
            head += p;
            short += (top - j) as f64 * p;
            p *= j as f64 / mean;
            j -= 1;
        }
        (1.0 - head, mean - top as f64 + short)
    };
    let mut out = vec![0.0; n];
    for c in (c_min..=c_max).rev() {
        let i = (c - c_min) as usize;
        if c < 0 {
            out[i] = mean - c as f64;
            continue;
        }
        if c <= top {
            out[i] = loss;
            upper += ln_pmf(c, mean).exp();
            loss += upper;
        }
    }
    out
}

/// Expected shortage per cycle for reorder point `s` and Poisson lead-time
/// demand with the given mean: `μ(1 − F(s−1)) − s(1 − F(s))`, evaluated as
/// the loss `E[(D − s)^+]` to avoid cancellation in the tail.
pub fn expected_shortage(s: u32, mean: f64, tail_tol: f64) -> f64 {
    poisson_loss_table(mean, s as i64, s as i64, tail_tol)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::distribution::{Discrete, DiscreteCDF, Poisson};

    #[test]
    fn matches_reference_distribution() {
        for &mean in &[0.05, 0.7, 3.0, 17.5, 240.0, 1500.0] {
            let t = PoissonTerms::new(mean, 1e-14);
            let reference = Poisson::new(mean).unwrap();
            let lo = t.first();
            let hi = t.last();
            for k in [lo, (lo + hi) / 2, hi] {
                assert_relative_eq!(t.pmf(k), reference.pmf(k as u64), max_relative = 1e-9);
            }
            let mid = mean.floor() as i64;
            assert_relative_eq!(t.cdf(mid), reference.cdf(mid as u64), epsilon = 1e-12);
            let total: f64 = (lo..=hi).map(|k| t.pmf(k)).sum();
            assert!((1.0 - total).abs() < 1e-12, "mean {mean}: mass {total}");
        }
    }

    #[test]
    fn loss_matches_direct_sum() {
        for &mean in &[0.3, 4.2, 55.0] {
            let t = PoissonTerms::new(mean, 1e-15);
            let direct = |c: i64| -> f64 {
                (0..=t.last())
                    .map(|k| ((k as i64 - c).max(0)) as f64 * t.pmf(k))
                    .sum()
            };
            let table = t.loss_table(-3, 90);
            for c in -3..=90i64 {
                let want = direct(c);
                assert_relative_eq!(t.loss(c), want, epsilon = 1e-12, max_relative = 1e-9);
                assert_relative_eq!(table[(c + 3) as usize], want, epsilon = 1e-12, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn shortage_at_zero_reorder_point_is_mean() {
        assert_relative_eq!(expected_shortage(0, 2.5, 1e-12), 2.5, epsilon = 1e-12);
        assert!(expected_shortage(40, 2.5, 1e-12) < 1e-12);
    }

    #[test]
    fn loss_table_matches_terms_and_keeps_tail_precision() {
        for &mean in &[0.02, 0.3, 4.2, 55.0, 900.0] {
            let t = PoissonTerms::new(mean, 1e-15);
            let hi = (mean + 8.0 * mean.sqrt() + 10.0) as i64;
            let table = poisson_loss_table(mean, -3, hi, 1e-14);
            for c in -3..=hi {
                assert_relative_eq!(table[(c + 3) as usize], t.loss(c), epsilon = 1e-11, max_relative = 1e-9);
            }
        }
        // deep tail: the leading term (j - c) p(j) at j = c + 1 dominates
        let (mean, c) = (0.5, 40i64);
        let lead = ln_pmf(c + 1, mean).exp();
        let v = expected_shortage(c as u32, mean, 1e-14);
        assert!(v > lead && v < lead * 1.05, "{v} vs {lead}");
        assert_relative_eq!(expected_shortage(c as u32, mean, 1e-12), v, max_relative = 1e-11);
    }
}
