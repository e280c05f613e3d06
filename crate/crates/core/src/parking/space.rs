//! Enumeration and indexing of the joint-replenishment drop states.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_STATE_CAP: usize = 5_000_000;

/// Prefix tables larger than this fall back to a hash map.
const DENSE_PREFIX_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone)]
enum PrefixIndex {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

/// All w ≥ 0 with aᵀw < U, lexicographic, flattened row-major.
///
/// States sharing the first m−1 coordinates are contiguous, so an index is
/// a prefix lookup plus the last coordinate.
#[derive(Debug, Clone)]
pub struct StateSpace {
    batch: Vec<u32>,
    srop: u32,
    capacity: u32,
    flat: Vec<u32>,
    loads: Vec<u32>,
    zero_pruned: bool,
    strides: Vec<u64>,
    prefixes: PrefixIndex,
}

const ABSENT: u32 = u32::MAX;

impl StateSpace {
    /// `batch` holds a_j = v_j·Q_j; `capacity` is A.
    pub fn enumerate(batch: &[u32], srop: u32, capacity: u32, cap: usize) -> Result<Self> {
        let m = batch.len();
        if m == 0 {
            return Err(invalid("batch vector is empty"));
        }
        if batch.iter().any(|&a| a == 0) {
            return Err(invalid("batch shipping sizes must be >= 1"));
        }
        if srop == 0 {
            return Err(invalid("U must be >= 1"));
        }
        let size = count_states(batch, srop);
        if size > cap as u128 {
            return Err(Error::StateSpaceTooLarge {
                size: size.min(usize::MAX as u128) as usize,
                cap,
            });
        }
        let size = size as usize;

        let mut strides = vec![0u64; m];
        let mut prefix_count: u64 = 1;
        for j in (0..m.saturating_sub(1)).rev() {
            strides[j] = prefix_count;
            let radix = ((srop - 1) / batch[j] + 1) as u64;
            prefix_count = prefix_count.saturating_mul(radix);
        }

        let mut flat = Vec::with_capacity(size * m);
        let mut loads = Vec::with_capacity(size);
        let mut cur = vec![0u32; m];
        let mut row_starts: Vec<(u64, u32)> = Vec::new();
        enumerate_rec(batch, srop, 0, 0, &mut cur, &mut |w, load| {
            if w[m - 1] == 0 {
                let key: u64 = (0..m - 1).map(|j| w[j] as u64 * strides[j]).sum();
                row_starts.push((key, loads.len() as u32));
            }
            flat.extend_from_slice(w);
            loads.push(load);
        });

        let prefixes = if prefix_count <= DENSE_PREFIX_LIMIT {
            let mut v = vec![ABSENT; prefix_count as usize];
            for (k, start) in row_starts {
                v[k as usize] = start;
            }
            PrefixIndex::Dense(v)
        } else {
            PrefixIndex::Sparse(row_starts.into_iter().collect())
        };

        // state 0 is reachable only through a capacity-feasible joint order
        let reset_possible = loads
            .iter()
            .any(|&l| batch.iter().any(|&a| l + a >= srop && l + a <= capacity));

        let mut space = StateSpace {
            batch: batch.to_vec(),
            srop,
            capacity,
            flat,
            loads,
            zero_pruned: false,
            strides,
            prefixes,
        };
        if !reset_possible {
            space.zero_pruned = true;
            space.flat.drain(0..m);
            space.loads.remove(0);
            if space.loads.is_empty() {
                return Err(invalid("state space is empty after pruning the zero state"));
            }
        }
        Ok(space)
    }

    pub fn m(&self) -> usize {
        self.batch.len()
    }

    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }

    pub fn batch(&self) -> &[u32] {
        &self.batch
    }

    pub fn srop(&self) -> u32 {
        self.srop
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn zero_pruned(&self) -> bool {
        self.zero_pruned
    }

    pub fn state(&self, idx: usize) -> &[u32] {
        let m = self.m();
        &self.flat[idx * m..(idx + 1) * m]
    }

    /// Slot load aᵀw.
    pub fn load(&self, idx: usize) -> u32 {
        self.loads[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.flat.chunks_exact(self.m())
    }

    pub fn index_of(&self, w: &[u32]) -> Option<usize> {
        let m = self.m();
        if w.len() != m {
            return None;
        }
        let load: u64 = w.iter().zip(&self.batch).map(|(&x, &a)| x as u64 * a as u64).sum();
        if load >= self.srop as u64 {
            return None;
        }
        let key: u64 = (0..m - 1).map(|j| w[j] as u64 * self.strides[j]).sum();
        let start = match &self.prefixes {
            PrefixIndex::Dense(v) => v[key as usize],
            PrefixIndex::Sparse(h) => *h.get(&key)?,
        };
        debug_assert_ne!(start, ABSENT);
        let raw = start as usize + w[m - 1] as usize;
        if self.zero_pruned {
            if raw == 0 {
                None
            } else {
                Some(raw - 1)
            }
        } else {
            Some(raw)
        }
    }

    /// Index of e_j, if retained.
    pub fn unit_index(&self, j: usize) -> Option<usize> {
        let mut w = vec![0u32; self.m()];
        w[j] = 1;
        self.index_of(&w)
    }

    pub fn zero_index(&self) -> Option<usize> {
        if self.zero_pruned {
            None
        } else {
            Some(0)
        }
    }
}

fn enumerate_rec(
    batch: &[u32],
    srop: u32,
    j: usize,
    load: u32,
    cur: &mut Vec<u32>,
    emit: &mut impl FnMut(&[u32], u32),
) {
    if j == batch.len() {
        emit(cur, load);
        return;
    }
    let mut w = 0u32;
    let mut l = load;
    while l < srop {
        cur[j] = w;
        enumerate_rec(batch, srop, j + 1, l, cur, emit);
        w += 1;
        l += batch[j];
    }
    cur[j] = 0;
}

/// Number of w ≥ 0 with aᵀw < U, by a knapsack count over loads.
pub fn count_states(batch: &[u32], srop: u32) -> u128 {
    let u = srop as usize;
    let mut ways = vec![0u128; u];
    ways[0] = 1;
    for &a in batch {
        let a = a as usize;
        for l in a..u {
            ways[l] = ways[l].saturating_add(ways[l - a]);
        }
    }
    ways.iter().fold(0u128, |acc, &x| acc.saturating_add(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_type_example_has_nine_states() {
        let s = StateSpace::enumerate(&[1, 2], 5, 5, DEFAULT_STATE_CAP).unwrap();
        let got: Vec<Vec<u32>> = s.iter().map(|w| w.to_vec()).collect();
        let want: Vec<Vec<u32>> = vec![
            vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1],
            vec![2, 0], vec![2, 1], vec![3, 0], vec![4, 0],
        ];
        assert_eq!(got, want);
        for (i, w) in want.iter().enumerate() {
            assert_eq!(s.index_of(w), Some(i));
        }
        assert_eq!(s.index_of(&[1, 2]), None);
        assert!(!s.zero_pruned());
    }

    #[test]
    fn single_type_cases() {
        let s = StateSpace::enumerate(&[1], 2, 2, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.state(1), &[1]);
        // a = 3, U = 3 leaves only w = 0, kept because a joint order of 3 fits A
        let s = StateSpace::enumerate(&[3], 3, 5, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(s.len(), 1);
        assert!(!s.zero_pruned());
        assert!(StateSpace::enumerate(&[3], 3, 2, DEFAULT_STATE_CAP).is_err());
    }

    #[test]
    fn zero_pruned_when_every_order_overflows() {
        // U = 4, A = 4, a = (3): from w=1 (load 3) an arrival makes 6 > A
        let s = StateSpace::enumerate(&[3], 4, 4, DEFAULT_STATE_CAP).unwrap();
        assert!(s.zero_pruned());
        assert_eq!(s.len(), 1);
        assert_eq!(s.index_of(&[1]), Some(0));
        assert_eq!(s.index_of(&[0]), None);
    }

    #[test]
    fn counts_and_indices_agree() {
        for (batch, u) in [(vec![5u32, 10, 20], 244u32), (vec![3, 7], 50), (vec![2, 3, 4, 5], 40)] {
            let s = StateSpace::enumerate(&batch, u, u, DEFAULT_STATE_CAP).unwrap();
            assert_eq!(s.len() as u128 + u128::from(s.zero_pruned()), count_states(&batch, u));
            for i in (0..s.len()).step_by(7) {
                let w = s.state(i).to_vec();
                assert_eq!(s.index_of(&w), Some(i));
            }
            let flat: Vec<&[u32]> = s.iter().collect();
            for win in flat.windows(2) {
                assert!(win[0] < win[1]);
            }
        }
    }

    #[test]
    fn zero_pruned_without_exact_fit() {
        // loads are multiples of 5, so no joint order can land on A = 244
        let s = StateSpace::enumerate(&[5, 10, 20], 244, 244, DEFAULT_STATE_CAP).unwrap();
        assert!(s.zero_pruned());
        assert_eq!(s.len(), 2924);
        let s = StateSpace::enumerate(&[5, 10, 20], 244, 250, DEFAULT_STATE_CAP).unwrap();
        assert!(!s.zero_pruned());
        assert_eq!(s.len(), 2925);
    }

    #[test]
    fn cap_is_enforced() {
        let err = StateSpace::enumerate(&[1, 1, 1], 200, 200, 1000).unwrap_err();
        assert!(matches!(err, Error::StateSpaceTooLarge { cap: 1000, .. }));
    }
}
