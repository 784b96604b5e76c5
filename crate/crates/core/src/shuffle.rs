//! Seed-synchronized worker grouping.
//!
//! Every worker derives the iteration-t partition from `(seed, t, n, k)`
//! alone, so no coordination messages are needed. The iteration seed is
//! `mix64(seed ^ t)` rather than a position in one long stream, which makes
//! any iteration's groups computable without replaying history.

use crate::config::WorkerId;
use crate::error::{Error, Result};
use crate::rng::{mix64, Rng64};

/// A partition of the `n` workers into `k` equal groups for one iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAssignment {
    pub iteration: u64,
    /// worker id -> group id
    pub membership: Vec<usize>,
    /// Group member lists, each sorted ascending (canonical form).
    pub groups: Vec<Vec<WorkerId>>,
}

impl GroupAssignment {
    pub fn n_workers(&self) -> usize {
        self.membership.len()
    }

    pub fn group_of(&self, worker: WorkerId) -> usize {
        self.membership[worker.0]
    }

    /// Order-sensitive 64-bit digest of the canonical assignment.
    pub fn digest(&self) -> u64 {
        let mut h = mix64(self.iteration);
        for (w, &g) in self.membership.iter().enumerate() {
            h = mix64(h ^ ((w as u64) << 32) ^ g as u64);
        }
        h
    }
}

/// Deterministically partitions workers `[0, n)` into `k` groups of `n/k`
/// by Fisher-Yates shuffling the identity permutation with the iteration
/// seed and slicing it into contiguous blocks.
pub fn generate_groups(seed: u64, t: u64, n: usize, k: usize) -> Result<GroupAssignment> {
    if k == 0 || k > n {
        return Err(Error::GroupCountTooLarge { n, k });
    }
    if n % k != 0 {
        return Err(Error::GroupSizeMismatch { n, k });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = Rng64::new(mix64(seed ^ t));
    for i in (1..n).rev() {
        let j = rng.next_bounded(i as u64 + 1)? as usize;
        perm.swap(i, j);
    }
    let size = n / k;
    let mut membership = vec![0usize; n];
    let mut groups = Vec::with_capacity(k);
    for g in 0..k {
        let mut members: Vec<WorkerId> = perm[g * size..(g + 1) * size]
            .iter()
            .map(|&w| WorkerId(w))
            .collect();
        members.sort_unstable();
        for m in &members {
            membership[m.0] = g;
        }
        groups.push(members);
    }
    Ok(GroupAssignment {
        iteration: t,
        membership,
        groups,
    })
}

/// Probability that two fixed distinct workers land in different groups
/// under a uniform equal-size partition: n(k-1) / (k(n-1)).
pub fn pair_split_probability(n: usize, k: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidConfig(
            "pair split probability needs at least 2 workers".into(),
        ));
    }
    if k == 0 || k > n {
        return Err(Error::GroupCountTooLarge { n, k });
    }
    if n % k != 0 {
        return Err(Error::GroupSizeMismatch { n, k });
    }
    Ok((n as f64 * (k as f64 - 1.0)) / (k as f64 * (n as f64 - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_group_is_everyone() {
        let a = generate_groups(99, 0, 4, 1).unwrap();
        assert_eq!(a.groups.len(), 1);
        assert_eq!(
            a.groups[0],
            vec![WorkerId(0), WorkerId(1), WorkerId(2), WorkerId(3)]
        );
    }

    #[test]
    fn singleton_groups_when_k_equals_n() {
        let a = generate_groups(7, 3, 4, 4).unwrap();
        assert_eq!(a.groups.len(), 4);
        for g in &a.groups {
            assert_eq!(g.len(), 1);
        }
    }

    #[test]
    fn deterministic_for_same_arguments() {
        let a = generate_groups(42, 0, 4, 2).unwrap();
        let b = generate_groups(42, 0, 4, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn invalid_k_rejected() {
        assert!(generate_groups(1, 0, 4, 3).is_err());
        assert!(generate_groups(1, 0, 4, 5).is_err());
    }

    #[test]
    fn split_probability_extremes() {
        assert_eq!(pair_split_probability(4, 1).unwrap(), 0.0);
        assert_eq!(pair_split_probability(4, 4).unwrap(), 1.0);
        let p = pair_split_probability(4, 2).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_split_frequency_matches_formula() {
        // Workers 0 and 1 at n=4, k=2 over 1e5 iterations, 5 sigma band.
        let n_iters = 100_000u64;
        let p = pair_split_probability(4, 2).unwrap();
        let mut split = 0u64;
        for t in 0..n_iters {
            let a = generate_groups(2718, t, 4, 2).unwrap();
            if a.group_of(WorkerId(0)) != a.group_of(WorkerId(1)) {
                split += 1;
            }
        }
        let sigma = (n_iters as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (split as f64 - n_iters as f64 * p).abs() < 5.0 * sigma,
            "split count {split}"
        );
    }

    #[test]
    fn fixed_group_frequency_matches_uniform_partitioning() {
        // P({0,1,2,3} forms a group at n=16, k=4) under uniform equal
        // partitioning is [12!/(4!^3 3!)] / [16!/(4!^4 4!)] = 5775/2627625
        // = 1/455.
        let n_iters = 100_000u64;
        let p = 1.0 / 455.0;
        let mut hits = 0u64;
        for t in 0..n_iters {
            let a = generate_groups(161, t, 16, 4).unwrap();
            let g = a.group_of(WorkerId(0));
            if (1..4).all(|w| a.group_of(WorkerId(w)) == g) {
                hits += 1;
            }
        }
        let sigma = (n_iters as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits as f64 - n_iters as f64 * p).abs() < 5.0 * sigma,
            "hits {hits}"
        );
    }

    #[test]
    fn independent_call_sites_agree() {
        // n simulated workers each compute the assignment independently.
        let reference = generate_groups(5, 17, 8, 2).unwrap();
        for _caller in 0..8 {
            assert_eq!(generate_groups(5, 17, 8, 2).unwrap(), reference);
        }
    }

    proptest! {
        #[test]
        fn output_is_valid_equal_partition(
            seed in any::<u64>(),
            t in 0u64..1000,
            size in 1usize..8,
            k in 1usize..8,
        ) {
            let n = size * k;
            let a = generate_groups(seed, t, n, k).unwrap();
            prop_assert_eq!(a.groups.len(), k);
            let mut seen = vec![false; n];
            for (gi, g) in a.groups.iter().enumerate() {
                prop_assert_eq!(g.len(), n / k);
                let mut prev: Option<WorkerId> = None;
                for &w in g {
                    prop_assert!(!seen[w.0]);
                    seen[w.0] = true;
                    prop_assert_eq!(a.membership[w.0], gi);
                    if let Some(p) = prev {
                        prop_assert!(p < w);
                    }
                    prev = Some(w);
                }
            }
            prop_assert!(seen.into_iter().all(|s| s));
        }
    }
}
