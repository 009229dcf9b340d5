//! Hopcroft–Karp maximum bipartite matching and the equal-value matching
//! shortcut for square instances.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::indices::BundleValues;
use crate::model::{Allocation, IndexKind, Instance};
use crate::rational::Rational;

const UNMATCHED: usize = usize::MAX;

/// Maximum matching of a bipartite graph with `left` and `right` vertices.
/// `adj[u]` lists the right neighbours of left vertex `u`. Returns the
/// partner of each left vertex.
pub fn hopcroft_karp(left: usize, right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    assert_eq!(adj.len(), left, "one adjacency list per left vertex");
    let mut pair_left = vec![UNMATCHED; left];
    let mut pair_right = vec![UNMATCHED; right];
    let mut dist = vec![0usize; left];

    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..left {
            if pair_left[u] == UNMATCHED {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = pair_right[v];
                if w == UNMATCHED {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut augmented = false;
        for u in 0..left {
            if pair_left[u] == UNMATCHED
                && dist[u] == 0
                && augment(u, adj, &mut pair_left, &mut pair_right, &mut dist)
            {
                augmented = true;
            }
        }
        if !augmented {
            break;
        }
    }
    pair_left
        .into_iter()
        .map(|v| (v != UNMATCHED).then_some(v))
        .collect()
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    pair_left: &mut [usize],
    pair_right: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &v in &adj[u] {
        let w = pair_right[v];
        let ok = w == UNMATCHED
            || (dist[w] == dist[u] + 1 && augment(w, adj, pair_left, pair_right, dist));
        if ok {
            pair_left[u] = v;
            pair_right[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// One-item-per-agent allocation in which every agent bids the same value
/// for its item, found by trying each distinct bid value from the largest
/// down. Such an allocation has Gini index zero.
///
/// For [`IndexKind::SubjectiveGini`] the matching is returned only when its
/// subjective Gini index is also zero, which certifies it as a minimizer.
/// Returns `None` when no value admits a perfect matching.
pub fn matching_minimizer_square(inst: &Instance, kind: IndexKind) -> Result<Option<Allocation>> {
    let (n, m) = (inst.num_agents(), inst.num_items());
    if n != m {
        return Err(Error::NotSquare { agents: n, items: m });
    }
    if kind == IndexKind::Envy {
        return Err(Error::UnsupportedIndex(
            "the equal-value matching does not target the envy index".into(),
        ));
    }
    let bids = inst.bids();
    let values: BTreeSet<&Rational> = (0..n).flat_map(|i| bids.row(i).iter()).collect();
    for value in values.into_iter().rev() {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..m).filter(|&j| bids.get(i, j) == value).collect())
            .collect();
        let matching = hopcroft_karp(n, m, &adj);
        if matching.iter().all(Option::is_some) {
            let mut owner = vec![None; m];
            for (agent, item) in matching.into_iter().enumerate() {
                owner[item.expect("perfect matching")] = Some(agent);
            }
            let alloc = Allocation::from_owners(owner);
            if kind == IndexKind::SubjectiveGini
                && !BundleValues::from_allocation(bids, &alloc).subjective_gini().is_zero()
            {
                continue;
            }
            return Ok(Some(alloc));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::indices::gini_index;
    use crate::solvers::{minimize_index, MinimizeOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_max_matching(left: usize, right: usize, adj: &[Vec<usize>]) -> usize {
        fn go(u: usize, left: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if u == left {
                return 0;
            }
            let mut best = go(u + 1, left, adj, used);
            for &v in &adj[u] {
                if !used[v] {
                    used[v] = true;
                    best = best.max(1 + go(u + 1, left, adj, used));
                    used[v] = false;
                }
            }
            best
        }
        go(0, left, adj, &mut vec![false; right])
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let left = rng.random_range(0..7);
            let right = rng.random_range(0..7);
            let adj: Vec<Vec<usize>> = (0..left)
                .map(|_| (0..right).filter(|_| rng.random_bool(0.35)).collect())
                .collect();
            let m = hopcroft_karp(left, right, &adj);
            let size = m.iter().flatten().count();
            assert_eq!(size, brute_max_matching(left, right, &adj));
            let mut seen = vec![false; right];
            for (u, v) in m.iter().enumerate() {
                if let Some(v) = *v {
                    assert!(adj[u].contains(&v));
                    assert!(!seen[v]);
                    seen[v] = true;
                }
            }
        }
    }

    #[test]
    fn cyclic_instance_matches_at_nine() {
        let inst = fixtures::three_agent_cyclic();
        let alloc = matching_minimizer_square(&inst, IndexKind::Gini).unwrap().unwrap();
        assert_eq!(alloc, Allocation::complete(&[0, 1, 2]));
        assert_eq!(gini_index(&inst, &alloc).unwrap(), Rational::ZERO);
        let brute = minimize_index(&inst, IndexKind::Gini, Default::default(), MinimizeOptions::default())
            .unwrap();
        assert_eq!(brute.min_value, Rational::ZERO);
    }

    #[test]
    fn car_rental_matches_at_eight() {
        let inst = fixtures::car_rental();
        let alloc = matching_minimizer_square(&inst, IndexKind::Gini).unwrap().unwrap();
        // Renault to Bob, Skoda to Alice, Toyota to Carol.
        assert_eq!(alloc, Allocation::complete(&[1, 0, 2]));
    }

    #[test]
    fn distinct_values_have_no_matching() {
        let inst = Instance::from_integers(&[[1, 2], [3, 4]]).unwrap();
        assert_eq!(matching_minimizer_square(&inst, IndexKind::Gini).unwrap(), None);
    }

    #[test]
    fn errors() {
        let inst = Instance::from_integers(&[[1, 2, 3], [3, 4, 5]]).unwrap();
        assert!(matches!(
            matching_minimizer_square(&inst, IndexKind::Gini),
            Err(Error::NotSquare { agents: 2, items: 3 })
        ));
        let sq = Instance::from_integers(&[[1, 2], [3, 4]]).unwrap();
        assert!(matches!(
            matching_minimizer_square(&sq, IndexKind::Envy),
            Err(Error::UnsupportedIndex(_))
        ));
    }

    #[test]
    fn subjective_gini_requires_zero_certificate() {
        let inst = fixtures::car_rental();
        assert_eq!(matching_minimizer_square(&inst, IndexKind::SubjectiveGini).unwrap(), None);
        let flat = Instance::from_integers(&[[2, 2], [2, 2]]).unwrap();
        assert!(matching_minimizer_square(&flat, IndexKind::SubjectiveGini)
            .unwrap()
            .is_some());
    }
}
