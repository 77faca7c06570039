//! Random partition of the `L`-sparse supports into swap groups.
//!
//! Every support containing the pivot `i` anchors one group. A support
//! without `i` picks one of its taps uniformly, moves it to `i`, and joins the
//! group of the resulting anchor, so it equals `anchor^{i→k}` for the position
//! `k` the tap came from. A balancing pass then keeps group sizes within
//! `[½, 2]·(K_c − L)/L`.

use std::collections::HashMap;

use itertools::Itertools;
use rand::Rng;

use crate::channel::ln_binomial;
use crate::error::{invalid, Error, Result};
use crate::seed::rng_from_seed;

/// Largest number of supports [`build_swap_partition`] enumerates.
pub const PARTITION_BUDGET: f64 = 1e6;

const BALANCE_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapGroup {
    /// Sorted support with a tap at the pivot.
    pub anchor: Vec<usize>,
    /// Sorted supports, the anchor first.
    pub members: Vec<Vec<usize>>,
    /// `K(H)`, aligned with `members`: entry `m` is the position the pivot's
    /// tap occupies in member `m` (the pivot itself for the anchor).
    pub k_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapPartition {
    pub kc: usize,
    pub l: usize,
    pub pivot: usize,
    pub groups: Vec<SwapGroup>,
    /// Whether every group ended within the size bounds.
    pub balanced: bool,
}

impl SwapPartition {
    /// `(K_c − L)/L`.
    pub fn nominal_size(&self) -> f64 {
        (self.kc - self.l) as f64 / self.l as f64
    }

    /// `(lower, upper)` bounds on group size, anchor included.
    pub fn size_bounds(&self) -> (f64, f64) {
        size_bounds(self.kc, self.l)
    }

    pub fn support_count(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }
}

fn size_bounds(kc: usize, l: usize) -> (f64, f64) {
    let t = (kc - l) as f64 / l as f64;
    (0.5 * t, 2.0 * t)
}

/// `anchor` with the tap at `pivot` moved to `k`.
fn relocated(anchor: &[usize], pivot: usize, k: usize) -> Vec<usize> {
    let mut m: Vec<usize> = anchor.iter().copied().filter(|&j| j != pivot).collect();
    m.push(k);
    m.sort_unstable();
    m
}

/// The anchor reached by moving tap `j` of a pivot-free support to the pivot.
fn anchor_of(member: &[usize], pivot: usize, j: usize) -> Vec<usize> {
    relocated(member, j, pivot)
}

struct Assignment {
    kc: usize,
    pivot: usize,
    anchors: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    /// Relocation targets `k` of the non-anchor members of each group.
    targets: Vec<Vec<usize>>,
}

impl Assignment {
    fn size(&self, g: usize) -> usize {
        self.targets[g].len() + 1
    }

    fn transfer(&mut self, from: usize, slot: usize, to: usize, k_new: usize) {
        self.targets[from].swap_remove(slot);
        self.targets[to].push(k_new);
    }

    /// Other groups the member `anchor[g]^{i→k}` could join, with the
    /// relocation target it would have there.
    fn alternatives(&self, g: usize, k: usize) -> Vec<(usize, usize)> {
        let member = relocated(&self.anchors[g], self.pivot, k);
        member
            .iter()
            .filter(|&&j| j != k)
            .filter_map(|&j| self.index.get(&anchor_of(&member, self.pivot, j)).map(|&h| (h, j)))
            .collect()
    }

    /// Moves members out of groups above `upper` into the smallest compatible
    /// group, lowest index on ties, whenever that narrows the size gap.
    fn shrink(&mut self, upper: f64) -> bool {
        let mut changed = false;
        for g in 0..self.anchors.len() {
            let mut slot = self.targets[g].len();
            while self.size(g) as f64 > upper && slot > 0 {
                slot -= 1;
                let k = self.targets[g][slot];
                let best = self
                    .alternatives(g, k)
                    .into_iter()
                    .min_by_key(|&(h, _)| (self.size(h), h));
                if let Some((h, k_new)) = best {
                    if self.size(h) + 1 < self.size(g) {
                        self.transfer(g, slot, h, k_new);
                        changed = true;
                    }
                }
            }
        }
        changed
    }

    /// Pulls members into groups below `lower` from the largest compatible
    /// donor that stays at or above `lower`.
    fn grow(&mut self, lower: f64) -> bool {
        let mut changed = false;
        for g in 0..self.anchors.len() {
            while (self.size(g) as f64) < lower {
                let taken: Vec<usize> = self.targets[g].clone();
                let anchor = &self.anchors[g];
                let candidates = (0..self.kc)
                    .filter(|k| !anchor.contains(k) && !taken.contains(k))
                    .filter_map(|k| {
                        let member = relocated(anchor, self.pivot, k);
                        self.owner_of(&member).map(|(d, slot)| (k, d, slot))
                    })
                    .filter(|&(_, d, _)| {
                        self.size(d) > self.size(g) + 1 && (self.size(d) - 1) as f64 >= lower
                    })
                    .max_by_key(|&(_, d, _)| (self.size(d), usize::MAX - d));
                match candidates {
                    Some((k, d, slot)) => {
                        self.transfer(d, slot, g, k);
                        changed = true;
                    }
                    None => break,
                }
            }
        }
        changed
    }

    /// Group and slot currently holding a pivot-free support.
    fn owner_of(&self, member: &[usize]) -> Option<(usize, usize)> {
        member.iter().find_map(|&j| {
            let h = *self.index.get(&anchor_of(member, self.pivot, j))?;
            let slot = self.targets[h].iter().position(|&k| k == j)?;
            Some((h, slot))
        })
    }
}

/// Builds the swap-group partition of all `C(K_c, L)` supports for pivot `i`.
pub fn build_swap_partition(kc: usize, l: usize, pivot: usize, seed: u64) -> Result<SwapPartition> {
    if l < 1 || l >= kc {
        return Err(invalid(format!("need 1 ≤ L < K_c, got L = {l}, K_c = {kc}")));
    }
    if pivot >= kc {
        return Err(invalid(format!("pivot {pivot} outside [0, {kc})")));
    }
    let count = ln_binomial(kc, l).exp();
    if count > PARTITION_BUDGET {
        return Err(Error::EnumerationBudget {
            count,
            budget: PARTITION_BUDGET,
        });
    }

    let others: Vec<usize> = (0..kc).filter(|&j| j != pivot).collect();
    let anchors: Vec<Vec<usize>> = others
        .iter()
        .copied()
        .combinations(l - 1)
        .map(|mut a| {
            a.push(pivot);
            a.sort_unstable();
            a
        })
        .collect();
    let index = anchors.iter().cloned().enumerate().map(|(g, a)| (a, g)).collect();
    let mut asg = Assignment {
        kc,
        pivot,
        targets: vec![Vec::new(); anchors.len()],
        anchors,
        index,
    };

    let mut rng = rng_from_seed(seed);
    for member in others.iter().copied().combinations(l) {
        let j = member[rng.random_range(0..l)];
        let g = asg.index[&anchor_of(&member, pivot, j)];
        asg.targets[g].push(j);
    }

    let (lower, upper) = size_bounds(kc, l);
    for _ in 0..BALANCE_ROUNDS {
        let shrunk = asg.shrink(upper);
        let grown = asg.grow(lower);
        if !shrunk && !grown {
            break;
        }
    }

    let within = |s: usize| (lower..=upper).contains(&(s as f64));
    let balanced = (0..asg.anchors.len()).all(|g| within(asg.size(g)));
    let groups = asg
        .anchors
        .iter()
        .zip(asg.targets)
        .map(|(anchor, mut targets)| {
            targets.sort_unstable();
            let mut k_set = vec![pivot];
            k_set.extend(targets);
            let members = k_set.iter().map(|&k| relocated(anchor, pivot, k)).collect();
            SwapGroup {
                anchor: anchor.clone(),
                members,
                k_set,
            }
        })
        .collect();
    Ok(SwapPartition {
        kc,
        l,
        pivot,
        groups,
        balanced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn assert_true_partition(p: &SwapPartition) {
        let mut seen = HashSet::new();
        for g in &p.groups {
            assert!(g.anchor.contains(&p.pivot));
            assert_eq!(g.members[0], g.anchor);
            assert_eq!(g.members.len(), g.k_set.len());
            for (m, &k) in g.members.iter().zip(&g.k_set) {
                assert_eq!(m.len(), p.l);
                assert!(m.windows(2).all(|w| w[0] < w[1]));
                assert!(seen.insert(m.clone()), "support {m:?} appears twice");
                if m != &g.anchor {
                    let diff = (0..p.kc)
                        .filter(|j| g.anchor.contains(j) != m.contains(j))
                        .collect::<Vec<_>>();
                    assert_eq!(diff.len(), 2);
                    assert!(diff.contains(&p.pivot) && diff.contains(&k));
                }
            }
        }
        assert_eq!(seen.len() as f64, ln_binomial(p.kc, p.l).exp().round());
    }

    #[test]
    fn single_tap_has_one_group() {
        let p = build_swap_partition(4, 1, 0, 1).unwrap();
        assert_eq!(p.groups.len(), 1);
        assert_eq!(p.groups[0].anchor, vec![0]);
        assert_eq!(p.groups[0].k_set, vec![0, 1, 2, 3]);
        assert_true_partition(&p);
    }

    #[test]
    fn every_pivot_partitions_twelve_choose_two() {
        for i in 0..12 {
            let p = build_swap_partition(12, 2, i, 100 + i as u64).unwrap();
            assert_true_partition(&p);
            assert_eq!(p.support_count(), 66);
            let mean = 66.0 / p.groups.len() as f64;
            assert!((mean - (p.nominal_size() + 1.0)).abs() < 1e-12);
            assert!(p.balanced, "pivot {i} left unbalanced");
        }
    }

    #[test]
    fn larger_spaces_partition_and_balance() {
        for (kc, l, i) in [(20, 3, 7), (16, 4, 0), (30, 2, 29)] {
            let p = build_swap_partition(kc, l, i, 9).unwrap();
            assert_true_partition(&p);
            assert!(p.balanced, "K_c = {kc}, L = {l}");
        }
    }

    #[test]
    fn same_seed_same_partition() {
        let a = build_swap_partition(14, 3, 2, 5).unwrap();
        let b = build_swap_partition(14, 3, 2, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_infeasible_inputs() {
        assert!(matches!(build_swap_partition(100, 10, 0, 0), Err(Error::EnumerationBudget { .. })));
        assert!(build_swap_partition(10, 0, 0, 0).is_err());
        assert!(build_swap_partition(10, 10, 0, 0).is_err());
        assert!(build_swap_partition(10, 2, 10, 0).is_err());
    }
}
