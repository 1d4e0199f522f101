//! Exhaustive-search oracles for small instances. They share no code with the solvers.

use crate::error::{Error, Result};
use crate::instance::{MkuInstance, MkuSolution, MmsaInstance, MmsaSolution, RbscInstance, RbscSolution};

pub const RBSC_MAX_SETS: usize = 24;
pub const MKU_MAX_SUBSETS: u128 = 1_000_000;
pub const MMSA_MAX_VARIABLES: usize = 24;

/// Gray-code walk over all subfamilies, tracking blue coverage and red cost incrementally.
/// Calls `visit(mask, covered_blues, red_cost)` for every subset including the empty one.
fn walk_subfamilies(instance: &RbscInstance, mut visit: impl FnMut(u32, usize, usize)) {
    let m = instance.m();
    let mut blue_hits = vec![0u32; instance.k];
    let mut red_hits = vec![0u32; instance.n];
    let mut covered = 0usize;
    let mut cost = 0usize;
    let mut mask: u32 = 0;
    visit(mask, covered, cost);
    for step in 1u64..(1u64 << m) {
        let j = step.trailing_zeros() as usize;
        let adding = mask & (1 << j) == 0;
        mask ^= 1 << j;
        let set = &instance.sets[j];
        for &b in &set.blue {
            if adding {
                blue_hits[b] += 1;
                covered += (blue_hits[b] == 1) as usize;
            } else {
                blue_hits[b] -= 1;
                covered -= (blue_hits[b] == 0) as usize;
            }
        }
        for &r in &set.red {
            if adding {
                red_hits[r] += 1;
                cost += (red_hits[r] == 1) as usize;
            } else {
                red_hits[r] -= 1;
                cost -= (red_hits[r] == 0) as usize;
            }
        }
        visit(mask, covered, cost);
    }
}

fn mask_to_sets(mask: u32) -> Vec<usize> {
    (0..32).filter(|&j| mask & (1 << j) != 0).collect()
}

/// Minimum-cost subfamily covering at least `k_hat` blue elements (all of them for the full
/// problem). Ties go to the first subset in Gray-code order.
pub fn bruteforce_partial_rbsc(instance: &RbscInstance, k_hat: usize) -> Result<RbscSolution> {
    if instance.m() > RBSC_MAX_SETS {
        return Err(Error::SizeLimit(format!("{} sets exceed the exhaustive limit of {RBSC_MAX_SETS}", instance.m())));
    }
    let mut best: Option<(usize, u32)> = None;
    walk_subfamilies(instance, |mask, covered, cost| {
        if covered >= k_hat && best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, mask));
        }
    });
    match best {
        Some((cost, mask)) => Ok(RbscSolution { chosen_sets: mask_to_sets(mask), cost }),
        None => Err(Error::Infeasible(format!("no subfamily covers {k_hat} blue elements"))),
    }
}

pub fn bruteforce_rbsc(instance: &RbscInstance) -> Result<RbscSolution> {
    bruteforce_partial_rbsc(instance, instance.k)
}

/// Best choice of exactly `k` sets, enumerating all `C(m, k)` combinations.
pub fn bruteforce_mku(instance: &MkuInstance) -> Result<MkuSolution> {
    let (m, k) = (instance.m(), instance.k);
    let count = binomial(m as u128, k as u128);
    if count > MKU_MAX_SUBSETS {
        return Err(Error::SizeLimit(format!("C({m}, {k}) = {count} combinations")));
    }
    let mut combo: Vec<usize> = (0..k).collect();
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut seen = vec![0u32; instance.n];
    loop {
        let mut cost = 0;
        for &j in &combo {
            for &x in &instance.sets[j] {
                if seen[x] == 0 {
                    cost += 1;
                }
                seen[x] += 1;
            }
        }
        for &j in &combo {
            for &x in &instance.sets[j] {
                seen[x] = 0;
            }
        }
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, combo.clone()));
        }
        if !next_combination(&mut combo, m) {
            break;
        }
    }
    let (cost, chosen_sets) = best.expect("k <= m guarantees one combination");
    Ok(MkuSolution { chosen_sets, cost })
}

/// Minimum satisfying assignment, trying variable subsets by increasing size and
/// lexicographically within a size.
pub fn bruteforce_mmsa(instance: &MmsaInstance) -> Result<MmsaSolution> {
    let vars = instance.variable_count();
    if vars > MMSA_MAX_VARIABLES {
        return Err(Error::SizeLimit(format!("{vars} variables exceed the exhaustive limit of {MMSA_MAX_VARIABLES}")));
    }
    let mut assignment = vec![false; vars];
    for size in 0..=vars {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            assignment.iter_mut().for_each(|a| *a = false);
            for &h in &combo {
                assignment[h] = true;
            }
            if instance.evaluate(&assignment) {
                return Ok(MmsaSolution::new(combo));
            }
            if !next_combination(&mut combo, vars) {
                break;
            }
        }
    }
    Err(Error::Infeasible("no assignment satisfies the circuit".into()))
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{rbsc_to_mmsa3, RbscSet};

    fn tiny() -> RbscInstance {
        RbscInstance {
            k: 3,
            n: 4,
            sets: vec![
                RbscSet { blue: vec![0, 1], red: vec![0] },
                RbscSet { blue: vec![2], red: vec![1, 2] },
                RbscSet { blue: vec![0, 1, 2], red: vec![0, 1, 2, 3] },
                RbscSet { blue: vec![1, 2], red: vec![0, 3] },
            ],
        }
    }

    #[test]
    fn rbsc_optimum() {
        let sol = bruteforce_rbsc(&tiny()).unwrap();
        assert_eq!(sol.cost, 2);
        assert!(tiny().is_feasible(&sol.chosen_sets));
        assert_eq!(bruteforce_partial_rbsc(&tiny(), 2).unwrap().cost, 1);
        assert_eq!(bruteforce_partial_rbsc(&tiny(), 0).unwrap().cost, 0);
    }

    #[test]
    fn rbsc_matches_circuit_oracle() {
        let circuit = rbsc_to_mmsa3(&tiny());
        assert_eq!(bruteforce_mmsa(&circuit).unwrap().cost, 2);
    }

    #[test]
    fn mku_optimum() {
        let inst = MkuInstance { n: 5, k: 2, sets: vec![vec![0, 1], vec![1, 2], vec![3, 4], vec![0, 1, 2]] };
        let sol = bruteforce_mku(&inst).unwrap();
        assert_eq!(sol.cost, 3);
    }

    #[test]
    fn size_limits() {
        let big = RbscInstance { k: 1, n: 1, sets: vec![RbscSet { blue: vec![0], red: vec![0] }; 25] };
        assert!(matches!(bruteforce_rbsc(&big), Err(Error::SizeLimit(_))));
        let mku = MkuInstance { n: 2, k: 20, sets: vec![vec![0]; 60] };
        assert!(matches!(bruteforce_mku(&mku), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut combo = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut combo, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(binomial(40, 20), 137846528820);
    }
}
