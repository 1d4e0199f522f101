//! Min k-Union through any RBSC solver.
//!
//! The reduction keeps the sets as red neighborhoods and gives each set `ℓ = ⌈ln k⌉ + 1` blue
//! elements drawn uniformly with replacement from `[k]`. Any feasible cover uses at least
//! `k' = ⌊k/ℓ⌋` sets, and its first `k'` sets cost no more than the cover. The set of an
//! optimal k-union is itself a cover with probability at least `1 - 1/e`.
//!
//! The iterative solver repeatedly picks `k'` sets for the remaining budget (best of `⌈ln n⌉`
//! reductions), removes them and shrinks `k` until `k` sets are chosen.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{MkuInstance, MkuSolution, RbscInstance, RbscSet};
use crate::oracles::bruteforce_mku;
use crate::rbsc::{solve_rbsc, RbscParams};
use crate::util::lg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionParams {
    /// Blue samples per set.
    pub ell: usize,
    pub k_prime: usize,
    pub seed: u64,
}

impl ReductionParams {
    pub fn for_k(k: usize, seed: u64) -> Self {
        assert!(k >= 1, "the reduction needs k >= 1");
        let ell = (k as f64).ln().ceil() as usize + 1;
        ReductionParams { ell, k_prime: k / ell, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub instance: RbscInstance,
    pub params: ReductionParams,
    /// Raw draws per set, before deduplication.
    pub samples: Vec<Vec<usize>>,
}

pub fn reduce_mku_to_rbsc(instance: &MkuInstance, seed: u64) -> Reduction {
    let params = ReductionParams::for_k(instance.k, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<usize>> =
        instance.sets.iter().map(|_| (0..params.ell).map(|_| rng.gen_range(0..instance.k)).collect()).collect();
    let sets = instance
        .sets
        .iter()
        .zip(&samples)
        .map(|(reds, draws)| {
            let mut blue = draws.clone();
            blue.sort_unstable();
            blue.dedup();
            RbscSet { blue, red: reds.clone() }
        })
        .collect();
    Reduction { instance: RbscInstance { k: instance.k, n: instance.n, sets }, params, samples }
}

/// First `k'` sets of an RBSC solution, in solution order.
pub fn truncate_to_k_prime(chosen: &[usize], k_prime: usize) -> Vec<usize> {
    chosen.iter().copied().take(k_prime).collect()
}

/// Any RBSC approximation: returns chosen set indices in pick order.
pub trait RbscSolver: Sync {
    fn solve(&self, instance: &RbscInstance, seed: u64) -> Result<Vec<usize>>;
}

/// The partition-and-round approximation with fixed parameters.
pub struct ApproxSolver(pub RbscParams);

impl RbscSolver for ApproxSolver {
    fn solve(&self, instance: &RbscInstance, seed: u64) -> Result<Vec<usize>> {
        let params = RbscParams { seed, ..self.0.clone() };
        Ok(solve_rbsc(instance, &params)?.solution.chosen_sets)
    }
}

impl<F> RbscSolver for F
where
    F: Fn(&RbscInstance, u64) -> Result<Vec<usize>> + Sync,
{
    fn solve(&self, instance: &RbscInstance, seed: u64) -> Result<Vec<usize>> {
        self(instance, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub k_remaining: usize,
    pub ell: usize,
    pub k_prime: usize,
    /// Original set ids picked this round.
    pub picked: Vec<usize>,
    /// RBSC cost of the cover the picked sets were truncated from.
    pub rbsc_cost: Option<usize>,
    pub repeats: usize,
    pub feasible_repeats: usize,
    /// No repeat produced a cover, so the `k'` smallest sets were taken.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkuReport {
    pub solution: MkuSolution,
    pub rounds: Vec<RoundReport>,
    /// `4 ℓ log₂ k` for the original `k`.
    pub round_bound: f64,
}

/// `⌈ln n⌉`, at least one.
pub fn repeat_count(n: usize) -> usize {
    ((n.max(1) as f64).ln().ceil() as usize).max(1)
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    (seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)).rotate_left(17)
}

/// Truncated cover, its union size and the RBSC cost of one feasible repeat.
type Repeat = (Vec<usize>, usize, usize);

/// One round: `k'` sets of `instance` from the best of `⌈ln n⌉` reductions. Set ids are local.
fn pick_round(instance: &MkuInstance, solver: &dyn RbscSolver, seed: u64) -> Result<RoundReport> {
    let params = ReductionParams::for_k(instance.k, seed);
    let repeats = repeat_count(instance.n);
    let results: Vec<Result<Option<Repeat>>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let reduction = reduce_mku_to_rbsc(instance, mix(seed, r as u64, 1));
            match solver.solve(&reduction.instance, mix(seed, r as u64, 2)) {
                Ok(chosen) => {
                    if !reduction.instance.is_feasible(&chosen) {
                        return Err(Error::Structural("RBSC solver returned an infeasible cover".into()));
                    }
                    let rbsc_cost = reduction.instance.cost(&chosen);
                    let picked = truncate_to_k_prime(&chosen, params.k_prime);
                    let cost = instance.union_size(&picked);
                    Ok(Some((picked, cost, rbsc_cost)))
                }
                Err(Error::Infeasible(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut best: Option<Repeat> = None;
    let mut feasible = 0;
    for res in results {
        if let Some(candidate) = res? {
            feasible += 1;
            if best.as_ref().is_none_or(|b| candidate.1 < b.1) {
                best = Some(candidate);
            }
        }
    }
    let (picked, rbsc_cost, fallback) = match best {
        Some((picked, _, rbsc_cost)) => (picked, Some(rbsc_cost), false),
        None => {
            let mut order: Vec<usize> = (0..instance.m()).collect();
            order.sort_by_key(|&j| (instance.sets[j].len(), j));
            (order.into_iter().take(params.k_prime).collect(), None, true)
        }
    };
    Ok(RoundReport {
        k_remaining: instance.k,
        ell: params.ell,
        k_prime: params.k_prime,
        picked,
        rbsc_cost,
        repeats,
        feasible_repeats: feasible,
        fallback,
    })
}

pub fn solve_mku_via_rbsc(instance: &MkuInstance, solver: &dyn RbscSolver, seed: u64) -> Result<MkuReport> {
    instance.validate()?;
    if instance.k > instance.m() {
        return Err(Error::InvalidParameter(format!("k = {} exceeds m = {}", instance.k, instance.m())));
    }
    let mut remaining: Vec<usize> = (0..instance.m()).collect();
    let mut chosen = Vec::new();
    let mut rounds = Vec::new();
    while chosen.len() < instance.k {
        let sub = MkuInstance {
            n: instance.n,
            k: instance.k - chosen.len(),
            sets: remaining.iter().map(|&j| instance.sets[j].clone()).collect(),
        };
        let mut round = pick_round(&sub, solver, mix(seed, rounds.len() as u64, 3))?;
        round.picked = round.picked.iter().map(|&j| remaining[j]).collect();
        chosen.extend(&round.picked);
        remaining.retain(|j| !round.picked.contains(j));
        rounds.push(round);
    }
    let ell = ReductionParams::for_k(instance.k, seed).ell;
    chosen.sort_unstable();
    Ok(MkuReport { solution: instance.solution(chosen), rounds, round_bound: 4.0 * ell as f64 * lg(instance.k as f64) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessStats {
    pub trials: usize,
    /// Fraction of trials whose optimal k sets cover every blue element.
    pub frequency: f64,
    /// Average over blue elements of the fraction of trials missing it.
    pub miss_rate: f64,
    /// `(1 - 1/k)^{kℓ}`.
    pub analytic_miss: f64,
}

pub fn validate_reduction_success(instance: &MkuInstance, trials: usize, seed: u64) -> Result<SuccessStats> {
    let opt = bruteforce_mku(instance)?;
    let k = instance.k;
    let ell = ReductionParams::for_k(k, seed).ell;
    let misses: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let reduction = reduce_mku_to_rbsc(instance, mix(seed, t as u64, 4));
            let mut hit = vec![false; k];
            for &j in &opt.chosen_sets {
                for &b in &reduction.instance.sets[j].blue {
                    hit[b] = true;
                }
            }
            hit.into_iter().map(|h| !h).collect()
        })
        .collect();
    let successes = misses.iter().filter(|m| m.iter().all(|&x| !x)).count();
    let total_misses: usize = misses.iter().map(|m| m.iter().filter(|&&x| x).count()).sum();
    let denom = trials.max(1) as f64;
    Ok(SuccessStats {
        trials,
        frequency: successes as f64 / denom,
        miss_rate: total_misses as f64 / (denom * k as f64),
        analytic_miss: (1.0 - 1.0 / k as f64).powi((k * ell) as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::canonical;

    #[test]
    fn parameters() {
        assert_eq!(ReductionParams::for_k(1, 0), ReductionParams { ell: 1, k_prime: 1, seed: 0 });
        assert_eq!(ReductionParams::for_k(3, 0).ell, 3);
        assert_eq!(ReductionParams::for_k(8, 0).ell, 4);
        assert_eq!(ReductionParams::for_k(8, 0).k_prime, 2);
        for k in 1..200 {
            assert!(ReductionParams::for_k(k, 0).k_prime >= 1);
        }
    }

    #[test]
    fn single_blue_makes_every_set_a_cover() {
        let inst = MkuInstance { n: 4, k: 1, sets: vec![vec![0, 1], vec![2], vec![3]] };
        let reduction = reduce_mku_to_rbsc(&inst, 7);
        assert!(reduction.instance.sets.iter().all(|s| s.blue == vec![0]));
        for j in 0..3 {
            assert!(reduction.instance.is_feasible(&[j]));
        }
    }

    #[test]
    fn reduction_is_deterministic() {
        let inst = canonical::mku_small_1();
        assert_eq!(reduce_mku_to_rbsc(&inst, 5), reduce_mku_to_rbsc(&inst, 5));
        assert_ne!(reduce_mku_to_rbsc(&inst, 5).samples, reduce_mku_to_rbsc(&inst, 6).samples);
    }

    #[test]
    fn full_budget_takes_every_set() {
        let inst = MkuInstance { n: 5, k: 3, sets: vec![vec![0, 1], vec![2], vec![3, 4]] };
        let report = solve_mku_via_rbsc(&inst, &ApproxSolver(RbscParams::default()), 1).unwrap();
        assert_eq!(report.solution.chosen_sets, vec![0, 1, 2]);
        assert_eq!(report.solution.cost, 5);
    }

    #[test]
    fn canonical_instance_returns_k_sets() {
        let inst = canonical::mku_small_1();
        let report = solve_mku_via_rbsc(&inst, &ApproxSolver(RbscParams::default()), 3).unwrap();
        assert_eq!(report.solution.chosen_sets.len(), inst.k);
        assert!(inst.is_feasible(&report.solution.chosen_sets));
        assert!(report.rounds.len() as f64 <= report.round_bound);
    }
}
