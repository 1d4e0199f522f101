//! Red-blue set cover approximation.
//!
//! The driver guesses the optimum by doubling. For each guess it takes the red-free sets,
//! discards sets with more reds than the guess, partitions the rest by red degree and then
//! repeats progress steps until enough blue elements are covered. A step either takes a
//! residual set (all of its reds excluded by the partition) or solves the class LPs, picks the
//! class and pivot red with the best value per unit degree, and rounds that LP. A rounding that
//! cannot certify a nonpositive potential rejects the guess.

pub mod partition;
pub mod progress;

use std::path::PathBuf;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{RbscInstance, RbscSolution};
use crate::util::lg;
use partition::{partition_by_red_degree, Bucket, Partition};
use progress::{build_progress_lp, candidates, potential_coefficient, round_progress, Coverage};

/// LP value and sparse solution of one pivot's progress LP.
type SolvedPivot = (f64, Vec<(usize, f64)>);

/// Constant in the approximation bound `C m^{1/3} log^{4/3} n log k`.
pub const BOUND_CONSTANT: f64 = 8.0;

/// `C m^{1/3} log₂^{4/3} n log₂ k`, the guaranteed ratio for the full problem.
pub fn approximation_bound(m: usize, n: usize, k: usize) -> f64 {
    BOUND_CONSTANT * (m as f64).cbrt() * lg(n as f64).powf(4.0 / 3.0) * lg(k as f64)
}

/// `C m^{1/3} log₂^{4/3} n log₂² k`: the bound under the class-budget convention, one log k
/// factor above [`approximation_bound`].
pub fn budget_convention_bound(m: usize, n: usize, k: usize) -> f64 {
    approximation_bound(m, n, k) * lg(k as f64)
}

/// Class-size parameter `n0 = OPT m^{1/3} log^{4/3} n log² k` for a guess of the optimum.
pub fn class_budget(opt_guess: usize, m: usize, n: usize, k: usize) -> f64 {
    opt_guess as f64 * (m as f64).cbrt() * lg(n as f64).powf(4.0 / 3.0) * lg(k as f64).powi(2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbscParams {
    /// Seeds the randomized final step of the partial variant.
    pub seed: u64,
    /// Multiplier applied to the class budget `n0`.
    pub n0_factor: f64,
    /// Guesses beyond the first power of two at least `n` are tried only if all smaller ones
    /// fail; this caps how far the ladder continues.
    pub max_guess_doublings: u32,
    /// Trials for the sampled final step of the partial variant.
    pub sample_trials: usize,
    /// When set, every solved LP is written here in LP text format.
    pub lp_dump_dir: Option<PathBuf>,
}

impl Default for RbscParams {
    fn default() -> Self {
        RbscParams { seed: 0, n0_factor: 1.0, max_guess_doublings: 24, sample_trials: 200, lp_dump_dir: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// A set whose reds were all excluded by the partition.
    Residual,
    /// Derandomized rounding of a class LP.
    Rounded,
    /// Sampled rounding accepted in the last step of the partial variant.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressStep {
    pub kind: StepKind,
    pub alpha: Option<usize>,
    pub pivot_red: Option<usize>,
    pub r_alpha: usize,
    pub lp_value: Option<f64>,
    /// Chosen sets, indexed in the input instance.
    pub chosen: Vec<usize>,
    pub uncovered_before: usize,
    pub new_blues: usize,
    /// Surviving reds of the class touched by the step.
    pub class_reds: usize,
    /// Reds added to the solution, counting excluded ones.
    pub new_reds: usize,
    pub coefficient: f64,
    pub potential: f64,
    /// `class_reds / new_blues`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuessOutcome {
    pub guess: usize,
    pub accepted: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbscReport {
    pub solution: RbscSolution,
    /// Accepted guess of the optimum; zero when red-free sets already cover everything.
    pub guess: usize,
    pub n0: usize,
    pub free_sets: Vec<usize>,
    pub steps: Vec<ProgressStep>,
    pub guesses: Vec<GuessOutcome>,
    pub partition: Option<Partition>,
    pub bound: f64,
    pub budget_convention_bound: f64,
}

pub fn solve_rbsc(instance: &RbscInstance, params: &RbscParams) -> Result<RbscReport> {
    solve(instance, instance.k, params)
}

/// Covers at least `k_hat` blue elements.
pub fn solve_partial_rbsc(instance: &RbscInstance, k_hat: usize, params: &RbscParams) -> Result<RbscReport> {
    if k_hat > instance.k {
        return Err(Error::InvalidParameter(format!("k_hat = {k_hat} exceeds k = {}", instance.k)));
    }
    solve(instance, k_hat, params)
}

/// One full run with a fixed guess of the optimum.
pub fn solve_with_guess(
    instance: &RbscInstance,
    target: usize,
    guess: usize,
    params: &RbscParams,
) -> Result<RbscReport> {
    instance.validate()?;
    let mut state = State::new(instance, target);
    state.take_free_sets();
    let (steps, n0, partition) = state.run_guess(guess, params)?;
    Ok(state.report(guess, n0, steps, vec![GuessOutcome { guess, accepted: true, reason: None }], partition))
}

fn solve(instance: &RbscInstance, target: usize, params: &RbscParams) -> Result<RbscReport> {
    instance.validate()?;
    let coverable = instance.k - instance.uncoverable_blues().len();
    if coverable < target {
        return Err(Error::Infeasible(format!(
            "only {coverable} of the {target} required blue elements lie in some set"
        )));
    }
    let mut base = State::new(instance, target);
    base.take_free_sets();
    if base.done() {
        return Ok(base.report(0, 0, Vec::new(), Vec::new(), None));
    }
    let mut ladder = crate::util::doubling_ladder(instance.n.max(1));
    for _ in 0..params.max_guess_doublings {
        ladder.push(ladder.last().unwrap() * 2);
    }
    let mut outcomes = Vec::new();
    let mut last_err = None;
    for guess in ladder {
        let mut state = base.clone();
        match state.run_guess(guess, params) {
            Ok((steps, n0, partition)) => {
                outcomes.push(GuessOutcome { guess, accepted: true, reason: None });
                return Ok(state.report(guess, n0, steps, outcomes, partition));
            }
            Err(err @ (Error::RoundingFailure(_) | Error::Infeasible(_))) => {
                debug!("guess {guess} rejected: {err}");
                outcomes.push(GuessOutcome { guess, accepted: false, reason: Some(err.to_string()) });
                last_err = Some(err);
            }
            Err(other) => return Err(other),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::RoundingFailure("no guess accepted".into())))
}

#[derive(Clone)]
struct State<'a> {
    instance: &'a RbscInstance,
    target: usize,
    uncovered: Vec<bool>,
    covered: usize,
    touched: Vec<bool>,
    chosen: Vec<usize>,
    free: Vec<usize>,
}

impl<'a> State<'a> {
    fn new(instance: &'a RbscInstance, target: usize) -> Self {
        State {
            instance,
            target,
            uncovered: vec![true; instance.k],
            covered: 0,
            touched: vec![false; instance.n],
            chosen: Vec::new(),
            free: Vec::new(),
        }
    }

    fn done(&self) -> bool {
        self.covered >= self.target
    }

    fn uncovered_count(&self) -> usize {
        self.instance.k - self.covered
    }

    /// Adds a set, returning `(new blues, new reds)`.
    fn take(&mut self, j: usize) -> (usize, usize) {
        let set = &self.instance.sets[j];
        let mut blues = 0;
        for &b in &set.blue {
            if self.uncovered[b] {
                self.uncovered[b] = false;
                blues += 1;
            }
        }
        let mut reds = 0;
        for &r in &set.red {
            if !self.touched[r] {
                self.touched[r] = true;
                reds += 1;
            }
        }
        self.covered += blues;
        self.chosen.push(j);
        (blues, reds)
    }

    fn take_free_sets(&mut self) {
        for j in 0..self.instance.m() {
            if self.instance.sets[j].red.is_empty() {
                self.take(j);
                self.free.push(j);
            }
        }
    }

    fn report(
        &self,
        guess: usize,
        n0: usize,
        steps: Vec<ProgressStep>,
        guesses: Vec<GuessOutcome>,
        partition: Option<Partition>,
    ) -> RbscReport {
        let inst = self.instance;
        RbscReport {
            solution: inst.solution(self.chosen.clone()),
            guess,
            n0,
            free_sets: self.free.clone(),
            steps,
            guesses,
            partition,
            bound: approximation_bound(inst.m(), inst.n, inst.k),
            budget_convention_bound: budget_convention_bound(inst.m(), inst.n, inst.k),
        }
    }

    fn run_guess(
        &mut self,
        guess: usize,
        params: &RbscParams,
    ) -> Result<(Vec<ProgressStep>, usize, Option<Partition>)> {
        let inst = self.instance;
        let keep: Vec<usize> =
            (0..inst.m()).filter(|&j| !inst.sets[j].red.is_empty() && inst.sets[j].red.len() <= guess).collect();
        let sub = inst.restrict(&keep);
        let mut reachable = self.uncovered.clone();
        for set in &sub.sets {
            for &b in &set.blue {
                reachable[b] = false;
            }
        }
        let stranded = reachable.iter().filter(|&&u| u).count();
        if self.uncovered_count() - stranded + self.covered < self.target {
            return Err(Error::Infeasible(format!("{stranded} blue elements need sets with more than {guess} reds")));
        }
        let n0 = (class_budget(guess, inst.m(), inst.n, inst.k) * params.n0_factor).ceil().max(1.0) as usize;
        let partition = partition_by_red_degree(&sub, n0)?;
        let mut steps = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (guess as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        while !self.done() {
            let step = self.progress(&sub, &keep, &partition, guess, params, &mut rng, steps.len())?;
            steps.push(step);
        }
        Ok((steps, n0, Some(partition)))
    }

    #[allow(clippy::too_many_arguments)]
    fn progress(
        &mut self,
        sub: &RbscInstance,
        keep: &[usize],
        partition: &Partition,
        guess: usize,
        params: &RbscParams,
        rng: &mut ChaCha8Rng,
        step_index: usize,
    ) -> Result<ProgressStep> {
        let inst = self.instance;
        let uncovered_before = self.uncovered_count();
        let coefficient = potential_coefficient(inst.m(), inst.n, guess as f64, uncovered_before);

        if let Some(j) = self.best_residual(sub, &partition.residual) {
            let (new_blues, new_reds) = self.take(keep[j]);
            return Ok(ProgressStep {
                kind: StepKind::Residual,
                alpha: None,
                pivot_red: None,
                r_alpha: 0,
                lp_value: None,
                chosen: vec![keep[j]],
                uncovered_before,
                new_blues,
                class_reds: 0,
                new_reds,
                coefficient,
                potential: -coefficient * new_blues as f64,
                ratio: 0.0,
            });
        }

        let pivots: Vec<(usize, usize)> = partition
            .buckets
            .iter()
            .enumerate()
            .flat_map(|(a, b)| b.reds.iter().map(move |&i| (a, i)))
            .filter(|&(a, i)| {
                candidates(sub, &partition.buckets[a], i)
                    .iter()
                    .any(|&j| sub.sets[j].blue.iter().any(|&b| self.uncovered[b]))
            })
            .collect();
        let uncovered = &self.uncovered;
        let solved: Vec<Result<SolvedPivot>> = pivots
            .par_iter()
            .map(|&(a, i0)| {
                let lp = build_progress_lp(sub, &partition.buckets[a], i0, uncovered, guess as f64)?;
                if let Some(dir) = &params.lp_dump_dir {
                    let path = dir.join(format!("rbsc_g{guess}_s{step_index}_a{a}_i{i0}.lp"));
                    std::fs::write(&path, lp.model.to_lp_format())?;
                }
                let sol = lp.model.solve()?;
                if !sol.is_optimal() {
                    return Err(Error::NumericalFailure("progress LP is not optimal".into()));
                }
                Ok((sol.objective, lp.x.iter().map(|&(j, v)| (j, sol.value(v))).collect()))
            })
            .collect();
        let mut best: Option<(f64, usize)> = None;
        let mut results = Vec::with_capacity(solved.len());
        for (idx, res) in solved.into_iter().enumerate() {
            let (value, x) = res?;
            let score = value / partition.buckets[pivots[idx].0].r_alpha as f64;
            if value > 1e-9 && best.is_none_or(|(s, _)| score > s + 1e-12) {
                best = Some((score, idx));
            }
            results.push((value, x));
        }
        let Some((_, idx)) = best else {
            return Err(Error::RoundingFailure("no class LP has a positive value".into()));
        };
        let (alpha, i0) = pivots[idx];
        let bucket = &partition.buckets[alpha];
        let (lp_value, x) = &results[idx];

        let mut kind = StepKind::Rounded;
        let mut picked: Option<(Vec<usize>, usize, usize)> = None;
        let needed = self.target - self.covered;
        if self.target < inst.k {
            picked = self.sample_final(sub, bucket, x, needed, params.sample_trials, rng);
            if picked.is_some() {
                kind = StepKind::Sampled;
            }
        }
        let (chosen, class_reds, new_blues_expected) = match picked {
            Some(p) => p,
            None => {
                let r = round_progress(sub, bucket, x, &self.uncovered, coefficient)?;
                (r.chosen, r.red_count, r.blue_count)
            }
        };
        let mut new_blues = 0;
        let mut new_reds = 0;
        let chosen_global: Vec<usize> = chosen.iter().map(|&j| keep[j]).collect();
        for &j in &chosen_global {
            let (b, r) = self.take(j);
            new_blues += b;
            new_reds += r;
        }
        debug_assert_eq!(new_blues, new_blues_expected);
        let potential = class_reds as f64 - coefficient * new_blues as f64;
        Ok(ProgressStep {
            kind,
            alpha: Some(alpha),
            pivot_red: Some(i0),
            r_alpha: bucket.r_alpha,
            lp_value: Some(*lp_value),
            chosen: chosen_global,
            uncovered_before,
            new_blues,
            class_reds,
            new_reds,
            coefficient,
            potential,
            ratio: class_reds as f64 / new_blues as f64,
        })
    }

    /// Residual set with the fewest new reds per newly covered blue element.
    fn best_residual(&self, sub: &RbscInstance, residual: &[usize]) -> Option<usize> {
        let mut best: Option<(usize, usize, usize)> = None;
        for &j in residual {
            let set = &sub.sets[j];
            let blues = set.blue.iter().filter(|&&b| self.uncovered[b]).count();
            if blues == 0 {
                continue;
            }
            let reds = set.red.iter().filter(|&&r| !self.touched[r]).count();
            // Compare reds/blues by cross-multiplication.
            let better = best.is_none_or(|(_, br, bb)| reds * bb < br * blues);
            if better {
                best = Some((j, reds, blues));
            }
        }
        best.map(|(j, _, _)| j)
    }

    /// Randomized rounding for the step that completes a partial cover: accepts the first
    /// sample covering at least half the expected blue count whose class reds stay within a
    /// Chernoff band around their expectation. Used only when the expectation exceeds twice
    /// the remaining demand.
    fn sample_final(
        &self,
        sub: &RbscInstance,
        bucket: &Bucket,
        x: &[(usize, f64)],
        needed: usize,
        trials: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<(Vec<usize>, usize, usize)> {
        let sets: Vec<usize> = x.iter().map(|&(j, _)| j).collect();
        let coverage = Coverage::new(sub, bucket, &sets, &self.uncovered);
        let p: Vec<f64> = x.iter().map(|&(_, v)| v.clamp(0.0, 1.0)).collect();
        let expected_blues = coverage.expected_blues(&p);
        if expected_blues <= 2.0 * needed as f64 {
            return None;
        }
        let expected_reds = coverage.expected_reds(&p);
        let log_term = (2.0 * sub.n.max(1) as f64).ln();
        let red_band = expected_reds + (3.0 * expected_reds * log_term).sqrt() + log_term;
        for _ in 0..trials {
            let pick: Vec<f64> = p.iter().map(|&q| if rng.gen::<f64>() < q { 1.0 } else { 0.0 }).collect();
            let (reds, blues) = coverage.counts(&pick);
            if blues as f64 >= expected_blues / 2.0 && reds as f64 <= red_band && blues > 0 {
                let chosen = (0..pick.len()).filter(|&q| pick[q] >= 1.0).map(|q| sets[q]).collect();
                return Some((chosen, reds, blues));
            }
        }
        None
    }
}
