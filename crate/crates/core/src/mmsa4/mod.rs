//! Approximation for depth-4 circuits: blue OR gates, AND gates, red OR gates, variables.
//!
//! Each progress step works on the residual circuit. For every guess of the optimum (doubling)
//! and every dyadic guess of the blue degree scale it either takes the cheapest single AND gate
//! (large degree scale) or solves the lifted LP, buckets it and rounds by one of two cases.
//! Candidates that break a structural guarantee are rejected. The first guess of the optimum
//! with an accepted candidate wins and its cheapest candidate per newly satisfied blue gate is
//! applied. If no guess yields a candidate the step falls back to the cheapest single gate.

pub mod bucketing;
pub mod lp;
pub mod rounding;
pub mod view;

use std::path::PathBuf;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{MmsaInstance, MmsaSolution};
use crate::setcover::{fractional_set_cover, greedy_set_cover};
use crate::util::{doubling_ladder, dyadic_up_to, lg};
use bucketing::{bucket_all, BucketingBounds};
use lp::{build_mmsa4_lp, Point};
use rounding::{case1_round, case2_round, case2_select, split_triples, Case, CaseTwoSelection};
use view::View;

/// Initial constant in the reported bound `C' N^{1/3} log³ N`.
pub const BOUND_CONSTANT: f64 = 16.0;

pub fn approximation_bound(size: usize) -> f64 {
    BOUND_CONSTANT * (size as f64).cbrt() * lg(size as f64).powi(3)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mmsa4Params {
    pub seed: u64,
    /// Trade-off parameter between the two cases; `m^{1/3}` when unset.
    pub tradeoff: Option<f64>,
    /// Degree scales above `k / m^epsilon` use the single-gate route.
    pub epsilon: f64,
    pub rounding_trials: usize,
    pub lp_dump_dir: Option<PathBuf>,
}

impl Default for Mmsa4Params {
    fn default() -> Self {
        Mmsa4Params { seed: 0, tradeoff: None, epsilon: 1.0 / 3.0, rounding_trials: 100, lp_dump_dir: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Cheapest single AND gate for a large degree scale.
    Direct,
    CaseOne,
    CaseTwo,
    /// Cheapest single AND gate after every guess failed.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mmsa4Step {
    pub route: Route,
    pub guess: Option<usize>,
    pub delta: Option<usize>,
    /// Original ids.
    pub j_alg: Vec<usize>,
    pub s_alg: Vec<usize>,
    pub uncovered_before: usize,
    pub new_blues: usize,
    pub ratio: f64,
    pub trials: usize,
    pub bucketing_bounds: Option<BucketingBounds>,
    pub selection: Option<CaseTwoSelection>,
}

/// Why lifted-LP candidates were rejected, summed over all steps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejections {
    pub infeasible_lp: usize,
    pub numerical_lp: usize,
    pub no_bucket: usize,
    pub lifting_degenerate: usize,
    pub j0_bounds: usize,
    pub neighbor_bounds: usize,
    pub triple_count: usize,
    pub case_two_bounds: usize,
    pub rounding_exhausted: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mmsa4Report {
    pub solution: MmsaSolution,
    pub steps: Vec<Mmsa4Step>,
    pub rejections: Rejections,
    pub lp_solves: usize,
    pub bound_constant: f64,
    /// `C' N^{1/3} log³ N` with `N` the circuit size.
    pub bound: f64,
    /// The same expression with `N` replaced by the number of AND gates above the variables'
    /// parents, the quantity the analysis tracks.
    pub and_gate_bound: f64,
}

/// Residual view restricted to AND gates whose red children admit a fractional cover of weight
/// at most `opt_guess`.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub view: View,
    /// Original ids of the discarded AND gates.
    pub removed: Vec<usize>,
}

/// Fractional cover value of the residual red children of each AND gate of `view`.
pub fn cover_values(view: &View) -> Result<Vec<f64>> {
    (0..view.m()).map(|j| fractional_set_cover(&view.j_reds[j], &view.var_reds)).collect()
}

pub fn preprocess_mmsa4(instance: &MmsaInstance, chosen: &[bool], opt_guess: f64) -> Result<Preprocessed> {
    let full = View::new(instance, chosen, None);
    let values = cover_values(&full)?;
    preprocess_with(instance, chosen, &full, &values, opt_guess)
}

fn preprocess_with(
    instance: &MmsaInstance,
    chosen: &[bool],
    full: &View,
    values: &[f64],
    opt_guess: f64,
) -> Result<Preprocessed> {
    let mut allowed = vec![false; instance.layers[1]];
    let mut removed = Vec::new();
    for (j, &v) in values.iter().enumerate() {
        if v <= opt_guess + 1e-9 {
            allowed[full.js[j]] = true;
        } else {
            removed.push(full.js[j]);
        }
    }
    let view = View::new(instance, chosen, Some(&allowed));
    if let Some(&l) = view.stranded_blues().first() {
        return Err(Error::Infeasible(format!(
            "blue gate {} has no AND child coverable within {opt_guess}",
            view.blues[l]
        )));
    }
    Ok(Preprocessed { view, removed })
}

/// Whether the degree scale is large enough for the single-gate route.
pub fn direct_route_applies(view: &View, delta: usize, epsilon: f64) -> bool {
    delta as f64 > view.k() as f64 / (view.m() as f64).powf(epsilon)
}

struct Candidate {
    route: Route,
    j_alg: Vec<usize>,
    s_alg: Vec<usize>,
    trials: usize,
    bucketing_bounds: Option<BucketingBounds>,
    selection: Option<CaseTwoSelection>,
}

enum Rejected {
    InfeasibleLp,
    NumericalLp,
    NoBucket,
    LiftingDegenerate,
    J0Bounds,
    NeighborBounds,
    TripleCount,
    CaseTwoBounds,
    RoundingExhausted,
}

impl Rejections {
    fn record(&mut self, r: &Rejected) {
        match r {
            Rejected::InfeasibleLp => self.infeasible_lp += 1,
            Rejected::NumericalLp => self.numerical_lp += 1,
            Rejected::NoBucket => self.no_bucket += 1,
            Rejected::LiftingDegenerate => self.lifting_degenerate += 1,
            Rejected::J0Bounds => self.j0_bounds += 1,
            Rejected::NeighborBounds => self.neighbor_bounds += 1,
            Rejected::TripleCount => self.triple_count += 1,
            Rejected::CaseTwoBounds => self.case_two_bounds += 1,
            Rejected::RoundingExhausted => self.rounding_exhausted += 1,
        }
    }
}

/// Cheapest single AND gate by greedy cover size per blue child.
fn direct_candidate(view: &View) -> Result<Option<Candidate>> {
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    for j in 0..view.m() {
        let cover = greedy_set_cover(&view.j_reds[j], &view.var_reds)?;
        let blues = view.j_blues[j].len();
        if best.as_ref().is_none_or(|(_, b, c)| cover.len() * b < c.len() * blues) {
            best = Some((j, blues, cover));
        }
    }
    Ok(best.map(|(j, _, cover)| Candidate {
        route: Route::Direct,
        j_alg: vec![view.js[j]],
        s_alg: cover.into_iter().map(|h| view.vars[h]).collect(),
        trials: 1,
        bucketing_bounds: None,
        selection: None,
    }))
}

fn lifted_candidate(
    view: &View,
    guess: usize,
    delta: usize,
    params: &Mmsa4Params,
    rng: &mut ChaCha8Rng,
    tag: &str,
) -> Result<std::result::Result<Candidate, Rejected>> {
    let model = build_mmsa4_lp(view, delta as f64, guess as f64)?;
    if let Some(dir) = &params.lp_dump_dir {
        std::fs::write(dir.join(format!("mmsa4_{tag}.lp")), model.model.to_lp_format())?;
    }
    let solution = match model.model.solve() {
        Ok(s) => s,
        Err(Error::NumericalFailure(msg)) => {
            debug!("{tag}: {msg}");
            return Ok(Err(Rejected::NumericalLp));
        }
        Err(e) => return Err(e),
    };
    if !solution.is_optimal() {
        return Ok(Err(Rejected::InfeasibleLp));
    }
    let point = Point { lp: &model, values: &solution.values };
    let bucketing = match bucket_all(view, &point) {
        Ok(Some(b)) => b,
        Ok(None) => return Ok(Err(Rejected::NoBucket)),
        Err(Error::LiftingDegenerate(_)) => return Ok(Err(Rejected::LiftingDegenerate)),
        Err(e) => return Err(e),
    };
    let bucketing_bounds = BucketingBounds::compute(view, &bucketing);
    if !bucketing_bounds.j0_bounds_hold() {
        return Ok(Err(Rejected::J0Bounds));
    }
    if !bucketing_bounds.neighbor_bounds_hold() {
        return Ok(Err(Rejected::NeighborBounds));
    }
    if !bucketing_bounds.triple_count_holds() {
        return Ok(Err(Rejected::TripleCount));
    }
    let tradeoff = params.tradeoff.unwrap_or_else(|| (view.m() as f64).cbrt());
    let split = split_triples(&bucketing, tradeoff, guess as f64);
    let outcome = match split.case(&bucketing) {
        Case::One => case1_round(view, &bucketing, &split, params.rounding_trials, rng),
        Case::Two => {
            let selection =
                case2_select(view, &point, &bucketing, &split, guess as f64).expect("case two has a nonempty P1");
            if !selection.holds() {
                return Ok(Err(Rejected::CaseTwoBounds));
            }
            case2_round(view, &point, &bucketing, selection, params.rounding_trials, rng)
        }
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(Error::RoundingExhausted(_)) => return Ok(Err(Rejected::RoundingExhausted)),
        Err(e) => return Err(e),
    };
    Ok(Ok(Candidate {
        route: if outcome.case == Case::One { Route::CaseOne } else { Route::CaseTwo },
        j_alg: outcome.j_alg.iter().map(|&j| view.js[j]).collect(),
        s_alg: outcome.s_alg.iter().map(|&h| view.vars[h]).collect(),
        trials: outcome.trials,
        bucketing_bounds: Some(bucketing_bounds),
        selection: outcome.selection,
    }))
}

fn uncovered_count(instance: &MmsaInstance, chosen: &[bool]) -> usize {
    instance.evaluate_layers(chosen)[0].iter().filter(|&&v| !v).count()
}

fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(seed, |acc, &p| (acc ^ p).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(29))
}

pub fn solve_mmsa4(instance: &MmsaInstance, params: &Mmsa4Params) -> Result<Mmsa4Report> {
    instance.validate()?;
    if instance.t != 4 {
        return Err(Error::InvalidParameter(format!("expected depth 4, found {}", instance.t)));
    }
    if !instance.evaluate(&vec![true; instance.variable_count()]) {
        return Err(Error::Infeasible("the circuit is false even with every variable set".into()));
    }
    let mut chosen = vec![false; instance.variable_count()];
    let mut steps = Vec::new();
    let mut rejections = Rejections::default();
    let mut lp_solves = 0;
    loop {
        let uncovered_before = uncovered_count(instance, &chosen);
        if uncovered_before == 0 {
            break;
        }
        let full = View::new(instance, &chosen, None);
        let values = cover_values(&full)?;
        let step_index = steps.len() as u64;
        let mut accepted: Option<(Candidate, usize, Option<usize>, usize)> = None;

        for guess in doubling_ladder(full.s().max(1)) {
            let pre = match preprocess_with(instance, &chosen, &full, &values, guess as f64) {
                Ok(p) => p,
                Err(Error::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            };
            let view = &pre.view;
            let deltas = dyadic_up_to(view.k());
            let lifted: Vec<usize> =
                deltas.iter().copied().filter(|&d| !direct_route_applies(view, d, params.epsilon)).collect();
            let mut found: Vec<(Candidate, Option<usize>)> = Vec::new();
            if lifted.len() < deltas.len() {
                if let Some(c) = direct_candidate(view)? {
                    found.push((c, None));
                }
            }
            let results: Vec<Result<std::result::Result<Candidate, Rejected>>> = lifted
                .par_iter()
                .map(|&delta| {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(mix_seed(params.seed, &[step_index, guess as u64, delta as u64]));
                    let tag = format!("s{step_index}_g{guess}_d{delta}");
                    lifted_candidate(view, guess, delta, params, &mut rng, &tag)
                })
                .collect();
            lp_solves += results.len();
            for (delta, res) in lifted.iter().zip(results) {
                match res? {
                    Ok(c) => found.push((c, Some(*delta))),
                    Err(r) => rejections.record(&r),
                }
            }
            let mut best: Option<(f64, Candidate, Option<usize>, usize)> = None;
            for (c, delta) in found {
                let mut next = chosen.clone();
                for &h in &c.s_alg {
                    next[h] = true;
                }
                let gained = uncovered_before - uncovered_count(instance, &next);
                if gained == 0 {
                    continue;
                }
                let ratio = c.s_alg.len() as f64 / gained as f64;
                if best.as_ref().is_none_or(|(r, ..)| ratio < *r) {
                    best = Some((ratio, c, delta, gained));
                }
            }
            if let Some((_, c, delta, gained)) = best {
                accepted = Some((c, guess, delta, gained));
                break;
            }
            debug!("step {step_index}: guess {guess} produced no candidate");
        }

        let (candidate, guess, delta, gained) = match accepted {
            Some((c, g, d, gained)) => (c, Some(g), d, gained),
            None => {
                let mut c = direct_candidate(&full)?.ok_or_else(|| Error::Infeasible("no AND gate remains".into()))?;
                c.route = Route::Fallback;
                let mut next = chosen.clone();
                for &h in &c.s_alg {
                    next[h] = true;
                }
                let gained = uncovered_before - uncovered_count(instance, &next);
                (c, None, None, gained)
            }
        };
        for &h in &candidate.s_alg {
            chosen[h] = true;
        }
        steps.push(Mmsa4Step {
            route: candidate.route,
            guess,
            delta,
            j_alg: candidate.j_alg,
            s_alg: candidate.s_alg.clone(),
            uncovered_before,
            new_blues: gained,
            ratio: candidate.s_alg.len() as f64 / gained.max(1) as f64,
            trials: candidate.trials,
            bucketing_bounds: candidate.bucketing_bounds,
            selection: candidate.selection,
        });
        if gained == 0 {
            return Err(Error::NumericalFailure("progress step covered no blue gate".into()));
        }
    }
    let vars: Vec<usize> = (0..chosen.len()).filter(|&h| chosen[h]).collect();
    let solution = MmsaSolution::new(vars);
    debug_assert!(instance.evaluate_set(&solution.variables));
    Ok(Mmsa4Report {
        solution,
        steps,
        rejections,
        lp_solves,
        bound_constant: BOUND_CONSTANT,
        bound: approximation_bound(instance.size()),
        and_gate_bound: approximation_bound(instance.layers[1]),
    })
}
