//! Circuits of depth five and more, by recursion on depth two less.
//!
//! A frame of even depth `D` looks at its last three layers: AND gates `j`, red OR gates `i`
//! and variables `h`. It discards gates whose red children need more than the guessed optimum
//! fractionally, then repeatedly solves the covering LP
//!
//! ```text
//! Σ w_h ≤ OPT,   y_i ≤ Σ_{h ∈ Γ(i)} w_h,   x_j ≤ y_i for i ∈ Γ(j),   0 ≤ x, y, w ≤ 1
//! ```
//!
//! plus accumulated cuts. Gates with large `x_j` are taken outright (with a greedy cover of
//! their red children); the rest becomes a depth `D - 2` instance whose variables are the AND
//! gates. A small sub-solution is accepted; a large one certifies a cut on the LP.
//!
//! Odd depths get a pass-through OR layer first. Depth 4 goes to [`crate::mmsa4`], depth 3 to
//! [`crate::rbsc`] and depth 2 to greedy set cover.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::circuit::{PartialCircuit, SubCircuit};
use crate::error::{Error, Result};
use crate::instance::{mmsa3_to_rbsc, MmsaInstance, MmsaSolution};
use crate::lp::{Constraint, Direction, LpModel, LpStatus, VarId};
use crate::mmsa4::{self, Mmsa4Params};
use crate::rbsc::{self, RbscParams};
use crate::setcover::{fractional_set_cover, greedy_set_cover};
use crate::util::doubling_ladder;

/// Exponent `δ = (1/3) · 2^{3 - ⌈t/2⌉}`; the ratio for depth `t` is `N^{1-δ}` up to logs.
pub fn delta_exponent(depth: usize) -> f64 {
    2f64.powi(3 - depth.div_ceil(2) as i32) / 3.0
}

/// `1 + ln N`, the greedy set cover factor.
pub fn log_factor(size: usize) -> f64 {
    1.0 + (size.max(1) as f64).ln()
}

/// Guaranteed ratio for depth `depth ≥ 4` on circuits of `size` vertices: the depth-4 bound,
/// then `A_{D} = 2(1 + ln N) √(N · A_{D-2})` for even `D`, and `A_{D+1}` for odd `D`.
pub fn recursion_bound(depth: usize, size: usize) -> f64 {
    assert!(depth >= 4, "the recursion starts at depth 4");
    if depth % 2 == 1 {
        return recursion_bound(depth + 1, size);
    }
    if depth == 4 {
        return mmsa4::approximation_bound(size);
    }
    2.0 * log_factor(size) * (size as f64 * recursion_bound(depth - 2, size)).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmsaParams {
    pub seed: u64,
    /// Replaces the ratio `A` of the outermost frame; it is still raised whenever a cut
    /// cannot be violated.
    pub bound_override: Option<f64>,
    /// Cuts per frame and guess are capped at `cut_cap_factor · N`.
    pub cut_cap_factor: usize,
    pub max_bound_raises: usize,
    pub mmsa4: Mmsa4Params,
    pub rbsc: RbscParams,
}

impl Default for MmsaParams {
    fn default() -> Self {
        MmsaParams {
            seed: 0,
            bound_override: None,
            cut_cap_factor: 10,
            max_bound_raises: 64,
            mmsa4: Mmsa4Params::default(),
            rbsc: RbscParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseSolver {
    Greedy,
    Rbsc,
    Mmsa4,
    Recursion,
}

/// `Σ_{j ∈ gates} x_j ≥ rhs`, with gates as local ids of the frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    pub gates: Vec<usize>,
    pub rhs: usize,
}

/// One frame of the recursion for a fixed guess of the optimum.
#[derive(Debug, Clone)]
pub struct RecursionFrame {
    pub depth: usize,
    /// `N` of this frame's circuit.
    pub size: usize,
    pub opt_guess: usize,
    /// Current `A_D`.
    pub bound: f64,
    /// `A_{D-2}`.
    pub sub_bound: f64,
    pub model: LpModel,
    pub x: Vec<VarId>,
    pub y: Vec<VarId>,
    pub w: Vec<VarId>,
    pub cuts: Vec<Cut>,
}

impl RecursionFrame {
    pub fn new(circuit: &MmsaInstance, opt_guess: usize, bound: f64, sub_bound: f64) -> Result<Self> {
        let depth = circuit.t;
        let (js, is, hs) = (circuit.layers[depth - 3], circuit.layers[depth - 2], circuit.layers[depth - 1]);
        let mut model = LpModel::new(Direction::Minimize);
        let x: Vec<VarId> = (0..js).map(|j| model.add_var(format!("x{j}"), 0.0, 1.0)).collect();
        let y: Vec<VarId> = (0..is).map(|i| model.add_var(format!("y{i}"), 0.0, 1.0)).collect();
        let w: Vec<VarId> = (0..hs).map(|h| model.add_var(format!("w{h}"), 0.0, 1.0)).collect();
        for &v in &w {
            model.set_objective_coefficient(v, 1.0)?;
        }
        model.add_constraint(Constraint::le(w.iter().map(|&v| (v, 1.0)).collect(), opt_guess as f64))?;
        for i in 0..is {
            let mut terms = vec![(y[i], 1.0)];
            terms.extend(circuit.edges[depth - 2][i].iter().map(|&h| (w[h], -1.0)));
            model.add_constraint(Constraint::le(terms, 0.0))?;
        }
        for j in 0..js {
            for &i in &circuit.edges[depth - 3][j] {
                model.add_constraint(Constraint::le(vec![(x[j], 1.0), (y[i], -1.0)], 0.0))?;
            }
        }
        Ok(RecursionFrame { depth, size: circuit.size(), opt_guess, bound, sub_bound, model, x, y, w, cuts: vec![] })
    }

    /// `x` values at an optimal point, or `None` when the LP is infeasible.
    pub fn solve(&self) -> Result<Option<Vec<f64>>> {
        let solution = self.model.solve()?;
        Ok(match solution.status {
            LpStatus::Optimal => Some(self.x.iter().map(|&v| solution.value(v)).collect()),
            LpStatus::Infeasible => None,
            LpStatus::Unbounded => {
                return Err(Error::NumericalFailure("bounded covering LP reported unbounded".into()))
            }
        })
    }

    /// `2(1 + ln N) / A`.
    pub fn take_threshold(&self) -> f64 {
        2.0 * log_factor(self.size) / self.bound
    }

    /// `A / (2 + 2 ln N)`.
    pub fn accept_threshold(&self) -> f64 {
        self.bound / (2.0 * log_factor(self.size))
    }

    /// `⌊A_D / (2(1 + ln N) A_{D-2})⌋ + 1`.
    pub fn cut_rhs(&self) -> usize {
        (self.bound / (2.0 * log_factor(self.size) * self.sub_bound)).floor() as usize + 1
    }

    pub fn gates_to_take(&self, x: &[f64]) -> Vec<usize> {
        let threshold = self.take_threshold();
        (0..x.len()).filter(|&j| x[j] >= threshold - 1e-9).collect()
    }

    /// The cut certified by a sub-solution of `sub_solution_size` gates, if it is too large to
    /// accept. Fails with `NotViolated` when the current point already satisfies the cut.
    pub fn cut_oracle(&self, x: &[f64], taken: &[usize], sub_solution_size: usize) -> Result<Option<Cut>> {
        if sub_solution_size as f64 <= self.accept_threshold() {
            return Ok(None);
        }
        let gates: Vec<usize> = (0..x.len()).filter(|j| taken.binary_search(j).is_err()).collect();
        let rhs = self.cut_rhs();
        let mass: f64 = gates.iter().map(|&j| x[j]).sum();
        if mass >= rhs as f64 - 1e-9 {
            return Err(Error::NotViolated);
        }
        Ok(Some(Cut { gates, rhs }))
    }

    pub fn add_cut(&mut self, cut: Cut) -> Result<()> {
        let terms = cut.gates.iter().map(|&j| (self.x[j], 1.0)).collect();
        self.model.add_constraint(Constraint::ge(terms, cut.rhs as f64))?;
        self.cuts.push(cut);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    /// Nesting level, zero for the outermost frame.
    pub level: usize,
    pub depth: usize,
    pub size: usize,
    pub opt_guess: usize,
    /// `A_D` at acceptance.
    pub bound: f64,
    pub sub_bound: f64,
    pub discarded_gates: usize,
    pub lp_solves: usize,
    /// Cuts in original ids of the frame's AND layer.
    pub cuts: Vec<Cut>,
    /// `Σ x_j` over each cut's gates at the LP point that produced it.
    pub cut_lhs: Vec<f64>,
    pub bound_raises: usize,
    pub taken_gates: usize,
    pub sub_solution_sizes: Vec<usize>,
    /// Greedy cover sizes for the taken gates and for the accepted sub-solution.
    pub cover_sizes: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmsaReport {
    pub solution: MmsaSolution,
    /// Depth actually solved, after embedding odd depths of at least five.
    pub depth: usize,
    pub embedded: bool,
    pub solver: BaseSolver,
    /// Guaranteed ratio of the solver used.
    pub bound: f64,
    pub delta: f64,
    pub frames: Vec<FrameReport>,
}

pub fn solve_mmsa(instance: &MmsaInstance, params: &MmsaParams) -> Result<MmsaReport> {
    instance.validate()?;
    if !instance.evaluate(&vec![true; instance.variable_count()]) {
        return Err(Error::Infeasible("the circuit is false even with every variable set".into()));
    }
    let embedded = instance.t >= 5 && instance.t % 2 == 1;
    let circuit = if embedded { instance.embed_odd_depth() } else { instance.clone() };
    let solver = match circuit.t {
        2 => BaseSolver::Greedy,
        3 => BaseSolver::Rbsc,
        4 => BaseSolver::Mmsa4,
        _ => BaseSolver::Recursion,
    };
    let mut frames = Vec::new();
    let (solution, bound) = solve_at(&circuit, params, 0, params.bound_override, &mut frames)?;
    if !instance.evaluate_set(&solution.variables) {
        return Err(Error::Structural("assembled assignment does not satisfy the circuit".into()));
    }
    Ok(MmsaReport { solution, depth: circuit.t, embedded, solver, bound, delta: delta_exponent(instance.t), frames })
}

/// Solves an even-depth (or depth 2–4) circuit; returns the solution and the ratio used.
fn solve_at(
    circuit: &MmsaInstance,
    params: &MmsaParams,
    level: usize,
    bound_override: Option<f64>,
    frames: &mut Vec<FrameReport>,
) -> Result<(MmsaSolution, f64)> {
    let size = circuit.size();
    match circuit.t {
        2 => {
            let parents = circuit.parents();
            let universe: Vec<usize> = (0..circuit.layers[0]).collect();
            let cover = greedy_set_cover(&universe, &parents[1])?;
            Ok((MmsaSolution::new(cover), log_factor(size)))
        }
        3 => {
            let inst = mmsa3_to_rbsc(circuit);
            let rbsc_params = RbscParams { seed: params.seed ^ level as u64, ..params.rbsc.clone() };
            let report = rbsc::solve_rbsc(&inst, &rbsc_params)?;
            let reds = inst.red_union(&report.solution.chosen_sets);
            let vars = (0..reds.len()).filter(|&h| reds[h]).collect();
            Ok((MmsaSolution::new(vars), report.bound))
        }
        4 => {
            let mmsa4_params = Mmsa4Params { seed: params.seed ^ level as u64, ..params.mmsa4.clone() };
            let report = mmsa4::solve_mmsa4(circuit, &mmsa4_params)?;
            Ok((report.solution, report.bound))
        }
        depth => {
            debug_assert!(depth % 2 == 0);
            let bound = bound_override.unwrap_or_else(|| recursion_bound(depth, size));
            let sub_bound = recursion_bound(depth - 2, size);
            for guess in doubling_ladder(circuit.variable_count().max(1)) {
                match run_frame(circuit, params, level, guess, bound, sub_bound, frames) {
                    Ok((solution, report)) => {
                        let bound = report.bound;
                        frames.push(report);
                        return Ok((solution, bound));
                    }
                    Err(Error::Infeasible(msg)) => debug!("level {level}, guess {guess}: {msg}"),
                    Err(e) => return Err(e),
                }
            }
            Err(Error::Infeasible(format!("no guess of the optimum works at depth {depth}")))
        }
    }
}

/// Covers the red children of `gates` greedily; returns variable ids.
fn cover_children(circuit: &MmsaInstance, var_parents: &[Vec<usize>], gates: &[usize]) -> Result<Vec<usize>> {
    let depth = circuit.t;
    let mut reds: Vec<usize> = gates.iter().flat_map(|&j| circuit.edges[depth - 3][j].iter().copied()).collect();
    reds.sort_unstable();
    reds.dedup();
    greedy_set_cover(&reds, var_parents)
}

fn run_frame(
    circuit: &MmsaInstance,
    params: &MmsaParams,
    level: usize,
    guess: usize,
    bound: f64,
    sub_bound: f64,
    frames: &mut Vec<FrameReport>,
) -> Result<(MmsaSolution, FrameReport)> {
    let depth = circuit.t;
    let and_layer = depth - 3;
    let parents = circuit.parents();
    let mut partial = PartialCircuit::new(circuit);
    let mut discarded = 0;
    for j in 0..circuit.layers[and_layer] {
        if partial.state(and_layer, j) != crate::circuit::GateState::Open {
            continue;
        }
        if fractional_set_cover(&circuit.edges[and_layer][j], &parents[depth - 1])? > guess as f64 + 1e-9 {
            partial.force_false(and_layer, j);
            discarded += 1;
        }
    }
    if partial.is_unsatisfiable() {
        return Err(Error::Infeasible(format!("discarding gates above {guess} leaves the circuit false")));
    }
    let mut report = FrameReport {
        level,
        depth,
        size: circuit.size(),
        opt_guess: guess,
        bound,
        sub_bound,
        discarded_gates: discarded,
        lp_solves: 0,
        cuts: vec![],
        cut_lhs: vec![],
        bound_raises: 0,
        taken_gates: 0,
        sub_solution_sizes: vec![],
        cover_sizes: (0, 0),
    };
    if partial.is_satisfied() {
        return Ok((MmsaSolution::new(vec![]), report));
    }
    let open: SubCircuit = partial.extract(depth);
    let local = &open.instance;
    let local_parents = local.parents();
    let var_parents = &local_parents[depth - 1];
    let mut frame = RecursionFrame::new(local, guess, bound, sub_bound)?;
    let cap = params.cut_cap_factor * frame.size;
    let mut x: Option<Vec<f64>> = None;
    loop {
        if x.is_none() {
            report.lp_solves += 1;
            match frame.solve()? {
                Some(values) => x = Some(values),
                None => return Err(Error::Infeasible(format!("covering LP infeasible at guess {guess}"))),
            }
        }
        let point = x.as_ref().unwrap();
        let taken = frame.gates_to_take(point);
        let mut sub_partial = PartialCircuit::new(local);
        for &j in &taken {
            sub_partial.force_true(and_layer, j);
        }
        let mut sub_frames = Vec::new();
        let chosen_gates: Vec<usize> = if sub_partial.is_satisfied() {
            vec![]
        } else {
            let sub = sub_partial.extract(depth - 2);
            let mut sub_params = params.clone();
            sub_params.seed =
                params.seed.wrapping_mul(31).wrapping_add((report.lp_solves + report.bound_raises) as u64);
            let (solution, _) = solve_at(&sub.instance, &sub_params, level + 1, None, &mut sub_frames)?;
            solution.variables.iter().map(|&v| sub.origin[depth - 3][v]).collect()
        };
        report.sub_solution_sizes.push(chosen_gates.len());
        match frame.cut_oracle(point, &taken, chosen_gates.len()) {
            Ok(None) => {
                let first = cover_children(local, var_parents, &taken)?;
                let second = cover_children(local, var_parents, &chosen_gates)?;
                report.cover_sizes = (first.len(), second.len());
                report.taken_gates = taken.len();
                report.bound = frame.bound;
                report.cuts = frame
                    .cuts
                    .iter()
                    .map(|c| Cut { gates: c.gates.iter().map(|&j| open.origin[and_layer][j]).collect(), rhs: c.rhs })
                    .collect();
                frames.extend(sub_frames);
                let vars = first.into_iter().chain(second).map(|h| open.origin[depth - 1][h]).collect();
                return Ok((MmsaSolution::new(vars), report));
            }
            Ok(Some(cut)) => {
                if frame.cuts.len() >= cap {
                    return Err(Error::CutLoopExhausted(frame.cuts.len()));
                }
                report.cut_lhs.push(cut.gates.iter().map(|&j| point[j]).sum());
                frame.add_cut(cut)?;
                x = None;
            }
            Err(Error::NotViolated) => {
                if report.bound_raises >= params.max_bound_raises {
                    return Err(Error::CutLoopExhausted(frame.cuts.len()));
                }
                report.bound_raises += 1;
                frame.bound *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
}
