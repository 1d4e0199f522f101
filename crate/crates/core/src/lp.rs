//! Linear programming: a model builder and a dense bounded-variable primal simplex.
//!
//! The solver runs a two-phase method on a dense tableau. Variables carry finite lower bounds
//! and optional upper bounds; upper bounds are handled implicitly by bound flipping, so the
//! `[0, 1]` boxes that dominate the solvers' LPs do not add rows. Pricing is Dantzig's rule
//! with lowest-index tie breaking; after a run of degenerate pivots the phase switches to
//! Bland's rule, which cannot cycle.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Constraint { terms, sense, rhs }
    }

    pub fn le(terms: Vec<(VarId, f64)>, rhs: f64) -> Self {
        Self::new(terms, Sense::Le, rhs)
    }

    pub fn ge(terms: Vec<(VarId, f64)>, rhs: f64) -> Self {
        Self::new(terms, Sense::Ge, rhs)
    }

    pub fn eq(terms: Vec<(VarId, f64)>, rhs: f64) -> Self {
        Self::new(terms, Sense::Eq, rhs)
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates this constraint (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintId(pub usize);

#[derive(Debug, Clone)]
pub struct LpModel {
    direction: Direction,
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value in the model's own direction (meaningful only when optimal).
    pub objective: f64,
    pub values: Vec<f64>,
    /// Shadow price of every constraint: the rate of change of the optimal objective per unit
    /// increase of its right-hand side.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Feasibility tolerance for the returned point.
    pub tolerance: f64,
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { tolerance: 1e-7, max_iterations: None, degenerate_limit: 50 }
    }
}

impl LpModel {
    pub fn new(direction: Direction) -> Self {
        LpModel {
            direction,
            names: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Adds a variable with bounds `[lower, upper]`; `upper` may be infinite, `lower` may not.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        assert!(lower.is_finite(), "lower bounds must be finite");
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(0.0);
        VarId(self.names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_name(&self, var: VarId) -> &str {
        &self.names[var.0]
    }

    pub fn bounds(&self, var: VarId) -> (f64, f64) {
        (self.lower[var.0], self.upper[var.0])
    }

    pub fn objective_coefficient(&self, var: VarId) -> f64 {
        self.objective[var.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective_coefficient(&mut self, var: VarId, coefficient: f64) -> Result<()> {
        self.check_var(var)?;
        self.objective[var.0] = coefficient;
        Ok(())
    }

    pub fn add_constraint(&mut self, constraint: Constraint) -> Result<ConstraintId> {
        for &(v, _) in &constraint.terms {
            self.check_var(v)?;
        }
        self.constraints.push(constraint);
        Ok(ConstraintId(self.constraints.len() - 1))
    }

    fn check_var(&self, var: VarId) -> Result<()> {
        if var.0 >= self.names.len() {
            Err(Error::UnknownVariable(var.0))
        } else {
            Ok(())
        }
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of any constraint or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &x) in values.iter().enumerate() {
            worst = worst.max(self.lower[j] - x).max(x - self.upper[j]);
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(values));
        }
        worst
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.solve_with(&SimplexOptions::default())
    }

    pub fn solve_with(&self, options: &SimplexOptions) -> Result<LpSolution> {
        Simplex::build(self, options).run(self)
    }

    /// Renders the model in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let name = |j: usize| sanitize(&self.names[j], j);
        let _ = writeln!(
            out,
            "{}",
            match self.direction {
                Direction::Minimize => "Minimize",
                Direction::Maximize => "Maximize",
            }
        );
        let obj: Vec<(VarId, f64)> =
            self.objective.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, &c)| (VarId(j), c)).collect();
        let _ = writeln!(out, " obj: {}", render_terms(&obj, &name));
        let _ = writeln!(out, "Subject To");
        for (r, c) in self.constraints.iter().enumerate() {
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " c{r}: {} {op} {}", render_terms(&c.terms, &name), c.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for j in 0..self.num_vars() {
            if self.upper[j].is_finite() {
                let _ = writeln!(out, " {} <= {} <= {}", self.lower[j], name(j), self.upper[j]);
            } else {
                let _ = writeln!(out, " {} >= {}", name(j), self.lower[j]);
            }
        }
        out.push_str("End\n");
        out
    }
}

fn sanitize(name: &str, j: usize) -> String {
    let clean: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if clean.is_empty() || clean.starts_with(|c: char| c.is_ascii_digit()) {
        format!("v{j}_{clean}")
    } else {
        clean
    }
}

fn render_terms(terms: &[(VarId, f64)], name: &dyn Fn(usize) -> String) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, &(v, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 {
            "-"
        } else if i == 0 {
            ""
        } else {
            "+"
        };
        let _ = write!(out, "{}{sign} {} {}", if i == 0 { "" } else { " " }, a.abs(), name(v.0));
    }
    out.trim_start().to_string()
}

const PIVOT_TOL: f64 = 1e-7;
const COST_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
/// Bound relaxation used by the first pass of the ratio test.
const FEAS_TOL: f64 = 1e-9;
/// Basic values are recomputed from scratch this often.
const REFRESH_INTERVAL: usize = 100;
/// Relative size of the bound perturbation applied when pivots stall.
const PERTURBATION: f64 = 1e-7;
const MAX_PERTURBATIONS: usize = 3;

/// Per-row bookkeeping of how the model row was transformed into tableau form.
#[derive(Debug, Clone, Copy)]
struct RowInfo {
    /// `+1` or `-1`: the tableau row is `flip * (model row)`.
    flip: f64,
    /// Column holding `±e_r` in the transformed matrix, used to read duals.
    aux_col: usize,
    aux_coef: f64,
}

struct Simplex {
    rows: usize,
    cols: usize,
    structural: usize,
    first_artificial: usize,
    tableau: Vec<f64>,
    beta: Vec<f64>,
    /// Transformed right-hand sides of the original rows.
    rhs0: Vec<f64>,
    /// Right-hand sides the basic values are consistent with; differs from `rhs0` while the
    /// bounds are perturbed.
    rhs_work: Vec<f64>,
    perturbed: bool,
    perturbations: usize,
    /// Sparse columns of the initial transformed matrix.
    columns: Vec<Vec<(usize, f64)>>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    enterable: Vec<bool>,
    reduced: Vec<f64>,
    row_info: Vec<RowInfo>,
    iterations: usize,
    max_iterations: usize,
    degenerate_limit: usize,
    tolerance: f64,
    rhs_scale: f64,
    trivially_infeasible: bool,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Simplex {
    fn build(model: &LpModel, options: &SimplexOptions) -> Self {
        let n = model.num_vars();
        let rows = model.constraints.len();
        let mut trivially_infeasible = false;
        let upper_struct: Vec<f64> = (0..n)
            .map(|j| {
                let width = model.upper[j] - model.lower[j];
                if width < -options.tolerance {
                    trivially_infeasible = true;
                }
                width.max(0.0)
            })
            .collect();

        // Dense transformed rows over structural columns, plus shifted right-hand sides.
        let mut dense_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(rows);
        let mut rhs = Vec::with_capacity(rows);
        let mut slack_sign = Vec::with_capacity(rows);
        let mut needs_art = Vec::with_capacity(rows);
        let mut flips = Vec::with_capacity(rows);
        for c in &model.constraints {
            let mut merged: Vec<(usize, f64)> = c.terms.iter().map(|&(v, a)| (v.0, a)).collect();
            merged.sort_by_key(|&(v, _)| v);
            let mut terms: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
            for (v, a) in merged {
                match terms.last_mut() {
                    Some(last) if last.0 == v => last.1 += a,
                    _ => terms.push((v, a)),
                }
            }
            let shift: f64 = terms.iter().map(|&(v, a)| a * model.lower[v]).sum();
            let b = c.rhs - shift;
            let (sign, flip, art) = match c.sense {
                Sense::Le if b >= 0.0 => (1.0, 1.0, false),
                Sense::Le => (1.0, -1.0, true),
                Sense::Ge if b <= 0.0 => (-1.0, -1.0, false),
                Sense::Ge => (-1.0, 1.0, true),
                Sense::Eq if b >= 0.0 => (0.0, 1.0, true),
                Sense::Eq => (0.0, -1.0, true),
            };
            dense_rows.push(terms);
            rhs.push(b * flip);
            slack_sign.push(sign * flip);
            needs_art.push(art);
            flips.push(flip);
        }

        let slack_count = slack_sign.iter().filter(|&&s| s != 0.0).count();
        let art_count = needs_art.iter().filter(|&&a| a).count();
        let first_slack = n;
        let first_artificial = n + slack_count;
        let cols = first_artificial + art_count;

        let mut tableau = vec![0.0; rows * cols];
        let mut basis = vec![0; rows];
        let mut row_info = Vec::with_capacity(rows);
        let mut next_slack = first_slack;
        let mut next_art = first_artificial;
        for r in 0..rows {
            let base = r * cols;
            for &(v, a) in &dense_rows[r] {
                tableau[base + v] = a * flips[r];
            }
            let mut info = None;
            if slack_sign[r] != 0.0 {
                tableau[base + next_slack] = slack_sign[r];
                info = Some(RowInfo { flip: flips[r], aux_col: next_slack, aux_coef: slack_sign[r] });
                if !needs_art[r] {
                    basis[r] = next_slack;
                }
                next_slack += 1;
            }
            if needs_art[r] {
                tableau[base + next_art] = 1.0;
                basis[r] = next_art;
                if info.is_none() {
                    info = Some(RowInfo { flip: flips[r], aux_col: next_art, aux_coef: 1.0 });
                }
                next_art += 1;
            }
            row_info.push(info.expect("every row has an auxiliary column"));
        }

        let mut upper = upper_struct;
        upper.extend(std::iter::repeat_n(f64::INFINITY, cols - n));
        let mut basic_row = vec![None; cols];
        for (r, &b) in basis.iter().enumerate() {
            basic_row[b] = Some(r);
        }
        let mut columns = vec![Vec::new(); cols];
        for r in 0..rows {
            for (c, column) in columns.iter_mut().enumerate() {
                let a = tableau[r * cols + c];
                if a != 0.0 {
                    column.push((r, a));
                }
            }
        }
        let rhs_scale = 1.0 + rhs.iter().fold(0.0f64, |m, b: &f64| m.max(b.abs()));
        let max_iterations = options.max_iterations.unwrap_or(1000 + 100 * (rows + cols));
        Simplex {
            rows,
            cols,
            structural: n,
            first_artificial,
            tableau,
            beta: rhs.clone(),
            rhs_work: rhs.clone(),
            rhs0: rhs,
            perturbed: false,
            perturbations: 0,
            columns,
            basis,
            basic_row,
            upper,
            at_upper: vec![false; cols],
            enterable: vec![true; cols],
            reduced: vec![0.0; cols],
            row_info,
            iterations: 0,
            max_iterations,
            degenerate_limit: options.degenerate_limit,
            tolerance: options.tolerance,
            rhs_scale,
            trivially_infeasible,
        }
    }

    fn run(mut self, model: &LpModel) -> Result<LpSolution> {
        let n = self.structural;
        let infeasible = |iterations| LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::NAN,
            values: vec![f64::NAN; n],
            duals: vec![f64::NAN; model.constraints.len()],
            iterations,
        };
        if self.trivially_infeasible {
            return Ok(infeasible(0));
        }

        if self.first_artificial < self.cols {
            let mut cost = vec![0.0; self.cols];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            self.price(&cost);
            // Phase one is bounded below by zero, so it always terminates optimally.
            let _ = self.phase()?;
            self.refresh_beta();
            let infeasibility: f64 =
                (0..self.rows).filter(|&r| self.basis[r] >= self.first_artificial).map(|r| self.beta[r]).sum();
            if infeasibility > self.tolerance * self.rhs_scale {
                return Ok(infeasible(self.iterations));
            }
            self.drive_out_artificials();
        }

        let sign = match model.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        let mut cost = vec![0.0; self.cols];
        for j in 0..n {
            cost[j] = sign * model.objective[j];
        }
        self.price(&cost);
        if let PhaseEnd::Unbounded = self.phase()? {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: sign * f64::INFINITY,
                values: vec![f64::NAN; n],
                duals: vec![f64::NAN; model.constraints.len()],
                iterations: self.iterations,
            });
        }

        self.refresh_beta();
        let mut values = vec![0.0; n];
        for j in 0..n {
            let shifted = match self.basic_row[j] {
                Some(r) => self.beta[r],
                None if self.at_upper[j] => self.upper[j],
                None => 0.0,
            };
            let clamped = shifted.clamp(0.0, self.upper[j]);
            values[j] = model.lower[j] + clamped;
        }
        let duals = self
            .row_info
            .iter()
            .map(|info| {
                let pi = -self.reduced[info.aux_col] / info.aux_coef;
                sign * pi * info.flip
            })
            .collect();
        let violation = model.max_violation(&values);
        let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if violation > self.tolerance * scale.max(self.rhs_scale) {
            return Err(Error::NumericalFailure(format!("solution violates the model by {violation:e}")));
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective: model.objective_value(&values),
            values,
            duals,
            iterations: self.iterations,
        })
    }

    /// Recomputes reduced costs `d = c - c_B B^{-1} A` from scratch.
    fn price(&mut self, cost: &[f64]) {
        self.reduced.copy_from_slice(cost);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tableau[r * self.cols..(r + 1) * self.cols];
            for (d, &a) in self.reduced.iter_mut().zip(row) {
                *d -= cb * a;
            }
        }
        for r in 0..self.rows {
            self.reduced[self.basis[r]] = 0.0;
        }
    }

    fn phase(&mut self) -> Result<PhaseEnd> {
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::NumericalFailure(format!("iteration cap {} reached", self.max_iterations)));
            }
            let Some((col, dir)) = self.choose_entering(bland) else {
                if self.perturbed {
                    self.remove_perturbation()?;
                    degenerate_run = 0;
                    continue;
                }
                return Ok(PhaseEnd::Optimal);
            };
            self.iterations += 1;
            if self.iterations.is_multiple_of(REFRESH_INTERVAL) {
                self.refresh_beta();
            }

            let (leave, best_theta) = self.ratio_test(col, dir, bland);
            if !best_theta.is_finite() {
                return Ok(PhaseEnd::Unbounded);
            }

            if best_theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > self.degenerate_limit {
                    // Perturbation breaks ties; Bland's rule is the last resort.
                    if self.perturbations < MAX_PERTURBATIONS {
                        self.perturb();
                    } else {
                        bland = true;
                    }
                    degenerate_run = 0;
                }
            } else {
                degenerate_run = 0;
            }
            self.step(col, dir, leave, best_theta);
        }
    }

    /// Moves the entering column by `theta` and pivots on the leaving row, if any.
    fn step(&mut self, col: usize, dir: f64, leave: Option<usize>, theta: f64) {
        if theta > 0.0 {
            for r in 0..self.rows {
                let a = self.tableau[r * self.cols + col];
                if a != 0.0 {
                    self.beta[r] -= a * dir * theta;
                }
            }
        }
        match leave {
            None => {
                // Bound flip of the entering variable.
                self.at_upper[col] = !self.at_upper[col];
            }
            Some(r) => {
                let entering_value = if dir > 0.0 { theta } else { self.upper[col] - theta };
                let leaving = self.basis[r];
                let alpha = self.tableau[r * self.cols + col] * dir;
                self.at_upper[leaving] = alpha < 0.0;
                self.beta[r] = entering_value;
                self.pivot(r, col);
            }
        }
    }

    /// Shifts every basic value inward by a small pseudo-random amount and updates the working
    /// right-hand sides to match.
    fn perturb(&mut self) {
        self.perturbations += 1;
        self.perturbed = true;
        let mut state = 0x2545_F491_4F6C_DD1Du64 ^ self.perturbations as u64;
        for r in 0..self.rows {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let basic = self.basis[r];
            let ub = self.upper[basic];
            if ub <= 0.0 {
                continue;
            }
            let unit = (state >> 11) as f64 / (1u64 << 53) as f64;
            let mut shift = PERTURBATION * (1.0 + self.beta[r].abs()) * (1.0 + unit);
            if ub.is_finite() {
                shift = shift.min(ub / 4.0);
                if self.beta[r] > ub / 2.0 {
                    shift = -shift;
                }
            }
            self.beta[r] += shift;
            for &(row, a) in &self.columns[basic] {
                self.rhs_work[row] += a * shift;
            }
        }
    }

    /// Restores the original right-hand sides and repairs primal feasibility with dual simplex
    /// pivots, which keep the reduced costs optimal.
    fn remove_perturbation(&mut self) -> Result<()> {
        self.perturbed = false;
        self.rhs_work.clone_from(&self.rhs0);
        self.refresh_beta();
        loop {
            let mut worst: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let ub = self.upper[self.basis[r]];
                let excess = if self.beta[r] < 0.0 { -self.beta[r] } else { self.beta[r] - ub };
                if excess > FEAS_TOL * (1.0 + ub.min(self.beta[r].abs())) && worst.is_none_or(|(_, w)| excess > w) {
                    worst = Some((r, excess));
                }
            }
            let Some((r, _)) = worst else { return Ok(()) };
            if self.iterations >= self.max_iterations {
                return Err(Error::NumericalFailure(format!("iteration cap {} reached", self.max_iterations)));
            }
            self.iterations += 1;
            let below = self.beta[r] < 0.0;
            // The leaving value must move toward its violated bound.
            let need = if below { -1.0 } else { 1.0 };
            let mut best: Option<(usize, f64, f64, f64)> = None;
            for j in 0..self.cols {
                if self.basic_row[j].is_some() || !self.enterable[j] || self.upper[j] <= 0.0 {
                    continue;
                }
                let alpha = self.tableau[r * self.cols + j];
                let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
                if alpha * dir * need <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.reduced[j].abs() / alpha.abs();
                let better =
                    best.is_none_or(|(_, br, ba, _)| ratio < br - 1e-12 || (ratio <= br + 1e-12 && alpha.abs() > ba));
                if better {
                    best = Some((j, ratio, alpha.abs(), dir));
                }
            }
            let Some((col, _, _, dir)) = best else {
                return Err(Error::NumericalFailure(
                    "no dual pivot restores feasibility after removing the perturbation".into(),
                ));
            };
            let alpha = self.tableau[r * self.cols + col] * dir;
            let target = if below { 0.0 } else { self.upper[self.basis[r]] };
            let theta = (self.beta[r] - target) / alpha;
            for row in 0..self.rows {
                let a = self.tableau[row * self.cols + col];
                if a != 0.0 {
                    self.beta[row] -= a * dir * theta;
                }
            }
            let leaving = self.basis[r];
            self.at_upper[leaving] = !below;
            self.beta[r] = if dir > 0.0 { theta } else { self.upper[col] - theta };
            self.pivot(r, col);
        }
    }

    /// Two-pass ratio test. The first pass finds the largest step keeping every basic variable
    /// within its bounds relaxed by `FEAS_TOL`; the second picks, among rows blocking within
    /// that step, the largest pivot (or the lowest basic index under Bland's rule). Returns the
    /// leaving row (`None` for a bound flip) and the step length.
    fn ratio_test(&self, col: usize, dir: f64, bland: bool) -> (Option<usize>, f64) {
        // Bland's rule needs exact ties, so the relaxation is dropped.
        let feas_tol = if bland { 0.0 } else { FEAS_TOL };
        let mut relaxed = f64::INFINITY;
        for r in 0..self.rows {
            let alpha = self.tableau[r * self.cols + col] * dir;
            if alpha > PIVOT_TOL {
                relaxed = relaxed.min((self.beta[r].max(0.0) + feas_tol) / alpha);
            } else if alpha < -PIVOT_TOL {
                let ub = self.upper[self.basis[r]];
                if ub.is_finite() {
                    relaxed = relaxed.min(((ub - self.beta[r]).max(0.0) + feas_tol) / -alpha);
                }
            }
        }
        if self.upper[col] <= relaxed {
            return (None, self.upper[col]);
        }
        if !relaxed.is_finite() {
            return (None, f64::INFINITY);
        }
        let mut leave: Option<(usize, f64, f64)> = None;
        for r in 0..self.rows {
            let alpha = self.tableau[r * self.cols + col] * dir;
            let theta = if alpha > PIVOT_TOL {
                self.beta[r].max(0.0) / alpha
            } else if alpha < -PIVOT_TOL {
                let ub = self.upper[self.basis[r]];
                if !ub.is_finite() {
                    continue;
                }
                (ub - self.beta[r]).max(0.0) / -alpha
            } else {
                continue;
            };
            if theta > relaxed * (1.0 + 1e-12) {
                continue;
            }
            let better = match leave {
                None => true,
                Some((cur, cur_alpha, _)) => {
                    if bland {
                        self.basis[r] < self.basis[cur]
                    } else {
                        alpha.abs() > cur_alpha.abs()
                    }
                }
            };
            if better {
                leave = Some((r, alpha, theta));
            }
        }
        match leave {
            Some((r, _, theta)) => (Some(r), theta),
            None => (None, self.upper[col]),
        }
    }

    /// Recomputes the basic values from the original right-hand sides, using the columns of
    /// the initial auxiliary basis as `B^{-1}`.
    fn refresh_beta(&mut self) {
        let mut beta = vec![0.0; self.rows];
        for (r0, info) in self.row_info.iter().enumerate() {
            let b = self.rhs_work[r0];
            if b == 0.0 {
                continue;
            }
            let scale = b / info.aux_coef;
            for (r, value) in beta.iter_mut().enumerate() {
                *value += self.tableau[r * self.cols + info.aux_col] * scale;
            }
        }
        for j in 0..self.cols {
            if self.basic_row[j].is_none() && self.at_upper[j] && self.upper[j] > 0.0 {
                let u = self.upper[j];
                for (r, value) in beta.iter_mut().enumerate() {
                    *value -= self.tableau[r * self.cols + j] * u;
                }
            }
        }
        self.beta = beta;
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols {
            if self.basic_row[j].is_some() || !self.enterable[j] || self.upper[j] <= 0.0 {
                continue;
            }
            let d = self.reduced[j];
            let dir = if !self.at_upper[j] && d < -COST_TOL {
                1.0
            } else if self.at_upper[j] && d > COST_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Makes `col` basic in row `r`. `beta[r]` must already hold the entering value.
    fn pivot(&mut self, r: usize, col: usize) {
        let cols = self.cols;
        let piv = self.tableau[r * cols + col];
        let (before, rest) = self.tableau.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for a in prow.iter_mut() {
            *a /= piv;
        }
        prow[col] = 1.0;
        let nz: Vec<usize> = (0..cols).filter(|&c| prow[c].abs() > DROP_TOL).collect();
        let eliminate = |row: &mut [f64]| {
            let f = row[col];
            if f == 0.0 {
                return;
            }
            for &c in &nz {
                let v = row[c] - f * prow[c];
                row[c] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[col] = 0.0;
        };
        for row in before.chunks_exact_mut(cols) {
            eliminate(row);
        }
        for row in after.chunks_exact_mut(cols) {
            eliminate(row);
        }
        eliminate(&mut self.reduced);

        let leaving = self.basis[r];
        self.basic_row[leaving] = None;
        self.basis[r] = col;
        self.basic_row[col] = Some(r);
        self.at_upper[col] = false;
    }

    /// After phase one, pivots zero-valued artificials out of the basis where possible and
    /// freezes every artificial at zero.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let mut best: Option<usize> = None;
            let mut best_abs = 1e-7;
            for c in 0..self.first_artificial {
                if self.basic_row[c].is_some() {
                    continue;
                }
                let a = self.tableau[r * self.cols + c].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(c);
                }
            }
            if let Some(c) = best {
                let value = if self.at_upper[c] { self.upper[c] } else { 0.0 };
                // The artificial sits at (numerically) zero, so the pivot is degenerate.
                let leaving = self.basis[r];
                self.at_upper[leaving] = false;
                self.beta[r] = value;
                self.pivot(r, c);
            }
        }
        for c in self.first_artificial..self.cols {
            self.upper[c] = 0.0;
            self.enterable[c] = false;
        }
        for r in 0..self.rows {
            if self.basis[r] >= self.first_artificial {
                self.beta[r] = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-7
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LpModel::new(Direction::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        let y = lp.add_var("y", 0.0, f64::INFINITY);
        lp.set_objective_coefficient(x, 3.0).unwrap();
        lp.set_objective_coefficient(y, 5.0).unwrap();
        lp.add_constraint(Constraint::le(vec![(x, 1.0)], 4.0)).unwrap();
        lp.add_constraint(Constraint::le(vec![(y, 2.0)], 12.0)).unwrap();
        lp.add_constraint(Constraint::le(vec![(x, 3.0), (y, 2.0)], 18.0)).unwrap();
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(approx(sol.objective, 36.0));
        assert!(approx(sol.value(x), 2.0) && approx(sol.value(y), 6.0));
        assert!(approx(sol.duals[0], 0.0));
        assert!(approx(sol.duals[1], 1.5));
        assert!(approx(sol.duals[2], 1.0));
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // min x + y s.t. x + y >= 2, x - y = 0.5, x <= 3
        let mut lp = LpModel::new(Direction::Minimize);
        let x = lp.add_var("x", 0.0, 3.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY);
        lp.set_objective_coefficient(x, 1.0).unwrap();
        lp.set_objective_coefficient(y, 1.0).unwrap();
        lp.add_constraint(Constraint::ge(vec![(x, 1.0), (y, 1.0)], 2.0)).unwrap();
        lp.add_constraint(Constraint::eq(vec![(x, 1.0), (y, -1.0)], 0.5)).unwrap();
        let sol = lp.solve().unwrap();
        assert!(approx(sol.objective, 2.0));
        assert!(approx(sol.value(x), 1.25));
    }

    #[test]
    fn infeasible_and_unbounded_statuses() {
        let mut lp = LpModel::new(Direction::Minimize);
        let x = lp.add_var("x", 0.0, 1.0);
        lp.add_constraint(Constraint::ge(vec![(x, 1.0)], 2.0)).unwrap();
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);

        let mut lp = LpModel::new(Direction::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        let y = lp.add_var("y", 0.0, f64::INFINITY);
        lp.set_objective_coefficient(x, 1.0).unwrap();
        lp.add_constraint(Constraint::le(vec![(x, 1.0), (y, -1.0)], 1.0)).unwrap();
        assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn lower_bounds_are_shifted() {
        let mut lp = LpModel::new(Direction::Minimize);
        let x = lp.add_var("x", 2.0, 5.0);
        lp.set_objective_coefficient(x, 1.0).unwrap();
        let sol = lp.solve().unwrap();
        assert!(approx(sol.value(x), 2.0));
        let mut lp = LpModel::new(Direction::Maximize);
        let x = lp.add_var("x", 2.0, 5.0);
        lp.set_objective_coefficient(x, 1.0).unwrap();
        assert!(approx(lp.solve().unwrap().value(x), 5.0));
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let mut lp = LpModel::new(Direction::Minimize);
        lp.add_var("x", 0.0, 1.0);
        let err = lp.add_constraint(Constraint::le(vec![(VarId(7), 1.0)], 1.0)).unwrap_err();
        assert_eq!(err, Error::UnknownVariable(7));
    }

    #[test]
    fn added_constraint_changes_optimum() {
        let mut lp = LpModel::new(Direction::Maximize);
        let x = lp.add_var("x", 0.0, 1.0);
        let y = lp.add_var("y", 0.0, 1.0);
        lp.set_objective_coefficient(x, 1.0).unwrap();
        lp.set_objective_coefficient(y, 1.0).unwrap();
        assert!(approx(lp.solve().unwrap().objective, 2.0));
        lp.add_constraint(Constraint::le(vec![(x, 1.0), (y, 1.0)], 1.5)).unwrap();
        assert!(approx(lp.solve().unwrap().objective, 1.5));
    }

    #[test]
    fn lp_text_dump() {
        let mut lp = LpModel::new(Direction::Maximize);
        let x = lp.add_var("x[0]", 0.0, 1.0);
        lp.set_objective_coefficient(x, 2.0).unwrap();
        lp.add_constraint(Constraint::le(vec![(x, 1.0)], 0.5)).unwrap();
        let text = lp.to_lp_format();
        assert!(text.starts_with("Maximize\n obj: 2 x_0_\nSubject To\n c0: 1 x_0_ <= 0.5\n"), "{text}");
        assert!(text.ends_with("End\n"));
    }
}
