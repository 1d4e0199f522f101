//! Base and partially lifted LP for one guess of the optimum and of the blue degree scale.
//!
//! Base variables: `w_h` per variable, `z_ℓ` per blue gate, `x_j` per AND gate, `y_i` per red
//! gate and `x_j^ℓ` per (AND, blue) edge. Lifted variables condition on one AND gate or one
//! variable: `X_a^{(j)}` for `a ∈ R ∪ S` and `X_a^{(h)}` for every `a`, plus `X_{ℓ,j}^{(h)}`
//! per edge. `X_h^{(j)}` and `X_j^{(h)}` are one shared variable and `X_j^{(j)}` is `x_j`.

use std::f64::consts::E;

use crate::error::Result;
use crate::lp::{Constraint, Direction, LpModel, VarId};
use crate::mmsa4::view::View;
use crate::util::{lg, ln2};

/// Right-hand side of the blue-mass lower bound: `k / (log k log m)`.
pub fn blue_mass(k: usize, m: usize) -> f64 {
    k as f64 / (lg(k as f64) * lg(m as f64))
}

/// Upper multiplier `2e ln(2k)` on the per-blue edge mass.
pub fn blue_degree_cap(k: usize) -> f64 {
    2.0 * E * (2.0 * k.max(1) as f64).ln()
}

#[derive(Debug, Clone)]
pub struct Mmsa4Lp {
    pub model: LpModel,
    pub opt_guess: f64,
    pub delta: f64,
    pub w: Vec<VarId>,
    pub z: Vec<VarId>,
    pub x: Vec<VarId>,
    pub y: Vec<VarId>,
    /// `x_j^ℓ`, aligned with `View::jb_edges`.
    pub xe: Vec<VarId>,
    /// `X_h^{(j)} = X_j^{(h)}`, indexed `[j][h]`.
    pub shared: Vec<Vec<VarId>>,
    /// `X_i^{(j)}`, indexed `[j][i]`.
    pub red_given_j: Vec<Vec<VarId>>,
    /// `X_{h'}^{(h)}`, indexed `[h][h']`.
    pub var_given_var: Vec<Vec<VarId>>,
    /// `X_ℓ^{(h)}`, indexed `[h][ℓ]`.
    pub blue_given_var: Vec<Vec<VarId>>,
    /// `X_{ℓ,j}^{(h)}`, indexed `[h][edge]`.
    pub edge_given_var: Vec<Vec<VarId>>,
    /// `X_i^{(h)}`, indexed `[h][i]`.
    pub red_given_var: Vec<Vec<VarId>>,
}

fn neg(v: VarId, c: f64) -> (VarId, f64) {
    (v, -c)
}

/// Builds the model `min Σ w` over the base constraints and every lifted constraint.
pub fn build_mmsa4_lp(view: &View, delta: f64, opt_guess: f64) -> Result<Mmsa4Lp> {
    let (k, m, n, s) = (view.k(), view.m(), view.n(), view.s());
    let mass = blue_mass(k, m);
    let cap = blue_degree_cap(k);
    let mut lp = LpModel::new(Direction::Minimize);
    let w: Vec<VarId> = (0..s).map(|h| lp.add_var(format!("w{h}"), 0.0, 1.0)).collect();
    let z: Vec<VarId> = (0..k).map(|l| lp.add_var(format!("z{l}"), 0.0, 1.0)).collect();
    let x: Vec<VarId> = (0..m).map(|j| lp.add_var(format!("x{j}"), 0.0, 1.0)).collect();
    let y: Vec<VarId> = (0..n).map(|i| lp.add_var(format!("y{i}"), 0.0, 1.0)).collect();
    let xe: Vec<VarId> = view.jb_edges.iter().map(|&(j, l)| lp.add_var(format!("xe{j}_{l}"), 0.0, 1.0)).collect();
    for &v in &w {
        lp.set_objective_coefficient(v, 1.0)?;
    }
    let mut edges_of_blue = vec![Vec::new(); k];
    let mut edges_of_j = vec![Vec::new(); m];
    for (e, &(j, l)) in view.jb_edges.iter().enumerate() {
        edges_of_blue[l].push(e);
        edges_of_j[j].push(e);
    }

    // Base constraints.
    lp.add_constraint(Constraint::le(w.iter().map(|&v| (v, 1.0)).collect(), opt_guess))?;
    lp.add_constraint(Constraint::ge(z.iter().map(|&v| (v, 1.0)).collect(), mass))?;
    for l in 0..k {
        let sum: Vec<(VarId, f64)> = edges_of_blue[l].iter().map(|&e| (xe[e], 1.0)).collect();
        let mut lower = sum.clone();
        lower.push(neg(z[l], 1.0));
        lp.add_constraint(Constraint::ge(lower, 0.0))?;
        let mut upper = sum;
        upper.push(neg(z[l], cap));
        lp.add_constraint(Constraint::le(upper, 0.0))?;
    }
    for j in 0..m {
        let sum: Vec<(VarId, f64)> = edges_of_j[j].iter().map(|&e| (xe[e], 1.0)).collect();
        let mut lower = sum.clone();
        lower.push(neg(x[j], delta));
        lp.add_constraint(Constraint::ge(lower, 0.0))?;
        let mut upper = sum;
        upper.push(neg(x[j], 2.0 * delta));
        lp.add_constraint(Constraint::le(upper, 0.0))?;
    }
    for (e, &(j, l)) in view.jb_edges.iter().enumerate() {
        lp.add_constraint(Constraint::le(vec![(xe[e], 1.0), neg(x[j], 1.0)], 0.0))?;
        lp.add_constraint(Constraint::le(vec![(xe[e], 1.0), neg(z[l], 1.0)], 0.0))?;
    }
    for i in 0..n {
        let mut row: Vec<(VarId, f64)> = view.red_vars[i].iter().map(|&h| (w[h], 1.0)).collect();
        row.push(neg(y[i], 1.0));
        lp.add_constraint(Constraint::ge(row, 0.0))?;
    }
    for j in 0..m {
        for &i in &view.j_reds[j] {
            lp.add_constraint(Constraint::le(vec![(x[j], 1.0), neg(y[i], 1.0)], 0.0))?;
        }
    }

    // Conditioning on an AND gate j.
    let shared: Vec<Vec<VarId>> =
        (0..m).map(|j| (0..s).map(|h| lp.add_var(format!("Xj{j}_h{h}"), 0.0, 1.0)).collect()).collect();
    let red_given_j: Vec<Vec<VarId>> =
        (0..m).map(|j| (0..n).map(|i| lp.add_var(format!("Xj{j}_i{i}"), 0.0, 1.0)).collect()).collect();
    for j in 0..m {
        for i in 0..n {
            let mut row: Vec<(VarId, f64)> = view.red_vars[i].iter().map(|&h| (shared[j][h], 1.0)).collect();
            row.push(neg(red_given_j[j][i], 1.0));
            lp.add_constraint(Constraint::ge(row, 0.0))?;
        }
        for &i in &view.j_reds[j] {
            lp.add_constraint(Constraint::le(vec![(x[j], 1.0), neg(red_given_j[j][i], 1.0)], 0.0))?;
        }
        for target in shared[j].iter().chain(&red_given_j[j]) {
            lp.add_constraint(Constraint::le(vec![(*target, 1.0), neg(x[j], 1.0)], 0.0))?;
        }
    }

    // Conditioning on a variable h.
    let mut var_given_var = Vec::with_capacity(s);
    let mut blue_given_var = Vec::with_capacity(s);
    let mut edge_given_var = Vec::with_capacity(s);
    let mut red_given_var = Vec::with_capacity(s);
    for h in 0..s {
        let vv: Vec<VarId> = (0..s).map(|g| lp.add_var(format!("Xh{h}_h{g}"), 0.0, 1.0)).collect();
        let bv: Vec<VarId> = (0..k).map(|l| lp.add_var(format!("Xh{h}_l{l}"), 0.0, 1.0)).collect();
        let ev: Vec<VarId> =
            view.jb_edges.iter().map(|&(j, l)| lp.add_var(format!("Xh{h}_e{j}_{l}"), 0.0, 1.0)).collect();
        let rv: Vec<VarId> = (0..n).map(|i| lp.add_var(format!("Xh{h}_i{i}"), 0.0, 1.0)).collect();
        let jv: Vec<VarId> = (0..m).map(|j| shared[j][h]).collect();
        let wh = w[h];

        let mut budget: Vec<(VarId, f64)> = vv.iter().map(|&v| (v, 1.0)).collect();
        budget.push(neg(wh, opt_guess));
        lp.add_constraint(Constraint::le(budget, 0.0))?;
        let mut blue_row: Vec<(VarId, f64)> = bv.iter().map(|&v| (v, 1.0)).collect();
        blue_row.push(neg(wh, mass));
        lp.add_constraint(Constraint::ge(blue_row, 0.0))?;
        for l in 0..k {
            let sum: Vec<(VarId, f64)> = edges_of_blue[l].iter().map(|&e| (ev[e], 1.0)).collect();
            let mut lower = sum.clone();
            lower.push(neg(bv[l], 1.0));
            lp.add_constraint(Constraint::ge(lower, 0.0))?;
            let mut upper = sum;
            upper.push(neg(bv[l], cap));
            lp.add_constraint(Constraint::le(upper, 0.0))?;
        }
        for j in 0..m {
            let sum: Vec<(VarId, f64)> = edges_of_j[j].iter().map(|&e| (ev[e], 1.0)).collect();
            let mut lower = sum.clone();
            lower.push(neg(jv[j], delta));
            lp.add_constraint(Constraint::ge(lower, 0.0))?;
            let mut upper = sum;
            upper.push(neg(jv[j], 2.0 * delta));
            lp.add_constraint(Constraint::le(upper, 0.0))?;
        }
        for (e, &(j, l)) in view.jb_edges.iter().enumerate() {
            lp.add_constraint(Constraint::le(vec![(ev[e], 1.0), neg(jv[j], 1.0)], 0.0))?;
            lp.add_constraint(Constraint::le(vec![(ev[e], 1.0), neg(bv[l], 1.0)], 0.0))?;
        }
        for i in 0..n {
            let mut row: Vec<(VarId, f64)> = view.red_vars[i].iter().map(|&g| (vv[g], 1.0)).collect();
            row.push(neg(rv[i], 1.0));
            lp.add_constraint(Constraint::ge(row, 0.0))?;
        }
        for j in 0..m {
            for &i in &view.j_reds[j] {
                lp.add_constraint(Constraint::le(vec![(jv[j], 1.0), neg(rv[i], 1.0)], 0.0))?;
            }
        }
        // Edge variables are bounded through `X_j^{(h)} ≤ w_h`.
        for target in vv.iter().chain(&bv).chain(&jv).chain(&rv) {
            lp.add_constraint(Constraint::le(vec![(*target, 1.0), neg(wh, 1.0)], 0.0))?;
        }
        var_given_var.push(vv);
        blue_given_var.push(bv);
        edge_given_var.push(ev);
        red_given_var.push(rv);
    }
    Ok(Mmsa4Lp {
        model: lp,
        opt_guess,
        delta,
        w,
        z,
        x,
        y,
        xe,
        shared,
        red_given_j,
        var_given_var,
        blue_given_var,
        edge_given_var,
        red_given_var,
    })
}

/// Read access to a solved point, with the conditioned values `X_a^{(c)} / value(c)`.
#[derive(Debug, Clone, Copy)]
pub struct Point<'a> {
    pub lp: &'a Mmsa4Lp,
    pub values: &'a [f64],
}

impl<'a> Point<'a> {
    pub fn get(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn w(&self, h: usize) -> f64 {
        self.get(self.lp.w[h])
    }

    pub fn x(&self, j: usize) -> f64 {
        self.get(self.lp.x[j])
    }

    pub fn z(&self, l: usize) -> f64 {
        self.get(self.lp.z[l])
    }

    pub fn xe(&self, e: usize) -> f64 {
        self.get(self.lp.xe[e])
    }

    /// `ŵ_h^{(j)}`.
    pub fn var_given_j(&self, j: usize, h: usize) -> f64 {
        self.get(self.lp.shared[j][h]) / self.x(j)
    }

    /// `x̂_j^{(h)}`.
    pub fn j_given_var(&self, h: usize, j: usize) -> f64 {
        self.get(self.lp.shared[j][h]) / self.w(h)
    }

    /// `ŵ_{h'}^{(h)}`.
    pub fn var_given_var(&self, h: usize, other: usize) -> f64 {
        self.get(self.lp.var_given_var[h][other]) / self.w(h)
    }

    pub fn x_total(&self) -> f64 {
        (0..self.lp.x.len()).map(|j| self.x(j)).sum()
    }

    pub fn z_total(&self) -> f64 {
        (0..self.lp.z.len()).map(|l| self.z(l)).sum()
    }
}

/// Integral point induced by a partial solution: `vars` chosen, `js` and `blues` the uniform
/// sub-cover, and every lifted variable the product of its two indicators.
pub fn intended_point(view: &View, lp: &Mmsa4Lp, vars: &[usize], js: &[usize], blues: &[usize]) -> Vec<f64> {
    let mut values = vec![0.0; lp.model.num_vars()];
    let ind = |list: &[usize], size: usize| {
        let mut mask = vec![0.0; size];
        for &a in list {
            mask[a] = 1.0;
        }
        mask
    };
    let (wv, xv, zv) = (ind(vars, view.s()), ind(js, view.m()), ind(blues, view.k()));
    let mut yv = vec![0.0; view.n()];
    for &j in js {
        for &i in &view.j_reds[j] {
            yv[i] = 1.0;
        }
    }
    let ev: Vec<f64> = view.jb_edges.iter().map(|&(j, l)| xv[j] * zv[l]).collect();
    let mut set = |v: VarId, val: f64| values[v.0] = val;
    for h in 0..view.s() {
        set(lp.w[h], wv[h]);
    }
    for l in 0..view.k() {
        set(lp.z[l], zv[l]);
    }
    for j in 0..view.m() {
        set(lp.x[j], xv[j]);
        for h in 0..view.s() {
            set(lp.shared[j][h], xv[j] * wv[h]);
        }
        for i in 0..view.n() {
            set(lp.red_given_j[j][i], xv[j] * yv[i]);
        }
    }
    for i in 0..view.n() {
        set(lp.y[i], yv[i]);
    }
    for e in 0..ev.len() {
        set(lp.xe[e], ev[e]);
    }
    for h in 0..view.s() {
        for g in 0..view.s() {
            set(lp.var_given_var[h][g], wv[h] * wv[g]);
        }
        for l in 0..view.k() {
            set(lp.blue_given_var[h][l], wv[h] * zv[l]);
        }
        for e in 0..ev.len() {
            set(lp.edge_given_var[h][e], wv[h] * ev[e]);
        }
        for i in 0..view.n() {
            set(lp.red_given_var[h][i], wv[h] * yv[i]);
        }
    }
    values
}

/// Uniform sub-cover of the blue gates by AND gates satisfied under `vars`, with every chosen
/// gate of blue degree in `[delta, 2 delta]` and every kept blue gate of degree between one and
/// `2e ln(2k)`. Tries every satisfied gate and a greedy cover as starting sets; `None` when
/// neither yields the required blue mass.
pub fn uniform_subcover(view: &View, vars: &[usize], delta: f64) -> Option<(Vec<usize>, Vec<usize>)> {
    let satisfied = view.satisfied_js(vars);
    let sets: Vec<Vec<usize>> = satisfied.iter().map(|&j| view.j_blues[j].clone()).collect();
    let universe = view.blues_of(&satisfied);
    let greedy: Vec<usize> = crate::setcover::greedy_set_cover(&universe, &sets)
        .map(|picks| picks.into_iter().map(|p| satisfied[p]).collect())
        .unwrap_or_default();
    let cap = blue_degree_cap(view.k());
    let need = blue_mass(view.k(), view.m());
    for start in [satisfied.clone(), greedy] {
        let mut js = start;
        loop {
            let mut degree = vec![0usize; view.k()];
            for &j in &js {
                for &l in &view.j_blues[j] {
                    degree[l] += 1;
                }
            }
            let blues: Vec<usize> = (0..view.k()).filter(|&l| degree[l] >= 1 && degree[l] as f64 <= cap).collect();
            let in_b: Vec<bool> = (0..view.k()).map(|l| blues.binary_search(&l).is_ok()).collect();
            let kept: Vec<usize> = js
                .iter()
                .copied()
                .filter(|&j| {
                    let d = view.j_blues[j].iter().filter(|&&l| in_b[l]).count() as f64;
                    d >= delta && d <= 2.0 * delta
                })
                .collect();
            if kept == js {
                if !js.is_empty() && blues.len() as f64 >= need {
                    return Some((js, blues));
                }
                break;
            }
            js = kept;
        }
    }
    None
}

/// Natural-log factor `ln n` used by the sampling probabilities.
pub fn sampling_log(view: &View) -> f64 {
    ln2(view.n() as f64)
}
