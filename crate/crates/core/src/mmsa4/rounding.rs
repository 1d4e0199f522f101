//! The two rounding cases. Triples with `β/γ > A` and `βD > A·OPT/x(J0)` form `P1`; their
//! members form `J1`. When fewer than half of `J0` lie in `J1`, gates outside `J1` are sampled
//! directly (case one). Otherwise one variable `h0` is conditioned on and the gates whose
//! tagged neighborhoods contain it are taken together (case two).

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmsa4::bucketing::{max_d_exp, size_exp, Bucketing};
use crate::mmsa4::lp::{sampling_log, Point};
use crate::mmsa4::view::View;
use crate::util::lg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    /// Indices into `Bucketing::triples`.
    pub p1: Vec<usize>,
    pub j1: Vec<usize>,
}

impl Split {
    pub fn case(&self, bucketing: &Bucketing) -> Case {
        if 2 * self.j1.len() < bucketing.j0.members.len() {
            Case::One
        } else {
            Case::Two
        }
    }
}

pub fn split_triples(bucketing: &Bucketing, tradeoff: f64, opt_guess: f64) -> Split {
    let threshold = tradeoff * opt_guess / bucketing.j0.weight;
    let p1: Vec<usize> = (0..bucketing.triples.len())
        .filter(|&t| {
            let tr = &bucketing.triples[t];
            tr.beta() / tr.gamma() > tradeoff && tr.beta() * tr.d() as f64 > threshold
        })
        .collect();
    let j1: BTreeSet<usize> = p1.iter().flat_map(|&t| bucketing.triples[t].members.iter().copied()).collect();
    Split { p1, j1: j1.into_iter().collect() }
}

/// Case-two choices and the numeric values of its guarantee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTwoSelection {
    pub beta: f64,
    pub gamma: f64,
    pub d: usize,
    pub j2: Vec<usize>,
    pub d_tilde: usize,
    pub h0: usize,
    pub j_alg: Vec<usize>,
    /// `Σ_{j ∈ J_ALG} x̂_j^{(h0)}`.
    pub conditioned_weight: f64,
    /// `|J0| D x0 β / (OPT · 4 log²|S| log(|S|²m) log m)`.
    pub weight_bound: f64,
    /// Whether every `x̂_j^{(h0)}` lies in `[x0β/(2γ), 4x0β/γ]`.
    pub range_holds: bool,
}

impl CaseTwoSelection {
    pub fn holds(&self) -> bool {
        self.range_holds && self.conditioned_weight >= self.weight_bound * (1.0 - 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub case: Case,
    pub j_alg: Vec<usize>,
    pub s_alg: Vec<usize>,
    pub trials: usize,
    pub selection: Option<CaseTwoSelection>,
}

/// Every red child of every gate in `js` has a chosen variable.
pub fn covers_reds(view: &View, js: &[usize], picked: &[usize]) -> bool {
    let mut ok = vec![false; view.n()];
    for &h in picked {
        for &i in &view.var_reds[h] {
            ok[i] = true;
        }
    }
    js.iter().all(|&j| view.j_reds[j].iter().all(|&i| ok[i]))
}

/// Case-one probability `min{1, β · 12 log|S| log(|S|²m) ln n}`.
pub fn case_one_probability(view: &View, beta: f64) -> f64 {
    let (m, s) = (view.m() as f64, view.s() as f64);
    (beta * 12.0 * lg(s) * lg(s * s * m) * sampling_log(view)).min(1.0)
}

pub fn case1_round(
    view: &View,
    bucketing: &Bucketing,
    split: &Split,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<RoundOutcome> {
    let outside: Vec<usize> =
        bucketing.j0.members.iter().copied().filter(|j| split.j1.binary_search(j).is_err()).collect();
    let x0 = bucketing.j0.x0;
    for trial in 1..=trials {
        let j_alg: Vec<usize> = outside.iter().copied().filter(|_| rng.gen::<f64>() < x0).collect();
        if j_alg.is_empty() {
            continue;
        }
        let mut by_beta: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
        for j in &j_alg {
            for (&(b, _), tag) in &bucketing.tags[j] {
                by_beta.entry(b).or_default().extend(&tag.vars);
            }
        }
        let mut picked = BTreeSet::new();
        for (&b, vars) in &by_beta {
            let p = case_one_probability(view, crate::mmsa4::bucketing::scale_value(b));
            for &h in vars {
                if rng.gen::<f64>() < p {
                    picked.insert(h);
                }
            }
        }
        let s_alg: Vec<usize> = picked.into_iter().collect();
        if covers_reds(view, &j_alg, &s_alg) {
            return Ok(RoundOutcome { case: Case::One, j_alg, s_alg, trials: trial, selection: None });
        }
    }
    Err(Error::RoundingExhausted(trials))
}

pub fn case2_select(
    view: &View,
    point: &Point,
    bucketing: &Bucketing,
    split: &Split,
    opt_guess: f64,
) -> Option<CaseTwoSelection> {
    let &best = split.p1.iter().max_by(|&&a, &&b| {
        let (ta, tb) = (&bucketing.triples[a], &bucketing.triples[b]);
        ta.members.len().cmp(&tb.members.len()).then(b.cmp(&a))
    })?;
    let triple = &bucketing.triples[best];
    let key = (triple.beta_scale, triple.gamma_scale);
    let j2 = triple.members.clone();
    let tagged = |j: usize| &bucketing.tags[&j][&key].vars;
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for &j in &j2 {
        for &h in tagged(j) {
            *count.entry(h).or_default() += 1;
        }
    }
    let cap = max_d_exp(j2.len());
    let mut pairs: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in count.values() {
        *pairs.entry(size_exp(c, cap)).or_default() += c;
    }
    let (&d_tilde_exp, _) = pairs.iter().max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))?;
    let mut h0: Option<(usize, f64)> = None;
    for (&h, &c) in &count {
        if size_exp(c, cap) != d_tilde_exp {
            continue;
        }
        let weight: f64 = j2.iter().filter(|&&j| tagged(j).contains(&h)).map(|&j| point.j_given_var(h, j)).sum();
        if h0.is_none_or(|(_, w)| weight > w) {
            h0 = Some((h, weight));
        }
    }
    let (h0, conditioned_weight) = h0?;
    let j_alg: Vec<usize> = j2.iter().copied().filter(|&j| tagged(j).contains(&h0)).collect();
    let (m, s) = (view.m() as f64, view.s() as f64);
    let (x0, beta, gamma) = (bucketing.j0.x0, triple.beta(), triple.gamma());
    let weight_bound = bucketing.j0.members.len() as f64 * triple.d() as f64 * x0 * beta
        / (opt_guess * 4.0 * lg(s).powi(2) * lg(s * s * m) * lg(m));
    let (lo, hi) = (x0 * beta / (2.0 * gamma), 4.0 * x0 * beta / gamma);
    let range_holds = j_alg.iter().all(|&j| {
        let v = point.j_given_var(h0, j);
        v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9)
    });
    Some(CaseTwoSelection {
        beta,
        gamma,
        d: triple.d(),
        j2,
        d_tilde: 1 << d_tilde_exp,
        h0,
        j_alg,
        conditioned_weight,
        weight_bound,
        range_holds,
    })
}

/// Case-two probability `min{1, ŵ_h^{(h0)} · 4γ ln n / (x0 β)}`.
pub fn case_two_probability(view: &View, point: &Point, selection: &CaseTwoSelection, x0: f64, h: usize) -> f64 {
    let scale = 4.0 * selection.gamma * sampling_log(view) / (x0 * selection.beta);
    (point.var_given_var(selection.h0, h).max(0.0) * scale).min(1.0)
}

pub fn case2_round(
    view: &View,
    point: &Point,
    bucketing: &Bucketing,
    selection: CaseTwoSelection,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<RoundOutcome> {
    let candidates: BTreeSet<usize> = selection
        .j_alg
        .iter()
        .flat_map(|&j| view.j_reds[j].iter().flat_map(|&i| view.red_vars[i].iter().copied()))
        .collect();
    let probs: Vec<(usize, f64)> =
        candidates.iter().map(|&h| (h, case_two_probability(view, point, &selection, bucketing.j0.x0, h))).collect();
    for trial in 1..=trials {
        let s_alg: Vec<usize> = probs.iter().filter(|&&(_, p)| rng.gen::<f64>() < p).map(|&(h, _)| h).collect();
        if covers_reds(view, &selection.j_alg, &s_alg) {
            return Ok(RoundOutcome {
                case: Case::Two,
                j_alg: selection.j_alg.clone(),
                s_alg,
                trials: trial,
                selection: Some(selection),
            });
        }
    }
    Err(Error::RoundingExhausted(trials))
}
