//! Dyadic bucketing of a solved lifted LP.
//!
//! Buckets are half-open ranges `[2^-s, 2^{1-s})` indexed by the scale `s ≥ 0`; values at or
//! below `ZERO` belong to no bucket. Ties between buckets go to the smaller scale, i.e. the
//! larger values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmsa4::lp::Point;
use crate::mmsa4::view::View;
use crate::util::lg;

/// LP values at or below this are treated as zero.
pub const ZERO: f64 = 1e-9;

/// Slack on the lifted covering row before it counts as corrupted.
const COVER_SLACK: f64 = 1e-6;

pub fn dyadic_scale(value: f64) -> Option<u32> {
    if value <= ZERO {
        return None;
    }
    let s = (-value.log2()).ceil();
    Some(if s <= 0.0 { 0 } else { s as u32 })
}

pub fn scale_value(scale: u32) -> f64 {
    0.5f64.powi(scale as i32)
}

/// Heaviest dyadic bucket of the AND-gate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct J0Bucket {
    pub members: Vec<usize>,
    pub x0: f64,
    pub weight: f64,
}

pub fn bucket_j0(x: &[f64]) -> Option<J0Bucket> {
    let mut weight: BTreeMap<u32, f64> = BTreeMap::new();
    for &v in x {
        if let Some(s) = dyadic_scale(v) {
            *weight.entry(s).or_default() += v;
        }
    }
    let mut best: Option<(u32, f64)> = None;
    for (&s, &w) in &weight {
        if best.is_none_or(|(_, bw)| w > bw * (1.0 + 1e-12)) {
            best = Some((s, w));
        }
    }
    let (s, w) = best?;
    Some(J0Bucket {
        members: (0..x.len()).filter(|&j| dyadic_scale(x[j]) == Some(s)).collect(),
        x0: scale_value(s),
        weight: w,
    })
}

/// `β_ji`, `γ_ji` and `Γ̂_j(i)` for one AND gate and one of its red children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborBucket {
    pub beta_scale: u32,
    pub gamma_scale: u32,
    pub members: Vec<usize>,
}

impl NeighborBucket {
    pub fn beta(&self) -> f64 {
        scale_value(self.beta_scale)
    }

    pub fn gamma(&self) -> f64 {
        scale_value(self.gamma_scale)
    }
}

/// Buckets `Γ_S(i)` first by conditional weight `ŵ_h^{(j)}` (heaviest bucket), then by `w_h`
/// (largest bucket).
pub fn bucket_neighbors(view: &View, point: &Point, j: usize, i: usize) -> Result<NeighborBucket> {
    let hats: Vec<(usize, f64)> = view.red_vars[i].iter().map(|&h| (h, point.var_given_j(j, h))).collect();
    let mass: f64 = hats.iter().map(|e| e.1).sum();
    if mass < 1.0 - COVER_SLACK {
        return Err(Error::LiftingDegenerate(format!("conditioned cover of red {i} given gate {j} is {mass:.6} < 1")));
    }
    let mut weight: BTreeMap<u32, f64> = BTreeMap::new();
    for &(_, v) in &hats {
        if let Some(s) = dyadic_scale(v) {
            *weight.entry(s).or_default() += v;
        }
    }
    let mut beta: Option<(u32, f64)> = None;
    for (&s, &w) in &weight {
        if beta.is_none_or(|(_, bw)| w > bw * (1.0 + 1e-12)) {
            beta = Some((s, w));
        }
    }
    let (beta_scale, _) = beta.expect("positive mass has a bucket");
    let mut by_gamma: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &(h, v) in &hats {
        if dyadic_scale(v) == Some(beta_scale) {
            if let Some(t) = dyadic_scale(point.w(h)) {
                by_gamma.entry(t).or_default().push(h);
            }
        }
    }
    let mut gamma: Option<(u32, usize)> = None;
    for (&t, list) in &by_gamma {
        if gamma.is_none_or(|(_, c)| list.len() > c) {
            gamma = Some((t, list.len()));
        }
    }
    let Some((gamma_scale, _)) = gamma else {
        return Err(Error::LiftingDegenerate(format!("no variable of red {i} has positive weight")));
    };
    Ok(NeighborBucket { beta_scale, gamma_scale, members: by_gamma.remove(&gamma_scale).unwrap() })
}

/// `Γ^R_{β,γ}(j)` and `Γ^S_{β,γ}(j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub reds: Vec<usize>,
    pub vars: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketTriple {
    pub beta_scale: u32,
    pub gamma_scale: u32,
    /// `D = 2^d_exp`.
    pub d_exp: u32,
    pub members: Vec<usize>,
}

impl BucketTriple {
    pub fn beta(&self) -> f64 {
        scale_value(self.beta_scale)
    }

    pub fn gamma(&self) -> f64 {
        scale_value(self.gamma_scale)
    }

    pub fn d(&self) -> usize {
        1 << self.d_exp
    }
}

/// Not serializable: map keys are tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucketing {
    pub j0: J0Bucket,
    pub x_total: f64,
    pub neighbors: BTreeMap<(usize, usize), NeighborBucket>,
    /// Per member of `J0`, keyed by `(β scale, γ scale)`.
    pub tags: BTreeMap<usize, BTreeMap<(u32, u32), Tagged>>,
    pub triples: Vec<BucketTriple>,
}

/// Largest exponent allowed for `D`: `D ≤ 2^{⌈log |S|⌉ - 1}`.
pub fn max_d_exp(count: usize) -> u32 {
    (lg(count as f64).ceil() as u32).saturating_sub(1)
}

/// `2^{⌊log₂ size⌋}`, capped at `2^max_exp`, as an exponent. `size ≥ 1`.
pub fn size_exp(size: usize, max_exp: u32) -> u32 {
    (usize::BITS - 1 - size.leading_zeros()).min(max_exp)
}

pub fn bucket_all(view: &View, point: &Point) -> Result<Option<Bucketing>> {
    let x: Vec<f64> = (0..view.m()).map(|j| point.x(j)).collect();
    let Some(j0) = bucket_j0(&x) else { return Ok(None) };
    let mut neighbors = BTreeMap::new();
    let mut tags: BTreeMap<usize, BTreeMap<(u32, u32), Tagged>> = BTreeMap::new();
    for &j in &j0.members {
        let entry = tags.entry(j).or_default();
        for &i in &view.j_reds[j] {
            let nb = bucket_neighbors(view, point, j, i)?;
            let tag = entry.entry((nb.beta_scale, nb.gamma_scale)).or_insert(Tagged { reds: vec![], vars: vec![] });
            tag.reds.push(i);
            tag.vars.extend(&nb.members);
            neighbors.insert((j, i), nb);
        }
        for tag in entry.values_mut() {
            tag.vars.sort_unstable();
            tag.vars.dedup();
        }
    }
    let cap = max_d_exp(view.s());
    let mut grouped: BTreeMap<(u32, u32, u32), Vec<usize>> = BTreeMap::new();
    for (&j, per_j) in &tags {
        for (&(b, g), tag) in per_j {
            grouped.entry((b, g, size_exp(tag.vars.len(), cap))).or_default().push(j);
        }
    }
    let triples = grouped
        .into_iter()
        .map(|((beta_scale, gamma_scale, d_exp), members)| BucketTriple { beta_scale, gamma_scale, d_exp, members })
        .collect();
    Ok(Some(Bucketing { j0, x_total: x.iter().sum(), neighbors, tags, triples }))
}

/// Numeric values of the structural guarantees on a bucketing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketingBounds {
    pub j0_weight: f64,
    /// `x(J) / (2 log m)`.
    pub j0_weight_bound: f64,
    pub x0: f64,
    /// `1/m`.
    pub x0_bound: f64,
    /// Minimum over `(j, i)` of `|Γ̂_j(i)| - 1/(6 β_ji log|S| log(|S|²m))`.
    pub neighbor_size_slack: f64,
    pub min_beta: f64,
    /// `1/|S|²`.
    pub beta_bound: f64,
    pub triples: usize,
    /// `2 log²|S| log(|S|²m)`.
    pub triple_bound: f64,
}

impl BucketingBounds {
    pub fn compute(view: &View, bucketing: &Bucketing) -> Self {
        let (m, s) = (view.m() as f64, view.s() as f64);
        let log_s = lg(s);
        let log_sm = lg(s * s * m);
        let mut slack = f64::INFINITY;
        let mut min_beta: f64 = 1.0;
        for nb in bucketing.neighbors.values() {
            let bound = 1.0 / (6.0 * nb.beta() * log_s * log_sm);
            slack = slack.min(nb.members.len() as f64 - bound);
            min_beta = min_beta.min(nb.beta());
        }
        BucketingBounds {
            j0_weight: bucketing.j0.weight,
            j0_weight_bound: bucketing.x_total / (2.0 * lg(m)),
            x0: bucketing.j0.x0,
            x0_bound: 1.0 / m,
            neighbor_size_slack: slack,
            min_beta,
            beta_bound: 1.0 / (s * s),
            triples: bucketing.triples.len(),
            triple_bound: 2.0 * log_s * log_s * log_sm,
        }
    }

    /// Heavy bucket and minimum value guarantee on `J0`.
    pub fn j0_bounds_hold(&self) -> bool {
        self.j0_weight >= self.j0_weight_bound * (1.0 - 1e-9) && self.x0 >= self.x0_bound * (1.0 - 1e-9)
    }

    /// Size lower bound on every `Γ̂_j(i)` and the lower bound on `β`.
    pub fn neighbor_bounds_hold(&self) -> bool {
        self.neighbor_size_slack >= -1e-9 && self.min_beta >= self.beta_bound * (1.0 - 1e-9)
    }

    pub fn triple_count_holds(&self) -> bool {
        self.triples as f64 <= self.triple_bound
    }

    pub fn all_hold(&self) -> bool {
        self.j0_bounds_hold() && self.neighbor_bounds_hold() && self.triple_count_holds()
    }
}
