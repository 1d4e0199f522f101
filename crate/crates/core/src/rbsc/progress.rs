//! One progress step: the per-(class, red pivot) LP and its derandomized rounding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::RbscInstance;
use crate::lp::{Constraint, Direction, LpModel, VarId};
use crate::rbsc::partition::Bucket;
use crate::util::lg;

/// LP over the sets of one class that contain the pivot red element `i0`.
#[derive(Debug, Clone)]
pub struct ProgressLp {
    pub model: LpModel,
    /// `(set, x_j)` for each candidate set, sorted by set.
    pub x: Vec<(usize, VarId)>,
    pub y: Vec<(usize, VarId)>,
    pub z: Vec<(usize, VarId)>,
}

/// Candidate sets `Γ_{J_α}(i0)`.
pub fn candidates(instance: &RbscInstance, bucket: &Bucket, i0: usize) -> Vec<usize> {
    bucket.sets.iter().copied().filter(|&j| instance.sets[j].red.binary_search(&i0).is_ok()).collect()
}

/// Builds `max Σ z_ℓ` subject to `Σ y ≤ opt`, `z_ℓ ≤ Σ x_j` over candidate sets containing
/// `ℓ`, `x_j ≤ y_i` for the surviving reds of each candidate, all variables in `[0, 1]`.
/// Only uncovered blue elements receive `z` variables.
pub fn build_progress_lp(
    instance: &RbscInstance,
    bucket: &Bucket,
    i0: usize,
    uncovered: &[bool],
    opt_guess: f64,
) -> Result<ProgressLp> {
    let cands = candidates(instance, bucket, i0);
    let mut model = LpModel::new(Direction::Maximize);
    let x: Vec<(usize, VarId)> = cands.iter().map(|&j| (j, model.add_var(format!("x{j}"), 0.0, 1.0))).collect();

    let mut y_of: BTreeMap<usize, VarId> = BTreeMap::new();
    let mut blue_terms: BTreeMap<usize, Vec<(VarId, f64)>> = BTreeMap::new();
    for &(j, xj) in &x {
        for r in bucket.reds_of(instance, j) {
            y_of.entry(r).or_insert_with(|| model.add_var(format!("y{r}"), 0.0, 1.0));
        }
        for &b in &instance.sets[j].blue {
            if uncovered[b] {
                blue_terms.entry(b).or_default().push((xj, 1.0));
            }
        }
    }
    let z: Vec<(usize, VarId)> = (0..instance.k)
        .filter(|&b| uncovered[b])
        .map(|b| {
            let hi = if blue_terms.contains_key(&b) { 1.0 } else { 0.0 };
            (b, model.add_var(format!("z{b}"), 0.0, hi))
        })
        .collect();
    for &(_, zv) in &z {
        model.set_objective_coefficient(zv, 1.0)?;
    }
    model.add_constraint(Constraint::le(y_of.values().map(|&v| (v, 1.0)).collect(), opt_guess))?;
    for &(b, zv) in &z {
        if let Some(terms) = blue_terms.get(&b) {
            let mut row = vec![(zv, 1.0)];
            row.extend(terms.iter().map(|&(v, _)| (v, -1.0)));
            model.add_constraint(Constraint::le(row, 0.0))?;
        }
    }
    for &(j, xj) in &x {
        for r in bucket.reds_of(instance, j) {
            model.add_constraint(Constraint::le(vec![(xj, 1.0), (y_of[&r], -1.0)], 0.0))?;
        }
    }
    Ok(ProgressLp { model, x, y: y_of.into_iter().collect(), z })
}

/// Coefficient `c` of the potential `|Γ_{R_α}(J*)| - c |Γ_B(J*)|`.
pub fn potential_coefficient(m: usize, n: usize, opt_guess: f64, uncovered: usize) -> f64 {
    let a = (4.0 * m as f64 * lg(n as f64).powi(4)).cbrt();
    2.0 * a * opt_guess / ((1.0 - (-1.0f64).exp()) * uncovered as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rounded {
    pub chosen: Vec<usize>,
    /// `|Γ_{R_α}(J*)|`.
    pub red_count: usize,
    /// Newly covered blue elements.
    pub blue_count: usize,
    pub potential: f64,
    pub expected_potential: f64,
    pub expected_blues: f64,
    pub expected_reds: f64,
}

/// Survival structure of the candidate sets: which candidates touch each surviving red and
/// each uncovered blue element.
pub struct Coverage {
    sets: Vec<usize>,
    red_members: Vec<Vec<usize>>,
    blue_members: Vec<Vec<usize>>,
}

impl Coverage {
    pub fn new(instance: &RbscInstance, bucket: &Bucket, sets: &[usize], uncovered: &[bool]) -> Self {
        let mut reds: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut blues: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (pos, &j) in sets.iter().enumerate() {
            for r in bucket.reds_of(instance, j) {
                reds.entry(r).or_default().push(pos);
            }
            for &b in &instance.sets[j].blue {
                if uncovered[b] {
                    blues.entry(b).or_default().push(pos);
                }
            }
        }
        Coverage {
            sets: sets.to_vec(),
            red_members: reds.into_values().collect(),
            blue_members: blues.into_values().collect(),
        }
    }

    fn expected(members: &[Vec<usize>], p: &[f64]) -> f64 {
        members.iter().map(|list| 1.0 - list.iter().map(|&q| 1.0 - p[q]).product::<f64>()).sum()
    }

    pub fn expected_reds(&self, p: &[f64]) -> f64 {
        Self::expected(&self.red_members, p)
    }

    pub fn expected_blues(&self, p: &[f64]) -> f64 {
        Self::expected(&self.blue_members, p)
    }

    /// Realized counts for the 0/1 selection `p`.
    pub fn counts(&self, p: &[f64]) -> (usize, usize) {
        let hit = |members: &[Vec<usize>]| members.iter().filter(|l| l.iter().any(|&q| p[q] >= 1.0)).count();
        (hit(&self.red_members), hit(&self.blue_members))
    }

    fn position_covers_new_blue(&self, pos: usize, p: &[f64]) -> bool {
        self.blue_members.iter().any(|l| l.contains(&pos) && !l.iter().any(|&q| q != pos && p[q] >= 1.0))
    }
}

/// Selects each candidate with its LP probability, derandomized by conditional expectations
/// in increasing set order. Fails unless the realized potential is nonpositive and some
/// uncovered blue element is covered.
pub fn round_progress(
    instance: &RbscInstance,
    bucket: &Bucket,
    x_values: &[(usize, f64)],
    uncovered: &[bool],
    coefficient: f64,
) -> Result<Rounded> {
    let sets: Vec<usize> = x_values.iter().map(|&(j, _)| j).collect();
    let coverage = Coverage::new(instance, bucket, &sets, uncovered);
    let mut p: Vec<f64> = x_values.iter().map(|&(_, v)| v.clamp(0.0, 1.0)).collect();
    let phi = |p: &[f64]| coverage.expected_reds(p) - coefficient * coverage.expected_blues(p);
    let expected_reds = coverage.expected_reds(&p);
    let expected_blues = coverage.expected_blues(&p);
    let expected_potential = phi(&p);
    if expected_blues <= 1e-9 {
        return Err(Error::RoundingFailure("LP covers no uncovered blue element".into()));
    }
    for pos in 0..p.len() {
        p[pos] = 1.0;
        let with = phi(&p);
        p[pos] = 0.0;
        let without = phi(&p);
        let include = with < without || (with == without && coverage.position_covers_new_blue(pos, &p));
        p[pos] = if include { 1.0 } else { 0.0 };
    }
    let (red_count, blue_count) = coverage.counts(&p);
    let potential = red_count as f64 - coefficient * blue_count as f64;
    if blue_count == 0 || potential > 0.0 {
        return Err(Error::RoundingFailure(format!(
            "realized potential {potential:.3} with {blue_count} new blue elements (expected {expected_potential:.3})"
        )));
    }
    let chosen = (0..p.len()).filter(|&q| p[q] >= 1.0).map(|q| coverage.sets[q]).collect();
    Ok(Rounded { chosen, red_count, blue_count, potential, expected_potential, expected_blues, expected_reds })
}
