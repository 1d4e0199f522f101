//! Set cover primitives used as subroutines: the greedy cover and the fractional optimum.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lp::{Constraint, Direction, LpModel, VarId};

/// Greedy cover of `universe` by `sets` (each a list of elements). Returns the chosen set
/// indices in pick order; ties go to the lowest index.
pub fn greedy_set_cover(universe: &[usize], sets: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut remaining: HashMap<usize, bool> = universe.iter().map(|&e| (e, false)).collect();
    let mut left = remaining.len();
    let mut chosen = Vec::new();
    while left > 0 {
        let mut best = None;
        let mut best_gain = 0;
        for (h, set) in sets.iter().enumerate() {
            let gain = set.iter().filter(|e| remaining.get(e) == Some(&false)).count();
            if gain > best_gain {
                best_gain = gain;
                best = Some(h);
            }
        }
        let Some(h) = best else {
            let missing = remaining.iter().filter(|(_, &c)| !c).map(|(&e, _)| e).min().unwrap();
            return Err(Error::Uncoverable(missing));
        };
        for e in &sets[h] {
            if let Some(c) = remaining.get_mut(e) {
                if !*c {
                    *c = true;
                    left -= 1;
                }
            }
        }
        chosen.push(h);
    }
    Ok(chosen)
}

/// Optimal value of the covering LP `min Σ z_h` s.t. every universe element has total weight
/// at least one. Infinite when some element lies in no set.
pub fn fractional_set_cover(universe: &[usize], sets: &[Vec<usize>]) -> Result<f64> {
    if universe.is_empty() {
        return Ok(0.0);
    }
    let mut containing: HashMap<usize, Vec<usize>> = universe.iter().map(|&e| (e, Vec::new())).collect();
    for (h, set) in sets.iter().enumerate() {
        for e in set {
            if let Some(list) = containing.get_mut(e) {
                list.push(h);
            }
        }
    }
    if containing.values().any(|l| l.is_empty()) {
        return Ok(f64::INFINITY);
    }
    let mut lp = LpModel::new(Direction::Minimize);
    let mut var_of: HashMap<usize, VarId> = HashMap::new();
    let mut elements: Vec<usize> = containing.keys().copied().collect();
    elements.sort_unstable();
    for e in &elements {
        let terms = containing[e]
            .iter()
            .map(|&h| {
                let v = *var_of.entry(h).or_insert_with(|| lp.add_var(format!("z{h}"), 0.0, 1.0));
                (v, 1.0)
            })
            .collect();
        lp.add_constraint(Constraint::ge(terms, 1.0))?;
    }
    for &v in var_of.values() {
        lp.set_objective_coefficient(v, 1.0)?;
    }
    let solution = lp.solve()?;
    if !solution.is_optimal() {
        return Err(Error::NumericalFailure("covering LP did not reach optimality".into()));
    }
    Ok(solution.objective)
}
