//! Problem instances, solutions, validation and the canonical JSON encoding.
//!
//! Three instance kinds share one file format, discriminated by `"kind"`:
//!
//! * `rbsc`: red-blue set cover, `{"kind":"rbsc","k":..,"n":..,"sets":[{"blue":[..],"red":[..]},..]}`
//! * `mmsa`: layered monotone circuit, `{"kind":"mmsa","t":..,"layers":[..],"edges":[..]}`
//! * `mku`: minimum k-union, `{"kind":"mku","n":..,"k":..,"sets":[[..],..]}`
//!
//! Circuit layers are numbered from the root side. The root itself is an implicit AND gate
//! over layer 1, so layer `d` (1-based) sits at distance `d` from the root: odd layers are OR
//! gates, even layers are AND gates, and the last layer holds the variables. The total size
//! `N` counts the implicit root.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::util::normalize_ids;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbscSet {
    pub blue: Vec<usize>,
    pub red: Vec<usize>,
}

/// Red-blue set cover: choose sets covering all `k` blue elements while touching few of the
/// `n` red elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbscInstance {
    pub k: usize,
    pub n: usize,
    pub sets: Vec<RbscSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbscSolution {
    /// Selected set indices, in the order the solver picked them.
    pub chosen_sets: Vec<usize>,
    pub cost: usize,
}

impl RbscInstance {
    pub fn m(&self) -> usize {
        self.sets.len()
    }

    pub fn normalize(&mut self) -> bool {
        let mut changed = false;
        for set in &mut self.sets {
            changed |= normalize_ids(&mut set.blue);
            changed |= normalize_ids(&mut set.red);
        }
        changed
    }

    pub fn validate(&self) -> Result<()> {
        if self.sets.is_empty() {
            return Err(Error::Structural("rbsc instance has no sets".into()));
        }
        for (j, set) in self.sets.iter().enumerate() {
            check_ids(&set.blue, self.k, &format!("sets[{j}].blue"))?;
            check_ids(&set.red, self.n, &format!("sets[{j}].red"))?;
        }
        Ok(())
    }

    /// `Γ_J(ℓ)` for every blue element.
    pub fn sets_of_blue(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (j, set) in self.sets.iter().enumerate() {
            for &b in &set.blue {
                out[b].push(j);
            }
        }
        out
    }

    /// `Γ_J(i)` for every red element.
    pub fn sets_of_red(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (j, set) in self.sets.iter().enumerate() {
            for &r in &set.red {
                out[r].push(j);
            }
        }
        out
    }

    pub fn covered_blues(&self, chosen: &[usize]) -> Vec<bool> {
        let mut covered = vec![false; self.k];
        for &j in chosen {
            for &b in &self.sets[j].blue {
                covered[b] = true;
            }
        }
        covered
    }

    pub fn red_union(&self, chosen: &[usize]) -> Vec<bool> {
        let mut touched = vec![false; self.n];
        for &j in chosen {
            for &r in &self.sets[j].red {
                touched[r] = true;
            }
        }
        touched
    }

    /// Number of distinct red elements touched by the chosen sets.
    pub fn cost(&self, chosen: &[usize]) -> usize {
        self.red_union(chosen).iter().filter(|&&t| t).count()
    }

    pub fn covered_count(&self, chosen: &[usize]) -> usize {
        self.covered_blues(chosen).iter().filter(|&&c| c).count()
    }

    pub fn is_feasible(&self, chosen: &[usize]) -> bool {
        chosen.iter().all(|&j| j < self.m()) && self.covered_count(chosen) == self.k
    }

    /// Blue elements that no set contains.
    pub fn uncoverable_blues(&self) -> Vec<usize> {
        self.covered_blues(&(0..self.m()).collect::<Vec<_>>())
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(b, _)| b)
            .collect()
    }

    /// The sub-instance on the given sets (same element universes), indexed by position in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> RbscInstance {
        RbscInstance { k: self.k, n: self.n, sets: keep.iter().map(|&j| self.sets[j].clone()).collect() }
    }

    pub fn solution(&self, chosen: Vec<usize>) -> RbscSolution {
        let cost = self.cost(&chosen);
        RbscSolution { chosen_sets: chosen, cost }
    }
}

/// Layered monotone circuit with alternating gates; see the module docs for the layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmsaInstance {
    pub t: usize,
    pub layers: Vec<usize>,
    /// `edges[d][v]` lists the children (in layer `d + 1`) of vertex `v` in layer `d`, 0-based.
    pub edges: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmsaSolution {
    /// Variables set to true, sorted.
    pub variables: Vec<usize>,
    pub cost: usize,
}

impl MmsaSolution {
    pub fn new(mut variables: Vec<usize>) -> Self {
        variables.sort_unstable();
        variables.dedup();
        let cost = variables.len();
        MmsaSolution { variables, cost }
    }
}

impl MmsaInstance {
    /// Total vertex count including the implicit root.
    pub fn size(&self) -> usize {
        1 + self.layers.iter().sum::<usize>()
    }

    pub fn variable_count(&self) -> usize {
        *self.layers.last().unwrap_or(&0)
    }

    /// Whether 0-based layer `d` consists of AND gates.
    pub fn is_and_layer(d: usize) -> bool {
        (d + 1).is_multiple_of(2)
    }

    pub fn normalize(&mut self) -> bool {
        let mut changed = false;
        for layer in &mut self.edges {
            for children in layer {
                changed |= normalize_ids(children);
            }
        }
        changed
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::Structural(format!("circuit depth t = {} is below 2", self.t)));
        }
        if self.layers.len() != self.t {
            return Err(Error::Structural(format!("expected {} layer sizes, found {}", self.t, self.layers.len())));
        }
        if self.edges.len() != self.t - 1 {
            return Err(Error::Structural(format!("expected {} edge layers, found {}", self.t - 1, self.edges.len())));
        }
        for d in 0..self.t - 1 {
            if self.edges[d].len() != self.layers[d] {
                return Err(Error::Structural(format!(
                    "edges[{d}] has {} rows but layer {} has {} vertices",
                    self.edges[d].len(),
                    d + 1,
                    self.layers[d]
                )));
            }
            for (v, children) in self.edges[d].iter().enumerate() {
                let ctx = format!("edges[{d}][{v}]");
                check_ids(children, self.layers[d + 1], &ctx)?;
                if children.is_empty() && !Self::is_and_layer(d) {
                    return Err(Error::Structural(format!("OR gate {ctx} has no children")));
                }
            }
        }
        Ok(())
    }

    /// `parents[d][v]`: vertices of layer `d - 1` with `v` as a child (empty for `d = 0`).
    pub fn parents(&self) -> Vec<Vec<Vec<usize>>> {
        let mut out: Vec<Vec<Vec<usize>>> = self.layers.iter().map(|&s| vec![Vec::new(); s]).collect();
        for d in 0..self.edges.len() {
            for (v, children) in self.edges[d].iter().enumerate() {
                for &c in children {
                    out[d + 1][c].push(v);
                }
            }
        }
        out
    }

    /// Truth value of every vertex, layer by layer, under the given variable assignment.
    pub fn evaluate_layers(&self, assignment: &[bool]) -> Vec<Vec<bool>> {
        let mut values = vec![Vec::new(); self.t];
        values[self.t - 1] = assignment.to_vec();
        for d in (0..self.t - 1).rev() {
            let below = &values[d + 1];
            let layer: Vec<bool> = self.edges[d]
                .iter()
                .map(|children| {
                    if Self::is_and_layer(d) {
                        children.iter().all(|&c| below[c])
                    } else {
                        children.iter().any(|&c| below[c])
                    }
                })
                .collect();
            values[d] = layer;
        }
        values
    }

    /// Output of the root AND gate.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        assert_eq!(assignment.len(), self.variable_count(), "assignment length mismatch");
        self.evaluate_layers(assignment)[0].iter().all(|&v| v)
    }

    pub fn evaluate_set(&self, variables: &[usize]) -> bool {
        let mut assignment = vec![false; self.variable_count()];
        for &h in variables {
            assignment[h] = true;
        }
        self.evaluate(&assignment)
    }

    /// Inserts a pass-through OR layer above the variables, turning an odd depth into the next
    /// even depth. Each new OR gate has exactly one child, so the solution space is unchanged.
    pub fn embed_odd_depth(&self) -> MmsaInstance {
        assert!(self.t % 2 == 1, "only odd depths need embedding");
        let vars = self.variable_count();
        let mut layers = self.layers.clone();
        layers.push(vars);
        let mut edges = self.edges.clone();
        edges.push((0..vars).map(|h| vec![h]).collect());
        MmsaInstance { t: self.t + 1, layers, edges }
    }
}

/// Minimum k-union: choose `k` sets minimising the size of their union.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MkuInstance {
    pub n: usize,
    pub k: usize,
    pub sets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MkuSolution {
    pub chosen_sets: Vec<usize>,
    pub cost: usize,
}

impl MkuInstance {
    pub fn m(&self) -> usize {
        self.sets.len()
    }

    pub fn normalize(&mut self) -> bool {
        let mut changed = false;
        for set in &mut self.sets {
            changed |= normalize_ids(set);
        }
        changed
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Structural("k must be positive".into()));
        }
        if self.k > self.sets.len() {
            return Err(Error::Structural(format!("k = {} exceeds the number of sets {}", self.k, self.sets.len())));
        }
        for (j, set) in self.sets.iter().enumerate() {
            check_ids(set, self.n, &format!("sets[{j}]"))?;
        }
        Ok(())
    }

    pub fn union_size(&self, chosen: &[usize]) -> usize {
        let mut seen = vec![false; self.n];
        for &j in chosen {
            for &x in &self.sets[j] {
                seen[x] = true;
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    pub fn solution(&self, chosen: Vec<usize>) -> MkuSolution {
        let cost = self.union_size(&chosen);
        MkuSolution { chosen_sets: chosen, cost }
    }

    pub fn is_feasible(&self, chosen: &[usize]) -> bool {
        let mut sorted = chosen.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.len() == self.k && sorted.iter().all(|&j| j < self.m())
    }
}

/// Depth-3 circuit equivalent to an RBSC instance: OR gate per blue element, AND gate per set,
/// variable per red element. Satisfying assignments correspond to red sets of feasible covers.
pub fn rbsc_to_mmsa3(instance: &RbscInstance) -> MmsaInstance {
    MmsaInstance {
        t: 3,
        layers: vec![instance.k, instance.m(), instance.n],
        edges: vec![instance.sets_of_blue(), instance.sets.iter().map(|s| s.red.clone()).collect()],
    }
}

/// Inverse of [`rbsc_to_mmsa3`] for any depth-3 circuit.
pub fn mmsa3_to_rbsc(circuit: &MmsaInstance) -> RbscInstance {
    assert_eq!(circuit.t, 3, "expected a depth-3 circuit");
    let parents = circuit.parents();
    RbscInstance {
        k: circuit.layers[0],
        n: circuit.layers[2],
        sets: (0..circuit.layers[1])
            .map(|j| RbscSet { blue: parents[1][j].clone(), red: circuit.edges[1][j].clone() })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Instance {
    Rbsc(RbscInstance),
    Mmsa(MmsaInstance),
    Mku(MkuInstance),
}

/// A parsed instance and whether its id lists had to be sorted or deduplicated.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub instance: Instance,
    pub normalized: bool,
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Rbsc(_) => "rbsc",
            Instance::Mmsa(_) => "mmsa",
            Instance::Mku(_) => "mku",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::Rbsc(i) => i.validate(),
            Instance::Mmsa(i) => i.validate(),
            Instance::Mku(i) => i.validate(),
        }
    }

    fn normalize(&mut self) -> bool {
        match self {
            Instance::Rbsc(i) => i.normalize(),
            Instance::Mmsa(i) => i.normalize(),
            Instance::Mku(i) => i.normalize(),
        }
    }

    /// Compact canonical JSON; normalized instances round-trip byte for byte.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instances always serialize")
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

impl From<RbscInstance> for Instance {
    fn from(i: RbscInstance) -> Self {
        Instance::Rbsc(i)
    }
}

impl From<MmsaInstance> for Instance {
    fn from(i: MmsaInstance) -> Self {
        Instance::Mmsa(i)
    }
}

impl From<MkuInstance> for Instance {
    fn from(i: MkuInstance) -> Self {
        Instance::Mku(i)
    }
}

/// Parses, normalizes and validates instance text.
pub fn parse_instance(text: &str) -> Result<Loaded> {
    let mut instance: Instance = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let normalized = instance.normalize();
    instance.validate()?;
    Ok(Loaded { instance, normalized })
}

pub fn read_instance(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<()> {
    std::fs::write(path, instance.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn check_ids(ids: &[usize], bound: usize, ctx: &str) -> Result<()> {
    for w in ids.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Structural(format!("{ctx} is not sorted and duplicate-free")));
        }
    }
    if let Some(&bad) = ids.iter().find(|&&x| x >= bound) {
        return Err(Error::Structural(format!("{ctx} contains id {bad} outside 0..{bound}")));
    }
    Ok(())
}
