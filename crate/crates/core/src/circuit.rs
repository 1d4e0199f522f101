//! Partial evaluation of layered circuits.
//!
//! Gates can be forced true or false; the consequences propagate upward and the
//! still-undetermined part can be extracted as a smaller circuit, optionally truncated so that
//! an intermediate layer becomes the variable layer.

use crate::instance::MmsaInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateState {
    Open,
    True,
    False,
}

#[derive(Debug, Clone)]
pub struct PartialCircuit<'a> {
    base: &'a MmsaInstance,
    parents: Vec<Vec<Vec<usize>>>,
    state: Vec<Vec<GateState>>,
    /// Children still `Open`, per gate.
    pending: Vec<Vec<usize>>,
    root_pending: usize,
    root_false: bool,
}

/// Open part of a partially evaluated circuit.
#[derive(Debug, Clone)]
pub struct SubCircuit {
    pub instance: MmsaInstance,
    /// `origin[d][v]`: id in the base circuit of local vertex `v` in layer `d`.
    pub origin: Vec<Vec<usize>>,
}

impl<'a> PartialCircuit<'a> {
    pub fn new(base: &'a MmsaInstance) -> Self {
        let parents = base.parents();
        let state = base.layers.iter().map(|&s| vec![GateState::Open; s]).collect();
        let mut pending: Vec<Vec<usize>> =
            base.edges.iter().map(|layer| layer.iter().map(|c| c.len()).collect()).collect();
        pending.push(vec![0; base.variable_count()]);
        let mut circuit =
            PartialCircuit { base, parents, state, pending, root_pending: base.layers[0], root_false: false };
        for d in (0..base.t - 1).rev() {
            for v in 0..base.layers[d] {
                if base.edges[d][v].is_empty() {
                    if MmsaInstance::is_and_layer(d) {
                        circuit.force_true(d, v);
                    } else {
                        circuit.force_false(d, v);
                    }
                }
            }
        }
        circuit
    }

    pub fn state(&self, layer: usize, v: usize) -> GateState {
        self.state[layer][v]
    }

    pub fn is_satisfied(&self) -> bool {
        !self.root_false && self.root_pending == 0
    }

    pub fn is_unsatisfiable(&self) -> bool {
        self.root_false
    }

    pub fn force_true(&mut self, layer: usize, v: usize) {
        let mut stack = vec![(layer, v)];
        while let Some((d, v)) = stack.pop() {
            if self.state[d][v] != GateState::Open {
                continue;
            }
            self.state[d][v] = GateState::True;
            if d == 0 {
                self.root_pending -= 1;
                continue;
            }
            for &p in &self.parents[d][v] {
                if self.state[d - 1][p] != GateState::Open {
                    continue;
                }
                self.pending[d - 1][p] -= 1;
                if !MmsaInstance::is_and_layer(d - 1) || self.pending[d - 1][p] == 0 {
                    stack.push((d - 1, p));
                }
            }
        }
    }

    pub fn force_false(&mut self, layer: usize, v: usize) {
        let mut stack = vec![(layer, v)];
        while let Some((d, v)) = stack.pop() {
            if self.state[d][v] != GateState::Open {
                continue;
            }
            self.state[d][v] = GateState::False;
            if d == 0 {
                self.root_false = true;
                continue;
            }
            for &p in &self.parents[d][v] {
                if self.state[d - 1][p] != GateState::Open {
                    continue;
                }
                self.pending[d - 1][p] -= 1;
                if MmsaInstance::is_and_layer(d - 1) || self.pending[d - 1][p] == 0 {
                    stack.push((d - 1, p));
                }
            }
        }
    }

    /// Open gates of layers `0..depth`, with layer `depth - 1` turned into variables.
    pub fn extract(&self, depth: usize) -> SubCircuit {
        assert!(depth >= 1 && depth <= self.base.t);
        let mut origin: Vec<Vec<usize>> = Vec::with_capacity(depth);
        let mut local: Vec<Vec<Option<usize>>> = Vec::with_capacity(depth);
        for d in 0..depth {
            let open: Vec<usize> = (0..self.base.layers[d]).filter(|&v| self.state[d][v] == GateState::Open).collect();
            let mut index = vec![None; self.base.layers[d]];
            for (i, &v) in open.iter().enumerate() {
                index[v] = Some(i);
            }
            origin.push(open);
            local.push(index);
        }
        let edges = (0..depth - 1)
            .map(|d| {
                origin[d]
                    .iter()
                    .map(|&v| self.base.edges[d][v].iter().filter_map(|&c| local[d + 1][c]).collect())
                    .collect()
            })
            .collect();
        SubCircuit {
            instance: MmsaInstance { t: depth, layers: origin.iter().map(|o| o.len()).collect(), edges },
            origin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{rbsc_to_mmsa3, RbscInstance, RbscSet};

    fn sample() -> MmsaInstance {
        rbsc_to_mmsa3(&RbscInstance {
            k: 2,
            n: 3,
            sets: vec![
                RbscSet { blue: vec![0], red: vec![0] },
                RbscSet { blue: vec![1], red: vec![1] },
                RbscSet { blue: vec![0, 1], red: vec![2] },
            ],
        })
    }

    #[test]
    fn forcing_sets_propagates_to_root() {
        let circuit = sample();
        let mut partial = PartialCircuit::new(&circuit);
        partial.force_true(1, 2);
        assert!(partial.is_satisfied());

        let mut partial = PartialCircuit::new(&circuit);
        partial.force_true(1, 0);
        assert!(!partial.is_satisfied());
        partial.force_false(1, 1);
        partial.force_false(1, 2);
        assert!(partial.is_unsatisfiable());
    }

    #[test]
    fn extraction_keeps_open_part() {
        let circuit = sample();
        let mut partial = PartialCircuit::new(&circuit);
        partial.force_true(1, 0);
        partial.force_false(1, 2);
        let sub = partial.extract(2);
        assert_eq!(sub.instance.layers, vec![1, 1]);
        assert_eq!(sub.origin, vec![vec![1], vec![1]]);
        sub.instance.validate().unwrap();
        assert!(sub.instance.evaluate_set(&[0]));
    }

    #[test]
    fn childless_and_gates_start_true() {
        let circuit =
            MmsaInstance { t: 3, layers: vec![1, 2, 1], edges: vec![vec![vec![0, 1]], vec![vec![], vec![0]]] };
        let partial = PartialCircuit::new(&circuit);
        assert_eq!(partial.state(1, 0), GateState::True);
        assert!(partial.is_satisfied());
    }
}
