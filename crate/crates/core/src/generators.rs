//! Seeded instance generators.
//!
//! Every generator is a pure function of its parameters and seed (ChaCha8 streams), so the
//! same call always yields the same canonical JSON.

use rand::seq::{index::sample, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{MkuInstance, MmsaInstance, RbscInstance, RbscSet};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sample_sorted<R: Rng>(rng: &mut R, universe: usize, amount: usize) -> Vec<usize> {
    let mut ids = sample(rng, universe, amount.min(universe)).into_vec();
    ids.sort_unstable();
    ids
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomRbscParams {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub blue_size: usize,
    pub red_size: usize,
}

/// Uniform random sets with fixed blue and red sizes. Blue elements left uncovered are added
/// to a random set, so the instance is always feasible.
pub fn gen_random_rbsc(params: RandomRbscParams, seed: u64) -> RbscInstance {
    assert!(params.m > 0, "at least one set is required");
    let mut rng = rng(seed);
    let mut sets: Vec<RbscSet> = (0..params.m)
        .map(|_| RbscSet {
            blue: sample_sorted(&mut rng, params.k, params.blue_size),
            red: sample_sorted(&mut rng, params.n, params.red_size),
        })
        .collect();
    let mut covered = vec![false; params.k];
    for set in &sets {
        for &b in &set.blue {
            covered[b] = true;
        }
    }
    for b in (0..params.k).filter(|&b| !covered[b]) {
        let j = rng.gen_range(0..params.m);
        sets[j].blue.push(b);
        sets[j].blue.sort_unstable();
    }
    RbscInstance { k: params.k, n: params.n, sets }
}

/// Instance with a hidden optimal subfamily.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedRbsc {
    pub instance: RbscInstance,
    /// Indices of the planted sets; they cover every blue element.
    pub planted: Vec<usize>,
    /// Red cost of the planted family. It is optimal whenever `opt_target < n`.
    pub planted_cost: usize,
}

/// Plants a family that partitions the blue elements and whose red union has exactly
/// `opt_target` elements; every decoy set touches more than `opt_target` reds.
pub fn gen_planted_rbsc(m: usize, n: usize, k: usize, opt_target: usize, seed: u64) -> PlantedRbsc {
    assert!(m > 0 && k > 0, "planted instances need sets and blue elements");
    let opt_target = opt_target.min(n);
    let mut rng = rng(seed);
    let planted_count = (m / 5).clamp(1, k.min(m));
    let hidden_reds = sample_sorted(&mut rng, n, opt_target);

    let mut blues: Vec<usize> = (0..k).collect();
    blues.shuffle(&mut rng);
    let mut planted_sets = vec![RbscSet { blue: Vec::new(), red: Vec::new() }; planted_count];
    for (i, &b) in blues.iter().enumerate() {
        planted_sets[i % planted_count].blue.push(b);
    }
    for (i, &r) in hidden_reds.iter().enumerate() {
        planted_sets[i % planted_count].red.push(r);
    }
    for set in &mut planted_sets {
        for &r in &hidden_reds {
            if rng.gen_bool(0.3) {
                set.red.push(r);
            }
        }
    }

    let outside: Vec<usize> = (0..n).filter(|r| hidden_reds.binary_search(r).is_err()).collect();
    let mut all: Vec<(bool, RbscSet)> = planted_sets.into_iter().map(|s| (true, s)).collect();
    for _ in planted_count..m {
        let blue_size = rng.gen_range(1..=k.div_ceil(2).max(1));
        let blue = sample_sorted(&mut rng, k, blue_size);
        let red_size = (opt_target + 1 + rng.gen_range(0..2)).min(n);
        let mut red = sample_sorted(&mut rng, n, red_size);
        if !outside.is_empty() && red.iter().all(|r| hidden_reds.binary_search(r).is_ok()) {
            red[0] = outside[rng.gen_range(0..outside.len())];
        }
        all.push((false, RbscSet { blue, red }));
    }
    all.shuffle(&mut rng);

    let mut planted = Vec::new();
    let sets = all
        .into_iter()
        .enumerate()
        .map(|(j, (is_planted, mut set))| {
            if is_planted {
                planted.push(j);
            }
            set.blue.sort_unstable();
            set.blue.dedup();
            set.red.sort_unstable();
            set.red.dedup();
            set
        })
        .collect();
    let instance = RbscInstance { k, n, sets };
    let planted_cost = instance.cost(&planted);
    PlantedRbsc { instance, planted, planted_cost }
}

/// Minimum k-union instance with `m` uniform random sets of fixed size.
pub fn gen_random_mku(n: usize, m: usize, set_size: usize, k: usize, seed: u64) -> MkuInstance {
    assert!(k >= 1 && k <= m, "need 1 <= k <= m");
    let mut rng = rng(seed);
    let sets = (0..m).map(|_| sample_sorted(&mut rng, n, set_size)).collect();
    MkuInstance { n, k, sets }
}

/// Random layered circuit. Every gate receives between one and `max_children` distinct
/// children, and every vertex below the first layer receives at least one parent.
pub fn gen_random_mmsa(layers: &[usize], max_children: usize, seed: u64) -> MmsaInstance {
    assert!(layers.len() >= 2, "circuits need at least two layers");
    assert!(layers.iter().all(|&s| s > 0), "layers must be nonempty");
    assert!(max_children >= 1);
    let mut rng = rng(seed);
    let mut edges = Vec::with_capacity(layers.len() - 1);
    for d in 0..layers.len() - 1 {
        let below = layers[d + 1];
        let mut layer: Vec<Vec<usize>> = (0..layers[d])
            .map(|_| {
                let count = rng.gen_range(1..=max_children.min(below));
                sample_sorted(&mut rng, below, count)
            })
            .collect();
        let mut has_parent = vec![false; below];
        for children in &layer {
            for &c in children {
                has_parent[c] = true;
            }
        }
        for c in (0..below).filter(|&c| !has_parent[c]) {
            let v = rng.gen_range(0..layers[d]);
            layer[v].push(c);
            layer[v].sort_unstable();
        }
        edges.push(layer);
    }
    MmsaInstance { t: layers.len(), layers: layers.to_vec(), edges }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub n: usize,
    pub eps: f64,
    pub t: usize,
}

impl GapParams {
    /// Edge probability `n^{-(2-2ε)/(2-ε)}` of each random graph.
    pub fn edge_probability(&self) -> f64 {
        (self.n as f64).powf(-self.exponent())
    }

    /// Size of the first layer, `round(n^{(2-2ε)/(2-ε)})`.
    pub fn first_layer_size(&self) -> usize {
        (self.n as f64).powf(self.exponent()).round() as usize
    }

    /// Niceness parameter `ε / (2 - ε)` of the random graphs.
    pub fn niceness(&self) -> f64 {
        self.eps / (2.0 - self.eps)
    }

    pub fn graph_count(&self) -> usize {
        (self.t - 1) / 2
    }

    /// Nominal circuit size `n^{2/(2-ε)} (t-1)/2` around which the gate count concentrates.
    pub fn nominal_gate_count(&self) -> f64 {
        (self.n as f64).powf(2.0 / (2.0 - self.eps)) * self.graph_count() as f64
    }

    fn exponent(&self) -> f64 {
        (2.0 - 2.0 * self.eps) / (2.0 - self.eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapInstance {
    pub instance: MmsaInstance,
    pub params: GapParams,
    /// Seed that produced a non-degenerate instance.
    pub seed_used: u64,
    pub regenerations: usize,
    /// Edge count of each random graph.
    pub graph_edges: Vec<usize>,
}

/// Builds the layered circuit from `(t-1)/2` independent random graphs; see
/// [`gen_gap_instance`]. Fails with `DegenerateGraph` when some OR gate would be childless.
pub fn gen_gap_instance_once(params: GapParams, seed: u64) -> Result<GapInstance> {
    if params.t.is_multiple_of(2) || params.t < 3 {
        return Err(Error::InvalidParameter(format!("gap instances need odd depth t >= 3, got {}", params.t)));
    }
    if !(params.eps > 0.0 && params.eps < 1.0) || params.n < 2 {
        return Err(Error::InvalidParameter("need n >= 2 and 0 < eps < 1".into()));
    }
    let mut rng = rng(seed);
    let n = params.n;
    let p = params.edge_probability();
    let graphs: Vec<Vec<(usize, usize)>> = (0..params.graph_count())
        .map(|_| {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            edges
        })
        .collect();

    let first = params.first_layer_size().max(1);
    let mut layers = vec![first];
    let mut edges: Vec<Vec<Vec<usize>>> = Vec::new();
    for (i, graph) in graphs.iter().enumerate() {
        let classes = *layers.last().unwrap();
        // OR layer: round-robin partition of the graph's edges among the layer above.
        let mut or_layer = vec![Vec::new(); classes];
        for e in 0..graph.len() {
            or_layer[e % classes].push(e);
        }
        if let Some(v) = or_layer.iter().position(|c| c.is_empty()) {
            return Err(Error::DegenerateGraph(format!(
                "graph {} has {} edges, fewer than the {classes} gates above it (gate {v} childless)",
                i + 1,
                graph.len()
            )));
        }
        edges.push(or_layer);
        layers.push(graph.len());
        // AND layer: each edge gate needs both endpoints.
        edges.push(graph.iter().map(|&(u, v)| vec![u, v]).collect());
        layers.push(n);
    }
    let instance = MmsaInstance { t: params.t, layers, edges };
    instance.validate()?;
    Ok(GapInstance {
        instance,
        params,
        seed_used: seed,
        regenerations: 0,
        graph_edges: graphs.iter().map(|g| g.len()).collect(),
    })
}

/// Gap instance from random graphs, retrying with successive seeds while the draw is
/// degenerate (at most 1000 attempts).
pub fn gen_gap_instance(params: GapParams, seed: u64) -> Result<GapInstance> {
    let mut last = None;
    for attempt in 0..1000u64 {
        match gen_gap_instance_once(params, seed.wrapping_add(attempt)) {
            Ok(mut gap) => {
                gap.regenerations = attempt as usize;
                return Ok(gap);
            }
            Err(err @ Error::DegenerateGraph(_)) => last = Some(err),
            Err(err) => return Err(err),
        }
    }
    Err(last.unwrap())
}

/// Parameters of the small named instances used throughout the tests and benches.
pub mod canonical {
    use super::*;

    pub const RBSC_SMALL_1: RandomRbscParams = RandomRbscParams { m: 8, n: 10, k: 6, blue_size: 2, red_size: 3 };

    pub fn rbsc_small_1() -> RbscInstance {
        gen_random_rbsc(RBSC_SMALL_1, 42)
    }

    pub fn mku_small_1() -> MkuInstance {
        gen_random_mku(12, 8, 3, 3, 42)
    }

    pub fn mmsa4_small_1() -> MmsaInstance {
        gen_random_mmsa(&[3, 5, 5, 8], 2, 42)
    }

    pub fn mmsa6_small_1() -> MmsaInstance {
        gen_random_mmsa(&[2, 3, 4, 5, 6, 8], 2, 42)
    }
}
