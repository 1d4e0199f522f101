//! Residual depth-4 subproblem: uncovered blue gates, the AND gates that can still cover them,
//! their unsatisfied red children and the unchosen variables below. All ids are local.

use crate::instance::MmsaInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct View {
    /// Original ids per local index, one list per layer.
    pub blues: Vec<usize>,
    pub js: Vec<usize>,
    pub reds: Vec<usize>,
    pub vars: Vec<usize>,
    pub blue_js: Vec<Vec<usize>>,
    pub j_blues: Vec<Vec<usize>>,
    pub j_reds: Vec<Vec<usize>>,
    pub red_vars: Vec<Vec<usize>>,
    pub var_reds: Vec<Vec<usize>>,
    /// `(j, ℓ)` pairs with `ℓ ∈ Γ_B(j)`, sorted.
    pub jb_edges: Vec<(usize, usize)>,
}

impl View {
    /// Residual view after setting `chosen` variables, keeping only AND gates allowed by
    /// `allowed` (indexed by original id). Blue gates already satisfied are dropped.
    pub fn new(instance: &MmsaInstance, chosen: &[bool], allowed: Option<&[bool]>) -> Self {
        assert_eq!(instance.t, 4, "residual view needs a depth-4 circuit");
        let values = instance.evaluate_layers(chosen);
        let blues: Vec<usize> = (0..instance.layers[0]).filter(|&l| !values[0][l]).collect();
        let mut js_mask = vec![false; instance.layers[1]];
        for &l in &blues {
            for &j in &instance.edges[0][l] {
                js_mask[j] = allowed.is_none_or(|a| a[j]);
            }
        }
        let js: Vec<usize> = (0..instance.layers[1]).filter(|&j| js_mask[j]).collect();
        let mut red_mask = vec![false; instance.layers[2]];
        for &j in &js {
            for &i in &instance.edges[1][j] {
                red_mask[i] |= !values[2][i];
            }
        }
        let reds: Vec<usize> = (0..instance.layers[2]).filter(|&i| red_mask[i]).collect();
        let mut var_mask = vec![false; instance.layers[3]];
        for &i in &reds {
            for &h in &instance.edges[2][i] {
                var_mask[h] = true;
            }
        }
        let vars: Vec<usize> = (0..instance.layers[3]).filter(|&h| var_mask[h]).collect();

        let local = |ids: &[usize], size: usize| {
            let mut map = vec![usize::MAX; size];
            for (pos, &id) in ids.iter().enumerate() {
                map[id] = pos;
            }
            map
        };
        let (lj, li, lh) =
            (local(&js, instance.layers[1]), local(&reds, instance.layers[2]), local(&vars, instance.layers[3]));
        let blue_js: Vec<Vec<usize>> = blues
            .iter()
            .map(|&l| instance.edges[0][l].iter().filter(|&&j| lj[j] != usize::MAX).map(|&j| lj[j]).collect())
            .collect();
        let mut j_blues = vec![Vec::new(); js.len()];
        let mut jb_edges = Vec::new();
        for (l, list) in blue_js.iter().enumerate() {
            for &j in list {
                j_blues[j].push(l);
                jb_edges.push((j, l));
            }
        }
        jb_edges.sort_unstable();
        let j_reds: Vec<Vec<usize>> = js
            .iter()
            .map(|&j| instance.edges[1][j].iter().filter(|&&i| li[i] != usize::MAX).map(|&i| li[i]).collect())
            .collect();
        let red_vars: Vec<Vec<usize>> =
            reds.iter().map(|&i| instance.edges[2][i].iter().map(|&h| lh[h]).collect()).collect();
        let mut var_reds = vec![Vec::new(); vars.len()];
        for (i, list) in red_vars.iter().enumerate() {
            for &h in list {
                var_reds[h].push(i);
            }
        }
        View { blues, js, reds, vars, blue_js, j_blues, j_reds, red_vars, var_reds, jb_edges }
    }

    pub fn k(&self) -> usize {
        self.blues.len()
    }

    pub fn m(&self) -> usize {
        self.js.len()
    }

    pub fn n(&self) -> usize {
        self.reds.len()
    }

    pub fn s(&self) -> usize {
        self.vars.len()
    }

    /// Local blue gates with no remaining AND child.
    pub fn stranded_blues(&self) -> Vec<usize> {
        (0..self.k()).filter(|&l| self.blue_js[l].is_empty()).collect()
    }

    /// Local AND gates satisfied once the local variables `picked` are set.
    pub fn satisfied_js(&self, picked: &[usize]) -> Vec<usize> {
        let mut red_ok = vec![false; self.n()];
        for &h in picked {
            for &i in &self.var_reds[h] {
                red_ok[i] = true;
            }
        }
        (0..self.m()).filter(|&j| self.j_reds[j].iter().all(|&i| red_ok[i])).collect()
    }

    /// Blue gates covered by the local AND gates `js`.
    pub fn blues_of(&self, js: &[usize]) -> Vec<usize> {
        let mut hit = vec![false; self.k()];
        for &j in js {
            for &l in &self.j_blues[j] {
                hit[l] = true;
            }
        }
        (0..self.k()).filter(|&l| hit[l]).collect()
    }
}
