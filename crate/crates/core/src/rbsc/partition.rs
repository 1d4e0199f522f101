//! Splits the sets into classes of roughly uniform red degree.
//!
//! Degree scales halve from the maximum red degree downward. Before each class is formed,
//! the red elements of highest set-degree are excluded until every surviving red element lies
//! in at most `2 m r_α log n / n0` of the remaining sets. The class then collects the sets
//! whose surviving red degree lies in `[r/2, r]`. Sets whose red elements were all excluded
//! end up in the residual class, which costs nothing measured against the surviving reds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::RbscInstance;
use crate::util::lg;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub alpha: usize,
    pub sets: Vec<usize>,
    /// Red elements still present when the class was formed, sorted.
    pub reds: Vec<usize>,
    /// Every member has between `r_alpha` and `2 r_alpha` surviving red elements.
    pub r_alpha: usize,
}

impl Bucket {
    pub fn contains_red(&self, red: usize) -> bool {
        self.reds.binary_search(&red).is_ok()
    }

    /// `Γ_{R_α}(j)`: the surviving red elements of set `j`.
    pub fn reds_of<'a>(&'a self, instance: &'a RbscInstance, j: usize) -> impl Iterator<Item = usize> + 'a {
        instance.sets[j].red.iter().copied().filter(move |&r| self.contains_red(r))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub buckets: Vec<Bucket>,
    /// Sets with no surviving red element.
    pub residual: Vec<usize>,
    /// Red elements excluded over all classes, sorted.
    pub excluded: Vec<usize>,
    pub n0: usize,
}

/// Per-class degree cap `2 m r_α log n / n0`.
pub fn degree_cap(m: usize, n: usize, r_alpha: usize, n0: usize) -> f64 {
    2.0 * m as f64 * r_alpha as f64 * lg(n as f64) / n0 as f64
}

pub fn partition_by_red_degree(instance: &RbscInstance, n0: usize) -> Result<Partition> {
    let (m, n) = (instance.m(), instance.n);
    if n0 == 0 {
        return Err(Error::InvalidParameter("n0 must be positive".into()));
    }
    if m == 0 || instance.sets.iter().all(|s| s.red.is_empty()) {
        return Err(Error::DegenerateInput("every set has an empty red neighborhood".into()));
    }
    let sets_of_red = instance.sets_of_red();
    let mut red_alive = vec![true; n];
    let mut set_alive = vec![true; m];
    let mut set_degree: Vec<usize> = instance.sets.iter().map(|s| s.red.len()).collect();
    let mut red_degree: Vec<usize> = sets_of_red.iter().map(|l| l.len()).collect();
    let mut excluded = Vec::new();
    let mut buckets = Vec::new();
    let mut alive_count = m;
    let mut r = *set_degree.iter().max().unwrap() as f64;

    while alive_count > 0 && r >= 1.0 {
        let r_alpha = (r / 2.0).ceil() as usize;
        let cap = degree_cap(m, n, r_alpha, n0);
        loop {
            let top =
                (0..n).filter(|&i| red_alive[i]).max_by(|&a, &b| red_degree[a].cmp(&red_degree[b]).then(b.cmp(&a)));
            match top {
                Some(i) if red_degree[i] as f64 > cap => {
                    red_alive[i] = false;
                    excluded.push(i);
                    for &j in &sets_of_red[i] {
                        if set_alive[j] {
                            set_degree[j] -= 1;
                        }
                    }
                }
                _ => break,
            }
        }
        let members: Vec<usize> =
            (0..m).filter(|&j| set_alive[j] && 2.0 * set_degree[j] as f64 >= r && set_degree[j] as f64 <= r).collect();
        for &j in &members {
            set_alive[j] = false;
            alive_count -= 1;
            for &i in &instance.sets[j].red {
                red_degree[i] -= 1;
            }
        }
        if !members.is_empty() {
            buckets.push(Bucket {
                alpha: buckets.len(),
                sets: members,
                reds: (0..n).filter(|&i| red_alive[i]).collect(),
                r_alpha,
            });
        }
        r /= 2.0;
    }
    excluded.sort_unstable();
    Ok(Partition { buckets, residual: (0..m).filter(|&j| set_alive[j]).collect(), excluded, n0 })
}

impl Partition {
    /// Checks the structural guarantees of the partition, returning the first violation.
    pub fn check(&self, instance: &RbscInstance) -> std::result::Result<(), String> {
        let (m, n) = (instance.m(), instance.n);
        let mut owner = vec![None; m];
        for (a, bucket) in self.buckets.iter().enumerate() {
            for &j in &bucket.sets {
                if owner[j].replace(a).is_some() {
                    return Err(format!("set {j} appears in two classes"));
                }
            }
        }
        for &j in &self.residual {
            if owner[j].replace(usize::MAX).is_some() {
                return Err(format!("residual set {j} also belongs to a class"));
            }
        }
        if let Some(j) = owner.iter().position(|o| o.is_none()) {
            return Err(format!("set {j} belongs to no class"));
        }
        for w in self.buckets.windows(2) {
            if !w[1].reds.iter().all(|r| w[0].contains_red(*r)) {
                return Err(format!("red sets of classes {} and {} are not nested", w[0].alpha, w[1].alpha));
            }
        }
        if self.excluded.len() > self.n0 {
            return Err(format!("{} red elements excluded, budget {}", self.excluded.len(), self.n0));
        }
        let sets_of_red = instance.sets_of_red();
        for bucket in &self.buckets {
            for &j in &bucket.sets {
                let d = bucket.reds_of(instance, j).count();
                if d < bucket.r_alpha || d > 2 * bucket.r_alpha {
                    return Err(format!("set {j} has degree {d} outside [{0}, 2*{0}]", bucket.r_alpha));
                }
            }
            let cap = degree_cap(m, n, bucket.r_alpha, self.n0);
            for &i in &bucket.reds {
                let d = sets_of_red[i].iter().filter(|j| bucket.sets.binary_search(j).is_ok()).count();
                if d as f64 > cap {
                    return Err(format!("red {i} lies in {d} sets of class {}, cap {cap}", bucket.alpha));
                }
            }
        }
        for &j in &self.residual {
            if instance.sets[j].red.iter().any(|r| self.excluded.binary_search(r).is_err()) {
                return Err(format!("residual set {j} still has surviving red elements"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::RbscSet;

    #[test]
    fn single_red_sets_form_one_class() {
        let inst =
            RbscInstance { k: 1, n: 4, sets: (0..6).map(|j| RbscSet { blue: vec![0], red: vec![j % 4] }).collect() };
        let p = partition_by_red_degree(&inst, 4).unwrap();
        assert_eq!(p.buckets.len(), 1);
        assert_eq!(p.buckets[0].r_alpha, 1);
        p.check(&inst).unwrap();
        let survivors: Vec<usize> = (0..6).filter(|&j| p.buckets[0].contains_red(inst.sets[j].red[0])).collect();
        assert_eq!(p.buckets[0].sets, survivors);
    }

    #[test]
    fn all_free_sets_are_degenerate() {
        let inst = RbscInstance { k: 1, n: 1, sets: vec![RbscSet { blue: vec![0], red: vec![] }] };
        assert!(matches!(partition_by_red_degree(&inst, 1), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn large_budget_excludes_everything() {
        let inst = RbscInstance {
            k: 2,
            n: 3,
            sets: vec![RbscSet { blue: vec![0], red: vec![0, 1] }, RbscSet { blue: vec![1], red: vec![2] }],
        };
        let p = partition_by_red_degree(&inst, 1000).unwrap();
        assert!(p.buckets.is_empty());
        assert_eq!(p.residual, vec![0, 1]);
        assert_eq!(p.excluded, vec![0, 1, 2]);
        p.check(&inst).unwrap();
    }
}
