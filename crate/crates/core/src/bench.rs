//! Benchmark suites: generate or load instances, solve them, compare against exact or planted
//! optima and the declared ratio bounds.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{
    canonical, gen_gap_instance, gen_planted_rbsc, gen_random_mku, gen_random_mmsa, gen_random_rbsc, GapParams,
    RandomRbscParams,
};
use crate::instance::{read_instance, Instance};
use crate::mmsa4::{solve_mmsa4, Mmsa4Params};
use crate::mmsa_rec::{solve_mmsa, MmsaParams};
use crate::oracles::{bruteforce_mku, bruteforce_mmsa, bruteforce_partial_rbsc};
use crate::rbsc::{self, solve_partial_rbsc, RbscParams};
use crate::reduction::{solve_mku_via_rbsc, ApproxSolver};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorConfig {
    Rbsc { m: usize, n: usize, k: usize, blue_size: usize, red_size: usize },
    Planted { m: usize, n: usize, k: usize, opt: usize },
    Mku { n: usize, m: usize, set_size: usize, k: usize },
    Mmsa { layers: Vec<usize>, max_children: usize },
    Gap { n: usize, eps: f64, t: usize },
    Canonical { name: String },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverConfig {
    Rbsc,
    PartialRbsc { k_hat: usize },
    Mmsa4,
    Mmsa,
    Mku,
}

impl SolverConfig {
    fn label(&self) -> String {
        match self {
            SolverConfig::Rbsc => "rbsc".into(),
            SolverConfig::PartialRbsc { k_hat } => format!("partial_rbsc:{k_hat}"),
            SolverConfig::Mmsa4 => "mmsa4".into(),
            SolverConfig::Mmsa => "mmsa".into(),
            SolverConfig::Mku => "mku".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub generator: GeneratorConfig,
    pub solver: SolverConfig,
    /// Generator seeds; file and canonical instances ignore them beyond labelling rows.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    #[serde(default)]
    pub entries: Vec<SuiteEntry>,
}

pub fn parse_suite(text: &str) -> Result<Suite> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("suite: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptSource {
    Oracle,
    Planted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub digest: String,
    pub solver: String,
    pub seed: u64,
    /// `ok`, `infeasible` or `error`.
    pub status: String,
    pub message: Option<String>,
    pub cost: Option<usize>,
    pub opt: Option<usize>,
    pub opt_source: Option<OptSource>,
    pub ratio: Option<f64>,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    /// Excluded from determinism comparisons.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub rows: usize,
    pub solved: usize,
    pub infeasible: usize,
    pub errors: usize,
    pub max_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub seed: u64,
    /// Declared constants of the RBSC and depth-4 bounds.
    pub rbsc_bound_constant: f64,
    pub mmsa4_bound_constant: f64,
    pub rows: Vec<BenchRow>,
    pub summary: BenchSummary,
}

impl BenchReport {
    /// Copy with wall times zeroed, for comparing runs.
    pub fn without_timing(&self) -> BenchReport {
        let mut copy = self.clone();
        for row in &mut copy.rows {
            row.wall_ms = 0.0;
        }
        copy
    }
}

struct Built {
    instance: Instance,
    planted: Option<usize>,
}

fn build(generator: &GeneratorConfig, seed: u64) -> Result<Built> {
    let plain = |instance: Instance| Ok(Built { instance, planted: None });
    match generator {
        &GeneratorConfig::Rbsc { m, n, k, blue_size, red_size } => {
            plain(gen_random_rbsc(RandomRbscParams { m, n, k, blue_size, red_size }, seed).into())
        }
        &GeneratorConfig::Planted { m, n, k, opt } => {
            let planted = gen_planted_rbsc(m, n, k, opt, seed);
            Ok(Built { instance: planted.instance.into(), planted: Some(planted.planted_cost) })
        }
        &GeneratorConfig::Mku { n, m, set_size, k } => plain(gen_random_mku(n, m, set_size, k, seed).into()),
        GeneratorConfig::Mmsa { layers, max_children } => plain(gen_random_mmsa(layers, *max_children, seed).into()),
        &GeneratorConfig::Gap { n, eps, t } => plain(gen_gap_instance(GapParams { n, eps, t }, seed)?.instance.into()),
        GeneratorConfig::Canonical { name } => plain(match name.as_str() {
            "rbsc-small-1" => canonical::rbsc_small_1().into(),
            "mku-small-1" => canonical::mku_small_1().into(),
            "mmsa4-small-1" => canonical::mmsa4_small_1().into(),
            "mmsa6-small-1" => canonical::mmsa6_small_1().into(),
            other => return Err(Error::InvalidParameter(format!("unknown canonical instance {other}"))),
        }),
        GeneratorConfig::File { path } => plain(read_instance(path)?.instance),
    }
}

struct Solved {
    cost: usize,
    bound: f64,
}

fn wrong_kind(solver: &SolverConfig, instance: &Instance) -> Error {
    Error::InvalidParameter(format!("solver {} cannot run on a {} instance", solver.label(), instance.kind()))
}

fn solve(solver: &SolverConfig, instance: &Instance, seed: u64) -> Result<Solved> {
    match (solver, instance) {
        (SolverConfig::Rbsc, Instance::Rbsc(i)) | (SolverConfig::PartialRbsc { .. }, Instance::Rbsc(i)) => {
            let k_hat = match solver {
                SolverConfig::PartialRbsc { k_hat } => *k_hat,
                _ => i.k,
            };
            let report = solve_partial_rbsc(i, k_hat, &RbscParams { seed, ..Default::default() })?;
            if i.covered_count(&report.solution.chosen_sets) < k_hat {
                return Err(Error::Structural("solver output covers too few blue elements".into()));
            }
            Ok(Solved { cost: report.solution.cost, bound: report.bound })
        }
        (SolverConfig::Mmsa4, Instance::Mmsa(i)) => {
            let report = solve_mmsa4(i, &Mmsa4Params { seed, ..Default::default() })?;
            if !i.evaluate_set(&report.solution.variables) {
                return Err(Error::Structural("solver output does not satisfy the circuit".into()));
            }
            Ok(Solved { cost: report.solution.cost, bound: report.bound })
        }
        (SolverConfig::Mmsa, Instance::Mmsa(i)) => {
            let report = solve_mmsa(i, &MmsaParams { seed, ..Default::default() })?;
            if !i.evaluate_set(&report.solution.variables) {
                return Err(Error::Structural("solver output does not satisfy the circuit".into()));
            }
            Ok(Solved { cost: report.solution.cost, bound: report.bound })
        }
        (SolverConfig::Mku, Instance::Mku(i)) => {
            let report = solve_mku_via_rbsc(i, &ApproxSolver(RbscParams::default()), seed)?;
            if !i.is_feasible(&report.solution.chosen_sets) {
                return Err(Error::Structural("solver output is not k distinct sets".into()));
            }
            let log_k = (i.k as f64).ln().max(1.0);
            let alpha = rbsc::approximation_bound(i.m(), i.n, i.k);
            Ok(Solved { cost: report.solution.cost, bound: 16.0 * log_k * log_k * alpha })
        }
        _ => Err(wrong_kind(solver, instance)),
    }
}

/// Exact optimum when the instance is small enough for the oracles.
fn oracle(solver: &SolverConfig, instance: &Instance) -> Option<usize> {
    let result = match (solver, instance) {
        (SolverConfig::PartialRbsc { k_hat }, Instance::Rbsc(i)) => bruteforce_partial_rbsc(i, *k_hat).map(|s| s.cost),
        (_, Instance::Rbsc(i)) => bruteforce_partial_rbsc(i, i.k).map(|s| s.cost),
        (_, Instance::Mmsa(i)) => bruteforce_mmsa(i).map(|s| s.cost),
        (_, Instance::Mku(i)) => bruteforce_mku(i).map(|s| s.cost),
    };
    result.ok()
}

fn mix(seed: u64, row_seed: u64) -> u64 {
    (seed ^ row_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)).rotate_left(23)
}

fn run_row(entry: &SuiteEntry, row_seed: u64, suite_seed: u64) -> BenchRow {
    let start = Instant::now();
    let mut row = BenchRow {
        name: entry.name.clone(),
        digest: String::new(),
        solver: entry.solver.label(),
        seed: row_seed,
        status: "error".into(),
        message: None,
        cost: None,
        opt: None,
        opt_source: None,
        ratio: None,
        bound: None,
        within_bound: None,
        wall_ms: 0.0,
    };
    let built = match build(&entry.generator, row_seed) {
        Ok(b) => b,
        Err(e) => {
            row.message = Some(e.to_string());
            return row;
        }
    };
    row.digest = built.instance.digest();
    match solve(&entry.solver, &built.instance, mix(suite_seed, row_seed)) {
        Ok(solved) => {
            row.status = "ok".into();
            row.cost = Some(solved.cost);
            row.bound = Some(solved.bound);
            let opt = oracle(&entry.solver, &built.instance)
                .map(|o| (o, OptSource::Oracle))
                .or(built.planted.map(|p| (p, OptSource::Planted)));
            if let Some((opt, source)) = opt {
                row.opt = Some(opt);
                row.opt_source = Some(source);
                let ratio = match (solved.cost, opt) {
                    (0, _) => 1.0,
                    (_, 0) => f64::INFINITY,
                    (c, o) => c as f64 / o as f64,
                };
                row.ratio = Some(ratio);
                row.within_bound = Some(ratio <= solved.bound);
            }
        }
        Err(e @ (Error::Infeasible(_) | Error::Uncoverable(_))) => {
            row.status = "infeasible".into();
            row.message = Some(e.to_string());
        }
        Err(e) => row.message = Some(e.to_string()),
    }
    row.wall_ms = start.elapsed().as_secs_f64() * 1000.0;
    row
}

fn summarize(rows: &[BenchRow]) -> BenchSummary {
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    BenchSummary {
        rows: rows.len(),
        solved: rows.iter().filter(|r| r.status == "ok").count(),
        infeasible: rows.iter().filter(|r| r.status == "infeasible").count(),
        errors: rows.iter().filter(|r| r.status == "error").count(),
        max_ratio: ratios.iter().copied().reduce(f64::max),
        mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        bound_violations: rows.iter().filter(|r| r.within_bound == Some(false)).count(),
    }
}

/// Runs every `(entry, seed)` pair on the current rayon pool. Rows are sorted by digest, then
/// name, then seed, so the report does not depend on scheduling.
pub fn run_bench(suite: &Suite, seed: u64) -> BenchReport {
    let jobs: Vec<(&SuiteEntry, u64)> =
        suite.entries.iter().flat_map(|e| e.seeds.iter().map(move |&s| (e, s))).collect();
    let mut rows: Vec<BenchRow> = jobs.par_iter().map(|&(entry, s)| run_row(entry, s, seed)).collect();
    rows.sort_by(|a, b| (&a.digest, &a.name, a.seed, &a.solver).cmp(&(&b.digest, &b.name, b.seed, &b.solver)));
    let summary = summarize(&rows);
    BenchReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed,
        rbsc_bound_constant: rbsc::BOUND_CONSTANT,
        mmsa4_bound_constant: crate::mmsa4::BOUND_CONSTANT,
        rows,
        summary,
    }
}

/// [`run_bench`] on a dedicated pool of `jobs` threads; `None` uses the global pool.
pub fn run_bench_with_jobs(suite: &Suite, seed: u64, jobs: Option<usize>) -> Result<BenchReport> {
    match jobs {
        None => Ok(run_bench(suite, seed)),
        Some(0) => Err(Error::InvalidParameter("jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(|| run_bench(suite, seed)))
        }
    }
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".into(), |x| x.to_string())
}

fn fmt_f(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

/// Aligned plain-text table of the rows followed by the summary.
pub fn render_table(report: &BenchReport) -> String {
    let header = ["name", "digest", "solver", "seed", "status", "cost", "opt", "ratio", "bound", "ms"];
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in &report.rows {
        table.push(vec![
            r.name.clone(),
            r.digest.chars().take(12).collect(),
            r.solver.clone(),
            r.seed.to_string(),
            r.status.clone(),
            fmt_opt(&r.cost),
            fmt_opt(&r.opt),
            fmt_f(r.ratio),
            fmt_f(r.bound),
            format!("{:.1}", r.wall_ms),
        ]);
    }
    let widths: Vec<usize> = (0..header.len()).map(|c| table.iter().map(|row| row[c].len()).max().unwrap()).collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    let s = &report.summary;
    out.push_str(&format!(
        "rows {}  solved {}  infeasible {}  errors {}  max ratio {}  mean ratio {}  bound violations {}\n",
        s.rows,
        s.solved,
        s.infeasible,
        s.errors,
        fmt_f(s.max_ratio),
        fmt_f(s.mean_ratio),
        s.bound_violations
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical_entry(name: &str, solver: SolverConfig) -> SuiteEntry {
        SuiteEntry {
            name: name.into(),
            generator: GeneratorConfig::Canonical { name: name.into() },
            solver,
            seeds: vec![1],
        }
    }

    #[test]
    fn empty_suite() {
        let report = run_bench(&Suite::default(), 1);
        assert!(report.rows.is_empty());
        assert_eq!(report.summary.bound_violations, 0);
        assert_eq!(parse_suite("{}").unwrap(), Suite::default());
    }

    #[test]
    fn canonical_suite_has_no_violations_and_is_deterministic() {
        let suite = Suite {
            entries: vec![
                canonical_entry("rbsc-small-1", SolverConfig::Rbsc),
                canonical_entry("mku-small-1", SolverConfig::Mku),
                canonical_entry("mmsa4-small-1", SolverConfig::Mmsa4),
                canonical_entry("mmsa6-small-1", SolverConfig::Mmsa),
            ],
        };
        let report = run_bench(&suite, 5);
        assert_eq!(report.summary.solved, 4);
        assert_eq!(report.summary.bound_violations, 0);
        assert!(report.rows.iter().all(|r| r.ratio.is_some_and(f64::is_finite)));
        assert_eq!(report.without_timing(), run_bench(&suite, 5).without_timing());
    }

    #[test]
    fn infeasible_row_does_not_abort() {
        // Blue element 1 lies in no set.
        let path = std::env::temp_dir().join(format!("bench-uncoverable-{}.json", std::process::id()));
        std::fs::write(&path, r#"{"kind":"rbsc","k":2,"n":2,"sets":[{"blue":[0],"red":[1]}]}"#).unwrap();
        let suite = Suite {
            entries: vec![
                SuiteEntry {
                    name: "uncoverable".into(),
                    generator: GeneratorConfig::File { path: path.clone() },
                    solver: SolverConfig::Rbsc,
                    seeds: vec![0],
                },
                canonical_entry("rbsc-small-1", SolverConfig::PartialRbsc { k_hat: 99 }),
                canonical_entry("rbsc-small-1", SolverConfig::Rbsc),
            ],
        };
        let report = run_bench(&suite, 0);
        std::fs::remove_file(&path).unwrap();
        assert_eq!(report.summary.rows, 3);
        assert_eq!(report.summary.solved, 1);
        assert_eq!(report.summary.infeasible, 1);
        assert_eq!(report.summary.errors, 1);
        assert!(render_table(&report).contains("bound violations 0"));
    }
}
