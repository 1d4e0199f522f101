//! Property tests over random instances.

use proptest::prelude::*;
use rbsc_core::bench::{run_bench_with_jobs, GeneratorConfig, SolverConfig, Suite, SuiteEntry};
use rbsc_core::generators::{gen_random_mku, gen_random_mmsa, gen_random_rbsc, RandomRbscParams};
use rbsc_core::instance::{parse_instance, rbsc_to_mmsa3, Instance};
use rbsc_core::lp::{Constraint, Direction, LpModel, LpStatus};
use rbsc_core::mmsa_rec::{solve_mmsa, MmsaParams};
use rbsc_core::oracles::{bruteforce_mmsa, bruteforce_rbsc};
use rbsc_core::rbsc::partition::partition_by_red_degree;
use rbsc_core::rbsc::{self, solve_partial_rbsc, solve_rbsc, RbscParams};
use rbsc_core::reduction::{reduce_mku_to_rbsc, solve_mku_via_rbsc, ApproxSolver};
use rbsc_core::setcover::{fractional_set_cover, greedy_set_cover};

fn rbsc_params() -> impl Strategy<Value = (RandomRbscParams, u64)> {
    (2usize..=10, 2usize..=12, 1usize..=6, 1usize..=3, 1usize..=4, any::<u64>()).prop_map(
        |(m, n, k, blue_size, red_size, seed)| {
            (RandomRbscParams { m, n, k, blue_size: blue_size.min(k), red_size: red_size.min(n) }, seed)
        },
    )
}

fn layers(depth: usize) -> impl Strategy<Value = Vec<usize>> {
    (prop::collection::vec(1usize..=4, depth - 1), 4usize..=10).prop_map(|(mut shape, vars)| {
        shape.push(vars);
        shape
    })
}

/// Optimum of `max c·x` over a bounded two-dimensional polygon, by enumerating every
/// intersection of two boundary lines.
fn vertex_optimum(objective: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, &(a, p)) in rows.iter().enumerate() {
        for &(b, q) in &rows[i + 1..] {
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-9 {
                continue;
            }
            let x = [(p * b[1] - a[1] * q) / det, (a[0] * q - p * b[0]) / det];
            if rows.iter().all(|&(c, r)| c[0] * x[0] + c[1] * x[1] <= r + 1e-7) {
                let value = objective[0] * x[0] + objective[1] * x[1];
                best = Some(best.map_or(value, |v: f64| v.max(value)));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simplex_matches_vertex_enumeration(
        objective in prop::array::uniform2(-5i32..=5),
        rows in prop::collection::vec((prop::array::uniform2(-4i32..=4), -3i32..=8), 0..5),
        upper in prop::array::uniform2(1i32..=6),
    ) {
        let objective = objective.map(f64::from);
        let mut model = LpModel::new(Direction::Maximize);
        let x = [model.add_var("x0", 0.0, f64::from(upper[0])), model.add_var("x1", 0.0, f64::from(upper[1]))];
        model.set_objective_coefficient(x[0], objective[0]).unwrap();
        model.set_objective_coefficient(x[1], objective[1]).unwrap();
        let mut boundary = vec![
            ([-1.0, 0.0], 0.0),
            ([0.0, -1.0], 0.0),
            ([1.0, 0.0], f64::from(upper[0])),
            ([0.0, 1.0], f64::from(upper[1])),
        ];
        for (coefficients, rhs) in &rows {
            let c = coefficients.map(f64::from);
            model.add_constraint(Constraint::le(vec![(x[0], c[0]), (x[1], c[1])], f64::from(*rhs))).unwrap();
            boundary.push((c, f64::from(*rhs)));
        }
        let solution = model.solve().unwrap();
        match vertex_optimum(objective, &boundary) {
            Some(expected) => {
                prop_assert_eq!(solution.status, LpStatus::Optimal);
                prop_assert!((solution.objective - expected).abs() <= 1e-6 * (1.0 + expected.abs()));
                prop_assert!(model.max_violation(&solution.values) <= 1e-7);
            }
            None => prop_assert_eq!(solution.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn rbsc_output_is_feasible_and_within_bound((params, seed) in rbsc_params(), small_n0 in any::<bool>()) {
        let instance = gen_random_rbsc(params, seed);
        let n0_factor = if small_n0 { 0.01 } else { 1.0 };
        let report = solve_rbsc(&instance, &RbscParams { seed, n0_factor, ..Default::default() }).unwrap();
        prop_assert!(instance.is_feasible(&report.solution.chosen_sets));
        prop_assert_eq!(report.solution.cost, instance.cost(&report.solution.chosen_sets));
        let opt = bruteforce_rbsc(&instance).unwrap().cost;
        let bound = rbsc::approximation_bound(instance.m(), instance.n, instance.k);
        prop_assert!(report.solution.cost as f64 <= bound * opt.max(1) as f64);
    }

    #[test]
    fn partial_rbsc_covers_enough((params, seed) in rbsc_params(), fraction in 0.0f64..=1.0) {
        let instance = gen_random_rbsc(params, seed);
        let k_hat = (fraction * instance.k as f64).round() as usize;
        let report = solve_partial_rbsc(&instance, k_hat, &RbscParams { seed, ..Default::default() }).unwrap();
        prop_assert!(instance.covered_count(&report.solution.chosen_sets) >= k_hat);
    }

    #[test]
    fn partition_guarantees_hold((params, seed) in rbsc_params(), n0 in 1usize..=30) {
        let instance = gen_random_rbsc(params, seed);
        let partition = partition_by_red_degree(&instance, n0).unwrap();
        prop_assert_eq!(partition.check(&instance), Ok(()));
    }

    #[test]
    fn instances_round_trip_through_json((params, seed) in rbsc_params(), depth in 2usize..=6) {
        let rbsc: Instance = gen_random_rbsc(params, seed).into();
        let mmsa: Instance = gen_random_mmsa(&vec![3; depth], 2, seed).into();
        let mku: Instance = gen_random_mku(params.n, params.m, params.red_size, params.m.min(params.k), seed).into();
        for instance in [rbsc, mmsa, mku] {
            let loaded = parse_instance(&instance.to_json()).unwrap();
            prop_assert!(!loaded.normalized);
            prop_assert_eq!(loaded.instance.digest(), instance.digest());
            prop_assert_eq!(loaded.instance, instance);
        }
    }

    #[test]
    fn rbsc_and_circuit_optima_agree((params, seed) in rbsc_params()) {
        let instance = gen_random_rbsc(params, seed);
        let circuit = rbsc_to_mmsa3(&instance);
        prop_assert_eq!(bruteforce_rbsc(&instance).unwrap().cost, bruteforce_mmsa(&circuit).unwrap().cost);
    }

    #[test]
    fn greedy_stays_within_the_logarithmic_factor(
        sets in prop::collection::vec(prop::collection::btree_set(0usize..15, 1..6), 1..12),
    ) {
        let sets: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut universe: Vec<usize> = sets.iter().flatten().copied().collect();
        universe.sort_unstable();
        universe.dedup();
        let greedy = greedy_set_cover(&universe, &sets).unwrap();
        let fractional = fractional_set_cover(&universe, &sets).unwrap();
        prop_assert!(greedy.len() as f64 <= (1.0 + (universe.len() as f64).ln()) * fractional + 1e-9);
        let mut covered: Vec<usize> = greedy.iter().flat_map(|&h| sets[h].iter().copied()).collect();
        covered.sort_unstable();
        covered.dedup();
        prop_assert_eq!(covered, universe);
    }

    #[test]
    fn mmsa_output_satisfies_the_circuit(depth in 2usize..=6, seed in any::<u64>()) {
        let instance = gen_random_mmsa(&vec![3; depth - 1].into_iter().chain([8]).collect::<Vec<_>>(), 3, seed);
        let report = solve_mmsa(&instance, &MmsaParams { seed, ..Default::default() }).unwrap();
        prop_assert!(instance.evaluate_set(&report.solution.variables));
    }

    #[test]
    fn circuits_are_monotone(shape in layers(4), seed in any::<u64>(), mask in any::<u32>(), extra in 0usize..10) {
        let instance = gen_random_mmsa(&shape, 3, seed);
        let vars = instance.variable_count();
        let mut assignment: Vec<bool> = (0..vars).map(|h| mask >> h & 1 == 1).collect();
        let before = instance.evaluate(&assignment);
        assignment[extra % vars] = true;
        prop_assert!(!before || instance.evaluate(&assignment));
    }

    #[test]
    fn reduction_property_one(m in 2usize..=10, k_seed in any::<usize>(), seed in any::<u64>(), order in any::<u64>()) {
        let k = 1 + k_seed % m;
        let mku = gen_random_mku(12, m, 3, k, seed);
        let reduction = reduce_mku_to_rbsc(&mku, seed);
        let mut chosen: Vec<usize> = (0..m).collect();
        chosen.rotate_left((order % m as u64) as usize);
        prop_assume!(reduction.instance.is_feasible(&chosen));
        let k_prime = reduction.params.k_prime;
        prop_assert!(chosen.len() >= k_prime);
        prop_assert!(mku.union_size(&chosen[..k_prime]) <= reduction.instance.cost(&chosen));
    }

    #[test]
    fn mku_returns_k_distinct_sets(m in 1usize..=9, k_seed in any::<usize>(), seed in any::<u64>()) {
        let k = 1 + k_seed % m;
        let mku = gen_random_mku(10, m, 3, k, seed);
        let report = solve_mku_via_rbsc(&mku, &ApproxSolver(RbscParams::default()), seed).unwrap();
        prop_assert!(mku.is_feasible(&report.solution.chosen_sets));
        prop_assert_eq!(report.solution.cost, mku.union_size(&report.solution.chosen_sets));
        prop_assert!(report.rounds.len() as f64 <= report.round_bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bench_report_does_not_depend_on_job_count(seed in any::<u64>(), jobs in 2usize..=4) {
        let entry = |name: &str, generator, solver| SuiteEntry { name: name.into(), generator, solver, seeds: vec![1, 2, 3] };
        let suite = Suite {
            entries: vec![
                entry("rbsc", GeneratorConfig::Rbsc { m: 8, n: 10, k: 5, blue_size: 2, red_size: 3 }, SolverConfig::Rbsc),
                entry("mmsa", GeneratorConfig::Mmsa { layers: vec![2, 3, 3, 6], max_children: 2 }, SolverConfig::Mmsa4),
                entry("mku", GeneratorConfig::Mku { n: 10, m: 6, set_size: 3, k: 3 }, SolverConfig::Mku),
            ],
        };
        let serial = run_bench_with_jobs(&suite, seed, Some(1)).unwrap();
        let parallel = run_bench_with_jobs(&suite, seed, Some(jobs)).unwrap();
        prop_assert_eq!(serial.summary.bound_violations, 0);
        prop_assert_eq!(serial.without_timing(), parallel.without_timing());
    }
}
