use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use rbsc_core::bench::{parse_suite, render_table, run_bench_with_jobs};
use rbsc_core::generators::{
    canonical, gen_gap_instance, gen_planted_rbsc, gen_random_mku, gen_random_mmsa, gen_random_rbsc, GapParams,
    RandomRbscParams,
};
use rbsc_core::instance::{read_instance, write_instance, Instance, MkuInstance, MmsaInstance, RbscInstance};
use rbsc_core::mmsa4::{solve_mmsa4, Mmsa4Params};
use rbsc_core::mmsa_rec::{solve_mmsa, MmsaParams};
use rbsc_core::oracles::{bruteforce_mku, bruteforce_mmsa, bruteforce_partial_rbsc};
use rbsc_core::rbsc::{solve_partial_rbsc, RbscParams};
use rbsc_core::reduction::{reduce_mku_to_rbsc, solve_mku_via_rbsc, ApproxSolver};
use rbsc_core::{Error, Result};
use serde_json::Value;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_PARAMETER: u8 = 3;
const EXIT_CAP: u8 = 4;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser)]
#[command(name = "rbsc-kit", version, about = "Red-Blue Set Cover, Min k-Union and layered-circuit MMSA solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run an approximation algorithm on an instance file.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Exact optimum by exhaustive search.
    Oracle {
        file: PathBuf,
        /// Only this many blue elements must be covered (RBSC only).
        #[arg(long)]
        partial: Option<usize>,
    },
    /// Instance transformations.
    #[command(subcommand)]
    Reduce(ReduceCommand),
    /// Run a benchmark suite.
    Bench {
        suite: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Rows solved concurrently; defaults to one per core.
        #[arg(long)]
        jobs: Option<usize>,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json_stdout: bool,
    },
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    Rbsc {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        blue_size: usize,
        #[arg(long)]
        red_size: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// RBSC instance with a planted solution of known cost.
    Planted {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        opt: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    Mku {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        set_size: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Random layered circuit; layer sizes from the top, variables last.
    Mmsa {
        #[arg(long, value_delimiter = ',', required = true)]
        layers: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        max_children: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Layered random-graph gap construction.
    Gap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// One of the fixed named instances.
    Canonical {
        name: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Print the full solver report instead of the solution.
    #[arg(long)]
    report: bool,
}

#[derive(Subcommand)]
enum SolveCommand {
    Rbsc {
        #[command(flatten)]
        args: SolveArgs,
        /// Cover only this many blue elements.
        #[arg(long)]
        partial: Option<usize>,
        /// Multiplier on the class budget.
        #[arg(long, default_value_t = 1.0)]
        n0_factor: f64,
    },
    /// Depth-4 algorithm.
    Mmsa4 {
        #[command(flatten)]
        args: SolveArgs,
    },
    /// Any depth: base solvers for depth up to four, recursion above.
    Mmsa {
        #[command(flatten)]
        args: SolveArgs,
    },
    /// Min k-Union through repeated RBSC reductions.
    Mku {
        #[command(flatten)]
        args: SolveArgs,
    },
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// MKU instance to the sampled RBSC instance.
    Mku {
        file: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Print the sampling parameters and raw draws too.
        #[arg(long)]
        report: bool,
        #[command(flatten)]
        output: Output,
    },
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_instance(output: &Output, instance: Instance) -> Result<()> {
    instance.validate()?;
    info!("generated {} instance {}", instance.kind(), instance.digest());
    match &output.out {
        Some(path) => write_instance(path, &instance),
        None => emit(None, &instance.to_json()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports always serialize")
}

fn load(path: &Path) -> Result<Instance> {
    let loaded = read_instance(path)?;
    if loaded.normalized {
        info!("{}: id lists were sorted and deduplicated", path.display());
    }
    Ok(loaded.instance)
}

fn load_rbsc(path: &Path) -> Result<RbscInstance> {
    match load(path)? {
        Instance::Rbsc(i) => Ok(i),
        other => Err(Error::InvalidParameter(format!("expected an rbsc instance, found {}", other.kind()))),
    }
}

fn load_mmsa(path: &Path) -> Result<MmsaInstance> {
    match load(path)? {
        Instance::Mmsa(i) => Ok(i),
        other => Err(Error::InvalidParameter(format!("expected an mmsa instance, found {}", other.kind()))),
    }
}

fn load_mku(path: &Path) -> Result<MkuInstance> {
    match load(path)? {
        Instance::Mku(i) => Ok(i),
        other => Err(Error::InvalidParameter(format!("expected an mku instance, found {}", other.kind()))),
    }
}

fn solution_or_report<S: serde::Serialize, R: serde::Serialize>(report: bool, solution: &S, full: &R) -> String {
    if report {
        json(full)
    } else {
        json(solution)
    }
}

fn generate(command: GenCommand) -> Result<()> {
    match command {
        GenCommand::Rbsc { m, n, k, blue_size, red_size, seed, output } => {
            emit_instance(&output, gen_random_rbsc(RandomRbscParams { m, n, k, blue_size, red_size }, seed).into())
        }
        GenCommand::Planted { m, n, k, opt, seed, output } => {
            let planted = gen_planted_rbsc(m, n, k, opt, seed);
            info!("planted sets {:?} of cost {}", planted.planted, planted.planted_cost);
            emit_instance(&output, planted.instance.into())
        }
        GenCommand::Mku { n, m, set_size, k, seed, output } => {
            emit_instance(&output, gen_random_mku(n, m, set_size, k, seed).into())
        }
        GenCommand::Mmsa { layers, max_children, seed, output } => {
            emit_instance(&output, gen_random_mmsa(&layers, max_children, seed).into())
        }
        GenCommand::Gap { n, eps, t, seed, output } => {
            let gap = gen_gap_instance(GapParams { n, eps, t }, seed)?;
            info!(
                "gap instance: {} regenerations, nominal gate count {:.1}",
                gap.regenerations,
                gap.params.nominal_gate_count()
            );
            emit_instance(&output, gap.instance.into())
        }
        GenCommand::Canonical { name, output } => {
            let instance: Instance = match name.as_str() {
                "rbsc-small-1" => canonical::rbsc_small_1().into(),
                "mku-small-1" => canonical::mku_small_1().into(),
                "mmsa4-small-1" => canonical::mmsa4_small_1().into(),
                "mmsa6-small-1" => canonical::mmsa6_small_1().into(),
                other => return Err(Error::InvalidParameter(format!("unknown canonical instance {other}"))),
            };
            emit_instance(&output, instance)
        }
    }
}

fn solve(command: SolveCommand) -> Result<()> {
    match command {
        SolveCommand::Rbsc { args, partial, n0_factor } => {
            let instance = load_rbsc(&args.file)?;
            let params = RbscParams { seed: args.seed, n0_factor, ..Default::default() };
            let report = solve_partial_rbsc(&instance, partial.unwrap_or(instance.k), &params)?;
            info!("cost {} with guess {}, bound {:.2}", report.solution.cost, report.guess, report.bound);
            emit(None, &solution_or_report(args.report, &report.solution, &report))
        }
        SolveCommand::Mmsa4 { args } => {
            let instance = load_mmsa(&args.file)?;
            let report = solve_mmsa4(&instance, &Mmsa4Params { seed: args.seed, ..Default::default() })?;
            info!("cost {} after {} lp solves", report.solution.cost, report.lp_solves);
            emit(None, &solution_or_report(args.report, &report.solution, &report))
        }
        SolveCommand::Mmsa { args } => {
            let instance = load_mmsa(&args.file)?;
            let report = solve_mmsa(&instance, &MmsaParams { seed: args.seed, ..Default::default() })?;
            info!("cost {} via {:?}", report.solution.cost, report.solver);
            emit(None, &solution_or_report(args.report, &report.solution, &report))
        }
        SolveCommand::Mku { args } => {
            let instance = load_mku(&args.file)?;
            let report = solve_mku_via_rbsc(&instance, &ApproxSolver(RbscParams::default()), args.seed)?;
            info!("union {} in {} rounds", report.solution.cost, report.rounds.len());
            emit(None, &solution_or_report(args.report, &report.solution, &report))
        }
    }
}

fn oracle(file: &Path, partial: Option<usize>) -> Result<()> {
    let value: Value = match load(file)? {
        Instance::Rbsc(i) => serde_json::to_value(bruteforce_partial_rbsc(&i, partial.unwrap_or(i.k))?),
        Instance::Mmsa(i) => serde_json::to_value(bruteforce_mmsa(&i)?),
        Instance::Mku(i) => serde_json::to_value(bruteforce_mku(&i)?),
    }
    .expect("solutions always serialize");
    emit(None, &json(&value))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(command) => generate(command),
        Command::Solve(command) => solve(command),
        Command::Oracle { file, partial } => oracle(&file, partial),
        Command::Reduce(ReduceCommand::Mku { file, seed, report, output }) => {
            let reduction = reduce_mku_to_rbsc(&load_mku(&file)?, seed);
            info!("ell = {}, k' = {}", reduction.params.ell, reduction.params.k_prime);
            if report {
                emit(output.out.as_deref(), &json(&reduction))
            } else {
                emit_instance(&output, reduction.instance.into())
            }
        }
        Command::Bench { suite, seed, jobs, json: json_path, json_stdout } => {
            let text = std::fs::read_to_string(&suite).map_err(|e| Error::Io(format!("{}: {e}", suite.display())))?;
            let report = run_bench_with_jobs(&parse_suite(&text)?, seed, jobs)?;
            if let Some(path) = &json_path {
                emit(Some(path), &json(&report))?;
            }
            if json_stdout {
                emit(None, &json(&report))
            } else {
                print!("{}", render_table(&report));
                Ok(())
            }
        }
    }
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Infeasible(_) | Error::Uncoverable(_) => EXIT_INFEASIBLE,
        Error::InvalidParameter(_)
        | Error::Parse(_)
        | Error::Io(_)
        | Error::Structural(_)
        | Error::SizeLimit(_)
        | Error::DegenerateInput(_)
        | Error::DegenerateGraph(_) => EXIT_PARAMETER,
        Error::CutLoopExhausted(_) | Error::RoundingExhausted(_) => EXIT_CAP,
        _ => EXIT_INTERNAL,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RBSC_KIT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARAMETER } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_classes() {
        assert_eq!(exit_code(&Error::Infeasible("x".into())), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&Error::Uncoverable(0)), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_PARAMETER);
        assert_eq!(exit_code(&Error::SizeLimit("x".into())), EXIT_PARAMETER);
        assert_eq!(exit_code(&Error::CutLoopExhausted(3)), EXIT_CAP);
        assert_eq!(exit_code(&Error::RoundingExhausted(3)), EXIT_CAP);
        assert_eq!(exit_code(&Error::NumericalFailure("x".into())), EXIT_INTERNAL);
    }
}
