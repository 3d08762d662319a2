//! Command-line front end.
//!
//! Exit codes: 0 affirmative (sat, valid, solution, holds), 1 negative,
//! 2 unknown, 3 input error, 4 internal or backend failure. In batch mode
//! the exit code is the largest code of any file.

#![allow(clippy::result_large_err)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Env, Report};

#[derive(Parser, Debug)]
#[command(name = "asl", version, about = "Decision procedures for array separation logic")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Arithmetic backend: `builtin` or `smtlib:PATH` for an external solver.
    #[arg(long, global = true, default_value = "builtin", value_parser = parse_backend)]
    backend: BackendChoice,
    /// Time limit per solver call, in seconds.
    #[arg(long, global = true, default_value_t = 30.0)]
    timeout: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Debug)]
pub enum BackendChoice {
    Builtin,
    Smtlib(PathBuf),
}

fn parse_backend(s: &str) -> Result<BackendChoice, String> {
    match s {
        "builtin" => Ok(BackendChoice::Builtin),
        _ => match s.strip_prefix("smtlib:") {
            Some(path) if !path.is_empty() => Ok(BackendChoice::Smtlib(PathBuf::from(path))),
            _ => Err(format!("expected `builtin` or `smtlib:PATH`, found {s:?}")),
        },
    }
}

#[derive(Args, Debug)]
struct Batch {
    /// Problem files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Number of files processed in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide satisfiability of the `lhs` heap.
    Sat {
        #[command(flatten)]
        batch: Batch,
        /// Print a model when satisfiable.
        #[arg(long)]
        model: bool,
    },
    /// Decide whether `lhs` entails `rhs`; exit 0 means valid.
    Entail {
        #[command(flatten)]
        batch: Batch,
        /// Refinement round limit for quantified right-hand sides.
        #[arg(long, default_value_t = 64)]
        rounds: usize,
    },
    /// Find an antiframe X and a frame Y for `lhs` and `rhs`.
    Biabduct {
        file: PathBuf,
        /// Enumerate solutions from up to K seeds.
        #[arg(long, value_name = "K")]
        all: Option<usize>,
        /// Drop pure conjuncts and shrink cells while the solution stays valid.
        #[arg(long)]
        weaken: bool,
    },
    /// Check whether a concrete stack and heap satisfy the `lhs` heap.
    Check {
        file: PathBuf,
        /// Stack literal such as `x=1,y=2`.
        #[arg(long, default_value = "")]
        stack: String,
        /// Heap literal such as `1:7,2:0`.
        #[arg(long, default_value = "")]
        heap: String,
        /// Largest value tried for bound variables; defaults to one more than
        /// the largest number in the stack, heap or formula.
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Search for a model of `lhs`, or a countermodel of `lhs |= rhs`, by
    /// bounded enumeration.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        stack_bound: u64,
        #[arg(long, default_value_t = 2)]
        value_bound: u64,
    },
    /// Print the arithmetic encoding of a problem as SMT-LIB2.
    Encode {
        file: PathBuf,
        /// Which encoding; defaults to `gamma` without `rhs` and `chi` with.
        #[arg(long, value_enum)]
        formula: Option<Formula>,
    },
    /// Generate benchmark problems.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
        /// Output file; standard output when absent.
        #[arg(short = 'o', long, global = true)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Formula {
    Gamma,
    Beta,
    Chi,
}

#[derive(Subcommand, Debug)]
pub enum GenFamily {
    /// Satisfiability instance of a 3-partition problem.
    #[command(name = "3part-sat")]
    ThreePartSat(PartitionArgs),
    /// Biabduction instance of a 3-partition problem.
    #[command(name = "3part-biabd")]
    ThreePartBiabd(PartitionArgs),
    /// Biabduction instance of the 2-round 3-colouring game.
    ColourBiabd(GraphArgs),
    /// Entailment instance of the 2-round 3-colouring game.
    ColourEntail(GraphArgs),
    /// Seeded random heap, or pair of heaps with `--pair`.
    Random {
        #[arg(long)]
        seed: u64,
        /// Comma-separated `key=value` list over vars, arrays, pto, pure, offset.
        #[arg(long, default_value = "")]
        cfg: String,
        #[arg(long)]
        pair: bool,
    },
    /// Heap whose models need addresses above 2^n.
    SmallModel {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// The bound B.
    #[arg(long = "b")]
    pub bound: u64,
    /// The items, comma-separated.
    #[arg(long = "s", value_delimiter = ',', required = true)]
    pub items: Vec<u64>,
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Graph file: `n k` on the first line, then one `i j` edge per line.
    #[arg(long)]
    pub graph: PathBuf,
}

fn run_batch(files: &[PathBuf], jobs: usize, json: bool, work: impl Fn(&PathBuf) -> Report + Sync) -> u8 {
    let results: Vec<Mutex<Option<Report>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, files.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(file) = files.get(i) else { break };
                let report = work(file);
                *results[i].lock().expect("unpoisoned") = Some(report);
            });
        }
    });
    let many = files.len() > 1;
    let mut code = 0;
    for (file, slot) in files.iter().zip(results) {
        let report = slot.into_inner().expect("unpoisoned").expect("every file is processed");
        let label = many.then(|| file.display().to_string());
        report.print(json, label.as_deref());
        code = code.max(report.code);
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.timeout > 0.0 && cli.timeout.is_finite()) {
        eprintln!("error: --timeout must be a positive number of seconds");
        return ExitCode::from(3);
    }
    let env = Env { backend: cli.backend.clone(), timeout: Duration::from_secs_f64(cli.timeout) };
    let code = match &cli.command {
        Command::Sat { batch, model } => run_batch(&batch.files, batch.jobs, cli.json, |f| commands::sat(&env, f, *model)),
        Command::Entail { batch, rounds } => run_batch(&batch.files, batch.jobs, cli.json, |f| commands::entail(&env, f, *rounds)),
        Command::Biabduct { file, all, weaken } => single(cli.json, commands::biabduct(&env, file, *all, *weaken)),
        Command::Check { file, stack, heap, bound } => single(cli.json, commands::check(file, stack, heap, *bound)),
        Command::Oracle { file, stack_bound, value_bound } => single(cli.json, commands::oracle(file, *stack_bound, *value_bound)),
        Command::Encode { file, formula } => single(cli.json, commands::encode(&env, file, *formula)),
        Command::Gen { family, output } => single(cli.json, commands::generate(family, output.as_deref())),
    };
    ExitCode::from(code)
}

fn single(json: bool, report: Report) -> u8 {
    report.print(json, None);
    report.code
}
