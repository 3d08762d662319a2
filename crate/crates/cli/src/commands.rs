//! The subcommands. Each one returns a [`Report`] holding its exit code, its
//! text rendering and its JSON rendering.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use asl::arith::smtlib::{to_smtlib, SmtBackend};
use asl::arith::{ArithSentence, Backend, UnknownReason};
use asl::benchgen::{
    gen_3part_biabd, gen_3part_sat, gen_colour_biabd, gen_colour_entail, gen_random, gen_random_pair, small_model_family, RandomConfig, ThreePartitionInstance,
    UndirectedGraph,
};
use asl::biabduction::{solve_biabduction, solve_biabduction_all, BiabductionError, BiabductionOptions, BiabductionOutcome, BiabductionSolution};
use asl::encodings::{beta, chi};
use asl::entailment::{entails_with, EntailError, EntailOptions, EntailStatus};
use asl::satcheck::{is_sat_with, sat_sentence, SatOptions, SatStatus};
use asl::semantics::{holds, oracle_find_countermodel, oracle_find_model, parse_heap, parse_stack, Bounds, Heap, HeapDisplay, Stack, StackDisplay};
use asl::syntax::ProblemFile;
use asl::{parse_problem, PureAtom, SymbolicHeap};
use serde_json::{json, Map, Value};

use crate::{BackendChoice, Formula, GenFamily, PartitionArgs};

pub const AFFIRMATIVE: u8 = 0;
pub const NEGATIVE: u8 = 1;
pub const UNKNOWN: u8 = 2;
pub const INPUT_ERROR: u8 = 3;
pub const INTERNAL_ERROR: u8 = 4;

pub struct Env {
    pub backend: BackendChoice,
    pub timeout: Duration,
}

impl Env {
    fn backend(&self) -> Backend {
        match &self.backend {
            BackendChoice::Builtin => Backend::Builtin,
            BackendChoice::Smtlib(path) => Backend::Smt(SmtBackend::new(path).with_timeout(self.timeout)),
        }
    }

    fn deadline(&self) -> Option<Instant> {
        Instant::now().checked_add(self.timeout)
    }
}

pub struct Report {
    pub code: u8,
    text: String,
    json: Value,
    /// Printed to standard error in text mode.
    error: Option<String>,
}

impl Report {
    fn ok(code: u8, text: impl Into<String>, json: Value) -> Self {
        Report { code, text: text.into(), json, error: None }
    }

    fn fail(code: u8, message: impl Into<String>) -> Self {
        let message = message.into();
        let kind = if code == INPUT_ERROR { "input" } else { "internal" };
        Report { code, text: String::new(), json: json!({"status": "error", "kind": kind, "message": message}), error: Some(message) }
    }

    fn input(message: impl Into<String>) -> Self {
        Report::fail(INPUT_ERROR, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Report::fail(INTERNAL_ERROR, message)
    }

    fn unknown(reason: UnknownReason) -> Self {
        Report::ok(UNKNOWN, format!("UNKNOWN ({})", reason.as_str()), json!({"status": "unknown", "reason": reason.as_str()}))
    }

    pub fn print(&self, json: bool, label: Option<&str>) {
        if json {
            let mut value = self.json.clone();
            if let (Some(file), Value::Object(map)) = (label, &mut value) {
                map.insert("file".into(), Value::String(file.into()));
            }
            println!("{value}");
            return;
        }
        if let Some(file) = label {
            println!("== {file}");
        }
        match &self.error {
            Some(message) => match label {
                Some(file) => eprintln!("error: {file}: {message}"),
                None => eprintln!("error: {message}"),
            },
            None => println!("{}", self.text),
        }
    }
}

fn model_text(s: &Stack, h: &Heap) -> String {
    let or_dash = |x: String| if x.is_empty() { "-".to_string() } else { x };
    format!("{}; heap {}", or_dash(StackDisplay(s).to_string()), or_dash(HeapDisplay(h).to_string()))
}

fn model_json(s: &Stack, h: &Heap) -> Value {
    let stack: Map<String, Value> = s.iter().map(|(v, x)| (v.to_string(), json!(x))).collect();
    let heap: Map<String, Value> = h.iter().map(|(a, x)| (a.to_string(), json!(x))).collect();
    json!({"stack": stack, "heap": heap})
}

fn load(path: &Path) -> Result<ProblemFile, Report> {
    let text = fs::read_to_string(path).map_err(|e| Report::input(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text).map_err(|e| Report::input(format!("{}: {e}", path.display())))
}

fn load_single(path: &Path, command: &str) -> Result<SymbolicHeap, Report> {
    let p = load(path)?;
    if p.rhs.is_some() {
        return Err(Report::input(format!("{command} expects a problem without an rhs section")));
    }
    Ok(p.lhs)
}

fn load_pair(path: &Path, command: &str) -> Result<(SymbolicHeap, SymbolicHeap), Report> {
    let p = load(path)?;
    match p.rhs {
        Some(rhs) => Ok((p.lhs, rhs)),
        None => Err(Report::input(format!("{command} expects a problem with lhs and rhs sections"))),
    }
}

fn unwrap_report(r: Result<Report, Report>) -> Report {
    r.unwrap_or_else(|e| e)
}

pub fn sat(env: &Env, file: &Path, model: bool) -> Report {
    unwrap_report((|| {
        let a = load_single(file, "sat")?;
        let opts = SatOptions { witness: model, backend: env.backend(), deadline: env.deadline() };
        let out = is_sat_with(&a, &opts).map_err(|e| Report::internal(e.to_string()))?;
        Ok(match out.status {
            SatStatus::Sat => match out.witness {
                Some((s, h)) => Report::ok(AFFIRMATIVE, format!("SAT\n{}", model_text(&s, &h)), json!({"status": "sat", "model": model_json(&s, &h)})),
                None => Report::ok(AFFIRMATIVE, "SAT", json!({"status": "sat"})),
            },
            SatStatus::Unsat => Report::ok(NEGATIVE, "UNSAT", json!({"status": "unsat"})),
            SatStatus::Unknown(r) => Report::unknown(r),
        })
    })())
}

fn entail_error(e: EntailError) -> Report {
    match e {
        EntailError::Backend(_) => Report::internal(e.to_string()),
        EntailError::QuantifiedLhs | EntailError::Restriction(_) => Report::input(e.to_string()),
    }
}

pub fn entail(env: &Env, file: &Path, rounds: usize) -> Report {
    unwrap_report((|| {
        let (a, b) = load_pair(file, "entail")?;
        let opts = EntailOptions { backend: env.backend(), max_rounds: rounds, deadline: env.deadline() };
        let res = entails_with(&a, &b, &opts).map_err(entail_error)?;
        Ok(match (res.status, res.countermodel) {
            (EntailStatus::Valid, _) => Report::ok(AFFIRMATIVE, "VALID", json!({"status": "valid"})),
            (EntailStatus::Invalid, Some((s, h))) => {
                Report::ok(NEGATIVE, format!("INVALID\ncountermodel: {}", model_text(&s, &h)), json!({"status": "invalid", "countermodel": model_json(&s, &h)}))
            }
            (EntailStatus::Invalid, None) => Report::ok(NEGATIVE, "INVALID", json!({"status": "invalid"})),
            (EntailStatus::Unknown(r), _) => Report::unknown(r),
        })
    })())
}

fn conjunction(atoms: &[PureAtom]) -> String {
    if atoms.is_empty() {
        return "true".into();
    }
    atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" /\\ ")
}

fn solution_text(s: &BiabductionSolution) -> String {
    format!("X: {}\nY: {}\ndelta: {}", s.x, s.y, conjunction(&s.delta_hat))
}

fn solution_json(s: &BiabductionSolution) -> Value {
    json!({"x": s.x.to_string(), "y": s.y.to_string(), "delta": conjunction(&s.delta_hat)})
}

fn no_solution(reason: &str) -> Report {
    Report::ok(NEGATIVE, format!("NO SOLUTION ({reason})"), json!({"status": "no-solution", "reason": reason}))
}

pub fn biabduct(env: &Env, file: &Path, all: Option<usize>, weaken: bool) -> Report {
    unwrap_report((|| {
        let (a, b) = load_pair(file, "biabduct")?;
        let opts = BiabductionOptions { weaken, deadline: env.deadline(), ..BiabductionOptions::default() };
        let fail = |e: BiabductionError| match e {
            BiabductionError::QuantifiedLhs | BiabductionError::Restriction(_) => Report::input(e.to_string()),
            BiabductionError::Unsatisfiable(side) => no_solution(&format!("{side}-hand side unsatisfiable")),
            BiabductionError::Unknown(r) => Report::unknown(r),
            BiabductionError::Entail(EntailError::QuantifiedLhs | EntailError::Restriction(_)) => Report::input(e.to_string()),
            BiabductionError::UnknownTerm(_) | BiabductionError::VerificationFailed | BiabductionError::Entail(_) => Report::internal(e.to_string()),
        };
        match all {
            None => Ok(match solve_biabduction(&a, &b, &opts).map_err(fail)? {
                BiabductionOutcome::Solution(s) => {
                    let mut j = json!({"status": "solution"});
                    if let (Value::Object(m), Value::Object(extra)) = (&mut j, solution_json(&s)) {
                        m.extend(extra);
                    }
                    Report::ok(AFFIRMATIVE, format!("SOLUTION\n{}", solution_text(&s)), j)
                }
                BiabductionOutcome::NoSolution => no_solution("no solution seed"),
            }),
            Some(k) => {
                let sols = solve_biabduction_all(&a, &b, k, &opts).map_err(fail)?;
                if sols.is_empty() {
                    return Ok(no_solution("no solution seed"));
                }
                let text: Vec<String> = sols.iter().enumerate().map(|(i, s)| format!("-- solution {}\n{}", i + 1, solution_text(s))).collect();
                let list: Vec<Value> = sols.iter().map(solution_json).collect();
                Ok(Report::ok(
                    AFFIRMATIVE,
                    format!("SOLUTIONS {}\n{}", sols.len(), text.join("\n")),
                    json!({"status": "solution", "count": sols.len(), "solutions": list}),
                ))
            }
        }
    })())
}

fn largest_constant(a: &SymbolicHeap) -> u64 {
    a.terms().iter().map(|t| t.constant_part()).max().unwrap_or(0)
}

pub fn check(file: &Path, stack: &str, heap: &str, bound: Option<u64>) -> Report {
    unwrap_report((|| {
        let a = load_single(file, "check")?;
        let s = parse_stack(stack).map_err(|e| Report::input(e.to_string()))?;
        let h = parse_heap(heap).map_err(|e| Report::input(e.to_string()))?;
        let bound = bound.unwrap_or_else(|| {
            let numbers = s.values().chain(h.keys()).chain(h.values()).copied();
            numbers.chain(std::iter::once(largest_constant(&a))).max().unwrap_or(0) + 1
        });
        let ok = holds(&s, &h, &a, Bounds::new(bound, 0)).map_err(|e| Report::input(e.to_string()))?;
        Ok(if ok { Report::ok(AFFIRMATIVE, "HOLDS", json!({"status": "holds"})) } else { Report::ok(NEGATIVE, "FAILS", json!({"status": "fails"})) })
    })())
}

pub fn oracle(file: &Path, stack_bound: u64, value_bound: u64) -> Report {
    unwrap_report((|| {
        let p = load(file)?;
        let bounds = Bounds::new(stack_bound, value_bound);
        let err = |e: asl::semantics::SemanticsError| Report::input(e.to_string());
        Ok(match p.rhs {
            None => match oracle_find_model(&p.lhs, bounds).map_err(err)? {
                Some((s, h)) => Report::ok(AFFIRMATIVE, format!("MODEL\n{}", model_text(&s, &h)), json!({"status": "model", "model": model_json(&s, &h)})),
                None => Report::ok(NEGATIVE, "NO MODEL WITHIN BOUNDS", json!({"status": "no-model"})),
            },
            Some(rhs) => match oracle_find_countermodel(&p.lhs, &rhs, bounds).map_err(err)? {
                Some((s, h)) => {
                    Report::ok(NEGATIVE, format!("COUNTERMODEL\n{}", model_text(&s, &h)), json!({"status": "countermodel", "countermodel": model_json(&s, &h)}))
                }
                None => Report::ok(AFFIRMATIVE, "NO COUNTERMODEL WITHIN BOUNDS", json!({"status": "no-countermodel"})),
            },
        })
    })())
}

/// The sentence printed by `encode`.
pub fn encoding(p: &ProblemFile, formula: Option<Formula>) -> Result<ArithSentence, String> {
    let formula = formula.unwrap_or(if p.rhs.is_some() { Formula::Chi } else { Formula::Gamma });
    let rhs = || p.rhs.as_ref().ok_or_else(|| "this encoding needs an rhs section".to_string());
    match formula {
        Formula::Gamma => Ok(sat_sentence(&p.lhs)),
        Formula::Beta => {
            let b = rhs()?.rename_bound_apart(&p.lhs.names()).qf();
            let body = beta(&p.lhs, &b).map_err(|e| e.to_string())?;
            let mut vars: Vec<_> = p.lhs.all_vars().into_iter().collect();
            vars.extend(b.all_vars().into_iter().filter(|v| !p.lhs.all_vars().contains(v)));
            Ok(ArithSentence::exists(vars, body))
        }
        Formula::Chi => chi(&p.lhs, &rhs()?.rename_bound_apart(&p.lhs.names())).map_err(|e| e.to_string()),
    }
}

pub fn encode(_env: &Env, file: &Path, formula: Option<Formula>) -> Report {
    unwrap_report((|| {
        let p = load(file)?;
        let sentence = encoding(&p, formula).map_err(Report::input)?;
        let text = to_smtlib(&sentence);
        Ok(Report::ok(AFFIRMATIVE, text.trim_end().to_string(), json!({"status": "ok", "smtlib": text})))
    })())
}

fn problem_text(header: &str, lhs: &SymbolicHeap, rhs: Option<&SymbolicHeap>) -> String {
    let mut out = format!("# {header}\nlhs: {lhs}\n");
    if let Some(r) = rhs {
        out.push_str(&format!("rhs: {r}\n"));
    }
    out
}

fn partition(args: &PartitionArgs) -> Result<ThreePartitionInstance, Report> {
    ThreePartitionInstance::new(args.bound, args.items.clone()).map_err(|e| Report::input(e.to_string()))
}

fn graph(path: &Path) -> Result<UndirectedGraph, Report> {
    let text = fs::read_to_string(path).map_err(|e| Report::input(format!("cannot read {}: {e}", path.display())))?;
    text.parse().map_err(|e: asl::benchgen::BenchError| Report::input(format!("{}: {e}", path.display())))
}

pub fn generate(family: &GenFamily, output: Option<&Path>) -> Report {
    unwrap_report((|| {
        let items = |a: &PartitionArgs| a.items.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let (header, lhs, rhs) = match family {
            GenFamily::ThreePartSat(args) => (format!("3part-sat B={} S={}", args.bound, items(args)), gen_3part_sat(&partition(args)?), None),
            GenFamily::ThreePartBiabd(args) => {
                let (l, r) = gen_3part_biabd(&partition(args)?);
                (format!("3part-biabd B={} S={}", args.bound, items(args)), l, Some(r))
            }
            GenFamily::ColourBiabd(args) => {
                let (l, r) = gen_colour_biabd(&graph(&args.graph)?);
                ("colour-biabd".to_string(), l, Some(r))
            }
            GenFamily::ColourEntail(args) => {
                let (l, r) = gen_colour_entail(&graph(&args.graph)?);
                ("colour-entail".to_string(), l, Some(r))
            }
            GenFamily::Random { seed, cfg, pair } => {
                let cfg: RandomConfig = cfg.parse().map_err(|e: asl::benchgen::BenchError| Report::input(e.to_string()))?;
                let header = format!("random seed={seed} cfg={cfg}");
                if *pair {
                    let (l, r) = gen_random_pair(*seed, &cfg);
                    (header, l, Some(r))
                } else {
                    (header, gen_random(*seed, &cfg), None)
                }
            }
            GenFamily::SmallModel { n } => (format!("small-model n={n}"), small_model_family(*n), None),
        };
        let text = problem_text(&header, &lhs, rhs.as_ref());
        let mut j = json!({"status": "ok", "lhs": lhs.to_string()});
        if let (Some(r), Value::Object(m)) = (&rhs, &mut j) {
            m.insert("rhs".into(), Value::String(r.to_string()));
        }
        match output {
            Some(path) => {
                fs::write(path, &text).map_err(|e| Report::internal(format!("cannot write {}: {e}", path.display())))?;
                Ok(Report::ok(AFFIRMATIVE, format!("wrote {}", path.display()), j))
            }
            None => Ok(Report::ok(AFFIRMATIVE, text.trim_end().to_string(), j)),
        }
    })())
}
