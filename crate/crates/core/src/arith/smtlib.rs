//! SMT-LIB2 printing and an external solver client over standard streams.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::syntax::{Rel, Term, Var};

use super::{ArithSentence, BoolExpr, Quantifier, SatResult, UnknownReason, Valuation};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("failed to run solver {path}: {source}")]
    Spawn { path: PathBuf, source: std::io::Error },
    #[error("i/o error talking to the solver: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected solver output: {0}")]
    Protocol(String),
}

/// A symbol, quoted when it is not a plain SMT-LIB simple symbol.
pub fn symbol(v: &Var) -> String {
    let name = v.name();
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn term(t: &Term) -> String {
    let mut parts: Vec<String> = t.coeffs().map(|(v, c)| if c == 1 { symbol(v) } else { format!("(* {c} {})", symbol(v)) }).collect();
    if t.constant_part() != 0 || parts.is_empty() {
        parts.push(t.constant_part().to_string());
    }
    if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn expr(e: &BoolExpr, out: &mut String) {
    match e {
        BoolExpr::And(xs) if xs.is_empty() => out.push_str("true"),
        BoolExpr::Or(xs) if xs.is_empty() => out.push_str("false"),
        BoolExpr::And(xs) | BoolExpr::Or(xs) => {
            out.push_str(if matches!(e, BoolExpr::And(_)) { "(and" } else { "(or" });
            for x in xs {
                out.push(' ');
                expr(x, out);
            }
            out.push(')');
        }
        BoolExpr::Atom(a) => {
            let (l, r) = (term(&a.lhs), term(&a.rhs));
            let _ = match a.rel {
                Rel::Eq => write!(out, "(= {l} {r})"),
                Rel::Ne => write!(out, "(not (= {l} {r}))"),
                Rel::Le => write!(out, "(<= {l} {r})"),
                Rel::Lt => write!(out, "(< {l} {r})"),
            };
        }
    }
}

/// The sentence as an SMT-LIB2 script over the integers: outer variables are
/// declared constants, universal blocks become guarded `forall`s and every
/// variable is constrained to be nonnegative.
pub fn to_smtlib(sentence: &ArithSentence) -> String {
    let outer = sentence.outer_vars();
    let mut out = String::from("(set-option :produce-models true)\n(set-logic LIA)\n");
    for v in &outer {
        let s = symbol(v);
        let _ = writeln!(out, "(declare-const {s} Int)\n(assert (>= {s} 0))");
    }
    let mut body = String::new();
    expr(&sentence.body, &mut body);
    for (q, vs) in sentence.prefix.iter().rev() {
        if *q != Quantifier::Forall || vs.is_empty() {
            continue;
        }
        let binders: Vec<String> = vs.iter().map(|v| format!("({} Int)", symbol(v))).collect();
        let guards: Vec<String> = vs.iter().map(|v| format!("(>= {} 0)", symbol(v))).collect();
        body = format!("(forall ({}) (=> (and {}) {body}))", binders.join(" "), guards.join(" "));
    }
    let _ = writeln!(out, "(assert {body})\n(check-sat)");
    if !outer.is_empty() {
        let names: Vec<String> = outer.iter().map(symbol).collect();
        let _ = writeln!(out, "(get-value ({}))", names.join(" "));
    }
    out.push_str("(exit)\n");
    out
}

/// An external solver reading SMT-LIB2 on standard input.
#[derive(Clone, Debug)]
pub struct SmtBackend {
    pub path: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl SmtBackend {
    /// Picks command-line flags from the executable name: `z3` needs to be
    /// told to read standard input, `cvc4` and `cvc5` need the input language.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_ascii_lowercase();
        let args: Vec<String> = if stem.starts_with("z3") {
            vec!["-in".into(), "-smt2".into()]
        } else if stem.starts_with("cvc") {
            vec!["--lang".into(), "smt2".into()]
        } else {
            Vec::new()
        };
        SmtBackend { path, args, timeout: Duration::from_secs(30) }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Runs the solver on the sentence. A timeout gives `Unknown(Timeout)`.
    pub fn check(&self, sentence: &ArithSentence) -> Result<SatResult, SmtError> {
        let script = to_smtlib(sentence);
        let Some(output) = self.run(&script)? else {
            return Ok(SatResult::Unknown(UnknownReason::Timeout));
        };
        parse_response(&output, &sentence.outer_vars())
    }

    fn run(&self, script: &str) -> Result<Option<String>, SmtError> {
        let mut child = Command::new(&self.path)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SmtError::Spawn { path: self.path.clone(), source })?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let script = script.to_string();
        let writer = thread::spawn(move || stdin.write_all(script.as_bytes()));
        let reader = thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let deadline = Instant::now() + self.timeout;
        loop {
            if child.try_wait()?.is_some() {
                break;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(None);
            }
            thread::sleep(Duration::from_millis(2));
        }
        let _ = writer.join();
        let out = reader.join().map_err(|_| SmtError::Protocol("reader thread panicked".into()))??;
        Ok(Some(out))
    }
}

/// Convenience wrapper around [`SmtBackend::check`].
pub fn smt_backend_check(sentence: &ArithSentence, solver_path: &Path) -> Result<SatResult, SmtError> {
    SmtBackend::new(solver_path).check(sentence)
}

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SmtError> {
    let chars: Vec<char> = text.chars().collect();
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| SmtError::Protocol("unbalanced ')'".into()))?;
                stack.last_mut().expect("outer level").push(Sexp::List(done));
                i += 1;
            }
            '|' => {
                let end = chars[i + 1..].iter().position(|c| *c == '|').ok_or_else(|| SmtError::Protocol("unterminated quoted symbol".into()))?;
                let s: String = chars[i + 1..i + 1 + end].iter().collect();
                stack.last_mut().expect("level").push(Sexp::Atom(s));
                i += end + 2;
            }
            '"' => {
                let end = chars[i + 1..].iter().position(|c| *c == '"').ok_or_else(|| SmtError::Protocol("unterminated string".into()))?;
                let s: String = chars[i + 1..i + 1 + end].iter().collect();
                stack.last_mut().expect("level").push(Sexp::Atom(s));
                i += end + 2;
            }
            c if c.is_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"()|\"".contains(chars[i]) {
                    i += 1;
                }
                stack.last_mut().expect("level").push(Sexp::Atom(chars[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SmtError::Protocol("unbalanced '('".into()));
    }
    Ok(stack.pop().expect("top level"))
}

fn value(s: &Sexp) -> Option<i128> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(xs) => match xs.as_slice() {
            [Sexp::Atom(m), x] if m == "-" => value(x).map(|v| -v),
            _ => None,
        },
    }
}

fn parse_response(output: &str, outer: &[Var]) -> Result<SatResult, SmtError> {
    let items = parse_sexps(output)?;
    let first = match items.first() {
        Some(Sexp::Atom(a)) => a.as_str(),
        Some(other) => return Err(SmtError::Protocol(format!("expected a verdict, found {other:?}"))),
        None => return Err(SmtError::Protocol("empty solver output".into())),
    };
    match first {
        "unsat" => Ok(SatResult::Unsat),
        "unknown" => Ok(SatResult::Unknown(UnknownReason::SolverUnknown)),
        "sat" => {
            let mut model = Valuation::new();
            if !outer.is_empty() {
                let Some(Sexp::List(pairs)) = items.get(1) else {
                    return Err(SmtError::Protocol("missing model values".into()));
                };
                for p in pairs {
                    let Sexp::List(kv) = p else { return Err(SmtError::Protocol(format!("bad model entry {p:?}"))) };
                    let [Sexp::Atom(k), v] = kv.as_slice() else { return Err(SmtError::Protocol(format!("bad model entry {p:?}"))) };
                    let v = value(v).and_then(|v| u64::try_from(v).ok()).ok_or_else(|| SmtError::Protocol(format!("bad value for {k}")))?;
                    model.insert(Var::new(k.clone()), v);
                }
                if let Some(missing) = outer.iter().find(|v| !model.contains_key(*v)) {
                    return Err(SmtError::Protocol(format!("no value for {missing}")));
                }
            }
            Ok(SatResult::Sat(model))
        }
        other => Err(SmtError::Protocol(format!("unrecognised verdict {other:?}"))),
    }
}
