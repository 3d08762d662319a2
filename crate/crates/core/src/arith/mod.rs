//! Linear arithmetic over the naturals.
//!
//! Formulas are trees of conjunctions and disjunctions over comparison atoms
//! in negation normal form. Existential problems are decided by a DPLL-style
//! case split over disjunctions whose leaves are conjunctions of linear
//! constraints, checked by an exact integer feasibility procedure. Sentences
//! with an `exists forall` prefix are handled by counterexample-guided
//! refinement over that procedure.

mod cegar;
mod dpll;
mod linear;
mod order;
pub mod smtlib;
mod theory;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use thiserror::Error;

pub use crate::syntax::PureAtom as LinAtom;
use crate::syntax::{Term, Var};
pub use cegar::{check_exists_forall, check_exists_forall_with, DEFAULT_MAX_ROUNDS};
pub use order::{check_order_entails, OrderEntailment};

/// Values of arithmetic variables.
pub type Valuation = BTreeMap<Var, u64>;

/// A quantifier-free formula in negation normal form. `And(vec![])` is true
/// and `Or(vec![])` is false.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Atom(LinAtom),
}

impl BoolExpr {
    pub fn truth() -> Self {
        BoolExpr::And(vec![])
    }

    pub fn falsity() -> Self {
        BoolExpr::Or(vec![])
    }

    pub fn atom(a: LinAtom) -> Self {
        BoolExpr::Atom(a)
    }

    pub fn le(l: Term, r: Term) -> Self {
        BoolExpr::Atom(LinAtom::le(l, r))
    }

    pub fn lt(l: Term, r: Term) -> Self {
        BoolExpr::Atom(LinAtom::lt(l, r))
    }

    pub fn eq(l: Term, r: Term) -> Self {
        BoolExpr::Atom(LinAtom::eq(l, r))
    }

    pub fn ne(l: Term, r: Term) -> Self {
        BoolExpr::Atom(LinAtom::ne(l, r))
    }

    /// Conjunction with nested conjunctions flattened.
    pub fn and(items: impl IntoIterator<Item = BoolExpr>) -> Self {
        let mut out = Vec::new();
        for i in items {
            match i {
                BoolExpr::And(xs) => out.extend(xs),
                BoolExpr::Or(xs) if xs.is_empty() => return BoolExpr::falsity(),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().expect("one item")
        } else {
            BoolExpr::And(out)
        }
    }

    /// Disjunction with nested disjunctions flattened.
    pub fn or(items: impl IntoIterator<Item = BoolExpr>) -> Self {
        let mut out = Vec::new();
        for i in items {
            match i {
                BoolExpr::Or(xs) => out.extend(xs),
                BoolExpr::And(xs) if xs.is_empty() => return BoolExpr::truth(),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().expect("one item")
        } else {
            BoolExpr::Or(out)
        }
    }

    /// The negation, pushed to the atoms.
    pub fn negate(&self) -> BoolExpr {
        match self {
            BoolExpr::And(xs) => BoolExpr::or(xs.iter().map(|x| x.negate())),
            BoolExpr::Or(xs) => BoolExpr::and(xs.iter().map(|x| x.negate())),
            BoolExpr::Atom(a) => BoolExpr::Atom(a.negate()),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, BoolExpr::And(xs) if xs.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, BoolExpr::Or(xs) if xs.is_empty())
    }

    pub fn map_atoms(&self, f: &impl Fn(&LinAtom) -> BoolExpr) -> BoolExpr {
        match self {
            BoolExpr::And(xs) => BoolExpr::and(xs.iter().map(|x| x.map_atoms(f))),
            BoolExpr::Or(xs) => BoolExpr::or(xs.iter().map(|x| x.map_atoms(f))),
            BoolExpr::Atom(a) => f(a),
        }
    }

    /// Replaces variables by constants and folds atoms that become ground.
    pub fn assign(&self, values: &Valuation) -> BoolExpr {
        self.map_atoms(&|a| {
            let subst = |t: &Term| t.substitute(&|v| values.get(v).map(|x| Term::constant(*x)));
            let b = a.map_terms(subst);
            match (b.lhs.as_constant(), b.rhs.as_constant()) {
                (Some(l), Some(r)) => {
                    if b.holds(l, r) {
                        BoolExpr::truth()
                    } else {
                        BoolExpr::falsity()
                    }
                }
                _ => BoolExpr::Atom(b),
            }
        })
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            BoolExpr::And(xs) | BoolExpr::Or(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            BoolExpr::Atom(a) => out.extend(a.vars().cloned()),
        }
    }

    pub fn atoms(&self) -> Vec<&LinAtom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a LinAtom>) {
        match self {
            BoolExpr::And(xs) | BoolExpr::Or(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
            BoolExpr::Atom(a) => out.push(a),
        }
    }

    /// Truth value under a valuation; `None` if a variable is unassigned.
    pub fn eval(&self, v: &Valuation) -> Option<bool> {
        match self {
            BoolExpr::And(xs) => {
                for x in xs {
                    if !x.eval(v)? {
                        return Some(false);
                    }
                }
                Some(true)
            }
            BoolExpr::Or(xs) => {
                for x in xs {
                    if x.eval(v)? {
                        return Some(true);
                    }
                }
                Some(false)
            }
            BoolExpr::Atom(a) => {
                let l = a.lhs.eval_with(|x| v.get(x).copied()).ok()?;
                let r = a.rhs.eval_with(|x| v.get(x).copied()).ok()?;
                Some(a.holds(l, r))
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            BoolExpr::And(xs) | BoolExpr::Or(xs) => 1 + xs.iter().map(|x| x.size()).sum::<usize>(),
            BoolExpr::Atom(_) => 1,
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[BoolExpr], op: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        match self {
            BoolExpr::And(xs) if xs.is_empty() => f.write_str("true"),
            BoolExpr::Or(xs) if xs.is_empty() => f.write_str("false"),
            BoolExpr::And(xs) => join(f, xs, "/\\"),
            BoolExpr::Or(xs) => join(f, xs, "\\/"),
            BoolExpr::Atom(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// A prenex sentence. Variables of the body not bound by the prefix are
/// treated as existentially quantified outermost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArithSentence {
    pub prefix: Vec<(Quantifier, Vec<Var>)>,
    pub body: BoolExpr,
}

impl ArithSentence {
    pub fn exists(vars: Vec<Var>, body: BoolExpr) -> Self {
        ArithSentence { prefix: vec![(Quantifier::Exists, vars)], body }
    }

    pub fn exists_forall(outer: Vec<Var>, inner: Vec<Var>, body: BoolExpr) -> Self {
        let mut prefix = vec![(Quantifier::Exists, outer)];
        if !inner.is_empty() {
            prefix.push((Quantifier::Forall, inner));
        }
        ArithSentence { prefix, body }
    }

    fn vars_of(&self, q: Quantifier) -> Vec<Var> {
        self.prefix.iter().filter(|(p, _)| *p == q).flat_map(|(_, vs)| vs.iter().cloned()).collect()
    }

    /// Outermost existential variables: the declared ones followed by the
    /// body's unbound variables.
    pub fn outer_vars(&self) -> Vec<Var> {
        let mut out = self.vars_of(Quantifier::Exists);
        let inner = self.vars_of(Quantifier::Forall);
        for v in self.body.vars() {
            if !out.contains(&v) && !inner.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn universal_vars(&self) -> Vec<Var> {
        self.vars_of(Quantifier::Forall)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    /// The refinement loop reached its round limit.
    CegarCap,
    /// The deadline passed before a verdict.
    Timeout,
    /// An external solver answered `unknown`.
    SolverUnknown,
}

impl UnknownReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UnknownReason::CegarCap => "cegar-cap",
            UnknownReason::Timeout => "timeout",
            UnknownReason::SolverUnknown => "solver-unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Valuation),
    Unsat,
    Unknown(UnknownReason),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("expected an existential sentence, found a universal block")]
    NotExistential,
    #[error("unsupported quantifier prefix: only exists-forall sentences are handled")]
    UnsupportedPrefix,
}

/// Search options for the builtin procedure.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Give up with `Unknown(Timeout)` after this instant.
    pub deadline: Option<Instant>,
    /// Minimise the returned model lexicographically in variable order.
    pub minimize: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { deadline: None, minimize: true }
    }
}

/// Which procedure decides arithmetic sentences.
#[derive(Clone, Debug, Default)]
pub enum Backend {
    #[default]
    Builtin,
    Smt(smtlib::SmtBackend),
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Smt(#[from] smtlib::SmtError),
}

impl Backend {
    /// Decides an existential or `exists forall` sentence. The builtin
    /// procedure uses `max_rounds` refinement rounds for universal blocks.
    pub fn check(&self, sentence: &ArithSentence, opts: &SolverOptions, max_rounds: usize) -> Result<SatResult, BackendError> {
        match self {
            Backend::Builtin if sentence.universal_vars().is_empty() => Ok(check_exists_with(sentence, opts)?),
            Backend::Builtin => Ok(check_exists_forall_with(sentence, max_rounds, opts)?),
            Backend::Smt(b) => Ok(b.check(sentence)?),
        }
    }
}

/// Decides `exists vars. body` over the naturals. The valuation covers `vars`
/// and every variable of `body`.
pub fn solve(body: &BoolExpr, vars: &[Var], opts: &SolverOptions) -> SatResult {
    let mut all: Vec<Var> = vars.to_vec();
    for v in body.vars() {
        if !all.contains(&v) {
            all.push(v);
        }
    }
    dpll::solve(body, &all, opts)
}

/// Decides an existential sentence with model minimisation.
pub fn check_exists(sentence: &ArithSentence) -> Result<SatResult, ArithError> {
    check_exists_with(sentence, &SolverOptions::default())
}

pub fn check_exists_with(sentence: &ArithSentence, opts: &SolverOptions) -> Result<SatResult, ArithError> {
    if sentence.prefix.iter().any(|(q, vs)| *q == Quantifier::Forall && !vs.is_empty()) {
        return Err(ArithError::NotExistential);
    }
    Ok(solve(&sentence.body, &sentence.outer_vars(), opts))
}

/// Convenience: decides satisfiability of a conjunction of atoms.
pub fn conjunction_sat(atoms: &[LinAtom]) -> bool {
    let body = BoolExpr::and(atoms.iter().cloned().map(BoolExpr::Atom));
    solve(&body, &[], &SolverOptions { deadline: None, minimize: false }).is_sat()
}
