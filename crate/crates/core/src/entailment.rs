//! Entailment between symbolic heaps.
//!
//! `a |= b` fails iff `chi(a, b)` is satisfiable. Without quantifiers in `b`
//! this is an existential problem and the answer is exact; otherwise the
//! universal block is handled by counterexample-guided refinement, which may
//! give up. Countermodels are built from a model of `chi` by laying out the
//! footprint of `a` and filling array cells with a value that no points-to
//! atom of `b` can expect.

use std::time::Instant;

use thiserror::Error;

use crate::arith::{Backend, BackendError, SatResult, SolverOptions, UnknownReason, DEFAULT_MAX_ROUNDS};
use crate::encodings::{chi, constant_upper_bound, EncodingError};
use crate::semantics::{eval_term, footprint_heap, holds, oracle_find_countermodel, Bounds, Heap, SemanticsError, Stack};
use crate::syntax::{SymbolicHeap, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntailStatus {
    Valid,
    Invalid,
    Unknown(UnknownReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntailResult {
    pub status: EntailStatus,
    /// A model of the left side falsifying the right side; present iff the
    /// status is `Invalid`.
    pub countermodel: Option<(Stack, Heap)>,
}

#[derive(Debug, Error)]
pub enum EntailError {
    #[error("the left-hand side must be quantifier-free")]
    QuantifiedLhs,
    #[error("existentially bound variable {0} occurs on the right of a points-to atom")]
    Restriction(Var),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl From<EncodingError> for EntailError {
    fn from(e: EncodingError) -> Self {
        match e {
            EncodingError::Quantified => EntailError::QuantifiedLhs,
            EncodingError::Restriction(v) => EntailError::Restriction(v),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EntailOptions {
    pub backend: Backend,
    pub max_rounds: usize,
    pub deadline: Option<Instant>,
}

impl Default for EntailOptions {
    fn default() -> Self {
        EntailOptions { backend: Backend::Builtin, max_rounds: DEFAULT_MAX_ROUNDS, deadline: None }
    }
}

/// True iff no bound variable of `b` occurs in a points-to destination.
pub fn check_restriction(b: &SymbolicHeap) -> bool {
    b.points_to().iter().all(|(_, w)| w.vars().all(|v| !b.bound.contains(v)))
}

/// Decides `a |= b` with the builtin procedure.
pub fn entails(a: &SymbolicHeap, b: &SymbolicHeap, max_rounds: usize) -> Result<EntailResult, EntailError> {
    entails_with(a, b, &EntailOptions { max_rounds, ..EntailOptions::default() })
}

/// Decides `a |= b`. Bound variables of `b` may occur in points-to
/// destinations only when the pure part of `b` bounds them by a constant.
pub fn entails_with(a: &SymbolicHeap, b: &SymbolicHeap, opts: &EntailOptions) -> Result<EntailResult, EntailError> {
    let b = b.rename_bound_apart(&a.names());
    let sentence = chi(a, &b)?;
    let solver = SolverOptions { deadline: opts.deadline, minimize: true };
    Ok(match opts.backend.check(&sentence, &solver, opts.max_rounds)? {
        SatResult::Unsat => EntailResult { status: EntailStatus::Valid, countermodel: None },
        SatResult::Unknown(r) => EntailResult { status: EntailStatus::Unknown(r), countermodel: None },
        SatResult::Sat(m) => {
            let stack: Stack = sentence.outer_vars().into_iter().map(|v| (v.clone(), m.get(&v).copied().unwrap_or(0))).collect();
            let heap = countermodel_heap(a, &b, &stack);
            EntailResult { status: EntailStatus::Invalid, countermodel: Some((stack, heap)) }
        }
    })
}

/// The footprint of `a` with every array cell holding one more than the
/// largest value any points-to destination of `b` can take.
fn countermodel_heap(a: &SymbolicHeap, b: &SymbolicHeap, s: &Stack) -> Heap {
    let mut ext = s.clone();
    for v in &b.bound {
        ext.insert(v.clone(), constant_upper_bound(&b.pure, v).unwrap_or(0));
    }
    let fill = b.points_to().iter().map(|(_, w): &(Term, Term)| eval_term(w, &ext).expect("destinations are evaluable")).max().map_or(0, |m| m + 1);
    footprint_heap(a, s, fill).expect("the stack covers the left-hand side").expect("a model of chi lays out the left-hand side")
}

/// Outcome of comparing [`entails`] against the bounded oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrosscheckReport {
    pub status: EntailStatus,
    pub oracle_countermodel: Option<(Stack, Heap)>,
    pub agree: bool,
    /// Why the two sides disagree.
    pub detail: Option<String>,
    /// A smaller pair on which the disagreement persists.
    pub shrunk: Option<(SymbolicHeap, SymbolicHeap)>,
}

fn largest_value(s: &Stack, h: &Heap) -> u64 {
    s.values().chain(h.keys()).chain(h.values()).copied().max().unwrap_or(0)
}

type Comparison = (EntailStatus, Option<(Stack, Heap)>, Option<String>);

/// Compares the two procedures on one pair; `Some(reason)` on disagreement.
fn disagreement(a: &SymbolicHeap, b: &SymbolicHeap, bounds: Bounds) -> Result<Comparison, SemanticsError> {
    let res = match entails(a, b, DEFAULT_MAX_ROUNDS) {
        Ok(r) => r,
        Err(e) => return Ok((EntailStatus::Unknown(UnknownReason::SolverUnknown), None, Some(format!("checker error: {e}")))),
    };
    let oracle = oracle_find_countermodel(a, b, bounds)?;
    let reason = match (&res.status, &res.countermodel) {
        (EntailStatus::Invalid, Some((s, h))) => {
            let wide = Bounds::new(bounds.stack_bound.max(largest_value(s, h) + 1), bounds.value_bound);
            if !holds(s, h, a, wide)? {
                Some("countermodel does not satisfy the left-hand side".to_string())
            } else if holds(s, h, b, wide)? {
                Some("countermodel satisfies the right-hand side".to_string())
            } else {
                None
            }
        }
        (EntailStatus::Invalid, None) => Some("invalid verdict without countermodel".to_string()),
        (EntailStatus::Valid, _) if oracle.is_some() => Some("valid verdict but the oracle found a countermodel".to_string()),
        _ => None,
    };
    Ok((res.status, oracle, reason))
}

/// Candidate one-step reductions of a pair: drop a pure atom or a spatial
/// atom on either side.
fn reductions(a: &SymbolicHeap, b: &SymbolicHeap) -> Vec<(SymbolicHeap, SymbolicHeap)> {
    let mut out = Vec::new();
    for (side, h) in [(0, a), (1, b)] {
        for i in 0..h.pure.len() {
            let mut c = h.clone();
            c.pure.remove(i);
            out.push(if side == 0 { (c, b.clone()) } else { (a.clone(), c) });
        }
        for i in 0..h.spatial.len() {
            let mut c = h.clone();
            c.spatial.remove(i);
            out.push(if side == 0 { (c, b.clone()) } else { (a.clone(), c) });
        }
    }
    out
}

/// Runs [`entails`] and the oracle on the same pair. Disagreements are
/// shrunk greedily by deleting atoms while the disagreement persists.
pub fn entails_oracle_crosscheck(a: &SymbolicHeap, b: &SymbolicHeap, bounds: Bounds) -> Result<CrosscheckReport, SemanticsError> {
    if !a.is_quantifier_free() {
        return Err(SemanticsError::QuantifiedLhs);
    }
    let (status, oracle, reason) = disagreement(a, b, bounds)?;
    let Some(detail) = reason else {
        return Ok(CrosscheckReport { status, oracle_countermodel: oracle, agree: true, detail: None, shrunk: None });
    };
    let (mut sa, mut sb) = (a.clone(), b.clone());
    'shrink: loop {
        for (ra, rb) in reductions(&sa, &sb) {
            if disagreement(&ra, &rb, bounds)?.2.is_some() {
                (sa, sb) = (ra, rb);
                continue 'shrink;
            }
        }
        break;
    }
    Ok(CrosscheckReport { status, oracle_countermodel: oracle, agree: false, detail: Some(detail), shrunk: Some((sa, sb)) })
}
