//! Satisfiability of symbolic heaps and witness models.
//!
//! A heap is satisfiable iff its quantifier-free part is, and the latter is
//! decided by solving `gamma`. A solver model extends to a heap by laying
//! out each footprint, with points-to cells holding their destinations and
//! array cells holding 0.

use std::time::Instant;

use crate::arith::{ArithSentence, Backend, BackendError, SatResult, SolverOptions, UnknownReason, Valuation};
use crate::encodings::gamma;
use crate::semantics::{footprint_heap, Heap, Stack};
use crate::syntax::{SymbolicHeap, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatStatus {
    Sat,
    Unsat,
    Unknown(UnknownReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatOutcome {
    pub status: SatStatus,
    /// A model, present when the status is `Sat` and one was requested.
    pub witness: Option<(Stack, Heap)>,
}

#[derive(Clone, Debug, Default)]
pub struct SatOptions {
    pub witness: bool,
    pub backend: Backend,
    pub deadline: Option<Instant>,
}

/// The `gamma` sentence of the quantifier-free part of `a`.
pub fn sat_sentence(a: &SymbolicHeap) -> ArithSentence {
    let qf = a.qf();
    let vars: Vec<Var> = qf.all_vars().into_iter().collect();
    ArithSentence::exists(vars, gamma(&qf).expect("quantifier-free by construction"))
}

/// Decides satisfiability with the builtin procedure and builds a witness.
pub fn is_sat(a: &SymbolicHeap) -> SatOutcome {
    is_sat_with(a, &SatOptions { witness: true, ..SatOptions::default() }).expect("the builtin procedure does not fail")
}

pub fn is_sat_with(a: &SymbolicHeap, opts: &SatOptions) -> Result<SatOutcome, BackendError> {
    let sentence = sat_sentence(a);
    let solver = SolverOptions { deadline: opts.deadline, minimize: opts.witness };
    let outcome = match opts.backend.check(&sentence, &solver, 0)? {
        SatResult::Sat(m) => SatOutcome { status: SatStatus::Sat, witness: opts.witness.then(|| witness_from(a, &m)) },
        SatResult::Unsat => SatOutcome { status: SatStatus::Unsat, witness: None },
        SatResult::Unknown(r) => SatOutcome { status: SatStatus::Unknown(r), witness: None },
    };
    Ok(outcome)
}

/// A model of `a` with lexicographically minimised values, if any.
pub fn witness_model(a: &SymbolicHeap) -> Option<(Stack, Heap)> {
    is_sat(a).witness
}

/// The stack restricted to the free variables of `a` and the heap laid out
/// from the full valuation.
pub(crate) fn witness_from(a: &SymbolicHeap, m: &Valuation) -> (Stack, Heap) {
    let qf = a.qf();
    let full: Stack = qf.all_vars().into_iter().map(|v| (v.clone(), m.get(&v).copied().unwrap_or(0))).collect();
    let heap = footprint_heap(&qf, &full, 0).expect("every variable has a value").expect("a model of gamma has a well-formed footprint");
    let fv = a.fv();
    let stack = full.into_iter().filter(|(v, _)| fv.contains(v)).collect();
    (stack, heap)
}
