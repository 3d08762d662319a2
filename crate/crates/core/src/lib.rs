//! Decision procedures for array separation logic.
//!
//! Symbolic heaps combine linear arithmetic over the naturals with points-to
//! and array atoms. The crate decides satisfiability, quantifier-free and
//! restricted entailment, and computes verified biabduction solutions, all by
//! reduction to linear integer arithmetic. A brute-force bounded oracle and
//! benchmark generators support differential testing.

pub mod arith;
pub mod benchgen;
pub mod biabduction;
pub mod encodings;
pub mod entailment;
pub mod satcheck;
pub mod semantics;
pub mod syntax;

pub use syntax::{parse_problem, parse_symbolic_heap, PureAtom, Rel, SpatialAtom, SymbolicHeap, Term, Var};
