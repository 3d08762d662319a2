//! Arithmetic encodings of symbolic heaps.
//!
//! `gamma` characterises the stacks admitting a model, `beta` the existence
//! of a biabduction solution, and `chi` the existence of a countermodel to an
//! entailment. The footprint-difference formula `phi` is built directly in
//! its quantifier-free form: a location in one footprint but outside another
//! exists iff one of the left endpoints of the first, or one of the positions
//! just past a right endpoint of the second, is such a location.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::arith::{ArithSentence, BoolExpr};
use crate::syntax::{PureAtom, SpatialAtom, SymbolicHeap, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("expected a quantifier-free symbolic heap")]
    Quantified,
    #[error("bound variable {0} occurs on the right of a points-to atom")]
    Restriction(Var),
}

fn require_qf(a: &SymbolicHeap) -> Result<(), EncodingError> {
    if a.is_quantifier_free() {
        Ok(())
    } else {
        Err(EncodingError::Quantified)
    }
}

/// Replaces every `t |-> u` by `arr(t, t)`, keeping atom positions.
pub fn abstr(a: &SymbolicHeap) -> Result<SymbolicHeap, EncodingError> {
    require_qf(a)?;
    Ok(abstract_spatial(a))
}

fn abstract_spatial(a: &SymbolicHeap) -> SymbolicHeap {
    let spatial = a
        .spatial
        .iter()
        .map(|s| match s {
            SpatialAtom::PointsTo { src, .. } => SpatialAtom::array(src.clone(), src.clone()),
            other => other.clone(),
        })
        .collect();
    SymbolicHeap::with_bound(a.bound.clone(), a.pure.clone(), spatial)
}

/// Footprint intervals of the abstraction, in spatial order.
fn intervals(a: &SymbolicHeap) -> Vec<(Term, Term)> {
    abstract_spatial(a).arrays()
}

fn pure_expr(atoms: &[PureAtom]) -> BoolExpr {
    BoolExpr::and(atoms.iter().cloned().map(BoolExpr::Atom))
}

fn gamma_body(a: &SymbolicHeap) -> BoolExpr {
    let iv = intervals(a);
    let mut parts = vec![pure_expr(&a.pure)];
    parts.extend(iv.iter().map(|(l, r)| BoolExpr::le(l.clone(), r.clone())));
    for i in 0..iv.len() {
        for j in i + 1..iv.len() {
            parts.push(BoolExpr::or([BoolExpr::lt(iv[i].1.clone(), iv[j].0.clone()), BoolExpr::lt(iv[j].1.clone(), iv[i].0.clone())]));
        }
    }
    BoolExpr::and(parts)
}

/// Holds at a stack iff some heap makes the quantifier-free `a` true there:
/// the pure part, nonempty intervals, and pairwise disjoint footprints.
pub fn gamma(a: &SymbolicHeap) -> Result<BoolExpr, EncodingError> {
    require_qf(a)?;
    Ok(gamma_body(a))
}

/// The endpoint terms of a biabduction problem, without duplicates, in
/// order of first occurrence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbdTermSet {
    terms: Vec<Term>,
}

impl AbdTermSet {
    pub fn insert(&mut self, t: Term) {
        if !self.terms.contains(&t) {
            self.terms.push(t);
        }
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.terms.contains(t)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter()
    }

    pub fn as_slice(&self) -> &[Term] {
        &self.terms
    }
}

/// All terms of both heaps plus the successors of array right endpoints and
/// points-to sources.
pub fn abd_terms(a: &SymbolicHeap, b: &SymbolicHeap) -> AbdTermSet {
    let mut out = AbdTermSet::default();
    for t in a.terms().into_iter().chain(b.terms()) {
        out.insert(t);
    }
    for h in [a, b] {
        for (_, hi) in h.arrays() {
            out.insert(hi.add_const(1));
        }
    }
    for h in [a, b] {
        for (src, _) in h.points_to() {
            out.insert(src.add_const(1));
        }
    }
    out
}

/// Satisfiable iff the biabduction problem `(a, b)` has a solution.
pub fn beta(a: &SymbolicHeap, b: &SymbolicHeap) -> Result<BoolExpr, EncodingError> {
    require_qf(a)?;
    require_qf(b)?;
    let mut parts = vec![gamma_body(a), gamma_body(b)];
    let a_arrays = a.arrays();
    let a_pto = a.points_to();
    for (v, _) in b.points_to() {
        for (lo, hi) in &a_arrays {
            parts.push(BoolExpr::or([BoolExpr::lt(v.clone(), lo.clone()), BoolExpr::lt(hi.clone(), v.clone())]));
        }
    }
    for (t, u) in &a_pto {
        for (v, w) in b.points_to() {
            parts.push(BoolExpr::or([BoolExpr::ne(t.clone(), v.clone()), BoolExpr::eq(u.clone(), w)]));
        }
    }
    Ok(BoolExpr::and(parts))
}

fn inside(x: &Term, lo: &Term, hi: &Term) -> BoolExpr {
    BoolExpr::and([BoolExpr::le(lo.clone(), x.clone()), BoolExpr::le(x.clone(), hi.clone())])
}

fn outside(x: &Term, lo: &Term, hi: &Term) -> BoolExpr {
    BoolExpr::or([BoolExpr::lt(x.clone(), lo.clone()), BoolExpr::lt(hi.clone(), x.clone())])
}

/// `x` lies in the first footprint and outside the second.
fn alpha(x: &Term, first: &[(Term, Term)], second: &[(Term, Term)]) -> BoolExpr {
    BoolExpr::and(std::iter::once(BoolExpr::or(first.iter().map(|(l, r)| inside(x, l, r)))).chain(second.iter().map(|(l, r)| outside(x, l, r))))
}

/// Some location is in the footprint of `a` but not in that of `b`, with
/// quantifiers ignored and points-to atoms read as one-cell arrays.
pub fn phi_qf(a: &SymbolicHeap, b: &SymbolicHeap) -> BoolExpr {
    let first = intervals(a);
    let second = intervals(b);
    let witnesses = first.iter().map(|(l, _)| l.clone()).chain(second.iter().map(|(_, r)| r.add_const(1)));
    BoolExpr::or(witnesses.map(|x| alpha(&x, &first, &second)))
}

/// Some points-to source of `b` lies inside an array of `a`.
pub fn psi1(a: &SymbolicHeap, b: &SymbolicHeap) -> BoolExpr {
    let arrays = a.arrays();
    BoolExpr::or(b.points_to().into_iter().flat_map(|(v, _)| arrays.iter().map(move |(l, r)| inside(&v, l, r))))
}

/// Some points-to atom of `a` shares its source with one of `b` but stores a
/// different value.
pub fn psi2(a: &SymbolicHeap, b: &SymbolicHeap) -> BoolExpr {
    let bp = b.points_to();
    BoolExpr::or(
        a.points_to()
            .into_iter()
            .flat_map(|(t, u)| bp.iter().map(move |(v, w)| BoolExpr::and([BoolExpr::eq(t.clone(), v.clone()), BoolExpr::ne(u.clone(), w.clone())]))),
    )
}

/// A constant upper bound on `v` stated directly by one of the atoms.
pub fn constant_upper_bound(pure: &[PureAtom], v: &Var) -> Option<u64> {
    use crate::syntax::Rel;
    pure.iter()
        .filter_map(|a| {
            let k = a.rhs.as_constant();
            let l = a.lhs.as_constant();
            match a.rel {
                Rel::Le if a.lhs.as_var() == Some(v) => k,
                Rel::Lt if a.lhs.as_var() == Some(v) => k.and_then(|k| k.checked_sub(1)),
                Rel::Eq if a.lhs.as_var() == Some(v) => k,
                Rel::Eq if a.rhs.as_var() == Some(v) => l,
                _ => None,
            }
        })
        .min()
}

/// The bound variables of `b` occurring in points-to destinations that have
/// no constant upper bound. Such heaps are outside the fragment `chi` is
/// correct for: a countermodel must store values differing from every
/// possible destination, which needs the destinations bounded.
pub fn unbounded_destination_vars(b: &SymbolicHeap) -> Vec<Var> {
    let bound: BTreeSet<&Var> = b.bound.iter().collect();
    let mut out = Vec::new();
    for (_, w) in b.points_to() {
        for v in w.vars() {
            if bound.contains(v) && constant_upper_bound(&b.pure, v).is_none() && !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    out
}

/// Satisfiable iff `a |= b` has a countermodel. The outer block binds the
/// free variables of both heaps and the universal block the bound variables
/// of `b`, renamed apart from the variables of `a`.
pub fn chi(a: &SymbolicHeap, b: &SymbolicHeap) -> Result<ArithSentence, EncodingError> {
    require_qf(a)?;
    if let Some(v) = unbounded_destination_vars(b).into_iter().next() {
        return Err(EncodingError::Restriction(v));
    }
    let b = b.rename_bound_apart(&a.names());
    let qb = b.qf();
    let body = BoolExpr::and([gamma_body(a), BoolExpr::or([gamma_body(&qb).negate(), phi_qf(a, &qb), phi_qf(&qb, a), psi1(a, &qb), psi2(a, &qb)])]);
    let mut outer: Vec<Var> = a.fv().into_iter().collect();
    for v in b.fv() {
        if !outer.contains(&v) {
            outer.push(v);
        }
    }
    Ok(ArithSentence::exists_forall(outer, b.bound.clone(), body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{check_exists, check_exists_forall, SatResult, DEFAULT_MAX_ROUNDS};
    use crate::syntax::parse_symbolic_heap;

    fn h(s: &str) -> SymbolicHeap {
        parse_symbolic_heap(s).unwrap()
    }

    fn sat(e: &BoolExpr) -> bool {
        check_exists(&ArithSentence::exists(vec![], e.clone())).unwrap().is_sat()
    }

    #[test]
    fn abstraction() {
        assert_eq!(abstr(&h("x |-> y * arr(a, b)")).unwrap(), h("arr(x, x) * arr(a, b)"));
        assert_eq!(abstr(&h("EX z. x |-> z")), Err(EncodingError::Quantified));
    }

    #[test]
    fn gamma_shapes() {
        assert_eq!(gamma(&h("arr(a, b)")).unwrap().to_string(), "a <= b");
        assert_eq!(gamma(&h("arr(a, b) * arr(c, d)")).unwrap().to_string(), "(a <= b /\\ c <= d /\\ (b < c \\/ d < a))");
        assert!(!sat(&gamma(&h("x |-> y * x |-> z")).unwrap()));
        assert_eq!(gamma(&h("emp")).unwrap(), BoolExpr::truth());
    }

    #[test]
    fn term_sets() {
        let ts: Vec<String> = abd_terms(&h("arr(a, b)"), &h("arr(c, d)")).iter().map(|t| t.to_string()).collect();
        assert_eq!(ts, ["a", "b", "c", "d", "b + 1", "d + 1"]);
        let ts: Vec<String> = abd_terms(&h("a + 1 |-> b1"), &h("arr(a;2,2)")).iter().map(|t| t.to_string()).collect();
        assert_eq!(ts, ["a + 1", "b1", "a + 2", "a + 3"]);
        assert!(abd_terms(&h("emp"), &h("emp")).is_empty());
    }

    #[test]
    fn beta_groups() {
        let e = beta(&h("arr(a, b)"), &h("v |-> w")).unwrap();
        assert_eq!(e.to_string(), "(a <= b /\\ v <= v /\\ (v < a \\/ b < v))");
        let e = beta(&h("x |-> p"), &h("x |-> q")).unwrap();
        assert!(e.to_string().contains("(x != x \\/ p = q)"));
    }

    #[test]
    fn phi_examples() {
        assert!(sat(&phi_qf(&h("arr(1, 2)"), &h("arr(5, 6)"))));
        let same = BoolExpr::and([gamma(&h("arr(a, b)")).unwrap(), phi_qf(&h("arr(a, b)"), &h("arr(a, b)"))]);
        assert!(!sat(&same));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi1(&h("arr(a, b)"), &h("v |-> w")).to_string(), "(a <= v /\\ v <= b)");
        assert_eq!(psi2(&h("t |-> u"), &h("v |-> w")).to_string(), "(t = v /\\ u != w)");
        assert!(psi1(&h("t |-> u"), &h("arr(a, b)")).is_false());
    }

    #[test]
    fn chi_examples() {
        let s = chi(&h("arr(x, x)"), &h("x |-> y")).unwrap();
        assert_eq!(s.universal_vars(), Vec::<Var>::new());
        assert!(check_exists(&s).unwrap().is_sat());
        let s = chi(&h("arr(x, x)"), &h("EX y. y <= 3 : x |-> y")).unwrap();
        assert!(check_exists_forall(&s, DEFAULT_MAX_ROUNDS).unwrap().is_sat());
        let a = h("x < y : arr(x, y) * y + 1 |-> x");
        assert_eq!(check_exists(&chi(&a, &a).unwrap()).unwrap(), SatResult::Unsat);
        assert_eq!(chi(&h("arr(x, x)"), &h("EX y. x |-> y")), Err(EncodingError::Restriction(Var::new("y"))));
    }
}
