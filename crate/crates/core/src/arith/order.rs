//! Entailment from a total order over terms, decided by a syntactic scan.

use std::collections::HashMap;

use crate::syntax::{PureAtom, Rel, Term};

use super::{solve, BoolExpr, SatResult, SolverOptions};

/// Outcome of [`check_order_entails`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderEntailment {
    pub holds: bool,
    /// Set when `delta` did not totally order the terms of `gamma` and the
    /// answer came from the general solver instead.
    pub fallback_used: bool,
}

/// Ranks of the terms of a total order: equal terms share a rank and
/// `t < u` in the order iff `rank(t) < rank(u)`.
fn ranks(delta: &[PureAtom]) -> Option<HashMap<&Term, usize>> {
    let mut terms: Vec<&Term> = Vec::new();
    let mut id: HashMap<&Term, usize> = HashMap::new();
    for a in delta {
        for t in [&a.lhs, &a.rhs] {
            if !id.contains_key(t) {
                id.insert(t, terms.len());
                terms.push(t);
            }
        }
    }
    let mut parent: Vec<usize> = (0..terms.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in delta {
        match a.rel {
            Rel::Eq => {
                let (l, r) = (find(&mut parent, id[&a.lhs]), find(&mut parent, id[&a.rhs]));
                parent[l] = r;
            }
            Rel::Lt => {}
            Rel::Le | Rel::Ne => return None,
        }
    }
    let mut below: HashMap<usize, std::collections::HashSet<usize>> = HashMap::new();
    let classes: Vec<usize> = (0..terms.len()).map(|i| find(&mut parent, i)).collect();
    for a in delta.iter().filter(|a| a.rel == Rel::Lt) {
        let (l, r) = (classes[id[&a.lhs]], classes[id[&a.rhs]]);
        if l == r {
            return None;
        }
        below.entry(r).or_default().insert(l);
    }
    let mut distinct = classes.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let rank_of: HashMap<usize, usize> = distinct.iter().map(|c| (*c, below.get(c).map_or(0, |s| s.len()))).collect();
    let mut seen: Vec<usize> = rank_of.values().copied().collect();
    seen.sort_unstable();
    if seen != (0..distinct.len()).collect::<Vec<_>>() {
        return None;
    }
    for a in delta.iter().filter(|a| a.rel == Rel::Lt) {
        if rank_of[&classes[id[&a.lhs]]] >= rank_of[&classes[id[&a.rhs]]] {
            return None;
        }
    }
    let out = terms.iter().enumerate().map(|(i, t)| (*t, rank_of[&classes[i]])).collect();
    Some(out)
}

fn scan(ranks: &HashMap<&Term, usize>, gamma: &BoolExpr) -> Option<bool> {
    match gamma {
        BoolExpr::And(xs) => {
            let mut all = true;
            for x in xs {
                all &= scan(ranks, x)?;
            }
            Some(all)
        }
        BoolExpr::Or(xs) => {
            let mut any = false;
            for x in xs {
                any |= scan(ranks, x)?;
            }
            Some(any)
        }
        BoolExpr::Atom(a) => {
            let (l, r) = (*ranks.get(&a.lhs)?, *ranks.get(&a.rhs)?);
            Some(match a.rel {
                Rel::Eq => l == r,
                Rel::Ne => l != r,
                Rel::Le => l <= r,
                Rel::Lt => l < r,
            })
        }
    }
}

/// Decides `delta |= gamma` where `delta` is a conjunction of `<` and `=`
/// atoms totally ordering the terms of `gamma`. Inputs outside that shape
/// are decided by refuting `delta /\ not gamma` with the general solver.
pub fn check_order_entails(delta: &[PureAtom], gamma: &BoolExpr) -> OrderEntailment {
    if let Some(r) = ranks(delta) {
        if let Some(holds) = scan(&r, gamma) {
            return OrderEntailment { holds, fallback_used: false };
        }
    }
    let body = BoolExpr::and(delta.iter().cloned().map(BoolExpr::Atom).chain([gamma.negate()]));
    let res = solve(&body, &[], &SolverOptions { deadline: None, minimize: false });
    OrderEntailment { holds: matches!(res, SatResult::Unsat), fallback_used: true }
}
