//! Biabduction: given `a` and `b`, find `x` and `y` such that `a * x` is
//! satisfiable and `a * x |= b * y`.
//!
//! A model of `beta(a, b)` fixes a total order on the endpoint terms of the
//! problem (the seed). Under a fixed order, the missing parts are computed
//! by walking each interval of one side and emitting arrays for the stretches
//! the other side leaves uncovered. Predecessors of array starts are
//! introduced as fresh primed variables `p` with `start = p + 1`.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use thiserror::Error;

use crate::arith::{solve, BoolExpr, SatResult, SolverOptions, UnknownReason, Valuation, DEFAULT_MAX_ROUNDS};
use crate::encodings::{abd_terms, beta, AbdTermSet};
use crate::entailment::{check_restriction, entails_with, EntailError, EntailOptions, EntailStatus};
use crate::satcheck::{is_sat_with, SatOptions, SatStatus};
use crate::syntax::{base_name, star_lift, NameSupply, PureAtom, SpatialAtom, SymbolicHeap, Term, Var};

#[derive(Debug, Error)]
pub enum BiabductionError {
    #[error("the left-hand side must be quantifier-free")]
    QuantifiedLhs,
    #[error("existentially bound variable {0} occurs on the right of a points-to atom")]
    Restriction(Var),
    #[error("the {0}-hand side is unsatisfiable")]
    Unsatisfiable(&'static str),
    #[error("term {0} is not an endpoint term of the problem")]
    UnknownTerm(Term),
    #[error("solver gave up: {}", .0.as_str())]
    Unknown(UnknownReason),
    #[error("constructed solution failed verification")]
    VerificationFailed,
    #[error(transparent)]
    Entail(#[from] EntailError),
}

/// A total order on the endpoint terms, induced by a model of `beta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSeed {
    /// One `<` or `=` atom per pair of terms.
    pub order: Vec<PureAtom>,
    pub terms: AbdTermSet,
    pub model: Valuation,
}

impl SolutionSeed {
    fn from_model(terms: AbdTermSet, model: Valuation) -> Self {
        let vals: Vec<u64> = terms.iter().map(|t| value(t, &model)).collect();
        let ts = terms.as_slice();
        let mut order = Vec::new();
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                let (e, f) = (ts[i].clone(), ts[j].clone());
                order.push(match vals[i].cmp(&vals[j]) {
                    std::cmp::Ordering::Less => PureAtom::lt(e, f),
                    std::cmp::Ordering::Equal => PureAtom::eq(e, f),
                    std::cmp::Ordering::Greater => PureAtom::lt(f, e),
                });
            }
        }
        SolutionSeed { order, terms, model }
    }

    fn value_of(&self, t: &Term) -> Result<u64, BiabductionError> {
        if self.terms.contains(t) {
            Ok(value(t, &self.model))
        } else {
            Err(BiabductionError::UnknownTerm(t.clone()))
        }
    }

    pub fn lt(&self, e: &Term, f: &Term) -> Result<bool, BiabductionError> {
        Ok(self.value_of(e)? < self.value_of(f)?)
    }

    pub fn le(&self, e: &Term, f: &Term) -> Result<bool, BiabductionError> {
        Ok(self.value_of(e)? <= self.value_of(f)?)
    }

    pub fn eq(&self, e: &Term, f: &Term) -> Result<bool, BiabductionError> {
        Ok(self.value_of(e)? == self.value_of(f)?)
    }

    /// The order restricted to `among`, as a chain over those terms sorted
    /// by value: equivalent to the restricted order and linear in size.
    fn chain(&self, among: &[Term]) -> Vec<PureAtom> {
        let mut ts: Vec<(u64, &Term)> = among.iter().map(|t| (value(t, &self.model), t)).collect();
        ts.sort_by_key(|(v, _)| *v);
        ts.windows(2)
            .map(|w| if w[0].0 == w[1].0 { PureAtom::eq(w[0].1.clone(), w[1].1.clone()) } else { PureAtom::lt(w[0].1.clone(), w[1].1.clone()) })
            .collect()
    }
}

fn value(t: &Term, m: &Valuation) -> u64 {
    t.eval_with(|v| Some(m.get(v).copied().unwrap_or(0))).expect("total lookup")
}

/// Checks the shared preconditions and returns the right-hand side with its
/// bound variables renamed apart from `a`.
fn prepare(a: &SymbolicHeap, b: &SymbolicHeap) -> Result<SymbolicHeap, BiabductionError> {
    if !a.is_quantifier_free() {
        return Err(BiabductionError::QuantifiedLhs);
    }
    if !check_restriction(b) {
        let v = b.points_to().iter().flat_map(|(_, w)| w.vars().cloned().collect::<Vec<_>>()).find(|v| b.bound.contains(v));
        return Err(BiabductionError::Restriction(v.expect("a violating variable")));
    }
    for (side, h) in [("left", a), ("right", b)] {
        if is_sat_with(h, &SatOptions::default()).map_err(EntailError::from)?.status == SatStatus::Unsat {
            return Err(BiabductionError::Unsatisfiable(side));
        }
    }
    Ok(b.rename_bound_apart(&a.names()))
}

/// The terms whose relative order determines the covers: footprint
/// endpoints of both sides and the successors of right endpoints. Seeds are
/// told apart by their order on these terms only, since seeds agreeing on it
/// yield solutions with the same spatial parts.
fn placement_terms(a: &SymbolicHeap, b: &SymbolicHeap) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for h in [a, b] {
        for (lo, hi) in h.arrays().into_iter().chain(h.points_to().into_iter().map(|(src, _)| (src.clone(), src))) {
            for t in [lo, hi.add_const(1), hi] {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
    }
    out
}

fn seeds_of(a: &SymbolicHeap, b: &SymbolicHeap, limit: usize, deadline: Option<Instant>) -> Result<Vec<SolutionSeed>, BiabductionError> {
    let terms = abd_terms(a, b);
    let placement = placement_terms(a, b);
    let base = beta(a, b).map_err(|_| BiabductionError::QuantifiedLhs)?;
    let mut vars: Vec<Var> = a.all_vars().into_iter().collect();
    for v in b.all_vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let mut blocks: Vec<BoolExpr> = Vec::new();
    let mut out = Vec::new();
    let opts = SolverOptions { deadline, minimize: true };
    while out.len() < limit {
        let body = BoolExpr::and(std::iter::once(base.clone()).chain(blocks.iter().cloned()));
        match solve(&body, &vars, &opts) {
            SatResult::Sat(m) => {
                let seed = SolutionSeed::from_model(terms.clone(), m);
                blocks.push(BoolExpr::or(seed.chain(&placement).iter().map(|a| BoolExpr::Atom(a.negate()))));
                out.push(seed);
                if placement.len() < 2 {
                    break;
                }
            }
            SatResult::Unsat => break,
            SatResult::Unknown(r) => return Err(BiabductionError::Unknown(r)),
        }
    }
    Ok(out)
}

/// A seed from a minimised model of `beta(a, b)`, or `None` when `beta` is
/// unsatisfiable, in which case the problem has no solution.
pub fn derive_seed(a: &SymbolicHeap, b: &SymbolicHeap) -> Result<Option<SolutionSeed>, BiabductionError> {
    let b = prepare(a, b)?.qf();
    Ok(seeds_of(a, &b, 1, None)?.pop())
}

/// Up to `limit` seeds whose orders differ on the footprint endpoints.
pub fn enumerate_seeds(a: &SymbolicHeap, b: &SymbolicHeap, limit: usize) -> Result<Vec<SolutionSeed>, BiabductionError> {
    if limit == 0 {
        return Ok(Vec::new());
    }
    let b = prepare(a, b)?.qf();
    seeds_of(a, &b, limit, None)
}

/// The output of one cover computation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverResult {
    /// Equalities `start = p + 1` defining fresh predecessors.
    pub extra_pure: Vec<PureAtom>,
    /// Arrays or a points-to atom, in address order.
    pub spatial: Vec<SpatialAtom>,
    /// Number of invocations, the first one included.
    pub calls: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Side {
    Left,
    Right,
}

/// Shared state of the cover computations of one solution: fresh names and
/// the predecessor variable of each interval start.
struct Coverer<'a> {
    seed: &'a SolutionSeed,
    names: NameSupply,
    primes: HashMap<(Side, usize), Var>,
}

impl<'a> Coverer<'a> {
    fn new(seed: &'a SolutionSeed, used: impl IntoIterator<Item = Var>) -> Self {
        let mut names = NameSupply::new(used);
        for t in seed.terms.iter() {
            for v in t.vars() {
                names.reserve(v);
            }
        }
        Coverer { seed, names, primes: HashMap::new() }
    }

    fn predecessor(&mut self, side: Side, i: usize, start: &Term) -> (Var, PureAtom) {
        let names = &mut self.names;
        let v = self.primes.entry((side, i)).or_insert_with(|| names.fresh(start.vars().next().map_or("t", |v| base_name(v.name())))).clone();
        (v.clone(), PureAtom::eq(start.clone(), Term::var(v).add_const(1)))
    }

    fn arrcov(&mut self, side: Side, h: &SymbolicHeap, e: &Term, f: &Term) -> Result<CoverResult, BiabductionError> {
        let intervals = abstract_intervals(h);
        let mut out = CoverResult::default();
        let mut e = e.clone();
        loop {
            out.calls += 1;
            if self.seed.lt(f, &e)? {
                return Ok(out);
            }
            let mut covering = None;
            for (lo, hi) in intervals.iter() {
                if self.seed.le(lo, &e)? && self.seed.le(&e, hi)? {
                    covering = Some(hi.add_const(1));
                    break;
                }
            }
            if let Some(next) = covering {
                e = next;
                continue;
            }
            let mut least: Option<usize> = None;
            for (j, (lo, _)) in intervals.iter().enumerate() {
                if self.seed.lt(&e, lo)? && self.seed.le(lo, f)? {
                    match least {
                        Some(k) if !self.seed.lt(lo, &intervals[k].0)? => {}
                        _ => least = Some(j),
                    }
                }
            }
            let Some(i) = least else {
                out.spatial.push(SpatialAtom::array(e, f.clone()));
                return Ok(out);
            };
            let (lo, hi) = intervals[i].clone();
            let (p, eq) = self.predecessor(side, i, &lo);
            if !out.extra_pure.contains(&eq) {
                out.extra_pure.push(eq);
            }
            out.spatial.push(SpatialAtom::array(e, Term::var(p)));
            e = hi.add_const(1);
        }
    }

    fn ptocov(&self, h: &SymbolicHeap, e: &Term, f: &Term) -> Result<CoverResult, BiabductionError> {
        let mut out = CoverResult { calls: 1, ..CoverResult::default() };
        for (t, _) in h.points_to() {
            if self.seed.eq(&t, e)? {
                return Ok(out);
            }
        }
        for (lo, hi) in h.arrays() {
            if self.seed.le(&lo, e)? && self.seed.le(e, &hi)? {
                return Ok(out);
            }
        }
        out.spatial.push(SpatialAtom::points_to(e.clone(), f.clone()));
        Ok(out)
    }
}

fn abstract_intervals(h: &SymbolicHeap) -> Vec<(Term, Term)> {
    h.spatial
        .iter()
        .filter_map(|s| match s {
            SpatialAtom::PointsTo { src, .. } => Some((src.clone(), src.clone())),
            SpatialAtom::Array { lo, hi } => Some((lo.clone(), hi.clone())),
            SpatialAtom::Emp => None,
        })
        .collect()
}

/// Covers `[e, f]` with arrays not overlapping the footprint of `a`, under the
/// order of `seed`.
pub fn arrcov(a: &SymbolicHeap, seed: &SolutionSeed, e: &Term, f: &Term) -> Result<CoverResult, BiabductionError> {
    if !a.is_quantifier_free() {
        return Err(BiabductionError::QuantifiedLhs);
    }
    seed.value_of(e)?;
    seed.value_of(f)?;
    Coverer::new(seed, a.names()).arrcov(Side::Left, a, e, f)
}

/// `e |-> f` unless `a` already allocates `e`.
pub fn ptocov(a: &SymbolicHeap, seed: &SolutionSeed, e: &Term, f: &Term) -> Result<CoverResult, BiabductionError> {
    if !a.is_quantifier_free() {
        return Err(BiabductionError::QuantifiedLhs);
    }
    seed.value_of(e)?;
    Coverer::new(seed, a.names()).ptocov(a, e, f)
}

/// A candidate pair `(x, y)` with the strengthened order it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiabductionSolution {
    pub x: SymbolicHeap,
    pub y: SymbolicHeap,
    pub delta_hat: Vec<PureAtom>,
    /// Whether `b * y` was found satisfiable; not required of a solution.
    pub by_satisfiable: bool,
    /// Set once the pair has passed [`verify_solution`].
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BiabductionOutcome {
    Solution(Box<BiabductionSolution>),
    NoSolution,
}

#[derive(Clone, Debug)]
pub struct BiabductionOptions {
    pub weaken: bool,
    pub max_rounds: usize,
    pub deadline: Option<Instant>,
}

impl Default for BiabductionOptions {
    fn default() -> Self {
        BiabductionOptions { weaken: false, max_rounds: DEFAULT_MAX_ROUNDS, deadline: None }
    }
}

/// Statistics of one construction, for property checks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverTrace {
    /// `(e, f, result, intervals of the covered side)` per array cover.
    pub covers: Vec<(Term, Term, CoverResult, usize)>,
}

fn assemble(a: &SymbolicHeap, b: &SymbolicHeap, seed: &SolutionSeed, trace: &mut CoverTrace) -> Result<BiabductionSolution, BiabductionError> {
    let mut cov = Coverer::new(seed, a.names().into_iter().chain(b.names()));
    let mut pure_x: Vec<PureAtom> = Vec::new();
    let mut pure_y: Vec<PureAtom> = Vec::new();
    let mut fx = Vec::new();
    let mut fy = Vec::new();
    let na = abstract_intervals(a).len();
    let nb = abstract_intervals(b).len();
    for (c, d) in b.arrays() {
        let r = cov.arrcov(Side::Left, a, &c, &d)?;
        pure_x.extend(r.extra_pure.iter().cloned());
        fx.extend(r.spatial.iter().cloned());
        trace.covers.push((c, d, r, na));
    }
    for (v, w) in b.points_to() {
        fx.extend(cov.ptocov(a, &v, &w)?.spatial);
    }
    for (l, r) in a.arrays() {
        let res = cov.arrcov(Side::Right, b, &l, &r)?;
        pure_y.extend(res.extra_pure.iter().cloned());
        fy.extend(res.spatial.iter().cloned());
        trace.covers.push((l, r, res, nb));
    }
    for (t, u) in a.points_to() {
        fy.extend(cov.ptocov(b, &t, &u)?.spatial);
    }
    let mut delta_hat = seed.order.clone();
    for atom in pure_x.into_iter().chain(pure_y) {
        if !delta_hat.contains(&atom) {
            delta_hat.push(atom);
        }
    }
    Ok(BiabductionSolution {
        x: SymbolicHeap::new(delta_hat.clone(), fx),
        y: SymbolicHeap::new(delta_hat.clone(), fy),
        delta_hat,
        by_satisfiable: false,
        verified: false,
    })
}

/// The outcome of [`verify_solution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verification {
    Holds,
    Fails,
    Unknown(UnknownReason),
}

fn verify_with(a: &SymbolicHeap, b: &SymbolicHeap, x: &SymbolicHeap, y: &SymbolicHeap, opts: &BiabductionOptions) -> Result<Verification, BiabductionError> {
    let ax = star_lift(a, x);
    let sat = SatOptions { deadline: opts.deadline, ..SatOptions::default() };
    match is_sat_with(&ax, &sat).map_err(EntailError::from)?.status {
        SatStatus::Sat => {}
        SatStatus::Unsat => return Ok(Verification::Fails),
        SatStatus::Unknown(r) => return Ok(Verification::Unknown(r)),
    }
    let eopts = EntailOptions { max_rounds: opts.max_rounds, deadline: opts.deadline, ..EntailOptions::default() };
    Ok(match entails_with(&ax, &star_lift(b, y), &eopts)?.status {
        EntailStatus::Valid => Verification::Holds,
        EntailStatus::Invalid => Verification::Fails,
        EntailStatus::Unknown(r) => Verification::Unknown(r),
    })
}

/// Checks that `a * x` is satisfiable and entails `b * y`, using only the
/// satisfiability and entailment procedures.
pub fn verify_solution(a: &SymbolicHeap, b: &SymbolicHeap, sol: &BiabductionSolution) -> Result<Verification, BiabductionError> {
    verify_with(a, b, &sol.x, &sol.y, &BiabductionOptions::default())
}

fn finish(a: &SymbolicHeap, b: &SymbolicHeap, mut sol: BiabductionSolution, opts: &BiabductionOptions) -> Result<BiabductionSolution, BiabductionError> {
    match verify_with(a, b, &sol.x, &sol.y, opts)? {
        Verification::Holds => sol.verified = true,
        Verification::Fails => return Err(BiabductionError::VerificationFailed),
        Verification::Unknown(r) => return Err(BiabductionError::Unknown(r)),
    }
    if opts.weaken {
        sol = weaken_with(a, b, sol, opts)?;
    }
    let by = star_lift(b, &sol.y);
    sol.by_satisfiable =
        is_sat_with(&by, &SatOptions { deadline: opts.deadline, ..SatOptions::default() }).map_err(EntailError::from)?.status == SatStatus::Sat;
    Ok(sol)
}

/// Computes a verified solution from the first seed, or reports that none
/// exists. Bound variables of `b` become free in the solution.
pub fn solve_biabduction(a: &SymbolicHeap, b: &SymbolicHeap, opts: &BiabductionOptions) -> Result<BiabductionOutcome, BiabductionError> {
    let qb = prepare(a, b)?.qf();
    let Some(seed) = seeds_of(a, &qb, 1, opts.deadline)?.pop() else {
        return Ok(BiabductionOutcome::NoSolution);
    };
    let sol = assemble(a, &qb, &seed, &mut CoverTrace::default())?;
    Ok(BiabductionOutcome::Solution(Box::new(finish(a, b, sol, opts)?)))
}

/// Verified solutions from up to `limit` seeds, without duplicates.
pub fn solve_biabduction_all(
    a: &SymbolicHeap,
    b: &SymbolicHeap,
    limit: usize,
    opts: &BiabductionOptions,
) -> Result<Vec<BiabductionSolution>, BiabductionError> {
    let qb = prepare(a, b)?.qf();
    let mut out: Vec<BiabductionSolution> = Vec::new();
    for seed in seeds_of(a, &qb, limit, opts.deadline)? {
        let sol = finish(a, b, assemble(a, &qb, &seed, &mut CoverTrace::default())?, opts)?;
        if !out.iter().any(|o| o.x == sol.x && o.y == sol.y) {
            out.push(sol);
        }
    }
    Ok(out)
}

/// The solution built from a given seed together with its cover trace, for
/// property checks. The seed must come from `(a, qf(b))`.
pub fn solution_from_seed(a: &SymbolicHeap, b: &SymbolicHeap, seed: &SolutionSeed) -> Result<(BiabductionSolution, CoverTrace), BiabductionError> {
    let mut trace = CoverTrace::default();
    let sol = assemble(a, b, seed, &mut trace)?;
    Ok((sol, trace))
}

/// Removes conjuncts from the shared pure part while verification still
/// succeeds, then replaces points-to atoms by one-cell arrays where that
/// keeps the solution valid. Predecessor equalities whose variable occurs in
/// a spatial atom are kept.
pub fn weaken_solution(a: &SymbolicHeap, b: &SymbolicHeap, sol: &BiabductionSolution) -> Result<BiabductionSolution, BiabductionError> {
    weaken_with(a, b, sol.clone(), &BiabductionOptions::default())
}

fn weaken_with(a: &SymbolicHeap, b: &SymbolicHeap, sol: BiabductionSolution, opts: &BiabductionOptions) -> Result<BiabductionSolution, BiabductionError> {
    let spatial_vars: BTreeSet<Var> =
        sol.x.spatial.iter().chain(&sol.y.spatial).flat_map(|s| s.terms().into_iter().flat_map(|t| t.vars().cloned().collect::<Vec<_>>())).collect();
    let protected = |atom: &PureAtom| {
        atom.rhs
            .as_var_plus_const()
            .is_some_and(|(v, k)| k == 1 && v.name().contains('\'') && spatial_vars.contains(v) && !a.names().contains(v) && !b.names().contains(v))
    };
    let (kept, mut candidates): (Vec<PureAtom>, Vec<PureAtom>) = sol.delta_hat.iter().cloned().partition(|p| protected(p));
    let build = |pure: &[PureAtom], fx: &[SpatialAtom], fy: &[SpatialAtom]| {
        let mut p = kept.clone();
        p.extend(pure.iter().cloned());
        (SymbolicHeap::new(p.clone(), fx.to_vec()), SymbolicHeap::new(p, fy.to_vec()))
    };
    let passes = |pure: &[PureAtom], fx: &[SpatialAtom], fy: &[SpatialAtom]| -> Result<bool, BiabductionError> {
        let (x, y) = build(pure, fx, fy);
        Ok(verify_with(a, b, &x, &y, opts)? == Verification::Holds)
    };
    let (fx, mut fy) = (sol.x.spatial.clone(), sol.y.spatial.clone());
    let mut chunk = candidates.len();
    while chunk > 0 && !candidates.is_empty() {
        let mut i = 0;
        while i < candidates.len() {
            let end = (i + chunk).min(candidates.len());
            let trial: Vec<PureAtom> = candidates[..i].iter().chain(&candidates[end..]).cloned().collect();
            if passes(&trial, &fx, &fy)? {
                candidates = trial;
            } else {
                i = end;
            }
        }
        if chunk == 1 {
            break;
        }
        chunk = (chunk / 2).max(1);
    }
    let mut fx = fx;
    for which in [1, 0] {
        let len = if which == 1 { fy.len() } else { fx.len() };
        for i in 0..len {
            let current = if which == 1 { &fy } else { &fx };
            let SpatialAtom::PointsTo { src, .. } = &current[i] else { continue };
            let mut trial = current.clone();
            trial[i] = SpatialAtom::array(src.clone(), src.clone());
            let ok = if which == 1 { passes(&candidates, &fx, &trial)? } else { passes(&candidates, &trial, &fy)? };
            if ok {
                if which == 1 {
                    fy = trial;
                } else {
                    fx = trial;
                }
            }
        }
    }
    let (x, y) = build(&candidates, &fx, &fy);
    let delta_hat = x.pure.clone();
    Ok(BiabductionSolution { x, y, delta_hat, by_satisfiable: sol.by_satisfiable, verified: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_problem, parse_symbolic_heap, parse_term};

    fn h(s: &str) -> SymbolicHeap {
        parse_symbolic_heap(s).unwrap()
    }

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn seed_with(a: &SymbolicHeap, b: &SymbolicHeap, model: &[(&str, u64)]) -> SolutionSeed {
        SolutionSeed::from_model(abd_terms(a, b), model.iter().map(|(v, x)| (Var::new(*v), *x)).collect())
    }

    #[test]
    fn seed_from_hand_model() {
        let (a, b) = (h("a + 1 |-> b1"), h("arr(a;2,2)"));
        let s = seed_with(&a, &b, &[("a", 0), ("b1", 0)]);
        let text: Vec<String> = s.order.iter().map(|p| p.to_string()).collect();
        assert_eq!(text, ["b1 < a + 1", "a + 1 < a + 2", "a + 1 < a + 3", "b1 < a + 2", "b1 < a + 3", "a + 2 < a + 3"]);
    }

    #[test]
    fn seeds_and_no_solution() {
        assert!(derive_seed(&h("a = 1 /\\ b = 2 : x |-> a"), &h("x |-> b")).unwrap().is_none());
        let s = derive_seed(&h("emp"), &h("emp")).unwrap().unwrap();
        assert!(s.order.is_empty());
        assert!(enumerate_seeds(&h("arr(a, b)"), &h("arr(c, d)"), 0).unwrap().is_empty());
    }

    #[test]
    fn covers() {
        let (a, b) = (h("a + 1 |-> b1"), h("arr(a;2,2)"));
        let s = seed_with(&a, &b, &[("a", 0), ("b1", 0)]);
        let r = arrcov(&a, &s, &t("a + 2"), &t("a + 2")).unwrap();
        assert_eq!(r.spatial, vec![SpatialAtom::array(t("a + 2"), t("a + 2"))]);
        let r = arrcov(&a, &s, &t("a + 3"), &t("a + 2")).unwrap();
        assert!(r.spatial.is_empty());
        assert!(ptocov(&a, &s, &t("a + 1"), &t("b1")).unwrap().spatial.is_empty());
        let r = ptocov(&b, &s, &t("a + 1"), &t("b1")).unwrap();
        assert_eq!(r.spatial, vec![SpatialAtom::points_to(t("a + 1"), t("b1"))]);
    }

    #[test]
    fn cover_splits_around_an_array() {
        let a = h("arr(3, 5)");
        let b = h("arr(1, 8)");
        let s = seed_with(&a, &b, &[]);
        let r = arrcov(&a, &s, &t("1"), &t("8")).unwrap();
        assert_eq!(r.spatial.len(), 2);
        let SpatialAtom::Array { hi, .. } = &r.spatial[0] else { panic!() };
        let p = hi.as_var().unwrap().clone();
        assert_eq!(r.spatial[0], SpatialAtom::array(t("1"), Term::var(p.clone())));
        assert_eq!(r.extra_pure, vec![PureAtom::eq(t("3"), Term::var(p).add_const(1))]);
        assert_eq!(r.spatial[1], SpatialAtom::array(t("6"), t("8")));
        assert_eq!(r.calls, 2);
    }

    #[test]
    fn build_max_heap_step() {
        let (a, b) = (h("a + 1 |-> b1"), h("arr(a;2,2)"));
        let opts = BiabductionOptions { weaken: true, ..BiabductionOptions::default() };
        let BiabductionOutcome::Solution(sol) = solve_biabduction(&a, &b, &opts).unwrap() else { panic!() };
        assert_eq!(sol.x.spatial, vec![SpatialAtom::array(t("a + 2"), t("a + 2"))]);
        assert_eq!(sol.y.spatial, vec![SpatialAtom::array(t("a + 1"), t("a + 1"))]);
        assert!(sol.verified);
    }

    #[test]
    fn shift_put_example() {
        let p = parse_problem("lhs: k < n : arr(b;0,k-1) * arr(b;k,n-1)\nrhs: arr(m;0,k-1) * arr(b;0,k-1)\n").unwrap();
        let (a, b) = (p.lhs, p.rhs.unwrap());
        let opts = BiabductionOptions { weaken: true, ..BiabductionOptions::default() };
        let sols = solve_biabduction_all(&a, &b, 10, &opts).unwrap();
        assert!(!sols.is_empty());
        assert!(sols.iter().any(|s| s.x.spatial == vec![b.spatial[0].clone()] && s.y.spatial == vec![a.spatial[1].clone()]));
    }

    #[test]
    fn conflicting_pointers_have_no_solution() {
        let r = solve_biabduction(&h("a = 1 /\\ b = 2 : x |-> a"), &h("x |-> b"), &BiabductionOptions::default()).unwrap();
        assert_eq!(r, BiabductionOutcome::NoSolution);
    }

    #[test]
    fn verification_of_handmade_pairs() {
        let sol = |x: &str, y: &str| BiabductionSolution { x: h(x), y: h(y), delta_hat: vec![], by_satisfiable: true, verified: false };
        assert_eq!(verify_solution(&h("emp"), &h("arr(c, d)"), &sol("arr(c, d)", "emp")).unwrap(), Verification::Holds);
        assert_eq!(verify_solution(&h("emp"), &h("arr(c, d)"), &sol("emp", "emp")).unwrap(), Verification::Fails);
    }
}
