//! Counterexample-guided instantiation for `exists forall` sentences.

use std::collections::BTreeSet;

use crate::syntax::{Term, Var};

use super::{solve, ArithError, ArithSentence, BoolExpr, Quantifier, SatResult, SolverOptions, UnknownReason, Valuation};

/// Round limit used when callers do not choose one.
pub const DEFAULT_MAX_ROUNDS: usize = 64;

/// Decides `exists x forall z. body` with a bounded refinement loop.
pub fn check_exists_forall(sentence: &ArithSentence, max_rounds: usize) -> Result<SatResult, ArithError> {
    check_exists_forall_with(sentence, max_rounds, &SolverOptions::default())
}

fn validate(sentence: &ArithSentence) -> Result<(), ArithError> {
    let mut seen_forall = false;
    for (q, vs) in &sentence.prefix {
        if vs.is_empty() {
            continue;
        }
        match q {
            Quantifier::Forall => seen_forall = true,
            Quantifier::Exists if seen_forall => return Err(ArithError::UnsupportedPrefix),
            Quantifier::Exists => {}
        }
    }
    Ok(())
}

/// Candidate instantiation terms for a universal variable: the universal-free
/// sides of atoms comparing it against something, nudged by one.
fn candidate_terms(body: &BoolExpr, z: &Var, universals: &BTreeSet<Var>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    let mut push = |t: Term| {
        if !out.contains(&t) {
            out.push(t);
        }
    };
    for a in body.atoms() {
        for (zs, other) in [(&a.lhs, &a.rhs), (&a.rhs, &a.lhs)] {
            let Some((v, k)) = zs.as_var_plus_const() else { continue };
            if v != z || other.vars().any(|w| universals.contains(w)) {
                continue;
            }
            for delta in [-1i128, 0, 1] {
                let c = other.constant_part() as i128 + delta - k as i128;
                if c >= 0 {
                    push(Term::from_parts(other.coeffs().map(|(v, n)| (n, v.clone())), c as u64));
                }
            }
        }
    }
    out
}

/// Instantiates the universals: each one by a candidate term agreeing with
/// the counterexample under the current outer model, else by its value.
fn instance(body: &BoolExpr, universals: &[Var], outer: &Valuation, witness: &Valuation, candidates: &[(Var, Vec<Term>)]) -> BoolExpr {
    let mut subst: Vec<(Var, Term)> = Vec::new();
    for z in universals {
        let value = witness.get(z).copied().unwrap_or(0);
        let chosen = candidates
            .iter()
            .find(|(v, _)| v == z)
            .and_then(|(_, ts)| ts.iter().find(|t| t.eval_with(|v| outer.get(v).copied()).ok() == Some(value)))
            .cloned()
            .unwrap_or_else(|| Term::constant(value));
        subst.push((z.clone(), chosen));
    }
    body.map_atoms(&|a| {
        let b = a.map_terms(|t| t.substitute(&|v| subst.iter().find(|(z, _)| z == v).map(|(_, t)| t.clone())));
        match (b.lhs.as_constant(), b.rhs.as_constant()) {
            (Some(l), Some(r)) if b.holds(l, r) => BoolExpr::truth(),
            (Some(_), Some(_)) => BoolExpr::falsity(),
            _ => BoolExpr::Atom(b),
        }
    })
}

fn restrict(m: &Valuation, vars: &[Var]) -> Valuation {
    vars.iter().map(|v| (v.clone(), m.get(v).copied().unwrap_or(0))).collect()
}

/// As [`check_exists_forall`] with a deadline and model minimisation. A
/// `Sat` model covers exactly the outer variables and has passed a fresh
/// universal check.
pub fn check_exists_forall_with(sentence: &ArithSentence, max_rounds: usize, opts: &SolverOptions) -> Result<SatResult, ArithError> {
    validate(sentence)?;
    let outer = sentence.outer_vars();
    let universals = sentence.universal_vars();
    if universals.is_empty() {
        return Ok(match solve(&sentence.body, &outer, opts) {
            SatResult::Sat(m) => SatResult::Sat(restrict(&m, &outer)),
            other => other,
        });
    }
    let body = &sentence.body;
    let uset: BTreeSet<Var> = universals.iter().cloned().collect();
    let candidates: Vec<(Var, Vec<Term>)> = universals.iter().map(|z| (z.clone(), candidate_terms(body, z, &uset))).collect();
    let fast = SolverOptions { deadline: opts.deadline, minimize: false };
    let inner_opts = SolverOptions { deadline: opts.deadline, minimize: true };
    let counterexample = |m: &Valuation| -> SatResult { solve(&body.assign(m).negate(), &universals, &inner_opts) };
    let mut instances: Vec<BoolExpr> = Vec::new();
    for _ in 0..max_rounds {
        let m = match solve(&BoolExpr::and(instances.iter().cloned()), &outer, &fast) {
            SatResult::Sat(m) => restrict(&m, &outer),
            other => return Ok(other),
        };
        match counterexample(&m) {
            SatResult::Unsat => {
                if opts.minimize {
                    if let SatResult::Sat(small) = solve(&BoolExpr::and(instances.iter().cloned()), &outer, opts) {
                        let small = restrict(&small, &outer);
                        if counterexample(&small).is_unsat() {
                            return Ok(SatResult::Sat(small));
                        }
                    }
                }
                return Ok(SatResult::Sat(m));
            }
            SatResult::Sat(w) => instances.push(instance(body, &universals, &m, &w, &candidates)),
            unknown => return Ok(unknown),
        }
    }
    Ok(SatResult::Unknown(UnknownReason::CegarCap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    #[test]
    fn least_element() {
        let s = ArithSentence::exists_forall(vec![v("x")], vec![v("z")], BoolExpr::le(t("x"), t("z")));
        let SatResult::Sat(m) = check_exists_forall(&s, DEFAULT_MAX_ROUNDS).unwrap() else { panic!() };
        assert_eq!(m, [(v("x"), 0)].into_iter().collect());
    }

    #[test]
    fn unbounded_universal() {
        let s = ArithSentence::exists_forall(vec![v("x")], vec![v("z")], BoolExpr::le(t("z"), t("x")));
        assert_eq!(check_exists_forall(&s, DEFAULT_MAX_ROUNDS).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn round_cap_is_reported() {
        let body = BoolExpr::or([BoolExpr::ne(t("2*z"), t("x")), BoolExpr::eq(t("x"), t("x + 1"))]);
        let s = ArithSentence::exists_forall(vec![v("x")], vec![v("z")], body);
        let r = check_exists_forall(&s, 0).unwrap();
        assert_eq!(r, SatResult::Unknown(UnknownReason::CegarCap));
    }

    #[test]
    fn rejects_alternation() {
        let s = ArithSentence { prefix: vec![(Quantifier::Forall, vec![v("z")]), (Quantifier::Exists, vec![v("x")])], body: BoolExpr::truth() };
        assert_eq!(check_exists_forall(&s, 4), Err(ArithError::UnsupportedPrefix));
    }
}
