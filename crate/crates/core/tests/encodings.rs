mod common;

use std::collections::BTreeSet;

use asl::arith::{check_exists, BoolExpr, SatResult};
use asl::benchgen::{gen_random, gen_random_pair, RandomConfig};
use asl::encodings::{abd_terms, abstr, beta, chi, gamma, phi_qf, psi1, psi2, EncodingError};
use asl::semantics::{holds, Bounds};
use asl::syntax::parse_term;
use asl::{SymbolicHeap, Term, Var};
use common::{eval, footprint, h, layout, model_exists, stacks, RefStack};

fn t(s: &str) -> Term {
    parse_term(s).unwrap()
}

fn vars_of(hs: &[&SymbolicHeap], extra: &[BoolExpr]) -> BTreeSet<Var> {
    let mut out: BTreeSet<Var> = hs.iter().flat_map(|a| a.all_vars()).collect();
    out.extend(extra.iter().flat_map(|e| e.vars()));
    out
}

/// Asserts that `e` agrees with `reference` on every stack with values up to
/// `bound` over the given variables.
fn agrees(e: &BoolExpr, vars: &BTreeSet<Var>, bound: u64, reference: impl Fn(&RefStack) -> bool) {
    for s in stacks(vars, bound) {
        assert_eq!(e.eval(&s), Some(reference(&s)), "{e} at {s:?}");
    }
}

fn random_heaps(count: u64, cfg: RandomConfig) -> Vec<SymbolicHeap> {
    (0..count).map(|seed| gen_random(seed, &cfg)).collect()
}

#[test]
fn abstr_examples() {
    assert_eq!(abstr(&h("x |-> y")).unwrap(), h("arr(x, x)"));
    let a = h("a < b : arr(a, b)");
    assert_eq!(abstr(&a).unwrap(), a);
    assert_eq!(abstr(&h("x |-> y * arr(a, b)")).unwrap(), h("arr(x, x) * arr(a, b)"));
    assert_eq!(abstr(&h("EX y. x |-> y")), Err(EncodingError::Quantified));
}

#[test]
fn gamma_examples() {
    let g = gamma(&h("arr(a, b)")).unwrap();
    agrees(&g, &vars_of(&[], std::slice::from_ref(&g)), 4, |s| s[&Var::new("a")] <= s[&Var::new("b")]);
    let g = gamma(&h("arr(a, b) * arr(c, d)")).unwrap();
    let expected =
        BoolExpr::and([BoolExpr::le(t("a"), t("b")), BoolExpr::le(t("c"), t("d")), BoolExpr::or([BoolExpr::lt(t("b"), t("c")), BoolExpr::lt(t("d"), t("a"))])]);
    agrees(&g, &g.vars(), 3, |s| expected.eval(s) == Some(true));
    let g = gamma(&h("x |-> y * x |-> z")).unwrap();
    assert!(check_exists(&asl::arith::ArithSentence::exists(g.vars().into_iter().collect(), g)).unwrap().is_unsat());
    assert!(gamma(&h("emp * emp")).unwrap().is_true());
}

#[test]
fn gamma_characterises_model_existence() {
    let cfgs = [
        RandomConfig { vars: 3, arrays: 2, points_to: 1, pure_atoms: 1, max_offset: 2 },
        RandomConfig { vars: 2, arrays: 3, points_to: 1, pure_atoms: 2, max_offset: 1 },
    ];
    for cfg in cfgs {
        for a in random_heaps(60, cfg) {
            let g = gamma(&a).unwrap();
            for s in stacks(&a.all_vars(), 4) {
                let expected = model_exists(&a, &s);
                assert_eq!(g.eval(&s), Some(expected), "{a} at {s:?}");
                if let Some(hp) = layout(&a, &s, 0) {
                    assert_eq!(holds(&s, &hp, &a, Bounds::new(0, 0)).unwrap(), expected, "{a} at {s:?}");
                }
            }
        }
    }
}

#[test]
fn abstraction_preserves_model_existence() {
    for a in random_heaps(80, RandomConfig::default()) {
        let b = abstr(&a).unwrap();
        for s in stacks(&a.all_vars(), 4) {
            assert_eq!(model_exists(&a, &s), model_exists(&b, &s), "{a} at {s:?}");
        }
    }
}

#[test]
fn gamma_size_is_quadratic() {
    let size = |n: usize| {
        let spatial = (0..n).map(|i| format!("arr(x{i}, y{i})")).collect::<Vec<_>>().join(" * ");
        gamma(&h(&spatial)).unwrap().size()
    };
    for n in [4, 8, 16, 32] {
        assert!(size(n) <= 8 * n * n, "size {} for {n} arrays", size(n));
    }
    assert!(size(32) < 5 * size(16));
}

#[test]
fn abd_terms_examples() {
    let set = |xs: &[&str]| xs.iter().map(|x| t(x)).collect::<BTreeSet<Term>>();
    let got = |a: &str, b: &str| abd_terms(&h(a), &h(b)).iter().cloned().collect::<BTreeSet<Term>>();
    assert_eq!(got("arr(a, b)", "arr(c, d)"), set(&["a", "b", "c", "d", "b + 1", "d + 1"]));
    let terms = abd_terms(&h("a + 1 |-> b1"), &h("arr(a + 2, a + 2)"));
    assert_eq!(terms.len(), 4);
    assert_eq!(terms.iter().cloned().collect::<BTreeSet<_>>(), set(&["a + 1", "b1", "a + 2", "a + 3"]));
    assert!(abd_terms(&h("emp"), &h("emp")).is_empty());
}

#[test]
fn beta_examples() {
    let (a, b) = (h("k < n : arr(b;0,k-1) * arr(b;k,n-1)"), h("arr(m;0,k-1) * arr(b;0,k-1)"));
    let be = beta(&a, &b).unwrap();
    agrees(&be, &vars_of(&[&a, &b], &[]), 3, |s| model_exists(&a, s) && model_exists(&b, s));
    let (a, b) = (h("arr(a, b)"), h("v |-> w"));
    let be = beta(&a, &b).unwrap();
    agrees(&be, &vars_of(&[&a, &b], &[]), 3, |s| {
        let v = |n: &str| s[&Var::new(n)];
        v("a") <= v("b") && (v("v") < v("a") || v("v") > v("b"))
    });
    let (a, b) = (h("x |-> p"), h("x |-> q"));
    let be = beta(&a, &b).unwrap();
    agrees(&be, &vars_of(&[&a, &b], &[]), 3, |s| s[&Var::new("p")] == s[&Var::new("q")]);
}

/// Whether some location is in the footprint of `a` but not in that of `b`.
fn footprint_difference(a: &SymbolicHeap, b: &SymbolicHeap, s: &RefStack) -> bool {
    let cells = |x: &SymbolicHeap| -> BTreeSet<u64> {
        let x = abstr(&x.qf()).unwrap();
        x.arrays().iter().flat_map(|(l, r)| eval(l, s)..=eval(r, s)).collect()
    };
    !cells(a).is_subset(&cells(b))
}

#[test]
fn phi_examples() {
    let p = phi_qf(&h("arr(1, 2)"), &h("arr(5, 6)"));
    assert_eq!(p.eval(&RefStack::new()), Some(true));
    let a = h("arr(a, b)");
    let p = phi_qf(&a, &a);
    assert!(check_exists(&asl::arith::ArithSentence::exists(p.vars().into_iter().collect(), p)).unwrap().is_unsat());
    let (a, b) = (h("arr(a, b)"), h("arr(c, d)"));
    let p = phi_qf(&a, &b);
    agrees(&p, &vars_of(&[&a, &b], &[]), 4, |s| footprint_difference(&a, &b, s));
}

#[test]
fn phi_matches_a_brute_force_witness_search() {
    for seed in 0..150 {
        let (a, b) = gen_random_pair(seed, &RandomConfig { vars: 3, arrays: 2, points_to: 1, pure_atoms: 0, max_offset: 2 });
        let p = phi_qf(&a, &b);
        agrees(&p, &vars_of(&[&a, &b], &[]), 3, |s| footprint_difference(&a, &b, s));
        let p = phi_qf(&h("EX z. arr(z, z) * x |-> y"), &b);
        let qa = h("arr(z, z) * x |-> y");
        agrees(&p, &vars_of(&[&qa, &b], &[]), 3, |s| footprint_difference(&qa, &b, s));
    }
}

#[test]
fn psi_examples() {
    let p = psi1(&h("arr(a, b)"), &h("v |-> w"));
    agrees(&p, &p.vars(), 3, |s| s[&Var::new("a")] <= s[&Var::new("v")] && s[&Var::new("v")] <= s[&Var::new("b")]);
    let p = psi2(&h("t |-> u"), &h("v |-> w"));
    agrees(&p, &p.vars(), 2, |s| s[&Var::new("t")] == s[&Var::new("v")] && s[&Var::new("u")] != s[&Var::new("w")]);
    assert!(psi1(&h("x |-> y"), &h("arr(a, b)")).is_false());
    assert!(psi2(&h("arr(a, b)"), &h("x |-> y")).is_false());
}

#[test]
fn chi_examples() {
    let a = h("arr(x, y) * z |-> w");
    let s = chi(&a, &h("arr(x, y)")).unwrap();
    assert!(s.universal_vars().is_empty());
    let s = chi(&h("arr(x, x)"), &h("x |-> y")).unwrap();
    let SatResult::Sat(m) = check_exists(&s).unwrap() else { panic!("countermodel expected") };
    assert!(m.contains_key(&Var::new("y")));
    for a in ["arr(x, y) * z |-> w", "x < y : arr(x, y)", "emp", "x |-> y * y |-> x"] {
        let a = h(a);
        assert!(check_exists(&chi(&a, &a).unwrap()).unwrap().is_unsat(), "{a}");
    }
    assert_eq!(chi(&h("arr(x, x)"), &h("EX y. x |-> y")).unwrap_err(), EncodingError::Restriction(Var::new("y")));
    assert_eq!(chi(&h("EX y. arr(x, y)"), &h("emp")).unwrap_err(), EncodingError::Quantified);
}

/// Whether `(s, h) |= b` can fail for some heap `h` with `(s, h) |= a`, for
/// quantifier-free `a` and `b`. Array cells of `a` may hold a value that no
/// destination of `b` takes, so only forced cells are compared.
fn countermodel_at(a: &SymbolicHeap, b: &SymbolicHeap, s: &RefStack) -> bool {
    if !model_exists(a, s) {
        return false;
    }
    if !model_exists(b, s) {
        return true;
    }
    let (fa, fb) = (footprint(a, s).unwrap(), footprint(b, s).unwrap());
    let cells = |f: &[(u64, u64)]| f.iter().flat_map(|(l, r)| *l..=*r).collect::<BTreeSet<u64>>();
    if cells(&fa) != cells(&fb) {
        return true;
    }
    let pa: Vec<(u64, u64)> = a.points_to().iter().map(|(x, y)| (eval(x, s), eval(y, s))).collect();
    b.points_to().iter().any(|(v, w)| {
        let (v, w) = (eval(v, s), eval(w, s));
        match pa.iter().find(|(x, _)| *x == v) {
            Some((_, y)) => *y != w,
            None => true,
        }
    })
}

#[test]
fn chi_characterises_countermodels_at_each_stack() {
    let cfg = RandomConfig { vars: 3, arrays: 2, points_to: 1, pure_atoms: 1, max_offset: 2 };
    for seed in 0..150 {
        let (a, b) = gen_random_pair(seed, &cfg);
        let s = chi(&a, &b).unwrap();
        agrees(&s.body, &vars_of(&[&a, &b], &[]), 3, |st| countermodel_at(&a, &b, st));
    }
}
