mod common;

use std::collections::BTreeSet;

use asl::arith::{check_exists, check_order_entails, ArithSentence, BoolExpr};
use asl::benchgen::{gen_random_pair, RandomConfig};
use asl::biabduction::{
    arrcov, derive_seed, enumerate_seeds, ptocov, solution_from_seed, solve_biabduction, solve_biabduction_all, verify_solution, weaken_solution,
    BiabductionError, BiabductionOptions, BiabductionOutcome, BiabductionSolution, SolutionSeed, Verification,
};
use asl::encodings::beta;
use asl::satcheck::{is_sat, SatStatus};
use asl::syntax::{parse_problem, parse_term};
use asl::{PureAtom, SpatialAtom, SymbolicHeap, Term, Var};
use common::h;

fn t(s: &str) -> Term {
    parse_term(s).unwrap()
}

/// The two heaps of the array-shifting example, parsed as one problem so that
/// `k - 1` names the same fresh variable on both sides.
fn shift_put() -> (SymbolicHeap, SymbolicHeap) {
    let p = parse_problem("lhs: k < n : arr(b;0,k-1) * arr(b;k,n-1)\nrhs: arr(m;0,k-1) * arr(b;0,k-1)\n").unwrap();
    (p.lhs, p.rhs.unwrap())
}

fn solution(x: SymbolicHeap, y: SymbolicHeap) -> BiabductionSolution {
    BiabductionSolution { delta_hat: x.pure.clone(), x, y, by_satisfiable: false, verified: false }
}

fn weakened() -> BiabductionOptions {
    BiabductionOptions { weaken: true, ..BiabductionOptions::default() }
}

fn seed_is_valid(a: &SymbolicHeap, b: &SymbolicHeap, seed: &SolutionSeed) {
    let delta = BoolExpr::and(seed.order.iter().cloned().map(BoolExpr::Atom));
    assert!(check_exists(&ArithSentence::exists(vec![], delta)).unwrap().is_sat());
    let be = beta(a, &b.qf()).unwrap();
    assert!(check_order_entails(&seed.order, &be).holds);
    let refute = BoolExpr::and(seed.order.iter().cloned().map(BoolExpr::Atom).chain([be.negate()]));
    assert!(check_exists(&ArithSentence::exists(vec![], refute)).unwrap().is_unsat());
}

#[test]
fn seed_examples() {
    let (a, b) = (h("a + 1 |-> b1"), h("arr(a + 2, a + 2)"));
    let seed = derive_seed(&a, &b).unwrap().unwrap();
    seed_is_valid(&a, &b, &seed);
    assert!(seed.lt(&t("b1"), &t("a + 1")).unwrap());
    assert!(seed.lt(&t("a + 1"), &t("a + 2")).unwrap());
    assert!(seed.lt(&t("a + 2"), &t("a + 3")).unwrap());
    assert_eq!(seed.order.len(), 6);
    assert!(matches!(seed.lt(&t("q"), &t("a")), Err(BiabductionError::UnknownTerm(_))));

    assert_eq!(derive_seed(&h("a = 1 /\\ b = 2 : x |-> a"), &h("x |-> b")).unwrap(), None);
    let seed = derive_seed(&h("emp"), &h("emp")).unwrap().unwrap();
    assert!(seed.order.is_empty() && seed.terms.is_empty());
}

#[test]
fn seed_enumeration() {
    let (a, b) = shift_put();
    let seeds = enumerate_seeds(&a, &b, 10).unwrap();
    assert!(seeds.len() >= 2);
    let orders: BTreeSet<String> = seeds.iter().map(|s| format!("{:?}", s.order)).collect();
    assert_eq!(orders.len(), seeds.len());
    for s in &seeds {
        seed_is_valid(&a, &b, s);
    }
    let m_first = |s: &SolutionSeed| s.lt(&t("m"), &t("b")).unwrap();
    assert!(seeds.iter().any(m_first) && !seeds.iter().all(m_first));
    assert!(enumerate_seeds(&h("a = 1 /\\ b = 2 : x |-> a"), &h("x |-> b"), 10).unwrap().is_empty());
    assert!(enumerate_seeds(&a, &b, 0).unwrap().is_empty());
}

#[test]
fn arrcov_examples() {
    let (a, b) = (h("a + 1 |-> b1"), h("arr(a + 2, a + 2)"));
    let seed = derive_seed(&a, &b).unwrap().unwrap();
    let r = arrcov(&a, &seed, &t("a + 2"), &t("a + 2")).unwrap();
    assert_eq!(r.spatial, vec![SpatialAtom::array(t("a + 2"), t("a + 2"))]);
    assert!(r.extra_pure.is_empty());
    let r = arrcov(&a, &seed, &t("a + 3"), &t("a + 2")).unwrap();
    assert!(r.spatial.is_empty() || r.spatial == vec![SpatialAtom::Emp]);
    assert!(matches!(arrcov(&a, &seed, &t("z"), &t("a + 2")), Err(BiabductionError::UnknownTerm(_))));

    let (a, b) = (h("arr(3, 5)"), h("arr(1, 8)"));
    let seed = derive_seed(&a, &b).unwrap().unwrap();
    let r = arrcov(&a, &seed, &t("1"), &t("8")).unwrap();
    assert_eq!(r.extra_pure.len(), 1);
    let p = r.extra_pure[0].rhs.as_var_plus_const().map(|(v, _)| v.clone()).unwrap();
    assert!(!a.names().contains(&p) && !b.names().contains(&p));
    assert_eq!(r.extra_pure[0], PureAtom::eq(t("3"), Term::var(p.clone()).add_const(1)));
    assert_eq!(r.spatial, vec![SpatialAtom::array(t("1"), Term::var(p)), SpatialAtom::array(t("6"), t("8"))]);
    assert!(r.calls <= 2 + 1);
}

#[test]
fn ptocov_examples() {
    let (a, b) = (h("x |-> y * arr(p, q)"), h("x |-> y * p + 1 |-> z * w |-> z"));
    let Some(seed) = derive_seed(&a, &b).unwrap() else { panic!("seed expected") };
    assert!(ptocov(&a, &seed, &t("x"), &t("y")).unwrap().spatial.iter().all(|s| *s == SpatialAtom::Emp));
    if seed.le(&t("p"), &t("p + 1")).unwrap() && seed.le(&t("p + 1"), &t("q")).unwrap() {
        assert!(ptocov(&a, &seed, &t("p + 1"), &t("z")).unwrap().spatial.iter().all(|s| *s == SpatialAtom::Emp));
    }
    let covered = seed.eq(&t("w"), &t("x")).unwrap() || (seed.le(&t("p"), &t("w")).unwrap() && seed.le(&t("w"), &t("q")).unwrap());
    let r = ptocov(&a, &seed, &t("w"), &t("z")).unwrap();
    if covered {
        assert!(r.spatial.iter().all(|s| *s == SpatialAtom::Emp));
    } else {
        assert_eq!(r.spatial, vec![SpatialAtom::points_to(t("w"), t("z"))]);
    }
}

#[test]
fn build_max_heap_step() {
    let (a, b) = (h("a + 1 |-> b1"), h("arr(a;2,2)"));
    let BiabductionOutcome::Solution(sol) = solve_biabduction(&a, &b, &weakened()).unwrap() else { panic!("solution expected") };
    assert!(sol.verified);
    assert_eq!(sol.x.spatial, vec![SpatialAtom::array(t("a + 2"), t("a + 2"))]);
    assert_eq!(sol.y.spatial, vec![SpatialAtom::array(t("a + 1"), t("a + 1"))]);
    assert_eq!(verify_solution(&a, &b, &sol).unwrap(), Verification::Holds);
}

#[test]
fn shift_put_solutions() {
    let (a, b) = shift_put();
    let sols = solve_biabduction_all(&a, &b, 10, &weakened()).unwrap();
    assert!(!sols.is_empty());
    for s in &sols {
        assert!(s.verified);
        assert_eq!(verify_solution(&a, &b, s).unwrap(), Verification::Holds);
    }
    let m_block = b.spatial[0].clone();
    let tail_block = a.spatial[1].clone();
    assert!(sols.iter().any(|s| s.x.spatial == vec![m_block.clone()] && s.y.spatial == vec![tail_block.clone()]));
}

#[test]
fn no_solution_and_rejected_inputs() {
    let out = solve_biabduction(&h("a = 1 /\\ b = 2 : x |-> a"), &h("x |-> b"), &BiabductionOptions::default()).unwrap();
    assert_eq!(out, BiabductionOutcome::NoSolution);
    let opts = BiabductionOptions::default();
    assert!(matches!(solve_biabduction(&h("EX z. arr(z, z)"), &h("emp"), &opts), Err(BiabductionError::QuantifiedLhs)));
    assert!(matches!(solve_biabduction(&h("emp"), &h("EX y. x |-> y"), &opts), Err(BiabductionError::Restriction(v)) if v == Var::new("y")));
    assert!(matches!(solve_biabduction(&h("x < x : emp"), &h("emp"), &opts), Err(BiabductionError::Unsatisfiable("left"))));
    assert!(matches!(solve_biabduction(&h("emp"), &h("x < x : emp"), &opts), Err(BiabductionError::Unsatisfiable("right"))));
}

#[test]
fn verification_examples() {
    let (a, b) = shift_put();
    let expected = solution(SymbolicHeap::new(vec![], vec![b.spatial[0].clone()]), SymbolicHeap::new(vec![], vec![a.spatial[1].clone()]));
    assert_eq!(verify_solution(&a, &b, &expected).unwrap(), Verification::Holds);
    let (a, b) = (h("emp"), h("arr(c, d)"));
    assert_eq!(verify_solution(&a, &b, &solution(h("arr(c, d)"), h("emp"))).unwrap(), Verification::Holds);
    assert_eq!(verify_solution(&a, &b, &solution(h("emp"), h("emp"))).unwrap(), Verification::Fails);
    assert_eq!(verify_solution(&h("arr(c, c)"), &b, &solution(h("c < c : emp"), h("emp"))).unwrap(), Verification::Fails);
}

#[test]
fn weakening_examples() {
    let (a, b) = shift_put();
    let x1 = SymbolicHeap::new(vec![PureAtom::le(t("m + k"), t("b"))], vec![b.spatial[0].clone()]);
    let y1 = SymbolicHeap::new(x1.pure.clone(), vec![a.spatial[1].clone()]);
    let mut sol = solution(x1, y1);
    assert_eq!(verify_solution(&a, &b, &sol).unwrap(), Verification::Holds);
    sol.verified = true;
    let w = weaken_solution(&a, &b, &sol).unwrap();
    assert!(w.verified && w.x.pure.is_empty() && w.delta_hat.is_empty());
    assert_eq!(w.x.spatial, sol.x.spatial);
    assert_eq!(w.y.spatial, sol.y.spatial);

    let (a, b) = (h("emp"), h("x = 1 : arr(x, x)"));
    let mut sol = solution(h("x = 1 : arr(x, x)"), h("x = 1 : emp"));
    sol.verified = true;
    let w = weaken_solution(&a, &b, &sol).unwrap();
    assert_eq!((w.x, w.y), (sol.x.clone(), sol.y.clone()));

    let mut sol = solution(h("emp"), h("emp"));
    sol.verified = true;
    let w = weaken_solution(&h("emp"), &h("emp"), &sol).unwrap();
    assert_eq!((w.x, w.y), (sol.x, sol.y));
}

/// `delta |= atom` via the order scan.
fn entailed(delta: &[PureAtom], atom: BoolExpr) -> bool {
    check_order_entails(delta, &atom).holds
}

#[test]
fn constructions_from_every_seed_are_sound() {
    let cfg = RandomConfig { vars: 3, arrays: 2, points_to: 1, pure_atoms: 1, max_offset: 2 };
    let mut solved = 0;
    for seed in 0..120 {
        let (a, b) = gen_random_pair(seed + 9_000, &cfg);
        if is_sat(&a).status != SatStatus::Sat || is_sat(&b).status != SatStatus::Sat {
            continue;
        }
        for s in enumerate_seeds(&a, &b, 3).unwrap() {
            seed_is_valid(&a, &b, &s);
            let (sol, trace) = solution_from_seed(&a, &b, &s).unwrap();
            assert_eq!(verify_solution(&a, &b, &sol).unwrap(), Verification::Holds, "{a} / {b}");
            solved += 1;
            for (e, f, r, n) in &trace.covers {
                assert!(r.calls >= 1 && r.calls - 1 <= *n, "{} calls over {n} intervals", r.calls);
                let arrays: Vec<(Term, Term)> = r
                    .spatial
                    .iter()
                    .filter_map(|x| match x {
                        SpatialAtom::Array { lo, hi } => Some((lo.clone(), hi.clone())),
                        _ => None,
                    })
                    .collect();
                for (l, rr) in &arrays {
                    for atom in [BoolExpr::le(e.clone(), l.clone()), BoolExpr::le(l.clone(), rr.clone()), BoolExpr::le(rr.clone(), f.clone())] {
                        assert!(entailed(&sol.delta_hat, atom.clone()), "{atom} for cover of [{e}, {f}]");
                    }
                }
                for w in arrays.windows(2) {
                    assert!(entailed(&sol.delta_hat, BoolExpr::lt(w[0].1.clone(), w[1].0.clone())));
                }
            }
        }
    }
    assert!(solved > 50, "{solved} constructions");
}

#[test]
fn quantified_right_sides_reduce_to_their_bodies() {
    let cases = [
        ("x < y : arr(x, y)", "EX z. x <= z : arr(z, z + 1)"),
        ("arr(x, x + 2)", "EX z. z < x + 3 : arr(x, z)"),
        ("x |-> 4", "EX z. arr(z, z) * x |-> w"),
        ("a = 1 /\\ b = 2 : x |-> a", "EX z. z = 1 : x |-> b * arr(z + 5, z + 5)"),
    ];
    for (a, b) in cases {
        let (a, b) = (h(a), h(b));
        let opts = BiabductionOptions::default();
        let full = solve_biabduction(&a, &b, &opts).unwrap();
        let body = solve_biabduction(&a, &b.qf(), &opts).unwrap();
        assert_eq!(matches!(full, BiabductionOutcome::Solution(_)), matches!(body, BiabductionOutcome::Solution(_)), "{a} / {b}");
        if let BiabductionOutcome::Solution(s) = full {
            assert_eq!(verify_solution(&a, &b, &s).unwrap(), Verification::Holds, "{a} / {b}");
        }
    }
}
