//! Reference implementations shared by the integration tests. They are
//! written directly from the stack-heap semantics and deliberately avoid the
//! library's own evaluation code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use asl::syntax::parse_symbolic_heap;
use asl::{PureAtom, Rel, SpatialAtom, SymbolicHeap, Term, Var};

pub type RefStack = BTreeMap<Var, u64>;
pub type RefHeap = BTreeMap<u64, u64>;

pub fn h(s: &str) -> SymbolicHeap {
    parse_symbolic_heap(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

pub fn eval(t: &Term, s: &RefStack) -> u64 {
    t.coeffs().map(|(v, c)| c * s[v]).sum::<u64>() + t.constant_part()
}

pub fn atom_true(a: &PureAtom, s: &RefStack) -> bool {
    let (l, r) = (eval(&a.lhs, s), eval(&a.rhs, s));
    match a.rel {
        Rel::Eq => l == r,
        Rel::Ne => l != r,
        Rel::Le => l <= r,
        Rel::Lt => l < r,
    }
}

/// Footprint intervals of a quantifier-free heap, or `None` when an array is
/// empty or two footprints overlap.
pub fn footprint(a: &SymbolicHeap, s: &RefStack) -> Option<Vec<(u64, u64)>> {
    let mut out: Vec<(u64, u64)> = Vec::new();
    for atom in &a.spatial {
        let iv = match atom {
            SpatialAtom::Emp => continue,
            SpatialAtom::PointsTo { src, .. } => (eval(src, s), eval(src, s)),
            SpatialAtom::Array { lo, hi } => (eval(lo, s), eval(hi, s)),
        };
        if iv.0 > iv.1 || out.iter().any(|o| !(o.1 < iv.0 || iv.1 < o.0)) {
            return None;
        }
        out.push(iv);
    }
    Some(out)
}

/// Whether some heap satisfies the quantifier-free `a` under `s`.
pub fn model_exists(a: &SymbolicHeap, s: &RefStack) -> bool {
    a.pure.iter().all(|p| atom_true(p, s)) && footprint(a, s).is_some()
}

/// The heap laid out from the footprint, points-to cells holding their
/// destinations and array cells `fill`.
pub fn layout(a: &SymbolicHeap, s: &RefStack, fill: u64) -> Option<RefHeap> {
    footprint(a, s)?;
    let mut hp = RefHeap::new();
    for atom in &a.spatial {
        match atom {
            SpatialAtom::Emp => {}
            SpatialAtom::PointsTo { src, dst } => {
                hp.insert(eval(src, s), eval(dst, s));
            }
            SpatialAtom::Array { lo, hi } => {
                for x in eval(lo, s)..=eval(hi, s) {
                    hp.insert(x, fill);
                }
            }
        }
    }
    Some(hp)
}

/// Every stack over `vars` with values in `0..=bound`.
pub fn stacks(vars: &BTreeSet<Var>, bound: u64) -> Vec<RefStack> {
    let vars: Vec<&Var> = vars.iter().collect();
    let mut out = Vec::new();
    let mut vals = vec![0u64; vars.len()];
    loop {
        out.push(vars.iter().map(|v| (*v).clone()).zip(vals.iter().copied()).collect());
        let mut i = 0;
        loop {
            if i == vals.len() {
                return out;
            }
            if vals[i] < bound {
                vals[i] += 1;
                break;
            }
            vals[i] = 0;
            i += 1;
        }
    }
}

/// An external solver named by `ASL_SMT_SOLVER`, or `z3` on the path.
pub fn external_solver() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("ASL_SMT_SOLVER") {
        return Some(PathBuf::from(p));
    }
    std::env::var_os("PATH").and_then(|paths| std::env::split_paths(&paths).map(|d| d.join("z3")).find(|p| p.is_file()))
}

/// Whether the items split into triples that all sum to `bound`.
pub fn three_partition_exists(bound: u64, items: &[u64]) -> bool {
    fn go(bound: u64, rest: &mut Vec<u64>) -> bool {
        let Some(first) = rest.pop() else { return true };
        for i in 0..rest.len() {
            for j in i + 1..rest.len() {
                if first + rest[i] + rest[j] == bound {
                    let mut next: Vec<u64> = rest.iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, x)| *x).collect();
                    if go(bound, &mut next) {
                        return true;
                    }
                }
            }
        }
        rest.push(first);
        false
    }
    go(bound, &mut items.to_vec())
}

/// Every proper 3-colouring of `edges` over vertices `1..=n`.
pub fn colourings(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let col: Vec<u8> = (0..n).map(|i| ((code / 3usize.pow(i as u32)) % 3) as u8).collect();
        if edges.iter().all(|&(a, b)| col[a - 1] != col[b - 1]) {
            out.push(col);
        }
    }
    out
}

/// Whether every colouring of the leaves `1..=k` extends to a proper
/// 3-colouring of the whole graph.
pub fn every_leaf_colouring_extends(n: usize, k: usize, edges: &[(usize, usize)]) -> bool {
    let proper = colourings(n, edges);
    (0..3usize.pow(k as u32)).all(|code| {
        let leaves: Vec<u8> = (0..k).map(|i| ((code / 3usize.pow(i as u32)) % 3) as u8).collect();
        proper.iter().any(|c| c[..k] == leaves[..])
    })
}
