//! Stack-heap semantics and the bounded brute-force oracle.
//!
//! Existential prefixes are decided by enumerating instantiations within a
//! user-supplied bound, so `holds` is exact for quantifier-free heaps and a
//! bounded approximation otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{PureAtom, SpatialAtom, SymbolicHeap, Term, Var};

/// Values of variables.
pub type Stack = BTreeMap<Var, u64>;
/// A finite partial map from addresses to values.
pub type Heap = BTreeMap<u64, u64>;

/// Enumeration limits of the oracle: stack values and instantiations range
/// over `0..=stack_bound`, array cell contents over `0..=value_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub stack_bound: u64,
    pub value_bound: u64,
}

impl Bounds {
    pub fn new(stack_bound: u64, value_bound: u64) -> Self {
        Bounds { stack_bound, value_bound }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("variable {0} has no value in the stack")]
    UnboundVariable(Var),
    #[error("arithmetic overflow while evaluating {0}")]
    Overflow(Term),
    #[error("the left-hand side must be quantifier-free")]
    QuantifiedLhs,
    #[error("malformed {what} literal: {text}")]
    Literal { what: &'static str, text: String },
}

pub fn eval_term(t: &Term, s: &Stack) -> Result<u64, SemanticsError> {
    let mut acc = t.constant_part();
    for (v, c) in t.coeffs() {
        let x = *s.get(v).ok_or_else(|| SemanticsError::UnboundVariable(v.clone()))?;
        acc = c.checked_mul(x).and_then(|p| acc.checked_add(p)).ok_or_else(|| SemanticsError::Overflow(t.clone()))?;
    }
    Ok(acc)
}

fn atom_holds(a: &PureAtom, s: &Stack) -> Result<bool, SemanticsError> {
    Ok(a.holds(eval_term(&a.lhs, s)?, eval_term(&a.rhs, s)?))
}

/// Footprint of one spatial atom: the address interval it occupies and, for
/// points-to atoms, the required content.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cell {
    lo: u64,
    hi: u64,
    content: Option<u64>,
}

/// The footprints of a quantifier-free spatial part, or `None` when an array
/// is empty or two atoms overlap.
fn footprints(spatial: &[SpatialAtom], s: &Stack) -> Result<Option<Vec<Cell>>, SemanticsError> {
    let mut cells = Vec::with_capacity(spatial.len());
    for atom in spatial {
        match atom {
            SpatialAtom::Emp => {}
            SpatialAtom::PointsTo { src, dst } => {
                let a = eval_term(src, s)?;
                cells.push(Cell { lo: a, hi: a, content: Some(eval_term(dst, s)?) });
            }
            SpatialAtom::Array { lo, hi } => {
                let (l, h) = (eval_term(lo, s)?, eval_term(hi, s)?);
                if l > h {
                    return Ok(None);
                }
                cells.push(Cell { lo: l, hi: h, content: None });
            }
        }
    }
    let mut sorted = cells.clone();
    sorted.sort_by_key(|c| c.lo);
    if sorted.windows(2).any(|w| w[1].lo <= w[0].hi) {
        return Ok(None);
    }
    Ok(Some(cells))
}

fn spatial_holds(spatial: &[SpatialAtom], s: &Stack, h: &Heap) -> Result<bool, SemanticsError> {
    let Some(cells) = footprints(spatial, s)? else {
        return Ok(false);
    };
    let mut total: u64 = 0;
    for c in &cells {
        let size = c.hi - c.lo + 1;
        total = total.saturating_add(size);
        if total > h.len() as u64 {
            return Ok(false);
        }
        match c.content {
            Some(v) => {
                if h.get(&c.lo) != Some(&v) {
                    return Ok(false);
                }
            }
            None => {
                if h.range(c.lo..=c.hi).count() as u64 != size {
                    return Ok(false);
                }
            }
        }
    }
    Ok(total == h.len() as u64)
}

fn qf_holds(a: &SymbolicHeap, s: &Stack, h: &Heap) -> Result<bool, SemanticsError> {
    for p in &a.pure {
        if !atom_holds(p, s)? {
            return Ok(false);
        }
    }
    spatial_holds(&a.spatial, s, h)
}

/// Checks that every free variable of `a` has a value.
fn require_stack(a: &SymbolicHeap, s: &Stack) -> Result<(), SemanticsError> {
    match a.fv().into_iter().find(|v| !s.contains_key(v)) {
        Some(v) => Err(SemanticsError::UnboundVariable(v)),
        None => Ok(()),
    }
}

/// A constraint checked as soon as all variables it mentions are assigned.
enum Check<'a> {
    Pure(&'a PureAtom),
    PointsTo(&'a Term, &'a Term),
    Array(&'a Term, &'a Term),
}

impl Check<'_> {
    fn terms(&self) -> Vec<&Term> {
        match self {
            Check::Pure(a) => vec![&a.lhs, &a.rhs],
            Check::PointsTo(x, y) | Check::Array(x, y) => vec![*x, *y],
        }
    }

    fn holds(&self, s: &Stack, h: Option<&Heap>) -> Result<bool, SemanticsError> {
        match self {
            Check::Pure(a) => atom_holds(a, s),
            Check::PointsTo(src, dst) => {
                let (a, v) = (eval_term(src, s)?, eval_term(dst, s)?);
                Ok(h.is_none_or(|h| h.get(&a) == Some(&v)))
            }
            Check::Array(lo, hi) => {
                let (l, u) = (eval_term(lo, s)?, eval_term(hi, s)?);
                Ok(l <= u && h.is_none_or(|h| h.range(l..=u).count() as u64 == u - l + 1))
            }
        }
    }
}

/// Depth-first enumeration of values for `vars` over `0..=bound`, running
/// each check at the first level where its variables are all assigned.
struct Search<'a> {
    vars: Vec<Var>,
    bound: u64,
    levels: Vec<Vec<Check<'a>>>,
}

impl<'a> Search<'a> {
    /// `known` are variables already fixed in the stack passed to `run`.
    fn new(vars: Vec<Var>, bound: u64, checks: Vec<Check<'a>>, known: &BTreeSet<Var>) -> Self {
        let mut levels: Vec<Vec<Check<'a>>> = (0..=vars.len()).map(|_| Vec::new()).collect();
        for c in checks {
            let mut level = 0;
            for t in c.terms() {
                for v in t.vars() {
                    if let Some(i) = vars.iter().position(|w| w == v) {
                        level = level.max(i + 1);
                    } else {
                        debug_assert!(known.contains(v));
                    }
                }
            }
            levels[level].push(c);
        }
        Search { vars, bound, levels }
    }

    fn run(&self, s: &mut Stack, h: Option<&Heap>, visit: &mut dyn FnMut(&Stack) -> Result<bool, SemanticsError>) -> Result<bool, SemanticsError> {
        self.go(0, s, h, visit)
    }

    fn go(&self, i: usize, s: &mut Stack, h: Option<&Heap>, visit: &mut dyn FnMut(&Stack) -> Result<bool, SemanticsError>) -> Result<bool, SemanticsError> {
        for c in &self.levels[i] {
            if !c.holds(s, h)? {
                return Ok(false);
            }
        }
        if i == self.vars.len() {
            return visit(s);
        }
        for value in 0..=self.bound {
            s.insert(self.vars[i].clone(), value);
            if self.go(i + 1, s, h, visit)? {
                return Ok(true);
            }
        }
        s.remove(&self.vars[i]);
        Ok(false)
    }
}

fn checks_of(a: &SymbolicHeap) -> Vec<Check<'_>> {
    let mut out: Vec<Check<'_>> = a.pure.iter().map(Check::Pure).collect();
    for s in &a.spatial {
        match s {
            SpatialAtom::Emp => {}
            SpatialAtom::PointsTo { src, dst } => out.push(Check::PointsTo(src, dst)),
            SpatialAtom::Array { lo, hi } => out.push(Check::Array(lo, hi)),
        }
    }
    out
}

/// `(s, h) |= a`. Bound variables are instantiated over
/// `0..=bounds.stack_bound`; free variables must all be in `s`.
pub fn holds(s: &Stack, h: &Heap, a: &SymbolicHeap, bounds: Bounds) -> Result<bool, SemanticsError> {
    require_stack(a, s)?;
    if a.bound.is_empty() {
        return qf_holds(a, s, h);
    }
    let occurring = a.all_vars();
    let bvars: Vec<Var> = a.bound.iter().filter(|v| occurring.contains(*v)).cloned().collect();
    let mut ext = s.clone();
    for v in &a.bound {
        ext.remove(v);
    }
    let known: BTreeSet<Var> = ext.keys().cloned().collect();
    let search = Search::new(bvars, bounds.stack_bound, checks_of(a), &known);
    let qf = a.qf();
    search.run(&mut ext, Some(h), &mut |st| qf_holds(&qf, st, h))
}

/// The unique subheap of `h` satisfying the quantifier-free heap `a` under
/// `s`, or `None` when no subheap does.
pub fn cut_subheap(s: &Stack, h: &Heap, a: &SymbolicHeap) -> Result<Option<Heap>, SemanticsError> {
    if !a.is_quantifier_free() {
        return Err(SemanticsError::QuantifiedLhs);
    }
    require_stack(a, s)?;
    for p in &a.pure {
        if !atom_holds(p, s)? {
            return Ok(None);
        }
    }
    let Some(cells) = footprints(&a.spatial, s)? else {
        return Ok(None);
    };
    let mut sub = Heap::new();
    for c in cells {
        if let Some(v) = c.content {
            if h.get(&c.lo) != Some(&v) {
                return Ok(None);
            }
        }
        for addr in c.lo..=c.hi {
            match h.get(&addr) {
                Some(v) => {
                    sub.insert(addr, *v);
                }
                None => return Ok(None),
            }
        }
    }
    Ok(Some(sub))
}

/// The heap forced by the footprints of a quantifier-free spatial part, with
/// array cells holding `fill`.
fn forced_heap(cells: &[Cell], fill: u64) -> Heap {
    let mut h = Heap::new();
    for c in cells {
        for addr in c.lo..=c.hi {
            h.insert(addr, c.content.unwrap_or(fill));
        }
    }
    h
}

/// The heap whose domain is the footprint of the quantifier-free spatial part
/// of `a` under `s`, with points-to cells holding their destinations and
/// array cells holding `fill`. `None` when the footprint is ill-formed.
pub fn footprint_heap(a: &SymbolicHeap, s: &Stack, fill: u64) -> Result<Option<Heap>, SemanticsError> {
    Ok(footprints(&a.spatial, s)?.map(|cells| forced_heap(&cells, fill)))
}

/// The variables ordered by first occurrence in `pure`, the others last, so
/// that pure atoms prune the search as early as possible.
fn search_order(vars: BTreeSet<Var>, pure: &[PureAtom]) -> Vec<Var> {
    let mut out: Vec<Var> = Vec::with_capacity(vars.len());
    for v in pure.iter().flat_map(|p| p.vars()) {
        if vars.contains(v) && !out.contains(v) {
            out.push(v.clone());
        }
    }
    out.extend(vars.into_iter().filter(|v| !out.contains(v)).collect::<Vec<_>>());
    out
}

/// Searches for a model of `a` whose stack values (and instantiations of
/// bound variables) lie in `0..=stack_bound`.
pub fn oracle_find_model(a: &SymbolicHeap, bounds: Bounds) -> Result<Option<(Stack, Heap)>, SemanticsError> {
    let qf = a.qf();
    let vars = search_order(qf.all_vars(), &qf.pure);
    let checks = qf.pure.iter().map(Check::Pure).collect();
    let search = Search::new(vars, bounds.stack_bound, checks, &BTreeSet::new());
    let mut found = None;
    let fv = a.fv();
    search.run(&mut Stack::new(), None, &mut |st| {
        let Some(cells) = footprints(&qf.spatial, st)? else {
            return Ok(false);
        };
        let h = forced_heap(&cells, 0);
        let s: Stack = st.iter().filter(|(v, _)| fv.contains(*v)).map(|(v, x)| (v.clone(), *x)).collect();
        found = Some((s, h));
        Ok(true)
    })?;
    Ok(found)
}

/// Addresses that a points-to atom of `b` can denote under `s`, letting the
/// bound variables of `b` range over `0..=stack_bound`.
fn pointer_targets(b: &SymbolicHeap, s: &Stack, stack_bound: u64) -> Result<BTreeSet<u64>, SemanticsError> {
    let mut out = BTreeSet::new();
    for (src, _) in b.points_to() {
        let open: Vec<Var> = src.vars().filter(|v| b.bound.contains(v)).cloned().collect();
        let mut st = s.clone();
        for v in &b.bound {
            st.remove(v);
        }
        let known: BTreeSet<Var> = st.keys().cloned().collect();
        let search = Search::new(open, stack_bound, vec![], &known);
        search.run(&mut st, None, &mut |st| {
            out.insert(eval_term(&src, st)?);
            Ok(false)
        })?;
    }
    Ok(out)
}

/// Searches for `(s, h)` with `(s, h) |= a` and not `(s, h) |= b`. Stacks
/// range over `0..=stack_bound`; array cells that some points-to atom of `b`
/// can read range over `0..=value_bound`, all other cells hold 0 since no
/// atom of either side inspects them.
pub fn oracle_find_countermodel(a: &SymbolicHeap, b: &SymbolicHeap, bounds: Bounds) -> Result<Option<(Stack, Heap)>, SemanticsError> {
    if !a.is_quantifier_free() {
        return Err(SemanticsError::QuantifiedLhs);
    }
    let mut vars: BTreeSet<Var> = a.fv();
    vars.extend(b.fv());
    let vars = search_order(vars, &a.pure);
    let checks = a.pure.iter().map(Check::Pure).collect();
    let search = Search::new(vars, bounds.stack_bound, checks, &BTreeSet::new());
    let mut found = None;
    search.run(&mut Stack::new(), None, &mut |st| {
        let Some(cells) = footprints(&a.spatial, st)? else {
            return Ok(false);
        };
        let mut h = forced_heap(&cells, 0);
        let targets = pointer_targets(b, st, bounds.stack_bound)?;
        let free_cells: Vec<u64> = cells.iter().filter(|c| c.content.is_none()).flat_map(|c| c.lo..=c.hi).filter(|addr| targets.contains(addr)).collect();
        let mut digits = vec![0u64; free_cells.len()];
        loop {
            for (addr, d) in free_cells.iter().zip(&digits) {
                h.insert(*addr, *d);
            }
            if !holds(st, &h, b, bounds)? {
                found = Some((st.clone(), h.clone()));
                return Ok(true);
            }
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return Ok(false);
                }
                if digits[i] < bounds.value_bound {
                    digits[i] += 1;
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    })?;
    Ok(found)
}

/// Parses a stack literal such as `x=1,y=2`.
pub fn parse_stack(text: &str) -> Result<Stack, SemanticsError> {
    let err = || SemanticsError::Literal { what: "stack", text: text.to_string() };
    let mut s = Stack::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (v, x) = part.split_once('=').ok_or_else(err)?;
        let v = v.trim();
        if v.is_empty() || !v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
            return Err(err());
        }
        s.insert(Var::new(v), x.trim().parse().map_err(|_| err())?);
    }
    Ok(s)
}

/// Parses a heap literal such as `1:7,2:0`.
pub fn parse_heap(text: &str) -> Result<Heap, SemanticsError> {
    let err = || SemanticsError::Literal { what: "heap", text: text.to_string() };
    let mut h = Heap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, x) = part.split_once(':').ok_or_else(err)?;
        let a: u64 = a.trim().parse().map_err(|_| err())?;
        if h.insert(a, x.trim().parse().map_err(|_| err())?).is_some() {
            return Err(err());
        }
    }
    Ok(h)
}

/// Renders a stack in the literal syntax accepted by [`parse_stack`].
pub struct StackDisplay<'a>(pub &'a Stack);

impl fmt::Display for StackDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(v, x)| format!("{v}={x}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Renders a heap in the literal syntax accepted by [`parse_heap`].
pub struct HeapDisplay<'a>(pub &'a Heap);

impl fmt::Display for HeapDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(a, x)| format!("{a}:{x}")).collect();
        f.write_str(&parts.join(","))
    }
}
