//! Abstract syntax of symbolic heaps.
//!
//! Terms are kept in a canonical linear form (natural coefficients, one entry
//! per variable, no zero coefficients) so that structural equality coincides
//! with equality of the linear expressions they denote.

mod parser;
mod problem;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

pub use parser::{parse_symbolic_heap, parse_term, ParseContext, ParseError};
pub use problem::{parse_problem, ProblemFile};

/// A program or logical variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// A linear expression `c1*x1 + ... + cn*xn + k` over the naturals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    coeffs: BTreeMap<Var, u64>,
    constant: u64,
}

impl Term {
    pub fn constant(k: u64) -> Self {
        Term { coeffs: BTreeMap::new(), constant: k }
    }

    pub fn var(v: impl Into<Var>) -> Self {
        Term::scaled(1, v)
    }

    pub fn scaled(coeff: u64, v: impl Into<Var>) -> Self {
        let mut coeffs = BTreeMap::new();
        if coeff != 0 {
            coeffs.insert(v.into(), coeff);
        }
        Term { coeffs, constant: 0 }
    }

    /// Builds a term from raw parts, dropping zero coefficients and merging
    /// repeated variables.
    pub fn from_parts(parts: impl IntoIterator<Item = (u64, Var)>, constant: u64) -> Self {
        let mut t = Term::constant(constant);
        for (c, v) in parts {
            t = t.add(&Term::scaled(c, v));
        }
        t
    }

    pub fn constant_part(&self) -> u64 {
        self.constant
    }

    pub fn coeff(&self, v: &Var) -> u64 {
        self.coeffs.get(v).copied().unwrap_or(0)
    }

    /// Variables with their (nonzero) coefficients in name order.
    pub fn coeffs(&self) -> impl Iterator<Item = (&Var, u64)> {
        self.coeffs.iter().map(|(v, c)| (v, *c))
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn as_constant(&self) -> Option<u64> {
        self.coeffs.is_empty().then_some(self.constant)
    }

    /// `Some(x)` when the term is exactly the variable `x`.
    pub fn as_var(&self) -> Option<&Var> {
        match self.as_var_plus_const() {
            Some((v, 0)) => Some(v),
            _ => None,
        }
    }

    /// `Some((x, k))` when the term is `x + k`.
    pub fn as_var_plus_const(&self) -> Option<(&Var, u64)> {
        if self.coeffs.len() != 1 {
            return None;
        }
        let (v, c) = self.coeffs.iter().next()?;
        (*c == 1).then_some((v, self.constant))
    }

    pub fn add(&self, other: &Term) -> Term {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &other.coeffs {
            *coeffs.entry(v.clone()).or_insert(0) += c;
        }
        Term { coeffs, constant: self.constant + other.constant }
    }

    pub fn add_const(&self, k: u64) -> Term {
        Term { coeffs: self.coeffs.clone(), constant: self.constant + k }
    }

    pub fn scale(&self, k: u64) -> Term {
        if k == 0 {
            return Term::constant(0);
        }
        Term { coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(), constant: self.constant * k }
    }

    /// Replaces variables by terms; variables without an image are kept.
    pub fn substitute(&self, f: &impl Fn(&Var) -> Option<Term>) -> Term {
        let mut out = Term::constant(self.constant);
        for (v, c) in &self.coeffs {
            match f(v) {
                Some(t) => out = out.add(&t.scale(*c)),
                None => out = out.add(&Term::scaled(*c, v.clone())),
            }
        }
        out
    }

    pub fn rename(&self, map: &HashMap<Var, Var>) -> Term {
        self.substitute(&|v| map.get(v).map(|w| Term::var(w.clone())))
    }

    /// Evaluates the term, reporting the first variable without a value.
    pub fn eval_with(&self, lookup: impl Fn(&Var) -> Option<u64>) -> Result<u64, Var> {
        let mut acc = self.constant;
        for (v, c) in &self.coeffs {
            let x = lookup(v).ok_or_else(|| v.clone())?;
            acc += c * x;
        }
        Ok(acc)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if *c == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{c}*{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0 {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}

/// Comparison relation of a pure atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Ne,
    Le,
    Lt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Le => "<=",
            Rel::Lt => "<",
        }
    }
}

/// `lhs rel rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PureAtom {
    pub lhs: Term,
    pub rel: Rel,
    pub rhs: Term,
}

impl PureAtom {
    pub fn new(lhs: Term, rel: Rel, rhs: Term) -> Self {
        PureAtom { lhs, rel, rhs }
    }

    pub fn eq(lhs: Term, rhs: Term) -> Self {
        Self::new(lhs, Rel::Eq, rhs)
    }

    pub fn ne(lhs: Term, rhs: Term) -> Self {
        Self::new(lhs, Rel::Ne, rhs)
    }

    pub fn le(lhs: Term, rhs: Term) -> Self {
        Self::new(lhs, Rel::Le, rhs)
    }

    pub fn lt(lhs: Term, rhs: Term) -> Self {
        Self::new(lhs, Rel::Lt, rhs)
    }

    /// The complementary atom over the naturals.
    pub fn negate(&self) -> PureAtom {
        match self.rel {
            Rel::Eq => Self::ne(self.lhs.clone(), self.rhs.clone()),
            Rel::Ne => Self::eq(self.lhs.clone(), self.rhs.clone()),
            Rel::Le => Self::lt(self.rhs.clone(), self.lhs.clone()),
            Rel::Lt => Self::le(self.rhs.clone(), self.lhs.clone()),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.lhs.vars().chain(self.rhs.vars())
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> PureAtom {
        PureAtom::new(f(&self.lhs), self.rel, f(&self.rhs))
    }

    pub fn holds(&self, l: u64, r: u64) -> bool {
        match self.rel {
            Rel::Eq => l == r,
            Rel::Ne => l != r,
            Rel::Le => l <= r,
            Rel::Lt => l < r,
        }
    }
}

impl fmt::Display for PureAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.rel.symbol(), self.rhs)
    }
}

/// A spatial atom; array endpoints are absolute addresses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpatialAtom {
    Emp,
    PointsTo { src: Term, dst: Term },
    Array { lo: Term, hi: Term },
}

impl SpatialAtom {
    pub fn points_to(src: Term, dst: Term) -> Self {
        SpatialAtom::PointsTo { src, dst }
    }

    pub fn array(lo: Term, hi: Term) -> Self {
        SpatialAtom::Array { lo, hi }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            SpatialAtom::Emp => vec![],
            SpatialAtom::PointsTo { src, dst } => vec![src, dst],
            SpatialAtom::Array { lo, hi } => vec![lo, hi],
        }
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> SpatialAtom {
        match self {
            SpatialAtom::Emp => SpatialAtom::Emp,
            SpatialAtom::PointsTo { src, dst } => SpatialAtom::points_to(f(src), f(dst)),
            SpatialAtom::Array { lo, hi } => SpatialAtom::array(f(lo), f(hi)),
        }
    }
}

impl fmt::Display for SpatialAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialAtom::Emp => f.write_str("emp"),
            SpatialAtom::PointsTo { src, dst } if dst.coeffs().any(|(_, c)| c > 1) => write!(f, "{src} |-> ({dst})"),
            SpatialAtom::PointsTo { src, dst } => write!(f, "{src} |-> {dst}"),
            SpatialAtom::Array { lo, hi } => write!(f, "arr({lo}, {hi})"),
        }
    }
}

/// `EX bound. pure : spatial`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SymbolicHeap {
    pub bound: Vec<Var>,
    pub pure: Vec<PureAtom>,
    pub spatial: Vec<SpatialAtom>,
}

impl SymbolicHeap {
    pub fn new(pure: Vec<PureAtom>, spatial: Vec<SpatialAtom>) -> Self {
        SymbolicHeap { bound: vec![], pure, spatial }
    }

    pub fn with_bound(bound: Vec<Var>, pure: Vec<PureAtom>, spatial: Vec<SpatialAtom>) -> Self {
        SymbolicHeap { bound, pure, spatial }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.bound.is_empty()
    }

    /// The matrix of the heap with its quantifier prefix dropped.
    pub fn qf(&self) -> SymbolicHeap {
        SymbolicHeap::new(self.pure.clone(), self.spatial.clone())
    }

    /// Every variable occurring in the pure or spatial part, bound or not.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for a in &self.pure {
            out.extend(a.vars().cloned());
        }
        for s in &self.spatial {
            for t in s.terms() {
                out.extend(t.vars().cloned());
            }
        }
        out
    }

    /// Free variables in name order.
    pub fn fv(&self) -> BTreeSet<Var> {
        let mut out = self.all_vars();
        for v in &self.bound {
            out.remove(v);
        }
        out
    }

    /// Every name mentioned by the heap, including unused bound variables.
    pub fn names(&self) -> BTreeSet<Var> {
        let mut out = self.all_vars();
        out.extend(self.bound.iter().cloned());
        out
    }

    /// Every term occurring in the heap, in order of first occurrence.
    pub fn terms(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for a in &self.pure {
            out.push(a.lhs.clone());
            out.push(a.rhs.clone());
        }
        for s in &self.spatial {
            out.extend(s.terms().into_iter().cloned());
        }
        out
    }

    pub fn arrays(&self) -> Vec<(Term, Term)> {
        self.spatial
            .iter()
            .filter_map(|s| match s {
                SpatialAtom::Array { lo, hi } => Some((lo.clone(), hi.clone())),
                _ => None,
            })
            .collect()
    }

    pub fn points_to(&self) -> Vec<(Term, Term)> {
        self.spatial
            .iter()
            .filter_map(|s| match s {
                SpatialAtom::PointsTo { src, dst } => Some((src.clone(), dst.clone())),
                _ => None,
            })
            .collect()
    }

    /// Applies a variable renaming to every occurrence, including the prefix.
    pub fn rename(&self, map: &HashMap<Var, Var>) -> SymbolicHeap {
        SymbolicHeap {
            bound: self.bound.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect(),
            pure: self.pure.iter().map(|a| a.map_terms(|t| t.rename(map))).collect(),
            spatial: self.spatial.iter().map(|s| s.map_terms(|t| t.rename(map))).collect(),
        }
    }

    /// Drops `emp` atoms, which are units of the separating conjunction.
    pub fn without_emp(&self) -> SymbolicHeap {
        SymbolicHeap { bound: self.bound.clone(), pure: self.pure.clone(), spatial: self.spatial.iter().filter(|s| **s != SpatialAtom::Emp).cloned().collect() }
    }

    /// Renames bound variables so that none of them is in `avoid`.
    pub fn rename_bound_apart(&self, avoid: &BTreeSet<Var>) -> SymbolicHeap {
        let mut supply = NameSupply::new(avoid.iter().chain(self.names().iter()).cloned());
        let mut map = HashMap::new();
        for v in &self.bound {
            if avoid.contains(v) {
                map.insert(v.clone(), supply.fresh(base_name(v.name())));
            }
        }
        if map.is_empty() {
            self.clone()
        } else {
            self.rename(&map)
        }
    }
}

impl fmt::Display for SymbolicHeap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.bound.is_empty() {
            f.write_str("EX")?;
            for v in &self.bound {
                write!(f, " {v}")?;
            }
            f.write_str(". ")?;
        }
        if !self.pure.is_empty() {
            let atoms: Vec<String> = self.pure.iter().map(|a| a.to_string()).collect();
            write!(f, "{} : ", atoms.join(" /\\ "))?;
        }
        if self.spatial.is_empty() {
            f.write_str("emp")
        } else {
            let atoms: Vec<String> = self.spatial.iter().map(|a| a.to_string()).collect();
            f.write_str(&atoms.join(" * "))
        }
    }
}

/// Generator of names of the form `<base>'<counter>` avoiding a set of
/// names already in use.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    used: HashSet<String>,
    counter: usize,
}

impl NameSupply {
    pub fn new(used: impl IntoIterator<Item = Var>) -> Self {
        NameSupply { used: used.into_iter().map(|v| v.0).collect(), counter: 0 }
    }

    pub fn reserve(&mut self, v: &Var) {
        self.used.insert(v.0.clone());
    }

    pub fn fresh(&mut self, base: &str) -> Var {
        loop {
            self.counter += 1;
            let name = format!("{base}'{}", self.counter);
            if self.used.insert(name.clone()) {
                return Var(name);
            }
        }
    }
}

/// The part of a name before its first prime, used as base for fresh names.
pub fn base_name(name: &str) -> &str {
    match name.find('\'') {
        Some(0) | None => name,
        Some(i) => &name[..i],
    }
}

/// Separating conjunction of two symbolic heaps with their quantifier
/// prefixes merged; bound variables are renamed apart to avoid capture.
pub fn star_lift(a: &SymbolicHeap, b: &SymbolicHeap) -> SymbolicHeap {
    let a = a.rename_bound_apart(&b.fv());
    let b = b.rename_bound_apart(&a.names());
    let mut bound = a.bound.clone();
    bound.extend(b.bound.iter().cloned());
    let mut pure = a.pure.clone();
    pure.extend(b.pure.iter().cloned());
    let mut spatial = a.spatial.clone();
    spatial.extend(b.spatial.iter().cloned());
    SymbolicHeap { bound, pure, spatial }
}

/// True iff every pure atom is a difference constraint and every spatial atom
/// has one of the shapes `k |-> v`, `arr(a;0,j)`, `arr(a;1,j)` or
/// `arr(k;j,j)`.
pub fn is_two_variable_form(a: &SymbolicHeap) -> bool {
    a.pure.iter().all(is_difference_atom) && a.spatial.iter().all(is_two_variable_spatial)
}

fn is_difference_atom(atom: &PureAtom) -> bool {
    let var_plus = |t: &Term| t.as_var_plus_const().is_some();
    match atom.rel {
        Rel::Eq => {
            let one_sided = |x: &Term, y: &Term| x.as_var().is_some() && (var_plus(y) || y.as_constant().is_some());
            one_sided(&atom.lhs, &atom.rhs) || one_sided(&atom.rhs, &atom.lhs)
        }
        Rel::Le | Rel::Lt => (atom.lhs.as_var().is_some() && var_plus(&atom.rhs)) || (var_plus(&atom.lhs) && atom.rhs.as_var().is_some()),
        Rel::Ne => false,
    }
}

fn is_two_variable_spatial(s: &SpatialAtom) -> bool {
    match s {
        SpatialAtom::Emp => true,
        SpatialAtom::PointsTo { src, dst } => src.as_constant().is_some() && dst.as_var().is_some(),
        SpatialAtom::Array { lo, hi } => {
            if lo == hi {
                return lo.as_var_plus_const().is_some();
            }
            let Some((base, offset)) = lo.as_var_plus_const() else {
                return false;
            };
            if offset > 1 || hi.coeff(base) != 1 {
                return false;
            }
            let rest: Vec<_> = hi.coeffs().filter(|(v, _)| *v != base).collect();
            matches!((rest.as_slice(), hi.constant_part()), ([], _) | ([(_, 1)], 0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(x: &str) -> Term {
        Term::var(x)
    }

    #[test]
    fn term_canonical_form_merges_and_orders() {
        let a = t("y").add(&t("x")).add(&t("y")).add_const(3);
        assert_eq!(a.to_string(), "x + 2*y + 3");
        assert_eq!(a, Term::from_parts([(1, Var::new("x")), (2, Var::new("y"))], 3));
        assert_eq!(Term::constant(0).to_string(), "0");
        assert_eq!(Term::scaled(0, "x"), Term::constant(0));
    }

    #[test]
    fn negation_over_naturals() {
        let a = PureAtom::le(t("x"), t("y"));
        assert_eq!(a.negate(), PureAtom::lt(t("y"), t("x")));
        assert_eq!(a.negate().negate(), a);
        let e = PureAtom::eq(t("x"), t("y"));
        assert_eq!(e.negate().rel, Rel::Ne);
    }

    #[test]
    fn free_variables_exclude_bound() {
        let h = SymbolicHeap::with_bound(vec![Var::new("z")], vec![PureAtom::eq(t("z"), t("x"))], vec![SpatialAtom::array(t("z"), t("y"))]);
        let fv: Vec<_> = h.fv().into_iter().map(|v| v.to_string()).collect();
        assert_eq!(fv, ["x", "y"]);
        assert!(h.qf().is_quantifier_free());
    }

    #[test]
    fn star_lift_renames_clashing_bound_variables() {
        let a = SymbolicHeap::with_bound(vec!["z".into()], vec![PureAtom::eq(t("z"), t("x"))], vec![SpatialAtom::array(t("z"), t("z"))]);
        let b = SymbolicHeap::with_bound(vec!["z".into()], vec![PureAtom::eq(t("z"), t("y"))], vec![SpatialAtom::array(t("z"), t("z"))]);
        let c = star_lift(&a, &b);
        assert_eq!(c.bound.len(), 2);
        assert_ne!(c.bound[0], c.bound[1]);
        assert_eq!(c.spatial.len(), 2);
        assert_eq!(c.spatial[0], SpatialAtom::array(t("z"), t("z")));
        let z1 = c.bound[1].clone();
        assert_eq!(c.spatial[1], SpatialAtom::array(Term::var(z1.clone()), Term::var(z1.clone())));
        assert_eq!(c.pure[1], PureAtom::eq(Term::var(z1), t("y")));
    }

    #[test]
    fn star_lift_does_not_capture_free_variables_of_the_left() {
        let a = SymbolicHeap::new(vec![], vec![SpatialAtom::points_to(t("x"), t("z"))]);
        let b = SymbolicHeap::with_bound(vec!["z".into()], vec![], vec![SpatialAtom::array(t("z"), t("z"))]);
        let c = star_lift(&a, &b);
        assert_ne!(c.bound[0], Var::new("z"));
        assert!(c.fv().contains(&Var::new("z")));
    }

    #[test]
    fn two_variable_shapes() {
        let ok = SymbolicHeap::new(
            vec![PureAtom::eq(t("x"), t("y").add_const(3)), PureAtom::lt(t("y").add_const(2), t("x")), PureAtom::eq(t("x"), Term::constant(4))],
            vec![
                SpatialAtom::points_to(Term::constant(5), t("v")),
                SpatialAtom::array(t("a"), t("a").add(&t("j"))),
                SpatialAtom::array(t("a").add_const(1), t("a").add(&t("j"))),
                SpatialAtom::array(t("j").add_const(7), t("j").add_const(7)),
            ],
        );
        assert!(is_two_variable_form(&ok));
        let ne = SymbolicHeap::new(vec![PureAtom::ne(t("x"), t("y"))], vec![SpatialAtom::Emp]);
        assert!(!is_two_variable_form(&ne));
        let skew = SymbolicHeap::new(vec![], vec![SpatialAtom::array(t("x"), t("y").add_const(2))]);
        assert!(!is_two_variable_form(&skew));
    }
}
