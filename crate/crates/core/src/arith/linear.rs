//! Normalised integer linear constraints over indexed variables.

use std::collections::HashMap;

use crate::syntax::{Rel, Term, Var};

use super::LinAtom;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Kind {
    /// `sum + constant = 0`
    Eq,
    /// `sum + constant >= 0`
    Geq,
}

/// `sum_i coeffs[i].1 * x_{coeffs[i].0} + constant (= | >=) 0`, with
/// coefficients sorted by variable, nonzero and coprime. Equalities have a
/// positive leading coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Constraint {
    pub kind: Kind,
    pub coeffs: Vec<(usize, i64)>,
    pub constant: i64,
}

/// Result of normalising a constraint.
pub(crate) enum Normal {
    True,
    False,
    Constraint(Constraint),
}

pub(crate) fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Constraint {
    pub fn normalize(kind: Kind, mut coeffs: Vec<(usize, i64)>, constant: i64) -> Normal {
        coeffs.sort_unstable_by_key(|c| c.0);
        let mut merged: Vec<(usize, i64)> = Vec::with_capacity(coeffs.len());
        for (v, c) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|c| c.1 != 0);
        if merged.is_empty() {
            let ok = match kind {
                Kind::Eq => constant == 0,
                Kind::Geq => constant >= 0,
            };
            return if ok { Normal::True } else { Normal::False };
        }
        let g = merged.iter().fold(0i128, |g, c| gcd(g, c.1 as i128)) as i64;
        let mut constant = constant;
        match kind {
            Kind::Eq => {
                if constant % g != 0 {
                    return Normal::False;
                }
                constant /= g;
                let sign = if merged[0].1 < 0 { -1 } else { 1 };
                for c in &mut merged {
                    c.1 = c.1 / g * sign;
                }
                constant *= sign;
            }
            Kind::Geq => {
                for c in &mut merged {
                    c.1 /= g;
                }
                constant = constant.div_euclid(g);
            }
        }
        Normal::Constraint(Constraint { kind, coeffs: merged, constant })
    }

    /// The complement of an inequality: `not (e >= 0)` is `-e - 1 >= 0`.
    pub fn negate_geq(&self) -> Option<Constraint> {
        if self.kind != Kind::Geq {
            return None;
        }
        let coeffs = self.coeffs.iter().map(|(v, c)| (*v, -c)).collect();
        match Constraint::normalize(Kind::Geq, coeffs, -self.constant - 1) {
            Normal::Constraint(c) => Some(c),
            _ => None,
        }
    }

    #[cfg(test)]
    pub fn eval(&self, values: &[i64]) -> i128 {
        self.coeffs.iter().fold(self.constant as i128, |acc, (v, c)| acc + *c as i128 * values[*v] as i128)
    }

    #[cfg(test)]
    pub fn satisfied(&self, values: &[i64]) -> bool {
        let e = self.eval(values);
        match self.kind {
            Kind::Eq => e == 0,
            Kind::Geq => e >= 0,
        }
    }

    /// True when every coefficient pattern is `x - y`, `x` or `-x`.
    pub fn is_difference(&self) -> bool {
        match self.coeffs.as_slice() {
            [(_, c)] => c.abs() == 1,
            [(_, a), (_, b)] => (*a == 1 && *b == -1) || (*a == -1 && *b == 1),
            _ => false,
        }
    }
}

/// Maps variables to dense indices.
#[derive(Clone, Debug, Default)]
pub(crate) struct VarIndex {
    pub vars: Vec<Var>,
    index: HashMap<Var, usize>,
}

impl VarIndex {
    pub fn new(vars: &[Var]) -> Self {
        let mut v = VarIndex::default();
        for x in vars {
            v.get(x);
        }
        v
    }

    pub fn get(&mut self, v: &Var) -> usize {
        if let Some(i) = self.index.get(v) {
            return *i;
        }
        let i = self.vars.len();
        self.vars.push(v.clone());
        self.index.insert(v.clone(), i);
        i
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    fn linear(&mut self, t: &Term, sign: i64, out: &mut Vec<(usize, i64)>) -> i64 {
        for (v, c) in t.coeffs() {
            let i = self.get(v);
            out.push((i, sign * c as i64));
        }
        sign * t.constant_part() as i64
    }

    /// Normal forms of an atom: a conjunction of one constraint, or for `!=`
    /// a disjunction of two.
    pub fn atom(&mut self, a: &LinAtom) -> Vec<Normal> {
        let mut diff = Vec::new();
        let mut k = self.linear(&a.lhs, 1, &mut diff);
        k += self.linear(&a.rhs, -1, &mut diff);
        let neg: Vec<(usize, i64)> = diff.iter().map(|(v, c)| (*v, -c)).collect();
        match a.rel {
            Rel::Eq => vec![Constraint::normalize(Kind::Eq, diff, k)],
            Rel::Le => vec![Constraint::normalize(Kind::Geq, neg, -k)],
            Rel::Lt => vec![Constraint::normalize(Kind::Geq, neg, -k - 1)],
            Rel::Ne => vec![Constraint::normalize(Kind::Geq, neg, -k - 1), Constraint::normalize(Kind::Geq, diff, k - 1)],
        }
    }
}
