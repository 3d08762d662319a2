//! Integer feasibility of conjunctions of linear constraints over the
//! naturals.
//!
//! Conjunctions of difference constraints are solved by shortest paths, which
//! also yields their componentwise least solution. Everything else goes
//! through the Omega test: exact equality elimination, Fourier-Motzkin real
//! and dark shadows, and splinters when the two shadows disagree.

use std::collections::HashMap;

use super::linear::{gcd, Constraint, Kind};

type Rows = Vec<Vec<i128>>;

/// A satisfying assignment of the conjunction over `0..nvars`, all values
/// nonnegative, or `None` if there is none. With `least`, the assignment is
/// lexicographically least.
pub(crate) fn feasible(cs: &[&Constraint], nvars: usize, least: bool) -> Option<Vec<i64>> {
    if cs.iter().all(|c| c.is_difference()) {
        return difference_least_solution(cs, nvars);
    }
    let model = omega_feasible(cs, nvars)?;
    if least {
        Some(minimize(cs, nvars, model))
    } else {
        Some(model)
    }
}

/// Componentwise least nonnegative solution of difference constraints.
///
/// An edge `u -> v` of weight `w` encodes `x_v - x_u <= w`; node `z` stands
/// for the constant 0 and every variable has the edge `x -> z` of weight 0.
/// The least solution is `x_u = -dist(u, z)`.
fn difference_least_solution(cs: &[&Constraint], nvars: usize) -> Option<Vec<i64>> {
    let z = nvars;
    let mut edges: Vec<(usize, usize, i64)> = (0..nvars).map(|i| (i, z, 0)).collect();
    let mut add = |coeffs: &[(usize, i64)], k: i64| match coeffs {
        [(i, 1), (j, -1)] => edges.push((*i, *j, k)),
        [(i, -1), (j, 1)] => edges.push((*j, *i, k)),
        [(i, 1)] => edges.push((*i, z, k)),
        [(i, -1)] => edges.push((z, *i, k)),
        _ => unreachable!("not a difference constraint"),
    };
    for c in cs {
        add(&c.coeffs, c.constant);
        if c.kind == Kind::Eq {
            let neg: Vec<(usize, i64)> = c.coeffs.iter().map(|(v, a)| (*v, -a)).collect();
            add(&neg, -c.constant);
        }
    }
    let n = nvars + 1;
    let inf = i64::MAX;
    let mut dist = vec![inf; n];
    dist[z] = 0;
    for round in 0..=n {
        let mut changed = false;
        for &(u, v, w) in &edges {
            if dist[v] != inf && dist[v] + w < dist[u] {
                dist[u] = dist[v] + w;
                changed = true;
            }
        }
        if !changed {
            return Some((0..nvars).map(|i| -dist[i]).collect());
        }
        if round == n {
            break;
        }
    }
    None
}

/// Lexicographically least solution by per-variable binary search.
fn minimize(cs: &[&Constraint], nvars: usize, mut model: Vec<i64>) -> Vec<i64> {
    let mut fixed: Vec<Constraint> = Vec::new();
    for i in 0..nvars {
        let (mut lo, mut hi) = (0i64, model[i]);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let cap = Constraint { kind: Kind::Geq, coeffs: vec![(i, -1)], constant: mid };
            let mut all: Vec<&Constraint> = cs.to_vec();
            all.extend(fixed.iter());
            all.push(&cap);
            match omega_feasible(&all, nvars) {
                Some(m) => {
                    hi = m[i];
                    model = m;
                }
                None => lo = mid + 1,
            }
        }
        fixed.push(Constraint { kind: Kind::Eq, coeffs: vec![(i, 1)], constant: -hi });
    }
    model
}

fn omega_feasible(cs: &[&Constraint], nvars: usize) -> Option<Vec<i64>> {
    let width = nvars + 1;
    let dense = |c: &Constraint| {
        let mut row = vec![0i128; width];
        row[0] = c.constant as i128;
        for (v, a) in &c.coeffs {
            row[v + 1] = *a as i128;
        }
        row
    };
    let mut p = Problem { n: nvars, eqs: vec![], geqs: vec![] };
    for c in cs {
        match c.kind {
            Kind::Eq => p.eqs.push(dense(c)),
            Kind::Geq => p.geqs.push(dense(c)),
        }
    }
    for v in 0..nvars {
        let mut row = vec![0i128; width];
        row[v + 1] = 1;
        p.geqs.push(row);
    }
    let sol = p.solve()?;
    Some(sol[1..=nvars].iter().map(|x| i64::try_from(*x).expect("model value fits in i64")).collect())
}

/// Rows are `[constant, a_1, ..., a_n]`; values are `[1, x_1, ..., x_n]`.
#[derive(Clone, Debug)]
struct Problem {
    n: usize,
    eqs: Vec<Vec<i128>>,
    geqs: Vec<Vec<i128>>,
}

fn dot(row: &[i128], values: &[i128]) -> i128 {
    row.iter().zip(values).map(|(a, b)| a * b).sum()
}

fn row_gcd(row: &[i128]) -> i128 {
    row[1..].iter().fold(0, |g, a| gcd(g, *a))
}

fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b)
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

/// `a mod^ m = a - m * floor(a / m + 1/2)`.
fn mod_hat(a: i128, m: i128) -> i128 {
    a - m * floor_div(2 * a + m, 2 * m)
}

/// `row := row + row[k] * expr` with `x_k` eliminated.
fn substitute(row: &mut [i128], k: usize, expr: &[i128]) {
    let a = row[k];
    if a == 0 {
        return;
    }
    row[k] = 0;
    for (r, e) in row.iter_mut().zip(expr) {
        *r = r.checked_add(a.checked_mul(*e).expect("coefficient overflow")).expect("coefficient overflow");
    }
}

enum Tidy {
    Unsat,
    Done,
    MoreEqualities,
}

impl Problem {
    fn solve(self) -> Option<Vec<i128>> {
        let mut p = self;
        loop {
            match p.tidy() {
                Tidy::Unsat => return None,
                Tidy::MoreEqualities => continue,
                Tidy::Done => break,
            }
        }
        if !p.eqs.is_empty() {
            return p.eliminate_equality();
        }
        if p.geqs.is_empty() {
            let mut sol = vec![0i128; p.n + 1];
            sol[0] = 1;
            return Some(sol);
        }
        p.eliminate_inequality()
    }

    /// Normalises rows, drops trivial ones, merges parallel inequalities and
    /// detects contradictions. Opposite inequalities that pinch to a point
    /// become equalities.
    fn tidy(&mut self) -> Tidy {
        let mut eqs = Vec::with_capacity(self.eqs.len());
        for mut row in std::mem::take(&mut self.eqs) {
            let g = row_gcd(&row);
            if g == 0 {
                if row[0] != 0 {
                    return Tidy::Unsat;
                }
                continue;
            }
            if row[0] % g != 0 {
                return Tidy::Unsat;
            }
            row.iter_mut().for_each(|a| *a /= g);
            eqs.push(row);
        }
        self.eqs = eqs;
        let mut best: HashMap<Vec<i128>, i128> = HashMap::new();
        let mut order: Vec<Vec<i128>> = Vec::new();
        for row in std::mem::take(&mut self.geqs) {
            let g = row_gcd(&row);
            if g == 0 {
                if row[0] < 0 {
                    return Tidy::Unsat;
                }
                continue;
            }
            let key: Vec<i128> = row[1..].iter().map(|a| a / g).collect();
            let k = floor_div(row[0], g);
            match best.get_mut(&key) {
                Some(c) => *c = (*c).min(k),
                None => {
                    best.insert(key.clone(), k);
                    order.push(key);
                }
            }
        }
        let mut new_eqs = false;
        let mut skip: std::collections::HashSet<Vec<i128>> = std::collections::HashSet::new();
        for key in &order {
            if skip.contains(key) {
                continue;
            }
            let neg: Vec<i128> = key.iter().map(|a| -a).collect();
            if let Some(&c2) = best.get(&neg) {
                let c1 = best[key];
                if c1 + c2 < 0 {
                    return Tidy::Unsat;
                }
                if c1 + c2 == 0 {
                    let mut row = vec![c1];
                    row.extend(key.iter().copied());
                    self.eqs.push(row);
                    skip.insert(key.clone());
                    skip.insert(neg);
                    new_eqs = true;
                }
            }
        }
        for key in order {
            if skip.contains(&key) {
                continue;
            }
            let mut row = vec![best[&key]];
            row.extend(key);
            self.geqs.push(row);
        }
        if new_eqs {
            Tidy::MoreEqualities
        } else {
            Tidy::Done
        }
    }

    fn add_var(&mut self) -> usize {
        self.n += 1;
        for r in self.eqs.iter_mut().chain(self.geqs.iter_mut()) {
            r.push(0);
        }
        self.n
    }

    fn eliminate_equality(mut self) -> Option<Vec<i128>> {
        let (ei, k) = self
            .eqs
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r[1..].iter().enumerate().filter(|(_, a)| **a != 0).map(move |(j, a)| (a.abs(), i, j + 1)))
            .min()
            .map(|(_, i, j)| (i, j))
            .expect("equality rows are nonzero after tidying");
        let a = self.eqs[ei][k];
        if a.abs() == 1 {
            let eq = self.eqs.swap_remove(ei);
            let mut expr: Vec<i128> = eq.iter().map(|c| -a * c).collect();
            expr[k] = 0;
            for r in self.eqs.iter_mut().chain(self.geqs.iter_mut()) {
                substitute(r, k, &expr);
            }
            let mut sol = self.solve()?;
            sol[k] = dot(&expr, &sol);
            return Some(sol);
        }
        let m = a.abs() + 1;
        let sigma = self.add_var();
        let eq = self.eqs[ei].clone();
        let sign = a.signum();
        let mut expr: Vec<i128> = eq.iter().map(|c| sign * mod_hat(*c, m)).collect();
        expr[k] = 0;
        expr[sigma] = -sign * m;
        for r in self.eqs.iter_mut().chain(self.geqs.iter_mut()) {
            substitute(r, k, &expr);
        }
        let mut sol = self.solve()?;
        sol[k] = dot(&expr, &sol);
        Some(sol)
    }

    /// Picks an integer value for `x_j` meeting every row that mentions it,
    /// given values for the other variables.
    fn choose_value(rows: &[Vec<i128>], j: usize, sol: &mut [i128]) {
        sol[j] = 0;
        let (mut lo, mut hi): (Option<i128>, Option<i128>) = (None, None);
        for r in rows {
            let c = r[j];
            if c == 0 {
                continue;
            }
            let rest = dot(r, sol);
            if c > 0 {
                let b = ceil_div(-rest, c);
                lo = Some(lo.map_or(b, |l| l.max(b)));
            } else {
                let b = floor_div(rest, -c);
                hi = Some(hi.map_or(b, |h| h.min(b)));
            }
        }
        let v = lo.or(hi).unwrap_or(0);
        debug_assert!(hi.is_none_or(|h| v <= h), "no integer value for eliminated variable");
        sol[j] = v;
    }

    fn eliminate_inequality(self) -> Option<Vec<i128>> {
        let mut best: Option<(bool, i128, usize)> = None;
        for j in 1..=self.n {
            let (mut lows, mut ups, mut unit_low, mut unit_up) = (0i128, 0i128, true, true);
            for r in &self.geqs {
                if r[j] > 0 {
                    lows += 1;
                    unit_low &= r[j] == 1;
                } else if r[j] < 0 {
                    ups += 1;
                    unit_up &= r[j] == -1;
                }
            }
            if lows + ups == 0 {
                continue;
            }
            if lows == 0 || ups == 0 {
                return self.drop_unbounded(j);
            }
            let exact = unit_low || unit_up;
            let cost = lows * ups - lows - ups;
            let cand = (!exact, cost, j);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        }
        let (inexact, _, j) = best.expect("some variable occurs in an inequality");
        let (rest, lowers, uppers) = self.split(j);
        let shadow = |dark: bool| {
            let mut geqs = rest.clone();
            for l in &lowers {
                for u in &uppers {
                    let (a, b) = (l[j], -u[j]);
                    let mut row: Vec<i128> = l.iter().zip(u).map(|(x, y)| b * x + a * y).collect();
                    if dark {
                        row[0] -= (a - 1) * (b - 1);
                    }
                    geqs.push(row);
                }
            }
            Problem { n: self.n, eqs: vec![], geqs }
        };
        let bounds_of_j: Vec<Vec<i128>> = lowers.iter().chain(uppers.iter()).cloned().collect();
        if !inexact {
            let mut sol = shadow(false).solve()?;
            Self::choose_value(&bounds_of_j, j, &mut sol);
            return Some(sol);
        }
        shadow(false).solve()?;
        if let Some(mut sol) = shadow(true).solve() {
            Self::choose_value(&bounds_of_j, j, &mut sol);
            return Some(sol);
        }
        let max_up = uppers.iter().map(|u| -u[j]).max().expect("has upper bounds");
        for l in &lowers {
            let a = l[j];
            let limit = floor_div(max_up * a - a - max_up, max_up);
            for i in 0..=limit {
                let mut p = self.clone();
                let mut eq = l.clone();
                eq[0] -= i;
                p.eqs.push(eq);
                if let Some(sol) = p.solve() {
                    return Some(sol);
                }
            }
        }
        None
    }

    fn split(&self, j: usize) -> (Rows, Rows, Rows) {
        let (mut rest, mut lowers, mut uppers) = (vec![], vec![], vec![]);
        for r in &self.geqs {
            match r[j].signum() {
                0 => rest.push(r.clone()),
                1 => lowers.push(r.clone()),
                _ => uppers.push(r.clone()),
            }
        }
        (rest, lowers, uppers)
    }

    /// A variable bounded on one side only can always be satisfied, so its
    /// rows are dropped and its value chosen afterwards.
    fn drop_unbounded(self, j: usize) -> Option<Vec<i128>> {
        let (rest, lowers, uppers) = self.split(j);
        let p = Problem { n: self.n, eqs: vec![], geqs: rest };
        let mut sol = p.solve()?;
        let rows: Vec<Vec<i128>> = lowers.into_iter().chain(uppers).collect();
        Self::choose_value(&rows, j, &mut sol);
        Some(sol)
    }
}
