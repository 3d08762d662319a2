//! Case splitting over disjunctions with theory checks on every branch.

use std::collections::HashMap;
use std::time::Instant;

use crate::syntax::Var;

use super::linear::{Constraint, Normal, VarIndex};
use super::theory::feasible;
use super::{BoolExpr, SatResult, SolverOptions, UnknownReason, Valuation};

#[derive(Debug)]
enum Node {
    And(Vec<usize>),
    Or(Vec<usize>),
    Lit(usize),
}

enum Built {
    True,
    False,
    Node(usize),
}

#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
    lits: Vec<Constraint>,
    lit_ids: HashMap<Constraint, usize>,
}

impl Arena {
    fn push(&mut self, n: Node) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn lit(&mut self, n: Normal) -> Built {
        match n {
            Normal::True => Built::True,
            Normal::False => Built::False,
            Normal::Constraint(c) => {
                let id = match self.lit_ids.get(&c) {
                    Some(id) => *id,
                    None => {
                        self.lits.push(c.clone());
                        self.lit_ids.insert(c, self.lits.len() - 1);
                        self.lits.len() - 1
                    }
                };
                Built::Node(self.push(Node::Lit(id)))
            }
        }
    }

    fn combine(&mut self, parts: Vec<Built>, conj: bool) -> Built {
        let mut ids = Vec::new();
        for p in parts {
            match (p, conj) {
                (Built::False, true) => return Built::False,
                (Built::True, false) => return Built::True,
                (Built::True, true) | (Built::False, false) => {}
                (Built::Node(i), _) => ids.push(i),
            }
        }
        match ids.len() {
            0 => {
                if conj {
                    Built::True
                } else {
                    Built::False
                }
            }
            1 => Built::Node(ids[0]),
            _ => Built::Node(self.push(if conj { Node::And(ids) } else { Node::Or(ids) })),
        }
    }

    fn build(&mut self, e: &BoolExpr, index: &mut VarIndex) -> Built {
        match e {
            BoolExpr::And(xs) => {
                let parts = xs.iter().map(|x| self.build(x, index)).collect();
                self.combine(parts, true)
            }
            BoolExpr::Or(xs) => {
                let parts = xs.iter().map(|x| self.build(x, index)).collect();
                self.combine(parts, false)
            }
            BoolExpr::Atom(a) => {
                let normals = index.atom(a);
                let parts: Vec<Built> = normals.into_iter().map(|n| self.lit(n)).collect();
                if parts.len() == 1 {
                    parts.into_iter().next().expect("one part")
                } else {
                    self.combine(parts, false)
                }
            }
        }
    }
}

struct Timeout;

struct Search<'a> {
    arena: &'a Arena,
    negation: Vec<Option<usize>>,
    nvars: usize,
    asserted: Vec<bool>,
    trail: Vec<usize>,
    deadline: Option<Instant>,
    steps: u64,
    least: bool,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<(), Timeout> {
        self.steps += 1;
        if self.steps.is_multiple_of(64) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Timeout);
                }
            }
        }
        Ok(())
    }

    fn check(&self, least: bool) -> Option<Vec<i64>> {
        let cs: Vec<&Constraint> = self.trail.iter().map(|l| &self.arena.lits[*l]).collect();
        feasible(&cs, self.nvars, least)
    }

    fn refuted(&self, node: usize) -> bool {
        match self.arena.nodes[node] {
            Node::Lit(l) => self.negation[l].is_some_and(|n| self.asserted[n]),
            _ => false,
        }
    }

    fn satisfied(&self, node: usize) -> bool {
        match &self.arena.nodes[node] {
            Node::Lit(l) => self.asserted[*l],
            Node::Or(xs) => xs.iter().any(|x| self.satisfied(*x)),
            Node::And(xs) => xs.iter().all(|x| self.satisfied(*x)),
        }
    }

    fn search(&mut self, todo: Vec<usize>, ors: Vec<usize>) -> Result<Option<Vec<i64>>, Timeout> {
        let mark = self.trail.len();
        let result = self.step(todo, ors);
        while self.trail.len() > mark {
            let l = self.trail.pop().expect("trail above mark");
            self.asserted[l] = false;
        }
        result
    }

    fn step(&mut self, mut todo: Vec<usize>, mut ors: Vec<usize>) -> Result<Option<Vec<i64>>, Timeout> {
        self.tick()?;
        let mut grew = false;
        while let Some(n) = todo.pop() {
            match &self.arena.nodes[n] {
                Node::And(xs) => todo.extend(xs.iter().copied()),
                Node::Or(_) => ors.push(n),
                Node::Lit(l) => {
                    if !self.asserted[*l] {
                        if self.refuted(n) {
                            return Ok(None);
                        }
                        self.asserted[*l] = true;
                        self.trail.push(*l);
                        grew = true;
                    }
                }
            }
        }
        if grew && self.check(false).is_none() {
            return Ok(None);
        }
        ors.retain(|o| !self.satisfied(*o));
        if ors.is_empty() {
            return Ok(self.check(self.least));
        }
        let mut choice: Option<(usize, Vec<usize>)> = None;
        for (i, o) in ors.iter().enumerate() {
            let Node::Or(xs) = &self.arena.nodes[*o] else { unreachable!("only disjunctions are pending") };
            let live: Vec<usize> = xs.iter().copied().filter(|x| !self.refuted(*x)).collect();
            if live.is_empty() {
                return Ok(None);
            }
            if choice.as_ref().is_none_or(|(_, c)| live.len() < c.len()) {
                let single = live.len() == 1;
                choice = Some((i, live));
                if single {
                    break;
                }
            }
        }
        let (i, live) = choice.expect("at least one pending disjunction");
        ors.swap_remove(i);
        for child in live {
            if let Some(m) = self.search(vec![child], ors.clone())? {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }
}

pub(crate) fn solve(body: &BoolExpr, vars: &[Var], opts: &SolverOptions) -> SatResult {
    let mut index = VarIndex::new(vars);
    let mut arena = Arena::default();
    let root = arena.build(body, &mut index);
    let nvars = index.len();
    let to_valuation =
        |m: &[i64]| -> Valuation { index.vars.iter().enumerate().map(|(i, v)| (v.clone(), u64::try_from(m[i]).expect("nonnegative model value"))).collect() };
    let root = match root {
        Built::False => return SatResult::Unsat,
        Built::True => return SatResult::Sat(to_valuation(&vec![0; nvars])),
        Built::Node(r) => r,
    };
    let negation = arena.lits.iter().map(|c| c.negate_geq().and_then(|n| arena.lit_ids.get(&n).copied())).collect();
    let mut search = Search {
        negation,
        nvars,
        asserted: vec![false; arena.lits.len()],
        trail: Vec::new(),
        deadline: opts.deadline,
        steps: 0,
        least: opts.minimize,
        arena: &arena,
    };
    match search.search(vec![root], vec![]) {
        Err(Timeout) => SatResult::Unknown(UnknownReason::Timeout),
        Ok(None) => SatResult::Unsat,
        Ok(Some(m)) => SatResult::Sat(to_valuation(&m)),
    }
}
