//! Deterministic instance generators: the 3-partition and 2-round
//! 3-colourability reductions, the exponential-model family, and seeded
//! random heaps.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::syntax::{PureAtom, SpatialAtom, SymbolicHeap, Term, Var};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("the number of items must be a positive multiple of 3, got {0}")]
    ItemCount(usize),
    #[error("items sum to {sum}, expected {expected}")]
    Sum { sum: u64, expected: u64 },
    #[error("item {item} is not strictly between B/4 and B/2 for B = {bound}")]
    ItemRange { item: u64, bound: u64 },
    #[error("leaf count {k} exceeds vertex count {n}")]
    Leaves { n: usize, k: usize },
    #[error("edge ({0}, {1}) is invalid")]
    Edge(usize, usize),
    #[error("graph file: {0}")]
    GraphSyntax(String),
    #[error("random configuration: {0}")]
    Config(String),
}

/// A validated 3-partition instance `(B, S)` with `|S| = 3m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreePartitionInstance {
    bound: u64,
    items: Vec<u64>,
}

impl ThreePartitionInstance {
    pub fn new(bound: u64, items: Vec<u64>) -> Result<Self, BenchError> {
        if items.is_empty() || !items.len().is_multiple_of(3) {
            return Err(BenchError::ItemCount(items.len()));
        }
        let m = (items.len() / 3) as u64;
        let sum: u64 = items.iter().sum();
        if sum != m * bound {
            return Err(BenchError::Sum { sum, expected: m * bound });
        }
        if let Some(&item) = items.iter().find(|&&k| 4 * k <= bound || 2 * k >= bound) {
            return Err(BenchError::ItemRange { item, bound });
        }
        Ok(ThreePartitionInstance { bound, items })
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn items(&self) -> &[u64] {
        &self.items
    }

    pub fn groups(&self) -> usize {
        self.items.len() / 3
    }
}

fn v(name: String) -> Term {
    Term::var(Var::new(name))
}

fn delimiters(m: usize) -> Vec<Term> {
    (1..=m + 1).map(|i| v(format!("d{i}"))).collect()
}

fn item_vars(n: usize) -> Vec<Term> {
    (1..=n).map(|j| v(format!("a{j}"))).collect()
}

fn item_bounds(d: &[Term], a: &[Term], items: &[u64]) -> Vec<PureAtom> {
    let last = d.last().expect("at least one delimiter");
    a.iter().zip(items).flat_map(|(aj, &k)| [PureAtom::le(d[0].clone(), aj.clone()), PureAtom::lt(aj.add_const(k), last.clone())]).collect()
}

fn item_arrays(a: &[Term], items: &[u64]) -> Vec<SpatialAtom> {
    a.iter().zip(items).map(|(aj, &k)| SpatialAtom::array(aj.add_const(1), aj.add_const(k))).collect()
}

fn fixed_spacing(d: &[Term], bound: u64) -> Vec<PureAtom> {
    d.windows(2).map(|w| PureAtom::eq(w[1].clone(), w[0].add_const(bound + 1))).collect()
}

fn delimiter_cells(d: &[Term]) -> Vec<SpatialAtom> {
    d.iter().map(|t| SpatialAtom::array(t.clone(), t.clone())).collect()
}

/// Delimiters `d_i` one cell wide and `B` cells apart, with every item
/// array placed somewhere between the first and the last delimiter. It is
/// satisfiable iff the items can be split into triples summing to `B`.
pub fn gen_3part_sat(inst: &ThreePartitionInstance) -> SymbolicHeap {
    let d = delimiters(inst.groups());
    let a = item_vars(inst.items.len());
    let mut pure = fixed_spacing(&d, inst.bound);
    pure.extend(item_bounds(&d, &a, &inst.items));
    let mut spatial = delimiter_cells(&d);
    spatial.extend(item_arrays(&a, &inst.items));
    SymbolicHeap::new(pure, spatial)
}

/// The biabduction pair: the left side fixes the delimiters, the right side
/// places the delimiters loosely together with the item arrays.
pub fn gen_3part_biabd(inst: &ThreePartitionInstance) -> (SymbolicHeap, SymbolicHeap) {
    let d = delimiters(inst.groups());
    let a = item_vars(inst.items.len());
    let lhs = SymbolicHeap::new(fixed_spacing(&d, inst.bound), delimiter_cells(&d));
    let mut pure: Vec<PureAtom> = d.windows(2).map(|w| PureAtom::lt(w[0].clone(), w[1].clone())).collect();
    pure.extend(item_bounds(&d, &a, &inst.items));
    let mut spatial = delimiter_cells(&d);
    spatial.extend(item_arrays(&a, &inst.items));
    (lhs, SymbolicHeap::new(pure, spatial))
}

/// `d0 = 1 /\ d_i < d_(i+1) : * arr(d_i, 2 d_i)`; every model allocates an
/// address above `2^n`.
pub fn small_model_family(n: usize) -> SymbolicHeap {
    let d: Vec<Term> = (0..=n).map(|i| v(format!("d{i}"))).collect();
    let mut pure = vec![PureAtom::eq(d[0].clone(), Term::constant(1))];
    pure.extend(d.windows(2).map(|w| PureAtom::lt(w[0].clone(), w[1].clone())));
    let spatial = d.iter().map(|t| SpatialAtom::array(t.clone(), t.scale(2))).collect();
    SymbolicHeap::new(pure, spatial)
}

/// An undirected graph on vertices `1..=n` whose first `k` vertices are the
/// leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    k: usize,
    edges: Vec<(usize, usize)>,
}

impl UndirectedGraph {
    /// Edges are unordered pairs of distinct vertices, each listed once.
    pub fn new(n: usize, k: usize, edges: Vec<(usize, usize)>) -> Result<Self, BenchError> {
        if k > n {
            return Err(BenchError::Leaves { n, k });
        }
        let mut seen = Vec::new();
        for &(i, j) in &edges {
            let key = (i.min(j), i.max(j));
            if i == j || i == 0 || j == 0 || i > n || j > n || seen.contains(&key) {
                return Err(BenchError::Edge(i, j));
            }
            seen.push(key);
        }
        Ok(UndirectedGraph { n, k, edges })
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn leaves(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

impl FromStr for UndirectedGraph {
    type Err = BenchError;

    /// First line `n k`, then one `i j` edge per line; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self, BenchError> {
        let mut lines = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty());
        let pair = |line: &str| -> Result<(usize, usize), BenchError> {
            let nums: Vec<&str> = line.split_whitespace().collect();
            let [x, y] = nums.as_slice() else {
                return Err(BenchError::GraphSyntax(format!("expected two numbers, found {line:?}")));
            };
            let parse = |s: &str| s.parse::<usize>().map_err(|_| BenchError::GraphSyntax(format!("not a number: {s:?}")));
            Ok((parse(x)?, parse(y)?))
        };
        let (n, k) = pair(lines.next().ok_or_else(|| BenchError::GraphSyntax("missing header line".into()))?)?;
        let edges = lines.map(pair).collect::<Result<Vec<_>, _>>()?;
        UndirectedGraph::new(n, k, edges)
    }
}

fn colour(i: usize) -> Term {
    v(format!("col{i}"))
}

fn complement(i: usize, j: usize) -> Term {
    v(format!("ct{i}_{j}"))
}

fn in_colour_range(t: Term) -> [PureAtom; 2] {
    [PureAtom::le(Term::constant(1), t.clone()), PureAtom::le(t, Term::constant(3))]
}

fn leaf_cell(i: usize) -> Term {
    Term::constant(10 * i as u64 + 1)
}

fn edge_base(g: &UndirectedGraph, idx: usize) -> Term {
    Term::constant(10 * (g.k + idx + 1) as u64)
}

fn edge_blocks(g: &UndirectedGraph) -> Vec<SpatialAtom> {
    (0..g.edges.len()).map(|idx| SpatialAtom::array(edge_base(g, idx).add_const(1), edge_base(g, idx).add_const(3))).collect()
}

/// Pure constraints and cells of a proper colouring of the whole graph: the
/// two endpoint colours and the complementary colour of each edge address
/// the three cells of its block.
fn proper_colouring(g: &UndirectedGraph) -> (Vec<PureAtom>, Vec<SpatialAtom>) {
    let mut pure: Vec<PureAtom> = (1..=g.n).flat_map(|i| in_colour_range(colour(i))).collect();
    pure.extend(g.edges.iter().flat_map(|&(i, j)| in_colour_range(complement(i, j))));
    let mut spatial = Vec::new();
    for (idx, &(i, j)) in g.edges.iter().enumerate() {
        let e = edge_base(g, idx);
        for c in [colour(i), colour(j), complement(i, j)] {
            let cell = e.add(&c);
            spatial.push(SpatialAtom::array(cell.clone(), cell));
        }
    }
    (pure, spatial)
}

fn close(pure: Vec<PureAtom>, spatial: Vec<SpatialAtom>, free: &[Var]) -> SymbolicHeap {
    let open = SymbolicHeap::new(pure, spatial);
    let bound = open.all_vars().into_iter().filter(|x| !free.contains(x)).collect();
    SymbolicHeap::with_bound(bound, open.pure, open.spatial)
}

/// The biabduction pair of the colouring game. The left side allocates one
/// cell per leaf, whose content picks the leaf colour modulo 3, and a
/// three-cell block per edge. The right side asks for a proper colouring
/// consistent with the leaf cells. Every variable of the right side is bound.
pub fn gen_colour_biabd(g: &UndirectedGraph) -> (SymbolicHeap, SymbolicHeap) {
    let mut lhs: Vec<SpatialAtom> = (1..=g.k).map(|i| SpatialAtom::array(leaf_cell(i), leaf_cell(i))).collect();
    lhs.extend(edge_blocks(g));
    let (mut pure, mut spatial) = proper_colouring(g);
    let mut cells = Vec::new();
    for i in 1..=g.k {
        let stored = v(format!("c{i}"));
        let q = v(format!("q{i}"));
        pure.push(PureAtom::eq(stored.add_const(1), colour(i).add(&q.scale(3))));
        cells.push(SpatialAtom::points_to(leaf_cell(i), stored));
    }
    cells.append(&mut spatial);
    (SymbolicHeap::new(vec![], lhs), close(pure, cells, &[]))
}

/// The entailment pair of the colouring game: leaf colours are free on both
/// sides, the remaining colours are bound on the right.
pub fn gen_colour_entail(g: &UndirectedGraph) -> (SymbolicHeap, SymbolicHeap) {
    let lhs_pure = (1..=g.k).flat_map(|i| in_colour_range(colour(i))).collect();
    let lhs = SymbolicHeap::new(lhs_pure, edge_blocks(g));
    let (pure, spatial) = proper_colouring(g);
    let leaves: Vec<Var> = (1..=g.k).map(|i| Var::new(format!("col{i}"))).collect();
    (lhs, close(pure, spatial, &leaves))
}

/// Size parameters of random heaps.
///
/// Variables are `x0, x1, ...`. Each term is a variable plus an offset in
/// `0..=max_offset`, or a constant in that range when there are no
/// variables. Arrays are `arr(t, t + len)` with `len` in `0..=max_offset`,
/// points-to atoms are `t |-> t'`, and pure atoms are difference constraints
/// `x R t` with `R` uniform over `=`, `<=` and `<`, where `t` mentions a
/// variable other than `x` whenever there are at least two.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomConfig {
    pub vars: usize,
    pub arrays: usize,
    pub points_to: usize,
    pub pure_atoms: usize,
    pub max_offset: u64,
}

impl RandomConfig {
    pub fn new(vars: usize, arrays: usize) -> Self {
        RandomConfig { vars, arrays, points_to: 0, pure_atoms: 0, max_offset: 2 }
    }
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig { vars: 3, arrays: 2, points_to: 1, pure_atoms: 2, max_offset: 2 }
    }
}

impl fmt::Display for RandomConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vars={},arrays={},pto={},pure={},offset={}", self.vars, self.arrays, self.points_to, self.pure_atoms, self.max_offset)
    }
}

impl FromStr for RandomConfig {
    type Err = BenchError;

    /// Comma-separated `key=value` pairs over `vars`, `arrays`, `pto`,
    /// `pure` and `offset`; missing keys keep their default.
    fn from_str(s: &str) -> Result<Self, BenchError> {
        let mut cfg = RandomConfig::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| BenchError::Config(format!("expected key=value, found {part:?}")))?;
            let n: u64 = value.trim().parse().map_err(|_| BenchError::Config(format!("not a number: {value:?}")))?;
            match key.trim() {
                "vars" => cfg.vars = n as usize,
                "arrays" => cfg.arrays = n as usize,
                "pto" => cfg.points_to = n as usize,
                "pure" => cfg.pure_atoms = n as usize,
                "offset" => cfg.max_offset = n,
                other => return Err(BenchError::Config(format!("unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }
}

struct RandomHeaps {
    rng: ChaCha8Rng,
    cfg: RandomConfig,
}

impl RandomHeaps {
    fn var(&mut self) -> Option<Term> {
        (self.cfg.vars > 0).then(|| Term::var(Var::new(format!("x{}", self.rng.gen_range(0..self.cfg.vars)))))
    }

    fn offset(&mut self) -> u64 {
        self.rng.gen_range(0..=self.cfg.max_offset)
    }

    fn term(&mut self) -> Term {
        let k = self.offset();
        match self.var() {
            Some(x) => x.add_const(k),
            None => Term::constant(k),
        }
    }

    fn heap(&mut self) -> SymbolicHeap {
        let mut pure = Vec::new();
        if self.cfg.vars > 0 {
            for _ in 0..self.cfg.pure_atoms {
                let x = self.var().expect("variables exist");
                let mut t = self.term();
                while self.cfg.vars > 1 && t.vars().eq(x.vars()) {
                    t = self.term();
                }
                pure.push(match self.rng.gen_range(0..3) {
                    0 => PureAtom::eq(x, t),
                    1 => PureAtom::le(x, t),
                    _ => PureAtom::lt(x, t),
                });
            }
        }
        let mut spatial = Vec::new();
        for _ in 0..self.cfg.arrays {
            let lo = self.term();
            let len = self.offset();
            spatial.push(SpatialAtom::array(lo.clone(), lo.add_const(len)));
        }
        for _ in 0..self.cfg.points_to {
            let src = self.term();
            let dst = self.term();
            spatial.push(SpatialAtom::points_to(src, dst));
        }
        spatial.shuffle(&mut self.rng);
        SymbolicHeap::new(pure, spatial)
    }
}

/// A quantifier-free heap determined by `seed` and `cfg`.
pub fn gen_random(seed: u64, cfg: &RandomConfig) -> SymbolicHeap {
    RandomHeaps { rng: ChaCha8Rng::seed_from_u64(seed), cfg: *cfg }.heap()
}

/// Two heaps over the same variables. Half of the pairs derive the right
/// side from the left one by dropping pure atoms and splitting or
/// re-describing spatial atoms, so that valid entailments are common.
pub fn gen_random_pair(seed: u64, cfg: &RandomConfig) -> (SymbolicHeap, SymbolicHeap) {
    let mut g = RandomHeaps { rng: ChaCha8Rng::seed_from_u64(seed), cfg: *cfg };
    let a = g.heap();
    if g.rng.gen_bool(0.5) {
        return (a, g.heap());
    }
    let pure = a.pure.iter().filter(|_| g.rng.gen_bool(0.5)).cloned().collect();
    let mut spatial = Vec::new();
    for s in &a.spatial {
        match s {
            SpatialAtom::Array { lo, hi } if lo != hi && g.rng.gen_bool(0.5) => {
                let len = hi.constant_part().saturating_sub(lo.constant_part());
                let cut = g.rng.gen_range(0..len.max(1));
                spatial.push(SpatialAtom::array(lo.clone(), lo.add_const(cut)));
                spatial.push(SpatialAtom::array(lo.add_const(cut + 1), hi.clone()));
            }
            SpatialAtom::PointsTo { src, .. } if g.rng.gen_bool(0.3) => spatial.push(SpatialAtom::array(src.clone(), src.clone())),
            other => spatial.push(other.clone()),
        }
    }
    (a, SymbolicHeap::new(pure, spatial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{is_two_variable_form, parse_symbolic_heap};

    #[test]
    fn partition_validation() {
        assert!(ThreePartitionInstance::new(12, vec![4, 4, 4]).is_ok());
        assert_eq!(ThreePartitionInstance::new(12, vec![4, 4, 5]), Err(BenchError::Sum { sum: 13, expected: 12 }));
        assert_eq!(ThreePartitionInstance::new(12, vec![3, 4, 5]), Err(BenchError::ItemRange { item: 3, bound: 12 }));
        assert_eq!(ThreePartitionInstance::new(12, vec![4, 8]), Err(BenchError::ItemCount(2)));
    }

    #[test]
    fn partition_shapes() {
        let inst = ThreePartitionInstance::new(12, vec![4, 4, 4]).unwrap();
        let a = gen_3part_sat(&inst);
        assert_eq!(a.spatial.len(), 5);
        assert!(is_two_variable_form(&a));
        assert_eq!(
            a.to_string(),
            "d2 = d1 + 13 /\\ d1 <= a1 /\\ a1 + 4 < d2 /\\ d1 <= a2 /\\ a2 + 4 < d2 /\\ d1 <= a3 /\\ a3 + 4 < d2 : \
             arr(d1, d1) * arr(d2, d2) * arr(a1 + 1, a1 + 4) * arr(a2 + 1, a2 + 4) * arr(a3 + 1, a3 + 4)"
        );
        let (l, r) = gen_3part_biabd(&inst);
        assert!(is_two_variable_form(&l) && is_two_variable_form(&r));
        assert!(l.spatial.iter().chain(&r.spatial).all(|s| !matches!(s, SpatialAtom::PointsTo { .. })));
    }

    #[test]
    fn colour_shapes() {
        let g = UndirectedGraph::new(2, 0, vec![(1, 2)]).unwrap();
        let (a, b) = gen_colour_biabd(&g);
        assert_eq!(a.to_string(), "arr(11, 13)");
        assert_eq!(b.spatial.len(), 3);
        assert_eq!(b.fv().len(), 0);
        let g = UndirectedGraph::new(2, 1, vec![(1, 2)]).unwrap();
        let (a, b) = gen_colour_biabd(&g);
        assert_eq!(a.to_string(), "arr(11, 11) * arr(21, 23)");
        assert_eq!(b.spatial[0], SpatialAtom::points_to(Term::constant(11), Term::var("c1")));
        let (a, b) = gen_colour_entail(&g);
        assert_eq!(a.to_string(), "1 <= col1 /\\ col1 <= 3 : arr(21, 23)");
        assert_eq!(b.fv().into_iter().collect::<Vec<_>>(), vec![Var::new("col1")]);
    }

    #[test]
    fn graph_files() {
        let g: UndirectedGraph = "3 1\n1 2\n# comment\n2 3\n".parse().unwrap();
        assert_eq!((g.vertices(), g.leaves(), g.edges().len()), (3, 1, 2));
        assert!("2 3\n".parse::<UndirectedGraph>().is_err());
        assert!("2 0\n1 1\n".parse::<UndirectedGraph>().is_err());
        assert!("2 0\n1 2\n2 1\n".parse::<UndirectedGraph>().is_err());
        assert!("".parse::<UndirectedGraph>().is_err());
    }

    #[test]
    fn random_heaps() {
        let cfg = RandomConfig::new(2, 1);
        assert_eq!(gen_random(1, &cfg), gen_random(1, &cfg));
        assert_eq!(gen_random(7, &RandomConfig::new(0, 0)).to_string(), "emp");
        let big = RandomConfig { vars: 6, arrays: 5, points_to: 4, pure_atoms: 6, max_offset: 9 };
        for seed in 0..50 {
            let h = gen_random(seed, &big);
            assert_eq!(parse_symbolic_heap(&h.to_string()).unwrap_or_else(|_| panic!("{}", h.to_string())), h);
        }
        assert_eq!("vars=1,pto=3".parse::<RandomConfig>().unwrap(), RandomConfig { vars: 1, points_to: 3, ..RandomConfig::default() });
        assert!("vars=x".parse::<RandomConfig>().is_err());
        let parsed: RandomConfig = big.to_string().parse().unwrap();
        assert_eq!(parsed, big);
    }

    #[test]
    fn exponential_family() {
        assert_eq!(small_model_family(1).to_string(), "d0 = 1 /\\ d0 < d1 : arr(d0, 2*d0) * arr(d1, 2*d1)");
    }
}
