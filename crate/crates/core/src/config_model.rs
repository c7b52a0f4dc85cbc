//! Configuration-model multigraphs.
//!
//! Vertex `v` owns `d_v` labelled half-edges and all half-edges are paired by
//! a uniformly random perfect matching. [`HalfEdgePool`] is the pairing
//! primitive shared with the lazy greedy process: it holds the currently
//! unpaired half-edges and supports O(1) removal of a given half-edge and of a
//! uniformly random one.

use std::collections::BTreeSet;

use rand::RngCore;
use serde::Serialize;

use crate::degree_model::DegreeSequence;
use crate::error::{Error, Result};
use crate::rng::uniform_below;

/// Largest half-edge total accepted by [`enumerate_matchings`] (11!! = 10395).
pub const ENUMERATION_MAX_HALF_EDGES: u64 = 12;

const ABSENT: u32 = u32::MAX;

/// Half-edge labelling: vertex `v` owns `start[v]..start[v + 1]`.
#[derive(Debug, Clone)]
pub struct HalfEdges {
    owner: Vec<u32>,
    start: Vec<usize>,
}

impl HalfEdges {
    pub fn new(degrees: &[usize]) -> Self {
        let total: usize = degrees.iter().sum();
        assert!(total < ABSENT as usize, "too many half-edges");
        let mut owner = Vec::with_capacity(total);
        let mut start = Vec::with_capacity(degrees.len() + 1);
        start.push(0);
        for (v, &d) in degrees.iter().enumerate() {
            owner.extend(std::iter::repeat_n(v as u32, d));
            start.push(owner.len());
        }
        Self { owner, start }
    }

    pub fn total(&self) -> usize {
        self.owner.len()
    }

    #[inline]
    pub fn owner(&self, h: u32) -> usize {
        self.owner[h as usize] as usize
    }

    #[inline]
    pub fn of(&self, v: usize) -> std::ops::Range<u32> {
        self.start[v] as u32..self.start[v + 1] as u32
    }
}

/// Set of unpaired half-edges.
#[derive(Debug, Clone)]
pub struct HalfEdgePool {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl HalfEdgePool {
    /// All of `0..total` unpaired.
    pub fn full(total: usize) -> Self {
        Self { items: (0..total as u32).collect(), pos: (0..total as u32).collect() }
    }

    /// Only the listed half-edges unpaired, out of `0..total`.
    pub fn with_members(total: usize, members: impl IntoIterator<Item = u32>) -> Self {
        let mut pool = Self { items: Vec::new(), pos: vec![ABSENT; total] };
        for h in members {
            assert_eq!(pool.pos[h as usize], ABSENT, "half-edge {h} listed twice");
            pool.pos[h as usize] = pool.items.len() as u32;
            pool.items.push(h);
        }
        pool
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[inline]
    pub fn contains(&self, h: u32) -> bool {
        self.pos[h as usize] != ABSENT
    }

    fn remove_at(&mut self, i: usize) -> u32 {
        let h = self.items.swap_remove(i);
        if i < self.items.len() {
            self.pos[self.items[i] as usize] = i as u32;
        }
        self.pos[h as usize] = ABSENT;
        h
    }

    /// Removes `h`, which must be unpaired.
    #[inline]
    pub fn remove(&mut self, h: u32) {
        let i = self.pos[h as usize];
        debug_assert_ne!(i, ABSENT, "half-edge {h} already paired");
        self.remove_at(i as usize);
    }

    /// Removes and returns a uniformly random unpaired half-edge.
    #[inline]
    pub fn take_uniform<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let i = uniform_below(rng, self.items.len());
        self.remove_at(i)
    }

    /// Pairs everything left, each step pairing the last listed half-edge with
    /// a uniform other one.
    pub fn pair_all<R: RngCore + ?Sized>(&mut self, rng: &mut R, mut emit: impl FnMut(u32, u32)) {
        while let Some(&h) = self.items.last() {
            self.remove_at(self.items.len() - 1);
            assert!(!self.items.is_empty(), "odd number of unpaired half-edges");
            let partner = self.take_uniform(rng);
            emit(h, partner);
        }
    }
}

/// A complete pairing of labelled half-edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pairing {
    degrees: Vec<usize>,
    /// Canonical: each pair `(a, b)` has `a < b`, pairs sorted.
    pairs: Vec<(u32, u32)>,
}

impl Pairing {
    fn from_raw(degrees: Vec<usize>, mut pairs: Vec<(u32, u32)>) -> Self {
        for p in pairs.iter_mut() {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort_unstable();
        Self { degrees, pairs }
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn to_multigraph(&self) -> Multigraph {
        let half = HalfEdges::new(&self.degrees);
        let edges = self.pairs.iter().map(|&(a, b)| (half.owner(a), half.owner(b))).collect();
        Multigraph::from_parts(self.degrees.clone(), edges)
    }
}

/// Pairing outcome collapsed to a multigraph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Multigraph {
    n: usize,
    degrees: Vec<usize>,
    /// Sorted, each `(u, v)` with `u <= v`; a loop at `v` is `(v, v)`.
    edges: Vec<(usize, usize)>,
    loop_count: usize,
    multi_edge_count: usize,
}

impl Multigraph {
    /// Checked constructor: the edge multiset must realise `degrees`, a loop
    /// counting twice at its vertex.
    pub fn new(degrees: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = degrees.len();
        let mut seen = vec![0usize; n];
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::InvalidSpec(format!("edge ({u}, {v}) outside 0..{n}")));
            }
            seen[u] += 1;
            seen[v] += 1;
        }
        if seen != degrees {
            return Err(Error::InvalidSpec("edge multiset does not realise the degrees".into()));
        }
        Ok(Self::from_parts(degrees, edges))
    }

    pub(crate) fn from_parts(degrees: Vec<usize>, mut edges: Vec<(usize, usize)>) -> Self {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        let loop_count = edges.iter().filter(|e| e.0 == e.1).count();
        let multi_edge_count = edges.windows(2).filter(|w| w[0] == w[1] && w[0].0 != w[0].1).count();
        Self { n: degrees.len(), degrees, edges, loop_count, multi_edge_count }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn loop_count(&self) -> usize {
        self.loop_count
    }

    /// Edges in excess of the first between each pair of distinct vertices.
    pub fn multi_edge_count(&self) -> usize {
        self.multi_edge_count
    }

    pub fn is_simple(&self) -> bool {
        self.loop_count == 0 && self.multi_edge_count == 0
    }

    /// Number of loops at each vertex.
    pub fn loops_per_vertex(&self) -> Vec<usize> {
        let mut loops = vec![0; self.n];
        for &(u, v) in &self.edges {
            if u == v {
                loops[u] += 1;
            }
        }
        loops
    }

    /// Neighbour lists without loops; a multi-edge contributes repeated entries.
    pub fn adjacency(&self) -> Adjacency {
        let mut deg = vec![0usize; self.n + 1];
        for &(u, v) in &self.edges {
            if u != v {
                deg[u + 1] += 1;
                deg[v + 1] += 1;
            }
        }
        for i in 1..deg.len() {
            deg[i] += deg[i - 1];
        }
        let offsets = deg.clone();
        let mut fill = deg;
        let mut targets = vec![0usize; *offsets.last().unwrap()];
        for &(u, v) in &self.edges {
            if u != v {
                targets[fill[u]] = v;
                fill[u] += 1;
                targets[fill[v]] = u;
                fill[v] += 1;
            }
        }
        Adjacency { offsets, targets }
    }

    /// Edge list as text: one `u v` line per edge, 1-based, sorted, loops as `v v`.
    pub fn edge_list_text(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 12);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        out
    }
}

/// Compressed neighbour lists.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    #[inline]
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

pub fn is_simple(g: &Multigraph) -> bool {
    g.is_simple()
}

/// Uniform random pairing of the half-edges of `seq`, labelled in
/// [`DegreeSequence::vertex_degrees`] order.
pub fn sample_pairing<R: RngCore + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Pairing {
    pairing_for_degrees(seq.vertex_degrees(), rng)
}

fn pairing_for_degrees<R: RngCore + ?Sized>(degrees: Vec<usize>, rng: &mut R) -> Pairing {
    let total: usize = degrees.iter().sum();
    let mut pool = HalfEdgePool::full(total);
    let mut pairs = Vec::with_capacity(total / 2);
    pool.pair_all(rng, |a, b| pairs.push((a, b)));
    Pairing::from_raw(degrees, pairs)
}

/// Configuration-model multigraph with degrees `seq`.
pub fn sample_matching<R: RngCore + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Multigraph {
    sample_pairing(seq, rng).to_multigraph()
}

/// A simple graph drawn by [`sample_simple`].
#[derive(Debug, Clone)]
pub struct SimpleSample {
    pub graph: Multigraph,
    /// Configuration-model draws used, including the accepted one.
    pub attempts: usize,
}

/// Uniform simple graph with degrees `seq`: configuration-model draws are
/// rejected until one is simple.
///
/// Before rejecting, vertices whose degree equals the number of remaining
/// non-isolated vertices minus one are peeled off: in every simple
/// realisation they are joined to all of those vertices, so fixing those edges
/// and sampling the residual sequence leaves the uniform law unchanged. This
/// makes sequences such as the star, where rejection alone would essentially
/// never succeed, exact and immediate.
pub fn sample_simple<R: RngCore + ?Sized>(
    seq: &DegreeSequence,
    rng: &mut R,
    max_attempts: usize,
) -> Result<SimpleSample> {
    if max_attempts == 0 {
        return Err(Error::InvalidSpec("max_attempts must be at least 1".into()));
    }
    let degrees = seq.vertex_degrees();
    let (forced, residual) = peel_dominating(&degrees);

    let alive: Vec<usize> = (0..degrees.len()).filter(|&v| residual[v] > 0).collect();
    let sub_degrees: Vec<usize> = alive.iter().map(|&v| residual[v]).collect();
    for attempt in 1..=max_attempts {
        let sub = pairing_for_degrees(sub_degrees.clone(), rng).to_multigraph();
        if sub.is_simple() {
            let mut edges = forced.clone();
            edges.extend(sub.edges().iter().map(|&(a, b)| (alive[a], alive[b])));
            let graph = Multigraph::from_parts(degrees, edges);
            debug_assert!(graph.is_simple());
            return Ok(SimpleSample { graph, attempts: attempt });
        }
    }
    Err(Error::RejectionExhausted { attempts: max_attempts, second_moment: seq.second_moment() })
}

fn peel_dominating(degrees: &[usize]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut residual = degrees.to_vec();
    let mut alive: BTreeSet<usize> = (0..degrees.len()).filter(|&v| degrees[v] > 0).collect();
    let mut forced = Vec::new();
    loop {
        let m = alive.len();
        if m < 2 {
            break;
        }
        let Some(&hub) = alive.iter().find(|&&v| residual[v] == m - 1) else {
            break;
        };
        alive.remove(&hub);
        residual[hub] = 0;
        let mut emptied = Vec::new();
        for &w in &alive {
            forced.push((hub, w));
            residual[w] -= 1;
            if residual[w] == 0 {
                emptied.push(w);
            }
        }
        for w in emptied {
            alive.remove(&w);
        }
    }
    (forced, residual)
}

/// Every complete pairing of a small half-edge set, each exactly once.
#[derive(Debug, Clone)]
pub struct MatchingOracle {
    degrees: Vec<usize>,
    matchings: Vec<Vec<(u32, u32)>>,
}

impl MatchingOracle {
    pub fn count(&self) -> usize {
        self.matchings.len()
    }

    /// Canonical pair lists (same form as [`Pairing::pairs`]).
    pub fn matchings(&self) -> &[Vec<(u32, u32)>] {
        &self.matchings
    }

    pub fn multigraphs(&self) -> impl Iterator<Item = Multigraph> + '_ {
        let half = HalfEdges::new(&self.degrees);
        self.matchings.iter().map(move |m| {
            let edges = m.iter().map(|&(a, b)| (half.owner(a), half.owner(b))).collect();
            Multigraph::from_parts(self.degrees.clone(), edges)
        })
    }
}

pub fn enumerate_matchings(seq: &DegreeSequence) -> Result<MatchingOracle> {
    enumerate_for_degrees(seq.vertex_degrees())
}

pub(crate) fn enumerate_for_degrees(degrees: Vec<usize>) -> Result<MatchingOracle> {
    let total: usize = degrees.iter().sum();
    if total as u64 > ENUMERATION_MAX_HALF_EDGES {
        return Err(Error::EnumerationTooLarge {
            half_edges: total as u64,
            max: ENUMERATION_MAX_HALF_EDGES,
        });
    }
    let mut matchings = Vec::new();
    let mut current = Vec::with_capacity(total / 2);
    let free: Vec<u32> = (0..total as u32).collect();
    recurse(&free, &mut current, &mut matchings);
    Ok(MatchingOracle { degrees, matchings })
}

fn recurse(free: &[u32], current: &mut Vec<(u32, u32)>, out: &mut Vec<Vec<(u32, u32)>>) {
    let Some((&first, rest)) = free.split_first() else {
        out.push(current.clone());
        return;
    };
    for i in 0..rest.len() {
        current.push((first, rest[i]));
        let remaining: Vec<u32> =
            rest.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &h)| h).collect();
        recurse(&remaining, current, out);
        current.pop();
    }
}

/// `(2m - 1)!!` for `half_edges = 2m`.
pub fn double_factorial_count(half_edges: u64) -> u64 {
    (1..half_edges).step_by(2).product()
}
