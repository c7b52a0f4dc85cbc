//! The lazy continuous-time process.
//!
//! Every vertex carries an Exp(1) clock. When the clock of an empty vertex
//! rings it joins the independent set and its half-edges are paired one after
//! another, each with a uniformly random unpaired half-edge (possibly one of
//! its own, giving a loop). Empty vertices reached this way become blocked;
//! their own half-edges stay unpaired. Rings at blocked vertices are ignored
//! and the process stops once no empty vertex is left.

use rand::RngCore;

use super::trajectory::Recorder;
use super::{clock_order, LoopsPolicy, SimResult, SimState, TrackConfig, Trajectory, VertexStatus};
use crate::config_model::{HalfEdgePool, HalfEdges, Multigraph};
use crate::degree_model::DegreeSequence;
use crate::error::{Error, Result};

/// Effect of one clock ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Firing {
    pub selected: bool,
    /// Pairings made, each removing two unpaired half-edges.
    pub pairings: usize,
    pub loops: usize,
    /// Empty vertices moved to blocked.
    pub blocked: usize,
}

impl Firing {
    /// Decrease of the unpaired half-edge count, `2 j - 2 L`.
    pub fn u_drop(&self) -> u64 {
        2 * self.pairings as u64
    }
}

#[derive(Debug, Clone)]
pub struct DynamicProcess {
    degrees: Vec<usize>,
    half: HalfEdges,
    pool: HalfEdgePool,
    state: SimState,
    edges: Option<Vec<(usize, usize)>>,
    events: u64,
}

impl DynamicProcess {
    /// Fresh process: every vertex empty, every half-edge unpaired.
    pub fn new(seq: &DegreeSequence, keep_edges: bool) -> Self {
        let degrees = seq.vertex_degrees();
        let half = HalfEdges::new(&degrees);
        let pool = HalfEdgePool::full(half.total());
        let state = SimState::new(&degrees, half.total() as u64);
        let edges = keep_edges.then(|| Vec::with_capacity(half.total() / 2));
        Self { degrees, half, pool, state, edges, events: 0 }
    }

    /// Mid-run state: empty vertices of the given degrees followed by blocked
    /// vertices holding the given numbers of still-unpaired half-edges.
    pub fn frozen(empty_degrees: &[usize], blocked_free: &[usize]) -> Result<Self> {
        let degrees: Vec<usize> = empty_degrees.iter().chain(blocked_free).copied().collect();
        if degrees.iter().sum::<usize>() % 2 == 1 {
            return Err(Error::InvalidState("odd number of unpaired half-edges".into()));
        }
        let half = HalfEdges::new(&degrees);
        let pool = HalfEdgePool::full(half.total());
        let mut state = SimState::new(&degrees, half.total() as u64);
        for (i, &d) in blocked_free.iter().enumerate() {
            state.block(empty_degrees.len() + i, d);
        }
        state.check_invariants();
        Ok(Self { degrees, half, pool, state, edges: None, events: 0 })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn empty_vertices(&self) -> Vec<usize> {
        (0..self.degrees.len()).filter(|&v| self.state.partition[v] == VertexStatus::Empty).collect()
    }

    /// Rings the clock of `v` at time `t`.
    pub fn fire<R: RngCore + ?Sized>(&mut self, v: usize, t: f64, rng: &mut R) -> Firing {
        if self.state.partition[v] != VertexStatus::Empty {
            return Firing::default();
        }
        let before = (self.state.u, self.state.s);
        self.state.t = t;
        self.state.select(v, self.degrees[v]);
        let mut firing = Firing { selected: true, ..Firing::default() };
        for h in self.half.of(v) {
            if !self.pool.contains(h) {
                // already paired with an earlier half-edge of v
                continue;
            }
            self.pool.remove(h);
            let partner = self.pool.take_uniform(rng);
            let w = self.half.owner(partner);
            self.state.u -= 2;
            firing.pairings += 1;
            if w == v {
                firing.loops += 1;
            } else if self.state.partition[w] == VertexStatus::Empty {
                self.state.block(w, self.degrees[w]);
                firing.blocked += 1;
            }
            if let Some(edges) = self.edges.as_mut() {
                edges.push((v, w));
            }
        }
        debug_assert_eq!(firing.pairings, self.degrees[v] - firing.loops);
        debug_assert_eq!(self.state.s, before.1 + 1);
        debug_assert!(self.state.u <= before.0);
        self.events += 1;
        if self.events.is_multiple_of(4096) {
            self.state.check_invariants();
        }
        firing
    }

    /// Pairs the half-edges left at blocked vertices uniformly at random.
    pub fn complete<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        let half = &self.half;
        let edges = &mut self.edges;
        let mut paired = 0u64;
        self.pool.pair_all(rng, |a, b| {
            paired += 2;
            if let Some(edges) = edges.as_mut() {
                edges.push((half.owner(a), half.owner(b)));
            }
        });
        self.state.u -= paired;
    }

    /// Final state and, when edges were kept and the pairing is complete, the multigraph.
    pub fn into_parts(self) -> (SimState, Option<Multigraph>) {
        let graph = match self.edges {
            Some(edges) if self.pool.is_empty() => Some(Multigraph::from_parts(self.degrees, edges)),
            _ => None,
        };
        (self.state, graph)
    }
}

/// Runs the lazy process to termination. Randomness is consumed as `n`
/// clock draws (in vertex order) followed by the pairing draws.
pub fn run_dynamic<R: RngCore + ?Sized>(
    seq: &DegreeSequence,
    rng: &mut R,
    track: &TrackConfig,
) -> (SimResult, Trajectory) {
    let clocks = clock_order(seq.n(), rng);
    let mut process = DynamicProcess::new(seq, track.keep_graph);
    let mut recorder = Recorder::new(track, seq.n());
    let mut t_last = 0.0;
    for (t, v) in clocks {
        if process.state.empty_total() == 0 {
            break;
        }
        let v = v as usize;
        if process.state.partition[v] != VertexStatus::Empty {
            continue;
        }
        recorder.advance(t, &process.state);
        process.fire(v, t, rng);
        t_last = t;
    }
    process.state.check_invariants();
    let trajectory = recorder.finish(&process.state, t_last);
    if track.keep_graph {
        process.complete(rng);
    }
    let (state, graph) = process.into_parts();
    (SimResult::from_state(state, LoopsPolicy::Include, graph), trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy_sim::verify_greedy;
    use crate::rng::stream_rng;

    fn keep() -> TrackConfig {
        TrackConfig { keep_graph: true, ..TrackConfig::default() }
    }

    #[test]
    fn two_leaves_give_one() {
        let seq = DegreeSequence::from_degrees(&[1, 1]).unwrap();
        for seed in 0..20 {
            let (r, _) = run_dynamic(&seq, &mut stream_rng(seed, 0), &keep());
            assert_eq!(r.s_final, 1);
            assert_eq!(r.final_graph.unwrap().edges(), &[(0, 1)]);
        }
    }

    #[test]
    fn forced_loop_in_one_event() {
        let seq = DegreeSequence::from_degrees(&[2]).unwrap();
        let mut p = DynamicProcess::new(&seq, true);
        assert_eq!(p.state().u(), 2);
        let f = p.fire(0, 0.5, &mut stream_rng(0, 0));
        assert_eq!(f, Firing { selected: true, pairings: 1, loops: 1, blocked: 0 });
        assert_eq!(p.state().u(), 0);
        assert_eq!(p.state().s(), 1);
        let (_, g) = p.into_parts();
        assert_eq!(g.unwrap().edges(), &[(0, 0)]);
    }

    #[test]
    fn blocked_rings_are_ignored() {
        let seq = DegreeSequence::from_degrees(&[1, 1]).unwrap();
        let mut p = DynamicProcess::new(&seq, false);
        let mut rng = stream_rng(0, 0);
        p.fire(0, 0.1, &mut rng);
        assert_eq!(p.fire(1, 0.2, &mut rng), Firing::default());
        assert_eq!(p.state().s(), 1);
    }

    #[test]
    fn completed_runs_are_maximal_independent() {
        let seq = DegreeSequence::from_counts([(0, 5), (1, 30), (2, 30), (3, 20), (7, 6)].into()).unwrap();
        for seed in 0..100 {
            let (r, traj) = run_dynamic(&seq, &mut stream_rng(seed, 2), &keep());
            let g = r.final_graph.as_ref().unwrap();
            let total: usize = g.degrees().iter().sum();
            assert_eq!(total as u64, seq.half_edges());
            verify_greedy(g, &r.partition, LoopsPolicy::Include).unwrap();
            let first = &traj.samples()[0];
            assert_eq!(first.s, 0.0);
            assert_eq!(first.e[2], 30.0 / seq.n() as f64);
        }
    }

    #[test]
    fn frozen_state_layout() {
        let p = DynamicProcess::frozen(&[2, 3], &[1, 4]).unwrap();
        assert!(DynamicProcess::frozen(&[2, 3], &[]).is_err());
        assert_eq!(p.state().u(), 10);
        assert_eq!(p.state().empty_total(), 2);
        assert_eq!(p.state().empty_half_edges(), 5);
        assert_eq!(p.empty_vertices(), vec![0, 1]);
    }

    #[test]
    fn regular_two_near_limit() {
        let seq = DegreeSequence::regular(2, 100_000).unwrap();
        let (r, _) = run_dynamic(&seq, &mut stream_rng(2015, 0), &TrackConfig::none());
        let limit = 0.5 * (1.0 - (-2.0f64).exp());
        assert!((r.fraction() - limit).abs() < 0.01, "{}", r.fraction());
    }
}
