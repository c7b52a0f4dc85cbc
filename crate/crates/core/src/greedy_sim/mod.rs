//! The greedy independent-set process.
//!
//! Three drivers share one state machine ([`SimState`]):
//!
//! * [`run_static`]: a finished multigraph, vertices visited in a uniformly
//!   random permutation;
//! * [`run_clocked`]: a finished multigraph, vertices visited in the order of
//!   i.i.d. Exp(1) clocks, so that process time is available for trajectories;
//! * [`run_dynamic`]: the lazy process, in which the configuration-model
//!   pairing is revealed only at vertices that enter the independent set.

mod dynamic;
mod replicas;
pub(crate) mod trajectory;

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::config_model::Multigraph;
use crate::rng::{exp1, shuffle};

pub use dynamic::{run_dynamic, DynamicProcess, Firing};
pub use replicas::{
    run_replicas, GraphMode, ReplicaAggregate, ReplicaOutcome, ReplicaRun, ReplicaSpec, SimMode,
    DEFAULT_MAX_ATTEMPTS,
};
pub use trajectory::{uniform_grid, TrackConfig, Trajectory, TrajectorySample, DEFAULT_GRID_POINTS, DEFAULT_K_TRACK, DEFAULT_T_MAX};

use trajectory::Recorder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexStatus {
    Empty,
    Blocked,
    Selected,
}

/// Whether a vertex carrying a loop may enter the independent set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopsPolicy {
    #[default]
    Include,
    Exclude,
}

/// Markov state of the process.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    t: f64,
    u: u64,
    empty: Vec<usize>,
    empty_total: usize,
    empty_half_edges: u64,
    s: usize,
    s_by_degree: Vec<usize>,
    partition: Vec<VertexStatus>,
}

impl SimState {
    /// All vertices empty; `u` unpaired half-edges in total.
    pub(crate) fn new(degrees: &[usize], u: u64) -> Self {
        let max_degree = degrees.iter().copied().max().unwrap_or(0);
        let mut empty = vec![0; max_degree + 1];
        for &d in degrees {
            empty[d] += 1;
        }
        let empty_half_edges = degrees.iter().map(|&d| d as u64).sum();
        Self {
            t: 0.0,
            u,
            empty,
            empty_total: degrees.len(),
            empty_half_edges,
            s: 0,
            s_by_degree: vec![0; max_degree + 1],
            partition: vec![VertexStatus::Empty; degrees.len()],
        }
    }

    pub(crate) fn select(&mut self, v: usize, degree: usize) {
        debug_assert_eq!(self.partition[v], VertexStatus::Empty);
        self.leave_empty(degree);
        self.partition[v] = VertexStatus::Selected;
        self.s += 1;
        self.s_by_degree[degree] += 1;
    }

    pub(crate) fn block(&mut self, v: usize, degree: usize) {
        debug_assert_eq!(self.partition[v], VertexStatus::Empty);
        self.leave_empty(degree);
        self.partition[v] = VertexStatus::Blocked;
    }

    fn leave_empty(&mut self, degree: usize) {
        self.empty[degree] -= 1;
        self.empty_total -= 1;
        self.empty_half_edges -= degree as u64;
    }

    /// Panics if a state invariant is violated.
    pub fn check_invariants(&self) {
        assert_eq!(self.u % 2, 0, "odd number of unpaired half-edges");
        assert!(
            self.empty_half_edges <= self.u,
            "free half-edges at empty vertices ({}) exceed all free half-edges ({})",
            self.empty_half_edges,
            self.u
        );
        assert_eq!(self.s, self.s_by_degree.iter().sum::<usize>());
        assert_eq!(self.empty_total, self.empty.iter().sum::<usize>());
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Unpaired half-edges.
    pub fn u(&self) -> u64 {
        self.u
    }

    /// Empty vertices of degree `k`.
    pub fn empty(&self, k: usize) -> usize {
        self.empty.get(k).copied().unwrap_or(0)
    }

    pub fn empty_by_degree(&self) -> BTreeMap<usize, usize> {
        self.empty.iter().enumerate().filter(|&(_, &c)| c > 0).map(|(k, &c)| (k, c)).collect()
    }

    pub fn empty_total(&self) -> usize {
        self.empty_total
    }

    /// Unpaired half-edges attached to empty vertices, `sum_k k E(k)`.
    pub fn empty_half_edges(&self) -> u64 {
        self.empty_half_edges
    }

    /// Independent-set size.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn selected(&self, k: usize) -> usize {
        self.s_by_degree.get(k).copied().unwrap_or(0)
    }

    pub fn s_by_degree(&self) -> BTreeMap<usize, usize> {
        self.s_by_degree.iter().enumerate().filter(|&(_, &c)| c > 0).map(|(k, &c)| (k, c)).collect()
    }

    pub fn partition(&self) -> &[VertexStatus] {
        &self.partition
    }
}

/// Seed and stream a run was driven by, when known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngProvenance {
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub n: usize,
    pub s_final: usize,
    pub s_final_by_degree: BTreeMap<usize, usize>,
    pub final_graph: Option<Multigraph>,
    pub provenance: Option<RngProvenance>,
    pub loops_policy: LoopsPolicy,
    pub partition: Vec<VertexStatus>,
}

#[derive(Serialize)]
struct SimResultRecord<'a> {
    n: usize,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "S_by_degree")]
    s_by_degree: &'a BTreeMap<usize, usize>,
    seed: Option<u64>,
    stream: Option<u64>,
    loops: LoopsPolicy,
}

impl SimResult {
    fn from_state(state: SimState, loops_policy: LoopsPolicy, final_graph: Option<Multigraph>) -> Self {
        Self {
            n: state.partition.len(),
            s_final: state.s,
            s_final_by_degree: state.s_by_degree(),
            final_graph,
            provenance: None,
            loops_policy,
            partition: state.partition,
        }
    }

    /// Selected fraction `S / n`.
    pub fn fraction(&self) -> f64 {
        self.s_final as f64 / self.n as f64
    }

    /// `{"n":..,"S":..,"S_by_degree":{..},"seed":..,"stream":..,"loops":..}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SimResultRecord {
            n: self.n,
            s: self.s_final,
            s_by_degree: &self.s_final_by_degree,
            seed: self.provenance.map(|p| p.seed),
            stream: self.provenance.map(|p| p.stream),
            loops: self.loops_policy,
        })
        .expect("plain record serialises")
    }
}

/// Greedy process on a finished graph, vertices in uniformly random order.
pub fn run_static<R: RngCore + ?Sized>(g: &Multigraph, rng: &mut R, loops: LoopsPolicy) -> SimResult {
    let mut order: Vec<usize> = (0..g.n()).collect();
    shuffle(&mut order, rng);
    let events = order.into_iter().enumerate().map(|(i, v)| (i as f64, v));
    let (state, _) = greedy_on_graph(g, events, loops, None);
    SimResult::from_state(state, loops, Some(g.clone()))
}

/// Greedy process on a finished graph driven by Exp(1) clocks, with the
/// unpaired half-edge count evolving as in the lazy process: a vertex entering
/// the set pairs all of its half-edges at once.
pub fn run_clocked<R: RngCore + ?Sized>(
    g: &Multigraph,
    rng: &mut R,
    loops: LoopsPolicy,
    track: &TrackConfig,
) -> (SimResult, Trajectory) {
    let clocks = clock_order(g.n(), rng);
    let (state, trajectory) =
        greedy_on_graph(g, clocks.into_iter().map(|(t, v)| (t, v as usize)), loops, Some(track));
    let final_graph = track.keep_graph.then(|| g.clone());
    (SimResult::from_state(state, loops, final_graph), trajectory.expect("recorder present"))
}

/// `n` Exp(1) clock times in vertex order, sorted by time with ties broken by
/// vertex index.
pub(crate) fn clock_order<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Vec<(f64, u32)> {
    let mut clocks: Vec<(f64, u32)> = (0..n as u32).map(|v| (exp1(rng), v)).collect();
    clocks.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    clocks
}

fn greedy_on_graph(
    g: &Multigraph,
    events: impl Iterator<Item = (f64, usize)>,
    loops_policy: LoopsPolicy,
    track: Option<&TrackConfig>,
) -> (SimState, Option<Trajectory>) {
    let degrees = g.degrees();
    let adjacency = g.adjacency();
    let loops = g.loops_per_vertex();
    let total: u64 = degrees.iter().map(|&d| d as u64).sum();
    let mut state = SimState::new(degrees, total);
    let mut recorder = track.map(|tc| Recorder::new(tc, g.n()));
    let mut t_last = 0.0;
    for (t, v) in events {
        if state.empty_total == 0 {
            break;
        }
        if state.partition[v] != VertexStatus::Empty {
            continue;
        }
        if let Some(r) = recorder.as_mut() {
            r.advance(t, &state);
        }
        state.t = t;
        t_last = t;
        if loops_policy == LoopsPolicy::Exclude && loops[v] > 0 {
            state.block(v, degrees[v]);
            continue;
        }
        state.select(v, degrees[v]);
        state.u -= 2 * (degrees[v] - loops[v]) as u64;
        for &w in adjacency.neighbours(v) {
            if state.partition[w] == VertexStatus::Empty {
                state.block(w, degrees[w]);
            }
        }
        if state.s.is_multiple_of(4096) {
            state.check_invariants();
        }
    }
    state.check_invariants();
    let trajectory = recorder.map(|r| r.finish(&state, t_last));
    (state, trajectory)
}

/// Checks that the selected vertices form an independent set (ignoring
/// loops) and, under [`LoopsPolicy::Include`], that it is maximal.
pub fn verify_greedy(
    g: &Multigraph,
    partition: &[VertexStatus],
    loops_policy: LoopsPolicy,
) -> Result<(), String> {
    if partition.len() != g.n() {
        return Err(format!("partition has {} entries for {} vertices", partition.len(), g.n()));
    }
    let selected = |v: usize| partition[v] == VertexStatus::Selected;
    for &(u, v) in g.edges() {
        if u != v && selected(u) && selected(v) {
            return Err(format!("edge ({u}, {v}) joins two selected vertices"));
        }
    }
    let adjacency = g.adjacency();
    let loops = g.loops_per_vertex();
    for v in 0..g.n() {
        if partition[v] == VertexStatus::Empty {
            return Err(format!("vertex {v} still empty"));
        }
        if selected(v) {
            if loops_policy == LoopsPolicy::Exclude && loops[v] > 0 {
                return Err(format!("looped vertex {v} selected under exclude policy"));
            }
            continue;
        }
        let excused = loops_policy == LoopsPolicy::Exclude && loops[v] > 0;
        if !excused && !adjacency.neighbours(v).iter().any(|&w| selected(w)) {
            return Err(format!("vertex {v} is unselected with no selected neighbour"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_model::sample_matching;
    use crate::degree_model::DegreeSequence;
    use crate::rng::stream_rng;

    fn graph(degrees: Vec<usize>, edges: Vec<(usize, usize)>) -> Multigraph {
        Multigraph::new(degrees, edges).unwrap()
    }

    #[test]
    fn isolated_vertex_is_selected() {
        let g = graph(vec![0], vec![]);
        let r = run_static(&g, &mut stream_rng(0, 0), LoopsPolicy::Include);
        assert_eq!(r.s_final, 1);
    }

    #[test]
    fn single_edge_gives_one() {
        let g = graph(vec![1, 1], vec![(0, 1)]);
        for seed in 0..20 {
            let r = run_static(&g, &mut stream_rng(seed, 0), LoopsPolicy::Include);
            assert_eq!(r.s_final, 1);
        }
    }

    #[test]
    fn loop_policy() {
        let g = graph(vec![2], vec![(0, 0)]);
        let mut rng = stream_rng(0, 0);
        assert_eq!(run_static(&g, &mut rng, LoopsPolicy::Include).s_final, 1);
        let excluded = run_static(&g, &mut rng, LoopsPolicy::Exclude);
        assert_eq!(excluded.s_final, 0);
        verify_greedy(&g, &excluded.partition, LoopsPolicy::Exclude).unwrap();
    }

    #[test]
    fn static_runs_are_maximal_independent() {
        let seq = DegreeSequence::from_counts([(1, 40), (2, 30), (3, 20), (6, 10)].into()).unwrap();
        for seed in 0..50 {
            let mut rng = stream_rng(seed, 1);
            let g = sample_matching(&seq, &mut rng);
            for policy in [LoopsPolicy::Include, LoopsPolicy::Exclude] {
                let r = run_static(&g, &mut rng, policy);
                verify_greedy(&g, &r.partition, policy).unwrap();
                assert_eq!(r.s_final, r.s_final_by_degree.values().sum::<usize>());
            }
        }
    }

    #[test]
    fn clocked_run_tracks_half_edges() {
        let seq = DegreeSequence::regular(3, 200).unwrap();
        let mut rng = stream_rng(9, 0);
        let g = sample_matching(&seq, &mut rng);
        let track = TrackConfig::default();
        let (r, traj) = run_clocked(&g, &mut rng, LoopsPolicy::Include, &track);
        verify_greedy(&g, &r.partition, LoopsPolicy::Include).unwrap();
        let first = &traj.samples()[0];
        assert_eq!(first.t, 0.0);
        assert_eq!(first.u, 3.0);
        assert_eq!(first.s, 0.0);
        for w in traj.samples().windows(2) {
            assert!(w[0].t < w[1].t);
            assert!(w[0].u >= w[1].u);
            assert!(w[0].s <= w[1].s);
        }
        assert_eq!(traj.samples().last().unwrap().s, r.fraction());
    }

    #[test]
    fn sim_result_json_shape() {
        let g = graph(vec![1, 1], vec![(0, 1)]);
        let mut r = run_static(&g, &mut stream_rng(0, 0), LoopsPolicy::Include);
        r.provenance = Some(RngProvenance { seed: 7, stream: 0 });
        let v = r.to_json();
        assert_eq!(v["n"], 2);
        assert_eq!(v["S"], 1);
        assert_eq!(v["S_by_degree"]["1"], 1);
        assert_eq!(v["seed"], 7);
    }
}
