//! Independent replicas of one scenario, run in parallel on rayon.
//!
//! Replica `r` of a run seeded with `seed` draws everything (sampled degrees,
//! graph, clocks or order) from `stream_rng(seed, r)`, so results do not
//! depend on scheduling or thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    run_clocked, run_dynamic, run_static, LoopsPolicy, RngProvenance, SimResult, TrackConfig,
    Trajectory,
};
use crate::config_model::{sample_matching, sample_simple, Multigraph};
use crate::degree_model::{DegreeSequence, SequenceSpec};
use crate::error::Result;
use crate::rng::{stream_rng, SimRng};

/// Configuration-model draws allowed per simple graph before giving up.
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    #[default]
    Multigraph,
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Static,
    #[default]
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSpec {
    pub seq: SequenceSpec,
    #[serde(default)]
    pub graph_mode: GraphMode,
    #[serde(default)]
    pub sim_mode: SimMode,
    #[serde(default)]
    pub loops_policy: LoopsPolicy,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
}

fn default_max_attempts() -> usize {
    DEFAULT_MAX_ATTEMPTS
}

impl ReplicaSpec {
    pub fn new(seq: SequenceSpec, graph_mode: GraphMode, sim_mode: SimMode) -> Self {
        Self { seq, graph_mode, sim_mode, loops_policy: LoopsPolicy::Include, max_attempts: DEFAULT_MAX_ATTEMPTS }
    }
}

#[derive(Debug, Clone)]
pub struct ReplicaOutcome {
    pub replica: u64,
    pub sequence: DegreeSequence,
    pub result: SimResult,
    pub trajectory: Option<Trajectory>,
    /// Configuration-model draws spent on a simple graph; 1 for multigraphs.
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaAggregate {
    pub replicas: usize,
    pub mean: f64,
    /// Sample standard deviation of `S/n`; 0 for a single replica.
    pub stddev: f64,
    pub per_replica: Vec<f64>,
    /// Mean of `S(k)/n` over replicas, for every degree selected at least once.
    pub per_degree_mean: BTreeMap<usize, f64>,
}

impl ReplicaAggregate {
    fn from_outcomes(outcomes: &[ReplicaOutcome]) -> Self {
        let per_replica: Vec<f64> = outcomes.iter().map(|o| o.result.fraction()).collect();
        let (mean, stddev) = mean_stddev(&per_replica);
        let mut per_degree_mean = BTreeMap::new();
        let count = outcomes.len() as f64;
        for o in outcomes {
            let n = o.result.n as f64;
            for (&k, &c) in &o.result.s_final_by_degree {
                *per_degree_mean.entry(k).or_insert(0.0) += c as f64 / n / count;
            }
        }
        Self { replicas: outcomes.len(), mean, stddev, per_replica, per_degree_mean }
    }
}

pub(crate) fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct ReplicaRun {
    pub seed: u64,
    pub outcomes: Vec<ReplicaOutcome>,
    pub aggregate: ReplicaAggregate,
}

impl ReplicaRun {
    /// Per-replica results as JSON records, in replica order.
    pub fn results_json(&self) -> Vec<serde_json::Value> {
        self.outcomes
            .iter()
            .map(|o| {
                let mut v = o.result.to_json();
                v["attempts"] = o.attempts.into();
                v
            })
            .collect()
    }
}

/// Runs `replicas` independent copies of `spec`. With `track`, every replica
/// also records a trajectory (static mode then runs on exponential clocks,
/// which visit vertices in a uniform order as well).
pub fn run_replicas(
    spec: &ReplicaSpec,
    replicas: usize,
    seed: u64,
    track: Option<&TrackConfig>,
) -> Result<ReplicaRun> {
    if replicas == 0 {
        return Err(crate::Error::InvalidSpec("replicas must be at least 1".into()));
    }
    let outcomes = (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_one(spec, seed, r, track))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = ReplicaAggregate::from_outcomes(&outcomes);
    Ok(ReplicaRun { seed, outcomes, aggregate })
}

fn run_one(spec: &ReplicaSpec, seed: u64, replica: u64, track: Option<&TrackConfig>) -> Result<ReplicaOutcome> {
    let mut rng = stream_rng(seed, replica);
    let sequence = spec.seq.build(&mut rng)?;
    let mut attempts = 1;
    let (mut result, trajectory) = match (spec.graph_mode, spec.sim_mode, spec.loops_policy) {
        (GraphMode::Multigraph, SimMode::Dynamic, LoopsPolicy::Include) => {
            let none = TrackConfig::none();
            let (r, t) = run_dynamic(&sequence, &mut rng, track.unwrap_or(&none));
            (r, track.map(|_| t))
        }
        _ => {
            let graph = match spec.graph_mode {
                GraphMode::Multigraph => sample_matching(&sequence, &mut rng),
                GraphMode::Simple => {
                    let sample = sample_simple(&sequence, &mut rng, spec.max_attempts)?;
                    attempts = sample.attempts;
                    sample.graph
                }
            };
            on_graph(&graph, spec, &mut rng, track)
        }
    };
    result.provenance = Some(RngProvenance { seed, stream: replica });
    Ok(ReplicaOutcome { replica, sequence, result, trajectory, attempts })
}

fn on_graph(
    graph: &Multigraph,
    spec: &ReplicaSpec,
    rng: &mut SimRng,
    track: Option<&TrackConfig>,
) -> (SimResult, Option<Trajectory>) {
    match (spec.sim_mode, track) {
        (SimMode::Static, None) => {
            let mut r = run_static(graph, rng, spec.loops_policy);
            r.final_graph = None;
            (r, None)
        }
        (_, Some(tc)) => {
            let (r, t) = run_clocked(graph, rng, spec.loops_policy, tc);
            (r, Some(t))
        }
        (SimMode::Dynamic, None) => {
            let (r, _) = run_clocked(graph, rng, spec.loops_policy, &TrackConfig::none());
            (r, None)
        }
    }
}
