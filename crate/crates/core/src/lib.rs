//! Greedy independent sets (random sequential adsorption) on random graphs with
//! a given degree sequence.
//!
//! The crate has two halves that are meant to be checked against each other:
//!
//! * simulation: [`config_model`] pairs half-edges uniformly at random and
//!   [`greedy_sim`] runs the greedy process, either on a finished graph in a
//!   random vertex order or as the continuous-time process with exponential
//!   clocks that reveals the pairing lazily;
//! * limit theory: [`theory`] evaluates the jamming constant, its split by
//!   degree and the full fluid trajectory of the rescaled process.
//!
//! [`experiments`] confronts the two and [`cli`] drives everything from the
//! `jamset` binary.

pub mod cli;
pub mod config_model;
pub mod degree_model;
pub mod error;
pub mod experiments;
pub mod greedy_sim;
pub mod report;
pub mod rng;
pub mod theory;

pub use config_model::{
    enumerate_matchings, is_simple, sample_matching, sample_pairing, sample_simple,
    MatchingOracle, Multigraph, Pairing, SimpleSample,
};
pub use degree_model::{DegreeSequence, Empirical, LimitModel, ModelSpec, SequenceSpec};
pub use error::{Error, Result};
pub use greedy_sim::{
    run_clocked, run_dynamic, run_replicas, run_static, GraphMode, LoopsPolicy, ReplicaRun,
    ReplicaSpec, SimMode, SimResult, SimState, TrackConfig, Trajectory, VertexStatus,
};
pub use theory::{
    closed_form_poisson, closed_form_regular, degree_mass, drift, integrand, jamming_constant,
    limit_trajectory, p_connect, tau_infinity, time_change, weighted_series, Drift,
    FluidTrajectory, PConnect, TheoryResult,
};

/// Tool version embedded in every output artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
