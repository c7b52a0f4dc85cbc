use serde::{Deserialize, Serialize};

use super::SimState;

/// Default horizon of the sampling grid; `sum_k e_t(k) <= e^{-t}` is below
/// 1e-5 from here on.
pub const DEFAULT_T_MAX: f64 = 12.0;
pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_K_TRACK: usize = 50;

/// What to record during a clocked or dynamic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    /// Sampling times, strictly increasing. Empty disables recording.
    pub grid: Vec<f64>,
    /// Degrees `0..=k_track` get their own columns, the rest share one.
    pub k_track: usize,
    /// Complete the pairing after termination and keep the multigraph.
    pub keep_graph: bool,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self { grid: uniform_grid(DEFAULT_T_MAX, DEFAULT_GRID_POINTS), k_track: DEFAULT_K_TRACK, keep_graph: false }
    }
}

impl TrackConfig {
    /// Records nothing.
    pub fn none() -> Self {
        Self { grid: Vec::new(), k_track: DEFAULT_K_TRACK, keep_graph: false }
    }
}

/// `points` equally spaced times from 0 to `t_max` inclusive.
pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect(),
    }
}

/// One row of a trajectory, every count scaled by `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub u: f64,
    pub s: f64,
    /// `E(0..=K)/n` followed by the overflow bucket.
    pub e: Vec<f64>,
    /// `S(0..=K)/n` followed by the overflow bucket.
    pub s_by_degree: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    n: usize,
    k_track: usize,
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn k_track(&self) -> usize {
        self.k_track
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// CSV with columns `t,u,s,e_0..e_K,e_rest,s_0..s_K,s_rest`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_header(self.k_track);
        for row in &self.samples {
            push_csv_row(&mut out, row.t, row.u, row.s, &row.e, &row.s_by_degree);
        }
        out
    }
}

pub(crate) fn csv_header(k_track: usize) -> String {
    let mut cols = vec!["t".to_string(), "u".into(), "s".into()];
    cols.extend((0..=k_track).map(|k| format!("e_{k}")));
    cols.push("e_rest".into());
    cols.extend((0..=k_track).map(|k| format!("s_{k}")));
    cols.push("s_rest".into());
    let mut out = cols.join(",");
    out.push('\n');
    out
}

pub(crate) fn push_csv_row(out: &mut String, t: f64, u: f64, s: f64, e: &[f64], sk: &[f64]) {
    use std::fmt::Write;
    write!(out, "{t},{u},{s}").unwrap();
    for x in e.iter().chain(sk) {
        write!(out, ",{x}").unwrap();
    }
    out.push('\n');
}

pub(crate) struct Recorder<'a> {
    grid: &'a [f64],
    next: usize,
    k_track: usize,
    n: usize,
    samples: Vec<TrajectorySample>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(track: &'a TrackConfig, n: usize) -> Self {
        Self { grid: &track.grid, next: 0, k_track: track.k_track, n, samples: Vec::with_capacity(track.grid.len() + 1) }
    }

    /// Emits every grid point strictly before `t`, all showing `state`.
    pub(crate) fn advance(&mut self, t: f64, state: &SimState) {
        while self.next < self.grid.len() && self.grid[self.next] < t {
            let at = self.grid[self.next];
            self.push(at, state);
            self.next += 1;
        }
    }

    fn push(&mut self, t: f64, state: &SimState) {
        let n = self.n as f64;
        let k = self.k_track;
        let mut e: Vec<f64> = (0..=k).map(|j| state.empty(j) as f64 / n).collect();
        let tracked_empty: usize = (0..=k).map(|j| state.empty(j)).sum();
        e.push((state.empty_total() - tracked_empty) as f64 / n);
        let mut sk: Vec<f64> = (0..=k).map(|j| state.selected(j) as f64 / n).collect();
        let tracked_sel: usize = (0..=k).map(|j| state.selected(j)).sum();
        sk.push((state.s() - tracked_sel) as f64 / n);
        self.samples.push(TrajectorySample {
            t,
            u: state.u() as f64 / n,
            s: state.s() as f64 / n,
            e,
            s_by_degree: sk,
        });
    }

    /// Fills the rest of the grid with the final state and appends the
    /// terminal state when the process outlived the grid.
    pub(crate) fn finish(mut self, state: &SimState, t_last: f64) -> Trajectory {
        self.advance(f64::INFINITY, state);
        if !self.grid.is_empty() && self.samples.last().is_some_and(|s| t_last > s.t) {
            self.push(t_last, state);
        }
        Trajectory { n: self.n, k_track: self.k_track, samples: self.samples }
    }
}
