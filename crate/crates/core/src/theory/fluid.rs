//! Fluid trajectory of the rescaled process.
//!
//! Process time `t` and rescaled time `tau_t` are linked by
//! `1 - e^{-t} = int_0^{tau_t} f`. In rescaled time the unpaired half-edges
//! decay as `lambda e^{-2 tau}` and the empty degree-`k` mass as
//! `e^{-t} p_k e^{-k tau}`; the selected mass up to `t` is the integral of
//! the kernel's selected-mass density up to `tau_t`.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{check_tol, invert_cumulative, never_jams, quad, Cumulative, Kernel};
use crate::degree_model::LimitModel;
use crate::error::{Error, Result};
use crate::greedy_sim::trajectory::{csv_header, push_csv_row};

/// Rescaled time `tau_t` reached at process time `t`.
pub fn time_change(model: &LimitModel, t: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidSpec(format!("time must be finite and non-negative, got {t}")));
    }
    let kernel = Kernel::new(model)?;
    if never_jams(model) {
        // the kernel is exactly e^{-sigma}
        return Ok(t);
    }
    let target = -(-t).exp_m1();
    Ok(invert_cumulative(&kernel, Cumulative { sigma: 0.0, value: 0.0 }, target, tol)?.sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidRow {
    pub t: f64,
    pub tau: f64,
    pub u: f64,
    pub s: f64,
    /// Empty mass per degree, aligned with [`FluidTrajectory::degrees`].
    pub e: Vec<f64>,
    pub s_by_degree: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidTrajectory {
    pub lambda: f64,
    /// Degrees with positive mass, increasing.
    pub degrees: Vec<usize>,
    pub rows: Vec<FluidRow>,
}

impl FluidTrajectory {
    fn column(&self, k: usize) -> Option<usize> {
        self.degrees.binary_search(&k).ok()
    }

    /// `e_t(k)` at row `i`.
    pub fn e(&self, i: usize, k: usize) -> f64 {
        self.column(k).map_or(0.0, |c| self.rows[i].e[c])
    }

    /// `s_t(k)` at row `i`.
    pub fn s_k(&self, i: usize, k: usize) -> f64 {
        self.column(k).map_or(0.0, |c| self.rows[i].s_by_degree[c])
    }

    pub fn e_total(&self, i: usize) -> f64 {
        self.rows[i].e.iter().sum()
    }

    pub fn e_map(&self, i: usize) -> BTreeMap<usize, f64> {
        self.degrees.iter().copied().zip(self.rows[i].e.iter().copied()).collect()
    }

    /// Same columns as a simulated trajectory, so the two diff column by column.
    pub fn to_csv(&self, k_track: usize) -> String {
        let mut out = csv_header(k_track);
        for row in &self.rows {
            let (e, sk) = bucket(&self.degrees, &row.e, &row.s_by_degree, k_track);
            push_csv_row(&mut out, row.t, row.u, row.s, &e, &sk);
        }
        out
    }
}

fn bucket(degrees: &[usize], e: &[f64], sk: &[f64], k_track: usize) -> (Vec<f64>, Vec<f64>) {
    let mut eb = vec![0.0; k_track + 2];
    let mut sb = vec![0.0; k_track + 2];
    for (i, &k) in degrees.iter().enumerate() {
        let slot = k.min(k_track + 1);
        eb[slot] += e[i];
        sb[slot] += sk[i];
    }
    (eb, sb)
}

/// Fluid limit sampled at the (sorted, non-negative) times in `grid`.
pub fn limit_trajectory(model: &LimitModel, grid: &[f64], tol: f64) -> Result<FluidTrajectory> {
    check_tol(tol)?;
    if let Some(bad) = grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidSpec(format!("grid time {bad} is not finite and non-negative")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSpec("grid times must be sorted".into()));
    }
    let kernel = Kernel::new(model)?;
    let linear = never_jams(model);
    let support = kernel.support().to_vec();
    let degrees: Vec<usize> = support.iter().map(|&(k, _)| k).collect();
    let lambda = model.lambda();
    let quad_tol = tol / 16.0;

    let mut at = Cumulative { sigma: 0.0, value: 0.0 };
    let mut s = 0.0;
    let mut s_k = vec![0.0; support.len()];
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        let next = if linear {
            Cumulative { sigma: t, value: -(-t).exp_m1() }
        } else {
            invert_cumulative(&kernel, at, -(-t).exp_m1(), tol)?
        };
        if next.sigma > at.sigma {
            s += quad::integrate(|x| kernel.g(x), at.sigma, next.sigma, quad_tol)?.value;
            for (acc, &(k, pk)) in s_k.iter_mut().zip(&support) {
                *acc += quad::integrate(|x| kernel.g_k(k, pk, x), at.sigma, next.sigma, quad_tol)?.value;
            }
        }
        at = next;
        let tau = at.sigma;
        let decay = (-t).exp();
        rows.push(FluidRow {
            t,
            tau,
            u: lambda * (-2.0 * tau).exp(),
            s,
            e: support.iter().map(|&(k, pk)| decay * pk * (-(k as f64) * tau).exp()).collect(),
            s_by_degree: s_k.clone(),
        });
    }
    Ok(FluidTrajectory { lambda, degrees, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree_model::DEFAULT_TAIL_TOL;
    use crate::greedy_sim::TrackConfig;
    use crate::theory::{integrand, jamming_constant};

    #[test]
    fn time_change_values() {
        let reg2 = LimitModel::regular(2).unwrap();
        assert_eq!(time_change(&reg2, 0.0, 1e-12).unwrap(), 0.0);
        for t in [0.1, 1.0, 5.0] {
            let tau = time_change(&reg2, t, 1e-13).unwrap();
            assert!((tau - (1.0 - (-t).exp())).abs() < 1e-11, "t={t}");
        }
        assert!((time_change(&reg2, 40.0, 1e-12).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn regular_two_profile() {
        let reg2 = LimitModel::regular(2).unwrap();
        let grid = crate::greedy_sim::trajectory::uniform_grid(12.0, 97);
        let traj = limit_trajectory(&reg2, &grid, 1e-12).unwrap();
        let first = &traj.rows[0];
        assert_eq!((first.u, first.s, first.e[0]), (2.0, 0.0, 1.0));
        for (i, row) in traj.rows.iter().enumerate() {
            let t = row.t;
            let expected = (-t).exp() * (-2.0 * (1.0 - (-t).exp())).exp();
            assert!((traj.e(i, 2) - expected).abs() < 1e-10);
            assert!(traj.e_total(i) <= (-t).exp() + 1e-15);
        }
        let limit = 0.5 * (1.0 - (-2.0f64).exp());
        assert!((traj.rows.last().unwrap().s - limit).abs() < 1e-4);
    }

    /// Selected mass by direct quadrature over process time.
    fn s_by_time(model: &LimitModel, t: f64) -> f64 {
        quad::integrate(
            |x| {
                let tau = time_change(model, x, 1e-13).unwrap();
                model.p().iter().map(|(&k, &pk)| (-x).exp() * pk * (-(k as f64) * tau).exp()).sum()
            },
            0.0,
            t,
            1e-10,
        )
        .unwrap()
        .value
    }

    #[test]
    fn selected_mass_matches_time_quadrature() {
        let model = LimitModel::new([(0, 0.2), (1, 0.3), (4, 0.5)].into(), Some(2.5), DEFAULT_TAIL_TOL).unwrap();
        let grid = [0.0, 0.5, 1.5, 4.0];
        let traj = limit_trajectory(&model, &grid, 1e-12).unwrap();
        for (row, &t) in traj.rows.iter().zip(&grid) {
            assert!((row.s - s_by_time(&model, t)).abs() < 1e-8, "t={t}");
            let split: f64 = row.s_by_degree.iter().sum();
            assert!((split - row.s).abs() < 1e-10);
        }
    }

    #[test]
    fn invariants_and_terminal_value() {
        for model in [
            LimitModel::regular(3).unwrap(),
            LimitModel::poisson(2.0, 1e-13).unwrap(),
            LimitModel::new([(1, 1.0)].into(), Some(2.0), DEFAULT_TAIL_TOL).unwrap(),
            LimitModel::new([(0, 0.4), (1, 0.6)].into(), None, DEFAULT_TAIL_TOL).unwrap(),
        ] {
            let tol = 1e-11;
            let traj = limit_trajectory(&model, &TrackConfig::default().grid, tol).unwrap();
            for w in traj.rows.windows(2) {
                assert!(w[1].tau > w[0].tau);
                assert!(w[1].s >= w[0].s);
            }
            for row in &traj.rows {
                assert!((row.u - model.lambda() * (-2.0 * row.tau).exp()).abs() < 1e-15);
                assert!(row.e.iter().all(|&e| e >= 0.0));
            }
            let jam = jamming_constant(&model, tol).unwrap();
            assert!((traj.rows.last().unwrap().s - jam.s_inf).abs() < 1e-4);
        }
    }

    /// Central differences of the closed-form profile against the right-hand
    /// sides `du/dt = -2 sum k e_k` and `de_k/dt = -e_k - k e_k sum_j j e_j / u`.
    #[test]
    fn profile_solves_the_differential_system() {
        let h = 1e-4;
        for model in [LimitModel::regular(2).unwrap(), LimitModel::poisson(1.5, 1e-13).unwrap()] {
            for t in [0.2, 1.0, 3.0] {
                let traj = limit_trajectory(&model, &[t - h, t, t + h], 1e-13).unwrap();
                let (a, mid, b) = (&traj.rows[0], &traj.rows[1], &traj.rows[2]);
                let half_edges: f64 = traj.degrees.iter().zip(&mid.e).map(|(&k, &e)| k as f64 * e).sum();
                let du = (b.u - a.u) / (2.0 * h);
                assert!((du + 2.0 * half_edges).abs() < 1e-6);
                for (c, &k) in traj.degrees.iter().enumerate() {
                    let de = (b.e[c] - a.e[c]) / (2.0 * h);
                    let rhs = -mid.e[c] - k as f64 * mid.e[c] * half_edges / mid.u;
                    assert!((de - rhs).abs() < 1e-6, "k={k} t={t}");
                }
                // the rescaled clock runs at f^{-1} e^{-t}
                let dtau = (b.tau - a.tau) / (2.0 * h);
                assert!((dtau - (-t).exp() / integrand(&model, mid.tau).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn csv_matches_simulation_schema() {
        let traj = limit_trajectory(&LimitModel::regular(3).unwrap(), &[0.0, 1.0], 1e-10).unwrap();
        let csv = traj.to_csv(2);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,u,s,e_0,e_1,e_2,e_rest,s_0,s_1,s_2,s_rest");
        assert!(lines.next().unwrap().starts_with("0,3,0,0,0,0,1,"));
    }

    #[test]
    fn rejects_bad_grid() {
        let m = LimitModel::regular(3).unwrap();
        assert!(limit_trajectory(&m, &[1.0, 0.5], 1e-10).is_err());
        assert!(limit_trajectory(&m, &[-1.0], 1e-10).is_err());
    }
}
