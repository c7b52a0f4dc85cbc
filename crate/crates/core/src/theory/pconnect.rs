use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy_sim::SimState;

/// Probability that two vertices with `j` and `k` unpaired half-edges end up
/// joined by at least one edge when `u` half-edges are matched uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PConnect {
    pub exact: f64,
    /// Second Bonferroni bound, clipped at 0.
    pub lower: f64,
    /// First Bonferroni bound `jk/(u-1)`, clipped at 1.
    pub upper: f64,
}

/// Inclusion–exclusion over the number of `v`–`w` edges. Term `m` is
/// `(j)_m (k)_m / (m! (u-1)(u-3)...(u-2m+1))`; terms whose denominator would
/// reach zero are impossible configurations and are dropped.
pub fn p_connect(j: usize, k: usize, u: usize) -> Result<PConnect> {
    if u < 2 {
        return Err(Error::InvalidState(format!("p_connect needs u >= 2, got {u}")));
    }
    if j > u || k > u {
        return Err(Error::InvalidState(format!("degrees {j}, {k} exceed the {u} unpaired half-edges")));
    }
    let (jf, kf, uf) = (j as f64, k as f64, u as f64);
    let mut exact = 0.0;
    let mut term = jf * kf / (uf - 1.0);
    let mut sign = 1.0;
    for m in 1..=j.min(k) {
        if 2 * m > u {
            break;
        }
        exact += sign * term;
        let mf = m as f64;
        let next_den = uf - 2.0 * mf - 1.0;
        if next_den <= 0.0 {
            break;
        }
        term *= (jf - mf) * (kf - mf) / ((mf + 1.0) * next_den);
        sign = -sign;
    }
    let first = jf * kf / (uf - 1.0);
    let second = if j >= 2 && k >= 2 && u >= 4 {
        jf * (jf - 1.0) * kf * (kf - 1.0) / (2.0 * (uf - 1.0) * (uf - 3.0))
    } else {
        0.0
    };
    Ok(PConnect { exact, lower: (first - second).max(0.0), upper: first.min(1.0) })
}

/// Drift of `(S, U, E(k))` at a state of the lazy process: the expected rate
/// of change when every empty vertex carries a rate-1 clock.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    pub ds: f64,
    pub du: f64,
    pub de: BTreeMap<usize, f64>,
}

pub fn drift(state: &SimState) -> Result<Drift> {
    let empty = state.empty_by_degree();
    let u = state.u();
    if u < 2 && empty.keys().any(|&k| k > 0) {
        return Err(Error::InvalidState(format!(
            "{u} unpaired half-edges but empty vertices of positive degree"
        )));
    }
    let ds = empty.values().sum::<usize>() as f64;
    let du = -empty
        .iter()
        .filter(|(&k, _)| k > 0)
        .map(|(&k, &e)| {
            let kf = k as f64;
            kf * e as f64 * (2.0 - (kf - 1.0) / (u as f64 - 1.0))
        })
        .sum::<f64>();
    let mut de = BTreeMap::new();
    for (&k, &ek) in &empty {
        let mut rate = ek as f64;
        for (&j, &ej) in &empty {
            let others = ek as f64 - if j == k { 1.0 } else { 0.0 };
            if j == 0 || k == 0 || others <= 0.0 {
                continue;
            }
            rate += p_connect(j, k, u as usize)?.exact * ej as f64 * others;
        }
        de.insert(k, -rate);
    }
    Ok(Drift { ds, du, de })
}
