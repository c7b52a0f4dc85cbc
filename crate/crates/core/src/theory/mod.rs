//! Limit objects of the rescaled greedy process.
//!
//! Everything is driven by the rescaled-time kernel
//!
//! ```text
//! f(s) = lambda e^{-2s} / sum_k k p_k e^{-k s}
//! ```
//!
//! whose integral from 0 reaches 1 at the terminal rescaled time `tau_inf`.
//! The selected mass integrates `f(s) sum_k p_k e^{-k s}` over the same range,
//! and splitting that sum by `k` gives the degree composition.

mod fluid;
mod pconnect;
pub mod quad;

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::degree_model::{LimitModel, MASS_TOL};
use crate::error::{Error, Result};

pub use fluid::{limit_trajectory, time_change, FluidRow, FluidTrajectory};
pub use pconnect::{drift, p_connect, Drift, PConnect};

/// Default absolute tolerance for theory evaluations.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest rescaled time the root search will bracket before giving up.
const MAX_SIGMA: f64 = 700.0;

/// `sum_k k^m p_k e^{-k sigma}` for `m` in {0, 1}.
pub fn weighted_series(model: &LimitModel, sigma: f64, m: u32) -> f64 {
    model.p().iter().map(|(&k, &pk)| (k as f64).powi(m as i32) * pk * (-(k as f64) * sigma).exp()).sum()
}

/// The kernel `lambda e^{-2 sigma} / sum_k k p_k e^{-k sigma}`.
pub fn integrand(model: &LimitModel, sigma: f64) -> Result<f64> {
    Ok(Kernel::new(model)?.f(sigma))
}

/// Rescaled-time integrands with the smallest positive degree factored out
/// of every exponential, so nothing underflows at large degree.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    lambda: f64,
    kmin: usize,
    p: Vec<(usize, f64)>,
}

impl Kernel {
    pub(crate) fn new(model: &LimitModel) -> Result<Self> {
        let kmin = model.p().keys().copied().find(|&k| k > 0).ok_or_else(|| {
            Error::InvalidModel("all mass at degree 0: there are no half-edges".into())
        })?;
        Ok(Self { lambda: model.lambda(), kmin, p: model.p().iter().map(|(&k, &pk)| (k, pk)).collect() })
    }

    /// `e^{kmin sigma} sum_k k p_k e^{-k sigma}`.
    fn scaled_degree_sum(&self, sigma: f64) -> f64 {
        self.p
            .iter()
            .filter(|&&(k, _)| k > 0)
            .map(|&(k, pk)| k as f64 * pk * (-((k - self.kmin) as f64) * sigma).exp())
            .sum()
    }

    pub(crate) fn f(&self, sigma: f64) -> f64 {
        self.lambda * ((self.kmin as f64 - 2.0) * sigma).exp() / self.scaled_degree_sum(sigma)
    }

    /// Selected-mass density: `f(sigma) sum_k p_k e^{-k sigma}`.
    pub(crate) fn g(&self, sigma: f64) -> f64 {
        let w = self.scaled_degree_sum(sigma);
        self.p.iter().map(|&(k, pk)| self.degree_term(k, pk, sigma)).sum::<f64>() / w
    }

    /// Degree-`k` part of [`Kernel::g`].
    pub(crate) fn g_k(&self, k: usize, pk: f64, sigma: f64) -> f64 {
        self.degree_term(k, pk, sigma) / self.scaled_degree_sum(sigma)
    }

    fn degree_term(&self, k: usize, pk: f64, sigma: f64) -> f64 {
        let exponent = self.kmin as f64 - 2.0 - k as f64;
        self.lambda * pk * (exponent * sigma).exp()
    }

    pub(crate) fn support(&self) -> &[(usize, f64)] {
        &self.p
    }
}

/// `p_0 + p_1 = 1` with no excess mean: the kernel is exactly `e^{-sigma}`,
/// its integral never reaches 1, and `tau_inf` is infinite.
pub(crate) fn never_jams(model: &LimitModel) -> bool {
    model.pk(0) + model.pk(1) >= 1.0 - MASS_TOL && !model.has_excess()
}

/// A point on the cumulative kernel `F(sigma) = int_0^sigma f`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cumulative {
    pub sigma: f64,
    pub value: f64,
}

/// Finds `sigma >= from.sigma` with `F(sigma) = target` to within `tol`, by
/// bracket doubling and then Newton steps (`F' = f` is known) safeguarded by
/// bisection. Integrals are always taken from the nearest known point.
pub(crate) fn invert_cumulative(kernel: &Kernel, from: Cumulative, target: f64, tol: f64) -> Result<Cumulative> {
    let quad_tol = tol / 16.0;
    let piece = |a: f64, b: f64| quad::integrate(|s| kernel.f(s), a, b, quad_tol).map(|q| q.value);
    if target <= from.value {
        return Ok(from);
    }
    let mut lo = from;
    let mut width = 1.0;
    let mut hi = loop {
        let sigma = lo.sigma + width;
        let value = lo.value + piece(lo.sigma, sigma)?;
        if value >= target {
            break Cumulative { sigma, value };
        }
        if sigma > MAX_SIGMA {
            return Err(Error::Numerical(format!(
                "kernel integral stays below {target} up to rescaled time {sigma}"
            )));
        }
        lo = Cumulative { sigma, value };
        width *= 2.0;
    };

    let mut x = lo;
    let mut converged = false;
    let mut polish = 0;
    for _ in 0..200 {
        let slope = kernel.f(x.sigma);
        let mut next = x.sigma - (x.value - target) / slope;
        if !(next > lo.sigma && next < hi.sigma) || !next.is_finite() {
            next = 0.5 * (lo.sigma + hi.sigma);
        }
        let value = if next - lo.sigma <= hi.sigma - next {
            lo.value + piece(lo.sigma, next)?
        } else {
            hi.value - piece(next, hi.sigma)?
        };
        let step = (next - x.sigma).abs();
        x = Cumulative { sigma: next, value };
        if value < target {
            lo = x;
        } else {
            hi = x;
        }
        if (value - target).abs() <= tol / 2.0 {
            converged = true;
            // a couple of extra Newton steps settle sigma to rounding level
            polish += 1;
            if polish > 2 || step <= 4.0 * f64::EPSILON * (1.0 + next) {
                break;
            }
        } else if converged {
            break;
        }
        if hi.sigma - lo.sigma <= 4.0 * f64::EPSILON * (1.0 + hi.sigma) {
            break;
        }
    }
    let best = [lo, hi, x]
        .into_iter()
        .min_by(|a, b| (a.value - target).abs().total_cmp(&(b.value - target).abs()))
        .expect("three candidates");
    if (best.value - target).abs() > tol {
        return Err(Error::Numerical(format!(
            "root search for F = {target} stopped at sigma = {} with residual {:.3e} (tolerance {tol:.3e})",
            best.sigma,
            (best.value - target).abs()
        )));
    }
    Ok(best)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("tolerance must be positive, got {tol}")))
    }
}

/// Terminal rescaled time: the root of `int_0^tau f = 1`, or infinity.
pub fn tau_infinity(model: &LimitModel, tol: f64) -> Result<f64> {
    Ok(terminal(model, tol)?.0)
}

/// `(tau_inf, residual)`.
fn terminal(model: &LimitModel, tol: f64) -> Result<(f64, f64)> {
    check_tol(tol)?;
    let kernel = Kernel::new(model)?;
    if never_jams(model) {
        return Ok((f64::INFINITY, 0.0));
    }
    let root = invert_cumulative(&kernel, Cumulative { sigma: 0.0, value: 0.0 }, 1.0, tol)?;
    Ok((root.sigma, (root.value - 1.0).abs()))
}

fn serialize_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
    }
}

/// Jamming constant with its degree composition and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryResult {
    #[serde(serialize_with = "serialize_extended")]
    pub tau_inf: f64,
    pub s_inf: f64,
    pub s_inf_by_degree: BTreeMap<usize, f64>,
    /// `|int_0^tau_inf f - 1|` as achieved.
    pub residual: f64,
    /// `|s_inf - sum_k s_inf(k)|`.
    pub mass_gap: f64,
    pub lambda: f64,
    pub mu: f64,
    pub tol: f64,
}

impl TheoryResult {
    /// `k,p_k,s_inf_k` rows.
    pub fn to_csv(&self, model: &LimitModel) -> String {
        let mut out = String::from("k,p_k,s_inf_k\n");
        for (&k, &mass) in &self.s_inf_by_degree {
            out.push_str(&format!("{k},{},{mass}\n", model.pk(k)));
        }
        out
    }

    /// The `count` degrees holding the most selected mass, largest first.
    pub fn top_degrees(&self, count: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = self.s_inf_by_degree.iter().map(|(&k, &m)| (k, m)).collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(count);
        all
    }
}

/// Limit of `S/n` together with its split by degree.
pub fn jamming_constant(model: &LimitModel, tol: f64) -> Result<TheoryResult> {
    let (tau_inf, residual) = terminal(model, tol)?;
    let kernel = Kernel::new(model)?;
    let (s_inf, s_inf_by_degree) = if tau_inf.is_infinite() {
        let p0 = model.pk(0);
        let p1 = model.pk(1);
        let by_degree = [(0, p0), (1, 0.5 * p1)].into_iter().filter(|&(k, _)| model.pk(k) > 0.0).collect();
        (p0 + 0.5 * p1, by_degree)
    } else {
        let quad_tol = tol / 16.0;
        let s = quad::integrate(|x| kernel.g(x), 0.0, tau_inf, quad_tol)?.value;
        let mut by_degree = BTreeMap::new();
        for &(k, pk) in kernel.support() {
            if pk > model.tail_tol() {
                let mass = quad::integrate(|x| kernel.g_k(k, pk, x), 0.0, tau_inf, quad_tol)?.value;
                by_degree.insert(k, mass);
            }
        }
        (s, by_degree)
    };
    let mass_gap = (s_inf - s_inf_by_degree.values().sum::<f64>()).abs();
    if residual > tol {
        return Err(Error::Numerical(format!("terminal residual {residual:.3e} exceeds {tol:.3e}")));
    }
    if mass_gap > 10.0 * tol + model.tail_tol() * tau_inf.min(1e3) * model.lambda() {
        return Err(Error::Numerical(format!(
            "degree masses miss the jamming constant by {mass_gap:.3e}"
        )));
    }
    if !(-tol..=1.0 + tol).contains(&s_inf) {
        return Err(Error::Numerical(format!("jamming constant {s_inf} outside [0, 1]")));
    }
    Ok(TheoryResult {
        tau_inf,
        s_inf,
        s_inf_by_degree,
        residual,
        mass_gap,
        lambda: model.lambda(),
        mu: model.mean(),
        tol,
    })
}

/// Limit of `S(k)/n`, the selected vertices of degree `k`.
pub fn degree_mass(model: &LimitModel, k: usize, tol: f64) -> Result<f64> {
    let pk = model.pk(k);
    if pk == 0.0 {
        check_tol(tol)?;
        return Ok(0.0);
    }
    let tau_inf = tau_infinity(model, tol)?;
    if tau_inf.is_infinite() {
        return Ok(if k == 0 { pk } else { 0.5 * pk });
    }
    let kernel = Kernel::new(model)?;
    Ok(quad::integrate(|x| kernel.g_k(k, pk, x), 0.0, tau_inf, tol / 16.0)?.value)
}

/// Closed-form limits for families where the integrals can be done by hand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm {
    #[serde(serialize_with = "serialize_extended")]
    pub tau_inf: f64,
    pub s_inf: f64,
    pub s_inf_by_degree: BTreeMap<usize, f64>,
}

/// `d`-regular limit.
pub fn closed_form_regular(d: usize) -> Result<ClosedForm> {
    let (tau_inf, s_inf) = match d {
        0 | 1 => return Err(Error::InvalidModel(format!("closed form needs d >= 2, got {d}"))),
        2 => (1.0, 0.5 * (1.0 - (-2.0f64).exp())),
        _ => {
            let d = d as f64;
            ((d - 1.0).ln() / (d - 2.0), 0.5 * (1.0 - (d - 1.0).powf(-2.0 / (d - 2.0))))
        }
    };
    Ok(ClosedForm { tau_inf, s_inf, s_inf_by_degree: BTreeMap::from([(d, s_inf)]) })
}

/// Poisson(`c`) limit, with the degree split up to `max_k` obtained by
/// integrating the Poisson density in its parameter over
/// `[c - ln(c + 1), c]`.
pub fn closed_form_poisson(c: f64, max_k: usize) -> Result<ClosedForm> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidModel(format!("Poisson parameter must be positive, got {c}")));
    }
    let coverage = c.ln_1p() / c;
    let tau_inf = -(-coverage).ln_1p();
    let lower = c - c.ln_1p();
    let mut s_inf_by_degree = BTreeMap::new();
    let mut ln_factorial = 0.0;
    for k in 0..=max_k {
        if k > 0 {
            ln_factorial += (k as f64).ln();
        }
        // lower > 0 for every c > 0, so ln x is finite on the whole range
        let density = |x: f64| (k as f64 * x.ln() - x - ln_factorial).exp();
        let mass = quad::integrate(density, lower, c, 1e-15)?.value / c;
        s_inf_by_degree.insert(k, mass);
    }
    Ok(ClosedForm { tau_inf, s_inf: coverage, s_inf_by_degree })
}
