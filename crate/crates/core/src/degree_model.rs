//! Degree sequences and their limiting degree distributions.
//!
//! A [`DegreeSequence`] is exact finite-`n` data, stored as the count `n_k` of
//! vertices of each degree `k`. A [`LimitModel`] is the limiting distribution
//! `(p_k)` together with the mean-degree parameter `lambda`, which may exceed
//! `sum_k k p_k` when the degrees are not uniformly integrable.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{open01, uniform_below};

/// Tolerance on `sum_k p_k = 1` and on `lambda >= sum_k k p_k`.
pub const MASS_TOL: f64 = 1e-12;

/// Default truncation tolerance for infinite-support distributions.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSequence {
    counts: BTreeMap<usize, usize>,
    n: usize,
    m2: u64,
}

/// Empirical degree distribution of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Empirical {
    pub phat: BTreeMap<usize, f64>,
    pub lambda_n: f64,
}

impl DegreeSequence {
    /// Builds a sequence from the counts `n_k`. Zero counts are dropped.
    pub fn from_counts(counts: BTreeMap<usize, usize>) -> Result<Self> {
        let counts: BTreeMap<usize, usize> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let n: usize = counts.values().sum();
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let total: u64 = counts.iter().map(|(&k, &c)| k as u64 * c as u64).sum();
        if total % 2 == 1 {
            return Err(Error::OddDegreeSum(total));
        }
        let m2 = counts
            .iter()
            .map(|(&k, &c)| (k as u64) * (k as u64).saturating_sub(1) * c as u64)
            .sum();
        Ok(Self { counts, n, m2 })
    }

    pub fn from_degrees(degrees: &[usize]) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for &d in degrees {
            *counts.entry(d).or_insert(0) += 1;
        }
        Self::from_counts(counts)
    }

    /// `n` vertices of degree `d`.
    pub fn regular(d: usize, n: usize) -> Result<Self> {
        Self::from_counts(BTreeMap::from([(d, n)]))
    }

    /// One centre of degree `n - 1` and `n - 1` leaves of degree 1.
    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!("star needs n >= 2, got {n}")));
        }
        let mut counts = BTreeMap::new();
        *counts.entry(n - 1).or_insert(0) += 1;
        *counts.entry(1).or_insert(0) += n - 1;
        Self::from_counts(counts)
    }

    /// Two blocks of `sizes[i]` vertices of degree `degrees[i]`.
    pub fn two_block(sizes: [usize; 2], degrees: [usize; 2]) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for i in 0..2 {
            *counts.entry(degrees[i]).or_insert(0) += sizes[i];
        }
        Self::from_counts(counts)
    }

    /// Two blocks where an odd half-edge total is repaired by raising the
    /// degree of one vertex of the second block by one.
    fn two_block_repaired(sizes: [usize; 2], degrees: [usize; 2]) -> Result<Self> {
        let total = sizes[0] as u64 * degrees[0] as u64 + sizes[1] as u64 * degrees[1] as u64;
        if total.is_multiple_of(2) {
            return Self::two_block(sizes, degrees);
        }
        if sizes[1] == 0 {
            return Err(Error::OddDegreeSum(total));
        }
        let mut counts = BTreeMap::new();
        *counts.entry(degrees[0]).or_insert(0) += sizes[0];
        *counts.entry(degrees[1]).or_insert(0) += sizes[1] - 1;
        *counts.entry(degrees[1] + 1).or_insert(0) += 1;
        Self::from_counts(counts)
    }

    /// `n` i.i.d. degrees drawn from `model.p()` by inversion. If the total is
    /// odd, one uniformly chosen vertex gets one extra half-edge.
    pub fn sample<R: RngCore + ?Sized>(model: &LimitModel, n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let support: Vec<(usize, f64)> = model.p().iter().map(|(&k, &p)| (k, p)).collect();
        let mut degrees = Vec::with_capacity(n);
        for _ in 0..n {
            let u = open01(rng);
            let mut acc = 0.0;
            let mut pick = support.last().map(|&(k, _)| k).unwrap_or(0);
            for &(k, p) in &support {
                acc += p;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            degrees.push(pick);
        }
        let total: u64 = degrees.iter().map(|&d| d as u64).sum();
        if total % 2 == 1 {
            let v = uniform_below(rng, n);
            degrees[v] += 1;
        }
        Self::from_degrees(&degrees)
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    pub fn count(&self, k: usize) -> usize {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `sum_i d_i (d_i - 1)`.
    pub fn m2(&self) -> u64 {
        self.m2
    }

    /// Total number of half-edges, `sum_k k n_k`.
    pub fn half_edges(&self) -> u64 {
        self.counts.iter().map(|(&k, &c)| k as u64 * c as u64).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// `sum_k k^2 n_k / n`.
    pub fn second_moment(&self) -> f64 {
        let s: f64 = self.counts.iter().map(|(&k, &c)| (k as f64).powi(2) * c as f64).sum();
        s / self.n as f64
    }

    /// Per-vertex degrees, highest degree first (so a star's centre is vertex 0).
    pub fn vertex_degrees(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        for (&k, &c) in self.counts.iter().rev() {
            out.extend(std::iter::repeat_n(k, c));
        }
        out
    }

    pub fn empirical(&self) -> Empirical {
        let n = self.n as f64;
        let phat = self.counts.iter().map(|(&k, &c)| (k, c as f64 / n)).collect();
        Empirical { phat, lambda_n: self.half_edges() as f64 / n }
    }
}

/// Limiting degree distribution with its mean-degree parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitModel {
    p: BTreeMap<usize, f64>,
    lambda: f64,
    tail_tol: f64,
}

impl LimitModel {
    /// Validates `p` and `lambda`. When `lambda` is omitted it is `sum_k k p_k`.
    pub fn new(p: BTreeMap<usize, f64>, lambda: Option<f64>, tail_tol: f64) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol.is_finite()) {
            return Err(Error::InvalidModel(format!("tail_tol must be positive, got {tail_tol}")));
        }
        if let Some((&k, &pk)) = p.iter().find(|(_, &pk)| !(pk >= 0.0 && pk.is_finite())) {
            return Err(Error::InvalidModel(format!("p_{k} = {pk} is not a probability")));
        }
        let p: BTreeMap<usize, f64> = p.into_iter().filter(|&(_, pk)| pk > 0.0).collect();
        let total: f64 = p.values().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidModel(format!("masses sum to {total}, not 1")));
        }
        let mu = mean_of(&p);
        let lambda = match lambda {
            None => mu,
            Some(l) if l.is_infinite() && l > 0.0 => {
                return Err(Error::Unsupported(
                    "lambda = infinity: the limit formulas are no longer meaningful".into(),
                ))
            }
            Some(l) if !l.is_finite() => {
                return Err(Error::InvalidModel(format!("lambda = {l} is not finite")))
            }
            Some(l) => {
                if l < mu - MASS_TOL {
                    return Err(Error::InvalidModel(format!(
                        "lambda = {l} is below the mean {mu} of p (Fatou bound mu <= lambda)"
                    )));
                }
                l
            }
        };
        if lambda <= 0.0 {
            return Err(Error::InvalidModel(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { p, lambda, tail_tol })
    }

    /// Point mass at `d`.
    pub fn regular(d: usize) -> Result<Self> {
        Self::new(BTreeMap::from([(d, 1.0)]), None, DEFAULT_TAIL_TOL)
    }

    /// Poisson(`c`) truncated where the remaining tail mass drops below
    /// `tail_tol`, then renormalised.
    pub fn poisson(c: f64, tail_tol: f64) -> Result<Self> {
        Self::new(poisson_masses(c, tail_tol)?, None, tail_tol)
    }

    pub fn p(&self) -> &BTreeMap<usize, f64> {
        &self.p
    }

    pub fn pk(&self, k: usize) -> f64 {
        self.p.get(&k).copied().unwrap_or(0.0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// `mu = sum_k k p_k`.
    pub fn mean(&self) -> f64 {
        mean_of(&self.p)
    }

    /// Whether `lambda` strictly exceeds the mean of `p`.
    pub fn has_excess(&self) -> bool {
        self.lambda > self.mean() + MASS_TOL
    }
}

fn mean_of(p: &BTreeMap<usize, f64>) -> f64 {
    p.iter().map(|(&k, &pk)| k as f64 * pk).sum()
}

fn poisson_masses(c: f64, tail_tol: f64) -> Result<BTreeMap<usize, f64>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidModel(format!("Poisson parameter must be positive, got {c}")));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidModel(format!("tail_tol must be positive, got {tail_tol}")));
    }
    let mut masses = BTreeMap::new();
    let mut log_pk = -c;
    let mut cumulative = 0.0;
    let mut k = 0usize;
    loop {
        let pk = log_pk.exp();
        cumulative += pk;
        if pk > 0.0 {
            masses.insert(k, pk);
        }
        // 1 - cumulative is the mass beyond k, up to rounding near 1e-16.
        if (k as f64) > c && 1.0 - cumulative < tail_tol {
            break;
        }
        k += 1;
        log_pk += c.ln() - (k as f64).ln();
        if k > 100_000 {
            return Err(Error::InvalidModel(format!("Poisson({c}) truncation did not converge")));
        }
    }
    let total: f64 = masses.values().sum();
    for v in masses.values_mut() {
        *v /= total;
    }
    Ok(masses)
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

/// Degree-keyed maps. Tagged enums hand JSON object keys over as strings, so
/// they are parsed here rather than by serde's integer-key support.
fn degree_keyed<'de, D, V>(de: D) -> std::result::Result<BTreeMap<usize, V>, D::Error>
where
    D: serde::Deserializer<'de>,
    V: Deserialize<'de>,
{
    use serde::de::Error as _;
    BTreeMap::<String, V>::deserialize(de)?
        .into_iter()
        .map(|(k, v)| {
            k.trim().parse::<usize>().map(|k| (k, v)).map_err(|_| D::Error::custom(format!("degree key {k:?} is not a non-negative integer")))
        })
        .collect()
}

/// Finite-`n` degree sequence recipe, as accepted on the command line.
///
/// ```json
/// {"kind":"regular","d":3,"n":100000}
/// {"kind":"star","n":1000}
/// {"kind":"counts","counts":{"1":2,"3":4}}
/// {"kind":"poisson","c":2.0,"n":100000}
/// {"kind":"sampled","p":{"1":0.5,"3":0.5},"n":1000}
/// {"kind":"twoblock","sizes":[10,90],"degrees":[10,2]}
/// {"kind":"twoblock","n":100000,"alpha":0.6,"gamma":0.05}
/// {"kind":"bimodal","n":20,"delta":0.1,"beta":3.5}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceSpec {
    Regular { d: usize, n: usize },
    Star { n: usize },
    Counts {
        #[serde(deserialize_with = "degree_keyed")]
        counts: BTreeMap<usize, usize>,
    },
    Poisson {
        c: f64,
        n: usize,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
    Sampled {
        #[serde(deserialize_with = "degree_keyed")]
        p: BTreeMap<usize, f64>,
        n: usize,
    },
    Twoblock(TwoBlock),
    /// Half the vertices of degree `n^(1+delta)`, half of degree `n^beta`.
    Bimodal { n: usize, delta: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TwoBlock {
    Explicit { sizes: [usize; 2], degrees: [usize; 2] },
    /// `round(n^alpha)` vertices of degree `round(n^alpha)`; the rest have
    /// degree `max(1, floor(n^gamma))`.
    Power { n: usize, alpha: f64, gamma: f64 },
}

impl SequenceSpec {
    /// Builds the sequence. Only the sampled kinds consume randomness.
    pub fn build<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<DegreeSequence> {
        match self {
            SequenceSpec::Regular { d, n } => DegreeSequence::regular(*d, *n),
            SequenceSpec::Star { n } => DegreeSequence::star(*n),
            SequenceSpec::Counts { counts } => DegreeSequence::from_counts(counts.clone()),
            SequenceSpec::Poisson { c, n, tail_tol } => {
                DegreeSequence::sample(&LimitModel::poisson(*c, *tail_tol)?, *n, rng)
            }
            SequenceSpec::Sampled { p, n } => {
                DegreeSequence::sample(&LimitModel::new(p.clone(), None, DEFAULT_TAIL_TOL)?, *n, rng)
            }
            SequenceSpec::Twoblock(TwoBlock::Explicit { sizes, degrees }) => {
                DegreeSequence::two_block(*sizes, *degrees)
            }
            SequenceSpec::Twoblock(TwoBlock::Power { n, alpha, gamma }) => {
                let (sizes, degrees) = power_blocks(*n, *alpha, *gamma)?;
                DegreeSequence::two_block_repaired(sizes, degrees)
            }
            SequenceSpec::Bimodal { n, delta, beta } => {
                if *n < 2 || !(*delta > 0.0) || !(*beta > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "bimodal needs n >= 2 and positive exponents, got n={n}, delta={delta}, beta={beta}"
                    )));
                }
                let nf = *n as f64;
                let a = n / 2;
                let deg_a = nf.powf(1.0 + delta).round() as usize;
                let deg_b = nf.powf(*beta).round() as usize;
                DegreeSequence::two_block_repaired([a, n - a], [deg_a, deg_b])
            }
        }
    }

    /// The vertex count, when the recipe is parametrised by one.
    pub fn n(&self) -> Option<usize> {
        match self {
            SequenceSpec::Regular { n, .. }
            | SequenceSpec::Star { n }
            | SequenceSpec::Poisson { n, .. }
            | SequenceSpec::Sampled { n, .. }
            | SequenceSpec::Bimodal { n, .. }
            | SequenceSpec::Twoblock(TwoBlock::Power { n, .. }) => Some(*n),
            SequenceSpec::Counts { .. } | SequenceSpec::Twoblock(TwoBlock::Explicit { .. }) => None,
        }
    }

    /// Same recipe at a different size.
    pub fn with_n(&self, new_n: usize) -> Result<Self> {
        let mut out = self.clone();
        match &mut out {
            SequenceSpec::Regular { n, .. }
            | SequenceSpec::Star { n }
            | SequenceSpec::Poisson { n, .. }
            | SequenceSpec::Sampled { n, .. }
            | SequenceSpec::Bimodal { n, .. }
            | SequenceSpec::Twoblock(TwoBlock::Power { n, .. }) => *n = new_n,
            SequenceSpec::Counts { .. } | SequenceSpec::Twoblock(TwoBlock::Explicit { .. }) => {
                return Err(Error::InvalidSpec(
                    "explicit counts cannot be rescaled to another n".into(),
                ))
            }
        }
        Ok(out)
    }
}

fn power_blocks(n: usize, alpha: f64, gamma: f64) -> Result<([usize; 2], [usize; 2])> {
    if !(alpha > 0.0 && alpha < 1.0 && gamma >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "twoblock needs 0 < alpha < 1 and gamma >= 0, got alpha={alpha}, gamma={gamma}"
        )));
    }
    let nf = n as f64;
    let a = (nf.powf(alpha).round() as usize).max(1);
    if a >= n {
        return Err(Error::InvalidSpec(format!("twoblock with n={n} leaves block B empty")));
    }
    let deg_b = (nf.powf(gamma).floor() as usize).max(1);
    Ok(([a, n - a], [a, deg_b]))
}

/// Limit-model recipe, as accepted on the command line.
///
/// ```json
/// {"kind":"regular","d":3}
/// {"kind":"poisson","c":1.0}
/// {"kind":"counts-limit","p":{"0":0.4,"1":0.6}}
/// {"kind":"counts-limit","p":{"1":1.0},"lambda":2.0}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Regular {
        d: usize,
    },
    Poisson {
        c: f64,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
    CountsLimit {
        #[serde(deserialize_with = "degree_keyed")]
        p: BTreeMap<usize, f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<LimitModel> {
        match self {
            ModelSpec::Regular { d } => LimitModel::regular(*d),
            ModelSpec::Poisson { c, tail_tol } => LimitModel::poisson(*c, *tail_tol),
            ModelSpec::CountsLimit { p, lambda, tail_tol } => {
                LimitModel::new(p.clone(), *lambda, *tail_tol)
            }
        }
    }
}
