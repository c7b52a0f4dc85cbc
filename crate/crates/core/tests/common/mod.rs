use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Chi-square p-value of `observed` against `law`, merging neighbouring
/// cells until each expects at least 5. Mass outside the law gives 0.
pub fn chi_square_p<K: Ord>(law: &BTreeMap<K, f64>, observed: &BTreeMap<K, u64>, runs: u64) -> f64 {
    if observed.keys().any(|s| !law.contains_key(s)) {
        return 0.0;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pending = (0.0, 0.0);
    for (s, &p) in law {
        pending.0 += p * runs as f64;
        pending.1 += *observed.get(s).unwrap_or(&0) as f64;
        if pending.0 >= 5.0 {
            bins.push(pending);
            pending = (0.0, 0.0);
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += pending.0;
            last.1 += pending.1;
        }
        None => bins.push(pending),
    }
    if bins.len() < 2 {
        return 1.0;
    }
    let stat: f64 = bins.iter().map(|&(e, o)| (o - e).powi(2) / e).sum();
    ChiSquared::new((bins.len() - 1) as f64).unwrap().sf(stat)
}
