//! Acceptance criteria 1-9. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use jamset::experiments::{coverage_study, preset, trajectory_compare, COVERAGE_GATE};
use jamset::greedy_sim::{uniform_grid, DynamicProcess};
use jamset::rng::{stream_rng, uniform_below};
use jamset::{
    closed_form_regular, degree_mass, drift, jamming_constant, limit_trajectory, p_connect,
    run_dynamic, run_replicas, run_static, sample_matching, tau_infinity, DegreeSequence,
    GraphMode, LimitModel, LoopsPolicy, ReplicaSpec, SequenceSpec, SimMode, TrackConfig,
};

mod common;
use common::chi_square_p;

const TOL: f64 = 1e-12;
const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(cond: bool, ok: &mut bool, parts: &mut Vec<String>, text: String) {
    *ok &= cond;
    parts.push(if cond { text } else { format!("{text} [FAILED]") });
}

fn dynamic_mean(seq: SequenceSpec, mode: GraphMode, replicas: usize, seed: u64) -> (f64, Vec<usize>, usize) {
    let spec = ReplicaSpec::new(seq, mode, SimMode::Dynamic);
    let run = run_replicas(&spec, replicas, seed, None).expect("replicas run");
    let finals = run.outcomes.iter().map(|o| o.result.s_final).collect();
    let n = run.outcomes[0].result.n;
    (run.aggregate.mean, finals, n)
}

fn regular(d: usize, expected: f64, budget: Option<Duration>) -> Verdict {
    let start = Instant::now();
    let (mut ok, mut parts) = (true, Vec::new());
    let model = LimitModel::regular(d).unwrap();
    let theory = jamming_constant(&model, TOL).unwrap();
    let closed = closed_form_regular(d).unwrap();
    check((theory.s_inf - expected).abs() < 1e-8, &mut ok, &mut parts, format!("theory s_inf {:.10}", theory.s_inf));
    check((closed.s_inf - expected).abs() < 1e-8, &mut ok, &mut parts, format!("closed form {:.10}", closed.s_inf));
    let (mean, _, _) = dynamic_mean(SequenceSpec::Regular { d, n: 100_000 }, GraphMode::Multigraph, 20, SEED + d as u64);
    check((mean - theory.s_inf).abs() < 0.005, &mut ok, &mut parts, format!("sim mean {mean:.5} (n=1e5, 20 replicas)"));
    let elapsed = start.elapsed();
    if let Some(budget) = budget {
        check(elapsed < budget, &mut ok, &mut parts, format!("{:.1}s", elapsed.as_secs_f64()));
    }
    Verdict { pass: ok, detail: parts.join(", ") }
}

fn criterion_1() -> Verdict {
    regular(2, 0.432_332_358_4, Some(Duration::from_secs(30)))
}

fn criterion_2() -> Verdict {
    regular(3, 0.375, None)
}

fn criterion_3() -> Verdict {
    let (mut ok, mut parts) = (true, Vec::new());
    let model = LimitModel::poisson(1.0, 1e-15).unwrap();
    let theory = jamming_constant(&model, TOL).unwrap();
    check((theory.s_inf - 2f64.ln()).abs() < 1e-8, &mut ok, &mut parts, format!("s_inf {:.10}", theory.s_inf));
    let s0 = degree_mass(&model, 0, TOL).unwrap();
    check((s0 - (-1.0f64).exp()).abs() < 1e-6, &mut ok, &mut parts, format!("s_inf(0) {s0:.8}"));
    let total: f64 = theory.s_inf_by_degree.values().sum();
    check((total - theory.s_inf).abs() < 1e-6, &mut ok, &mut parts, format!("sum over degrees {total:.10}"));
    let seq = SequenceSpec::Poisson { c: 1.0, n: 100_000, tail_tol: 1e-12 };
    let (mean, _, _) = dynamic_mean(seq, GraphMode::Multigraph, 20, SEED + 3);
    check((mean - theory.s_inf).abs() < 0.01, &mut ok, &mut parts, format!("sim mean {mean:.5}"));
    Verdict { pass: ok, detail: parts.join(", ") }
}

fn criterion_4() -> Verdict {
    let (mut ok, mut parts) = (true, Vec::new());
    let model = LimitModel::new([(1, 1.0)].into(), Some(2.0), 1e-12).unwrap();
    let tau = tau_infinity(&model, TOL).unwrap();
    let theory = jamming_constant(&model, TOL).unwrap();
    check((tau - 2f64.ln()).abs() < 1e-8, &mut ok, &mut parts, format!("tau_inf {tau:.10}"));
    check((theory.s_inf - 0.75).abs() < 1e-8, &mut ok, &mut parts, format!("s_inf {:.10}", theory.s_inf));
    let star = SequenceSpec::Star { n: 100_000 };
    let (mean, _, _) = dynamic_mean(star.clone(), GraphMode::Multigraph, 20, SEED + 4);
    check((0.73..=0.77).contains(&mean), &mut ok, &mut parts, format!("multigraph mean {mean:.4}"));
    let (_, finals, n) = dynamic_mean(star, GraphMode::Simple, 20, SEED + 5);
    let hits = finals.iter().filter(|&&s| s == n - 1).count();
    check(hits >= 19, &mut ok, &mut parts, format!("simple S = n-1 in {hits}/20"));
    Verdict { pass: ok, detail: parts.join(", ") }
}

/// Fraction of perfect matchings of `0..u` in which some half-edge of `0..j`
/// is paired with one of `j..j+k`, by exhaustive enumeration.
fn enumerated_connection(j: usize, k: usize, u: usize) -> f64 {
    fn walk(free: &mut Vec<usize>, j: usize, k: usize, joined: bool, hits: &mut u64, total: &mut u64) {
        if free.is_empty() {
            *total += 1;
            *hits += joined as u64;
            return;
        }
        let a = free.remove(0);
        for i in 0..free.len() {
            let b = free.remove(i);
            let link = (a < j && (j..j + k).contains(&b)) || (b < j && (j..j + k).contains(&a));
            walk(free, j, k, joined || link, hits, total);
            free.insert(i, b);
        }
        free.insert(0, a);
    }
    let (mut hits, mut total) = (0, 0);
    walk(&mut (0..u).collect(), j, k, false, &mut hits, &mut total);
    hits as f64 / total as f64
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let (mut worst, mut cases, mut bracket_ok) = (0.0f64, 0, true);
    for u in (2..=12).step_by(2) {
        for j in 0..=3 {
            for k in 0..=3 {
                if j + k > u {
                    continue;
                }
                let p = p_connect(j, k, u).unwrap();
                let oracle = enumerated_connection(j, k, u);
                worst = worst.max((p.exact - oracle).abs());
                bracket_ok &= p.lower <= oracle + 1e-12 && oracle <= p.upper + 1e-12;
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let (mut ok, mut parts) = (true, Vec::new());
    check(worst <= 1e-12, &mut ok, &mut parts, format!("{cases} configurations, max error {worst:.1e}"));
    check(bracket_ok, &mut ok, &mut parts, "bounds bracket".into());
    check(elapsed < Duration::from_secs(10), &mut ok, &mut parts, format!("{:.1}s", elapsed.as_secs_f64()));
    Verdict { pass: ok, detail: parts.join(", ") }
}

/// Twenty frozen states with at most 40 unpaired half-edges.
fn frozen_states() -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut rng = stream_rng(SEED, 60);
    let mut out = Vec::new();
    while out.len() < 20 {
        let empties: Vec<usize> = (0..1 + uniform_below(&mut rng, 7)).map(|_| uniform_below(&mut rng, 6)).collect();
        let mut blocked: Vec<usize> =
            (0..uniform_below(&mut rng, 4)).map(|_| 1 + uniform_below(&mut rng, 4)).collect();
        let u: usize = empties.iter().chain(&blocked).sum();
        if u % 2 == 1 {
            blocked.push(1);
        }
        let u = u + u % 2;
        if (2..=40).contains(&u) {
            out.push((empties, blocked));
        }
    }
    out
}

fn criterion_6() -> Verdict {
    const TRIALS: usize = 1_000_000;
    let start = Instant::now();
    let mut worst_z = 0.0f64;
    let mut failures = Vec::new();
    let mut ds_exact = true;
    for (idx, (empties, blocked)) in frozen_states().into_iter().enumerate() {
        let base = DynamicProcess::frozen(&empties, &blocked).unwrap();
        let formula = drift(base.state()).unwrap();
        let live = base.empty_vertices();
        let e_total = live.len() as f64;
        let degrees: Vec<usize> = formula.de.keys().copied().collect();
        let before: Vec<f64> = degrees.iter().map(|&k| base.state().empty(k) as f64).collect();
        let mut rng = stream_rng(SEED, 600 + idx as u64);
        // running sums and sums of squares: U drop, then one slot per degree
        let mut sum = vec![0.0f64; 1 + degrees.len()];
        let mut sq = vec![0.0f64; 1 + degrees.len()];
        let mut selected = 0usize;
        for _ in 0..TRIALS {
            let mut p = base.clone();
            let v = live[uniform_below(&mut rng, live.len())];
            let firing = p.fire(v, 0.0, &mut rng);
            selected += firing.selected as usize;
            let du = -(firing.u_drop() as f64);
            sum[0] += du;
            sq[0] += du * du;
            for (c, &k) in degrees.iter().enumerate() {
                let de = p.state().empty(k) as f64 - before[c];
                sum[c + 1] += de;
                sq[c + 1] += de * de;
            }
        }
        ds_exact &= selected == TRIALS && formula.ds == e_total;
        let targets: Vec<f64> = std::iter::once(formula.du).chain(formula.de.values().copied()).collect();
        for (c, &target) in targets.iter().enumerate() {
            let mean = sum[c] / TRIALS as f64;
            let var = (sq[c] / TRIALS as f64 - mean * mean).max(0.0) * TRIALS as f64 / (TRIALS - 1) as f64;
            let estimate = e_total * mean;
            let se = e_total * (var / TRIALS as f64).sqrt();
            let gap = (estimate - target).abs();
            let z = if se > 0.0 { gap / se } else if gap < 1e-9 { 0.0 } else { f64::INFINITY };
            worst_z = worst_z.max(z);
            if z > 3.0 {
                let name = if c == 0 { "dU".to_string() } else { format!("dE({})", degrees[c - 1]) };
                failures.push(format!("state {idx} {name}: {estimate:.5} vs {target:.5} (z={z:.2})"));
            }
        }
    }
    let elapsed = start.elapsed();
    let (mut ok, mut parts) = (true, Vec::new());
    check(failures.is_empty(), &mut ok, &mut parts, format!("20 states x 1e6 firings, max |z| {worst_z:.2}"));
    parts.extend(failures);
    check(ds_exact, &mut ok, &mut parts, "dS exact".into());
    check(elapsed < Duration::from_secs(120), &mut ok, &mut parts, format!("{:.1}s", elapsed.as_secs_f64()));
    Verdict { pass: ok, detail: parts.join(", ") }
}

/// Degree multisets with at most five vertices and total degree at most 8 (even).
fn small_sequences() -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, min: usize, out: &mut Vec<Vec<usize>>) {
        let sum: usize = prefix.iter().sum();
        if !prefix.is_empty() && sum.is_multiple_of(2) {
            out.push(prefix.clone());
        }
        if prefix.len() == 5 {
            return;
        }
        for d in min..=8 - sum {
            prefix.push(d);
            grow(prefix, d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), 0, &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Exact law of the final set size: every half-edge matching crossed with
/// every vertex order, each equally likely.
fn exact_law(degrees: &[usize]) -> BTreeMap<usize, f64> {
    let owner: Vec<usize> = degrees.iter().enumerate().flat_map(|(v, &d)| std::iter::repeat_n(v, d)).collect();
    let mut matchings = Vec::new();
    fn walk(free: &mut Vec<usize>, current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(current.clone());
            return;
        }
        let a = free.remove(0);
        for i in 0..free.len() {
            let b = free.remove(i);
            current.push((a, b));
            walk(free, current, out);
            current.pop();
            free.insert(i, b);
        }
        free.insert(0, a);
    }
    walk(&mut (0..owner.len()).collect(), &mut Vec::new(), &mut matchings);
    let orders = permutations(degrees.len());
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for m in &matchings {
        let mut adj = vec![Vec::new(); degrees.len()];
        for &(a, b) in m {
            adj[owner[a]].push(owner[b]);
            adj[owner[b]].push(owner[a]);
        }
        for order in &orders {
            let mut chosen = vec![false; degrees.len()];
            for &v in order {
                if !adj[v].iter().any(|&w| chosen[w]) {
                    chosen[v] = true;
                }
            }
            *counts.entry(chosen.iter().filter(|&&c| c).count()).or_insert(0) += 1;
        }
    }
    let total = (matchings.len() * orders.len()) as f64;
    counts.into_iter().map(|(s, c)| (s, c as f64 / total)).collect()
}

fn criterion_7() -> Verdict {
    const RUNS: u64 = 100_000;
    let start = Instant::now();
    let sequences = small_sequences();
    let mut worst = 1.0f64;
    let mut failures = Vec::new();
    let track = TrackConfig::none();
    for (idx, degrees) in sequences.iter().enumerate() {
        let law = exact_law(degrees);
        let seq = DegreeSequence::from_degrees(degrees).unwrap();
        let mut stat_counts = BTreeMap::new();
        let mut dyn_counts = BTreeMap::new();
        let mut rng = stream_rng(SEED, 7_000 + 2 * idx as u64);
        for _ in 0..RUNS {
            let g = sample_matching(&seq, &mut rng);
            *stat_counts.entry(run_static(&g, &mut rng, LoopsPolicy::Include).s_final).or_insert(0) += 1;
        }
        let mut rng = stream_rng(SEED, 7_001 + 2 * idx as u64);
        for _ in 0..RUNS {
            *dyn_counts.entry(run_dynamic(&seq, &mut rng, &track).0.s_final).or_insert(0) += 1;
        }
        for (mode, counts) in [("static", &stat_counts), ("dynamic", &dyn_counts)] {
            let p = chi_square_p(&law, counts, RUNS);
            worst = worst.min(p);
            if p <= 0.001 {
                failures.push(format!("{degrees:?} {mode}: p={p:.2e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let (mut ok, mut parts) = (true, Vec::new());
    check(
        failures.is_empty(),
        &mut ok,
        &mut parts,
        format!("{} sequences x 2 modes x 1e5 runs, min p {worst:.4}", sequences.len()),
    );
    parts.extend(failures);
    check(elapsed < Duration::from_secs(180), &mut ok, &mut parts, format!("{:.1}s", elapsed.as_secs_f64()));
    Verdict { pass: ok, detail: parts.join(", ") }
}

fn criterion_8() -> Verdict {
    let (mut ok, mut parts) = (true, Vec::new());
    let scenario = preset("regular-d2").unwrap();
    let grid = uniform_grid(8.0, 161);
    let (cmp, _) = trajectory_compare(&scenario, 100_000, &grid, 5, 1e-10).unwrap();
    check(cmp.sup_u < 0.02, &mut ok, &mut parts, format!("sup |U/n - u| {:.4}", cmp.sup_u));
    check(cmp.sup_s < 0.02, &mut ok, &mut parts, format!("sup |S/n - s| {:.4}", cmp.sup_s));

    // central differences of the limit profile against the right-hand side
    let model = LimitModel::regular(2).unwrap();
    let h = 1e-4;
    let mut residual = 0.0f64;
    for t in [0.1, 0.5, 1.0, 2.0, 4.0, 7.0] {
        let fl = limit_trajectory(&model, &[t - h, t, t + h], 1e-13).unwrap();
        let (a, mid, b) = (&fl.rows[0], &fl.rows[1], &fl.rows[2]);
        let half_edges: f64 = fl.degrees.iter().zip(&mid.e).map(|(&k, &e)| k as f64 * e).sum();
        residual = residual.max(((b.u - a.u) / (2.0 * h) + 2.0 * half_edges).abs());
        for (c, &k) in fl.degrees.iter().enumerate() {
            let lhs = (b.e[c] - a.e[c]) / (2.0 * h);
            let rhs = -mid.e[c] - k as f64 * mid.e[c] * half_edges / mid.u;
            residual = residual.max((lhs - rhs).abs());
        }
    }
    check(residual < 1e-6, &mut ok, &mut parts, format!("ODE residual {residual:.1e}"));
    Verdict { pass: ok, detail: parts.join(", ") }
}

fn criterion_9() -> Verdict {
    let (mut ok, mut parts) = (true, Vec::new());
    let scenario = preset("twoblock-alpha-gamma").unwrap();
    let report = coverage_study(&scenario, 100_000, 10).unwrap();
    let worst = report.rows.iter().map(|r| r.coverage.covered_fraction).fold(f64::INFINITY, f64::min);
    check(
        report.passes >= 9,
        &mut ok,
        &mut parts,
        format!("coverage > {COVERAGE_GATE} in {}/10 seeds, lowest {worst:.4}", report.passes),
    );
    Verdict { pass: ok, detail: parts.join(", ") }
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(usize, fn() -> Verdict); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (id, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        let status = if verdict.pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {status} ({:.1}s) {}", start.elapsed().as_secs_f64(), verdict.detail);
        failed += !verdict.pass as usize;
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
