//! The `jamset` command line.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::degree_model::{ModelSpec, SequenceSpec};
use crate::error::{Error, Result};
use crate::experiments::{self, Scenario};
use crate::greedy_sim::{
    run_replicas, uniform_grid, GraphMode, LoopsPolicy, ReplicaSpec, SimMode, TrackConfig,
    DEFAULT_GRID_POINTS, DEFAULT_MAX_ATTEMPTS, DEFAULT_T_MAX,
};
use crate::report::{Provenance, Writer};
use crate::theory::{jamming_constant, limit_trajectory, DEFAULT_TOL};

const EXIT_HELP: &str = "\
Exit status:
  0  success
  2  invalid configuration or spec
  3  numerical failure (quadrature or root search)
  4  no simple graph found within --max-attempts

Specs are JSON, given inline or as @path/to/file.json.";

#[derive(Debug, Parser)]
#[command(name = "jamset", version, about = "Greedy independent sets on random graphs with given degrees", after_help = EXIT_HELP)]
pub struct Cli {
    /// Worker threads for replicas (default: all cores).
    #[arg(long, global = true, env = "JAMSET_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = experiments::DEFAULT_SEED)]
    pub seed: u64,
    /// Absolute tolerance for quadrature and root finding.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value = "jamset-out")]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }
    fn csv(self) -> bool {
        self != Format::Json
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyKind {
    Converge,
    Trajectory,
    Coverage,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jamming constant, degree composition and optionally the fluid trajectory.
    Theory {
        /// Limit model, e.g. '{"kind":"regular","d":3}'.
        #[arg(long)]
        model: String,
        /// Also write the fluid trajectory on a uniform grid.
        #[arg(long)]
        trajectory: bool,
        #[arg(long, default_value_t = DEFAULT_T_MAX)]
        t_max: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo replicas of the greedy process.
    Simulate {
        /// Degree sequence, e.g. '{"kind":"regular","d":2,"n":100000}'.
        #[arg(long)]
        seq: String,
        /// Override the sequence size.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = experiments::DEFAULT_REPLICAS)]
        replicas: usize,
        #[arg(long, value_enum, default_value_t = GraphArg::Multigraph)]
        graph: GraphArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Dynamic)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = LoopsArg::Include)]
        loops: LoopsArg,
        /// Record trajectories on a uniform grid over [0, t_max].
        #[arg(long)]
        track: bool,
        #[arg(long, default_value_t = DEFAULT_T_MAX)]
        t_max: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
        max_attempts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Simulation against theory for a preset or scenario file.
    Study {
        /// Built-in preset: regular-d2, regular-d3, poisson-c1, poisson-c2, star,
        /// twoblock-alpha-gamma, extreme-bimodal.
        #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
        preset: Option<String>,
        /// Scenario JSON.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, value_enum, default_value_t = StudyKind::Converge)]
        kind: StudyKind,
        /// Size for trajectory and coverage studies (default: the largest in n_list).
        #[arg(long)]
        n: Option<usize>,
        /// Replicas (default: the scenario's for convergence, 5 for
        /// trajectories, 10 for coverage).
        #[arg(long)]
        replicas: Option<usize>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value = "jamset-out")]
        output_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphArg {
    Multigraph,
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LoopsArg {
    Include,
    Exclude,
}

/// Reads `@path` indirection, otherwise returns the text itself.
pub fn resolve_inline(text: &str) -> Result<String> {
    match text.strip_prefix('@') {
        Some(path) => Ok(std::fs::read_to_string(path)?),
        None => Ok(text.to_string()),
    }
}

fn parse_spec<T: DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    let body = resolve_inline(text)?;
    serde_json::from_str(&body).map_err(|e| Error::InvalidSpec(format!("{what}: {e}")))
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::InvalidSpec("--threads must be at least 1".into()));
        }
        // fails only if a pool already exists, which is fine to keep
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let started = Instant::now();
    match cli.command {
        Command::Theory { model, trajectory, t_max, grid_points, common } => {
            cmd_theory(&model, trajectory, t_max, grid_points, &common, started)
        }
        Command::Simulate {
            seq,
            n,
            replicas,
            graph,
            mode,
            loops,
            track,
            t_max,
            grid_points,
            max_attempts,
            common,
        } => {
            let mut seq: SequenceSpec = parse_spec("sequence spec", &seq)?;
            if let Some(n) = n {
                seq = seq.with_n(n)?;
            }
            let spec = ReplicaSpec {
                seq,
                graph_mode: match graph {
                    GraphArg::Multigraph => GraphMode::Multigraph,
                    GraphArg::Simple => GraphMode::Simple,
                },
                sim_mode: match mode {
                    ModeArg::Static => SimMode::Static,
                    ModeArg::Dynamic => SimMode::Dynamic,
                },
                loops_policy: match loops {
                    LoopsArg::Include => LoopsPolicy::Include,
                    LoopsArg::Exclude => LoopsPolicy::Exclude,
                },
                max_attempts,
            };
            let track = track.then(|| TrackConfig { grid: uniform_grid(t_max, grid_points), ..TrackConfig::default() });
            cmd_simulate(&spec, replicas, track.as_ref(), &common, started)
        }
        Command::Study { preset, scenario, kind, n, replicas, seed, tol, output_dir, format } => {
            let mut scenario: Scenario = match (preset, scenario) {
                (Some(name), _) => experiments::preset(&name)?,
                (None, Some(text)) => parse_spec("scenario", &text)?,
                (None, None) => return Err(Error::InvalidSpec("give --preset or --scenario".into())),
            };
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            scenario.validate()?;
            let common = Common { seed: scenario.seed, tol, output_dir, format };
            cmd_study(&scenario, kind, n, replicas, &common, started)
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("--tol must be positive, got {tol}")))
    }
}

fn cmd_theory(
    model_text: &str,
    trajectory: bool,
    t_max: f64,
    grid_points: usize,
    common: &Common,
    started: Instant,
) -> Result<()> {
    check_tol(common.tol)?;
    let spec: ModelSpec = parse_spec("model spec", model_text)?;
    let model = spec.build()?;
    let result = jamming_constant(&model, common.tol)?;
    let mut config = json!({"model": spec, "tol": common.tol});
    if trajectory {
        config["trajectory"] = json!({"t_max": t_max, "grid_points": grid_points});
    }
    let mut out = Writer::new(&common.output_dir, "theory", Provenance::new("theory", common.seed, config))?;
    if common.format.json() {
        out.json("", &json!({"model": model, "result": result}))?;
    }
    if common.format.csv() {
        out.csv("", &result.to_csv(&model))?;
    }
    if trajectory {
        let fluid = limit_trajectory(&model, &uniform_grid(t_max, grid_points), common.tol)?;
        let csv = fluid.to_csv(crate::greedy_sim::DEFAULT_K_TRACK);
        if common.format.json() {
            out.json("-trajectory", &fluid)?;
        }
        if common.format.csv() {
            out.csv("-trajectory", &csv)?;
            out.gnuplot("-trajectory", &csv)?;
        }
    }
    let mut stdout = std::io::stdout().lock();
    let tau = if result.tau_inf.is_finite() { format!("{:.10}", result.tau_inf) } else { "inf".into() };
    writeln!(stdout, "tau_inf = {tau}")?;
    writeln!(stdout, "s_inf   = {:.10}", result.s_inf)?;
    writeln!(stdout, "residual = {:.3e}  mass_gap = {:.3e}", result.residual, result.mass_gap)?;
    writeln!(stdout, "top degrees by selected mass:")?;
    for (k, mass) in result.top_degrees(10) {
        writeln!(stdout, "  k = {k:>4}  s_inf(k) = {mass:.10}")?;
    }
    report_files(out.finish(started.elapsed())?);
    Ok(())
}

fn cmd_simulate(
    spec: &ReplicaSpec,
    replicas: usize,
    track: Option<&TrackConfig>,
    common: &Common,
    started: Instant,
) -> Result<()> {
    let run = run_replicas(spec, replicas, common.seed, track)?;
    let mut config = json!({"spec": spec, "replicas": replicas});
    if let Some(t) = track {
        config["track"] = json!({"grid_points": t.grid.len(), "t_max": t.grid.last(), "k_track": t.k_track});
    }
    let stem = format!("simulate-seed{}", common.seed);
    let mut out = Writer::new(&common.output_dir, &stem, Provenance::new("simulate", common.seed, config))?;
    if common.format.json() {
        out.json("", &json!({"aggregate": run.aggregate, "replicas": run.results_json()}))?;
    }
    if common.format.csv() {
        let mut csv = String::from("replica,n,S,fraction,attempts\n");
        for o in &run.outcomes {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                o.replica,
                o.result.n,
                o.result.s_final,
                o.result.fraction(),
                o.attempts
            ));
        }
        out.csv("", &csv)?;
    }
    for o in &run.outcomes {
        if let Some(t) = &o.trajectory {
            if common.format.csv() {
                out.csv(&format!("-r{}-trajectory", o.replica), &t.to_csv())?;
            }
            if common.format.json() {
                out.json(&format!("-r{}-trajectory", o.replica), t)?;
            }
        }
    }
    let agg = &run.aggregate;
    println!("replicas = {}", agg.replicas);
    println!("mean S/n = {:.6}", agg.mean);
    println!("stddev   = {:.6}", agg.stddev);
    report_files(out.finish(started.elapsed())?);
    Ok(())
}

fn cmd_study(
    scenario: &Scenario,
    kind: StudyKind,
    n: Option<usize>,
    replicas: Option<usize>,
    common: &Common,
    started: Instant,
) -> Result<()> {
    check_tol(common.tol)?;
    let config = json!({"scenario": scenario, "kind": format!("{kind:?}").to_lowercase(), "n": n, "replicas": replicas, "tol": common.tol});
    let stem = format!("{}-seed{}", scenario.name, scenario.seed);
    let mut out = Writer::new(&common.output_dir, &stem, Provenance::new("study", scenario.seed, config))?;
    let n = n.unwrap_or_else(|| scenario.largest_n());
    let all = kind == StudyKind::All;

    if kind == StudyKind::Converge || all {
        let mut scenario = scenario.clone();
        if let Some(r) = replicas {
            scenario.replicas = r;
        }
        let report = experiments::convergence_study(&scenario, common.tol)?;
        write_pair(&mut out, "-converge", &report, &report.to_csv(), common.format)?;
        if let Some(t) = &report.theory {
            println!("s_inf = {:.10}", t.s_inf);
        }
        for row in &report.rows {
            let gap = row.gap.map_or(String::new(), |g| format!("  gap = {g:.5}"));
            println!(
                "{:<10} n = {:>7}  mean S/n = {:.6}  sd = {:.6}{gap}",
                experiments::mode_name(row.graph_mode),
                row.n,
                row.mean,
                row.stddev
            );
            if let Some(hist) = &row.outcomes {
                println!("           outcomes (S: replicas) = {hist:?}");
            }
        }
        for t in &report.trends {
            if !t.gated && report.theory.is_some() {
                println!("{}: gap reported without a verdict", experiments::mode_name(t.graph_mode));
            }
        }
    }
    let run_trajectory = kind == StudyKind::Trajectory || (all && scenario.model.is_some());
    if run_trajectory {
        let grid = uniform_grid(DEFAULT_T_MAX, DEFAULT_GRID_POINTS);
        let (cmp, fluid) = experiments::trajectory_compare(scenario, n, &grid, replicas.unwrap_or(5), common.tol)?;
        let fluid_csv = fluid.to_csv(crate::greedy_sim::DEFAULT_K_TRACK);
        let mut csv = String::from("quantity,sup_distance,initial_distance\n");
        csv.push_str(&format!("u,{},{}\ns,{},{}\n", cmp.sup_u, cmp.initial_u, cmp.sup_s, cmp.initial_s));
        for (k, d) in &cmp.sup_e_k {
            csv.push_str(&format!("e_{k},{d},{}\n", cmp.initial_e_k[k]));
        }
        write_pair(&mut out, "-trajectory", &cmp, &csv, common.format)?;
        if common.format.csv() {
            out.csv("-fluid", &fluid_csv)?;
            out.gnuplot("-fluid", &fluid_csv)?;
        }
        println!("n = {}  replicas = {}  sup_u = {:.5}  sup_s = {:.5}", cmp.n, cmp.replicas, cmp.sup_u, cmp.sup_s);
    }
    let run_coverage = kind == StudyKind::Coverage || (all && scenario.model.is_none() && !scenario.qualitative);
    if run_coverage {
        let report = experiments::coverage_study(scenario, n, replicas.unwrap_or(10))?;
        let mut csv = String::from("replica,r_n,covered,covered_fraction,threshold,lambda_n,passed\n");
        for r in &report.rows {
            let c = &r.coverage;
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.replica, c.r_n, c.covered, c.covered_fraction, c.threshold, c.lambda_n, r.passed
            ));
        }
        write_pair(&mut out, "-coverage", &report, &csv, common.format)?;
        println!(
            "coverage > {} in {}/{} replicas (engineering gate; premise met: {})",
            report.gate,
            report.passes,
            report.rows.len(),
            report.premise_met
        );
    }
    report_files(out.finish(started.elapsed())?);
    Ok(())
}

fn write_pair<T: serde::Serialize>(out: &mut Writer, suffix: &str, data: &T, csv: &str, format: Format) -> Result<()> {
    if format.json() {
        out.json(suffix, data)?;
    }
    if format.csv() {
        out.csv(suffix, csv)?;
    }
    Ok(())
}

fn report_files(files: Vec<PathBuf>) {
    for f in files {
        eprintln!("wrote {}", f.display());
    }
}

