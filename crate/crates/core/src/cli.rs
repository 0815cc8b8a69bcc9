//! Command-line front end.

use std::env;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encounter::{AgentId, AgentState};
use crate::error::{Error, Result};
use crate::filter::{run_filter, FilterConfig};
use crate::geometry::{Footprint, Path, Vec2};
use crate::output::{behavior_svg, filter_csv, filter_timeline_svg, scene_svg, trace_csv};
use crate::scenario::{catalog, check, Catalog};
use crate::sim::{run, Mode, Scenario, SimTrace};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "RISKSHADOW_OUT";

pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_BAD_SCENARIO: i32 = 2;
pub const EXIT_PLANNER_ABORT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "riskshadow",
    version,
    about = "Risk-shadowing filter and velocity planner on intersection scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(alias = "risk_shadowing")]
    Rs,
    Baseline,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Rs => vec![Mode::RiskShadowing],
            ModeArg::Baseline => vec![Mode::Baseline],
            ModeArg::Both => Mode::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Csv,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario (catalog name or file path).
    Run {
        scenario: String,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        /// Output directory; defaults to $RISKSHADOW_OUT, then ./out.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "csv")]
        emit: Vec<Emit>,
        /// Seed recorded with the run; simulations themselves are deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `key=value` scenario override, repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run catalog scenarios against their expectation records.
    Check {
        /// Restrict to these scenario names.
        #[arg(long)]
        only: Vec<String>,
        /// Load the catalog from a directory instead of the built-in files.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Time the all-pairs filter sweep on random scenes.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
    /// Print a catalog scenario in the scenario file format.
    ExportScenario {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List catalog scenario names.
    List,
}

/// Keys accepted by `--override`.
pub const OVERRIDE_KEYS: &[&str] = &[
    "d_thr",
    "encounter_horizon",
    "dt_pred",
    "margin",
    "slack",
    "extend_by_length",
    "filter",
    "w_risk",
    "w_utility",
    "w_comfort",
    "d0",
    "curve_risk",
    "a_lat_max",
    "planner_horizon",
    "planner_dt",
    "duration",
    "dt",
];

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected on/off, got {v:?}"))),
    }
}

/// Apply one `key=value` override to `scenario`.
pub fn apply_override(scenario: &mut Scenario, spec: &str) -> Result<()> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let (key, value) = (key.trim(), value.trim());
    let num = || {
        value
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("{key}: expected a number, got {value:?}")))
    };
    match key {
        "d_thr" => scenario.filter.encounter.d_thr = num()?,
        "encounter_horizon" => scenario.filter.encounter.horizon = num()?,
        "dt_pred" => scenario.filter.encounter.dt_pred = num()?,
        "margin" => scenario.filter.reach.margin = num()?,
        "slack" => scenario.filter.reach.slack = num()?,
        "extend_by_length" => scenario.filter.reach.extend_by_length = parse_bool(key, value)?,
        "filter" => scenario.filter_enabled = parse_bool(key, value)?,
        "w_risk" => scenario.planner.w_risk = num()?,
        "w_utility" => scenario.planner.w_utility = num()?,
        "w_comfort" => scenario.planner.w_comfort = num()?,
        "d0" => scenario.planner.risk_scale_d0 = num()?,
        "curve_risk" => scenario.planner.curve_risk_enabled = parse_bool(key, value)?,
        "a_lat_max" => scenario.planner.a_lat_max = num()?,
        "planner_horizon" => scenario.planner.horizon = num()?,
        "planner_dt" => scenario.planner.dt = num()?,
        "duration" => scenario.duration = num()?,
        "dt" => scenario.dt = num()?,
        _ => {
            return Err(Error::Config(format!(
                "unknown override key {key:?}; known: {}",
                OVERRIDE_KEYS.join(", ")
            )))
        }
    }
    scenario.validate()
}

/// Catalog name first, then file path.
pub fn resolve_scenario(name_or_path: &str) -> Result<Scenario> {
    if let Ok(s) = catalog().get(name_or_path) {
        return Ok(s.clone());
    }
    let p = FsPath::new(name_or_path);
    if p.is_file() {
        return Scenario::from_toml(&fs::read_to_string(p)?);
    }
    Err(Error::UnknownScenario(name_or_path.to_string()))
}

fn output_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::PlannerAbort { .. } => EXIT_PLANNER_ABORT,
        Error::Scenario(_)
        | Error::UnknownScenario(_)
        | Error::InvalidPath(_)
        | Error::DuplicateAgent(_) => EXIT_BAD_SCENARIO,
        Error::Config(_) => EXIT_BAD_SCENARIO,
        _ => 1,
    }
}

/// Files written by [`cmd_run`].
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub traces: Vec<SimTrace>,
}

pub fn cmd_run(
    name_or_path: &str,
    modes: &[Mode],
    out: &FsPath,
    emit: &[Emit],
    overrides: &[String],
) -> Result<RunOutput> {
    let mut scenario = resolve_scenario(name_or_path)?;
    for o in overrides {
        apply_override(&mut scenario, o)?;
    }
    fs::create_dir_all(out)?;
    let mut result = RunOutput::default();
    for &mode in modes {
        let trace = run(&scenario, mode)?;
        if emit.contains(&Emit::Csv) {
            let p = out.join(format!("{}_{}_trace.csv", scenario.name, mode));
            fs::write(&p, trace_csv(&trace, &scenario)?)?;
            result.files.push(p);
            if mode == Mode::RiskShadowing {
                let p = out.join(format!("{}_{}_filter.csv", scenario.name, mode));
                fs::write(&p, filter_csv(&trace)?)?;
                result.files.push(p);
            }
        }
        result.traces.push(trace);
    }
    if emit.contains(&Emit::Svg) {
        let refs: Vec<&SimTrace> = result.traces.iter().collect();
        let p = out.join(format!("{}_behavior.svg", scenario.name));
        fs::write(&p, behavior_svg(&refs))?;
        result.files.push(p);
        if let Some(rs) = result.traces.iter().find(|t| t.mode == Mode::RiskShadowing) {
            let p = out.join(format!("{}_filter_timeline.svg", scenario.name));
            fs::write(&p, filter_timeline_svg(rs, &scenario))?;
            result.files.push(p);
            let p = out.join(format!("{}_scene_t0.svg", scenario.name));
            fs::write(&p, scene_svg(&scenario, &rs.records[0]))?;
            result.files.push(p);
        }
    }
    Ok(result)
}

/// Per-scenario check result rows, sorted by name.
pub fn cmd_check(
    catalog: &Catalog,
    only: &[String],
    overrides: &[String],
) -> Result<Vec<(String, Vec<String>)>> {
    for name in only {
        catalog.get(name)?;
    }
    let mut rows = Vec::new();
    for s in catalog.iter() {
        if !only.is_empty() && !only.iter().any(|n| n == &s.name) {
            continue;
        }
        let mut s = s.clone();
        for o in overrides {
            apply_override(&mut s, o)?;
        }
        let outcome = check(&s)?;
        rows.push((outcome.name, outcome.failures));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub pairs: usize,
    /// Fastest of the repetitions, in seconds.
    pub seconds: f64,
}

/// Scene of `n` agents on random straight paths inside a 200 m box.
pub fn random_scene(n: usize, rng: &mut impl Rng) -> Vec<AgentState> {
    (0..n)
        .map(|i| {
            let a = Vec2::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
            let heading: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let b = a + Vec2::from_angle(heading) * 150.0;
            let path = Path::new(vec![a, b]).expect("distinct endpoints");
            AgentState::new(
                AgentId(i as u32),
                std::sync::Arc::new(path),
                rng.gen_range(0.0..20.0),
                rng.gen_range(0.0..15.0),
                Footprint::new(rng.gen_range(4.0..10.0), rng.gen_range(1.8..2.6))
                    .expect("positive"),
            )
            .expect("on path")
        })
        .collect()
}

pub fn cmd_bench(ns: &[usize], seed: u64, reps: usize) -> Result<Vec<BenchRow>> {
    let cfg = FilterConfig::default();
    let mut rows = Vec::new();
    for &n in ns {
        if n < 2 {
            return Err(Error::Config(format!("bench needs n >= 2, got {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scene = random_scene(n, &mut rng);
        let mut best = f64::INFINITY;
        let mut pairs = 0;
        for _ in 0..reps.max(1) {
            let t0 = Instant::now();
            let report = run_filter(&scene[0], &scene[1..], &cfg, 0.0)?;
            best = best.min(t0.elapsed().as_secs_f64());
            pairs = report.encounter_count;
        }
        rows.push(BenchRow {
            n,
            pairs,
            seconds: best,
        });
    }
    Ok(rows)
}

/// Wall-time ratio between the rows for `from` and `to`, if both ran.
pub fn bench_ratio(rows: &[BenchRow], from: usize, to: usize) -> Option<f64> {
    let a = rows.iter().find(|r| r.n == from)?;
    let b = rows.iter().find(|r| r.n == to)?;
    Some(b.seconds / a.seconds)
}

/// Parse `args` and execute; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match cli.command {
        Command::Run {
            scenario,
            mode,
            out,
            emit,
            seed: _,
            overrides,
        } => match cmd_run(
            &scenario,
            &mode.modes(),
            &output_dir(out),
            &emit,
            &overrides,
        ) {
            Ok(r) => {
                for t in &r.traces {
                    let _ = writeln!(
                        stdout,
                        "{} [{}]: {} steps, max |a_ego| {:.3} m/s², min ego gap {:.2} m",
                        t.scenario,
                        t.mode,
                        t.records.len(),
                        t.max_abs_ego_accel(),
                        t.min_ego_distance()
                    );
                }
                for f in &r.files {
                    let _ = writeln!(stdout, "wrote {}", f.display());
                }
                0
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                exit_code(&e)
            }
        },
        Command::Check {
            only,
            dir,
            overrides,
        } => {
            let cat = match dir {
                Some(d) => Catalog::load_dir(&d),
                None => Catalog::builtin(),
            };
            let rows = cat.and_then(|c| cmd_check(&c, &only, &overrides));
            match rows {
                Ok(rows) => {
                    let mut failed = 0;
                    for (name, failures) in &rows {
                        let status = if failures.is_empty() { "PASS" } else { "FAIL" };
                        let first = failures.first().map_or("", String::as_str);
                        let _ = writeln!(stdout, "{name:<28} {status}  {first}");
                        failed += usize::from(!failures.is_empty());
                    }
                    let _ = writeln!(stdout, "{} scenarios, {failed} failed", rows.len());
                    if failed == 0 {
                        0
                    } else {
                        EXIT_CHECK_FAILED
                    }
                }
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Bench { n, seed, reps } => match cmd_bench(&n, seed, reps) {
            Ok(rows) => {
                let _ = writeln!(stdout, "{:>6} {:>8} {:>12}", "n", "pairs", "time_ms");
                for r in &rows {
                    let _ = writeln!(
                        stdout,
                        "{:>6} {:>8} {:>12.3}",
                        r.n,
                        r.pairs,
                        r.seconds * 1e3
                    );
                }
                if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
                    if first.n != last.n {
                        let _ = writeln!(
                            stdout,
                            "time ratio n={}->{}: {:.2} (pairs ratio {:.2})",
                            first.n,
                            last.n,
                            last.seconds / first.seconds,
                            last.pairs as f64 / first.pairs as f64
                        );
                    }
                }
                0
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                exit_code(&e)
            }
        },
        Command::ExportScenario { name, out } => {
            let text = resolve_scenario(&name).and_then(|s| s.to_toml());
            match text {
                Ok(t) => match out {
                    Some(p) => match fs::write(&p, t) {
                        Ok(()) => 0,
                        Err(e) => {
                            let _ = writeln!(stderr, "error: {e}");
                            1
                        }
                    },
                    None => {
                        let _ = write!(stdout, "{t}");
                        0
                    }
                },
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::List => {
            for n in catalog().names() {
                let _ = writeln!(stdout, "{n}");
            }
            0
        }
    }
}
