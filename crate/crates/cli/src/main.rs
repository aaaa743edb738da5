use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sagin_core::engine::{run_campaign, run_seed, run_with_observer, Cell, SweepAxis};
use sagin_core::report::{self, Manifest, SweepSpec, MANIFEST_FORMAT, TRAJECTORY_HEADER};
use sagin_core::scenario::{apply_override, parse_override};
use sagin_core::{Scenario, SchemeId, SimError};
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "sagin-sim",
    version,
    about = "UAV-assisted space-air-ground network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write per-step metrics.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write every entity position at every step.
        #[arg(long)]
        dump_trajectories: bool,
    },
    /// Run a Monte Carlo campaign over schemes and a sweep.
    Compare {
        #[command(flatten)]
        common: Common,
        /// `users=START:END[:STEP]` or `uavs=START:END[:STEP]` (inclusive).
        #[arg(long)]
        sweep: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON scenario file, or a manifest written by an earlier invocation.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated scheme names.
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    /// Monte Carlo replicas per scheme and sweep point.
    #[arg(long)]
    mc: Option<usize>,
    /// Master seed; replica seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "SAGIN_SIM_OUT", default_value = "sagin-out")]
    out: PathBuf,
    /// `key=value`, dotted keys reach nested fields; repeatable.
    #[arg(long = "override")]
    overrides: Vec<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn config_err(e: SimError) -> Failure {
    Failure::Config(e.to_string())
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("cannot write `{}`: {e}", path.display()))
}

/// Resolved inputs shared by both subcommands.
struct Setup {
    scenario: Scenario,
    schemes: Vec<SchemeId>,
    master_seed: u64,
    n_mc: Option<usize>,
    sweep: Option<SweepSpec>,
}

fn load(common: &Common) -> Result<Setup, Failure> {
    let mut value = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read config `{}`: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| Failure::Config(format!("config `{}` is not valid JSON: {e}", path.display())))?
        }
        None => Value::Object(Default::default()),
    };

    let mut schemes = None;
    let mut master_seed = None;
    let mut n_mc = None;
    let mut sweep = None;
    if value.get("format").and_then(Value::as_str) == Some(MANIFEST_FORMAT) {
        let manifest: Manifest =
            serde_json::from_value(value.clone()).map_err(|e| Failure::Config(format!("invalid manifest: {e}")))?;
        value = serde_json::to_value(&manifest.scenario).expect("scenario serializes");
        schemes = Some(manifest.schemes);
        master_seed = Some(manifest.master_seed);
        n_mc = Some(manifest.n_mc);
        sweep = manifest.sweep;
    }

    for spec in &common.overrides {
        let (key, raw) = parse_override(spec).map_err(config_err)?;
        apply_override(&mut value, key, raw).map_err(config_err)?;
    }
    let scenario = Scenario::from_json_value(value).map_err(config_err)?;

    if let Some(names) = &common.scheme {
        let parsed: Result<Vec<SchemeId>, _> = names
            .iter()
            .filter(|n| !n.trim().is_empty())
            .map(|n| n.trim().parse())
            .collect();
        schemes = Some(parsed.map_err(config_err)?);
    }
    let schemes = schemes.unwrap_or_else(|| vec![scenario.scheme]);
    if schemes.is_empty() {
        return Err(Failure::Config("no schemes selected".into()));
    }

    Ok(Setup {
        master_seed: common.seed.or(master_seed).unwrap_or(scenario.seed),
        n_mc: common.mc.or(n_mc),
        scenario,
        schemes,
        sweep,
    })
}

fn parse_sweep(spec: &str) -> Result<SweepSpec, Failure> {
    let bad = || {
        Failure::Config(format!(
            "invalid sweep `{spec}`: expected users=A:B[:STEP] or uavs=A:B[:STEP]"
        ))
    };
    let (axis, range) = spec.split_once('=').ok_or_else(bad)?;
    let axis = match axis.trim() {
        "users" => SweepAxis::Users,
        "uavs" => SweepAxis::Uavs,
        _ => return Err(bad()),
    };
    let parts: Vec<usize> = range
        .split(':')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, end, step) = match parts[..] {
        [a, b] => (a, b, 1),
        [a, b, s] if s > 0 => (a, b, s),
        _ => return Err(bad()),
    };
    if start > end {
        return Err(bad());
    }
    Ok(SweepSpec {
        axis,
        values: (start..=end).step_by(step).collect(),
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))
}

fn cmd_run(common: &Common, dump_trajectories: bool) -> Result<(), Failure> {
    let setup = load(common)?;
    let n_mc = setup.n_mc.unwrap_or(1).max(1);
    let seeds: Vec<u64> = (0..n_mc).map(|i| run_seed(setup.master_seed, i)).collect();
    fs::create_dir_all(&common.out).map_err(|e| io_err(&common.out, e))?;

    let mut runs = Vec::new();
    let mut trajectories = String::from(TRAJECTORY_HEADER);
    trajectories.push('\n');
    for &scheme in &setup.schemes {
        for &seed in &seeds {
            let result = run_with_observer(&setup.scenario, scheme, seed, |sim, _| {
                if dump_trajectories {
                    report::trajectory_rows(sim, &mut trajectories);
                }
            });
            match result {
                Ok(r) => runs.push(r),
                Err(e @ SimError::Range { .. }) | Err(e @ SimError::Scheme(_)) => return Err(config_err(e)),
                Err(e) => return Err(Failure::Runtime(format!("{scheme} seed {seed}: {e}"))),
            }
        }
    }

    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "run".into(),
        scenario: setup.scenario.clone(),
        schemes: setup.schemes.clone(),
        master_seed: setup.master_seed,
        n_mc,
        seeds,
        sweep: None,
        total_runtime_ms: runs.iter().map(|r| r.runtime_ms).sum(),
        failures: Vec::new(),
    };
    let out = &common.out;
    write(out, "steps.csv", &report::steps_csv(&runs))?;
    write(out, "runs.csv", &report::runs_csv(&runs))?;
    write(out, "manifest.json", &manifest.to_json_pretty())?;
    let summary = report::run_summary(&runs);
    write(out, "summary.txt", &summary)?;
    if dump_trajectories {
        write(out, "trajectories.csv", &trajectories)?;
    }
    print!("{summary}");
    Ok(())
}

fn cmd_compare(common: &Common, sweep: Option<&str>) -> Result<(), Failure> {
    let setup = load(common)?;
    let sweep = match sweep {
        Some(spec) => parse_sweep(spec)?,
        None => setup.sweep.clone().unwrap_or(SweepSpec {
            axis: SweepAxis::Users,
            values: vec![setup.scenario.n_users],
        }),
    };
    let n_mc = setup.n_mc.unwrap_or(setup.scenario.n_monte_carlo).max(1);
    let cells: Vec<Cell> = sweep
        .values
        .iter()
        .map(|&value| Cell {
            axis: sweep.axis,
            value,
        })
        .collect();
    for cell in &cells {
        cell.apply(&setup.scenario).validate().map_err(config_err)?;
    }
    fs::create_dir_all(&common.out).map_err(|e| io_err(&common.out, e))?;

    let result = run_campaign(&setup.scenario, &cells, &setup.schemes, n_mc, setup.master_seed);
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "compare".into(),
        scenario: setup.scenario.clone(),
        schemes: setup.schemes.clone(),
        master_seed: setup.master_seed,
        n_mc,
        seeds: (0..n_mc).map(|i| run_seed(setup.master_seed, i)).collect(),
        sweep: Some(sweep),
        total_runtime_ms: result.runs.iter().map(|r| r.runtime_ms).sum(),
        failures: result
            .failures
            .iter()
            .map(|f| {
                format!(
                    "{}={} {} seed {}: {}",
                    f.cell.axis.name(),
                    f.cell.value,
                    f.scheme,
                    f.seed,
                    f.error
                )
            })
            .collect(),
    };
    let out = &common.out;
    write(out, "aggregate.csv", &report::aggregate_csv(&result.rows))?;
    write(out, "aggregate_long.csv", &report::long_csv(&result.rows))?;
    write(out, "runs.csv", &report::campaign_runs_csv(&result))?;
    write(out, "manifest.json", &manifest.to_json_pretty())?;
    let summary = report::campaign_summary(&result, &setup.schemes);
    write(out, "summary.txt", &summary)?;
    print!("{summary}");
    if result.runs.is_empty() {
        return Err(Failure::Runtime(format!("all {} runs failed", result.failures.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run {
            common,
            dump_trajectories,
        } => cmd_run(common, *dump_trajectories),
        Command::Compare { common, sweep } => cmd_compare(common, sweep.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(msg) | Failure::Runtime(msg)) = &f;
            let kind = if f.code() == 1 { "config error" } else { "runtime error" };
            eprintln!("sagin-sim: {kind}: {msg}");
            ExitCode::from(f.code())
        }
    }
}
