//! CSV, JSON and plain-text renderings of run and campaign results.
//!
//! Floats are written with Rust's shortest round-trip formatting, which is
//! locale independent, so identical runs produce byte-identical files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::{AggregateRow, CampaignResult, RunResult, Simulation, SweepAxis};
use crate::scenario::{Scenario, SchemeId};

pub const MANIFEST_FORMAT: &str = "sagin-sim-manifest";

pub const STEPS_HEADER: &str =
    "run,seed,scheme,step,outage_users,mean_load,mean_rate_bps,fairness,mean_reward,fp_residual,fp_iterations";

pub const RUNS_HEADER: &str =
    "run,seed,scheme,steps,outage_users,mean_load,mean_rate_bps,fairness,mean_reward,max_fp_residual,runtime_ms";

pub const CAMPAIGN_RUNS_HEADER: &str =
    "sweep,x,scheme,replica,seed,outage_users,mean_load,mean_rate_bps,fairness,mean_reward,max_fp_residual,runtime_ms";

pub const AGGREGATE_HEADER: &str = "sweep,x,n_users,n_uavs,scheme,runs,failed,\
outage_mean,outage_stderr,load_mean,load_stderr,rate_bps_mean,rate_bps_stderr,\
fairness_mean,fairness_stderr,reward_mean,reward_stderr,runtime_ms_mean,runtime_ms_stderr";

pub const LONG_HEADER: &str = "metric,scheme,sweep,x,mean,stderr";

pub const TRAJECTORY_HEADER: &str = "step,entity_id,kind,x,y,h";

/// Everything needed to repeat a `run` or `compare` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub command: String,
    pub scenario: Scenario,
    pub schemes: Vec<SchemeId>,
    pub master_seed: u64,
    pub n_mc: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub total_runtime_ms: f64,
    #[serde(default)]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

impl Manifest {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

pub fn steps_csv(runs: &[RunResult]) -> String {
    let mut out = String::from(STEPS_HEADER);
    out.push('\n');
    for (i, run) in runs.iter().enumerate() {
        for r in &run.records {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{},{},{},{},{},{}",
                run.seed,
                run.scheme,
                r.step,
                r.outage_users,
                r.mean_load,
                r.mean_rate_bps,
                r.fairness,
                r.mean_reward,
                r.fp_residual,
                r.fp_iterations
            );
        }
    }
    out
}

pub fn runs_csv(runs: &[RunResult]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for (i, run) in runs.iter().enumerate() {
        let a = &run.aggregates;
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{},{}",
            run.seed,
            run.scheme,
            run.records.len(),
            a.outage_users,
            a.mean_load,
            a.mean_rate_bps,
            a.fairness,
            a.mean_reward,
            a.max_fp_residual,
            run.runtime_ms
        );
    }
    out
}

pub fn campaign_runs_csv(result: &CampaignResult) -> String {
    let mut out = String::from(CAMPAIGN_RUNS_HEADER);
    out.push('\n');
    for r in &result.runs {
        let a = &r.aggregates;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.cell.axis.name(),
            r.cell.value,
            r.scheme,
            r.replica,
            r.seed,
            a.outage_users,
            a.mean_load,
            a.mean_rate_bps,
            a.fairness,
            a.mean_reward,
            a.max_fp_residual,
            r.runtime_ms
        );
    }
    out
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.cell.axis.name(),
            r.cell.value,
            r.n_users,
            r.n_uavs,
            r.scheme,
            r.runs,
            r.failed
        );
        for m in [
            &r.outage_users,
            &r.mean_load,
            &r.mean_rate_bps,
            &r.fairness,
            &r.mean_reward,
            &r.runtime_ms,
        ] {
            let _ = write!(out, ",{},{}", m.mean, m.stderr);
        }
        out.push('\n');
    }
    out
}

/// One line per (metric, scheme, sweep point), ready for plotting tools.
pub fn long_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(LONG_HEADER);
    out.push('\n');
    for r in rows {
        for (name, m) in [
            ("outage_users", &r.outage_users),
            ("mean_load", &r.mean_load),
            ("mean_rate_bps", &r.mean_rate_bps),
            ("fairness", &r.fairness),
            ("mean_reward", &r.mean_reward),
            ("runtime_ms", &r.runtime_ms),
        ] {
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{}",
                r.scheme,
                r.cell.axis.name(),
                r.cell.value,
                m.mean,
                m.stderr
            );
        }
    }
    out
}

/// Positions of every user, SBS and UAV after the last completed step.
pub fn trajectory_rows(sim: &Simulation, out: &mut String) {
    let world = sim.world();
    let step = world.step.saturating_sub(1);
    for (i, u) in world.users.iter().enumerate() {
        let p = u.position;
        let _ = writeln!(out, "{step},{i},user,{},{},{}", p.x, p.y, p.h);
    }
    for (i, p) in world.sbs.iter().enumerate() {
        let _ = writeln!(out, "{step},{i},sbs,{},{},{}", p.x, p.y, p.h);
    }
    for (i, p) in world.uavs.iter().enumerate() {
        let _ = writeln!(out, "{step},{i},uav,{},{},{}", p.x, p.y, p.h);
    }
}

pub fn run_summary(runs: &[RunResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>20} {:>10} {:>9} {:>12} {:>9} {:>9} {:>11}",
        "scheme", "seed", "outage", "load", "rate_mbps", "fairness", "reward", "runtime_ms"
    );
    for run in runs {
        let a = &run.aggregates;
        let _ = writeln!(
            out,
            "{:<12} {:>20} {:>10.3} {:>9.4} {:>12.4} {:>9.4} {:>9.4} {:>11.1}",
            run.scheme.name(),
            run.seed,
            a.outage_users,
            a.mean_load,
            a.mean_rate_bps / 1e6,
            a.fairness,
            a.mean_reward,
            run.runtime_ms
        );
    }
    out
}

type MetricColumn = (&'static str, fn(&AggregateRow) -> (f64, f64), f64);

/// One table per metric: sweep points down, schemes across, `mean±stderr`.
pub fn campaign_summary(result: &CampaignResult, schemes: &[SchemeId]) -> String {
    let mut out = String::new();
    let mut cells = Vec::new();
    for r in &result.rows {
        if !cells.contains(&r.cell) {
            cells.push(r.cell);
        }
    }
    let metrics: [MetricColumn; 6] = [
        (
            "average outage users",
            |r| (r.outage_users.mean, r.outage_users.stderr),
            1.0,
        ),
        ("average load per BS", |r| (r.mean_load.mean, r.mean_load.stderr), 1.0),
        (
            "average rate per user (Mbps)",
            |r| (r.mean_rate_bps.mean, r.mean_rate_bps.stderr),
            1e-6,
        ),
        ("average fairness", |r| (r.fairness.mean, r.fairness.stderr), 1.0),
        ("average reward", |r| (r.mean_reward.mean, r.mean_reward.stderr), 1.0),
        (
            "runtime per run (ms)",
            |r| (r.runtime_ms.mean, r.runtime_ms.stderr),
            1.0,
        ),
    ];
    for (title, get, scale) in metrics {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:<10}", "x");
        for s in schemes {
            let _ = write!(out, " {:>20}", s.name());
        }
        out.push('\n');
        for cell in &cells {
            let _ = write!(out, "{:<10}", format!("{}={}", cell.axis.name(), cell.value));
            for (k, _) in schemes.iter().enumerate() {
                let row = result.rows.iter().filter(|r| r.cell == *cell).nth(k);
                match row {
                    Some(r) => {
                        let (m, e) = get(r);
                        let _ = write!(out, " {:>20}", format!("{:.4}±{:.4}", m * scale, e * scale));
                    }
                    None => {
                        let _ = write!(out, " {:>20}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    if !result.failures.is_empty() {
        let _ = writeln!(out, "failed runs: {}", result.failures.len());
        for f in &result.failures {
            let _ = writeln!(
                out,
                "  {}={} {} seed {}: {}",
                f.cell.axis.name(),
                f.cell.value,
                f.scheme,
                f.seed,
                f.error
            );
        }
    }
    out
}
