//! Monte Carlo campaigns over a sweep of user or UAV counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_once, RunAggregates};
use crate::scenario::{Scenario, SchemeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Users,
    Uavs,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Users => "users",
            SweepAxis::Uavs => "uavs",
        }
    }
}

/// One sweep point: the base scenario with a single count overridden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub axis: SweepAxis,
    pub value: usize,
}

impl Cell {
    pub fn apply(&self, base: &Scenario) -> Scenario {
        let mut s = base.clone();
        match self.axis {
            SweepAxis::Users => s.n_users = self.value,
            SweepAxis::Uavs => s.n_uavs = self.value,
        }
        s
    }
}

/// Seed of Monte Carlo replica `index`. Independent of scheme and cell so
/// every scheme sees the same placements and mobility.
pub fn run_seed(master: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub cell: Cell,
    pub scheme: SchemeId,
    pub replica: usize,
    pub seed: u64,
    pub aggregates: RunAggregates,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub cell: Cell,
    pub scheme: SchemeId,
    pub replica: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    /// Standard error of the mean; 0 with fewer than two samples.
    pub stderr: f64,
}

impl MetricStat {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MetricStat {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        MetricStat { mean, stderr }
    }

    /// Combined standard error of a difference of two means.
    pub fn pooled_stderr(&self, other: &MetricStat) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub cell: Cell,
    pub n_users: usize,
    pub n_uavs: usize,
    pub scheme: SchemeId,
    pub runs: usize,
    pub failed: usize,
    pub outage_users: MetricStat,
    pub mean_load: MetricStat,
    pub mean_rate_bps: MetricStat,
    pub fairness: MetricStat,
    pub mean_reward: MetricStat,
    pub runtime_ms: MetricStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    /// One row per (cell, scheme), cells outermost, in input order.
    pub rows: Vec<AggregateRow>,
    pub runs: Vec<RunSummary>,
    pub failures: Vec<FailedRun>,
}

impl CampaignResult {
    pub fn row(&self, cell: Cell, scheme: SchemeId) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.cell == cell && r.scheme == scheme)
    }
}

/// Runs `n_mc` replicas of every (cell, scheme) pair. Failed replicas are
/// recorded and left out of the statistics.
pub fn run_campaign(
    base: &Scenario,
    cells: &[Cell],
    schemes: &[SchemeId],
    n_mc: usize,
    master_seed: u64,
) -> CampaignResult {
    let jobs: Vec<(usize, usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..schemes.len()).flat_map(move |k| (0..n_mc).map(move |m| (c, k, m))))
        .collect();
    let outcomes: Vec<Result<RunSummary, FailedRun>> = jobs
        .par_iter()
        .map(|&(c, k, m)| {
            let cell = cells[c];
            let scheme = schemes[k];
            let seed = run_seed(master_seed, m);
            match run_once(&cell.apply(base), scheme, seed) {
                Ok(res) => Ok(RunSummary {
                    cell,
                    scheme,
                    replica: m,
                    seed,
                    aggregates: res.aggregates,
                    runtime_ms: res.runtime_ms,
                }),
                Err(e) => Err(FailedRun {
                    cell,
                    scheme,
                    replica: m,
                    seed,
                    error: e.to_string(),
                }),
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(cells.len() * schemes.len());
    for (c, cell) in cells.iter().enumerate() {
        let scenario = cell.apply(base);
        for (k, &scheme) in schemes.iter().enumerate() {
            let mine: Vec<&RunSummary> = jobs
                .iter()
                .zip(&outcomes)
                .filter(|((jc, jk, _), _)| *jc == c && *jk == k)
                .filter_map(|(_, o)| o.as_ref().ok())
                .collect();
            let stat = |f: &dyn Fn(&RunSummary) -> f64| {
                MetricStat::from_samples(&mine.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            rows.push(AggregateRow {
                cell: *cell,
                n_users: scenario.n_users,
                n_uavs: scenario.n_uavs,
                scheme,
                runs: mine.len(),
                failed: n_mc - mine.len(),
                outage_users: stat(&|r| r.aggregates.outage_users),
                mean_load: stat(&|r| r.aggregates.mean_load),
                mean_rate_bps: stat(&|r| r.aggregates.mean_rate_bps),
                fairness: stat(&|r| r.aggregates.fairness),
                mean_reward: stat(&|r| r.aggregates.mean_reward),
                runtime_ms: stat(&|r| r.runtime_ms),
            });
        }
    }

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(f) => failures.push(f),
        }
    }
    CampaignResult { rows, runs, failures }
}
