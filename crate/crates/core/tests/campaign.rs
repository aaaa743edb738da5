use sagin_core::engine::{run_campaign, run_seed, Cell, MetricStat, SweepAxis};
use sagin_core::{reference_scenario, Scenario, SchemeId};

fn base() -> Scenario {
    let mut s = reference_scenario();
    s.n_steps = 5;
    s
}

fn users(values: &[usize]) -> Vec<Cell> {
    values
        .iter()
        .map(|&value| Cell {
            axis: SweepAxis::Users,
            value,
        })
        .collect()
}

#[test]
fn two_cells_two_schemes_three_seeds() {
    let result = run_campaign(&base(), &users(&[50, 100]), &[SchemeId::Sat2d, SchemeId::Mab2d], 3, 11);
    assert_eq!(result.runs.len(), 12);
    assert_eq!(result.rows.len(), 4);
    assert!(result.failures.is_empty());
    for row in &result.rows {
        assert_eq!((row.runs, row.failed), (3, 0));
        assert_eq!(row.n_users, row.cell.value);
    }
    let mut order: Vec<(usize, SchemeId)> = result.rows.iter().map(|r| (r.cell.value, r.scheme)).collect();
    order.dedup();
    assert_eq!(
        order,
        vec![
            (50, SchemeId::Sat2d),
            (50, SchemeId::Mab2d),
            (100, SchemeId::Sat2d),
            (100, SchemeId::Mab2d)
        ]
    );
}

#[test]
fn duplicated_scheme_gives_identical_rows() {
    let result = run_campaign(&base(), &users(&[40]), &[SchemeId::Sat3dCa, SchemeId::Sat3dCa], 3, 2);
    let (a, b) = (&result.rows[0], &result.rows[1]);
    assert_eq!(a.runs, 3);
    assert_eq!(b.runs, 3);
    assert_eq!(a.mean_reward, b.mean_reward);
    assert_eq!(a.mean_load, b.mean_load);
    assert_eq!(a.fairness, b.fairness);
    assert_eq!(a.outage_users, b.outage_users);
    assert_eq!(a.mean_rate_bps, b.mean_rate_bps);
}

#[test]
fn rows_match_their_runs() {
    let result = run_campaign(&base(), &users(&[30]), &[SchemeId::Sat2dCa], 4, 5);
    let rewards: Vec<f64> = result.runs.iter().map(|r| r.aggregates.mean_reward).collect();
    let stat = MetricStat::from_samples(&rewards);
    let row = &result.rows[0];
    assert!((row.mean_reward.mean - stat.mean).abs() < 1e-15);
    assert!((row.mean_reward.stderr - stat.stderr).abs() < 1e-15);
    let seeds: Vec<u64> = result.runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, (0..4).map(|i| run_seed(5, i)).collect::<Vec<_>>());
}

#[test]
fn uav_axis_sets_the_fleet_size() {
    let cells = [1, 3].map(|value| Cell {
        axis: SweepAxis::Uavs,
        value,
    });
    let result = run_campaign(&base(), &cells, &[SchemeId::Pso2d], 1, 0);
    assert_eq!(result.rows[0].n_uavs, 1);
    assert_eq!(result.rows[1].n_uavs, 3);
}

#[test]
fn failed_seeds_are_recorded_and_excluded() {
    let mut s = base();
    s.min_sbs_separation_m = 10.0 * s.area_side_m;
    let result = run_campaign(&s, &users(&[20]), &[SchemeId::Sat2d], 3, 0);
    assert_eq!(result.failures.len(), 3);
    assert!(result.runs.is_empty());
    let row = &result.rows[0];
    assert_eq!((row.runs, row.failed), (0, 3));
    assert!(row.mean_reward.mean.is_nan());
    assert!(result.failures[0].error.contains("placement"));
}

#[test]
fn metric_stat_matches_textbook_values() {
    let s = MetricStat::from_samples(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(s.mean, 2.5);
    // sample variance 5/3, stderr sqrt(5/12)
    assert!((s.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    assert_eq!(MetricStat::from_samples(&[7.0]).stderr, 0.0);
    let other = MetricStat { mean: 0.0, stderr: 0.4 };
    let this = MetricStat { mean: 0.0, stderr: 0.3 };
    assert!((this.pooled_stderr(&other) - 0.5).abs() < 1e-15);
}

#[test]
fn replica_seeds_are_distinct() {
    let mut seeds: Vec<u64> = (0..1000).map(|i| run_seed(42, i)).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 1000);
    assert_ne!(run_seed(1, 0), run_seed(2, 0));
}
