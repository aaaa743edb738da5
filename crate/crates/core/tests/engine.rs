use sagin_core::engine::{run_once, run_with_observer, MetricsRecord, RunAggregates, Simulation};
use sagin_core::radio::{associate, jain_fairness, noise_mw, reward, LoadProblem, RxPower};
use sagin_core::report::{steps_csv, trajectory_rows};
use sagin_core::{reference_scenario, Scenario, SchemeId, SimError};

fn small(steps: usize, users: usize) -> Scenario {
    let mut s = reference_scenario();
    s.n_steps = steps;
    s.n_users = users;
    s
}

fn without_clock(records: &[MetricsRecord]) -> Vec<MetricsRecord> {
    records
        .iter()
        .cloned()
        .map(|mut r| {
            r.wall_clock_ms = 0.0;
            r
        })
        .collect()
}

#[test]
fn ten_step_smoke_run_for_every_scheme_keeps_invariants() {
    let s = small(10, 60);
    let r_max = s.reward_max();
    for scheme in SchemeId::ALL {
        let mut sim = Simulation::new(&s, scheme, 17).unwrap();
        for step in 0..10 {
            let rec = sim.step().unwrap();
            assert_eq!(rec.step, step);
            assert!(
                (0.0..=1.0).contains(&rec.fairness),
                "{scheme} fairness {}",
                rec.fairness
            );
            assert!((0.0..=1.0).contains(&rec.mean_load), "{scheme} load {}", rec.mean_load);
            assert!(rec.outage_users <= s.n_users);
            for &r in sim.rewards() {
                assert!((0.0..=r_max).contains(&r), "{scheme} reward {r}");
            }
            for u in &sim.world().uavs {
                assert!(u.h >= s.h_min() - 1e-9 && u.h <= s.h_max() + 1e-9);
                assert!((0.0..=s.area_side_m).contains(&u.x) && (0.0..=s.area_side_m).contains(&u.y));
                if !scheme.is_3d() {
                    assert_eq!(u.h, s.h_max(), "{scheme} must pin altitude");
                }
            }
            assert!(sim.world().channels.iter().all(|&c| c < s.n_channels));
        }
        assert_eq!(sim.steps_done(), 10);
    }
}

#[test]
fn same_seed_gives_identical_runs() {
    let s = small(25, 40);
    for scheme in [
        SchemeId::Sat3dCa,
        SchemeId::Pso3d,
        SchemeId::DqnCa3d,
        SchemeId::QLearning2d,
    ] {
        let a = run_once(&s, scheme, 5).unwrap();
        let b = run_once(&s, scheme, 5).unwrap();
        assert_eq!(without_clock(&a.records), without_clock(&b.records), "{scheme}");
        assert_eq!(steps_csv(&[a]), steps_csv(&[b]));
    }
}

#[test]
fn different_seeds_differ() {
    let s = small(10, 40);
    let a = run_once(&s, SchemeId::Sat2d, 1).unwrap();
    let b = run_once(&s, SchemeId::Sat2d, 2).unwrap();
    assert_ne!(without_clock(&a.records), without_clock(&b.records));
}

#[test]
fn aggregates_are_means_of_records() {
    let s = small(30, 50);
    let run = run_once(&s, SchemeId::Mab3dCa, 9).unwrap();
    let n = run.records.len() as f64;
    let mean = |f: fn(&MetricsRecord) -> f64| run.records.iter().map(f).sum::<f64>() / n;
    let a = run.aggregates;
    assert!((a.mean_load - mean(|r| r.mean_load)).abs() < 1e-12);
    assert!((a.fairness - mean(|r| r.fairness)).abs() < 1e-12);
    assert!((a.mean_reward - mean(|r| r.mean_reward)).abs() < 1e-12);
    assert!((a.mean_rate_bps - mean(|r| r.mean_rate_bps)).abs() < 1e-6);
    assert!((a.outage_users - mean(|r| r.outage_users as f64)).abs() < 1e-12);
    assert_eq!(a, RunAggregates::from_records(&run.records));
    let clock: f64 = run.records.iter().map(|r| r.wall_clock_ms).sum();
    assert_eq!(run.runtime_ms, clock);
}

#[test]
fn observers_do_not_change_trajectories() {
    let s = small(20, 40);
    for scheme in [SchemeId::Sat3dCa, SchemeId::Pso2d] {
        let plain = run_once(&s, scheme, 3).unwrap();
        let mut dump = String::new();
        let mut seen = 0;
        let watched = run_with_observer(&s, scheme, 3, |sim, rec| {
            trajectory_rows(sim, &mut dump);
            let _ = sim.rewards().iter().sum::<f64>() + rec.fairness;
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 20);
        assert!(!dump.is_empty());
        assert_eq!(without_clock(&plain.records), without_clock(&watched.records));
    }
}

#[test]
fn no_uavs_leaves_static_small_cells() {
    let mut s = small(15, 50);
    s.n_uavs = 0;
    let mut sim = Simulation::new(&s, SchemeId::Sat2d, 4).unwrap();
    let sbs = sim.world().sbs.clone();
    let mut channel_plans = Vec::new();
    for _ in 0..15 {
        sim.step().unwrap();
        assert_eq!(sim.world().sbs, sbs);
        channel_plans.push(sim.world().channels.clone());
    }
    assert_eq!(sim.world().n_bs(), 4);
    channel_plans.dedup();
    assert!(channel_plans.len() > 1, "random channels should change between steps");
}

#[test]
fn fairness_only_weights_make_every_reward_the_fairness() {
    let mut s = small(12, 60);
    s.reward_weights = [1.0, 0.0];
    for scheme in [SchemeId::Sat3dCa, SchemeId::Mab2d] {
        let mut sim = Simulation::new(&s, scheme, 8).unwrap();
        for _ in 0..12 {
            let rec = sim.step().unwrap();
            for &r in sim.rewards() {
                assert_eq!(r, rec.fairness);
            }
        }
    }
}

#[test]
fn learner_reward_matches_metrics_record() {
    let s = small(15, 80);
    let mut sim = Simulation::new(&s, SchemeId::Sat2dCa, 21).unwrap();
    for _ in 0..15 {
        let rec = sim.step().unwrap();
        let r = sim.rewards();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        assert_eq!(mean, rec.mean_reward);
    }
}

#[test]
fn single_user_single_bs_reward_by_hand() {
    // Capacity chosen as 10 Mbps, so the load is 1.8 / 10 = 0.18.
    let bandwidth = 56e6;
    let noise = noise_mw(-174.0, bandwidth);
    let snr = 2f64.powf(10e6 / bandwidth) - 1.0;
    let mut rx = RxPower::zeros(1, 1);
    rx.set(0, 0, snr * noise);
    let assoc = associate(&rx);
    let problem = LoadProblem::new(&rx, &assoc, &[0], noise, bandwidth, 1.8e6);
    let sol = problem.solve(500);
    assert!((sol.rho[0] - 0.18).abs() < 1e-12);
    let rates = problem.served_rates(&sol, 1);
    assert!((rates[0] - 1.8e6).abs() < 1e-6);
    let f = jain_fairness(&rates);
    assert_eq!(f, 1.0);
    let r = reward(f, sol.rho[0], [0.5, 0.5]);
    assert!((r - (0.5 + 0.5 * 0.82)).abs() < 1e-12);
}

#[test]
fn frozen_users_and_fixed_stations_vary_only_through_fading() {
    let mut s = small(10, 30);
    s.user_speed_range_mps = [0.0, 0.0];
    s.n_uavs = 0;
    let mut sim = Simulation::new(&s, SchemeId::Pso2d, 2).unwrap();
    let users: Vec<_> = sim.world().users.iter().map(|u| u.position).collect();
    for _ in 0..10 {
        sim.step().unwrap();
        let now: Vec<_> = sim.world().users.iter().map(|u| u.position).collect();
        assert_eq!(now, users);
    }
}

#[test]
fn invalid_scenario_is_rejected_before_running() {
    let mut s = small(10, 10);
    s.n_channels = 0;
    assert!(matches!(
        Simulation::new(&s, SchemeId::Sat2d, 0),
        Err(SimError::Range { .. })
    ));
}

#[test]
fn impossible_placement_is_reported() {
    let mut s = small(5, 10);
    s.min_sbs_separation_m = 10.0 * s.area_side_m;
    assert!(matches!(run_once(&s, SchemeId::Sat2d, 0), Err(SimError::Placement(_))));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn metrics_stay_in_range(
            users in 1usize..80,
            uavs in 0usize..4,
            scheme in 0usize..9,
            seed in any::<u64>(),
        ) {
            let mut s = small(4, users);
            s.n_uavs = uavs;
            let scheme = SchemeId::ALL[scheme];
            let mut sim = Simulation::new(&s, scheme, seed).unwrap();
            for _ in 0..4 {
                let rec = sim.step().unwrap();
                prop_assert!((0.0..=1.0).contains(&rec.fairness));
                prop_assert!((0.0..=1.0).contains(&rec.mean_load));
                prop_assert!(rec.outage_users <= users);
                prop_assert!(rec.mean_rate_bps >= 0.0 && rec.mean_rate_bps <= s.requested_rate_bps + 1e-6);
                for &r in sim.rewards() {
                    prop_assert!((0.0..=s.reward_max()).contains(&r));
                }
            }
        }
    }
}
