//! Simulation loop: scheme wiring, the per-step pipeline and Monte Carlo runs.

pub mod campaign;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use campaign::{
    run_campaign, run_seed, AggregateRow, CampaignResult, Cell, FailedRun, MetricStat, RunSummary, SweepAxis,
};

use crate::environment::{apply_uav_action, init_world, move_uav_toward, step_users, Direction, Position3, WorldState};
use crate::error::{Result, SimError};
use crate::learners::{
    ActionSpace, DqnAgent, DqnParams, PsoParams, PsoSwarm, QLearner, SatisfactionAgent, SatisfactionParams, StateGrid,
    Transition, UcbBandit,
};
use crate::radio::{
    apply_backhaul_caps, associate, backhaul_cap, dbm_to_mw, draw_rx_power, expected_gain, jain_fairness, link_kind,
    noise_mw, outage_count, reward, tx_power_mw, AerialGainTable, LoadProblem, RxPower,
};
use crate::scenario::{Algorithm, Scenario, SchemeId};

/// Independent random streams derived from one run seed.
pub const STREAM_PLACEMENT: u64 = 0;
pub const STREAM_MOBILITY: u64 = 1;
pub const STREAM_CHANNEL: u64 = 2;
pub const STREAM_RADIO: u64 = 3;
pub const STREAM_POLICY: u64 = 4;
pub const STREAM_PSO: u64 = 5;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: usize,
    pub outage_users: usize,
    pub mean_load: f64,
    pub mean_rate_bps: f64,
    pub fairness: f64,
    pub mean_reward: f64,
    pub wall_clock_ms: f64,
    /// Last-iteration change of the load fixed point.
    pub fp_residual: f64,
    pub fp_iterations: usize,
}

/// Time averages of the per-step metrics of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunAggregates {
    pub outage_users: f64,
    pub mean_load: f64,
    pub mean_rate_bps: f64,
    pub fairness: f64,
    pub mean_reward: f64,
    pub max_fp_residual: f64,
}

impl RunAggregates {
    pub fn from_records(records: &[MetricsRecord]) -> Self {
        let n = records.len().max(1) as f64;
        let mean = |f: &dyn Fn(&MetricsRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        RunAggregates {
            outage_users: mean(&|r| r.outage_users as f64),
            mean_load: mean(&|r| r.mean_load),
            mean_rate_bps: mean(&|r| r.mean_rate_bps),
            fairness: mean(&|r| r.fairness),
            mean_reward: mean(&|r| r.mean_reward),
            max_fp_residual: records.iter().map(|r| r.fp_residual).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scheme: SchemeId,
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    pub aggregates: RunAggregates,
    /// Sum of per-step compute time.
    pub runtime_ms: f64,
}

/// Learning state of one base station.
#[derive(Debug, Clone)]
pub enum Policy {
    /// No decisions: SBS position fixed, channel drawn at random if unlearned.
    Fixed,
    Satisfaction {
        agent: SatisfactionAgent,
        space: ActionSpace,
    },
    Ucb {
        bandit: UcbBandit,
        space: ActionSpace,
    },
    QLearning {
        learner: QLearner,
        space: ActionSpace,
        grid: StateGrid,
    },
    Dqn {
        agent: Box<DqnAgent>,
        space: ActionSpace,
    },
}

enum Pending {
    None,
    Plain(usize),
    Q { state: usize, action: usize },
    Dqn { state: Vec<f64>, action: usize },
}

struct Streams {
    mobility: ChaCha8Rng,
    channel: ChaCha8Rng,
    radio: ChaCha8Rng,
    policy: ChaCha8Rng,
    pso: ChaCha8Rng,
}

/// One run in progress.
pub struct Simulation {
    scenario: Scenario,
    scheme: SchemeId,
    seed: u64,
    world: WorldState,
    policies: Vec<Policy>,
    swarm: Option<(PsoSwarm, AerialGainTable)>,
    streams: Streams,
    noise_mw: f64,
    rewards: Vec<f64>,
    actions: Vec<Option<usize>>,
}

fn dqn_state(p: &Position3, s: &Scenario) -> Vec<f64> {
    vec![p.x / s.area_side_m, p.y / s.area_side_m, p.h / s.h_max()]
}

fn build_policy<R: Rng + ?Sized>(s: &Scenario, scheme: SchemeId, is_uav: bool, rng: &mut R) -> Policy {
    let algo = scheme.algorithm();
    let moves: &[Direction] = if is_uav && algo != Algorithm::Pso {
        Direction::set(scheme.is_3d())
    } else {
        &[]
    };
    let channels = scheme.learns_channels().then_some(s.n_channels);
    if moves.is_empty() && channels.is_none() {
        return Policy::Fixed;
    }
    let space = ActionSpace::new(moves, channels);
    let p = &s.algo_params;
    match algo {
        Algorithm::Satisfaction => {
            let reward_max = s.reward_max();
            let params = SatisfactionParams {
                delta: p.satisfaction_delta,
                tau: p.satisfaction_tau,
                reward_max,
                kappa0: p.satisfaction_kappa0.unwrap_or(reward_max),
            };
            Policy::Satisfaction {
                agent: SatisfactionAgent::new(space.len(), params),
                space,
            }
        }
        Algorithm::Ucb => Policy::Ucb {
            bandit: UcbBandit::new(space.len()),
            space,
        },
        Algorithm::QLearning => {
            let grid = StateGrid::new(s.area_side_m, p.grid_cell_m, s.uav_alt_range_m, scheme.is_3d());
            Policy::QLearning {
                learner: QLearner::new(grid.n_states(), space.len(), p.q_alpha, p.q_gamma, p.epsilon),
                space,
                grid,
            }
        }
        Algorithm::Dqn => {
            let params = DqnParams {
                hidden: p.dqn_hidden,
                batch: p.dqn_batch,
                replay: p.dqn_replay,
                target_sync: p.dqn_target_sync as u64,
                lr: p.dqn_lr,
                gamma: p.gamma_dqn,
                epsilon: p.epsilon,
            };
            Policy::Dqn {
                agent: Box::new(DqnAgent::new(3, space.len(), params, rng)),
                space,
            }
        }
        Algorithm::Pso => Policy::Fixed,
    }
}

const PLANNER_FP_TOL: f64 = 1e-4;

/// Sum of per-BS rewards for a candidate fleet placement, using mean path
/// loss (no LoS or shadowing draws) so the planner sees a smooth objective.
/// `sbs_rx` holds the SBS rows of the received-power matrix.
pub fn fleet_utility(
    s: &Scenario,
    table: &AerialGainTable,
    users: &[Position3],
    sbs_rx: &[f64],
    channels: &[usize],
    coords: &[f64],
    three_d: bool,
) -> f64 {
    let n_users = users.len();
    let n_sbs = sbs_rx.len() / n_users.max(1);
    let dims = if three_d { 3 } else { 2 };
    let n_uavs = coords.len() / dims;
    let mut rx = RxPower::zeros(n_sbs + n_uavs, n_users);
    rx.mw[..sbs_rx.len()].copy_from_slice(sbs_rx);
    let p_uav = dbm_to_mw(s.uav_tx_power_dbm);
    for u in 0..n_uavs {
        let c = &coords[u * dims..(u + 1) * dims];
        let pos = Position3::new(c[0], c[1], if three_d { c[2] } else { s.h_max() });
        let row = rx.row_mut(n_sbs + u);
        for (k, user) in users.iter().enumerate() {
            row[k] = p_uav * table.gain(pos.horizontal_distance(user), pos.h);
        }
    }
    let assoc = associate(&rx);
    let problem = LoadProblem::new(
        &rx,
        &assoc,
        channels,
        noise_mw(s.noise_psd_dbm_hz, s.access_bandwidth_hz),
        s.access_bandwidth_hz,
        s.requested_rate_bps,
    );
    let sol = problem.solve_until(s.algo_params.pso_eval_fp_iters, PLANNER_FP_TOL);
    let rates = problem.served_rates(&sol, n_users);
    let f = jain_fairness(&rates);
    sol.rho.iter().map(|&r| reward(f, r, s.reward_weights)).sum()
}

impl Simulation {
    pub fn new(scenario: &Scenario, scheme: SchemeId, seed: u64) -> Result<Self> {
        let mut scenario = scenario.clone();
        scenario.scheme = scheme;
        scenario.seed = seed;
        let scenario = scenario.validate()?;
        let mut placement = stream_rng(seed, STREAM_PLACEMENT);
        let world = init_world(&scenario, &mut placement)?;
        let mut streams = Streams {
            mobility: stream_rng(seed, STREAM_MOBILITY),
            channel: stream_rng(seed, STREAM_CHANNEL),
            radio: stream_rng(seed, STREAM_RADIO),
            policy: stream_rng(seed, STREAM_POLICY),
            pso: stream_rng(seed, STREAM_PSO),
        };
        let policies = (0..world.n_bs())
            .map(|b| build_policy(&scenario, scheme, world.is_uav(b), &mut streams.policy))
            .collect();
        let swarm = (scheme.algorithm() == Algorithm::Pso && !world.uavs.is_empty()).then(|| {
            let (mut lower, mut upper) = (Vec::new(), Vec::new());
            for _ in &world.uavs {
                lower.extend([0.0, 0.0]);
                upper.extend([scenario.area_side_m, scenario.area_side_m]);
                if scheme.is_3d() {
                    lower.push(scenario.h_min());
                    upper.push(scenario.h_max());
                }
            }
            let swarm = PsoSwarm::new(scenario.algo_params.pso_population, lower, upper, &mut streams.pso);
            let table = AerialGainTable::new(
                &scenario.propagation,
                scenario.area_side_m * std::f64::consts::SQRT_2,
                scenario.uav_alt_range_m,
                scenario.user_height_m,
            );
            (swarm, table)
        });
        let n_bs = world.n_bs();
        Ok(Simulation {
            noise_mw: noise_mw(scenario.noise_psd_dbm_hz, scenario.access_bandwidth_hz),
            scenario,
            scheme,
            seed,
            world,
            policies,
            swarm,
            streams,
            rewards: vec![0.0; n_bs],
            actions: vec![None; n_bs],
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn swarm(&self) -> Option<&PsoSwarm> {
        self.swarm.as_ref().map(|(swarm, _)| swarm)
    }

    /// Per-BS rewards of the last completed step.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Per-BS action indices chosen in the last completed step.
    pub fn actions(&self) -> &[Option<usize>] {
        &self.actions
    }

    /// Number of completed steps.
    pub fn steps_done(&self) -> usize {
        self.world.step
    }

    fn choose_actions(&mut self) -> Vec<Pending> {
        let rng = &mut self.streams.policy;
        let s = &self.scenario;
        self.policies
            .iter_mut()
            .enumerate()
            .map(|(b, policy)| {
                let pos = self.world.bs_position(b);
                match policy {
                    Policy::Fixed => Pending::None,
                    Policy::Satisfaction { agent, .. } => Pending::Plain(agent.select(rng)),
                    Policy::Ucb { bandit, .. } => Pending::Plain(bandit.select()),
                    Policy::QLearning { learner, grid, .. } => {
                        let state = grid.index(&pos);
                        Pending::Q {
                            state,
                            action: learner.select(state, rng),
                        }
                    }
                    Policy::Dqn { agent, .. } => {
                        let state = dqn_state(&pos, s);
                        let action = agent.act(&state, rng);
                        Pending::Dqn { state, action }
                    }
                }
            })
            .collect()
    }

    fn apply_actions(&mut self, pending: &[Pending]) {
        let n_sbs = self.world.sbs.len();
        for (b, p) in pending.iter().enumerate() {
            let index = match p {
                Pending::None => None,
                Pending::Plain(a) | Pending::Q { action: a, .. } | Pending::Dqn { action: a, .. } => Some(*a),
            };
            self.actions[b] = index;
            let space = match &self.policies[b] {
                Policy::Fixed => continue,
                Policy::Satisfaction { space, .. }
                | Policy::Ucb { space, .. }
                | Policy::QLearning { space, .. }
                | Policy::Dqn { space, .. } => space,
            };
            let action = space.decode(index.expect("learning policy without action"));
            if let Some(ch) = action.channel {
                self.world.channels[b] = ch;
            }
            if let (Some(dir), true) = (action.movement, b >= n_sbs) {
                let u = b - n_sbs;
                self.world.uavs[u] = apply_uav_action(self.world.uavs[u], dir, &self.scenario);
            }
        }
    }

    fn plan_pso(&mut self) {
        let Some((swarm, table)) = self.swarm.as_mut() else {
            return;
        };
        let s = &self.scenario;
        let three_d = self.scheme.is_3d();
        let world = &self.world;
        let users: Vec<Position3> = world.users.iter().map(|u| u.position).collect();
        let mut sbs_rx = Vec::with_capacity(world.sbs.len() * users.len());
        for b in 0..world.sbs.len() {
            let p = tx_power_mw(world, s, b);
            let kind = link_kind(world, b);
            sbs_rx.extend(
                users
                    .iter()
                    .map(|u| p * expected_gain(&world.sbs[b], u, kind, &s.propagation)),
            );
        }
        let current: Vec<f64> = world
            .uavs
            .iter()
            .flat_map(|p| if three_d { vec![p.x, p.y, p.h] } else { vec![p.x, p.y] })
            .collect();
        let channels = world.channels.clone();
        let eval = |x: &[f64]| fleet_utility(s, table, &users, &sbs_rx, &channels, x, three_d);
        let params = PsoParams {
            inertia: s.algo_params.pso_inertia,
            cp: s.algo_params.pso_cp,
            cg: s.algo_params.pso_cg,
        };
        swarm.reset_bests();
        swarm.seed_particle(0, &current);
        for _ in 0..s.algo_params.pso_inner_iters {
            swarm.iterate(eval, &params, &mut self.streams.pso);
        }
        let dims = if three_d { 3 } else { 2 };
        for (u, pos) in self.world.uavs.iter_mut().enumerate() {
            let c = &swarm.global_best[u * dims..(u + 1) * dims];
            let target = Position3::new(c[0], c[1], if three_d { c[2] } else { s.h_max() });
            *pos = move_uav_toward(*pos, target, s);
        }
    }

    fn learn(&mut self, pending: Vec<Pending>) -> Result<()> {
        let s = &self.scenario;
        let rng = &mut self.streams.policy;
        for (b, (policy, p)) in self.policies.iter_mut().zip(pending).enumerate() {
            let r = self.rewards[b];
            let pos = self.world.bs_position(b);
            match (policy, p) {
                (Policy::Satisfaction { agent, .. }, Pending::Plain(_)) => agent.observe(r)?,
                (Policy::Ucb { bandit, .. }, Pending::Plain(a)) => bandit.update(a, r),
                (Policy::QLearning { learner, grid, .. }, Pending::Q { state, action }) => {
                    learner.update(state, action, r, grid.index(&pos));
                }
                (Policy::Dqn { agent, .. }, Pending::Dqn { state, action }) => {
                    agent.remember(Transition {
                        state,
                        action,
                        reward: r,
                        next_state: dqn_state(&pos, s),
                    });
                    agent.train_step(rng);
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Advances the run by one time step.
    pub fn step(&mut self) -> Result<MetricsRecord> {
        let started = Instant::now();
        let t = self.world.step;
        let s = &self.scenario;
        self.world.time_s = t as f64 * s.step_seconds;

        step_users(&mut self.world, s, &mut self.streams.mobility);

        if !self.scheme.learns_channels() {
            for ch in self.world.channels.iter_mut() {
                *ch = self.streams.channel.random_range(0..s.n_channels);
            }
        }
        let pending = self.choose_actions();
        self.apply_actions(&pending);
        self.plan_pso();

        let s = &self.scenario;
        let rx = draw_rx_power(&self.world, s, &mut self.streams.radio)?;
        let assoc = associate(&rx);
        let problem = LoadProblem::new(
            &rx,
            &assoc,
            &self.world.channels,
            self.noise_mw,
            s.access_bandwidth_hz,
            s.requested_rate_bps,
        );
        let solution = problem.solve(s.fixed_point_iters);
        let n_users = self.world.users.len();
        let mut rates = problem.served_rates(&solution, n_users);
        if s.backhaul.enabled {
            let sats = self.world.satellites(s.area_side_m);
            let caps: Vec<f64> = (0..self.world.n_bs())
                .map(|b| backhaul_cap(&self.world.bs_position(b), &sats, s))
                .collect();
            apply_backhaul_caps(&mut rates, &assoc, &caps);
        }

        let fairness = jain_fairness(&rates);
        for (r, &rho) in self.rewards.iter_mut().zip(&solution.rho) {
            *r = reward(fairness, rho, s.reward_weights);
        }
        let check = |v: f64, quantity: &'static str| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(SimError::Numerics { step: t, quantity })
            }
        };
        for &r in &self.rewards {
            check(r, "reward")?;
        }
        for &rho in &solution.rho {
            check(rho, "load")?;
        }
        let n_bs = self.world.n_bs();
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let mean_load = check(mean(&solution.rho), "mean load")?;
        let mean_rate_bps = check(mean(&rates), "mean rate")?;
        let fairness = check(fairness, "fairness")?;
        let mean_reward = check(if n_bs == 0 { 0.0 } else { mean(&self.rewards) }, "mean reward")?;
        let outage_users = outage_count(&rates, s.requested_rate_bps);

        self.learn(pending)?;
        self.world.step += 1;

        Ok(MetricsRecord {
            step: t,
            outage_users,
            mean_load,
            mean_rate_bps,
            fairness,
            mean_reward,
            wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
            fp_residual: solution.residual,
            fp_iterations: solution.iterations,
        })
    }
}

/// Runs `scenario.n_steps` steps of `scheme` with the given seed.
pub fn run_once(scenario: &Scenario, scheme: SchemeId, seed: u64) -> Result<RunResult> {
    run_with_observer(scenario, scheme, seed, |_, _| {})
}

/// Like [`run_once`], calling `observer` after every step. Observers see the
/// simulation read-only and cannot alter its course.
pub fn run_with_observer<F>(scenario: &Scenario, scheme: SchemeId, seed: u64, mut observer: F) -> Result<RunResult>
where
    F: FnMut(&Simulation, &MetricsRecord),
{
    let mut sim = Simulation::new(scenario, scheme, seed)?;
    let mut records = Vec::with_capacity(sim.scenario.n_steps);
    for _ in 0..sim.scenario.n_steps {
        let rec = sim.step()?;
        observer(&sim, &rec);
        records.push(rec);
    }
    Ok(RunResult {
        scheme,
        seed,
        aggregates: RunAggregates::from_records(&records),
        runtime_ms: records.iter().map(|r| r.wall_clock_ms).sum(),
        records,
    })
}
