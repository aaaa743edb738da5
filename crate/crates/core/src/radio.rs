//! Link budget, load-coupled SINR and the cell-load fixed point.
//!
//! Interference from BS `j` at a user is weighted by `j`'s load, so the
//! per-BS load map is a standard interference function and the clamped
//! iteration from zero load is monotone.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::environment::{Position3, WorldState};
use crate::error::{Result, SimError};
use crate::scenario::{LinkModel, PathLossParams, Propagation, Scenario};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Terrestrial,
    Aerial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub gain_linear: f64,
    pub los: bool,
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Thermal noise power over `bandwidth_hz`, in mW.
pub fn noise_mw(psd_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_mw(psd_dbm_hz + 10.0 * bandwidth_hz.log10())
}

fn model(prop: &Propagation, kind: LinkKind) -> &LinkModel {
    match kind {
        LinkKind::Terrestrial => &prop.terrestrial,
        LinkKind::Aerial => &prop.aerial,
    }
}

/// Probability that the link is line-of-sight.
pub fn los_probability(tx: &Position3, rx: &Position3, kind: LinkKind, prop: &Propagation) -> f64 {
    match kind {
        LinkKind::Aerial => {
            let theta_deg = rx.elevation_to(tx).to_degrees();
            let (a, b) = (prop.aerial_los_a, prop.aerial_los_b);
            1.0 / (1.0 + a * (-b * (theta_deg - a)).exp())
        }
        LinkKind::Terrestrial => (-tx.distance(rx) / prop.terrestrial_los_scale_m).exp(),
    }
}

/// Deterministic log-distance path loss (no shadowing), in dB.
pub fn path_loss_db(distance_m: f64, params: &PathLossParams) -> f64 {
    params.reference_db + 10.0 * params.exponent * distance_m.log10()
}

/// Draws one link gain: LoS state, then log-distance path loss plus
/// log-normal shadowing when `prop.shadowing` is set.
pub fn link_gain<R: Rng + ?Sized>(
    tx: &Position3,
    rx: &Position3,
    kind: LinkKind,
    prop: &Propagation,
    rng: &mut R,
) -> Result<LinkGain> {
    let d = tx.distance(rx);
    if d <= 0.0 {
        return Err(SimError::DegenerateGeometry);
    }
    let los = rng.random::<f64>() < los_probability(tx, rx, kind, prop);
    let m = model(prop, kind);
    let params = if los { &m.los } else { &m.nlos };
    let mut pl = path_loss_db(d, params);
    if prop.shadowing {
        let z: f64 = StandardNormal.sample(rng);
        pl += z * params.shadowing_std_db;
    }
    Ok(LinkGain {
        gain_linear: 10f64.powf(-pl / 10.0),
        los,
    })
}

/// Mean-path-loss gain: LoS/NLoS losses averaged in dB by the LoS probability,
/// shadowing excluded. Used for planning where a random draw would be noise.
pub fn expected_gain(tx: &Position3, rx: &Position3, kind: LinkKind, prop: &Propagation) -> f64 {
    let d = tx.distance(rx).max(1.0);
    let p = los_probability(tx, rx, kind, prop);
    let m = model(prop, kind);
    let pl = p * path_loss_db(d, &m.los) + (1.0 - p) * path_loss_db(d, &m.nlos);
    10f64.powf(-pl / 10.0)
}

/// [`expected_gain`] of aerial links tabulated on a 1 m grid over
/// horizontal distance and UAV altitude, interpolated bilinearly.
#[derive(Debug, Clone, PartialEq)]
pub struct AerialGainTable {
    h_min: f64,
    n_d: usize,
    n_h: usize,
    values: Vec<f64>,
}

impl AerialGainTable {
    const STEP_M: f64 = 1.0;

    pub fn new(prop: &Propagation, max_horizontal_m: f64, alt_range: [f64; 2], user_height_m: f64) -> Self {
        let n_d = (max_horizontal_m / Self::STEP_M).ceil() as usize + 2;
        let n_h = ((alt_range[1] - alt_range[0]) / Self::STEP_M).ceil() as usize + 2;
        let user = Position3::new(0.0, 0.0, user_height_m);
        let mut values = Vec::with_capacity(n_d * n_h);
        for i in 0..n_h {
            let h = alt_range[0] + i as f64 * Self::STEP_M;
            for j in 0..n_d {
                let uav = Position3::new(j as f64 * Self::STEP_M, 0.0, h);
                values.push(expected_gain(&uav, &user, LinkKind::Aerial, prop));
            }
        }
        AerialGainTable {
            h_min: alt_range[0],
            n_d,
            n_h,
            values,
        }
    }

    pub fn gain(&self, horizontal_m: f64, altitude_m: f64) -> f64 {
        let fd = (horizontal_m / Self::STEP_M).clamp(0.0, (self.n_d - 2) as f64);
        let fh = ((altitude_m - self.h_min) / Self::STEP_M).clamp(0.0, (self.n_h - 2) as f64);
        let (j, i) = (fd as usize, fh as usize);
        let (td, th) = (fd - j as f64, fh - i as f64);
        let at = |i: usize, j: usize| self.values[i * self.n_d + j];
        let lo = at(i, j) * (1.0 - td) + at(i, j + 1) * td;
        let hi = at(i + 1, j) * (1.0 - td) + at(i + 1, j + 1) * td;
        lo * (1.0 - th) + hi * th
    }
}

/// Received power (mW) from every BS at every user, row-major by BS.
#[derive(Debug, Clone, PartialEq)]
pub struct RxPower {
    pub n_bs: usize,
    pub n_users: usize,
    pub mw: Vec<f64>,
}

impl RxPower {
    pub fn zeros(n_bs: usize, n_users: usize) -> Self {
        RxPower {
            n_bs,
            n_users,
            mw: vec![0.0; n_bs * n_users],
        }
    }

    #[inline]
    pub fn get(&self, b: usize, k: usize) -> f64 {
        self.mw[b * self.n_users + k]
    }

    #[inline]
    pub fn set(&mut self, b: usize, k: usize, v: f64) {
        self.mw[b * self.n_users + k] = v;
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.mw[b * self.n_users..(b + 1) * self.n_users]
    }

    pub fn row_mut(&mut self, b: usize) -> &mut [f64] {
        &mut self.mw[b * self.n_users..(b + 1) * self.n_users]
    }
}

pub fn tx_power_mw(world: &WorldState, s: &Scenario, b: usize) -> f64 {
    if world.is_uav(b) {
        dbm_to_mw(s.uav_tx_power_dbm)
    } else {
        dbm_to_mw(s.sbs_tx_power_dbm)
    }
}

pub fn link_kind(world: &WorldState, b: usize) -> LinkKind {
    if world.is_uav(b) {
        LinkKind::Aerial
    } else {
        LinkKind::Terrestrial
    }
}

/// Draws fresh gains for every BS-user pair and scales by transmit power.
pub fn draw_rx_power<R: Rng + ?Sized>(world: &WorldState, s: &Scenario, rng: &mut R) -> Result<RxPower> {
    let mut rx = RxPower::zeros(world.n_bs(), world.users.len());
    for b in 0..world.n_bs() {
        let tx = world.bs_position(b);
        let p = tx_power_mw(world, s, b);
        let kind = link_kind(world, b);
        for (k, u) in world.users.iter().enumerate() {
            let g = link_gain(&tx, &u.position, kind, &s.propagation, rng)?;
            rx.set(b, k, p * g.gain_linear);
        }
    }
    Ok(rx)
}

/// Highest-received-power association; ties go to the lowest BS index.
/// Users see no server only when there are no BSs.
pub fn associate(rx: &RxPower) -> Vec<Option<usize>> {
    (0..rx.n_users)
        .map(|k| {
            let mut best: Option<(usize, f64)> = None;
            for b in 0..rx.n_bs {
                let v = rx.get(b, k);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((b, v));
                }
            }
            best.map(|(b, _)| b)
        })
        .collect()
}

/// Load-coupled SINR of every BS-user pair for the given channel plan and loads.
pub fn sinr_matrix(rx: &RxPower, channels: &[usize], loads: &[f64], noise_mw: f64) -> Vec<f64> {
    let mut out = vec![0.0; rx.n_bs * rx.n_users];
    for b in 0..rx.n_bs {
        for k in 0..rx.n_users {
            let interference: f64 = (0..rx.n_bs)
                .filter(|&j| j != b && channels[j] == channels[b])
                .map(|j| loads[j] * rx.get(j, k))
                .sum();
            out[b * rx.n_users + k] = rx.get(b, k) / (interference + noise_mw);
        }
    }
    out
}

/// Shannon rate in bps.
#[inline]
pub fn shannon_bps(bandwidth_hz: f64, sinr: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr).log2()
}

/// Compiled form of the load map for one step: each served user with its
/// serving signal and the co-channel interferers it sees.
#[derive(Debug, Clone)]
pub struct LoadProblem {
    n_bs: usize,
    demand_bps: f64,
    bandwidth_hz: f64,
    noise_mw: f64,
    users: Vec<usize>,
    serving: Vec<usize>,
    signal: Vec<f64>,
    offsets: Vec<usize>,
    interferer_bs: Vec<usize>,
    interferer_mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadSolution {
    /// Clamped loads in `[0, 1]`.
    pub rho: Vec<f64>,
    /// Load map evaluated at `rho`, before clamping; above 1 means overload.
    pub rho_unclamped: Vec<f64>,
    /// Max absolute change on the last executed iteration.
    pub residual: f64,
    /// Iterations actually computed; stops early only once the iterate is
    /// bit-identical to its predecessor, which leaves the result unchanged.
    pub iterations: usize,
    /// Rate of each served user at `rho`, aligned with the problem's user order.
    capacity_bps: Vec<f64>,
}

impl LoadProblem {
    pub fn new(
        rx: &RxPower,
        association: &[Option<usize>],
        channels: &[usize],
        noise_mw: f64,
        bandwidth_hz: f64,
        demand_bps: f64,
    ) -> Self {
        let mut p = LoadProblem {
            n_bs: rx.n_bs,
            demand_bps,
            bandwidth_hz,
            noise_mw,
            users: Vec::with_capacity(rx.n_users),
            serving: Vec::with_capacity(rx.n_users),
            signal: Vec::with_capacity(rx.n_users),
            offsets: vec![0],
            interferer_bs: Vec::new(),
            interferer_mw: Vec::new(),
        };
        for (k, server) in association.iter().enumerate() {
            let Some(b) = *server else { continue };
            p.users.push(k);
            p.serving.push(b);
            p.signal.push(rx.get(b, k));
            for j in 0..rx.n_bs {
                if j != b && channels[j] == channels[b] {
                    p.interferer_bs.push(j);
                    p.interferer_mw.push(rx.get(j, k));
                }
            }
            p.offsets.push(p.interferer_bs.len());
        }
        p
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    #[inline]
    fn capacity(&self, i: usize, rho: &[f64]) -> f64 {
        let mut interference = 0.0;
        for idx in self.offsets[i]..self.offsets[i + 1] {
            interference += rho[self.interferer_bs[idx]] * self.interferer_mw[idx];
        }
        shannon_bps(self.bandwidth_hz, self.signal[i] / (interference + self.noise_mw))
    }

    /// Unclamped load map `f(rho)`.
    pub fn evaluate(&self, rho: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.serving.len() {
            out[self.serving[i]] += self.demand_bps / self.capacity(i, rho);
        }
    }

    /// Runs `iters` clamped iterations `rho <- min(1, f(rho))` from zero load.
    pub fn solve(&self, iters: usize) -> LoadSolution {
        self.solve_until(iters, 0.0)
    }

    /// As [`solve`](Self::solve), but stops as soon as an iteration changes
    /// no load by more than `tol`.
    pub fn solve_until(&self, iters: usize, tol: f64) -> LoadSolution {
        let mut rho = vec![0.0; self.n_bs];
        let mut next = vec![0.0; self.n_bs];
        let mut residual = 0.0;
        let mut iterations = 0;
        for _ in 0..iters {
            self.evaluate(&rho, &mut next);
            iterations += 1;
            residual = 0.0;
            for (r, n) in rho.iter().zip(next.iter_mut()) {
                *n = n.clamp(0.0, 1.0);
                residual = f64::max(residual, (*n - *r).abs());
            }
            std::mem::swap(&mut rho, &mut next);
            if residual <= tol {
                break;
            }
        }
        let mut rho_unclamped = vec![0.0; self.n_bs];
        let mut capacity_bps = Vec::with_capacity(self.serving.len());
        for i in 0..self.serving.len() {
            let c = self.capacity(i, &rho);
            rho_unclamped[self.serving[i]] += self.demand_bps / c;
            capacity_bps.push(c);
        }
        LoadSolution {
            rho,
            rho_unclamped,
            residual,
            iterations,
            capacity_bps,
        }
    }

    /// Long-term served rate of every user: the requested rate scaled down by
    /// the serving BS's overload factor, and never above the link capacity.
    pub fn served_rates(&self, solution: &LoadSolution, n_users: usize) -> Vec<f64> {
        let mut rates = vec![0.0; n_users];
        for (i, &k) in self.users.iter().enumerate() {
            let overload = solution.rho_unclamped[self.serving[i]];
            let share = if overload > 1.0 { 1.0 / overload } else { 1.0 };
            rates[k] = (self.demand_bps * share).min(solution.capacity_bps[i]);
        }
        rates
    }
}

/// Number of users whose served rate is below the requested rate.
pub fn outage_count(rates: &[f64], requested_bps: f64) -> usize {
    rates.iter().filter(|&&r| r < requested_bps).count()
}

/// Jain's fairness index. An empty or all-zero list is perfectly fair (1).
pub fn jain_fairness(rates: &[f64]) -> f64 {
    let sum: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|r| r * r).sum();
    if rates.is_empty() || sum_sq == 0.0 {
        return 1.0;
    }
    (sum * sum / (rates.len() as f64 * sum_sq)).clamp(0.0, 1.0)
}

/// Per-BS reward: weighted fairness plus weighted spare capacity.
pub fn reward(fairness: f64, rho_b: f64, weights: [f64; 2]) -> f64 {
    weights[0] * fairness + weights[1] * (1.0 - rho_b)
}

/// Free-space path loss in dB.
pub fn free_space_path_loss_db(distance_m: f64, carrier_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * carrier_hz / SPEED_OF_LIGHT).log10()
}

/// Shannon capacity (bps) of the best visible satellite link from `bs`.
/// Infinite when backhaul modeling is disabled, zero with nothing visible.
pub fn backhaul_cap(bs: &Position3, satellites: &[Position3], s: &Scenario) -> f64 {
    let bh = &s.backhaul;
    if !bh.enabled {
        return f64::INFINITY;
    }
    let min_elev = bh.min_elevation_deg.to_radians();
    let best = satellites
        .iter()
        .filter(|sat| bs.elevation_to(sat) >= min_elev)
        .map(|sat| bs.distance(sat))
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return 0.0;
    }
    let rx_dbm = bh.tx_power_dbm + bh.antenna_gain_db - free_space_path_loss_db(best, s.carrier_hz);
    let snr = dbm_to_mw(rx_dbm) / noise_mw(s.noise_psd_dbm_hz, s.backhaul_bandwidth_hz);
    shannon_bps(s.backhaul_bandwidth_hz, snr)
}

/// Scales the rates of each BS's users so their sum respects its backhaul cap.
pub fn apply_backhaul_caps(rates: &mut [f64], association: &[Option<usize>], caps: &[f64]) {
    let mut totals = vec![0.0; caps.len()];
    for (k, server) in association.iter().enumerate() {
        if let Some(b) = server {
            totals[*b] += rates[k];
        }
    }
    for (k, server) in association.iter().enumerate() {
        match server {
            Some(b) if totals[*b] > caps[*b] => {
                rates[k] *= if caps[*b] > 0.0 { caps[*b] / totals[*b] } else { 0.0 };
            }
            Some(_) => {}
            None => rates[k] = 0.0,
        }
    }
}
