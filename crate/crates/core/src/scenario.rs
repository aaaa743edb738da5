//! Experiment configuration.
//!
//! A [`Scenario`] is the immutable description of one experiment: geometry,
//! radio parameters, the decision scheme and its hyperparameters, and the
//! master seed. Every field has a default, so an empty JSON object is a
//! valid config and yields the reference parameter set returned by
//! [`Scenario::default`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, SimError};

/// The nine decision schemes compared by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeId {
    Sat3dCa,
    Sat2dCa,
    Sat2d,
    Mab3dCa,
    Mab2d,
    Pso3d,
    Pso2d,
    QLearning2d,
    DqnCa3d,
}

/// Which decision algorithm drives a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Satisfaction,
    Ucb,
    Pso,
    QLearning,
    Dqn,
}

impl SchemeId {
    pub const ALL: [SchemeId; 9] = [
        SchemeId::Sat3dCa,
        SchemeId::Sat2dCa,
        SchemeId::Sat2d,
        SchemeId::Mab3dCa,
        SchemeId::Mab2d,
        SchemeId::Pso3d,
        SchemeId::Pso2d,
        SchemeId::QLearning2d,
        SchemeId::DqnCa3d,
    ];

    /// 3D schemes let UAVs change altitude; 2D schemes pin it to `h_max`.
    pub fn is_3d(self) -> bool {
        matches!(
            self,
            SchemeId::Sat3dCa | SchemeId::Mab3dCa | SchemeId::Pso3d | SchemeId::DqnCa3d
        )
    }

    /// Whether channels are learned ("CA") rather than drawn uniformly every step.
    pub fn learns_channels(self) -> bool {
        matches!(
            self,
            SchemeId::Sat3dCa | SchemeId::Sat2dCa | SchemeId::Mab3dCa | SchemeId::DqnCa3d
        )
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            SchemeId::Sat3dCa | SchemeId::Sat2dCa | SchemeId::Sat2d => Algorithm::Satisfaction,
            SchemeId::Mab3dCa | SchemeId::Mab2d => Algorithm::Ucb,
            SchemeId::Pso3d | SchemeId::Pso2d => Algorithm::Pso,
            SchemeId::QLearning2d => Algorithm::QLearning,
            SchemeId::DqnCa3d => Algorithm::Dqn,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Sat3dCa => "Sat3dCa",
            SchemeId::Sat2dCa => "Sat2dCa",
            SchemeId::Sat2d => "Sat2d",
            SchemeId::Mab3dCa => "Mab3dCa",
            SchemeId::Mab2d => "Mab2d",
            SchemeId::Pso3d => "Pso3d",
            SchemeId::Pso2d => "Pso2d",
            SchemeId::QLearning2d => "QLearning2d",
            SchemeId::DqnCa3d => "DqnCa3d",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let wanted: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().to_ascii_lowercase() == wanted)
            .ok_or_else(|| SimError::UnknownScheme(s.to_string()))
    }
}

/// A step-dependent scalar such as a learning rate or exploration probability.
///
/// `Decay` evaluates to `initial / (offset + rate * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    Decay {
        initial: f64,
        rate: f64,
        #[serde(default = "one")]
        offset: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Schedule {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Schedule::Constant(v) => v,
            Schedule::Decay { initial, rate, offset } => {
                let denom = offset + rate * t as f64;
                if denom <= 0.0 {
                    initial
                } else {
                    initial / denom
                }
            }
        }
    }

    fn check_unit(&self, field: &'static str) -> Result<()> {
        match *self {
            Schedule::Constant(v) => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(SimError::range(field, format!("{v} is outside [0, 1]")));
                }
            }
            Schedule::Decay { initial, rate, offset } => {
                if !(initial >= 0.0 && rate >= 0.0 && offset >= 0.0) {
                    return Err(SimError::range(field, "decay parameters must be non-negative"));
                }
                let first = self.at(1);
                if !(0.0..=1.0).contains(&first) {
                    return Err(SimError::range(
                        field,
                        format!("value at t=1 is {first}, outside [0, 1]"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Hyperparameters of the five decision algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoParams {
    pub q_alpha: Schedule,
    pub q_gamma: f64,
    pub epsilon: Schedule,
    /// Q-learning grid resolution in meters.
    pub grid_cell_m: f64,
    pub satisfaction_delta: f64,
    pub satisfaction_tau: u64,
    /// Initial satisfaction threshold; `None` starts at the maximum reward.
    pub satisfaction_kappa0: Option<f64>,
    pub pso_population: usize,
    pub pso_inertia: f64,
    pub pso_cp: f64,
    pub pso_cg: f64,
    /// Swarm iterations per environment step.
    pub pso_inner_iters: usize,
    /// Load fixed-point iterations used when scoring a candidate placement.
    pub pso_eval_fp_iters: usize,
    pub dqn_hidden: usize,
    pub dqn_batch: usize,
    pub dqn_replay: usize,
    pub dqn_target_sync: usize,
    pub dqn_lr: f64,
    pub gamma_dqn: f64,
}

impl Default for AlgoParams {
    fn default() -> Self {
        AlgoParams {
            q_alpha: Schedule::Decay {
                initial: 1.0,
                rate: 0.001,
                offset: 1.0,
            },
            q_gamma: 0.9,
            epsilon: Schedule::Constant(0.1),
            grid_cell_m: 10.0,
            satisfaction_delta: 0.2,
            satisfaction_tau: 200,
            satisfaction_kappa0: None,
            pso_population: 20,
            pso_inertia: 0.9,
            pso_cp: 0.1,
            pso_cg: 0.1,
            pso_inner_iters: 5,
            pso_eval_fp_iters: 50,
            dqn_hidden: 200,
            dqn_batch: 64,
            dqn_replay: 600,
            dqn_target_sync: 100,
            dqn_lr: 1e-3,
            gamma_dqn: 0.9,
        }
    }
}

/// Log-distance path loss: `reference_db + 10 * exponent * log10(d) + shadowing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossParams {
    pub reference_db: f64,
    pub exponent: f64,
    pub shadowing_std_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    pub los: PathLossParams,
    pub nlos: PathLossParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Propagation {
    pub terrestrial: LinkModel,
    pub aerial: LinkModel,
    pub shadowing: bool,
    /// Air-to-ground LoS sigmoid `1 / (1 + a exp(-b (theta - a)))`, theta in degrees.
    pub aerial_los_a: f64,
    pub aerial_los_b: f64,
    /// Terrestrial LoS probability `exp(-d / scale)`.
    pub terrestrial_los_scale_m: f64,
}

impl Default for Propagation {
    fn default() -> Self {
        Propagation {
            terrestrial: LinkModel {
                los: PathLossParams {
                    reference_db: 61.4,
                    exponent: 2.0,
                    shadowing_std_db: 5.8,
                },
                nlos: PathLossParams {
                    reference_db: 72.0,
                    exponent: 2.92,
                    shadowing_std_db: 8.7,
                },
            },
            aerial: LinkModel {
                los: PathLossParams {
                    reference_db: 61.4,
                    exponent: 2.0,
                    shadowing_std_db: 5.8,
                },
                nlos: PathLossParams {
                    reference_db: 61.4,
                    exponent: 3.0,
                    shadowing_std_db: 8.7,
                },
            },
            shadowing: true,
            aerial_los_a: 9.61,
            aerial_los_b: 0.16,
            terrestrial_los_scale_m: 150.0,
        }
    }
}

/// Satellite backhaul link budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackhaulParams {
    pub enabled: bool,
    pub tx_power_dbm: f64,
    /// Combined transmit and receive antenna gain.
    pub antenna_gain_db: f64,
    pub min_elevation_deg: f64,
    pub earth_radius_m: f64,
}

impl Default for BackhaulParams {
    fn default() -> Self {
        BackhaulParams {
            enabled: true,
            tx_power_dbm: 40.0,
            antenna_gain_db: 65.0,
            min_elevation_deg: 10.0,
            earth_radius_m: 6_371_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub area_side_m: f64,
    pub n_users: usize,
    pub n_sbs: usize,
    pub n_uavs: usize,
    pub n_satellites: usize,
    pub sat_altitude_m: f64,
    pub n_channels: usize,
    pub access_bandwidth_hz: f64,
    pub backhaul_bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub sbs_tx_power_dbm: f64,
    pub uav_tx_power_dbm: f64,
    pub requested_rate_bps: f64,
    pub n_steps: usize,
    pub step_seconds: f64,
    pub n_monte_carlo: usize,
    pub fixed_point_iters: usize,
    pub user_speed_range_mps: [f64; 2],
    /// Steps between fresh speed/heading draws in the user random walk.
    pub user_dwell_steps: usize,
    pub uav_speed_mps: f64,
    pub uav_alt_range_m: [f64; 2],
    pub user_height_m: f64,
    pub sbs_height_m: f64,
    pub min_sbs_separation_m: f64,
    pub min_sbs_user_separation_m: f64,
    /// Fairness and load weights of the per-BS reward.
    pub reward_weights: [f64; 2],
    pub propagation: Propagation,
    pub backhaul: BackhaulParams,
    pub scheme: SchemeId,
    pub algo_params: AlgoParams,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            area_side_m: 500.0,
            n_users: 150,
            n_sbs: 4,
            n_uavs: 4,
            n_satellites: 22,
            sat_altitude_m: 550_000.0,
            n_channels: 4,
            access_bandwidth_hz: 56e6,
            backhaul_bandwidth_hz: 100e6,
            carrier_hz: 28e9,
            noise_psd_dbm_hz: -174.0,
            sbs_tx_power_dbm: 24.0,
            uav_tx_power_dbm: 24.0,
            requested_rate_bps: 1.8e6,
            n_steps: 5740,
            step_seconds: 1.0,
            n_monte_carlo: 100,
            fixed_point_iters: 500,
            user_speed_range_mps: [0.0, 1.3],
            user_dwell_steps: 1,
            uav_speed_mps: 10.0,
            uav_alt_range_m: [22.5, 121.9],
            user_height_m: 1.5,
            sbs_height_m: 15.0,
            min_sbs_separation_m: 40.0,
            min_sbs_user_separation_m: 10.0,
            reward_weights: [0.5, 0.5],
            propagation: Propagation::default(),
            backhaul: BackhaulParams::default(),
            scheme: SchemeId::Sat3dCa,
            algo_params: AlgoParams::default(),
            seed: 1,
        }
    }
}

/// The reference parameter set.
pub fn reference_scenario() -> Scenario {
    Scenario::default()
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SimError::range(field, format!("{v} must be finite and > 0")))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(SimError::range(field, format!("{v} must be finite and >= 0")))
    }
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(SimError::range(field, format!("{v} must be finite")))
    }
}

fn at_least_one(field: &'static str, v: usize) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(SimError::range(field, "must be at least 1"))
    }
}

impl Scenario {
    /// Parses a JSON config. Missing fields take their defaults, unknown keys are rejected.
    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let value: Value = serde_json::from_str(text)?;
        Scenario::from_json_value(value)
    }

    pub fn from_json_value(value: Value) -> Result<Scenario> {
        let raw: Scenario = serde_json::from_value(value)?;
        raw.validate()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Maximum per-BS reward, reached at fairness 1 and zero load.
    pub fn reward_max(&self) -> f64 {
        self.reward_weights[0] + self.reward_weights[1]
    }

    pub fn h_min(&self) -> f64 {
        self.uav_alt_range_m[0]
    }

    pub fn h_max(&self) -> f64 {
        self.uav_alt_range_m[1]
    }

    pub fn n_bs(&self) -> usize {
        self.n_sbs + self.n_uavs
    }

    /// Per-step UAV displacement in meters.
    pub fn uav_step_m(&self) -> f64 {
        self.uav_speed_mps * self.step_seconds
    }

    /// Checks every invariant and returns the scenario unchanged on success.
    pub fn validate(self) -> Result<Scenario> {
        positive("area_side_m", self.area_side_m)?;
        at_least_one("n_channels", self.n_channels)?;
        positive("sat_altitude_m", self.sat_altitude_m)?;
        positive("access_bandwidth_hz", self.access_bandwidth_hz)?;
        positive("backhaul_bandwidth_hz", self.backhaul_bandwidth_hz)?;
        positive("carrier_hz", self.carrier_hz)?;
        finite("noise_psd_dbm_hz", self.noise_psd_dbm_hz)?;
        finite("sbs_tx_power_dbm", self.sbs_tx_power_dbm)?;
        finite("uav_tx_power_dbm", self.uav_tx_power_dbm)?;
        positive("requested_rate_bps", self.requested_rate_bps)?;
        at_least_one("n_steps", self.n_steps)?;
        positive("step_seconds", self.step_seconds)?;
        at_least_one("n_monte_carlo", self.n_monte_carlo)?;
        at_least_one("fixed_point_iters", self.fixed_point_iters)?;
        at_least_one("user_dwell_steps", self.user_dwell_steps)?;
        non_negative("uav_speed_mps", self.uav_speed_mps)?;
        non_negative("user_height_m", self.user_height_m)?;
        non_negative("sbs_height_m", self.sbs_height_m)?;
        non_negative("min_sbs_separation_m", self.min_sbs_separation_m)?;
        non_negative("min_sbs_user_separation_m", self.min_sbs_user_separation_m)?;

        let [v_lo, v_hi] = self.user_speed_range_mps;
        non_negative("user_speed_range_mps", v_lo)?;
        finite("user_speed_range_mps", v_hi)?;
        if v_lo > v_hi {
            return Err(SimError::range(
                "user_speed_range_mps",
                format!("lower bound {v_lo} exceeds upper bound {v_hi}"),
            ));
        }

        let [h_lo, h_hi] = self.uav_alt_range_m;
        non_negative("uav_alt_range_m", h_lo)?;
        finite("uav_alt_range_m", h_hi)?;
        if h_lo >= h_hi {
            return Err(SimError::range(
                "uav_alt_range_m",
                format!("h_min {h_lo} must be below h_max {h_hi}"),
            ));
        }

        let [w_fair, w_load] = self.reward_weights;
        non_negative("reward_weights", w_fair)?;
        non_negative("reward_weights", w_load)?;
        if w_fair + w_load <= 0.0 {
            return Err(SimError::range(
                "reward_weights",
                "at least one weight must be positive",
            ));
        }

        let p = &self.propagation;
        for (field, model) in [
            ("propagation.terrestrial", &p.terrestrial),
            ("propagation.aerial", &p.aerial),
        ] {
            for pl in [model.los, model.nlos] {
                finite(field, pl.reference_db)?;
                positive(field, pl.exponent)?;
                non_negative(field, pl.shadowing_std_db)?;
            }
        }
        positive("propagation.aerial_los_a", p.aerial_los_a)?;
        positive("propagation.aerial_los_b", p.aerial_los_b)?;
        positive("propagation.terrestrial_los_scale_m", p.terrestrial_los_scale_m)?;

        let bh = &self.backhaul;
        finite("backhaul.tx_power_dbm", bh.tx_power_dbm)?;
        finite("backhaul.antenna_gain_db", bh.antenna_gain_db)?;
        if !(-90.0..=90.0).contains(&bh.min_elevation_deg) {
            return Err(SimError::range("backhaul.min_elevation_deg", "must lie in [-90, 90]"));
        }
        positive("backhaul.earth_radius_m", bh.earth_radius_m)?;

        self.validate_algo()?;
        Ok(self)
    }

    fn validate_algo(&self) -> Result<()> {
        let a = &self.algo_params;
        a.q_alpha.check_unit("algo_params.q_alpha")?;
        a.epsilon.check_unit("algo_params.epsilon")?;
        if !(0.0..1.0).contains(&a.q_gamma) {
            return Err(SimError::range("algo_params.q_gamma", "must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&a.gamma_dqn) {
            return Err(SimError::range("algo_params.gamma_dqn", "must lie in [0, 1]"));
        }
        positive("algo_params.grid_cell_m", a.grid_cell_m)?;
        if !(a.satisfaction_delta > 0.0 && a.satisfaction_delta < 1.0) {
            return Err(SimError::range("algo_params.satisfaction_delta", "must lie in (0, 1)"));
        }
        at_least_one("algo_params.satisfaction_tau", a.satisfaction_tau as usize)?;
        if let Some(k) = a.satisfaction_kappa0 {
            non_negative("algo_params.satisfaction_kappa0", k)?;
        }
        at_least_one("algo_params.pso_population", a.pso_population)?;
        if !(a.pso_inertia > 0.0 && a.pso_inertia <= 1.0) {
            return Err(SimError::range("algo_params.pso_inertia", "must lie in (0, 1]"));
        }
        non_negative("algo_params.pso_cp", a.pso_cp)?;
        non_negative("algo_params.pso_cg", a.pso_cg)?;
        at_least_one("algo_params.pso_inner_iters", a.pso_inner_iters)?;
        at_least_one("algo_params.pso_eval_fp_iters", a.pso_eval_fp_iters)?;
        at_least_one("algo_params.dqn_hidden", a.dqn_hidden)?;
        at_least_one("algo_params.dqn_batch", a.dqn_batch)?;
        at_least_one("algo_params.dqn_replay", a.dqn_replay)?;
        at_least_one("algo_params.dqn_target_sync", a.dqn_target_sync)?;
        positive("algo_params.dqn_lr", a.dqn_lr)?;

        if self.scheme == SchemeId::DqnCa3d && a.dqn_batch > a.dqn_replay {
            return Err(SimError::Scheme(format!(
                "DqnCa3d needs dqn_batch ({}) <= dqn_replay ({}) or it never trains",
                a.dqn_batch, a.dqn_replay
            )));
        }
        Ok(())
    }
}

/// Sets `key` (dot-separated for nested fields) to `raw` inside a JSON config.
///
/// `raw` is parsed as JSON when possible (`10`, `true`, `[0, 2]`), otherwise
/// it is stored as a string (`scheme=Pso3d`).
pub fn apply_override(config: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    if !config.is_object() {
        *config = Value::Object(Default::default());
    }
    let mut node = config;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(SimError::range("override", format!("malformed key `{key}`")));
        }
        let map = node
            .as_object_mut()
            .ok_or_else(|| SimError::range("override", format!("`{key}` does not name an object path")))?;
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parses a `key=value` override string.
pub fn parse_override(spec: &str) -> Result<(&str, &str)> {
    spec.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| SimError::range("override", format!("expected key=value, got `{spec}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let s = reference_scenario();
        assert_eq!(s.n_steps, 5740);
        assert_eq!(s.step_seconds, 1.0);
        assert_eq!(s.n_sbs, 4);
        assert_eq!(s.requested_rate_bps, 1.8e6);
        assert_eq!(s.n_satellites, 22);
        assert_eq!(s.sat_altitude_m, 550_000.0);
        assert_eq!(s.algo_params.pso_population, 20);
        assert_eq!(s.algo_params.pso_inertia, 0.9);
        assert_eq!((s.algo_params.pso_cp, s.algo_params.pso_cg), (0.1, 0.1));
        assert_eq!(s.algo_params.dqn_batch, 64);
        assert_eq!(s.algo_params.dqn_replay, 600);
        assert_eq!(s.algo_params.satisfaction_delta, 0.2);
        assert_eq!(s.algo_params.satisfaction_tau, 200);
        assert_eq!(s.uav_alt_range_m, [22.5, 121.9]);
        assert_eq!(s.fixed_point_iters, 500);
        assert_eq!(s.reward_weights, [0.5, 0.5]);
        assert_eq!(s.n_channels, 4);
        assert_eq!(s.access_bandwidth_hz, 56e6);
    }

    #[test]
    fn empty_config_is_defaults() {
        let s = Scenario::from_json_str("{}").unwrap();
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn altitude_ordering_enforced() {
        let err = Scenario::from_json_str(r#"{"uav_alt_range_m": [130, 121.9]}"#).unwrap_err();
        assert!(
            matches!(
                err,
                SimError::Range {
                    field: "uav_alt_range_m",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn zero_channels_rejected() {
        let err = Scenario::from_json_str(r#"{"n_channels": 0}"#).unwrap_err();
        assert!(matches!(
            err,
            SimError::Range {
                field: "n_channels",
                ..
            }
        ));
    }

    #[test]
    fn speed_range_ordering() {
        let err = Scenario::from_json_str(r#"{"user_speed_range_mps": [2.0, 1.0]}"#).unwrap_err();
        assert!(matches!(
            err,
            SimError::Range {
                field: "user_speed_range_mps",
                ..
            }
        ));
        assert!(Scenario::from_json_str(r#"{"user_speed_range_mps": [-1.0, 1.0]}"#).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            Scenario::from_json_str(r#"{"n_usres": 10}"#),
            Err(SimError::Config(_))
        ));
        assert!(Scenario::from_json_str(r#"{"algo_params": {"bogus": 1}}"#).is_err());
    }

    #[test]
    fn algo_ranges() {
        assert!(Scenario::from_json_str(r#"{"algo_params": {"pso_inertia": 0}}"#).is_err());
        assert!(Scenario::from_json_str(r#"{"algo_params": {"pso_inertia": 1.0}}"#).is_ok());
        assert!(Scenario::from_json_str(r#"{"algo_params": {"satisfaction_delta": 1}}"#).is_err());
        assert!(Scenario::from_json_str(r#"{"algo_params": {"epsilon": 1.5}}"#).is_err());
        assert!(Scenario::from_json_str(r#"{"algo_params": {"dqn_batch": 0}}"#).is_err());
    }

    #[test]
    fn dqn_batch_larger_than_replay_is_scheme_error() {
        let err = Scenario::from_json_str(r#"{"scheme": "DqnCa3d", "algo_params": {"dqn_batch": 700}}"#).unwrap_err();
        assert!(matches!(err, SimError::Scheme(_)));
        // Same params are harmless for a scheme that never trains a network.
        assert!(Scenario::from_json_str(r#"{"scheme": "Sat2d", "algo_params": {"dqn_batch": 700}}"#).is_ok());
    }

    #[test]
    fn schedules_parse_both_forms() {
        let s =
            Scenario::from_json_str(r#"{"algo_params": {"epsilon": {"initial": 1.0, "rate": 0.01}, "q_alpha": 0.5}}"#)
                .unwrap();
        assert_eq!(s.algo_params.q_alpha, Schedule::Constant(0.5));
        assert!((s.algo_params.epsilon.at(100) - 0.5).abs() < 1e-15);
        let harmonic = Schedule::Decay {
            initial: 1.0,
            rate: 1.0,
            offset: 0.0,
        };
        assert_eq!(harmonic.at(4), 0.25);
    }

    #[test]
    fn round_trip_and_idempotent_validate() {
        let mut s = Scenario {
            n_users: 77,
            scheme: SchemeId::Pso2d,
            ..Scenario::default()
        };
        s.algo_params.satisfaction_kappa0 = Some(0.7);
        s.backhaul.enabled = false;
        let text = s.to_json_pretty();
        let back = Scenario::from_json_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.clone().validate().unwrap(), back);
    }

    #[test]
    fn scheme_names_parse() {
        for id in SchemeId::ALL {
            assert_eq!(id.name().parse::<SchemeId>().unwrap(), id);
        }
        assert_eq!("qlearning2d".parse::<SchemeId>().unwrap(), SchemeId::QLearning2d);
        assert_eq!("sat-3d-ca".parse::<SchemeId>().unwrap(), SchemeId::Sat3dCa);
        assert!("bogus".parse::<SchemeId>().is_err());
    }

    #[test]
    fn scheme_wiring() {
        assert!(SchemeId::Sat3dCa.is_3d() && SchemeId::Sat3dCa.learns_channels());
        assert!(!SchemeId::Sat2d.is_3d() && !SchemeId::Sat2d.learns_channels());
        assert!(SchemeId::Pso3d.is_3d() && !SchemeId::Pso3d.learns_channels());
        assert!(SchemeId::DqnCa3d.is_3d() && SchemeId::DqnCa3d.learns_channels());
        assert!(!SchemeId::QLearning2d.is_3d());
    }

    #[test]
    fn overrides_nested_and_scalar() {
        let mut v = serde_json::json!({});
        let (k, val) = parse_override("n_steps=10").unwrap();
        apply_override(&mut v, k, val).unwrap();
        apply_override(&mut v, "algo_params.pso_population", "7").unwrap();
        apply_override(&mut v, "scheme", "Pso3d").unwrap();
        let s = Scenario::from_json_value(v).unwrap();
        assert_eq!(s.n_steps, 10);
        assert_eq!(s.algo_params.pso_population, 7);
        assert_eq!(s.scheme, SchemeId::Pso3d);
        assert!(parse_override("novalue").is_err());
    }
}
