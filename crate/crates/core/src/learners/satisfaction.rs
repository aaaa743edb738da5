//! Satisfaction-based learning.
//!
//! An agent keeps its last action while its observed reward meets its
//! threshold. Otherwise it samples from its mixed strategy `pi` and nudges
//! `pi` toward the played action by `mu(t) * lambda(t)`, where
//! `mu(t) = 1 / (1000 t + 1)` and `lambda(t) = (R_max + R - kappa) / (2 R_max)`.
//! While unsatisfied, the threshold decays by `(1 - delta)` every `tau` steps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionParams {
    pub delta: f64,
    pub tau: u64,
    pub reward_max: f64,
    pub kappa0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionAgent {
    pub pi: Vec<f64>,
    pub kappa: f64,
    pub satisfied: bool,
    pub last_action: Option<usize>,
    pub t: u64,
    params: SatisfactionParams,
}

pub fn learning_rate(t: u64) -> f64 {
    1.0 / (1000.0 * t as f64 + 1.0)
}

/// Step size multiplier, clamped to `[0, 1]` so the update stays on the simplex.
pub fn lambda(reward: f64, kappa: f64, reward_max: f64) -> f64 {
    ((reward_max + reward - kappa) / (2.0 * reward_max)).clamp(0.0, 1.0)
}

impl SatisfactionAgent {
    pub fn new(n_actions: usize, params: SatisfactionParams) -> Self {
        SatisfactionAgent {
            pi: vec![1.0 / n_actions as f64; n_actions],
            kappa: params.kappa0,
            satisfied: false,
            last_action: None,
            t: 0,
            params,
        }
    }

    pub fn params(&self) -> &SatisfactionParams {
        &self.params
    }

    /// Chooses the action for the next step.
    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        self.t += 1;
        let action = match (self.satisfied, self.last_action) {
            (true, Some(a)) => a,
            _ => {
                if self.t.is_multiple_of(self.params.tau) {
                    self.kappa *= 1.0 - self.params.delta;
                }
                sample(&self.pi, rng)
            }
        };
        self.last_action = Some(action);
        action
    }

    /// Feeds back the reward of the action returned by the last `select`.
    pub fn observe(&mut self, reward: f64) -> Result<()> {
        self.satisfied = reward >= self.kappa;
        if self.satisfied {
            return Ok(());
        }
        let played = self.last_action.expect("observe called before select");
        let step = learning_rate(self.t) * lambda(reward, self.kappa, self.params.reward_max);
        for (i, p) in self.pi.iter_mut().enumerate() {
            let indicator = if i == played { 1.0 } else { 0.0 };
            *p += step * (indicator - *p);
        }
        check_simplex(&self.pi)
    }
}

/// One full act-observe cycle: picks an action, then applies `observed_reward`.
/// `t` must be the agent's next step index.
pub fn satisfaction_step<R: Rng + ?Sized>(
    mut state: SatisfactionAgent,
    observed_reward: f64,
    t: u64,
    rng: &mut R,
) -> Result<(usize, SatisfactionAgent)> {
    debug_assert_eq!(state.t + 1, t);
    let action = state.select(rng);
    state.observe(observed_reward)?;
    Ok((action, state))
}

pub fn check_simplex(pi: &[f64]) -> Result<()> {
    let sum: f64 = pi.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL || pi.iter().any(|&p| p < 0.0) {
        return Err(SimError::Distribution { sum });
    }
    Ok(())
}

fn sample<R: Rng + ?Sized>(pi: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in pi.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pi.len() - 1
}
