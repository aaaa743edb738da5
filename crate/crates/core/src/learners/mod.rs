//! Decision algorithms. Every per-agent learner works over an
//! [`ActionSpace`] of composite (movement, channel) actions indexed
//! `0..len()`; the PSO planner instead searches UAV coordinates directly.

pub mod dqn;
pub mod pso;
pub mod qlearning;
pub mod satisfaction;
pub mod ucb;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Direction;

pub use dqn::{dqn_act, dqn_targets, DqnAgent, DqnParams, Mlp, MlpGradients, ReplayBuffer, Transition};
pub use pso::{pso_iterate, PsoParams, PsoSwarm};
pub use qlearning::{q_select, q_update, QLearner, QTable, StateGrid};
pub use satisfaction::{satisfaction_step, SatisfactionAgent, SatisfactionParams};
pub use ucb::{ucb_select, ucb_update, UcbBandit};

/// One decoded decision: an optional movement and an optional channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub movement: Option<Direction>,
    pub channel: Option<usize>,
}

/// Cartesian product of movement directions and channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    moves: Vec<Direction>,
    channels: Option<usize>,
}

impl ActionSpace {
    /// `moves` may be empty (channel-only agents); `channels = None` means the
    /// agent does not pick channels.
    pub fn new(moves: &[Direction], channels: Option<usize>) -> Self {
        let space = ActionSpace {
            moves: moves.to_vec(),
            channels,
        };
        assert!(!space.is_empty(), "action space must not be empty");
        space
    }

    pub fn len(&self) -> usize {
        self.moves.len().max(1) * self.channels.unwrap_or(1)
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty() && self.channels.unwrap_or(0) == 0
    }

    pub fn decode(&self, index: usize) -> Action {
        assert!(index < self.len(), "action {index} out of range");
        let n_ch = self.channels.unwrap_or(1);
        let (m, c) = (index / n_ch, index % n_ch);
        Action {
            movement: self.moves.get(m).copied(),
            channel: self.channels.map(|_| c),
        }
    }
}

/// Index of the largest value; ties are broken uniformly at random.
pub fn argmax_random_tie<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v == best).count();
    if ties <= 1 {
        return values.iter().position(|&v| v == best).unwrap_or(0);
    }
    let pick = rng.random_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
