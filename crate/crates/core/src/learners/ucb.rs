//! Upper-confidence-bound multi-armed bandit.

use serde::{Deserialize, Serialize};

/// Per-arm running mean rewards and pull counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbBandit {
    pub means: Vec<f64>,
    pub counts: Vec<u64>,
    /// Number of selections made so far.
    pub t: u64,
}

impl UcbBandit {
    pub fn new(n_arms: usize) -> Self {
        UcbBandit {
            means: vec![0.0; n_arms],
            counts: vec![0; n_arms],
            t: 0,
        }
    }

    pub fn select(&mut self) -> usize {
        self.t += 1;
        ucb_select(self)
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        ucb_update(self, arm, reward);
    }
}

/// Plays any unplayed arm first (lowest index), then maximizes
/// `mean + sqrt(2 ln t / n)`. Ties go to the lowest index.
pub fn ucb_select(stats: &UcbBandit) -> usize {
    if let Some(arm) = stats.counts.iter().position(|&n| n == 0) {
        return arm;
    }
    let log_t = (stats.t.max(1) as f64).ln();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, (&mean, &n)) in stats.means.iter().zip(&stats.counts).enumerate() {
        let score = mean + (2.0 * log_t / n as f64).sqrt();
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Incremental-mean update of the played arm.
pub fn ucb_update(stats: &mut UcbBandit, chosen: usize, reward: f64) {
    let n_old = stats.counts[chosen] as f64;
    stats.counts[chosen] += 1;
    stats.means[chosen] = (n_old * stats.means[chosen] + reward) / (n_old + 1.0);
}
