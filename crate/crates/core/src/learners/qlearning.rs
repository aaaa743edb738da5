//! Tabular Q-learning with epsilon-greedy exploration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::argmax_random_tie;
use crate::environment::Position3;
use crate::scenario::Schedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, v: f64) {
        self.values[state * self.n_actions + action] = v;
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Epsilon-greedy selection; greedy ties are broken uniformly at random.
pub fn q_select<R: Rng + ?Sized>(table: &QTable, state: usize, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..table.n_actions)
    } else {
        argmax_random_tie(table.row(state), rng)
    }
}

/// One temporal-difference update of `Q(s, a)`.
pub fn q_update(table: &mut QTable, s: usize, a: usize, r: f64, s_next: usize, alpha: f64, gamma: f64) {
    let q = table.get(s, a);
    let target = r + gamma * table.max_value(s_next);
    table.set(s, a, q + alpha * (target - q));
}

/// Discretizes UAV positions into grid cells (and altitude levels in 3D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    cell_m: f64,
    per_side: usize,
    h_min: f64,
    levels: usize,
}

impl StateGrid {
    pub fn new(area_side_m: f64, cell_m: f64, alt_range: [f64; 2], three_d: bool) -> Self {
        let per_side = (area_side_m / cell_m).ceil().max(1.0) as usize;
        let levels = if three_d {
            ((alt_range[1] - alt_range[0]) / cell_m).ceil() as usize + 1
        } else {
            1
        };
        StateGrid {
            cell_m,
            per_side,
            h_min: alt_range[0],
            levels,
        }
    }

    pub fn n_states(&self) -> usize {
        self.per_side * self.per_side * self.levels
    }

    pub fn index(&self, p: &Position3) -> usize {
        let cell = |v: f64| ((v / self.cell_m).floor().max(0.0) as usize).min(self.per_side - 1);
        let level = if self.levels > 1 {
            (((p.h - self.h_min) / self.cell_m).round().max(0.0) as usize).min(self.levels - 1)
        } else {
            0
        };
        (level * self.per_side + cell(p.y)) * self.per_side + cell(p.x)
    }
}

/// Q-learning agent with step-indexed learning rate and exploration schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearner {
    pub table: QTable,
    alpha: Schedule,
    gamma: f64,
    epsilon: Schedule,
    t: u64,
}

impl QLearner {
    pub fn new(n_states: usize, n_actions: usize, alpha: Schedule, gamma: f64, epsilon: Schedule) -> Self {
        QLearner {
            table: QTable::new(n_states, n_actions),
            alpha,
            gamma,
            epsilon,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn select<R: Rng + ?Sized>(&mut self, state: usize, rng: &mut R) -> usize {
        self.t += 1;
        q_select(&self.table, state, self.epsilon.at(self.t), rng)
    }

    pub fn update(&mut self, s: usize, a: usize, r: f64, s_next: usize) {
        let alpha = self.alpha.at(self.t.max(1));
        q_update(&mut self.table, s, a, r, s_next, alpha, self.gamma);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_picks_argmax() {
        let mut t = QTable::new(1, 3);
        t.set(0, 1, 5.0);
        t.set(0, 2, 1.0);
        assert_eq!(q_select(&t, 0, 0.0, &mut ChaCha8Rng::seed_from_u64(0)), 1);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut t = QTable::new(1, 5);
        t.set(0, 0, 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 5];
        let n = 10_000;
        for _ in 0..n {
            counts[q_select(&t, 0, 1.0, &mut rng)] += 1;
        }
        // Pearson chi-square, 4 degrees of freedom, p = 0.001 critical value.
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2000.0).powi(2) / 2000.0).sum();
        assert!(chi2 < 18.47, "{counts:?}");
    }

    #[test]
    fn zero_table_tie_break_is_uniform() {
        let t = QTable::new(1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[q_select(&t, 0, 0.0, &mut rng)] += 1;
        }
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 2500.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn update_examples() {
        let mut t = QTable::new(2, 2);
        q_update(&mut t, 0, 1, 1.0, 1, 0.5, 0.9);
        assert_eq!(t.get(0, 1), 0.5);
        assert_eq!((t.get(0, 0), t.get(1, 0), t.get(1, 1)), (0.0, 0.0, 0.0));

        let before = t.clone();
        q_update(&mut t, 0, 1, 1.0, 1, 0.0, 0.9);
        assert_eq!(t, before);

        // Q(0,1) already at its TD target: r + gamma * max Q(1, .) = 0.5 + 0.
        q_update(&mut t, 0, 1, 0.5, 1, 0.7, 0.9);
        assert_eq!(t, before);
    }

    #[test]
    fn grid_dimensions() {
        let g2 = StateGrid::new(500.0, 10.0, [22.5, 121.9], false);
        assert_eq!(g2.n_states(), 2500);
        let g3 = StateGrid::new(500.0, 10.0, [22.5, 121.9], true);
        assert_eq!(g3.n_states(), 2500 * 11);
        assert_eq!(g2.index(&Position3::new(0.0, 0.0, 121.9)), 0);
        assert_eq!(g2.index(&Position3::new(500.0, 500.0, 121.9)), 2499);
        assert_eq!(g3.index(&Position3::new(500.0, 500.0, 121.9)), 2500 * 11 - 1);
        assert_eq!(g2.index(&Position3::new(15.0, 0.0, 121.9)), 1);
        assert_eq!(g2.index(&Position3::new(0.0, 15.0, 121.9)), 50);
    }

    proptest! {
        #[test]
        fn q_values_bounded(seed in 0u64..300, steps in 1usize..2000) {
            // Rewards in [0, 1], Q0 = 0: |Q| <= 1 / (1 - gamma).
            let gamma = 0.9;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = QTable::new(6, 3);
            for _ in 0..steps {
                let s = rng.random_range(0..6);
                let a = rng.random_range(0..3);
                let s2 = rng.random_range(0..6);
                let r: f64 = rng.random();
                let alpha: f64 = rng.random();
                q_update(&mut t, s, a, r, s2, alpha, gamma);
            }
            for s in 0..6 {
                for a in 0..3 {
                    prop_assert!(t.get(s, a).abs() <= 1.0 / (1.0 - gamma) + 1e-9);
                }
            }
        }
    }
}
