//! Particle swarm optimization with inertia weight and global best topology.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub inertia: f64,
    pub cp: f64,
    pub cg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoSwarm {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub best_positions: Vec<Vec<f64>>,
    pub best_utilities: Vec<f64>,
    pub global_best: Vec<f64>,
    pub global_best_utility: f64,
}

impl PsoSwarm {
    /// Particles uniform in the box, zero velocities, no bests yet.
    pub fn new<R: Rng + ?Sized>(population: usize, lower: Vec<f64>, upper: Vec<f64>, rng: &mut R) -> Self {
        assert_eq!(lower.len(), upper.len());
        let positions: Vec<Vec<f64>> = (0..population)
            .map(|_| {
                lower
                    .iter()
                    .zip(&upper)
                    .map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                    .collect()
            })
            .collect();
        let dim = lower.len();
        PsoSwarm {
            velocities: vec![vec![0.0; dim]; population],
            best_positions: positions.clone(),
            best_utilities: vec![f64::NEG_INFINITY; population],
            global_best: positions.first().cloned().unwrap_or_default(),
            global_best_utility: f64::NEG_INFINITY,
            positions,
            lower,
            upper,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn population(&self) -> usize {
        self.positions.len()
    }

    /// Forgets remembered utilities (positions and velocities are kept), for
    /// use when the objective changes between planning rounds.
    pub fn reset_bests(&mut self) {
        self.best_positions.clone_from(&self.positions);
        self.best_utilities.iter_mut().for_each(|u| *u = f64::NEG_INFINITY);
        self.global_best_utility = f64::NEG_INFINITY;
    }

    /// Places one particle at `position` (clamped), e.g. to seed the swarm
    /// with the currently deployed solution.
    pub fn seed_particle(&mut self, index: usize, position: &[f64]) {
        for (l, (x, &v)) in self.positions[index].iter_mut().zip(position).enumerate() {
            *x = v.clamp(self.lower[l], self.upper[l]);
        }
        self.velocities[index].iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn iterate<R, F>(&mut self, evaluate: F, params: &PsoParams, rng: &mut R)
    where
        R: Rng + ?Sized,
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let utilities: Vec<f64> = self.positions.par_iter().map(|x| evaluate(x)).collect();
        for (p, &u) in utilities.iter().enumerate() {
            if u > self.best_utilities[p] {
                self.best_utilities[p] = u;
                self.best_positions[p].clone_from(&self.positions[p]);
            }
            if u > self.global_best_utility {
                self.global_best_utility = u;
                self.global_best.clone_from(&self.positions[p]);
            }
        }
        for p in 0..self.population() {
            let (x, v) = (&mut self.positions[p], &mut self.velocities[p]);
            let pbest = &self.best_positions[p];
            for l in 0..x.len() {
                let phi_p: f64 = rng.random();
                let phi_g: f64 = rng.random();
                v[l] = params.inertia * v[l]
                    + params.cp * phi_p * (pbest[l] - x[l])
                    + params.cg * phi_g * (self.global_best[l] - x[l]);
                x[l] = (x[l] + v[l]).clamp(self.lower[l], self.upper[l]);
            }
        }
    }
}

pub fn pso_iterate<R, F>(mut swarm: PsoSwarm, evaluate: F, params: &PsoParams, rng: &mut R) -> PsoSwarm
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    swarm.iterate(evaluate, params, rng);
    swarm
}
