//! Deep Q-network: one hidden ReLU layer, experience replay and a
//! periodically synchronized target network.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::argmax_random_tie;
use crate::scenario::Schedule;

/// Fully connected `inputs -> hidden (ReLU) -> outputs` network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Row-major `hidden x inputs`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Row-major `outputs x hidden`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients with the same layout as [`Mlp`] weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Mlp {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Mlp {
            inputs,
            hidden,
            outputs,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; outputs * hidden],
            b2: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn xavier<R: Rng + ?Sized>(inputs: usize, hidden: usize, outputs: usize, rng: &mut R) -> Self {
        let mut net = Mlp::zeros(inputs, hidden, outputs);
        let l1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let l2 = (6.0 / (hidden + outputs) as f64).sqrt();
        net.w1.iter_mut().for_each(|w| *w = rng.random_range(-l1..l1));
        net.w2.iter_mut().for_each(|w| *w = rng.random_range(-l2..l2));
        net
    }

    fn hidden_activations(&self, x: &[f64], h: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inputs);
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            let z = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *hj = z.max(0.0);
        }
    }

    fn output(&self, h: &[f64], k: usize) -> f64 {
        let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
        self.b2[k] + row.iter().zip(h).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden];
        self.hidden_activations(x, &mut h);
        (0..self.outputs).map(|k| self.output(&h, k)).collect()
    }

    /// Mean squared error between `Q(s_j, a_j)` and `y_j` over the batch, and its gradient.
    pub fn loss_and_grad(&self, states: &[&[f64]], actions: &[usize], targets: &[f64]) -> (f64, MlpGradients) {
        let n = states.len() as f64;
        let mut g = MlpGradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        };
        let mut h = vec![0.0; self.hidden];
        let mut loss = 0.0;
        for ((x, &a), &y) in states.iter().zip(actions).zip(targets) {
            self.hidden_activations(x, &mut h);
            let err = self.output(&h, a) - y;
            loss += err * err / n;
            let d_out = 2.0 * err / n;
            g.b2[a] += d_out;
            let w2_row = &self.w2[a * self.hidden..(a + 1) * self.hidden];
            let g_w2 = &mut g.w2[a * self.hidden..(a + 1) * self.hidden];
            for j in 0..self.hidden {
                g_w2[j] += d_out * h[j];
                if h[j] > 0.0 {
                    let d_h = d_out * w2_row[j];
                    g.b1[j] += d_h;
                    let g_w1 = &mut g.w1[j * self.inputs..(j + 1) * self.inputs];
                    for (gw, v) in g_w1.iter_mut().zip(x.iter()) {
                        *gw += d_h * v;
                    }
                }
            }
        }
        (loss, g)
    }

    pub fn sgd(&mut self, grads: &MlpGradients, lr: f64) {
        let step = |w: &mut Vec<f64>, g: &Vec<f64>| w.iter_mut().zip(g).for_each(|(w, g)| *w -= lr * g);
        step(&mut self.w1, &grads.w1);
        step(&mut self.b1, &grads.b1);
        step(&mut self.w2, &grads.w2);
        step(&mut self.b2, &grads.b2);
    }

    /// All weights flattened in the order `w1, b1, w2, b2`.
    pub fn parameters(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flat_map(|v| v.iter().copied())
            .collect()
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len());
        let mut rest = p;
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(v.len());
            v.copy_from_slice(head);
            rest = tail;
        }
    }
}

impl MlpGradients {
    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flat_map(|v| v.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity ring buffer; the oldest transition is overwritten first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity),
            next: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// `n` distinct transitions chosen uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition> {
        index::sample(rng, self.items.len(), n.min(self.items.len()))
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}

/// TD targets `r + gamma * max_a' Q_target(s', a')`.
pub fn dqn_targets(target: &Mlp, batch: &[&Transition], gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            let best = if gamma == 0.0 {
                0.0
            } else {
                target
                    .forward(&t.next_state)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            t.reward + gamma * best
        })
        .collect()
}

/// Epsilon-greedy over the network outputs.
pub fn dqn_act<R: Rng + ?Sized>(net: &Mlp, state: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..net.outputs)
    } else {
        argmax_random_tie(&net.forward(state), rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnParams {
    pub hidden: usize,
    pub batch: usize,
    pub replay: usize,
    pub target_sync: u64,
    pub lr: f64,
    pub gamma: f64,
    pub epsilon: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnAgent {
    pub eval: Mlp,
    pub target: Mlp,
    pub replay: ReplayBuffer,
    pub params: DqnParams,
    /// Actions taken so far.
    pub t: u64,
    /// Gradient steps taken so far.
    pub train_steps: u64,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, n_actions: usize, params: DqnParams, rng: &mut R) -> Self {
        let eval = Mlp::xavier(state_dim, params.hidden, n_actions, rng);
        DqnAgent {
            target: eval.clone(),
            eval,
            replay: ReplayBuffer::new(params.replay),
            params,
            t: 0,
            train_steps: 0,
        }
    }

    pub fn act<R: Rng + ?Sized>(&mut self, state: &[f64], rng: &mut R) -> usize {
        self.t += 1;
        dqn_act(&self.eval, state, self.params.epsilon.at(self.t), rng)
    }

    pub fn remember(&mut self, t: Transition) {
        self.replay.push(t);
    }

    /// One minibatch gradient step; returns the batch loss, or `None` while
    /// the replay memory holds fewer than a batch of transitions.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        if self.replay.len() < self.params.batch {
            return None;
        }
        let batch = self.replay.sample(self.params.batch, rng);
        let targets = dqn_targets(&self.target, &batch, self.params.gamma);
        let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let (loss, grads) = self.eval.loss_and_grad(&states, &actions, &targets);
        self.eval.sgd(&grads, self.params.lr);
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.params.target_sync) {
            self.target = self.eval.clone();
        }
        Some(loss)
    }
}
