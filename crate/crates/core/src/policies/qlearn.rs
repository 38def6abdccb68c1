use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BidPolicy;
use crate::error::Result;
use crate::market::AuctionFeedback;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLearningParams {
    pub alpha: f64,
    pub epsilon: f64,
    /// Multiplies `epsilon` at the end of every period.
    pub epsilon_decay: f64,
}

impl Default for QLearningParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            epsilon: 0.1,
            epsilon_decay: 0.995,
        }
    }
}

/// Tabular epsilon-greedy Q-learning over states `(b, t)` and bids `a <= b`.
#[derive(Debug, Clone)]
pub struct QLearning {
    budget_cap: u32,
    horizon: u32,
    // triangular per state: (t, b) holds b + 1 actions
    q: Vec<f64>,
    params: QLearningParams,
    epsilon: f64,
    last: Option<(u32, u32, u32)>,
    rng: ChaCha8Rng,
}

impl QLearning {
    pub fn new(budget_cap: u32, horizon: u32, params: QLearningParams, seed: u64) -> Self {
        let per_layer = Self::layer_size(budget_cap);
        Self {
            budget_cap,
            horizon,
            q: vec![0.0; per_layer * (horizon as usize + 1)],
            params,
            epsilon: params.epsilon,
            last: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn layer_size(budget_cap: u32) -> usize {
        let n = budget_cap as usize + 1;
        n * (n + 1) / 2
    }

    fn offset(&self, budget: u32, remaining: u32) -> usize {
        debug_assert!(budget <= self.budget_cap && remaining <= self.horizon);
        let b = budget as usize;
        remaining as usize * Self::layer_size(self.budget_cap) + b * (b + 1) / 2
    }

    pub fn q(&self, bid: u32, budget: u32, remaining: u32) -> f64 {
        self.q[self.offset(budget, remaining) + bid as usize]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn actions(&self, budget: u32, remaining: u32) -> &[f64] {
        let start = self.offset(budget, remaining);
        &self.q[start..=start + budget as usize]
    }

    /// Smallest bid with the largest Q-value, and that value.
    fn greedy(&self, budget: u32, remaining: u32) -> (u32, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (a, &v) in self.actions(budget, remaining).iter().enumerate() {
            if v > best.1 {
                best = (a as u32, v);
            }
        }
        best
    }
}

impl BidPolicy for QLearning {
    fn name(&self) -> &'static str {
        "q_learning"
    }

    fn next_bid(&mut self, budget: u32, remaining: u32) -> u32 {
        let budget = budget.min(self.budget_cap);
        let remaining = remaining.min(self.horizon);
        if remaining == 0 {
            return 0;
        }
        let bid = if self.rng.gen::<f64>() < self.epsilon {
            self.rng.gen_range(0..=budget)
        } else {
            self.greedy(budget, remaining).0
        };
        self.last = Some((bid, budget, remaining));
        bid
    }

    fn observe(&mut self, feedback: &AuctionFeedback) -> Result<()> {
        feedback.validate()?;
        let Some((bid, budget, remaining)) = self.last.take() else {
            return Ok(());
        };
        let reward = if feedback.click_won { 1.0 } else { 0.0 };
        let next_budget = feedback.budget_after.min(self.budget_cap);
        let bootstrap = if remaining > 1 {
            self.greedy(next_budget, remaining - 1).1
        } else {
            0.0
        };
        let alpha = self.params.alpha;
        let idx = self.offset(budget, remaining) + bid as usize;
        self.q[idx] = (1.0 - alpha) * self.q[idx] + alpha * (reward + bootstrap);
        Ok(())
    }

    fn end_period(&mut self) {
        self.epsilon *= self.params.epsilon_decay;
    }
}
