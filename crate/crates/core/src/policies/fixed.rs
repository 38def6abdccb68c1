use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BidPolicy;
use crate::error::Result;
use crate::market::AuctionFeedback;

/// Bids the same price on every auction.
///
/// When the remaining budget drops below the price the bid is clamped to the
/// budget, or, with `strict`, the policy sits the auction out.
#[derive(Debug, Clone)]
pub struct FixedPrice {
    price: u32,
    strict: bool,
}

impl FixedPrice {
    pub fn new(price: u32) -> Self {
        Self {
            price,
            strict: false,
        }
    }

    pub fn strict(price: u32) -> Self {
        Self {
            price,
            strict: true,
        }
    }

    pub fn price(&self) -> u32 {
        self.price
    }
}

impl BidPolicy for FixedPrice {
    fn name(&self) -> &'static str {
        "fixed_price"
    }

    fn next_bid(&mut self, budget: u32, _remaining: u32) -> u32 {
        if self.strict && budget < self.price {
            0
        } else {
            self.price.min(budget)
        }
    }

    fn observe(&mut self, feedback: &AuctionFeedback) -> Result<()> {
        feedback.validate()
    }
}

/// `{1, ⌈g⌉, ⌈g²⌉, ...}` up to `max_price`, deduplicated.
pub fn geometric_grid(max_price: u32, ratio: f64) -> Vec<u32> {
    let mut grid = vec![1u32];
    if ratio <= 1.0 {
        return grid;
    }
    let mut x = 1.0f64;
    loop {
        x *= ratio;
        let p = x.ceil();
        if p > f64::from(max_price) {
            break;
        }
        let p = p as u32;
        if grid.last() != Some(&p) {
            grid.push(p);
        }
    }
    grid
}

/// Exp3 over a fixed set of arms with rewards in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Exp3 {
    weights: Vec<f64>,
    gamma: f64,
}

impl Exp3 {
    pub fn new(arms: usize, gamma: f64) -> Self {
        Self {
            weights: vec![1.0; arms.max(1)],
            gamma,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let k = self.weights.len() as f64;
        let total: f64 = self.weights.iter().sum();
        self.weights
            .iter()
            .map(|w| (1.0 - self.gamma) * w / total + self.gamma / k)
            .collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let probs = self.probabilities();
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    /// Importance-weighted multiplicative update for the played arm.
    pub fn update(&mut self, arm: usize, reward: f64) {
        let k = self.weights.len() as f64;
        let p = self.probabilities()[arm];
        let estimate = reward.clamp(0.0, 1.0) / p;
        self.weights[arm] *= (self.gamma * estimate / k).exp();
        let max = self.weights.iter().cloned().fold(f64::MIN, f64::max);
        self.weights.iter_mut().for_each(|w| *w /= max);
    }
}

/// Plays one fixed price per period and picks the next period's price with
/// Exp3 over a geometric price grid, rewarding each period's click count
/// divided by the horizon.
#[derive(Debug, Clone)]
pub struct FixedPriceSearch {
    grid: Vec<u32>,
    bandit: Exp3,
    arm: Option<usize>,
    period_clicks: u32,
    horizon: u32,
    rng: ChaCha8Rng,
}

impl FixedPriceSearch {
    pub fn new(max_price: u32, grid_ratio: f64, gamma: f64, seed: u64) -> Self {
        let grid = geometric_grid(max_price.max(1), grid_ratio);
        let bandit = Exp3::new(grid.len(), gamma);
        Self {
            grid,
            bandit,
            arm: None,
            period_clicks: 0,
            horizon: 1,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn grid(&self) -> &[u32] {
        &self.grid
    }

    pub fn bandit(&self) -> &Exp3 {
        &self.bandit
    }

    pub fn current_price(&self) -> Option<u32> {
        self.arm.map(|a| self.grid[a])
    }

    /// Credits the finished period's clicks to the current price and returns
    /// the price for the next period.
    pub fn update_bid(&mut self, clicks: u32) -> u32 {
        if let Some(arm) = self.arm {
            let reward = f64::from(clicks) / f64::from(self.horizon.max(1));
            self.bandit.update(arm, reward);
        }
        let arm = self.bandit.choose(&mut self.rng);
        self.arm = Some(arm);
        self.grid[arm]
    }
}

impl BidPolicy for FixedPriceSearch {
    fn name(&self) -> &'static str {
        "fixed_price_search"
    }

    fn begin_period(&mut self, _budget: u32, horizon: u32) {
        self.horizon = horizon;
        self.period_clicks = 0;
        if self.arm.is_none() {
            self.update_bid(0);
        }
    }

    fn next_bid(&mut self, budget: u32, _remaining: u32) -> u32 {
        if self.arm.is_none() {
            self.update_bid(0);
        }
        self.current_price().unwrap_or(0).min(budget)
    }

    fn observe(&mut self, feedback: &AuctionFeedback) -> Result<()> {
        feedback.validate()?;
        if feedback.click_won {
            self.period_clicks += 1;
        }
        Ok(())
    }

    fn end_period(&mut self) {
        let clicks = self.period_clicks;
        self.update_bid(clicks);
        self.period_clicks = 0;
    }
}
