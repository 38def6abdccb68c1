use super::BidPolicy;
use crate::error::Result;
use crate::market::AuctionFeedback;

/// Logistic budget smoothing: with a fraction `z` of the period budget left,
/// bid `scale / (1 + exp(z - 1))`, rounded and capped by the remaining
/// budget. The logistic term lies in (0, 1), so `scale` converts it into
/// price units.
#[derive(Debug, Clone)]
pub struct BudgetSmoothing {
    scale: u32,
    period_budget: u32,
}

impl BudgetSmoothing {
    pub fn new(scale: u32, period_budget: u32) -> Self {
        Self {
            scale: scale.max(1),
            period_budget,
        }
    }

    /// `max(1, B / 10)`.
    pub fn default_scale(period_budget: u32) -> u32 {
        (period_budget / 10).max(1)
    }

    pub fn bid_for(&self, budget: u32) -> u32 {
        if budget == 0 || self.period_budget == 0 {
            return 0;
        }
        let z = f64::from(budget) / f64::from(self.period_budget);
        let raw = f64::from(self.scale) / (1.0 + (z - 1.0).exp());
        (raw.round() as u32).min(budget)
    }
}

impl BidPolicy for BudgetSmoothing {
    fn name(&self) -> &'static str {
        "budget_smoothing"
    }

    fn begin_period(&mut self, budget: u32, _horizon: u32) {
        self.period_budget = budget;
    }

    fn next_bid(&mut self, budget: u32, _remaining: u32) -> u32 {
        self.bid_for(budget)
    }

    fn observe(&mut self, feedback: &AuctionFeedback) -> Result<()> {
        feedback.validate()
    }
}
