use super::learner::{CensoredLearner, CtrModel};
use super::BidPolicy;
use crate::censored::TurnbullOptions;
use crate::distribution::PricePmf;
use crate::error::Result;
use crate::market::AuctionFeedback;
use crate::value_iteration::lueker_threshold_with_ctr;

/// Bids the largest price whose expected spend per auction fits the
/// remaining budget spread over the remaining auctions, against either a
/// learned or a known distribution.
#[derive(Debug, Clone)]
pub struct LuekerLearn {
    learner: Option<CensoredLearner>,
    known: Option<(PricePmf, f64)>,
}

impl LuekerLearn {
    pub fn new(budget_cap: u32, ctr: CtrModel, turnbull: TurnbullOptions) -> Self {
        Self {
            learner: Some(CensoredLearner::new(budget_cap, ctr, turnbull)),
            known: None,
        }
    }

    pub fn frozen(pmf: PricePmf, ctr: f64) -> Self {
        Self {
            learner: None,
            known: Some((pmf, ctr)),
        }
    }

    pub fn learner(&self) -> Option<&CensoredLearner> {
        self.learner.as_ref()
    }
}

impl BidPolicy for LuekerLearn {
    fn name(&self) -> &'static str {
        if self.learner.is_some() {
            "lueker_learn"
        } else {
            "known_lueker"
        }
    }

    fn next_bid(&mut self, budget: u32, remaining: u32) -> u32 {
        let bid = match (&self.learner, &self.known) {
            (Some(l), _) => lueker_threshold_with_ctr(l.planning_pmf(), budget, remaining, l.ctr()),
            (None, Some((pmf, ctr))) => lueker_threshold_with_ctr(pmf, budget, remaining, *ctr),
            (None, None) => unreachable!("constructed with a learner or a known pmf"),
        };
        bid.min(budget)
    }

    fn observe(&mut self, feedback: &AuctionFeedback) -> Result<()> {
        match &mut self.learner {
            Some(l) => l.observe(feedback),
            None => feedback.validate(),
        }
    }
}
