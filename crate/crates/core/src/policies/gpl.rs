use super::learner::{CensoredLearner, CtrModel};
use super::BidPolicy;
use crate::censored::TurnbullOptions;
use crate::distribution::PricePmf;
use crate::error::Result;
use crate::market::AuctionFeedback;
use crate::value_iteration::{self, ValueTable};

/// When the greedy policy recomputes its value table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResolveCadence {
    /// Whenever the estimate has changed since the last solve.
    #[default]
    Auction,
    /// Once at the first bid of each period.
    Period,
}

#[derive(Debug, Clone)]
enum Belief {
    Learned(CensoredLearner),
    Frozen { pmf: PricePmf, ctr: f64 },
}

impl Belief {
    fn pmf(&self) -> &PricePmf {
        match self {
            Belief::Learned(l) => l.planning_pmf(),
            Belief::Frozen { pmf, .. } => pmf,
        }
    }

    fn ctr(&self) -> f64 {
        match self {
            Belief::Learned(l) => l.ctr(),
            Belief::Frozen { ctr, .. } => *ctr,
        }
    }

    fn version(&self) -> u64 {
        match self {
            Belief::Learned(l) => l.version(),
            Belief::Frozen { .. } => 0,
        }
    }

    fn observe(&mut self, fb: &AuctionFeedback) -> Result<()> {
        match self {
            Belief::Learned(l) => l.observe(fb),
            Belief::Frozen { .. } => fb.validate(),
        }
    }
}

/// Greedy Product-Limit: bid the optimal action of the MDP solved against
/// the current censored estimate of the price distribution.
#[derive(Debug, Clone)]
pub struct GreedyProductLimit {
    belief: Belief,
    cadence: ResolveCadence,
    table: Option<(u64, ValueTable)>,
    fresh_period: bool,
}

impl GreedyProductLimit {
    pub fn new(
        budget_cap: u32,
        ctr: CtrModel,
        cadence: ResolveCadence,
        turnbull: TurnbullOptions,
    ) -> Self {
        Self {
            belief: Belief::Learned(CensoredLearner::new(budget_cap, ctr, turnbull)),
            cadence,
            table: None,
            fresh_period: true,
        }
    }

    /// Plays the optimal policy for a known distribution, without learning.
    pub fn frozen(pmf: PricePmf, ctr: f64) -> Self {
        Self {
            belief: Belief::Frozen { pmf, ctr },
            cadence: ResolveCadence::Auction,
            table: None,
            fresh_period: true,
        }
    }

    pub fn learner(&self) -> Option<&CensoredLearner> {
        match &self.belief {
            Belief::Learned(l) => Some(l),
            Belief::Frozen { .. } => None,
        }
    }

    /// Distribution the policy currently plans against.
    pub fn planning_pmf(&self) -> &PricePmf {
        self.belief.pmf()
    }

    fn needs_solve(&self, budget: u32, remaining: u32) -> bool {
        let Some((version, table)) = &self.table else {
            return true;
        };
        if budget > table.budget_cap() || remaining > table.horizon() {
            return true;
        }
        match self.cadence {
            ResolveCadence::Auction => *version != self.belief.version(),
            ResolveCadence::Period => self.fresh_period,
        }
    }
}

impl BidPolicy for GreedyProductLimit {
    fn name(&self) -> &'static str {
        match self.belief {
            Belief::Learned(_) => "greedy_product_limit",
            Belief::Frozen { .. } => "known_optimal",
        }
    }

    fn begin_period(&mut self, _budget: u32, _horizon: u32) {
        self.fresh_period = true;
    }

    fn next_bid(&mut self, budget: u32, remaining: u32) -> u32 {
        if budget == 0 || remaining == 0 {
            return 0;
        }
        if self.needs_solve(budget, remaining) {
            let table =
                value_iteration::solve(self.belief.pmf(), budget, remaining, self.belief.ctr())
                    .expect("belief ctr lies in (0, 1]");
            self.table = Some((self.belief.version(), table));
        }
        self.fresh_period = false;
        let (_, table) = self.table.as_ref().expect("solved above");
        table
            .best_bid(budget, remaining)
            .expect("state within solved table")
    }

    fn observe(&mut self, feedback: &AuctionFeedback) -> Result<()> {
        self.belief.observe(feedback)
    }
}
