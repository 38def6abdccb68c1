//! Bidding policies behind the [`BidPolicy`] interface.

mod fixed;
mod gpl;
mod learner;
mod lueker;
mod qlearn;
mod smoothing;

pub use fixed::{geometric_grid, Exp3, FixedPrice, FixedPriceSearch};
pub use gpl::{GreedyProductLimit, ResolveCadence};
pub use learner::{CensoredLearner, CtrModel};
pub use lueker::LuekerLearn;
pub use qlearn::{QLearning, QLearningParams};
pub use smoothing::BudgetSmoothing;

use crate::censored::TurnbullOptions;
use crate::distribution::PricePmf;
use crate::error::{Error, Result};
use crate::market::AuctionFeedback;

/// A bidder in the repeated auction.
///
/// The harness calls `begin_period` when the budget is refreshed, then for
/// each auction `next_bid` followed by exactly one `observe`, and finally
/// `end_period`. `next_bid` must never exceed the remaining budget.
pub trait BidPolicy: Send {
    fn name(&self) -> &'static str;

    fn begin_period(&mut self, _budget: u32, _horizon: u32) {}

    fn next_bid(&mut self, budget: u32, remaining: u32) -> u32;

    fn observe(&mut self, feedback: &AuctionFeedback) -> Result<()>;

    fn end_period(&mut self) {}
}

/// A policy choice with its hyperparameters, buildable for any experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    GreedyProductLimit {
        resolve: ResolveCadence,
        turnbull: TurnbullOptions,
    },
    LuekerLearn {
        turnbull: TurnbullOptions,
    },
    FixedPrice {
        price: u32,
        strict: bool,
    },
    FixedPriceSearch {
        grid_ratio: f64,
        gamma: f64,
    },
    QLearning(QLearningParams),
    /// `scale = None` means `max(1, B / 10)`.
    BudgetSmoothing {
        scale: Option<u32>,
    },
    /// Optimal policy for the true distribution (stochastic markets only).
    KnownOptimal,
    /// Threshold policy for the true distribution (stochastic markets only).
    KnownLueker,
}

pub const POLICY_NAMES: &[&str] = &[
    "greedy_product_limit",
    "lueker_learn",
    "fixed_price",
    "fixed_price_search",
    "q_learning",
    "budget_smoothing",
    "known_optimal",
    "known_lueker",
];

/// What a policy may know about the experiment it is built for.
#[derive(Debug, Clone)]
pub struct PolicyContext<'a> {
    pub budget: u32,
    pub horizon: u32,
    pub ctr: CtrModel,
    /// The true price distribution, when there is one.
    pub true_pmf: Option<&'a PricePmf>,
    pub true_ctr: f64,
    pub seed: u64,
}

impl PolicySpec {
    /// Default hyperparameters for a policy name; accepts short aliases.
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name {
            "greedy_product_limit" | "gpl" => PolicySpec::GreedyProductLimit {
                resolve: ResolveCadence::Auction,
                turnbull: TurnbullOptions::default(),
            },
            "lueker_learn" | "lueker" => PolicySpec::LuekerLearn {
                turnbull: TurnbullOptions::default(),
            },
            "fixed_price" | "fixed" => PolicySpec::FixedPrice {
                price: 1,
                strict: false,
            },
            "fixed_price_search" | "fps" => PolicySpec::FixedPriceSearch {
                grid_ratio: 1.3,
                gamma: 0.1,
            },
            "q_learning" | "qlearn" => PolicySpec::QLearning(QLearningParams::default()),
            "budget_smoothing" | "smoothing" => PolicySpec::BudgetSmoothing { scale: None },
            "known_optimal" => PolicySpec::KnownOptimal,
            "known_lueker" => PolicySpec::KnownLueker,
            other => {
                return Err(Error::UnknownPolicy {
                    name: other.to_string(),
                    available: POLICY_NAMES.join(", "),
                })
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::GreedyProductLimit { .. } => "greedy_product_limit",
            PolicySpec::LuekerLearn { .. } => "lueker_learn",
            PolicySpec::FixedPrice { .. } => "fixed_price",
            PolicySpec::FixedPriceSearch { .. } => "fixed_price_search",
            PolicySpec::QLearning(_) => "q_learning",
            PolicySpec::BudgetSmoothing { .. } => "budget_smoothing",
            PolicySpec::KnownOptimal => "known_optimal",
            PolicySpec::KnownLueker => "known_lueker",
        }
    }

    pub fn needs_true_distribution(&self) -> bool {
        matches!(self, PolicySpec::KnownOptimal | PolicySpec::KnownLueker)
    }

    pub fn build(&self, ctx: &PolicyContext<'_>) -> Result<Box<dyn BidPolicy>> {
        let truth = || {
            ctx.true_pmf.cloned().ok_or_else(|| {
                Error::Config(format!(
                    "policy `{}` needs a known price distribution",
                    self.name()
                ))
            })
        };
        Ok(match *self {
            PolicySpec::GreedyProductLimit { resolve, turnbull } => Box::new(
                GreedyProductLimit::new(ctx.budget, ctx.ctr, resolve, turnbull),
            ),
            PolicySpec::LuekerLearn { turnbull } => {
                Box::new(LuekerLearn::new(ctx.budget, ctx.ctr, turnbull))
            }
            PolicySpec::FixedPrice { price, strict } => Box::new(if strict {
                FixedPrice::strict(price)
            } else {
                FixedPrice::new(price)
            }),
            PolicySpec::FixedPriceSearch { grid_ratio, gamma } => Box::new(FixedPriceSearch::new(
                ctx.budget, grid_ratio, gamma, ctx.seed,
            )),
            PolicySpec::QLearning(params) => {
                Box::new(QLearning::new(ctx.budget, ctx.horizon, params, ctx.seed))
            }
            PolicySpec::BudgetSmoothing { scale } => Box::new(BudgetSmoothing::new(
                scale.unwrap_or_else(|| BudgetSmoothing::default_scale(ctx.budget)),
                ctx.budget,
            )),
            PolicySpec::KnownOptimal => {
                Box::new(GreedyProductLimit::frozen(truth()?, ctx.true_ctr))
            }
            PolicySpec::KnownLueker => Box::new(LuekerLearn::frozen(truth()?, ctx.true_ctr)),
        })
    }
}
