//! Budget-constrained bidding in repeated single-slot second-price auctions.
//!
//! The crate solves the budgeted bidding MDP exactly for a known price
//! distribution ([`value_iteration`]), estimates that distribution from the
//! censored feedback a bidder actually sees ([`censored`]), and runs
//! tournaments of bidding policies ([`policies`]) against stochastic or
//! replayed markets ([`market`], [`harness`], [`experiment`]).

pub mod censored;
pub mod distribution;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod market;
pub mod policies;
pub mod stats;
pub mod value_iteration;

pub use censored::{CensorKind, CensoredSample, ObservationLog, TurnbullFit, TurnbullOptions};
pub use distribution::{make_family, Family, PricePmf};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentResult};
pub use harness::{PeriodLog, SimulationRun};
pub use market::{AuctionFeedback, AuctionOutcome, Market, ReplaySequence};
pub use policies::{BidPolicy, PolicySpec};
pub use value_iteration::{Calibration, ValueTable};
