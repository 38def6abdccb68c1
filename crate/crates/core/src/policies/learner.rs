use crate::censored::{product_limit, turnbull, CensoredSample, ObservationLog, TurnbullOptions};
use crate::distribution::PricePmf;
use crate::error::{Error, Result};
use crate::market::AuctionFeedback;

/// How a learning policy sets the click-through rate it plans with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CtrModel {
    Known(f64),
    /// `(clicks + 1) / (impressions + 1)` from the policy's own history.
    Empirical,
}

/// Censored price estimate shared by the learning policies.
///
/// Every auction adds one sample: a charged click is a direct observation of
/// the price, a lost auction is right-censored at `bid + 1`, and an
/// unconverted impression is left-censored at `bid + 1`. The estimate is the
/// product-limit fit while no left-censored samples exist and the Turnbull
/// fit afterwards, always on the support `1..=budget_cap`. Until the first
/// sample arrives the estimate is uniform on `1..=budget_cap`.
#[derive(Debug, Clone)]
pub struct CensoredLearner {
    budget_cap: u32,
    log: ObservationLog,
    estimate: PricePmf,
    planning: PricePmf,
    // smallest price above every point any sample was at risk
    residual_floor: u32,
    ctr: CtrModel,
    impressions: u64,
    clicks: u64,
    turnbull: TurnbullOptions,
    version: u64,
}

impl CensoredLearner {
    pub fn new(budget_cap: u32, ctr: CtrModel, turnbull: TurnbullOptions) -> Self {
        let prior = PricePmf::uniform(1, budget_cap.max(1)).expect("valid uniform prior");
        Self {
            budget_cap,
            log: ObservationLog::new(),
            estimate: prior.clone(),
            planning: prior,
            residual_floor: 0,
            ctr,
            impressions: 0,
            clicks: 0,
            turnbull,
            version: 0,
        }
    }

    /// The maximum-likelihood estimate, with unlocalized mass above the support.
    pub fn estimate(&self) -> &PricePmf {
        &self.estimate
    }

    /// The estimate used for bidding: mass the estimator could not localize
    /// is placed at the lowest price still consistent with every sample, so
    /// that bidding there remains worth considering.
    pub fn planning_pmf(&self) -> &PricePmf {
        &self.planning
    }

    pub fn ctr(&self) -> f64 {
        match self.ctr {
            CtrModel::Known(r) => r,
            CtrModel::Empirical => (self.clicks + 1) as f64 / (self.impressions + 1) as f64,
        }
    }

    pub fn log(&self) -> &ObservationLog {
        &self.log
    }

    /// Bumped every time the estimate or click-rate changes.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn observe(&mut self, fb: &AuctionFeedback) -> Result<()> {
        fb.validate()?;
        let bound = fb.bid_placed.checked_add(1).ok_or_else(|| {
            Error::InconsistentFeedback(format!("bid {} overflows", fb.bid_placed))
        })?;
        let sample = if fb.click_won {
            self.residual_floor = self.residual_floor.max(fb.price_paid + 1);
            CensoredSample::direct(fb.price_paid, bound)?
        } else if fb.impression_won {
            if fb.bid_placed == 0 {
                return Err(Error::InconsistentFeedback(
                    "impression won with a zero bid".into(),
                ));
            }
            CensoredSample::left_censored(bound)?
        } else {
            self.residual_floor = self.residual_floor.max(bound);
            CensoredSample::right_censored(bound)?
        };
        if fb.impression_won {
            self.impressions += 1;
        }
        if fb.click_won {
            self.clicks += 1;
        }
        self.log.push(sample);
        self.refresh()
    }

    fn refresh(&mut self) -> Result<()> {
        let support = self.budget_cap.max(1);
        self.estimate = if self.log.has_left_censored() {
            turnbull(&self.log, support, self.turnbull)?.pmf
        } else {
            product_limit(&self.log, support)?
        };
        self.planning = self.estimate.with_residual_at(self.residual_floor);
        self.version += 1;
        Ok(())
    }
}
