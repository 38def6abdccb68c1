//! The repeated-auction protocol, offline benchmarks and ratio metrics.

use crate::error::{Error, Result};
use crate::market::{resolve_auction, AuctionFeedback, AuctionOutcome, Market};
use crate::policies::BidPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuctionRecord {
    /// Auctions remaining in the period, this one included.
    pub remaining: u32,
    pub bid: u32,
    pub outcome: AuctionOutcome,
    pub feedback: AuctionFeedback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodLog {
    /// Zero-based.
    pub period_index: usize,
    pub budget: u32,
    pub auctions: Vec<AuctionRecord>,
    pub clicks: u32,
    pub spend: u32,
}

impl PeriodLog {
    pub fn outcomes(&self) -> Vec<AuctionOutcome> {
        self.auctions.iter().map(|a| a.outcome).collect()
    }

    pub fn remaining_budget(&self) -> u32 {
        self.budget - self.spend
    }

    /// Best click count in hindsight on this period's auctions.
    pub fn offline_optimal(&self) -> u32 {
        offline_optimal(&self.outcomes(), self.budget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub policy: String,
    pub budget: u32,
    pub horizon: u32,
    pub periods: Vec<PeriodLog>,
    /// The market ran out before the requested number of periods finished.
    pub truncated: bool,
}

impl SimulationRun {
    pub fn total_clicks(&self) -> u32 {
        self.periods.iter().map(|p| p.clicks).sum()
    }

    /// Clicks accumulated by the end of each period.
    pub fn cumulative_clicks(&self) -> Vec<u32> {
        self.periods
            .iter()
            .scan(0, |acc, p| {
                *acc += p.clicks;
                Some(*acc)
            })
            .collect()
    }

    /// Sum of per-period offline optima, each with the full period budget.
    pub fn offline_total(&self) -> u32 {
        self.periods.iter().map(PeriodLog::offline_optimal).sum()
    }
}

fn require_positive(field: &'static str, value: u32) -> Result<()> {
    if value == 0 {
        return Err(Error::InvalidParameter {
            field,
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// Runs `periods` periods of `horizon` auctions, refreshing the budget to
/// `budget` at the start of each. A bid above the remaining budget aborts
/// the run. If the market runs dry, the last period is kept as far as it
/// got and the run is flagged as truncated.
pub fn run_simulation(
    policy: &mut dyn BidPolicy,
    market: &mut dyn Market,
    budget: u32,
    horizon: u32,
    periods: u32,
) -> Result<SimulationRun> {
    require_positive("horizon", horizon)?;
    require_positive("periods", periods)?;
    let mut logs = Vec::with_capacity(periods as usize);
    let mut exhausted = false;
    for period_index in 0..periods as usize {
        policy.begin_period(budget, horizon);
        let mut log = PeriodLog {
            period_index,
            budget,
            auctions: Vec::with_capacity(horizon as usize),
            clicks: 0,
            spend: 0,
        };
        let mut remaining_budget = budget;
        for remaining in (1..=horizon).rev() {
            let Some(outcome) = market.next_outcome() else {
                exhausted = true;
                break;
            };
            let bid = policy.next_bid(remaining_budget, remaining);
            if bid > remaining_budget {
                return Err(Error::ContractBreach {
                    policy: policy.name().to_string(),
                    bid,
                    budget: remaining_budget,
                });
            }
            let feedback = resolve_auction(outcome, bid, remaining_budget);
            remaining_budget = feedback.budget_after;
            policy.observe(&feedback)?;
            if feedback.click_won {
                log.clicks += 1;
                log.spend += feedback.price_paid;
            }
            log.auctions.push(AuctionRecord {
                remaining,
                bid,
                outcome,
                feedback,
            });
        }
        if !log.auctions.is_empty() {
            policy.end_period();
            logs.push(log);
        }
        if exhausted {
            log::warn!(
                "market exhausted after {} of {} periods; last period has {} auctions",
                logs.len(),
                periods,
                logs.last().map_or(0, |l| l.auctions.len())
            );
            break;
        }
    }
    Ok(SimulationRun {
        policy: policy.name().to_string(),
        budget,
        horizon,
        periods: logs,
        truncated: exhausted,
    })
}

/// Most clicks any bidder with hindsight could buy within `budget`: take the
/// cheapest clickable auctions until the budget runs out.
pub fn offline_optimal(outcomes: &[AuctionOutcome], budget: u32) -> u32 {
    let mut prices: Vec<u32> = outcomes
        .iter()
        .filter(|o| o.click_available)
        .map(|o| o.market_price)
        .collect();
    prices.sort_unstable();
    let mut left = u64::from(budget);
    let mut clicks = 0;
    for p in prices {
        if u64::from(p) > left {
            break;
        }
        left -= u64::from(p);
        clicks += 1;
    }
    clicks
}

pub fn competitive_ratio(clicks: f64, reference: f64) -> Result<f64> {
    if reference.is_nan() || reference <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "reference",
            reason: format!("{reference} is not positive"),
        });
    }
    Ok(clicks / reference)
}

/// `A_p / O` for every period `p`: clicks accumulated by the end of period
/// `p` over the whole-run offline reference.
pub fn cumulative_period_ratios(run: &SimulationRun, reference: f64) -> Result<Vec<f64>> {
    run.cumulative_clicks()
        .into_iter()
        .map(|c| competitive_ratio(f64::from(c), reference))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// One-based period number.
    pub period: usize,
    /// One-based auction position within the period.
    pub auction: usize,
    /// Auctions elapsed since the start of the run.
    pub elapsed: usize,
    pub cumulative_clicks: u32,
    pub normalized: f64,
    pub offline_cumulative: u32,
    pub offline_normalized: f64,
}

/// Clicks per elapsed auction, for the policy and for the hindsight optimum.
///
/// Completed periods contribute their offline optimum with the full budget
/// `B`; inside the current period, the first `j` auctions are solved with the
/// prorated budget `⌊B j / T⌋`.
pub fn convergence_curve(run: &SimulationRun) -> Vec<CurvePoint> {
    let mut points = Vec::new();
    let mut clicks = 0;
    let mut offline_done = 0;
    let mut elapsed = 0;
    let horizon = u64::from(run.horizon.max(1));
    for period in &run.periods {
        let outcomes = period.outcomes();
        for (j, record) in period.auctions.iter().enumerate() {
            elapsed += 1;
            if record.feedback.click_won {
                clicks += 1;
            }
            let prorated = (u64::from(period.budget) * (j as u64 + 1) / horizon) as u32;
            let offline = offline_done + offline_optimal(&outcomes[..=j], prorated);
            points.push(CurvePoint {
                period: period.period_index + 1,
                auction: j + 1,
                elapsed,
                cumulative_clicks: clicks,
                normalized: f64::from(clicks) / elapsed as f64,
                offline_cumulative: offline,
                offline_normalized: f64::from(offline) / elapsed as f64,
            });
        }
        offline_done += period.offline_optimal();
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::PricePmf;
    use crate::market::{ReplayMarket, ReplaySequence, StochasticMarket};
    use crate::policies::FixedPrice;

    fn outcome(price: u32, click: bool) -> AuctionOutcome {
        AuctionOutcome {
            market_price: price,
            click_available: click,
        }
    }

    #[test]
    fn offline_examples() {
        let xs: Vec<_> = [3, 1, 2, 5].iter().map(|&p| outcome(p, true)).collect();
        assert_eq!(offline_optimal(&xs, 3), 2);
        assert_eq!(offline_optimal(&xs, 0), 0);
        assert_eq!(
            offline_optimal(&[outcome(2, true), outcome(2, false)], 4),
            1
        );
    }

    #[test]
    fn ratios() {
        assert_eq!(competitive_ratio(10.0, 10.0).unwrap(), 1.0);
        assert!((competitive_ratio(9.573, 10.0).unwrap() - 0.9573).abs() < 1e-15);
        assert_eq!(competitive_ratio(0.0, 3.0).unwrap(), 0.0);
        assert!(competitive_ratio(1.0, 0.0).is_err());
    }

    #[test]
    fn fixed_price_on_point_mass_buys_budget() {
        let (k, p) = (4u32, 3u32);
        let mut market = StochasticMarket::new(PricePmf::point_mass(p).unwrap(), 1.0, 1).unwrap();
        let mut policy = FixedPrice::new(p);
        let run = run_simulation(&mut policy, &mut market, k * p, 10, 3).unwrap();
        assert!(run
            .periods
            .iter()
            .all(|l| l.clicks == k && l.spend == k * p));
        assert!(!run.truncated);
    }

    #[test]
    fn zero_budget_buys_nothing() {
        let mut market = StochasticMarket::new(PricePmf::uniform(1, 3).unwrap(), 1.0, 1).unwrap();
        let mut policy = FixedPrice::new(2);
        let run = run_simulation(&mut policy, &mut market, 0, 10, 2).unwrap();
        assert_eq!(run.total_clicks(), 0);
        assert!(run.periods.iter().all(|l| l.spend == 0));
    }

    struct Greedy;
    impl BidPolicy for Greedy {
        fn name(&self) -> &'static str {
            "greedy"
        }
        fn next_bid(&mut self, budget: u32, _remaining: u32) -> u32 {
            budget + 1
        }
        fn observe(&mut self, _feedback: &AuctionFeedback) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn overbidding_is_a_breach() {
        let mut market = StochasticMarket::new(PricePmf::uniform(1, 3).unwrap(), 1.0, 1).unwrap();
        let err = run_simulation(&mut Greedy, &mut market, 5, 10, 1).unwrap_err();
        assert!(matches!(
            err,
            Error::ContractBreach {
                bid: 6,
                budget: 5,
                ..
            }
        ));
    }

    #[test]
    fn replay_truncation_is_flagged() {
        let seq = ReplaySequence::new(vec![outcome(1, true); 950], "x").unwrap();
        let mut market = ReplayMarket::new(&seq);
        let run = run_simulation(&mut FixedPrice::new(1), &mut market, 1000, 100, 10).unwrap();
        assert!(run.truncated);
        assert_eq!(run.periods.len(), 10);
        assert_eq!(run.periods[9].auctions.len(), 50);

        let seq = ReplaySequence::new(vec![outcome(1, true); 1000], "x").unwrap();
        let mut market = ReplayMarket::new(&seq);
        let run = run_simulation(&mut FixedPrice::new(1), &mut market, 1000, 100, 10).unwrap();
        assert!(!run.truncated);
        assert_eq!(run.periods.len(), 10);
    }

    #[test]
    fn curves() {
        let seq = ReplaySequence::new(vec![outcome(2, true); 20], "x").unwrap();
        let run = run_simulation(
            &mut FixedPrice::new(2),
            &mut ReplayMarket::new(&seq),
            8,
            10,
            2,
        )
        .unwrap();
        let curve = convergence_curve(&run);
        assert_eq!(curve.len(), 20);
        assert!(curve[..4].iter().all(|c| c.normalized == 1.0));
        assert_eq!(curve[9].normalized, 0.4);
        assert_eq!(curve[9].offline_cumulative, 4);
        assert_eq!(curve[19].cumulative_clicks, 8);
        // prorated budget after 5 of 10 auctions is 4, i.e. two clicks
        assert_eq!(curve[4].offline_cumulative, 2);

        let never = run_simulation(
            &mut FixedPrice::new(0),
            &mut ReplayMarket::new(&seq),
            8,
            10,
            2,
        )
        .unwrap();
        assert!(convergence_curve(&never)
            .iter()
            .all(|c| c.normalized == 0.0));
        let always = run_simulation(
            &mut FixedPrice::new(2),
            &mut ReplayMarket::new(&seq),
            100,
            10,
            2,
        )
        .unwrap();
        assert!(convergence_curve(&always)
            .iter()
            .all(|c| c.normalized == 1.0));
    }

    #[test]
    fn period_ratios_accumulate() {
        let seq = ReplaySequence::new(vec![outcome(1, true); 30], "x").unwrap();
        let run = run_simulation(
            &mut FixedPrice::new(1),
            &mut ReplayMarket::new(&seq),
            5,
            10,
            3,
        )
        .unwrap();
        let o = f64::from(run.offline_total());
        assert_eq!(o, 15.0);
        let r = cumulative_period_ratios(&run, o).unwrap();
        assert_eq!(r, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }
}
