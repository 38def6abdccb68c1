//! Fixtures shared by the benchmarks.

use adbudget_core::censored::{CensoredSample, ObservationLog};
use adbudget_core::distribution::{make_family, Family, PricePmf};
use adbudget_core::market::{resolve_auction, StochasticMarket};

/// A spread-out price distribution on `1..=support_max`.
pub fn market_pmf(support_max: u32) -> PricePmf {
    make_family(&Family::Geometric {
        ratio: 0.95,
        support_max,
    })
    .expect("valid geometric family")
}

/// `n` samples from bidding uniformly-cycled prices into a stochastic market.
/// Lost auctions are right-censored; with `ctr < 1` unconverted wins are
/// left-censored.
pub fn censored_log(n: usize, support_max: u32, ctr: f64, seed: u64) -> ObservationLog {
    let mut market =
        StochasticMarket::new(market_pmf(support_max), ctr, seed).expect("valid market");
    (0..n)
        .map(|i| {
            let bid = 1 + (i as u32 * 7) % support_max;
            let fb = resolve_auction(market.draw(), bid, u32::MAX);
            let k = bid + 1;
            if fb.click_won {
                CensoredSample::direct(fb.price_paid, k)
            } else if fb.impression_won {
                CensoredSample::left_censored(k)
            } else {
                CensoredSample::right_censored(k)
            }
            .expect("bounds are valid")
        })
        .collect()
}
