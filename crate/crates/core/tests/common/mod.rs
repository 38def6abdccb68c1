//! Brute-force reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver or estimators under test; each oracle
//! works straight from the definitions.

#![allow(dead_code)]

use adbudget_core::censored::{CensorKind, CensoredSample};
use rand::Rng;

/// A price distribution as plain cells: `cells[i]` is the mass of price
/// `i + 1` for `i < S`, and `cells[S]` the mass above `S`.
pub type Cells = Vec<f64>;

/// Expected clicks of a bid table under every length-`horizon` price
/// sequence, weighted by its probability. `prices[i]` has probability
/// `probs[i]`; every auction converts (CTR 1).
pub fn enumerate_expected_clicks(
    prices: &[u32],
    probs: &[f64],
    budget: u32,
    horizon: u32,
    bid: &dyn Fn(u32, u32) -> u32,
) -> f64 {
    fn walk(
        prices: &[u32],
        probs: &[f64],
        budget: u32,
        remaining: u32,
        weight: f64,
        bid: &dyn Fn(u32, u32) -> u32,
    ) -> f64 {
        if remaining == 0 || weight == 0.0 {
            return 0.0;
        }
        let a = bid(budget, remaining);
        assert!(a <= budget, "bid {a} above budget {budget}");
        let mut total = 0.0;
        for (&x, &p) in prices.iter().zip(probs) {
            let w = weight * p;
            if x <= a {
                total += w + walk(prices, probs, budget - x, remaining - 1, w, bid);
            } else {
                total += walk(prices, probs, budget, remaining - 1, w, bid);
            }
        }
        total
    }
    walk(prices, probs, budget, horizon, 1.0, bid)
}

/// Most clicks buyable with hindsight, by 0/1 knapsack over the clickable
/// auctions (unit values).
pub fn knapsack_clicks(prices: &[u32], clickable: &[bool], budget: u32) -> u32 {
    let mut best = vec![0u32; budget as usize + 1];
    for (&x, &c) in prices.iter().zip(clickable) {
        if !c || x > budget {
            continue;
        }
        for cap in (x as usize..=budget as usize).rev() {
            best[cap] = best[cap].max(best[cap - x as usize] + 1);
        }
    }
    best[budget as usize]
}

/// Clicks of "bid `price` whenever the remaining budget allows it".
pub fn fixed_price_clicks(prices: &[u32], clickable: &[bool], budget: u32, price: u32) -> u32 {
    let mut left = budget;
    let mut clicks = 0;
    for (&x, &c) in prices.iter().zip(clickable) {
        if price <= left && x <= price && c {
            left -= x;
            clicks += 1;
        }
    }
    clicks
}

/// Probability of one censored sample under `cells`.
pub fn sample_probability(sample: &CensoredSample, cells: &[f64]) -> f64 {
    let s = cells.len() - 1;
    let k = sample.bound() as usize;
    match sample.kind() {
        CensorKind::Direct => {
            let o = sample.observed() as usize;
            if o <= s {
                cells[o - 1]
            } else {
                cells[s]
            }
        }
        // price >= k
        CensorKind::RightCensored => cells[(k - 1).min(s)..].iter().sum(),
        // price <= k - 1, within the support
        CensorKind::LeftCensored => cells[..(k - 1).min(s)].iter().sum(),
    }
}

pub fn log_likelihood(samples: &[CensoredSample], cells: &[f64]) -> f64 {
    samples
        .iter()
        .map(|smp| sample_probability(smp, cells).ln())
        .sum()
}

/// Largest log-likelihood over the simplex of `cells` cells with step
/// `1 / steps`.
pub fn grid_max_log_likelihood(samples: &[CensoredSample], n_cells: usize, steps: u32) -> f64 {
    fn rec(
        samples: &[CensoredSample],
        cells: &mut Vec<f64>,
        n_cells: usize,
        left: u32,
        steps: u32,
        best: &mut f64,
    ) {
        if cells.len() == n_cells - 1 {
            cells.push(f64::from(left) / f64::from(steps));
            let ll = log_likelihood(samples, cells);
            if ll > *best {
                *best = ll;
            }
            cells.pop();
            return;
        }
        for units in 0..=left {
            cells.push(f64::from(units) / f64::from(steps));
            rec(samples, cells, n_cells, left - units, steps, best);
            cells.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(
        samples,
        &mut Vec::with_capacity(n_cells),
        n_cells,
        steps,
        steps,
        &mut best,
    );
    best
}

/// Cells of an estimator output: masses of `1..=S` followed by the above bucket.
pub fn cells_of(pmf: &adbudget_core::PricePmf) -> Cells {
    let mut cells = pmf.mass().to_vec();
    cells.push(pmf.above_mass());
    cells
}

/// Random sample with every bound in `1..=S + 1`, so that every event lies
/// within the cells of a support-`S` estimate.
pub fn random_sample<R: Rng>(rng: &mut R, support: u32, kinds: &[CensorKind]) -> CensoredSample {
    match kinds[rng.gen_range(0..kinds.len())] {
        CensorKind::Direct => {
            let k = rng.gen_range(2..=support + 1);
            CensoredSample::direct(rng.gen_range(1..k), k).unwrap()
        }
        CensorKind::RightCensored => {
            CensoredSample::right_censored(rng.gen_range(1..=support + 1)).unwrap()
        }
        CensorKind::LeftCensored => {
            CensoredSample::left_censored(rng.gen_range(2..=support + 1)).unwrap()
        }
    }
}

/// Random weights over `1..=support`, some of them zero.
pub fn random_weights<R: Rng>(rng: &mut R, support: u32) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..support)
            .map(|_| {
                if rng.gen_bool(0.25) {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        if w.iter().any(|&x| x > 0.0) {
            return w;
        }
    }
}
