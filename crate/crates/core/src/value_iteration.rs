//! Exact dynamic-programming solution of the budgeted bidding MDP.
//!
//! States are `(b, t)`: remaining budget and remaining auctions. Bidding `a`
//! wins whenever the market price is at most `a`; a win converts into a
//! charged click with probability `ctr`. The table is filled one horizon
//! layer at a time, and for each state the candidate bids are swept in
//! increasing order so that the expected value of bid `a` is obtained from
//! that of bid `a - 1` by adding one term. That keeps the solve at
//! `O(B * min(B, S) * T)`.

use crate::distribution::PricePmf;
use crate::error::{Error, Result};

/// Two bid values closer than this (relative to their size) are a tie. Ties
/// go to the smallest bid, except that a bid which can win is preferred over
/// abstaining with a zero bid.
const TIE_TOLERANCE: f64 = 1e-12;

/// Optimal expected clicks `V(b, t)` and the chosen optimal bid `π(b, t)`
/// for every `0 <= b <= budget_cap`, `0 <= t <= horizon`.
#[derive(Debug, Clone)]
pub struct ValueTable {
    budget_cap: u32,
    horizon: u32,
    ctr: f64,
    values: Vec<f64>,
    policy: Vec<u32>,
}

impl ValueTable {
    pub fn budget_cap(&self) -> u32 {
        self.budget_cap
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn ctr(&self) -> f64 {
        self.ctr
    }

    fn index(&self, budget: u32, remaining: u32) -> Result<usize> {
        if budget > self.budget_cap || remaining > self.horizon {
            return Err(Error::OutOfRange {
                budget,
                remaining,
                budget_cap: self.budget_cap,
                horizon: self.horizon,
            });
        }
        Ok(remaining as usize * (self.budget_cap as usize + 1) + budget as usize)
    }

    /// Optimal expected clicks from `(budget, remaining)`.
    pub fn value(&self, budget: u32, remaining: u32) -> Result<f64> {
        Ok(self.values[self.index(budget, remaining)?])
    }

    /// Smallest positive bid attaining the optimal value at `(budget, remaining)`,
    /// or 0 when abstaining is strictly better.
    pub fn best_bid(&self, budget: u32, remaining: u32) -> Result<u32> {
        Ok(self.policy[self.index(budget, remaining)?])
    }

    /// The `V(·, remaining)` column over all budgets.
    pub fn values_at(&self, remaining: u32) -> Result<&[f64]> {
        let start = self.index(0, remaining)?;
        Ok(&self.values[start..start + self.budget_cap as usize + 1])
    }
}

fn check_ctr(ctr: f64) -> Result<()> {
    if ctr > 0.0 && ctr <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field: "ctr",
            reason: format!("{ctr} is outside (0, 1]"),
        })
    }
}

/// Solves the MDP for budgets up to `budget_cap` and horizons up to `horizon`.
pub fn solve(pmf: &PricePmf, budget_cap: u32, horizon: u32, ctr: f64) -> Result<ValueTable> {
    check_ctr(ctr)?;
    let width = budget_cap as usize + 1;
    let layers = horizon as usize + 1;
    let mut values = vec![0.0; width * layers];
    let mut policy = vec![0u32; width * layers];
    let win_probs: Vec<f64> = pmf.mass().iter().map(|m| ctr * m).collect();
    let support = win_probs.len();

    for t in 1..layers {
        let (done, rest) = values.split_at_mut(t * width);
        let prev = &done[(t - 1) * width..];
        let cur = &mut rest[..width];
        let pol = &mut policy[t * width..(t + 1) * width];
        for b in 0..width {
            let stay = prev[b];
            let mut best = stay;
            let mut best_bid = 0;
            let mut win_value = 0.0;
            let mut win_prob = 0.0;
            for a in 1..=b.min(support) {
                let p = win_probs[a - 1];
                if p == 0.0 {
                    continue;
                }
                win_value += p * (1.0 + prev[b - a]);
                win_prob += p;
                let v = win_value + (1.0 - win_prob) * stay;
                let margin = v - best;
                let tol = TIE_TOLERANCE * best.max(1.0);
                if margin > tol || (best_bid == 0 && margin >= -tol) {
                    best = v;
                    best_bid = a as u32;
                }
            }
            cur[b] = best;
            pol[b] = best_bid;
        }
    }

    Ok(ValueTable {
        budget_cap,
        horizon,
        ctr,
        values,
        policy,
    })
}

/// Expected clicks of an arbitrary stationary bid rule, for every state.
///
/// `bid(b, t)` must return a bid no larger than `b`.
pub fn evaluate_policy<F>(
    pmf: &PricePmf,
    budget_cap: u32,
    horizon: u32,
    ctr: f64,
    mut bid: F,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(u32, u32) -> u32,
{
    check_ctr(ctr)?;
    let width = budget_cap as usize + 1;
    let mut layers = vec![vec![0.0; width]];
    for t in 1..=horizon {
        let prev = &layers[t as usize - 1];
        let mut cur = vec![0.0; width];
        for b in 0..=budget_cap {
            let a = bid(b, t);
            if a > b {
                return Err(Error::ContractBreach {
                    policy: "evaluated rule".into(),
                    bid: a,
                    budget: b,
                });
            }
            let mut win_prob = 0.0;
            let mut value = 0.0;
            for delta in 1..=a.min(pmf.support_max()) {
                let p = ctr * pmf.prob(delta);
                win_prob += p;
                value += p * (1.0 + prev[(b - delta) as usize]);
            }
            cur[b as usize] = value + (1.0 - win_prob) * prev[b as usize];
        }
        layers.push(cur);
    }
    Ok(layers)
}

/// Outcome of a budget calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub budget: u32,
    /// Optimal expected clicks per period at `budget`.
    pub value: f64,
    /// False when no budget reaches the target; `budget` is then `T * S`.
    pub reached: bool,
}

/// Smallest budget whose optimal expected clicks over `horizon` auctions
/// reach `fraction * horizon`.
pub fn calibrate_budget(
    pmf: &PricePmf,
    horizon: u32,
    fraction: f64,
    ctr: f64,
) -> Result<Calibration> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter {
            field: "fraction",
            reason: format!("{fraction} is outside (0, 1)"),
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            field: "horizon",
            reason: "must be at least 1".into(),
        });
    }
    check_ctr(ctr)?;
    let target = fraction * f64::from(horizon) - 1e-9;
    let cap = horizon.saturating_mul(pmf.support_max());
    // With unlimited budget every auction is won, so this is the ceiling.
    let ceiling = f64::from(horizon) * ctr * (1.0 - pmf.above_mass());
    if ceiling < target {
        return Ok(Calibration {
            budget: cap,
            value: ceiling,
            reached: false,
        });
    }

    let mut hi = 1u32;
    let table = loop {
        let table = solve(pmf, hi, horizon, ctr)?;
        if table.value(hi, horizon)? >= target {
            break table;
        }
        if hi >= cap {
            return Ok(Calibration {
                budget: cap,
                value: table.value(hi, horizon)?,
                reached: false,
            });
        }
        hi = hi.saturating_mul(2).min(cap);
    };
    let column = table.values_at(horizon)?;
    let budget = column.partition_point(|&v| v < target) as u32;
    Ok(Calibration {
        budget,
        value: column[budget as usize],
        reached: true,
    })
}

/// Largest bid `v <= min(budget, S)` whose expected spend per auction,
/// `ctr * Σ_{a<=v} a p(a)`, fits within `budget / remaining`.
pub fn lueker_threshold_with_ctr(pmf: &PricePmf, budget: u32, remaining: u32, ctr: f64) -> u32 {
    if remaining == 0 || budget == 0 {
        return 0;
    }
    let rate = f64::from(budget) / f64::from(remaining);
    let mut spend = 0.0;
    let mut threshold = 0;
    for a in 1..=budget.min(pmf.support_max()) {
        spend += f64::from(a) * ctr * pmf.prob(a);
        if spend > rate + 1e-12 {
            break;
        }
        threshold = a;
    }
    threshold
}

/// [`lueker_threshold_with_ctr`] with every win converting to a click.
pub fn lueker_threshold(pmf: &PricePmf, budget: u32, remaining: u32) -> u32 {
    lueker_threshold_with_ctr(pmf, budget, remaining, 1.0)
}
