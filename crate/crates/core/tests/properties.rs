mod common;

use std::path::Path;

use adbudget_core::censored::{product_limit, CensoredSample, ObservationLog};
use adbudget_core::distribution::{make_family, Family, PricePmf};
use adbudget_core::experiment::{BudgetSpec, ExperimentConfig, Mode};
use adbudget_core::harness::run_simulation;
use adbudget_core::market::{resolve_auction, AuctionOutcome, Market, StochasticMarket};
use adbudget_core::policies::{
    BidPolicy, CtrModel, GreedyProductLimit, PolicyContext, PolicySpec, ResolveCadence,
    POLICY_NAMES,
};
use adbudget_core::value_iteration::solve;
use adbudget_core::TurnbullOptions;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(
    name: &str,
    pmf: &PricePmf,
    budget: u32,
    horizon: u32,
    ctr: f64,
    seed: u64,
) -> Box<dyn BidPolicy> {
    let ctx = PolicyContext {
        budget,
        horizon,
        ctr: CtrModel::Known(ctr),
        true_pmf: Some(pmf),
        true_ctr: ctr,
        seed,
    };
    PolicySpec::default_for(name).unwrap().build(&ctx).unwrap()
}

#[test]
fn every_policy_bids_within_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for name in POLICY_NAMES {
        let mut auctions = 0;
        while auctions < 10_000 {
            let budget = rng.gen_range(0..=60);
            let horizon = rng.gen_range(1..=40);
            let ctr = if rng.gen_bool(0.5) {
                1.0
            } else {
                rng.gen_range(0.2..1.0)
            };
            let hi = rng.gen_range(1..=30);
            let pmf = PricePmf::uniform(rng.gen_range(1..=hi), hi).unwrap();
            let mut policy = build(name, &pmf, budget, horizon, ctr, rng.gen());
            let mut market = StochasticMarket::new(pmf, ctr, rng.gen()).unwrap();
            // run_simulation rejects any bid above the remaining budget
            let run = run_simulation(policy.as_mut(), &mut market, budget, horizon, 3)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            for period in &run.periods {
                let paid: u32 = period.auctions.iter().map(|a| a.feedback.price_paid).sum();
                assert_eq!(paid, period.spend);
                assert!(period.spend <= budget, "{name} overspent");
                assert_eq!(period.remaining_budget(), budget - period.spend);
                for a in &period.auctions {
                    assert!(a.feedback.price_paid <= a.bid);
                }
            }
            auctions += 3 * horizon;
        }
    }
}

#[test]
fn gpl_is_a_function_of_its_feedback() {
    let pmf = make_family(&Family::BimodalGap {
        low: 2,
        high: 9,
        low_prob: 0.4,
    })
    .unwrap();
    let mut market = StochasticMarket::new(pmf, 0.7, 3).unwrap();
    let outcomes: Vec<AuctionOutcome> = (0..300).map(|_| market.next_outcome().unwrap()).collect();

    let play = || {
        let mut gpl = GreedyProductLimit::new(
            15,
            CtrModel::Empirical,
            ResolveCadence::Auction,
            TurnbullOptions::default(),
        );
        let mut budget = 15;
        let mut bids = Vec::new();
        for (i, o) in outcomes.iter().enumerate() {
            let remaining = 30 - (i as u32 % 30);
            if remaining == 30 {
                budget = 15;
                gpl.begin_period(budget, 30);
            }
            let bid = gpl.next_bid(budget, remaining);
            let fb = resolve_auction(*o, bid, budget);
            budget = fb.budget_after;
            gpl.observe(&fb).unwrap();
            bids.push(bid);
        }
        (bids, gpl.planning_pmf().clone())
    };
    assert_eq!(play(), play());
}

#[test]
fn frozen_gpl_plays_the_optimal_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let support = rng.gen_range(1..=12);
        let pmf = PricePmf::from_weights(&common::random_weights(&mut rng, support)).unwrap();
        let ctr = rng.gen_range(0.3..=1.0);
        let (budget, horizon) = (rng.gen_range(1..=25), rng.gen_range(1..=15));
        let table = solve(&pmf, budget, horizon, ctr).unwrap();
        let mut policy = GreedyProductLimit::frozen(pmf, ctr);
        for b in 0..=budget {
            for t in 0..=horizon {
                assert_eq!(
                    policy.next_bid(b, t),
                    table.best_bid(b, t).unwrap(),
                    "state ({b}, {t})"
                );
            }
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

#[test]
fn product_limit_converges_to_the_truth() {
    let truth = make_family(&Family::Geometric {
        ratio: 0.8,
        support_max: 12,
    })
    .unwrap();
    let tv_at = |n: usize| {
        let errors = (0..20)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let log: ObservationLog = (0..n)
                    .map(|_| {
                        let price = truth.sample(&mut rng).unwrap();
                        let bid = rng.gen_range(1..=12);
                        if price <= bid {
                            CensoredSample::direct(price, bid + 1).unwrap()
                        } else {
                            CensoredSample::right_censored(bid + 1).unwrap()
                        }
                    })
                    .collect();
                product_limit(&log, 12).unwrap().total_variation(&truth)
            })
            .collect();
        median(errors)
    };
    let (small, mid, large) = (tv_at(100), tv_at(1_000), tv_at(10_000));
    assert!(small > mid && mid > large, "{small} {mid} {large}");
    assert!(large < 0.05);
}

#[test]
fn replay_runs_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..400)
        .map(|i| format!("{},{}\n", 1 + (i * 7) % 13, i % 3 != 0))
        .collect();
    let rows = rows.replace("true", "1").replace("false", "0");
    std::fs::write(dir.path().join("log.csv"), format!("price,click\n{rows}")).unwrap();
    let text = "mode = replay\nmarket.replay = log.csv\nhorizon = 40\nperiods = 12\ntrials = 2\npolicies = gpl, lueker, fps\n";
    let cfg = ExperimentConfig::parse(text, dir.path()).unwrap();
    let a = adbudget_core::experiment::run_experiment(&cfg).unwrap();
    let b = adbudget_core::experiment::run_experiment(&cfg).unwrap();
    assert!(a.truncated);
    for (pa, pb) in a.policies.iter().zip(&b.policies) {
        assert_eq!(pa.ratios, pb.ratios);
        assert_eq!(pa.runs[0].periods.len(), 10);
    }
}

fn family_strategy() -> impl Strategy<Value = Family> {
    prop_oneof![
        (1u32..10, 0u32..20).prop_map(|(lo, w)| Family::Uniform { lo, hi: lo + w }),
        (0.05f64..0.99, 1u32..40)
            .prop_map(|(ratio, support_max)| Family::Geometric { ratio, support_max }),
        (1u32..5, 1u32..40, 0.0f64..=1.0).prop_map(|(low, gap, low_prob)| Family::BimodalGap {
            low,
            high: low + gap,
            low_prob
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_echo_round_trips(
        family in family_strategy(),
        horizon in 1u32..500,
        periods in 2u32..20,
        trials in 1u32..50,
        seed in any::<u64>(),
        fixed in proptest::option::of(0u32..1000),
        fraction in 0.01f64..0.99,
        ctr in 0.01f64..=1.0,
        paired in any::<bool>(),
        picks in proptest::sample::subsequence(POLICY_NAMES.to_vec(), 1..POLICY_NAMES.len()),
    ) {
        let mut cfg = ExperimentConfig::stochastic(family, picks.iter().map(|n| PolicySpec::default_for(n).unwrap()).collect());
        cfg.horizon = horizon;
        cfg.periods = periods;
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.ctr = ctr;
        cfg.paired = paired;
        cfg.budget = fixed.map_or(BudgetSpec::Calibrated { fraction }, BudgetSpec::Fixed);
        prop_assume!(cfg.validate().is_ok());
        let back = ExperimentConfig::parse(&cfg.echo(), Path::new("/")).unwrap();
        prop_assert_eq!(back.mode, Mode::Stochastic);
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn offline_optimum_matches_knapsack(
        prices in proptest::collection::vec(1u32..30, 0..40),
        mask in proptest::collection::vec(any::<bool>(), 40),
        budget in 0u32..120,
    ) {
        let clickable = &mask[..prices.len()];
        let outcomes: Vec<AuctionOutcome> = prices
            .iter()
            .zip(clickable)
            .map(|(&market_price, &click_available)| AuctionOutcome { market_price, click_available })
            .collect();
        prop_assert_eq!(
            adbudget_core::harness::offline_optimal(&outcomes, budget),
            common::knapsack_clicks(&prices, clickable, budget)
        );
    }
}
