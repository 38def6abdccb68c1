//! Experiment configuration, tournament runs and report files.
//!
//! Configurations are flat `key = value` text. Blank lines and `#` comments
//! are ignored. Policy hyperparameters live under
//! `policy.<name>.<param>`, market parameters under `market.<param>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::censored::TurnbullOptions;
use crate::distribution::{make_family, Family, PricePmf};
use crate::error::{Error, Result};
use crate::harness::{
    competitive_ratio, convergence_curve, cumulative_period_ratios, offline_optimal,
    run_simulation, SimulationRun,
};
use crate::market::{load_replay, ReplayMarket, ReplaySequence, StochasticMarket};
use crate::policies::{CtrModel, PolicyContext, PolicySpec, QLearningParams, ResolveCadence};
use crate::stats;
use crate::value_iteration::{self, Calibration};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Stochastic,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetSpec {
    Fixed(u32),
    /// Smallest budget whose optimal expected clicks reach `fraction * T`.
    Calibrated {
        fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarketSource {
    Family(Family),
    Replay(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub budget: BudgetSpec,
    pub horizon: u32,
    pub periods: u32,
    pub trials: u32,
    pub seed: u64,
    /// Click-through rate of the stochastic market; replay files carry their own clicks.
    pub ctr: f64,
    pub market: MarketSource,
    pub policies: Vec<PolicySpec>,
    /// Stochastic mode reports the ratio of this (one-based) period's clicks.
    pub report_period: u32,
    /// All policies in a trial see the same market realization.
    pub paired: bool,
}

impl ExperimentConfig {
    /// A stochastic experiment with the standard defaults: `T = 100`, ten
    /// periods, twenty trials, budget calibrated to a tenth of the auctions.
    pub fn stochastic(family: Family, policies: Vec<PolicySpec>) -> Self {
        Self {
            mode: Mode::Stochastic,
            budget: BudgetSpec::Calibrated { fraction: 0.1 },
            horizon: 100,
            periods: 10,
            trials: 20,
            seed: 0,
            ctr: 1.0,
            market: MarketSource::Family(family),
            policies,
            report_period: 2,
            paired: true,
        }
    }

    pub fn replay(path: impl Into<PathBuf>, policies: Vec<PolicySpec>) -> Self {
        Self {
            mode: Mode::Replay,
            market: MarketSource::Replay(path.into()),
            ..Self::stochastic(Family::Uniform { lo: 1, hi: 1 }, policies)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses a configuration; relative replay paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;

        let mode = match kv.take("mode").as_deref() {
            None | Some("stochastic") => Mode::Stochastic,
            Some("replay") => Mode::Replay,
            Some(other) => {
                return Err(cfg_err(format!(
                    "mode `{other}` is not stochastic or replay"
                )))
            }
        };
        let budget = match (kv.take("budget"), kv.take("budget_fraction")) {
            (Some(_), Some(_)) => {
                return Err(cfg_err(
                    "set either `budget` or `budget_fraction`, not both",
                ))
            }
            (Some(b), None) => BudgetSpec::Fixed(parse_num("budget", &b)?),
            (None, f) => {
                let fraction: f64 = match f {
                    Some(f) => parse_num("budget_fraction", &f)?,
                    None => 0.1,
                };
                BudgetSpec::Calibrated { fraction }
            }
        };
        let horizon = kv.num_or("horizon", 100)?;
        let periods = kv.num_or("periods", 10)?;
        let trials = kv.num_or("trials", 20)?;
        let seed = kv.num_or("seed", 0)?;
        let ctr = kv.num_or("ctr", 1.0)?;
        let report_period = kv.num_or("report_period", 2.min(periods.max(1)))?;
        let paired = match kv.take("pairing").as_deref() {
            None | Some("paired") => true,
            Some("unpaired") => false,
            Some(other) => {
                return Err(cfg_err(format!(
                    "pairing `{other}` is not paired or unpaired"
                )))
            }
        };

        let replay = kv.take("market.replay");
        let family_name = kv.take("market.family");
        let market = match (mode, replay, family_name) {
            (_, Some(_), Some(_)) => {
                return Err(cfg_err(
                    "set exactly one of `market.replay` and `market.family`",
                ))
            }
            (Mode::Replay, Some(p), None) => MarketSource::Replay(base_dir.join(p)),
            (Mode::Stochastic, None, Some(name)) => {
                MarketSource::Family(parse_family(&name, &mut kv)?)
            }
            (Mode::Replay, _, _) => return Err(cfg_err("replay mode needs `market.replay`")),
            (Mode::Stochastic, _, _) => {
                return Err(cfg_err("stochastic mode needs `market.family`"))
            }
        };

        let names = kv
            .take("policies")
            .ok_or_else(|| cfg_err("`policies` is required"))?;
        let mut policies = Vec::new();
        for name in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let spec = parse_policy(name, &mut kv)?;
            if policies
                .iter()
                .any(|p: &PolicySpec| p.name() == spec.name())
            {
                return Err(cfg_err(format!("policy `{}` listed twice", spec.name())));
            }
            policies.push(spec);
        }

        if let Some((key, line)) = kv.leftover() {
            return Err(cfg_err(format!(
                "line {line}: unknown or unused key `{key}`"
            )));
        }
        let config = Self {
            mode,
            budget,
            horizon,
            periods,
            trials,
            seed,
            ctr,
            market,
            policies,
            report_period,
            paired,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("horizon", self.horizon),
            ("periods", self.periods),
            ("trials", self.trials),
        ] {
            if v == 0 {
                return Err(cfg_err(format!("`{name}` must be at least 1")));
            }
        }
        if let BudgetSpec::Calibrated { fraction } = self.budget {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(cfg_err(format!(
                    "`budget_fraction` {fraction} is outside (0, 1)"
                )));
            }
        }
        if !(self.ctr > 0.0 && self.ctr <= 1.0) {
            return Err(cfg_err(format!("`ctr` {} is outside (0, 1]", self.ctr)));
        }
        if self.report_period == 0 || self.report_period > self.periods {
            return Err(cfg_err(format!(
                "`report_period` {} is outside 1..={}",
                self.report_period, self.periods
            )));
        }
        if self.policies.is_empty() {
            return Err(cfg_err("`policies` lists no policy"));
        }
        match (&self.market, self.mode) {
            (MarketSource::Family(f), Mode::Stochastic) => {
                make_family(f)?;
            }
            (MarketSource::Replay(_), Mode::Replay) => {
                if let Some(p) = self.policies.iter().find(|p| p.needs_true_distribution()) {
                    return Err(cfg_err(format!(
                        "policy `{}` needs a known distribution and cannot run on replay data",
                        p.name()
                    )));
                }
            }
            _ => return Err(cfg_err("market source does not match mode")),
        }
        Ok(())
    }

    /// The fully resolved configuration, defaults included, in the input format.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line(
            "mode",
            match self.mode {
                Mode::Stochastic => "stochastic",
                Mode::Replay => "replay",
            }
            .into(),
        );
        match self.budget {
            BudgetSpec::Fixed(b) => line("budget", b.to_string()),
            BudgetSpec::Calibrated { fraction } => line("budget_fraction", fraction.to_string()),
        }
        line("horizon", self.horizon.to_string());
        line("periods", self.periods.to_string());
        line("trials", self.trials.to_string());
        line("seed", self.seed.to_string());
        line("ctr", self.ctr.to_string());
        line("report_period", self.report_period.to_string());
        line(
            "pairing",
            if self.paired { "paired" } else { "unpaired" }.into(),
        );
        match &self.market {
            MarketSource::Replay(p) => line("market.replay", p.display().to_string()),
            MarketSource::Family(f) => {
                line("market.family", f.name().into());
                for (k, v) in family_params(f) {
                    line(&format!("market.{k}"), v);
                }
            }
        }
        line(
            "policies",
            self.policies
                .iter()
                .map(|p| p.name())
                .collect::<Vec<_>>()
                .join(", "),
        );
        for p in &self.policies {
            for (k, v) in policy_params(p) {
                line(&format!("policy.{}.{k}", p.name()), v);
            }
        }
        out
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| cfg_err(format!("`{key}`: cannot parse `{value}`")))
}

struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (value.trim().to_string(), i + 1))
                .is_some()
            {
                return Err(cfg_err(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    fn num_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            Some(v) => parse_num(key, &v),
            None => Ok(default),
        }
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self
            .take(key)
            .ok_or_else(|| cfg_err(format!("`{key}` is required")))?;
        parse_num(key, &v)
    }

    fn leftover(&self) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .min_by_key(|(_, (_, line))| *line)
            .map(|(k, (_, line))| (k.as_str(), *line))
    }
}

fn parse_family(name: &str, kv: &mut KeyValues) -> Result<Family> {
    Ok(match name {
        "uniform" => Family::Uniform {
            lo: kv.num("market.lo")?,
            hi: kv.num("market.hi")?,
        },
        "geometric" => Family::Geometric {
            ratio: kv.num("market.ratio")?,
            support_max: kv.num("market.support_max")?,
        },
        "bimodal_gap" => Family::BimodalGap {
            low: kv.num("market.low")?,
            high: kv.num("market.high")?,
            low_prob: kv.num("market.low_prob")?,
        },
        "bursty" => Family::Bursty {
            base_lo: kv.num("market.base_lo")?,
            base_hi: kv.num("market.base_hi")?,
            spike_lo: kv.num("market.spike_lo")?,
            spike_hi: kv.num("market.spike_hi")?,
            spike_prob: kv.num("market.spike_prob")?,
        },
        other => {
            return Err(cfg_err(format!(
                "market.family `{other}` is not one of uniform, geometric, bimodal_gap, bursty"
            )))
        }
    })
}

fn family_params(f: &Family) -> Vec<(&'static str, String)> {
    match *f {
        Family::Uniform { lo, hi } => vec![("lo", lo.to_string()), ("hi", hi.to_string())],
        Family::Geometric { ratio, support_max } => vec![
            ("ratio", ratio.to_string()),
            ("support_max", support_max.to_string()),
        ],
        Family::BimodalGap {
            low,
            high,
            low_prob,
        } => vec![
            ("low", low.to_string()),
            ("high", high.to_string()),
            ("low_prob", low_prob.to_string()),
        ],
        Family::Bursty {
            base_lo,
            base_hi,
            spike_lo,
            spike_hi,
            spike_prob,
        } => vec![
            ("base_lo", base_lo.to_string()),
            ("base_hi", base_hi.to_string()),
            ("spike_lo", spike_lo.to_string()),
            ("spike_hi", spike_hi.to_string()),
            ("spike_prob", spike_prob.to_string()),
        ],
    }
}

fn parse_turnbull(prefix: &str, kv: &mut KeyValues) -> Result<TurnbullOptions> {
    let d = TurnbullOptions::default();
    Ok(TurnbullOptions {
        tol: kv.num_or(&format!("{prefix}.turnbull_tol"), d.tol)?,
        max_iter: kv.num_or(&format!("{prefix}.turnbull_max_iter"), d.max_iter)?,
    })
}

fn parse_policy(name: &str, kv: &mut KeyValues) -> Result<PolicySpec> {
    let spec = PolicySpec::default_for(name)?;
    let prefix = format!("policy.{}", spec.name());
    let key = |k: &str| format!("{prefix}.{k}");
    Ok(match spec {
        PolicySpec::GreedyProductLimit { resolve, .. } => PolicySpec::GreedyProductLimit {
            resolve: match kv.take(&key("resolve")).as_deref() {
                None => resolve,
                Some("auction") => ResolveCadence::Auction,
                Some("period") => ResolveCadence::Period,
                Some(other) => {
                    return Err(cfg_err(format!(
                        "`{}`: `{other}` is not auction or period",
                        key("resolve")
                    )))
                }
            },
            turnbull: parse_turnbull(&prefix, kv)?,
        },
        PolicySpec::LuekerLearn { .. } => PolicySpec::LuekerLearn {
            turnbull: parse_turnbull(&prefix, kv)?,
        },
        PolicySpec::FixedPrice { price, strict } => PolicySpec::FixedPrice {
            price: kv.num_or(&key("price"), price)?,
            strict: kv.num_or(&key("strict"), strict)?,
        },
        PolicySpec::FixedPriceSearch { grid_ratio, gamma } => PolicySpec::FixedPriceSearch {
            grid_ratio: kv.num_or(&key("grid_ratio"), grid_ratio)?,
            gamma: kv.num_or(&key("gamma"), gamma)?,
        },
        PolicySpec::QLearning(d) => PolicySpec::QLearning(QLearningParams {
            alpha: kv.num_or(&key("alpha"), d.alpha)?,
            epsilon: kv.num_or(&key("epsilon"), d.epsilon)?,
            epsilon_decay: kv.num_or(&key("epsilon_decay"), d.epsilon_decay)?,
        }),
        PolicySpec::BudgetSmoothing { .. } => PolicySpec::BudgetSmoothing {
            scale: match kv.take(&key("scale")).as_deref() {
                None | Some("auto") => None,
                Some(v) => Some(parse_num(&key("scale"), v)?),
            },
        },
        other @ (PolicySpec::KnownOptimal | PolicySpec::KnownLueker) => other,
    })
}

fn policy_params(p: &PolicySpec) -> Vec<(&'static str, String)> {
    let turnbull = |t: &TurnbullOptions| {
        vec![
            ("turnbull_tol", t.tol.to_string()),
            ("turnbull_max_iter", t.max_iter.to_string()),
        ]
    };
    match p {
        PolicySpec::GreedyProductLimit {
            resolve,
            turnbull: t,
        } => {
            let mut v = vec![(
                "resolve",
                match resolve {
                    ResolveCadence::Auction => "auction",
                    ResolveCadence::Period => "period",
                }
                .to_string(),
            )];
            v.extend(turnbull(t));
            v
        }
        PolicySpec::LuekerLearn { turnbull: t } => turnbull(t),
        PolicySpec::FixedPrice { price, strict } => {
            vec![("price", price.to_string()), ("strict", strict.to_string())]
        }
        PolicySpec::FixedPriceSearch { grid_ratio, gamma } => vec![
            ("grid_ratio", grid_ratio.to_string()),
            ("gamma", gamma.to_string()),
        ],
        PolicySpec::QLearning(q) => vec![
            ("alpha", q.alpha.to_string()),
            ("epsilon", q.epsilon.to_string()),
            ("epsilon_decay", q.epsilon_decay.to_string()),
        ],
        PolicySpec::BudgetSmoothing { scale } => vec![(
            "scale",
            scale.map_or_else(|| "auto".to_string(), |s| s.to_string()),
        )],
        PolicySpec::KnownOptimal | PolicySpec::KnownLueker => Vec::new(),
    }
}

/// SplitMix64 over a sequence of words; used to derive independent seeds.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub name: String,
    /// One run per trial.
    pub runs: Vec<SimulationRun>,
    /// One competitive ratio per trial.
    pub ratios: Vec<f64>,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    /// Per period, mean over trials: `clicks_p / V` in stochastic mode,
    /// cumulative `A_p / O` in replay mode.
    pub period_ratios: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub budget: u32,
    pub calibration: Option<Calibration>,
    /// `V(B, T)` in stochastic mode; the summed per-period offline optimum in
    /// replay mode.
    pub reference: f64,
    pub policies: Vec<PolicyOutcome>,
    /// Market seed per trial and policy (identical across policies when paired).
    pub market_seeds: Vec<Vec<u64>>,
    pub truncated: bool,
}

impl ExperimentResult {
    pub fn policy(&self, name: &str) -> Option<&PolicyOutcome> {
        self.policies.iter().find(|p| p.name == name)
    }
}

fn resolve_budget(
    spec: BudgetSpec,
    pmf: &PricePmf,
    horizon: u32,
    ctr: f64,
) -> Result<(u32, Option<Calibration>)> {
    match spec {
        BudgetSpec::Fixed(b) => Ok((b, None)),
        BudgetSpec::Calibrated { fraction } => {
            let c = value_iteration::calibrate_budget(pmf, horizon, fraction, ctr)?;
            if !c.reached {
                log::warn!(
                    "no budget reaches {fraction} clicks per auction; using B = {} (value {:.3})",
                    c.budget,
                    c.value
                );
            }
            Ok((c.budget, Some(c)))
        }
    }
}

/// Runs every configured policy over every trial.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    match &config.market {
        MarketSource::Family(f) => run_stochastic(config, make_family(f)?),
        MarketSource::Replay(path) => run_replay(config, &load_replay(path)?),
    }
}

/// Stochastic-mode experiment against an explicit distribution.
pub fn run_stochastic(config: &ExperimentConfig, pmf: PricePmf) -> Result<ExperimentResult> {
    let (budget, calibration) = resolve_budget(config.budget, &pmf, config.horizon, config.ctr)?;
    let reference = value_iteration::solve(&pmf, budget, config.horizon, config.ctr)?
        .value(budget, config.horizon)?;
    if reference <= 0.0 {
        return Err(Error::Config(format!(
            "budget {budget} buys no clicks in expectation; no ratio can be formed"
        )));
    }
    let n_policies = config.policies.len();
    let market_seeds: Vec<Vec<u64>> = (0..config.trials as u64)
        .map(|trial| {
            (0..n_policies as u64)
                .map(|i| {
                    let lane = if config.paired { 0 } else { i + 1 };
                    derive_seed(config.seed, &[1, trial, lane])
                })
                .collect()
        })
        .collect();

    let trials: Vec<Vec<SimulationRun>> = market_seeds
        .par_iter()
        .enumerate()
        .map(|(trial, seeds)| {
            config
                .policies
                .iter()
                .zip(seeds)
                .enumerate()
                .map(|(i, (spec, &market_seed))| {
                    let ctx = PolicyContext {
                        budget,
                        horizon: config.horizon,
                        ctr: CtrModel::Known(config.ctr),
                        true_pmf: Some(&pmf),
                        true_ctr: config.ctr,
                        seed: derive_seed(config.seed, &[2, trial as u64, i as u64]),
                    };
                    let mut policy = spec.build(&ctx)?;
                    let mut market = StochasticMarket::new(pmf.clone(), config.ctr, market_seed)?;
                    run_simulation(
                        policy.as_mut(),
                        &mut market,
                        budget,
                        config.horizon,
                        config.periods,
                    )
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let report = config.report_period as usize - 1;
    let policies = collect_outcomes(config, trials, |run| {
        let per_period = run
            .periods
            .iter()
            .map(|p| competitive_ratio(f64::from(p.clicks), reference))
            .collect::<Result<Vec<_>>>()?;
        let ratio = per_period.get(report).copied().unwrap_or(0.0);
        Ok((ratio, per_period))
    })?;
    Ok(ExperimentResult {
        config: config.clone(),
        budget,
        calibration,
        reference,
        policies,
        market_seeds,
        truncated: false,
    })
}

/// Replay-mode experiment over a recorded sequence.
pub fn run_replay(
    config: &ExperimentConfig,
    sequence: &ReplaySequence,
) -> Result<ExperimentResult> {
    let click_rate = sequence.click_rate();
    if click_rate == 0.0 {
        return Err(Error::Config(format!(
            "replay `{}` contains no clicks",
            sequence.source()
        )));
    }
    let (budget, calibration) = resolve_budget(
        config.budget,
        &sequence.empirical_pmf(),
        config.horizon,
        click_rate,
    )?;
    let plan = sequence.period_plan(config.horizon, config.periods);
    let used = plan.full * config.horizon as usize + plan.partial.unwrap_or(0);
    let reference: u32 = sequence.entries()[..used]
        .chunks(config.horizon as usize)
        .map(|chunk| offline_optimal(chunk, budget))
        .sum();
    let reference = f64::from(reference);
    if reference <= 0.0 {
        return Err(Error::Config(format!(
            "budget {budget} buys no clicks even in hindsight"
        )));
    }

    let trials: Vec<Vec<SimulationRun>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            config
                .policies
                .iter()
                .enumerate()
                .map(|(i, spec)| {
                    let ctx = PolicyContext {
                        budget,
                        horizon: config.horizon,
                        ctr: CtrModel::Empirical,
                        true_pmf: None,
                        true_ctr: click_rate,
                        seed: derive_seed(config.seed, &[2, trial, i as u64]),
                    };
                    let mut policy = spec.build(&ctx)?;
                    let mut market = ReplayMarket::new(sequence);
                    run_simulation(
                        policy.as_mut(),
                        &mut market,
                        budget,
                        config.horizon,
                        config.periods,
                    )
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let policies = collect_outcomes(config, trials, |run| {
        let cumulative = cumulative_period_ratios(run, reference)?;
        Ok((cumulative.last().copied().unwrap_or(0.0), cumulative))
    })?;
    Ok(ExperimentResult {
        config: config.clone(),
        budget,
        calibration,
        reference,
        policies,
        market_seeds: Vec::new(),
        truncated: plan.is_truncated(),
    })
}

fn collect_outcomes<F>(
    config: &ExperimentConfig,
    trials: Vec<Vec<SimulationRun>>,
    score: F,
) -> Result<Vec<PolicyOutcome>>
where
    F: Fn(&SimulationRun) -> Result<(f64, Vec<f64>)>,
{
    let mut by_policy: Vec<Vec<SimulationRun>> = vec![Vec::new(); config.policies.len()];
    for runs in trials {
        for (i, run) in runs.into_iter().enumerate() {
            by_policy[i].push(run);
        }
    }
    config
        .policies
        .iter()
        .zip(by_policy)
        .map(|(spec, runs)| {
            let mut ratios = Vec::with_capacity(runs.len());
            let mut series: Vec<Vec<f64>> = Vec::new();
            for run in &runs {
                let (ratio, per_period) = score(run)?;
                ratios.push(ratio);
                for (p, r) in per_period.into_iter().enumerate() {
                    if series.len() <= p {
                        series.push(Vec::new());
                    }
                    series[p].push(r);
                }
            }
            Ok(PolicyOutcome {
                name: spec.name().to_string(),
                mean_ratio: stats::mean(&ratios),
                std_ratio: stats::std_dev(&ratios),
                period_ratios: series.iter().map(|s| stats::mean(s)).collect(),
                ratios,
                runs,
            })
        })
        .collect()
}

/// Writes `summary.csv`, `curves.csv`, `periods.csv`, `ttest.csv`,
/// `metadata.txt` and `config.echo` into `out_dir`.
pub fn emit_reports(result: &ExperimentResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if result.policies.is_empty() || result.policies.iter().any(|p| p.runs.is_empty()) {
        return Err(Error::EmptyResult("no policy runs to report".into()));
    }
    let files = [
        ("summary.csv", summary_csv(result)),
        ("curves.csv", curves_csv(result)),
        ("periods.csv", periods_csv(result)),
        ("ttest.csv", ttest_csv(result)),
        ("metadata.txt", metadata(result)),
        ("config.echo", result.config.echo()),
    ];
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = out_dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

pub fn summary_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("policy,mean_ratio,std\n");
    for p in &result.policies {
        let _ = writeln!(out, "{},{:.6},{:.6}", p.name, p.mean_ratio, p.std_ratio);
    }
    out
}

fn mean_curve(runs: &[SimulationRun]) -> Vec<(usize, usize, f64, f64, f64)> {
    let curves: Vec<_> = runs.iter().map(convergence_curve).collect();
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    let n = curves.len() as f64;
    (0..len)
        .map(|i| {
            let first = &curves[0][i];
            let clicks = curves
                .iter()
                .map(|c| f64::from(c[i].cumulative_clicks))
                .sum::<f64>()
                / n;
            let offline = curves
                .iter()
                .map(|c| f64::from(c[i].offline_cumulative))
                .sum::<f64>()
                / n;
            (
                first.period,
                first.auction,
                clicks,
                offline,
                first.elapsed as f64,
            )
        })
        .collect()
}

fn curves_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("policy,period,auction,cumulative_clicks,normalized\n");
    let mut offline_rows = None;
    for p in &result.policies {
        let curve = mean_curve(&p.runs);
        for &(period, auction, clicks, _, elapsed) in &curve {
            let _ = writeln!(
                out,
                "{},{period},{auction},{clicks:.4},{:.6}",
                p.name,
                clicks / elapsed
            );
        }
        if offline_rows.is_none() {
            offline_rows = Some(curve);
        }
    }
    let shared_market = result.config.paired || result.config.mode == Mode::Replay;
    if let (true, Some(curve)) = (shared_market, offline_rows) {
        for (period, auction, _, offline, elapsed) in curve {
            let _ = writeln!(
                out,
                "offline_optimal,{period},{auction},{offline:.4},{:.6}",
                offline / elapsed
            );
        }
    }
    out
}

fn periods_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("policy,period,mean_ratio\n");
    for p in &result.policies {
        for (i, r) in p.period_ratios.iter().enumerate() {
            let _ = writeln!(out, "{},{},{r:.6}", p.name, i + 1);
        }
    }
    out
}

fn ttest_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("policy,baseline,t_statistic,p_value\n");
    let base = &result.policies[0];
    for p in &result.policies[1..] {
        match stats::welch_t_test(&base.ratios, &p.ratios) {
            Some(t) => {
                let _ = writeln!(out, "{},{},{:.6},{:.6e}", p.name, base.name, t.t, t.p);
            }
            None => {
                let _ = writeln!(out, "{},{},NA,NA", p.name, base.name);
            }
        }
    }
    out
}

fn metadata(result: &ExperimentResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "budget = {}", result.budget);
    if let Some(c) = result.calibration {
        let _ = writeln!(out, "calibration_reached = {}", c.reached);
        let _ = writeln!(out, "calibration_value = {:.9}", c.value);
    }
    let reference = match result.config.mode {
        Mode::Stochastic => "value_function",
        Mode::Replay => "offline_optimal_per_period_sum",
    };
    let _ = writeln!(out, "reference_kind = {reference}");
    let _ = writeln!(out, "reference = {:.9}", result.reference);
    let _ = writeln!(out, "truncated = {}", result.truncated);
    let _ = writeln!(
        out,
        "offline_curve = completed periods use budget B; the current period uses floor(B * j / T) after j auctions"
    );
    for (trial, seeds) in result.market_seeds.iter().enumerate() {
        let joined: Vec<String> = seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "market_seeds.{trial} = {}", joined.join(","));
    }
    out
}

/// Mixed-family price distributions for policy tournaments.
///
/// Families rotate through uniform, geometric, bimodal and bursty shapes
/// with parameters drawn from `seed`.
pub fn synthetic_suite(count: usize, seed: u64) -> Vec<Family> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| match i % 4 {
            0 => {
                let lo = rng.gen_range(2..=5);
                Family::Uniform {
                    lo,
                    hi: lo + rng.gen_range(10..=30),
                }
            }
            1 => Family::Geometric {
                ratio: rng.gen_range(0.92..0.98),
                support_max: rng.gen_range(30..=60),
            },
            2 => {
                let low = rng.gen_range(2..=5);
                Family::BimodalGap {
                    low,
                    high: low + rng.gen_range(10..=40),
                    low_prob: rng.gen_range(0.15..0.5),
                }
            }
            _ => {
                let base_lo = rng.gen_range(2..=4);
                let base_hi = base_lo + rng.gen_range(5..=15);
                let spike_lo = base_hi * 3;
                Family::Bursty {
                    base_lo,
                    base_hi,
                    spike_lo,
                    spike_hi: spike_lo + rng.gen_range(5..=20),
                    spike_prob: rng.gen_range(0.05..0.15),
                }
            }
        })
        .collect()
}
