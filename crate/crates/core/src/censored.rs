//! Nonparametric maximum-likelihood estimation of the market-price
//! distribution from censored observations.
//!
//! Losing an auction at bid `b` only reveals that the price is at least
//! `b + 1` (right censoring); winning an impression that does not convert
//! reveals that the price is at most `b` (left censoring); a charged click
//! reveals the price itself. [`product_limit`] handles direct and
//! right-censored data in closed form. [`turnbull`] runs the self-consistency
//! (EM) iteration and also accepts left-censored samples.

use std::collections::BTreeMap;

use crate::distribution::PricePmf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CensorKind {
    Direct,
    RightCensored,
    LeftCensored,
}

/// One censored observation of a market price.
///
/// `bound` is the censoring point `k`: a direct observation has
/// `observed < bound`, a right-censored one knows only `price >= bound`, and
/// a left-censored one knows only `price < bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensoredSample {
    bound: u32,
    observed: u32,
    kind: CensorKind,
}

impl CensoredSample {
    pub fn direct(observed: u32, bound: u32) -> Result<Self> {
        if observed == 0 || observed >= bound {
            return Err(Error::InvalidObservation(format!(
                "direct observation {observed} must satisfy 1 <= o < k = {bound}"
            )));
        }
        Ok(Self {
            bound,
            observed,
            kind: CensorKind::Direct,
        })
    }

    pub fn right_censored(bound: u32) -> Result<Self> {
        if bound == 0 {
            return Err(Error::InvalidObservation(
                "right-censoring bound must be at least 1".into(),
            ));
        }
        Ok(Self {
            bound,
            observed: bound,
            kind: CensorKind::RightCensored,
        })
    }

    pub fn left_censored(bound: u32) -> Result<Self> {
        if bound < 2 {
            return Err(Error::InvalidObservation(format!(
                "left-censoring bound {bound} leaves no price below it"
            )));
        }
        Ok(Self {
            bound,
            observed: 0,
            kind: CensorKind::LeftCensored,
        })
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    /// The observed value; meaningless for left-censored samples.
    pub fn observed(&self) -> u32 {
        self.observed
    }

    pub fn kind(&self) -> CensorKind {
        self.kind
    }

    /// Probability of this observation under `pmf`. Prices beyond the support
    /// are represented by the above-support bucket.
    pub fn probability(&self, pmf: &PricePmf) -> f64 {
        match self.kind {
            CensorKind::Direct if self.observed > pmf.support_max() => pmf.above_mass(),
            CensorKind::Direct => pmf.prob(self.observed),
            CensorKind::RightCensored => pmf.tail(self.bound - 1),
            CensorKind::LeftCensored => 1.0 - pmf.tail(self.bound - 1),
        }
    }
}

/// Append-only record of censored observations.
#[derive(Debug, Clone, Default)]
pub struct ObservationLog {
    samples: Vec<CensoredSample>,
    left_censored: usize,
}

impl ObservationLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: CensoredSample) {
        if sample.kind == CensorKind::LeftCensored {
            self.left_censored += 1;
        }
        self.samples.push(sample);
    }

    pub fn samples(&self) -> &[CensoredSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_left_censored(&self) -> bool {
        self.left_censored > 0
    }

    /// Log-likelihood of the whole log under `pmf`.
    pub fn log_likelihood(&self, pmf: &PricePmf) -> f64 {
        self.samples.iter().map(|s| s.probability(pmf).ln()).sum()
    }
}

impl FromIterator<CensoredSample> for ObservationLog {
    fn from_iter<I: IntoIterator<Item = CensoredSample>>(iter: I) -> Self {
        let mut log = ObservationLog::new();
        for s in iter {
            log.push(s);
        }
        log
    }
}

fn check_support(support_max: u32) -> Result<()> {
    if support_max == 0 {
        return Err(Error::InvalidParameter {
            field: "support_max",
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// Product-limit (Kaplan–Meier) estimate on `1..=support_max`.
///
/// With `D(s)` direct observations at `s` and `N(s)` samples at risk at `s`,
/// the survival `P(price >= t)` is `Π_{s<t} (1 - D(s)/N(s))`, and the mass at
/// `t` is the drop in survival between `t` and `t + 1`. Survival left over
/// past the support goes to the above-support bucket; prices with nobody at
/// risk contribute a factor of one.
pub fn product_limit(log: &ObservationLog, support_max: u32) -> Result<PricePmf> {
    check_support(support_max)?;
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    if log.has_left_censored() {
        return Err(Error::InvalidObservation(
            "product-limit estimation needs direct or right-censored samples only".into(),
        ));
    }
    let s_max = support_max as usize;
    let mut deaths = vec![0u64; s_max + 1];
    // exits[s]: samples whose last at-risk price is s (clipped to the support)
    let mut exits = vec![0u64; s_max + 1];
    for sample in log.samples() {
        let last = match sample.kind {
            CensorKind::Direct => {
                if sample.observed <= support_max {
                    deaths[sample.observed as usize] += 1;
                }
                sample.observed
            }
            _ => sample.bound - 1,
        };
        exits[(last as usize).min(s_max)] += 1;
    }

    let mut at_risk: u64 = exits[1..].iter().sum();
    let mut survival = 1.0;
    let mut mass = vec![0.0; s_max];
    for s in 1..=s_max {
        if at_risk > 0 && deaths[s] > 0 {
            let n = at_risk as f64;
            mass[s - 1] = survival * deaths[s] as f64 / n;
            survival *= (at_risk - deaths[s]) as f64 / n;
        }
        at_risk -= exits[s];
    }
    PricePmf::new(mass, survival.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnbullOptions {
    /// Stop once no class mass moves by more than this in one iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TurnbullOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

/// Result of the self-consistency iteration.
#[derive(Debug, Clone)]
pub struct TurnbullFit {
    pub pmf: PricePmf,
    pub iterations: usize,
    /// False when `max_iter` was hit; `pmf` is then the last iterate.
    pub converged: bool,
}

/// Turnbull's self-consistency estimate for doubly-censored data.
///
/// Cells are the prices `1..=S` plus the above-support bucket. Each sample is
/// consistent with a contiguous run of cells, so the iteration runs over
/// Turnbull's innermost intervals (maximal runs of cells that every sample
/// either fully contains or misses), starting from equal mass on each. Each
/// step spreads every sample's unit mass over its consistent intervals in
/// proportion to the current estimate and renormalizes. A final interval
/// that reaches the above-support bucket reports its mass there; any other
/// interval spreads its mass evenly over its prices.
pub fn turnbull(
    log: &ObservationLog,
    support_max: u32,
    options: TurnbullOptions,
) -> Result<TurnbullFit> {
    check_support(support_max)?;
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let s = support_max as usize;
    let above = s;

    // Consistent cell range per distinct observation, with multiplicities.
    let mut groups: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for sample in log.samples() {
        let k = sample.bound as usize;
        let range = match sample.kind {
            CensorKind::Direct => {
                let cell = (sample.observed as usize - 1).min(above);
                (cell, cell)
            }
            CensorKind::RightCensored => ((k - 1).min(above), above),
            CensorKind::LeftCensored => (0, (k - 1).min(s) - 1),
        };
        *groups.entry(range).or_insert(0.0) += 1.0;
    }
    let groups: Vec<((usize, usize), f64)> = groups.into_iter().collect();

    let mut lefts: Vec<usize> = groups.iter().map(|((lo, _), _)| *lo).collect();
    let mut rights: Vec<usize> = groups.iter().map(|((_, hi), _)| *hi).collect();
    lefts.sort_unstable();
    lefts.dedup();
    rights.sort_unstable();
    rights.dedup();
    let mut intervals = Vec::new();
    for (i, &l) in lefts.iter().enumerate() {
        let r = rights[rights.partition_point(|&r| r < l)];
        let next_left = lefts.get(i + 1).copied().unwrap_or(usize::MAX);
        if next_left > r {
            intervals.push((l, r));
        }
    }

    // membership[g]: indices of intervals inside group g's range
    let membership: Vec<Vec<usize>> = groups
        .iter()
        .map(|((lo, hi), _)| {
            intervals
                .iter()
                .enumerate()
                .filter(|(_, (l, r))| lo <= l && r <= hi)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let n = log.len() as f64;
    let m = intervals.len();
    let mut weights = vec![1.0 / m as f64; m];
    let mut next = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iter {
        iterations += 1;
        next.fill(0.0);
        for (((_, _), count), members) in groups.iter().zip(&membership) {
            let total: f64 = members.iter().map(|&j| weights[j]).sum();
            if total <= 0.0 {
                continue;
            }
            let scale = count / total;
            for &j in members {
                next[j] += scale * weights[j];
            }
        }
        let mut delta: f64 = 0.0;
        for (w, nx) in weights.iter_mut().zip(&next) {
            let updated = nx / n;
            delta = delta.max((updated - *w).abs());
            *w = updated;
        }
        if delta < options.tol {
            converged = true;
            break;
        }
    }

    let mut mass = vec![0.0; s];
    let mut above_mass = 0.0;
    for (&(l, r), &w) in intervals.iter().zip(&weights) {
        if r == above {
            above_mass += w;
        } else {
            let share = w / (r - l + 1) as f64;
            mass[l..=r].iter_mut().for_each(|c| *c += share);
        }
    }
    let total: f64 = mass.iter().sum::<f64>() + above_mass;
    mass.iter_mut().for_each(|c| *c /= total);
    Ok(TurnbullFit {
        pmf: PricePmf::new(mass, above_mass / total)?,
        iterations,
        converged,
    })
}
