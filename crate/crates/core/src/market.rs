//! Auction outcome sources and auction resolution.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distribution::PricePmf;
use crate::error::{Error, Result};

/// What the rest of the market did on one auction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuctionOutcome {
    pub market_price: u32,
    /// Whether a won impression turns into a (charged) click.
    pub click_available: bool,
}

/// What a bidder learns after one auction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuctionFeedback {
    pub bid_placed: u32,
    pub impression_won: bool,
    pub click_won: bool,
    /// Zero unless a click was won.
    pub price_paid: u32,
    pub budget_after: u32,
}

impl AuctionFeedback {
    pub fn validate(&self) -> Result<()> {
        if self.click_won && !self.impression_won {
            return Err(Error::InconsistentFeedback(
                "click reported without an impression".into(),
            ));
        }
        if self.click_won && (self.price_paid == 0 || self.price_paid > self.bid_placed) {
            return Err(Error::InconsistentFeedback(format!(
                "paid {} on a bid of {}",
                self.price_paid, self.bid_placed
            )));
        }
        if !self.click_won && self.price_paid != 0 {
            return Err(Error::InconsistentFeedback(format!(
                "charged {} without a click",
                self.price_paid
            )));
        }
        Ok(())
    }
}

/// Second-price resolution: a bid at or above the market price wins the
/// impression, and the bidder is charged the market price only if the
/// impression converts into a click.
pub fn resolve_auction(outcome: AuctionOutcome, bid: u32, budget: u32) -> AuctionFeedback {
    let impression_won = bid >= outcome.market_price;
    let click_won = impression_won && outcome.click_available;
    let price_paid = if click_won { outcome.market_price } else { 0 };
    AuctionFeedback {
        bid_placed: bid,
        impression_won,
        click_won,
        price_paid,
        budget_after: budget.saturating_sub(price_paid),
    }
}

/// A source of auction outcomes. `None` means the data is exhausted.
pub trait Market {
    fn next_outcome(&mut self) -> Option<AuctionOutcome>;
}

/// I.i.d. prices from a pmf, with clicks drawn independently at rate `ctr`.
#[derive(Debug, Clone)]
pub struct StochasticMarket {
    pmf: PricePmf,
    ctr: f64,
    rng: ChaCha8Rng,
    surrogate: Option<u32>,
}

impl StochasticMarket {
    pub fn new(pmf: PricePmf, ctr: f64, seed: u64) -> Result<Self> {
        if pmf.above_mass() > 0.0 {
            return Err(Error::UnlocalizedMass(pmf.above_mass()));
        }
        Self::build(pmf, ctr, seed, None)
    }

    /// Like [`StochasticMarket::new`], but draws landing above the support
    /// are reported as `surrogate`.
    pub fn with_surrogate(pmf: PricePmf, ctr: f64, seed: u64, surrogate: u32) -> Result<Self> {
        Self::build(pmf, ctr, seed, Some(surrogate.max(1)))
    }

    fn build(pmf: PricePmf, ctr: f64, seed: u64, surrogate: Option<u32>) -> Result<Self> {
        if !(ctr > 0.0 && ctr <= 1.0) {
            return Err(Error::InvalidParameter {
                field: "ctr",
                reason: format!("{ctr} is outside (0, 1]"),
            });
        }
        Ok(Self {
            pmf,
            ctr,
            rng: ChaCha8Rng::seed_from_u64(seed),
            surrogate,
        })
    }

    pub fn draw(&mut self) -> AuctionOutcome {
        let market_price = match self.surrogate {
            Some(s) => self.pmf.sample_with_surrogate(&mut self.rng, s),
            None => self
                .pmf
                .sample(&mut self.rng)
                .expect("constructor rejects unlocalized mass"),
        };
        let click_available = self.ctr >= 1.0 || self.rng.gen::<f64>() < self.ctr;
        AuctionOutcome {
            market_price,
            click_available,
        }
    }
}

impl Market for StochasticMarket {
    fn next_outcome(&mut self) -> Option<AuctionOutcome> {
        Some(self.draw())
    }
}

/// A recorded sequence of auctions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySequence {
    entries: Vec<AuctionOutcome>,
    source: String,
}

impl ReplaySequence {
    pub fn new(entries: Vec<AuctionOutcome>, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        if entries.is_empty() {
            return Err(Error::EmptyReplay(source));
        }
        if let Some(i) = entries.iter().position(|e| e.market_price == 0) {
            return Err(Error::Parse {
                path: source,
                line: i + 1,
                reason: "price must be at least 1".into(),
            });
        }
        Ok(Self { entries, source })
    }

    /// Parses `price,click` rows. A single leading `price,click` header is
    /// skipped, as are blank lines and lines starting with `#`.
    pub fn parse(text: &str, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        let mut entries = Vec::new();
        let mut seen_row = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_row && line.replace(' ', "") == "price,click" {
                seen_row = true;
                continue;
            }
            seen_row = true;
            let err = |reason: String| Error::Parse {
                path: source.clone(),
                line: i + 1,
                reason,
            };
            let mut fields = line.split(',').map(str::trim);
            let (Some(price), Some(click), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(err(format!("expected `price,click`, got `{line}`")));
            };
            let market_price: u32 = price
                .parse()
                .map_err(|_| err(format!("price `{price}` is not a positive integer")))?;
            if market_price == 0 {
                return Err(err("price must be at least 1".into()));
            }
            let click_available = match click {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("click `{other}` is not 0 or 1"))),
            };
            entries.push(AuctionOutcome {
                market_price,
                click_available,
            });
        }
        Self::new(entries, source)
    }

    pub fn entries(&self) -> &[AuctionOutcome] {
        &self.entries
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry at `cursor`, or `None` past the end.
    pub fn get(&self, cursor: usize) -> Option<AuctionOutcome> {
        self.entries.get(cursor).copied()
    }

    /// How `periods` periods of `horizon` auctions fit into the sequence.
    pub fn period_plan(&self, horizon: u32, periods: u32) -> PeriodPlan {
        let horizon = horizon.max(1) as usize;
        let wanted = periods as usize;
        let full = (self.len() / horizon).min(wanted);
        let rest = self.len() - full * horizon;
        let partial = if full < wanted && rest > 0 {
            Some(rest.min(horizon))
        } else {
            None
        };
        PeriodPlan {
            full,
            partial,
            requested: wanted,
        }
    }

    /// Empirical price distribution of the whole sequence.
    pub fn empirical_pmf(&self) -> PricePmf {
        let prices: Vec<u32> = self.entries.iter().map(|e| e.market_price).collect();
        PricePmf::empirical(&prices).expect("sequence is non-empty with positive prices")
    }

    /// Fraction of auctions whose impression would have converted.
    pub fn click_rate(&self) -> f64 {
        let clicks = self.entries.iter().filter(|e| e.click_available).count();
        clicks as f64 / self.len() as f64
    }

    /// Population standard deviation of the prices.
    pub fn price_std(&self) -> f64 {
        let n = self.len() as f64;
        let mean = self
            .entries
            .iter()
            .map(|e| f64::from(e.market_price))
            .sum::<f64>()
            / n;
        let var = self
            .entries
            .iter()
            .map(|e| (f64::from(e.market_price) - mean).powi(2))
            .sum::<f64>()
            / n;
        var.sqrt()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("price,click\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{}", e.market_price, u8::from(e.click_available));
        }
        out
    }
}

/// Number of complete periods, plus the length of a trailing partial one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodPlan {
    pub full: usize,
    pub partial: Option<usize>,
    pub requested: usize,
}

impl PeriodPlan {
    /// The sequence is shorter than the requested periods.
    pub fn is_truncated(&self) -> bool {
        self.full < self.requested
    }
}

pub fn load_replay(path: impl AsRef<Path>) -> Result<ReplaySequence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    ReplaySequence::parse(&text, path.display().to_string())
}

/// Plays a [`ReplaySequence`] back in order.
#[derive(Debug, Clone)]
pub struct ReplayMarket<'a> {
    sequence: &'a ReplaySequence,
    cursor: usize,
}

impl<'a> ReplayMarket<'a> {
    pub fn new(sequence: &'a ReplaySequence) -> Self {
        Self {
            sequence,
            cursor: 0,
        }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }
}

impl Market for ReplayMarket<'_> {
    fn next_outcome(&mut self) -> Option<AuctionOutcome> {
        let outcome = self.sequence.get(self.cursor)?;
        self.cursor += 1;
        Some(outcome)
    }
}

/// Regime-switching generator for synthetic replay logs.
///
/// Calm auctions draw from `base`; once a burst starts, prices are the base
/// draw multiplied by a factor uniform on `spike_factor`, and the burst
/// persists from one auction to the next with probability `burst_stay`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstyGenerator {
    pub base: PricePmf,
    pub spike_factor: (u32, u32),
    pub burst_start: f64,
    pub burst_stay: f64,
    pub ctr: f64,
}

impl BurstyGenerator {
    pub fn generate(&self, len: usize, seed: u64) -> Result<ReplaySequence> {
        let (lo, hi) = self.spike_factor;
        if lo == 0 || hi < lo {
            return Err(Error::InvalidParameter {
                field: "spike_factor",
                reason: format!("({lo}, {hi}) is not a valid positive range"),
            });
        }
        for (field, p) in [
            ("burst_start", self.burst_start),
            ("burst_stay", self.burst_stay),
            ("ctr", self.ctr),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("{p} is not a probability"),
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bursting = false;
        let mut entries = Vec::with_capacity(len);
        for _ in 0..len {
            let p = if bursting {
                self.burst_stay
            } else {
                self.burst_start
            };
            bursting = rng.gen::<f64>() < p;
            let base = self.base.sample(&mut rng)?;
            let market_price = if bursting {
                base.saturating_mul(rng.gen_range(lo..=hi))
            } else {
                base
            };
            let click_available = rng.gen::<f64>() < self.ctr;
            entries.push(AuctionOutcome {
                market_price,
                click_available,
            });
        }
        ReplaySequence::new(entries, format!("bursty(seed={seed})"))
    }
}
