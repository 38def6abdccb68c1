//! Discrete market-price distributions over the positive integers.
//!
//! Prices are expressed in the smallest bidding unit, so a [`PricePmf`] is a
//! vector of masses for prices `1..=S` plus an explicit bucket holding the
//! probability that the price exceeds `S`. Estimators use that bucket for
//! mass they cannot place at a specific price.

use rand::Rng;

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Probability mass function over prices `1..=support_max`, with the mass
/// above the support kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePmf {
    mass: Vec<f64>,
    above_mass: f64,
    // tails[b] = P(price > b) for b in 0..=S
    tails: Vec<f64>,
}

impl PricePmf {
    /// Builds a pmf from `mass[i] = P(price = i + 1)` and the mass above the
    /// support. The total must be 1 to within 1e-9; it is then rescaled so the
    /// stored masses sum to 1 at machine precision.
    pub fn new(mass: Vec<f64>, above_mass: f64) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidDistribution(
                "support must contain at least one price".into(),
            ));
        }
        if let Some((i, m)) = mass
            .iter()
            .enumerate()
            .find(|(_, m)| !m.is_finite() || **m < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "mass at price {} is {m}",
                i + 1
            )));
        }
        if !above_mass.is_finite() || above_mass < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "above-support mass is {above_mass}"
            )));
        }
        let total: f64 = mass.iter().sum::<f64>() + above_mass;
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        let mass: Vec<f64> = mass.into_iter().map(|m| m / total).collect();
        Ok(Self::from_normalized(mass, above_mass / total))
    }

    /// Normalizes non-negative weights into a pmf on `1..=weights.len()`.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights must have a positive finite sum, got {total}"
            )));
        }
        Self::new(weights.iter().map(|w| w / total).collect(), 0.0)
    }

    /// Empirical distribution of a non-empty list of prices.
    pub fn empirical(prices: &[u32]) -> Result<Self> {
        let max = prices.iter().copied().max().ok_or_else(|| {
            Error::InvalidDistribution("empirical distribution of no prices".into())
        })?;
        if prices.contains(&0) {
            return Err(Error::InvalidDistribution("price 0 in sample".into()));
        }
        let mut counts = vec![0.0; max as usize];
        for &p in prices {
            counts[p as usize - 1] += 1.0;
        }
        Self::from_weights(&counts)
    }

    pub fn point_mass(price: u32) -> Result<Self> {
        if price == 0 {
            return Err(Error::InvalidParameter {
                field: "price",
                reason: "prices start at 1".into(),
            });
        }
        let mut mass = vec![0.0; price as usize];
        mass[price as usize - 1] = 1.0;
        Self::new(mass, 0.0)
    }

    /// Uniform on `lo..=hi`, with support `1..=hi`.
    pub fn uniform(lo: u32, hi: u32) -> Result<Self> {
        make_family(&Family::Uniform { lo, hi })
    }

    fn from_normalized(mass: Vec<f64>, above_mass: f64) -> Self {
        let mut tails = vec![0.0; mass.len() + 1];
        let mut acc = above_mass;
        for b in (0..mass.len()).rev() {
            tails[b + 1] = acc;
            acc += mass[b];
        }
        tails[0] = acc.min(1.0);
        Self {
            mass,
            above_mass,
            tails,
        }
    }

    pub fn support_max(&self) -> u32 {
        self.mass.len() as u32
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn above_mass(&self) -> f64 {
        self.above_mass
    }

    /// `P(price = price)`; zero outside the support.
    pub fn prob(&self, price: u32) -> f64 {
        if price == 0 {
            return 0.0;
        }
        self.mass.get(price as usize - 1).copied().unwrap_or(0.0)
    }

    /// Mass strictly to the right of `b`, including the above-support bucket.
    pub fn tail(&self, b: u32) -> f64 {
        let b = b as usize;
        if b >= self.mass.len() {
            self.above_mass
        } else {
            self.tails[b]
        }
    }

    /// Largest price carrying positive mass, ignoring the above bucket.
    pub fn max_price(&self) -> Option<u32> {
        self.mass
            .iter()
            .rposition(|&m| m > 0.0)
            .map(|i| i as u32 + 1)
    }

    /// Mean price, or `None` when part of the mass is not localized.
    pub fn mean(&self) -> Option<f64> {
        if self.above_mass > 0.0 {
            return None;
        }
        Some(
            self.mass
                .iter()
                .enumerate()
                .map(|(i, m)| (i + 1) as f64 * m)
                .sum(),
        )
    }

    pub fn std_dev(&self) -> Option<f64> {
        let mean = self.mean()?;
        let var: f64 = self
            .mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * ((i + 1) as f64 - mean).powi(2))
            .sum();
        Some(var.sqrt())
    }

    /// Moves the above-support mass onto `price` when that price lies in the
    /// support; otherwise returns an unchanged copy.
    pub fn with_residual_at(&self, price: u32) -> Self {
        if self.above_mass == 0.0 || price == 0 || price > self.support_max() {
            return self.clone();
        }
        let mut mass = self.mass.clone();
        mass[price as usize - 1] += self.above_mass;
        Self::from_normalized(mass, 0.0)
    }

    /// Total-variation distance, treating prices beyond either support as
    /// zero-mass cells and comparing above-support buckets directly.
    pub fn total_variation(&self, other: &PricePmf) -> f64 {
        let n = self.mass.len().max(other.mass.len());
        let cells: f64 = (1..=n as u32)
            .map(|p| (self.prob(p) - other.prob(p)).abs())
            .sum();
        0.5 * (cells + (self.above_mass - other.above_mass).abs())
    }

    /// Draws a price. Fails when any mass sits above the support.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u32> {
        if self.above_mass > 0.0 {
            return Err(Error::UnlocalizedMass(self.above_mass));
        }
        Ok(self.draw(rng).unwrap_or_else(|| self.fallback_price()))
    }

    /// Draws a price, reporting `surrogate` whenever the draw lands in the
    /// above-support bucket.
    pub fn sample_with_surrogate<R: Rng + ?Sized>(&self, rng: &mut R, surrogate: u32) -> u32 {
        self.draw(rng).unwrap_or(surrogate)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, m) in self.mass.iter().enumerate() {
            acc += m;
            if u < acc {
                return Some(i as u32 + 1);
            }
        }
        None
    }

    // Rounding can leave u above the accumulated mass by a few ulps.
    fn fallback_price(&self) -> u32 {
        self.max_price().unwrap_or(self.support_max())
    }
}

/// Synthetic price-distribution families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Uniform on `lo..=hi`.
    Uniform { lo: u32, hi: u32 },
    /// `p(i)` proportional to `ratio^i` on `1..=support_max`.
    Geometric { ratio: f64, support_max: u32 },
    /// Mass `low_prob` at `low` and the rest at `high`.
    BimodalGap { low: u32, high: u32, low_prob: f64 },
    /// Mostly uniform on `base_lo..=base_hi`, with probability `spike_prob`
    /// of a price uniform on `spike_lo..=spike_hi`.
    Bursty {
        base_lo: u32,
        base_hi: u32,
        spike_lo: u32,
        spike_hi: u32,
        spike_prob: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform { .. } => "uniform",
            Family::Geometric { .. } => "geometric",
            Family::BimodalGap { .. } => "bimodal_gap",
            Family::Bursty { .. } => "bursty",
        }
    }
}

fn param_err(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

fn check_prob(field: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(param_err(field, format!("{p} is not a probability")))
    }
}

fn check_range(lo_field: &'static str, lo: u32, hi_field: &'static str, hi: u32) -> Result<()> {
    if lo == 0 {
        return Err(param_err(lo_field, "prices start at 1"));
    }
    if hi < lo {
        return Err(param_err(
            hi_field,
            format!("{hi} is below {lo_field} = {lo}"),
        ));
    }
    Ok(())
}

/// Builds a pmf from a synthetic family, validating its parameters.
pub fn make_family(family: &Family) -> Result<PricePmf> {
    match *family {
        Family::Uniform { lo, hi } => {
            check_range("lo", lo, "hi", hi)?;
            let mut weights = vec![0.0; hi as usize];
            weights[lo as usize - 1..].fill(1.0);
            PricePmf::from_weights(&weights)
        }
        Family::Geometric { ratio, support_max } => {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(param_err("ratio", format!("{ratio} is outside (0, 1]")));
            }
            if support_max == 0 {
                return Err(param_err("support_max", "must be at least 1"));
            }
            let weights: Vec<f64> = (1..=support_max as i32).map(|i| ratio.powi(i)).collect();
            PricePmf::from_weights(&weights)
        }
        Family::BimodalGap {
            low,
            high,
            low_prob,
        } => {
            check_range("low", low, "high", high)?;
            if high == low {
                return Err(param_err("high", "must differ from low"));
            }
            check_prob("low_prob", low_prob)?;
            let mut weights = vec![0.0; high as usize];
            weights[low as usize - 1] = low_prob;
            weights[high as usize - 1] = 1.0 - low_prob;
            PricePmf::from_weights(&weights)
        }
        Family::Bursty {
            base_lo,
            base_hi,
            spike_lo,
            spike_hi,
            spike_prob,
        } => {
            check_range("base_lo", base_lo, "base_hi", base_hi)?;
            check_range("spike_lo", spike_lo, "spike_hi", spike_hi)?;
            if spike_lo <= base_hi {
                return Err(param_err(
                    "spike_lo",
                    format!("{spike_lo} must exceed base_hi = {base_hi}"),
                ));
            }
            check_prob("spike_prob", spike_prob)?;
            let mut weights = vec![0.0; spike_hi as usize];
            let base_w = (1.0 - spike_prob) / f64::from(base_hi - base_lo + 1);
            let spike_w = spike_prob / f64::from(spike_hi - spike_lo + 1);
            weights[base_lo as usize - 1..base_hi as usize].fill(base_w);
            weights[spike_lo as usize - 1..].fill(spike_w);
            PricePmf::from_weights(&weights)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tail_of_uniform() {
        let p = PricePmf::uniform(1, 4).unwrap();
        assert_abs_diff_eq!(p.tail(2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.tail(0), 1.0, epsilon = 1e-15);
        assert_eq!(p.tail(4), 0.0);
        assert_eq!(p.tail(100), 0.0);
    }

    #[test]
    fn tail_of_point_mass() {
        let p = PricePmf::point_mass(3).unwrap();
        assert_eq!(p.tail(3), 0.0);
        assert_eq!(p.tail(2), 1.0);
    }

    #[test]
    fn tail_includes_above_bucket() {
        let p = PricePmf::new(vec![0.25, 0.25], 0.5).unwrap();
        assert_abs_diff_eq!(p.tail(1), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(p.tail(2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.tail(9), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(PricePmf::new(vec![], 1.0).is_err());
        assert!(PricePmf::new(vec![0.5, 0.6], 0.0).is_err());
        assert!(PricePmf::new(vec![-0.1, 1.1], 0.0).is_err());
        assert!(PricePmf::new(vec![f64::NAN, 1.0], 0.0).is_err());
    }

    #[test]
    fn family_definitions() {
        let u = make_family(&Family::Uniform { lo: 1, hi: 4 }).unwrap();
        assert_eq!(u.mass(), &[0.25; 4]);

        let g = make_family(&Family::BimodalGap {
            low: 1,
            high: 50,
            low_prob: 0.9,
        })
        .unwrap();
        assert_abs_diff_eq!(g.prob(1), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(g.prob(50), 0.1, epsilon = 1e-15);
        assert_eq!(g.prob(2), 0.0);

        let geo = make_family(&Family::Geometric {
            ratio: 0.5,
            support_max: 3,
        })
        .unwrap();
        let expected = [0.5 / 0.875, 0.25 / 0.875, 0.125 / 0.875];
        for (m, e) in geo.mass().iter().zip(expected) {
            assert_abs_diff_eq!(*m, e, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(geo.mass().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn family_errors_name_the_field() {
        let err = make_family(&Family::Uniform { lo: 5, hi: 2 }).unwrap_err();
        assert!(err.to_string().contains("`hi`"), "{err}");
        let err = make_family(&Family::BimodalGap {
            low: 1,
            high: 5,
            low_prob: 1.5,
        })
        .unwrap_err();
        assert!(err.to_string().contains("`low_prob`"), "{err}");
        let err = make_family(&Family::Geometric {
            ratio: 0.0,
            support_max: 3,
        })
        .unwrap_err();
        assert!(err.to_string().contains("`ratio`"), "{err}");
        let err = make_family(&Family::Bursty {
            base_lo: 1,
            base_hi: 10,
            spike_lo: 5,
            spike_hi: 100,
            spike_prob: 0.1,
        })
        .unwrap_err();
        assert!(err.to_string().contains("`spike_lo`"), "{err}");
    }

    #[test]
    fn sampling_point_mass_and_determinism() {
        let p = PricePmf::point_mass(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| p.sample(&mut rng).unwrap() == 5));

        let u = PricePmf::uniform(1, 7).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| u.sample(&mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn sampling_uniform_frequency() {
        let u = PricePmf::uniform(1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let ones = (0..n).filter(|_| u.sample(&mut rng).unwrap() == 1).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sampling_requires_localized_mass() {
        let p = PricePmf::new(vec![0.5], 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(p.sample(&mut rng), Err(Error::UnlocalizedMass(_))));
        let draws: Vec<u32> = (0..200)
            .map(|_| p.sample_with_surrogate(&mut rng, 77))
            .collect();
        assert!(draws.iter().all(|&d| d == 1 || d == 77));
        assert!(draws.contains(&77));
    }

    #[test]
    fn residual_relocation() {
        let p = PricePmf::new(vec![0.5, 0.0, 0.0], 0.5).unwrap();
        let q = p.with_residual_at(2);
        assert_eq!(q.above_mass(), 0.0);
        assert_abs_diff_eq!(q.prob(2), 0.5, epsilon = 1e-15);
        assert_eq!(p.with_residual_at(4), p);
    }

    fn arb_pmf() -> impl Strategy<Value = PricePmf> {
        (
            prop::collection::vec(0.0f64..1.0, 1..12),
            prop::bool::ANY,
            0.0f64..1.0,
        )
            .prop_filter_map("positive weight", |(w, with_above, above)| {
                let above = if with_above { above } else { 0.0 };
                let total: f64 = w.iter().sum::<f64>() + above;
                (total > 1e-6).then(|| {
                    PricePmf::new(w.iter().map(|x| x / total).collect(), above / total).unwrap()
                })
            })
    }

    proptest! {
        #[test]
        fn tail_differences_are_masses(p in arb_pmf()) {
            let total: f64 = p.mass().iter().sum::<f64>() + p.above_mass();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!((p.tail(0) - 1.0).abs() < 1e-12);
            for b in 0..p.support_max() {
                prop_assert!((p.tail(b) - p.tail(b + 1) - p.prob(b + 1)).abs() < 1e-12);
                prop_assert!(p.tail(b) >= p.tail(b + 1));
            }
            prop_assert_eq!(p.tail(p.support_max()), p.above_mass());
        }

        #[test]
        fn histogram_matches_pmf(weights in prop::collection::vec(0.0f64..1.0, 1..6), seed in 0u64..1000) {
            prop_assume!(weights.iter().sum::<f64>() > 0.1);
            let p = PricePmf::from_weights(&weights).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 100_000usize;
            let mut hist = vec![0usize; weights.len()];
            for _ in 0..n {
                hist[p.sample(&mut rng).unwrap() as usize - 1] += 1;
            }
            let bound = 4.0 / (n as f64).sqrt();
            for (i, h) in hist.iter().enumerate() {
                prop_assert!((*h as f64 / n as f64 - p.mass()[i]).abs() < bound);
            }
        }
    }
}
