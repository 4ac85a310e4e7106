//! Beta posterior of the fraction nonconforming under a Jeffreys prior, and
//! the summaries taken from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

/// Quantile levels used as boxplot whiskers. Beta support is all of [0, 1],
/// so the literal min/max would be uninformative.
pub const WHISKER_LOW: f64 = 0.005;
pub const WHISKER_HIGH: f64 = 0.995;

/// A beta distribution `Beta(a, b)` on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaDist {
    a: f64,
    b: f64,
}

impl BetaDist {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(
                    "BetaDist::new",
                    format!("shape {name} must be finite and > 0, got {v}"),
                ));
            }
        }
        Ok(Self { a, b })
    }

    /// The Jeffreys prior `Beta(1/2, 1/2)`.
    pub fn jeffreys() -> Self {
        Self { a: 0.5, b: 0.5 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }

    pub fn ln_beta(&self) -> f64 {
        special::log_beta_unchecked(self.a, self.b)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        special::reg_inc_beta(x, self.a, self.b)
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        special::beta_quantile(q, self.a, self.b)
    }

    pub fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }

    /// Density at `t`; zero outside (0, 1).
    pub fn pdf(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        special::log_beta_pdf(t, self.a, self.b, self.ln_beta()).exp()
    }
}

impl std::fmt::Display for BetaDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Beta({}, {})", self.a, self.b)
    }
}

/// Aggregated inspection counts for one product type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub type_id: String,
    /// Design attributes in declaration order, e.g. (NPS, schedule, material).
    pub attributes: Vec<(String, String)>,
    /// Total produced items; absent for inputs that only carry inspection counts.
    pub total: Option<u64>,
    pub inspected: u64,
    pub repaired: u64,
}

impl TypeCounts {
    pub fn new(type_id: impl Into<String>, inspected: u64, repaired: u64) -> Self {
        Self {
            type_id: type_id.into(),
            attributes: Vec::new(),
            total: None,
            inspected,
            repaired,
        }
    }

    pub fn with_total(mut self, total: u64) -> Self {
        self.total = Some(total);
        self
    }

    pub fn with_attributes<I, K, V>(mut self, attributes: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        self.attributes = attributes
            .into_iter()
            .map(|(k, v)| (k.into(), v.into()))
            .collect();
        self
    }

    pub fn attribute_values(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|(_, v)| v.as_str())
    }

    /// Checks `repaired <= inspected <= total`.
    pub fn validate(&self) -> Result<()> {
        if self.repaired > self.inspected {
            return Err(Error::InconsistentCounts {
                context: format!("type {}", self.type_id),
                inspected: self.inspected,
                repaired: self.repaired,
            });
        }
        if let Some(total) = self.total {
            if self.inspected > total {
                return Err(Error::InspectedExceedsTotal {
                    context: format!("type {}", self.type_id),
                    total,
                    inspected: self.inspected,
                });
            }
        }
        Ok(())
    }
}

/// Quantile summary of a posterior used to draw a boxplot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumberSummary {
    pub const LEVELS: [f64; 5] = [WHISKER_LOW, 0.25, 0.5, 0.75, WHISKER_HIGH];

    pub fn as_array(&self) -> [f64; 5] {
        [self.min, self.q1, self.median, self.q3, self.max]
    }
}

/// Point estimate `X / n`.
pub fn fraction_nonconforming(counts: &TypeCounts) -> Result<f64> {
    if counts.inspected == 0 {
        return Err(Error::UndefinedRatio {
            type_id: counts.type_id.clone(),
        });
    }
    Ok(counts.repaired as f64 / counts.inspected as f64)
}

/// `Beta(X + 1/2, n - X + 1/2)`: the Jeffreys-prior posterior of the fraction
/// nonconforming, used as the complexity indicator.
pub fn posterior_from_counts(counts: &TypeCounts) -> Result<BetaDist> {
    if counts.repaired > counts.inspected {
        return Err(Error::InconsistentCounts {
            context: format!("type {}", counts.type_id),
            inspected: counts.inspected,
            repaired: counts.repaired,
        });
    }
    let x = counts.repaired as f64;
    let n = counts.inspected as f64;
    BetaDist::new(x + 0.5, n - x + 0.5)
}

pub fn median(d: &BetaDist) -> Result<f64> {
    d.median()
}

pub fn variance(d: &BetaDist) -> f64 {
    d.variance()
}

pub fn five_number_summary(d: &BetaDist) -> Result<FiveNumberSummary> {
    let [min, q1, median, q3, max] = FiveNumberSummary::LEVELS.map(|q| d.quantile(q));
    Ok(FiveNumberSummary {
        min: min?,
        q1: q1?,
        median: median?,
        q3: q3?,
        max: max?,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(n: u64, x: u64) -> TypeCounts {
        TypeCounts::new("t", n, x)
    }

    #[test]
    fn fraction_nonconforming_examples() {
        assert_eq!(fraction_nonconforming(&counts(200, 5)).unwrap(), 0.025);
        assert_eq!(fraction_nonconforming(&counts(100, 0)).unwrap(), 0.0);
        assert!((fraction_nonconforming(&counts(48, 2)).unwrap() - 2.0 / 48.0).abs() < 1e-15);
        assert!(matches!(
            fraction_nonconforming(&counts(0, 0)),
            Err(Error::UndefinedRatio { .. })
        ));
    }

    #[test]
    fn posterior_examples() {
        let p = posterior_from_counts(&counts(200, 5)).unwrap();
        assert_eq!((p.a(), p.b()), (5.5, 195.5));
        assert_eq!(
            posterior_from_counts(&counts(0, 0)).unwrap(),
            BetaDist::jeffreys()
        );
        let p = posterior_from_counts(&counts(101, 4)).unwrap();
        assert_eq!((p.a(), p.b()), (4.5, 97.5));
        let p = posterior_from_counts(&counts(98, 4)).unwrap();
        assert_eq!((p.a(), p.b()), (4.5, 94.5));
        assert!(matches!(
            posterior_from_counts(&counts(3, 4)),
            Err(Error::InconsistentCounts { .. })
        ));
    }

    #[test]
    fn median_examples() {
        let m = BetaDist::new(5.5, 195.5).unwrap().median().unwrap();
        assert!((m - 0.0258).abs() <= 0.0005);
        assert!((BetaDist::jeffreys().median().unwrap() - 0.5).abs() < 1e-12);
        let m = BetaDist::new(2.5, 46.5).unwrap().median().unwrap();
        assert!((m - 0.0450).abs() <= 0.0005);
    }

    #[test]
    fn variance_examples() {
        assert!((BetaDist::new(1.0, 1.0).unwrap().variance() - 1.0 / 12.0).abs() < 1e-15);
        assert!((BetaDist::jeffreys().variance() - 0.125).abs() < 1e-15);
    }

    /// Composite Simpson on a fine grid restricted to where the density lives.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn variance_matches_quadrature() {
        let d = BetaDist::new(5.5, 195.5).unwrap();
        let mean = d.mean();
        // Density is negligible beyond 0.2 (≈ 14 standard deviations out).
        let quad = simpson(|t| (t - mean).powi(2) * d.pdf(t), 0.0, 0.2, 200_000);
        assert!(
            (d.variance() - quad).abs() < 1e-12,
            "{} vs {quad}",
            d.variance()
        );
        // mpmath reference
        assert!((d.variance() - 1.317_546_546_367_713_18e-4).abs() < 1e-16);
    }

    #[test]
    fn five_number_summary_examples() {
        let s = five_number_summary(&BetaDist::jeffreys()).unwrap();
        assert!((s.median - 0.5).abs() < 1e-12);
        let q1 = (std::f64::consts::PI / 8.0).sin().powi(2);
        assert!((s.q1 - q1).abs() < 1e-10);
        assert!((s.q3 - (1.0 - q1)).abs() < 1e-10);

        let s = five_number_summary(&BetaDist::new(5.5, 195.5).unwrap()).unwrap();
        assert!((s.median - 0.0258).abs() <= 0.0005);

        let d = BetaDist::new(2.5, 98.5).unwrap();
        let s = five_number_summary(&d).unwrap();
        for (v, level) in s.as_array().into_iter().zip(FiveNumberSummary::LEVELS) {
            assert!((d.cdf(v).unwrap() - level).abs() <= 1e-9);
        }
        // mpmath reference quantiles
        assert!((s.min - 0.002_072_165_387_293_443_5).abs() < 1e-12);
        assert!((s.q1 - 0.013_384_108_656_669_252).abs() < 1e-12);
        assert!((s.q3 - 0.032_829_211_519_439_237).abs() < 1e-12);
        assert!((s.max - 0.080_924_702_824_772_222).abs() < 1e-12);
    }

    #[test]
    fn validate_counts() {
        assert!(counts(10, 3).with_total(12).validate().is_ok());
        assert!(counts(10, 11).validate().is_err());
        assert!(matches!(
            counts(10, 3).with_total(9).validate(),
            Err(Error::InspectedExceedsTotal { .. })
        ));
    }

    proptest! {
        #[test]
        fn posterior_mean_tracks_point_estimate(n in 1u64..50_000, frac in 0.0f64..=1.0) {
            let x = (frac * n as f64).floor() as u64;
            let d = posterior_from_counts(&counts(n, x)).unwrap();
            let p_hat = x as f64 / n as f64;
            prop_assert!((d.mean() - p_hat).abs() <= 1.0 / (n as f64 + 1.0) + 1e-15);
        }

        #[test]
        fn median_strictly_inside_unit_interval(n in 0u64..20_000, frac in 0.0f64..=1.0) {
            let x = (frac * n as f64).floor() as u64;
            let m = posterior_from_counts(&counts(n, x)).unwrap().median().unwrap();
            prop_assert!(m > 0.0 && m < 1.0);
        }

        #[test]
        fn more_data_same_ratio_shrinks_variance(n in 1u64..5_000, x_raw in 0u64..5_000, k in 2u64..20) {
            let x = x_raw % (n + 1);
            let small = posterior_from_counts(&counts(n, x)).unwrap();
            let large = posterior_from_counts(&counts(n * k, x * k)).unwrap();
            prop_assert!(large.variance() < small.variance());
        }

        #[test]
        fn summary_round_trips_through_cdf(n in 0u64..10_000, frac in 0.0f64..=1.0) {
            let x = (frac * n as f64).floor() as u64;
            let d = posterior_from_counts(&counts(n, x)).unwrap();
            let s = five_number_summary(&d).unwrap();
            let v = s.as_array();
            prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(v[0] >= 0.0 && v[4] <= 1.0);
            for (value, level) in v.into_iter().zip(FiveNumberSummary::LEVELS) {
                prop_assert!((d.cdf(value).unwrap() - level).abs() <= 1e-9);
            }
        }
    }
}
