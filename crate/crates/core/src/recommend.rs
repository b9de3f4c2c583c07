//! Method recommendations from estimated traffic rates.

use std::fmt;

use thiserror::Error;

use crate::clock::UNIT_TIME_S;

pub const DEFAULT_PACKET_BYTES: f64 = 1500.0;

/// Rate at which the slow regime ends, `2^0`.
pub const SLOW_LIMIT: f64 = 1.0;
/// Rate at which the fast regime starts, `2^10`.
pub const FAST_LIMIT: f64 = 1024.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecommendError {
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Converts a bit rate to packets per unit time.
pub fn bandwidth_to_lambda(
    bits_per_second: f64,
    unit_time_s: f64,
    packet_bytes: f64,
) -> Result<f64, RecommendError> {
    for (name, v) in [
        ("bits_per_second", bits_per_second),
        ("unit_time_s", unit_time_s),
        ("packet_bytes", packet_bytes),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(RecommendError::Invalid(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(bits_per_second / 8.0 / packet_bytes * unit_time_s)
}

/// [`bandwidth_to_lambda`] with a 10 ms unit time and 1500-byte packets.
pub fn bandwidth_to_lambda_default(bits_per_second: f64) -> Result<f64, RecommendError> {
    bandwidth_to_lambda(bits_per_second, UNIT_TIME_S, DEFAULT_PACKET_BYTES)
}

/// Total rate split into connection-bound and other traffic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub lambda: f64,
    pub lambda_n: f64,
    pub lambda_c: f64,
}

impl RateEstimate {
    pub fn new(lambda: f64, lambda_n: f64) -> Result<Self, RecommendError> {
        for (name, v) in [("lambda", lambda), ("lambda_n", lambda_n)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(RecommendError::Invalid(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if lambda_n > lambda {
            return Err(RecommendError::Invalid(format!(
                "lambda_n ({lambda_n}) exceeds lambda ({lambda})"
            )));
        }
        Ok(RateEstimate {
            lambda,
            lambda_n,
            lambda_c: lambda - lambda_n,
        })
    }

    /// From a bit rate and the fraction of it that is connection-bound.
    pub fn from_bandwidth(bits_per_second: f64, cb_fraction: f64) -> Result<Self, RecommendError> {
        if !(0.0..=1.0).contains(&cb_fraction) {
            return Err(RecommendError::Invalid(format!(
                "connection-bound fraction must lie in [0, 1], got {cb_fraction}"
            )));
        }
        let lambda = bandwidth_to_lambda_default(bits_per_second)?;
        Self::new(lambda, lambda * (1.0 - cb_fraction))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NonCbMethod {
    PrngBased,
    PerBucket,
    Global,
}

impl NonCbMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            NonCbMethod::PrngBased => "prng-based",
            NonCbMethod::PerBucket => "per-bucket",
            NonCbMethod::Global => "global",
        }
    }
}

impl fmt::Display for NonCbMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CbHandling {
    SeparatePerConnection,
    MergedWithNonCb,
}

impl CbHandling {
    pub fn as_str(self) -> &'static str {
        match self {
            CbHandling::SeparatePerConnection => "separate-per-connection",
            CbHandling::MergedWithNonCb => "merged-with-non-cb",
        }
    }
}

impl fmt::Display for CbHandling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recommendation {
    pub use_case: u8,
    pub title: &'static str,
    pub non_cb_method: NonCbMethod,
    pub cb_handling: CbHandling,
    pub rationale: &'static str,
}

impl Recommendation {
    /// `RECOMMEND <case> <non_cb_method> <cb_handling>`
    pub fn machine_line(&self) -> String {
        format!(
            "RECOMMEND {} {} {}",
            self.use_case, self.non_cb_method, self.cb_handling
        )
    }
}

/// Which use case `rates` falls in. Cases are tested in order; the first
/// match wins.
pub fn use_case(rates: &RateEstimate) -> u8 {
    let (l, ln) = (rates.lambda, rates.lambda_n);
    if l <= SLOW_LIMIT {
        1
    } else if ln <= SLOW_LIMIT {
        2
    } else if l < FAST_LIMIT {
        3
    } else if ln < FAST_LIMIT {
        4
    } else {
        5
    }
}

pub fn recommend(rates: &RateEstimate) -> Recommendation {
    use CbHandling::*;
    use NonCbMethod::*;
    let (title, non_cb_method, cb_handling, rationale) = match use_case(rates) {
        1 => (
            "slow overall",
            PrngBased,
            MergedWithNonCb,
            "All traffic is slow: PRNG-based selection for every packet. Pick the variant by \
             preference: pure PRNG is fastest and least predictable but collides most; a \
             searchable queue uses less memory and an iterated shuffle is faster; larger k \
             reduces collisions at a small security cost.",
        ),
        2 => (
            "slow non-connection-bound, moderate connection-bound",
            PrngBased,
            SeparatePerConnection,
            "Per-connection counters for connection-bound packets; a non-repeating PRNG \
             (searchable queue or iterated shuffle) for the rest.",
        ),
        3 => (
            "moderate overall",
            PerBucket,
            SeparatePerConnection,
            "Per-bucket counters for non-connection-bound packets; per-connection counters for \
             connection-bound packets.",
        ),
        4 => (
            "moderate non-connection-bound, fast connection-bound",
            Global,
            MergedWithNonCb,
            "One globally incrementing counter for all packets.",
        ),
        _ => (
            "fast non-connection-bound",
            Global,
            SeparatePerConnection,
            "A globally incrementing counter for non-connection-bound packets; per-connection \
             counters for connection-bound packets.",
        ),
    };
    Recommendation {
        use_case: use_case(rates),
        title,
        non_cb_method,
        cb_handling,
        rationale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(l: f64, ln: f64) -> Recommendation {
        recommend(&RateEstimate::new(l, ln).unwrap())
    }

    #[test]
    fn footnote_conversions() {
        let l2 = |bps: f64| bandwidth_to_lambda_default(bps).unwrap().log2();
        assert!((l2(1e3) - -10.2).abs() < 0.05);
        assert!((l2(1e6) - -0.3).abs() < 0.05);
        assert!((l2(1e9) - 9.7).abs() < 0.05);
        assert!((l2(1e11) - 16.3).abs() < 0.05);
        assert!((l2(1e12) - 19.7).abs() < 0.05);
        assert!(bandwidth_to_lambda_default(0.0).is_err());
        assert!(bandwidth_to_lambda(1.0, -1.0, 1500.0).is_err());
    }

    #[test]
    fn example_points() {
        let r = case(0.25, 0.25);
        assert_eq!(
            (r.use_case, r.non_cb_method, r.cb_handling),
            (1, NonCbMethod::PrngBased, CbHandling::MergedWithNonCb)
        );
        let r = case(16.0, 0.5);
        assert_eq!(
            (r.use_case, r.non_cb_method, r.cb_handling),
            (2, NonCbMethod::PrngBased, CbHandling::SeparatePerConnection)
        );
        let r = case(32.0, 8.0);
        assert_eq!(
            (r.use_case, r.non_cb_method, r.cb_handling),
            (3, NonCbMethod::PerBucket, CbHandling::SeparatePerConnection)
        );
        let r = case(4096.0, 32.0);
        assert_eq!(
            (r.use_case, r.non_cb_method, r.cb_handling),
            (4, NonCbMethod::Global, CbHandling::MergedWithNonCb)
        );
        let r = case(4096.0, 2048.0);
        assert_eq!(
            (r.use_case, r.non_cb_method, r.cb_handling),
            (5, NonCbMethod::Global, CbHandling::SeparatePerConnection)
        );
    }

    #[test]
    fn boundaries() {
        assert_eq!(case(1.0, 1.0).use_case, 1);
        assert_eq!(case(1.0 + 1e-12, 1.0).use_case, 2);
        assert_eq!(case(1023.0, 1.5).use_case, 3);
        assert_eq!(case(1024.0, 1.5).use_case, 4);
        assert_eq!(case(1024.0, 1024.0).use_case, 5);
        assert_eq!(case(0.0, 0.0).use_case, 1);
    }

    #[test]
    fn gigabit_mostly_connection_bound() {
        let r = RateEstimate::from_bandwidth(1e9, 0.99).unwrap();
        assert!((r.lambda.log2() - 9.7).abs() < 0.01);
        assert!((r.lambda_n.log2() - 3.06).abs() < 0.01);
        assert_eq!(recommend(&r).use_case, 3);
    }

    #[test]
    fn invalid_rates() {
        assert!(RateEstimate::new(1.0, 2.0).is_err());
        assert!(RateEstimate::new(-1.0, 0.0).is_err());
        assert!(RateEstimate::from_bandwidth(1e9, 1.5).is_err());
    }

    #[test]
    fn machine_line_format() {
        assert_eq!(
            case(4096.0, 32.0).machine_line(),
            "RECOMMEND 4 global merged-with-non-cb"
        );
    }
}
