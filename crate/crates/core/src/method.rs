use std::fmt;
use std::str::FromStr;

/// The IPID selection methods, with per-bucket split into its two
/// concurrency-control variants.
///
/// The kebab-case names returned by [`Method::as_str`] are stable and shared by
/// the CLI, the benchmark report, and the analysis CSV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Global,
    PerConnection,
    PerDestination,
    PerBucketExclusive,
    PerBucketRacy,
    PrngQueue,
    PrngShuffle,
    PrngPure,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Global,
        Method::PerConnection,
        Method::PerDestination,
        Method::PerBucketExclusive,
        Method::PerBucketRacy,
        Method::PrngQueue,
        Method::PrngShuffle,
        Method::PrngPure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Global => "global",
            Method::PerConnection => "per-connection",
            Method::PerDestination => "per-destination",
            Method::PerBucketExclusive => "per-bucket-exclusive",
            Method::PerBucketRacy => "per-bucket-racy",
            Method::PrngQueue => "prng-queue",
            Method::PrngShuffle => "prng-shuffle",
            Method::PrngPure => "prng-pure",
        }
    }

    pub fn is_prng(self) -> bool {
        matches!(
            self,
            Method::PrngQueue | Method::PrngShuffle | Method::PrngPure
        )
    }

    pub fn is_per_bucket(self) -> bool {
        matches!(self, Method::PerBucketExclusive | Method::PerBucketRacy)
    }

    /// True for methods whose outputs come from sequential +1 counters.
    pub fn is_sequential_counter(self) -> bool {
        matches!(
            self,
            Method::Global | Method::PerConnection | Method::PerDestination
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown method `{0}` (expected one of: global, per-connection, per-destination, per-bucket-exclusive, per-bucket-racy, prng-queue, prng-shuffle, prng-pure)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMethod(s.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("per-bucket".parse::<Method>().is_err());
    }
}
