//! Poisson pmf, cdf and sf with full relative precision far into the tails.
//!
//! The pmf uses Loader's saddle-point expansion (Stirling error plus the
//! deviance term `bd0`), so values stay accurate for rates up to 2^20 and
//! beyond where naive `n ln λ - λ - ln n!` cancels badly.

use std::f64::consts::PI;

use super::AnalyticsError;
use crate::sum::CompensatedSum;

/// Natural log of the smallest positive double. Sums over `n` are restricted
/// to the points where the pmf exceeds this.
pub fn ln_pmf_floor() -> f64 {
    (5e-324f64).ln()
}

// ln(n!) - ((n + 1/2) ln n - n + ln sqrt(2 pi)) for n = 0..=15.
#[allow(clippy::excessive_precision)]
const STIRLERR_TABLE: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_22,
    0.041_340_695_955_409_294_094,
    0.027_677_925_684_998_339_149,
    0.020_790_672_103_765_093_112,
    0.016_644_691_189_821_192_163,
    0.013_876_128_823_070_747_999,
    0.011_896_709_945_891_770_095,
    0.010_411_265_261_972_096_497,
    0.009_255_462_182_712_732_917_7,
    0.008_330_563_433_362_871_256_5,
    0.007_573_675_487_951_840_795,
    0.006_942_840_107_209_529_865_7,
    0.006_408_994_188_004_207_068_4,
    0.005_951_370_112_758_847_735_6,
    0.005_554_733_551_962_801_371,
];

fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLERR_TABLE[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `x ln(x/m) + m - x`, evaluated without cancellation near `x = m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

pub(crate) fn check_rate(lambda: f64) -> Result<(), AnalyticsError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(AnalyticsError::Domain(format!(
            "rate must be positive and finite, got {lambda}"
        )))
    }
}

#[inline]
pub(crate) fn ln_pmf_unchecked(n: u64, lambda: f64) -> f64 {
    if n == 0 {
        return -lambda;
    }
    let x = n as f64;
    -stirlerr(n) - bd0(x, lambda) - 0.5 * (2.0 * PI * x).ln()
}

pub fn ln_pmf(n: u64, lambda: f64) -> Result<f64, AnalyticsError> {
    check_rate(lambda)?;
    Ok(ln_pmf_unchecked(n, lambda))
}

pub fn pmf(n: u64, lambda: f64) -> Result<f64, AnalyticsError> {
    Ok(ln_pmf(n, lambda)?.exp())
}

/// Inclusive range of `n` whose pmf exceeds the smallest positive double.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Support {
    pub lo: u64,
    pub hi: u64,
}

impl Support {
    pub fn len(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: u64) -> bool {
        (self.lo..=self.hi).contains(&n)
    }
}

/// The truncation interval used for every infinite sum over `n`.
pub fn truncation_bound(lambda: f64) -> Result<Support, AnalyticsError> {
    check_rate(lambda)?;
    let floor = ln_pmf_floor();
    let above = |n: u64| ln_pmf_unchecked(n, lambda) > floor;
    let mode = lambda.floor() as u64;
    // The mode itself is always above the floor for finite rates.
    debug_assert!(above(mode));

    let lo = if above(0) {
        0
    } else {
        // largest n < mode below the floor, then step up
        let (mut bad, mut good) = (0u64, mode);
        while good - bad > 1 {
            let mid = bad + (good - bad) / 2;
            if above(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };

    let mut step = 1u64;
    while above(mode + step) {
        step *= 2;
    }
    let (mut good, mut bad) = (mode + step / 2, mode + step);
    if step == 1 {
        good = mode;
    }
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if above(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Support { lo, hi: good })
}

/// Sums `pmf(n)` for `n` in `from..=to`, clipped to the support.
fn tail_sum(support: Support, from: u64, to: u64, lambda: f64) -> f64 {
    let from = from.max(support.lo);
    let to = to.min(support.hi);
    if from > to {
        return 0.0;
    }
    (from..=to)
        .map(|n| ln_pmf_unchecked(n, lambda).exp())
        .collect::<CompensatedSum>()
        .value()
}

/// `P[N <= n]`.
pub fn cdf(n: u64, lambda: f64) -> Result<f64, AnalyticsError> {
    let s = truncation_bound(lambda)?;
    Ok(if n < lambda.floor() as u64 {
        tail_sum(s, 0, n, lambda)
    } else {
        1.0 - tail_sum(s, n.saturating_add(1), u64::MAX, lambda)
    })
}

/// `P[N > n]`.
pub fn sf(n: u64, lambda: f64) -> Result<f64, AnalyticsError> {
    let s = truncation_bound(lambda)?;
    Ok(if n < lambda.floor() as u64 {
        1.0 - tail_sum(s, 0, n, lambda)
    } else {
        tail_sum(s, n.saturating_add(1), u64::MAX, lambda)
    })
}

/// `pmf(n)` for every `n` in the support, starting at `support.lo`.
pub fn pmf_table(lambda: f64) -> Result<(Support, Vec<f64>), AnalyticsError> {
    let s = truncation_bound(lambda)?;
    let v = (s.lo..=s.hi)
        .map(|n| ln_pmf_unchecked(n, lambda).exp())
        .collect();
    Ok((s, v))
}
