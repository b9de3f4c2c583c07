use super::poisson::{ln_pmf_unchecked, sf, truncation_bound};
use super::AnalyticsError;
use crate::sum::CompensatedSum;
use crate::IPID_SPACE;

const SPACE: u64 = IPID_SPACE as u64;

/// Collision probability for any sequential counter: some counter value has
/// to be reused, which takes more than 2^16 packets in flight.
pub fn collision_prob_counter(lambda: f64) -> Result<f64, AnalyticsError> {
    sf(SPACE, lambda)
}

fn check_k(k: u32) -> Result<(), AnalyticsError> {
    if (k as usize) < IPID_SPACE {
        Ok(())
    } else {
        Err(AnalyticsError::Domain(format!(
            "k = {k} must be below {IPID_SPACE}"
        )))
    }
}

/// Probability that `n` in-flight IPIDs from a PRNG that never repeats within
/// `k` draws contain a duplicate.
pub fn conditional_collision_birthday(n: u64, k: u32) -> Result<f64, AnalyticsError> {
    check_k(k)?;
    let k = u64::from(k);
    if n <= k {
        return Ok(0.0);
    }
    if n > SPACE {
        return Ok(1.0);
    }
    let days = (SPACE - k) as f64;
    let ln_none: f64 = (0..n - k)
        .map(|i| (-(i as f64) / days).ln_1p())
        .collect::<CompensatedSum>()
        .value();
    Ok(-ln_none.exp_m1())
}

/// Collision probability for PRNG selection with `k` reserved IPIDs
/// (`k = 0` for the pure PRNG; the iterated shuffle shares the formula).
pub fn collision_prob_prng(lambda: f64, k: u32) -> Result<f64, AnalyticsError> {
    check_k(k)?;
    let support = truncation_bound(lambda)?;
    let k64 = u64::from(k);
    let days = (SPACE - k64) as f64;
    let from = (k64 + 1).max(support.lo);
    let to = SPACE.min(support.hi);
    let mut total = CompensatedSum::default();
    if from <= to {
        // ln of the no-duplicate product for n = from
        let mut ln_none: f64 = (0..from - k64)
            .map(|i| (-(i as f64) / days).ln_1p())
            .collect::<CompensatedSum>()
            .value();
        for n in from..=to {
            total.add(-ln_none.exp_m1() * ln_pmf_unchecked(n, lambda).exp());
            ln_none += (-((n - k64) as f64) / days).ln_1p();
        }
    }
    total.add(sf(SPACE, lambda)?);
    Ok(total.value().min(1.0))
}
