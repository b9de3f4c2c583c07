use super::poisson::pmf_table;
use super::AnalyticsError;
use crate::sum::CompensatedSum;
use crate::IPID_SPACE;

/// Probability mass over all 2^16 possible next IPIDs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    mass: Vec<f64>,
}

impl DistributionTable {
    pub fn zeros() -> Self {
        DistributionTable {
            mass: vec![0.0; IPID_SPACE],
        }
    }

    /// # Panics
    /// If `mass` does not have exactly 2^16 entries.
    pub fn from_mass(mass: Vec<f64>) -> Self {
        assert_eq!(
            mass.len(),
            IPID_SPACE,
            "distribution needs one entry per IPID"
        );
        DistributionTable { mass }
    }

    /// Normalized histogram of observed IPIDs.
    pub fn from_counts(counts: &[u64]) -> Self {
        assert_eq!(counts.len(), IPID_SPACE, "histogram needs one bin per IPID");
        let total: u64 = counts.iter().sum();
        let scale = if total == 0 { 0.0 } else { 1.0 / total as f64 };
        DistributionTable {
            mass: counts.iter().map(|&c| c as f64 * scale).collect(),
        }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, x: u16) -> f64 {
        self.mass[usize::from(x)]
    }

    pub fn total(&self) -> f64 {
        self.mass
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn normalize(&mut self) {
        let t = self.total();
        if t > 0.0 {
            self.mass.iter_mut().for_each(|m| *m /= t);
        }
    }

    /// The `g` most likely IPIDs (ties broken toward lower values) and their
    /// combined mass.
    pub fn top(&self, g: usize) -> Result<GuessResult, AnalyticsError> {
        check_g(g)?;
        Ok(top_of(&self.mass, g, 0))
    }
}

/// An optimal guess set and its success probability.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessResult {
    pub guesses: Vec<u16>,
    pub probability: f64,
}

pub(crate) fn check_g(g: usize) -> Result<(), AnalyticsError> {
    if (1..=IPID_SPACE).contains(&g) {
        Ok(())
    } else {
        Err(AnalyticsError::Domain(format!(
            "g = {g} must lie in [1, {IPID_SPACE}]"
        )))
    }
}

/// Top `g` of `mass`, where `mass[i]` belongs to IPID `(i + base) mod 2^16`.
/// Cells beyond `mass.len()` hold zero mass.
fn top_of(mass: &[f64], g: usize, base: u64) -> GuessResult {
    let mut idx: Vec<u32> = (0..mass.len() as u32).collect();
    let by_mass = |a: &u32, b: &u32| {
        mass[*b as usize]
            .total_cmp(&mass[*a as usize])
            .then(a.cmp(b))
    };
    let take = g.min(idx.len());
    if take < idx.len() && take > 0 {
        idx.select_nth_unstable_by(take - 1, by_mass);
        idx.truncate(take);
    }
    idx.sort_unstable_by(by_mass);
    let probability = idx
        .iter()
        .map(|&i| mass[i as usize])
        .collect::<CompensatedSum>()
        .value()
        .min(1.0);
    let mut guesses: Vec<u16> = idx
        .iter()
        .map(|&i| ((u64::from(i) + base) % IPID_SPACE as u64) as u16)
        .collect();
    if guesses.len() < g {
        // pad with zero-mass IPIDs
        let used: std::collections::HashSet<u16> = guesses.iter().copied().collect();
        guesses.extend(
            (0..=u16::MAX)
                .filter(|x| !used.contains(x))
                .take(g - used.len()),
        );
    }
    GuessResult {
        guesses,
        probability,
    }
}

/// Next-IPID distribution of a sequential counter whose last observed IPID
/// was `offset`: `n` intervening packets put mass `pmf(n)` at
/// `(offset + n + 1) mod 2^16`.
pub fn counter_distribution(
    lambda_i: f64,
    offset: u16,
) -> Result<DistributionTable, AnalyticsError> {
    let (support, pmf) = pmf_table(lambda_i)?;
    let mut mass = vec![0.0; IPID_SPACE];
    for (j, p) in pmf.into_iter().enumerate() {
        let n = support.lo + j as u64;
        let x = (n + 1 + u64::from(offset)) % IPID_SPACE as u64;
        mass[x as usize] += p;
    }
    Ok(DistributionTable { mass })
}

/// Guess probability against a sequential counter seeing rate `lambda_i`
/// between the adversary's probe and the victim packet.
pub fn guess_prob_counter(lambda_i: f64, g: usize) -> Result<GuessResult, AnalyticsError> {
    check_g(g)?;
    let (support, pmf) = pmf_table(lambda_i)?;
    if support.len() <= IPID_SPACE as u64 {
        // no two counts share an IPID; skip the fold
        return Ok(top_of(&pmf, g, support.lo + 1));
    }
    counter_distribution(lambda_i, 0)?.top(g)
}

pub fn guess_prob_per_connection(g: usize) -> Result<f64, AnalyticsError> {
    check_g(g)?;
    Ok(g as f64 / IPID_SPACE as f64)
}

/// PRNG with `k` reserved IPIDs (`k = 0` for the pure PRNG).
pub fn guess_prob_prng(g: usize, k: u32) -> Result<f64, AnalyticsError> {
    check_g(g)?;
    if k as usize >= IPID_SPACE {
        return Err(AnalyticsError::Domain(format!(
            "k = {k} must be below {IPID_SPACE}"
        )));
    }
    Ok((g as f64 / (IPID_SPACE - k as usize) as f64).min(1.0))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    #[test]
    fn counter_guess_against_high_precision() {
        // mpmath: max over x of the folded pmf, g = 1
        let cases = [
            (-10, 0.999_023_914_181_975_66),
            (0, 0.367_879_441_171_442_32),
            (4, 0.099_217_531_622_155_82),
            (8, 0.024_925_777_348_645_267),
            (16, 0.001_558_366_301_251_613_8),
            (20, 0.000_389_592_039_742_529_35),
        ];
        for (e, want) in cases {
            let got = guess_prob_counter(2f64.powi(e), 1).unwrap().probability;
            assert!((got - want).abs() < 1e-12 * want, "2^{e}: {got} vs {want}");
        }
    }

    #[test]
    fn quiet_counter_guess_is_next_value() {
        let r = guess_prob_counter(2f64.powi(-10), 3).unwrap();
        assert_eq!(r.guesses, vec![1, 2, 3]);
    }

    #[test]
    fn fold_and_direct_paths_agree() {
        for l in [0.5, 40.0, 5000.0] {
            let direct = guess_prob_counter(l, 17).unwrap();
            let folded = counter_distribution(l, 0).unwrap().top(17).unwrap();
            assert_eq!(direct.guesses, folded.guesses);
            assert!((direct.probability - folded.probability).abs() < 1e-15);
        }
    }

    #[test]
    fn full_cover_is_certain() {
        for l in [0.01, 100.0, 70000.0] {
            let p = guess_prob_counter(l, IPID_SPACE).unwrap().probability;
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn offset_shifts_distribution() {
        let a = counter_distribution(300.0, 0).unwrap();
        let b = counter_distribution(300.0, 1234).unwrap();
        for x in 0..=u16::MAX {
            assert_eq!(a.get(x), b.get(x.wrapping_add(1234)));
        }
        assert!((a.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(guess_prob_per_connection(1).unwrap(), 1.0 / 65536.0);
        assert_eq!(guess_prob_per_connection(100).unwrap(), 100.0 / 65536.0);
        assert_eq!(guess_prob_per_connection(65536).unwrap(), 1.0);
        assert_eq!(guess_prob_prng(1, 1 << 15).unwrap(), 1.0 / 32768.0);
        assert_eq!(guess_prob_prng(1, 0).unwrap(), 1.0 / 65536.0);
        assert_eq!(guess_prob_prng(65536 - 4096, 4096).unwrap(), 1.0);
        assert_eq!(guess_prob_prng(65536, 4096).unwrap(), 1.0);
        assert!(guess_prob_per_connection(0).is_err());
        assert!(guess_prob_prng(65537, 0).is_err());
    }
}
