//! Simulation of per-bucket stochastic increments.
//!
//! Inter-packet gaps are exponential with mean `t / λ` ticks and floored to
//! whole ticks; each increment is uniform on `1..=max(1, Δ)`. Only gaps of at
//! least two ticks (probability `exp(-2λ/t)`) can produce an increment above
//! one, so trials skip ahead between such gaps with a geometric draw instead
//! of sampling every packet.
//!
//! Trials run in fixed-size blocks, each with its own generator stream, so
//! results do not depend on the number of threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

use crate::analytics::guess::{check_g, DistributionTable, GuessResult};
use crate::analytics::poisson::{check_rate, truncation_bound};
use crate::analytics::AnalyticsError;
use crate::clock::DEFAULT_TICKS_PER_UNIT;
use crate::rng::sim_rng;
use crate::IPID_SPACE;

const BLOCK: u64 = 4096;
const MASK: u64 = IPID_SPACE as u64 - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimParams {
    pub trials: u64,
    /// Ticks per unit time.
    pub t: u32,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            trials: 100_000,
            t: DEFAULT_TICKS_PER_UNIT,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn check(&self) -> Result<(), AnalyticsError> {
        if self.trials == 0 {
            return Err(AnalyticsError::Domain("trials must be at least 1".into()));
        }
        if self.t == 0 {
            return Err(AnalyticsError::Domain(
                "ticks per unit time must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A Monte Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub probability: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl Estimate {
    fn from_hits(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Estimate {
            probability: p,
            std_err: binomial_se(p, trials),
            trials,
        }
    }
}

pub fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IncrementSample {
    pub delta_ticks: u64,
    pub increment: u64,
}

/// Draws one gap and the increment it produces, packet by packet.
pub fn sample_increment<R: Rng + ?Sized>(lambda_i: f64, t: u32, rng: &mut R) -> IncrementSample {
    let mean = f64::from(t) / lambda_i;
    let e: f64 = Exp1.sample(rng);
    let delta_ticks = (e * mean).floor() as u64;
    let increment = rng.random_range(1..=delta_ticks.max(1));
    IncrementSample {
        delta_ticks,
        increment,
    }
}

/// Samples increments in bulk by jumping between gaps of two or more ticks.
#[derive(Debug, Clone, Copy)]
struct Thinned {
    mean: f64,
    /// ln P[gap < 2 ticks]; `None` when long gaps underflow to impossible.
    ln_short: Option<f64>,
}

impl Thinned {
    fn new(lambda_i: f64, t: u32) -> Self {
        let x = 2.0 * lambda_i / f64::from(t);
        let q = (-x).exp();
        let ln_short = if q == 0.0 {
            None
        } else if q < 0.5 {
            Some((-q).ln_1p())
        } else {
            Some((-(-x).exp_m1()).ln())
        };
        Thinned {
            mean: f64::from(t) / lambda_i,
            ln_short,
        }
    }

    /// Number of short gaps before the next long one.
    #[inline]
    fn skip<R: Rng + ?Sized>(&self, ln_short: f64, rng: &mut R) -> u64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        (u.ln() / ln_short).floor() as u64
    }

    /// Increment from a gap known to span at least two ticks.
    #[inline]
    fn long_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let e: f64 = Exp1.sample(rng);
        let delta = 2u64.saturating_add((e * self.mean).floor() as u64);
        rng.random_range(1..=delta)
    }

    /// Calls `f(position, increment)` for every increment above one among
    /// `m` consecutive increments.
    #[inline]
    fn for_each_long<R: Rng + ?Sized>(&self, m: u64, rng: &mut R, mut f: impl FnMut(u64, u64)) {
        let Some(ln_short) = self.ln_short else {
            return;
        };
        let mut pos = 0u64;
        loop {
            pos = pos.saturating_add(self.skip(ln_short, rng));
            if pos >= m {
                return;
            }
            let c = self.long_increment(rng);
            if c > 1 {
                f(pos, c);
            }
            pos += 1;
        }
    }

    /// Sum of `m` increments, mod 2^16.
    fn sum<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> u16 {
        let mut total = m;
        self.for_each_long(m, rng, |_, c| total = total.wrapping_add(c - 1));
        (total & MASK) as u16
    }

    /// Whether `n` IPIDs produced from a random start by `n - 1` increments
    /// repeat a value.
    fn collides<R: Rng + ?Sized>(&self, n: u64, rng: &mut R, runs: &mut Vec<(u32, u32)>) -> bool {
        if n > IPID_SPACE as u64 {
            return true;
        }
        if n <= 1 {
            return false;
        }
        runs.clear();
        // Runs of +1 steps cover contiguous IPIDs; a long step starts a new run.
        let mut start = rng.random::<u16>() as u64;
        let mut run_first = 0u64;
        let push = |runs: &mut Vec<(u32, u32)>, s: u64, len: u64| {
            let s = (s & MASK) as u32;
            let end = s as u64 + len - 1;
            if end > MASK {
                runs.push((s, MASK as u32));
                runs.push((0, (end - MASK - 1) as u32));
            } else {
                runs.push((s, end as u32));
            }
        };
        self.for_each_long(n - 1, rng, |pos, c| {
            // IPIDs run_first..=pos form a run, then the step to pos + 1 is c
            let len = pos + 1 - run_first;
            push(runs, start, len);
            start = start.wrapping_add(len - 1).wrapping_add(c) & MASK;
            run_first = pos + 1;
        });
        push(runs, start, n - run_first);
        if runs.len() == 1 {
            return false;
        }
        runs.sort_unstable();
        runs.windows(2).any(|w| w[1].0 <= w[0].1)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn point_seed(seed: u64, tag: u64, lambda: f64) -> u64 {
    splitmix(splitmix(seed ^ splitmix(tag)) ^ lambda.to_bits())
}

/// Runs `trials` in blocks, folding each block's results into an
/// accumulator. `trial` sees the block's generator.
fn run_blocks<A, I, T, M>(trials: u64, seed: u64, init: I, trial: T, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    T: Fn(&mut A, &mut ChaCha8Rng) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let blocks = trials.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .fold(&init, |mut acc, b| {
            let mut rng = sim_rng(seed, b);
            let len = BLOCK.min(trials - b * BLOCK);
            for _ in 0..len {
                trial(&mut acc, &mut rng);
            }
            acc
        })
        .reduce(&init, &merge)
}

fn poisson_sampler(lambda: f64) -> Result<(Poisson<f64>, u64, u64), AnalyticsError> {
    let s = truncation_bound(lambda)?;
    let p = Poisson::new(lambda).map_err(|e| AnalyticsError::Domain(e.to_string()))?;
    Ok((p, s.lo, s.hi))
}

/// Fraction of trials in which `n` consecutive per-bucket IPIDs contain a
/// duplicate.
pub fn conditional_collision_bucket(
    n: u64,
    lambda: f64,
    sim: &SimParams,
) -> Result<Estimate, AnalyticsError> {
    check_rate(lambda)?;
    sim.check()?;
    let th = Thinned::new(lambda, sim.t);
    let seed = point_seed(sim.seed, n ^ 0xC011, lambda);
    let hits = run_blocks(
        sim.trials,
        seed,
        || (0u64, Vec::new()),
        |(hits, runs), rng| *hits += u64::from(th.collides(n, rng, runs)),
        |a, b| (a.0 + b.0, Vec::new()),
    )
    .0;
    Ok(Estimate::from_hits(hits, sim.trials))
}

/// Per-bucket collision probability at rate `lambda`, sampling the number of
/// packets in flight per trial.
pub fn collision_prob_bucket(lambda: f64, sim: &SimParams) -> Result<Estimate, AnalyticsError> {
    check_rate(lambda)?;
    sim.check()?;
    let th = Thinned::new(lambda, sim.t);
    let (poisson, lo, hi) = poisson_sampler(lambda)?;
    let seed = point_seed(sim.seed, 0xC011_1510, lambda);
    let hits = run_blocks(
        sim.trials,
        seed,
        || (0u64, Vec::new()),
        |(hits, runs), rng| {
            let n = (poisson.sample(rng) as u64).clamp(lo, hi);
            *hits += u64::from(th.collides(n, rng, runs));
        },
        |a, b| (a.0 + b.0, Vec::new()),
    )
    .0;
    Ok(Estimate::from_hits(hits, sim.trials))
}

/// Histogram of `Σ_{j=1}^{n+1} c_j mod 2^16` with `n ~ Poisson(λ_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumHistogram {
    pub counts: Vec<u64>,
    pub trials: u64,
}

impl SumHistogram {
    pub fn table(&self) -> DistributionTable {
        DistributionTable::from_counts(&self.counts)
    }
}

pub fn increment_sum_histogram(
    lambda_i: f64,
    sim: &SimParams,
) -> Result<SumHistogram, AnalyticsError> {
    check_rate(lambda_i)?;
    sim.check()?;
    let th = Thinned::new(lambda_i, sim.t);
    let (poisson, lo, hi) = poisson_sampler(lambda_i)?;
    let seed = point_seed(sim.seed, 0x5_0000, lambda_i);
    let counts = run_blocks(
        sim.trials,
        seed,
        || vec![0u64; IPID_SPACE],
        |h, rng| {
            let n = (poisson.sample(rng) as u64).clamp(lo, hi);
            h[usize::from(th.sum(n + 1, rng))] += 1;
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    Ok(SumHistogram {
        counts,
        trials: sim.trials,
    })
}

pub fn increment_sum_distribution(
    lambda_i: f64,
    sim: &SimParams,
) -> Result<DistributionTable, AnalyticsError> {
    Ok(increment_sum_histogram(lambda_i, sim)?.table())
}

/// Per-bucket guess probability: top-`g` mass of the simulated next-IPID
/// distribution, with the binomial standard error of that mass.
pub fn guess_prob_bucket(
    lambda_i: f64,
    g: usize,
    sim: &SimParams,
) -> Result<(GuessResult, f64), AnalyticsError> {
    check_g(g)?;
    let result = increment_sum_distribution(lambda_i, sim)?.top(g)?;
    let se = binomial_se(result.probability, sim.trials);
    Ok((result, se))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn naive_sum<R: Rng>(lambda: f64, t: u32, m: u64, rng: &mut R) -> u16 {
        let mut s = 0u64;
        for _ in 0..m {
            s = s.wrapping_add(sample_increment(lambda, t, rng).increment);
        }
        (s & MASK) as u16
    }

    fn naive_collides<R: Rng>(lambda: f64, t: u32, n: u64, rng: &mut R) -> bool {
        let mut seen = vec![false; IPID_SPACE];
        let mut x: u16 = rng.random();
        for i in 0..n {
            if i > 0 {
                x = x.wrapping_add(sample_increment(lambda, t, rng).increment as u16);
            }
            if std::mem::replace(&mut seen[usize::from(x)], true) {
                return true;
            }
        }
        false
    }

    #[test]
    fn floored_exponential_mean() {
        // E[floor(Exp(1))] = 1 / (e - 1)
        let mut rng = sim_rng(1, 0);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_increment(3.0, 3, &mut rng).delta_ticks as f64)
            .sum::<f64>()
            / f64::from(n);
        assert!((mean - 0.581_976_706_869_326_42).abs() < 0.01, "{mean}");
    }

    #[test]
    fn increment_within_range() {
        let mut rng = sim_rng(2, 0);
        for &l in &[1e-3, 0.5, 3.0, 1e6] {
            for _ in 0..10_000 {
                let s = sample_increment(l, 3, &mut rng);
                assert!(s.increment >= 1 && s.increment <= s.delta_ticks.max(1));
            }
        }
        let mut hi = 0;
        for _ in 0..1000 {
            hi = hi.max(sample_increment(1e9, 3, &mut rng).increment);
        }
        assert_eq!(hi, 1);
    }

    #[test]
    fn thinned_sum_matches_naive_sum() {
        // Compare means of the (unwrapped, small) sums across samplers.
        for &(l, m) in &[(0.5f64, 3u64), (3.0, 10), (12.0, 50)] {
            let th = Thinned::new(l, 3);
            let trials = 40_000;
            let mut a = sim_rng(3, 0);
            let mut b = sim_rng(4, 0);
            let mut sa = Vec::with_capacity(trials);
            let mut sb = Vec::with_capacity(trials);
            for _ in 0..trials {
                sa.push(f64::from(th.sum(m, &mut a)));
                sb.push(f64::from(naive_sum(l, 3, m, &mut b)));
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let var = |v: &[f64]| {
                let m = mean(v);
                v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
            };
            let se = ((var(&sa) + var(&sb)) / trials as f64).sqrt();
            assert!(
                (mean(&sa) - mean(&sb)).abs() < 4.0 * se,
                "l={l}: {} vs {}",
                mean(&sa),
                mean(&sb)
            );
        }
    }

    #[test]
    fn thinned_collision_matches_naive() {
        // mean step ~30: 2200 IPIDs wrap by a few hundred values
        let (l, n) = (0.05, 2200);
        let th = Thinned::new(l, 3);
        let trials = 4_000;
        let mut a = sim_rng(5, 0);
        let mut b = sim_rng(6, 0);
        let mut runs = Vec::new();
        let pa = (0..trials)
            .filter(|_| th.collides(n, &mut a, &mut runs))
            .count() as f64
            / trials as f64;
        let pb = (0..trials)
            .filter(|_| naive_collides(l, 3, n, &mut b))
            .count() as f64
            / trials as f64;
        assert!(pa > 0.02 && pa < 0.98, "{pa}");
        let se = (pa * (1.0 - pa) / trials as f64 + pb * (1.0 - pb) / trials as f64).sqrt();
        assert!((pa - pb).abs() < 4.0 * se, "{pa} vs {pb}");
    }

    #[test]
    fn run_overlap_detection() {
        // Every gap long: behaves like independent draws of spread-out values.
        let th = Thinned::new(1e-9, 3);
        let mut rng = sim_rng(7, 0);
        let mut runs = Vec::new();
        let trials = 20_000;
        let p = (0..trials)
            .filter(|_| th.collides(300, &mut rng, &mut runs))
            .count() as f64
            / trials as f64;
        // Birthday value for 300 uniform draws.
        let want = 0.496_112_163_927_709_1;
        assert!((p - want).abs() < 4.0 * binomial_se(want, trials), "{p}");
    }

    #[test]
    fn trivial_cases() {
        let sim = SimParams::default().with_trials(1000);
        assert_eq!(
            conditional_collision_bucket(1, 5.0, &sim)
                .unwrap()
                .probability,
            0.0
        );
        assert_eq!(
            conditional_collision_bucket(65537, 1e6, &sim)
                .unwrap()
                .probability,
            1.0
        );
        assert_eq!(
            conditional_collision_bucket(65536, 1e6, &sim)
                .unwrap()
                .probability,
            0.0
        );
    }

    #[test]
    fn results_are_seed_deterministic() {
        let sim = SimParams::default().with_trials(10_000).with_seed(9);
        let a = increment_sum_histogram(2.0, &sim).unwrap();
        let b = increment_sum_histogram(2.0, &sim).unwrap();
        assert_eq!(a, b);
        let c = increment_sum_histogram(2.0, &sim.with_seed(10)).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.counts.iter().sum::<u64>(), 10_000);
    }

    #[test]
    fn block_partition_is_thread_independent() {
        let sim = SimParams::default()
            .with_trials(3 * BLOCK + 17)
            .with_seed(4);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let quad = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = serial.install(|| collision_prob_bucket(3.0, &sim).unwrap());
        let b = quad.install(|| collision_prob_bucket(3.0, &sim).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(conditional_collision_bucket(2, 0.0, &SimParams::default()).is_err());
        assert!(increment_sum_histogram(1.0, &SimParams::default().with_trials(0)).is_err());
    }
}
