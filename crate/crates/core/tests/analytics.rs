use ipid_core::analytics::{
    collision::{collision_prob_counter, collision_prob_prng, conditional_collision_birthday},
    guess::{guess_prob_counter, guess_prob_prng},
    poisson,
};
use ipid_core::{Method, Selector, SelectorConfig};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

#[test]
fn poisson_agrees_with_incomplete_gamma() {
    for &lambda in &[0.5, 3.0, 40.0, 700.0, 16384.0, 65536.0] {
        let reference = Poisson::new(lambda).unwrap();
        let mode = lambda.floor() as u64;
        let spread = (6.0 * lambda.sqrt()).ceil() as u64 + 3;
        for n in mode.saturating_sub(spread)..=mode + spread {
            let p = poisson::pmf(n, lambda).unwrap();
            assert!(
                close(p, reference.pmf(n), 1e-9),
                "pmf n={n} λ={lambda}: {p} vs {}",
                reference.pmf(n)
            );
            let c = poisson::cdf(n, lambda).unwrap();
            assert!(close(c, reference.cdf(n), 1e-8), "cdf n={n} λ={lambda}");
            let s = poisson::sf(n, lambda).unwrap();
            assert!(close(s, reference.sf(n), 1e-8), "sf n={n} λ={lambda}");
        }
    }
}

#[test]
fn counter_collision_near_half_at_full_space() {
    let p = collision_prob_counter(65536.0).unwrap();
    let reference = Poisson::new(65536.0).unwrap().sf(65536);
    assert!(close(p, reference, 1e-9));
    assert!((p - 0.499).abs() < 1e-3);
}

#[test]
fn pure_prng_output_is_uniform() {
    let sel = Selector::new(
        SelectorConfig::new(Method::PrngPure)
            .with_seed(2024)
            .with_avoid_zero(false),
    )
    .unwrap();
    let mut req = sel.requester(0);
    let draws = 10_000_000usize;
    let mut counts = vec![0u64; 1 << 16];
    for _ in 0..draws {
        counts[req.next_salted(0).0 as usize] += 1;
    }
    let expected = draws as f64 / 65536.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = ChiSquared::new(65535.0).unwrap().sf(chi2);
    assert!(p > 0.001, "chi2 {chi2}, p = {p}");
}

#[test]
fn counter_guess_peaks_for_quiet_resources() {
    assert!(guess_prob_counter(1.0 / 1024.0, 1).unwrap().probability > 0.99);
    let busy = guess_prob_counter(256.0, 1).unwrap().probability;
    let pmf_peak = Poisson::new(256.0)
        .unwrap()
        .pmf(256)
        .max(Poisson::new(256.0).unwrap().pmf(255));
    assert!(close(busy, pmf_peak, 1e-9));
}

proptest! {
    #[test]
    fn collision_probabilities_are_probabilities(log_lambda in -14.0f64..20.0, k in 0u32..65535) {
        let lambda = log_lambda.exp2();
        let c = collision_prob_counter(lambda).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        let p = collision_prob_prng(lambda, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn prng_collision_falls_as_reservation_grows(log_lambda in -4.0f64..12.0, k in 0u32..60000, dk in 1u32..5000) {
        let lambda = log_lambda.exp2();
        let k2 = (k + dk).min(65535);
        let lo = collision_prob_prng(lambda, k2).unwrap();
        let hi = collision_prob_prng(lambda, k).unwrap();
        prop_assert!(lo <= hi + 1e-15, "k={k}: {hi} < k={k2}: {lo}");
    }

    #[test]
    fn birthday_is_monotone(n in 0u64..70000, k in 0u32..65535) {
        let p = conditional_collision_birthday(n, k).unwrap();
        let more = conditional_collision_birthday(n + 1, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(more >= p);
        if k < 65534 {
            prop_assert!(conditional_collision_birthday(n, k + 1).unwrap() <= p);
        }
    }

    #[test]
    fn prng_guess_rises_with_reservation(g in 1usize..65536, k in 0u32..65535) {
        let a = guess_prob_prng(g, k).unwrap();
        let b = guess_prob_prng(g, (k + 1).min(65535)).unwrap();
        prop_assert!(a <= b);
        prop_assert!(a <= 1.0);
    }

    #[test]
    fn counter_guess_never_below_prng(log_lambda in -12.0f64..20.0, g in 1usize..2000) {
        let c = guess_prob_counter(log_lambda.exp2(), g).unwrap().probability;
        prop_assert!(c + 1e-12 >= g as f64 / 65536.0);
        prop_assert!(c <= 1.0 + 1e-12);
    }
}
