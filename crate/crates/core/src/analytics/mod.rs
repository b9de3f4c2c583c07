//! Collision and adversarial-guess probabilities under Poisson traffic.

pub mod collision;
pub mod guess;
pub mod poisson;

use thiserror::Error;

use crate::clock::DEFAULT_TICKS_PER_UNIT;
use crate::montecarlo::{self, SimParams};
use crate::{Method, IPID_SPACE};

pub use collision::{collision_prob_counter, collision_prob_prng, conditional_collision_birthday};
pub use guess::{
    counter_distribution, guess_prob_counter, guess_prob_per_connection, guess_prob_prng,
    DistributionTable, GuessResult,
};
pub use poisson::{cdf, pmf, sf, truncation_bound, Support};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("domain error: {0}")]
    Domain(String),
}

/// Traffic seen by the sender and by one IPID resource.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficModel {
    /// Total packets per unit time.
    pub lambda: f64,
    /// Packets per unit time assigned by the resource under attack.
    pub lambda_i: f64,
    /// Number of resources.
    pub r: usize,
    /// Guess budget.
    pub g: usize,
    /// Reserved IPIDs for queue and shuffle PRNGs.
    pub k: u32,
    /// Ticks per unit time.
    pub t: u32,
}

impl TrafficModel {
    /// Traffic spread evenly: `lambda_i = lambda / r`.
    pub fn uniform(lambda: f64, r: usize, g: usize) -> Result<Self, AnalyticsError> {
        let m = TrafficModel {
            lambda,
            lambda_i: lambda / r.max(1) as f64,
            r,
            g,
            k: 0,
            t: DEFAULT_TICKS_PER_UNIT,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn with_lambda_i(mut self, lambda_i: f64) -> Self {
        self.lambda_i = lambda_i;
        self
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let bad = |m: String| Err(AnalyticsError::Domain(m));
        poisson::check_rate(self.lambda)?;
        if !(self.lambda_i > 0.0 && self.lambda_i <= self.lambda) {
            return bad(format!(
                "lambda_i = {} must lie in (0, lambda]",
                self.lambda_i
            ));
        }
        if self.r == 0 {
            return bad("r must be at least 1".into());
        }
        guess::check_g(self.g)?;
        if self.k as usize >= IPID_SPACE {
            return bad(format!("k = {} must be below {IPID_SPACE}", self.k));
        }
        if self.t == 0 {
            return bad("t must be at least 1".into());
        }
        Ok(())
    }
}

/// A probability, with a standard error when it was simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Value {
    pub value: f64,
    pub std_err: Option<f64>,
}

impl Value {
    fn exact(value: f64) -> Self {
        Value {
            value,
            std_err: None,
        }
    }
}

fn reserved(method: Method, k: u32) -> u32 {
    match method {
        Method::PrngQueue | Method::PrngShuffle => k,
        _ => 0,
    }
}

/// Collision probability for `method` at total rate `lambda`.
pub fn collision_prob(
    method: Method,
    lambda: f64,
    k: u32,
    sim: &SimParams,
) -> Result<Value, AnalyticsError> {
    Ok(match method {
        Method::Global | Method::PerConnection | Method::PerDestination => {
            Value::exact(collision_prob_counter(lambda)?)
        }
        Method::PerBucketExclusive | Method::PerBucketRacy => {
            let e = montecarlo::collision_prob_bucket(lambda, sim)?;
            Value {
                value: e.probability,
                std_err: Some(e.std_err),
            }
        }
        Method::PrngQueue | Method::PrngShuffle | Method::PrngPure => {
            Value::exact(collision_prob_prng(lambda, reserved(method, k))?)
        }
    })
}

/// Guess probability against one resource of `method` at `model.lambda_i`.
pub fn guess_prob(
    method: Method,
    model: &TrafficModel,
    sim: &SimParams,
) -> Result<Value, AnalyticsError> {
    model.validate()?;
    let g = model.g;
    Ok(match method {
        Method::Global | Method::PerDestination => {
            Value::exact(guess_prob_counter(model.lambda_i, g)?.probability)
        }
        Method::PerConnection => Value::exact(guess_prob_per_connection(g)?),
        Method::PerBucketExclusive | Method::PerBucketRacy => {
            let sim = SimParams { t: model.t, ..*sim };
            let (r, se) = montecarlo::guess_prob_bucket(model.lambda_i, g, &sim)?;
            Value {
                value: r.probability,
                std_err: Some(se),
            }
        }
        Method::PrngQueue | Method::PrngShuffle | Method::PrngPure => {
            Value::exact(guess_prob_prng(g, reserved(method, model.k))?)
        }
    })
}

/// Log-spaced search grid below the total rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorstCaseGrid {
    pub points_per_octave: u32,
    pub octaves: u32,
}

impl Default for WorstCaseGrid {
    fn default() -> Self {
        WorstCaseGrid {
            points_per_octave: 64,
            octaves: 30,
        }
    }
}

impl WorstCaseGrid {
    /// `lambda * 2^(-j / points_per_octave)` for `j = 0..=points_per_octave * octaves`.
    pub fn points(&self, lambda: f64) -> Vec<f64> {
        let ppo = self.points_per_octave.max(1);
        (0..=ppo * self.octaves)
            .map(|j| lambda * (-(f64::from(j)) / f64::from(ppo)).exp2())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub lambda_i: f64,
    pub value: Value,
}

/// Resource rate in `(0, lambda]` that maximizes the guess probability.
/// With a single resource the rate is forced to `lambda`.
pub fn worst_case_lambda_i(
    method: Method,
    model: &TrafficModel,
    sim: &SimParams,
    grid: &WorstCaseGrid,
) -> Result<WorstCase, AnalyticsError> {
    let base = model.with_lambda_i(model.lambda);
    base.validate()?;
    if model.r == 1 {
        return Ok(WorstCase {
            lambda_i: model.lambda,
            value: guess_prob(method, &base, sim)?,
        });
    }
    let mut best: Option<WorstCase> = None;
    for li in grid.points(model.lambda) {
        let v = guess_prob(method, &base.with_lambda_i(li), sim)?;
        if best.is_none_or(|b| v.value > b.value.value) {
            best = Some(WorstCase {
                lambda_i: li,
                value: v,
            });
        }
    }
    Ok(best.expect("grid has at least one point"))
}

/// Number of independent IPID resources a method exposes; `r` is used by
/// per-destination and per-bucket.
pub fn resource_count(method: Method, r: usize) -> usize {
    match method {
        Method::Global | Method::PrngQueue | Method::PrngShuffle | Method::PrngPure => 1,
        Method::PerConnection
        | Method::PerDestination
        | Method::PerBucketExclusive
        | Method::PerBucketRacy => r,
    }
}
