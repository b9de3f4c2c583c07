//! The IPID selection methods and a shared [`Selector`] front end.
//!
//! A [`Selector`] owns the method's shared state and is shared across
//! requesting contexts. Each context obtains a [`Requester`], which holds the
//! context-local generator and, for per-connection selection, the connection
//! counter.

pub mod bucket;
pub mod connection;
pub mod destination;
pub mod global;
pub mod pure;
pub mod queue;
pub mod shuffle;

use std::sync::Arc;

use parking_lot::Mutex;
use thiserror::Error;

use crate::clock::{SystemClock, TickClock};
use crate::rng::{secure_rng, IpidRng, SecureRng};
use crate::{FlowKey, Ipid, Method, IPID_SPACE};

pub use bucket::{bucket_index, BucketStep, ExclusiveBuckets, HashKey, RacyBuckets};
pub use connection::ConnectionState;
pub use destination::{DestinationEntry, DestinationTable, PurgePolicy, PurgeReport};
pub use global::GlobalCounter;
pub use pure::{fold_salt, next_pure};
pub use queue::SearchableQueue;
pub use shuffle::ShufflePermutation;

pub const MIN_BUCKETS: usize = 1 << 11;
pub const MAX_BUCKETS: usize = 1 << 18;
pub const DEFAULT_BUCKETS: usize = 1 << 11;
pub const DEFAULT_QUEUE_K: u32 = 1 << 13;
pub const DEFAULT_SHUFFLE_K: u32 = 1 << 15;

/// Per-destination purge parameters in seconds and counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurgeConfig {
    pub threshold: usize,
    pub stale_timeout_s: f64,
    pub interval_s: f64,
    pub batch_floor: usize,
    pub add_check_limit: usize,
}

impl Default for PurgeConfig {
    fn default() -> Self {
        PurgeConfig {
            threshold: 1 << 15,
            stale_timeout_s: 60.0,
            interval_s: 0.5,
            batch_floor: 1000,
            add_check_limit: 5000,
        }
    }
}

impl PurgeConfig {
    pub fn to_policy(&self, clock: &dyn TickClock) -> PurgePolicy {
        PurgePolicy {
            threshold: self.threshold,
            stale_timeout_ticks: clock.seconds_to_ticks(self.stale_timeout_s),
            interval_ticks: clock.seconds_to_ticks(self.interval_s),
            batch_floor: self.batch_floor,
            add_check_limit: self.add_check_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    pub method: Method,
    /// Bucket count (per-bucket methods).
    pub r: usize,
    /// Reserved IPIDs (queue and shuffle).
    pub k: u32,
    pub purge: PurgeConfig,
    /// SipHash key; drawn from the seeded generator when absent.
    pub hash_key: Option<u128>,
    pub avoid_zero: bool,
    pub seed: u64,
}

impl SelectorConfig {
    /// Defaults for `method`. Zero-avoidance is on for PRNG methods.
    pub fn new(method: Method) -> Self {
        SelectorConfig {
            method,
            r: DEFAULT_BUCKETS,
            k: match method {
                Method::PrngShuffle => DEFAULT_SHUFFLE_K,
                Method::PrngQueue => DEFAULT_QUEUE_K,
                _ => 0,
            },
            purge: PurgeConfig::default(),
            hash_key: None,
            avoid_zero: method.is_prng(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_r(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn with_avoid_zero(mut self, on: bool) -> Self {
        self.avoid_zero = on;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, reason: String| Err(ConfigError::Invalid { field, reason });
        if self.method.is_per_bucket() && !(MIN_BUCKETS..=MAX_BUCKETS).contains(&self.r) {
            return invalid(
                "r",
                format!("{} is outside [{MIN_BUCKETS}, {MAX_BUCKETS}]", self.r),
            );
        }
        if self.method.is_prng() && self.k as usize >= IPID_SPACE {
            return invalid("k", format!("{} must be below {IPID_SPACE}", self.k));
        }
        if self.method == Method::PrngQueue && self.avoid_zero && self.k as usize >= IPID_SPACE - 1
        {
            return invalid("k", format!("{} leaves no nonzero IPID to draw", self.k));
        }
        if self.avoid_zero && !self.method.is_prng() {
            return invalid("avoid_zero", format!("not supported by {}", self.method));
        }
        if self.method == Method::PerDestination {
            let p = &self.purge;
            if p.threshold == 0 {
                return invalid("purge_threshold", "must be positive".into());
            }
            if !(p.stale_timeout_s.is_finite() && p.stale_timeout_s >= 0.0) {
                return invalid(
                    "stale_timeout_s",
                    format!("{} is not a valid duration", p.stale_timeout_s),
                );
            }
            if !(p.interval_s.is_finite() && p.interval_s >= 0.0) {
                return invalid(
                    "purge_interval_s",
                    format!("{} is not a valid duration", p.interval_s),
                );
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    pub fn field(&self) -> &'static str {
        match self {
            ConfigError::Invalid { field, .. } => field,
        }
    }
}

enum State {
    Global(GlobalCounter),
    PerConnection,
    PerDestination(Mutex<DestinationTable>),
    BucketExclusive(ExclusiveBuckets),
    BucketRacy(RacyBuckets),
    Queue(Mutex<SearchableQueue>),
    Shuffle(Mutex<ShufflePermutation>),
    Pure,
}

/// Shared selection state for one method.
pub struct Selector {
    config: SelectorConfig,
    clock: Arc<dyn TickClock>,
    state: State,
}

impl std::fmt::Debug for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Selector")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Selector {
    /// Builds a selector on a fresh [`SystemClock`].
    pub fn new(config: SelectorConfig) -> Result<Self, ConfigError> {
        Self::with_clock(config, Arc::new(SystemClock::default()))
    }

    pub fn with_clock(
        config: SelectorConfig,
        clock: Arc<dyn TickClock>,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut rng = secure_rng(config.seed, 0);
        let now = clock.now();
        let key = || match config.hash_key {
            Some(k) => HashKey::from_u128(k),
            None => HashKey::random(&mut secure_rng(config.seed, u64::MAX)),
        };
        let state = match config.method {
            Method::Global => State::Global(GlobalCounter::new(IpidRng::next_u16(&mut rng))),
            Method::PerConnection => State::PerConnection,
            Method::PerDestination => State::PerDestination(Mutex::new(DestinationTable::new(
                config.purge.to_policy(clock.as_ref()),
                now,
            ))),
            Method::PerBucketExclusive => {
                State::BucketExclusive(ExclusiveBuckets::new(config.r, key(), now, &mut rng))
            }
            Method::PerBucketRacy => {
                State::BucketRacy(RacyBuckets::new(config.r, key(), now, &mut rng))
            }
            Method::PrngQueue => State::Queue(Mutex::new(SearchableQueue::new(
                config.k as usize,
                config.avoid_zero,
            ))),
            Method::PrngShuffle => State::Shuffle(Mutex::new(ShufflePermutation::new(
                config.k,
                config.avoid_zero,
                &mut rng,
            ))),
            Method::PrngPure => State::Pure,
        };
        Ok(Selector {
            config,
            clock,
            state,
        })
    }

    pub fn method(&self) -> Method {
        self.config.method
    }

    pub fn config(&self) -> &SelectorConfig {
        &self.config
    }

    pub fn clock(&self) -> &Arc<dyn TickClock> {
        &self.clock
    }

    /// A requester for execution context `context`. Contexts with distinct
    /// numbers draw from independent generator streams.
    pub fn requester(&self, context: u64) -> Requester<'_> {
        let mut rng = secure_rng(self.config.seed, context.wrapping_add(1));
        let connection = ConnectionState::new(&mut rng);
        Requester {
            selector: self,
            rng,
            connection,
        }
    }

    pub fn global_counter(&self) -> Option<&GlobalCounter> {
        match &self.state {
            State::Global(c) => Some(c),
            _ => None,
        }
    }

    pub fn destination_table_len(&self) -> Option<usize> {
        match &self.state {
            State::PerDestination(t) => Some(t.lock().len()),
            _ => None,
        }
    }

    /// Runs `f` on the per-destination table under its lock.
    pub fn with_destination_table<T>(
        &self,
        f: impl FnOnce(&mut DestinationTable) -> T,
    ) -> Option<T> {
        match &self.state {
            State::PerDestination(t) => Some(f(&mut t.lock())),
            _ => None,
        }
    }

    pub fn bucket_key(&self) -> Option<HashKey> {
        match &self.state {
            State::BucketExclusive(b) => Some(*b.key()),
            State::BucketRacy(b) => Some(*b.key()),
            _ => None,
        }
    }

    pub fn is_shuffle_permutation(&self) -> Option<bool> {
        match &self.state {
            State::Shuffle(p) => Some(p.lock().is_permutation()),
            _ => None,
        }
    }

    pub fn is_queue_consistent(&self) -> Option<bool> {
        match &self.state {
            State::Queue(q) => Some(q.lock().is_consistent()),
            _ => None,
        }
    }
}

/// One execution context's handle on a [`Selector`].
pub struct Requester<'a> {
    selector: &'a Selector,
    rng: SecureRng,
    connection: ConnectionState,
}

impl Requester<'_> {
    /// Next IPID for a packet of `flow`. Per-connection selection uses this
    /// requester's own connection counter; pure PRNG salts with the flow.
    #[inline]
    pub fn next(&mut self, flow: &FlowKey) -> Ipid {
        let sel = self.selector;
        match &sel.state {
            State::Global(c) => c.next(),
            State::PerConnection => self.connection.next(),
            State::PerDestination(t) => {
                let mut t = t.lock();
                let now = sel.clock.now();
                t.next(flow.src(), flow.dst(), now, &mut self.rng)
            }
            State::BucketExclusive(b) => b.next(flow, || sel.clock.now(), &mut self.rng),
            State::BucketRacy(b) => b.next(flow, || sel.clock.now(), &mut self.rng),
            State::Queue(q) => q.lock().next(&mut self.rng),
            State::Shuffle(p) => p.lock().next(&mut self.rng),
            State::Pure => next_pure(&mut self.rng, flow.salt(), sel.config.avoid_zero),
        }
    }

    /// Per-bucket step with its observed increment. `None` for other methods.
    pub fn next_bucket_step(&mut self, flow: &FlowKey) -> Option<BucketStep> {
        let sel = self.selector;
        match &sel.state {
            State::BucketExclusive(b) => Some(b.step(flow, || sel.clock.now(), &mut self.rng)),
            State::BucketRacy(b) => Some(b.step(flow, || sel.clock.now(), &mut self.rng)),
            _ => None,
        }
    }

    /// Pure PRNG draw with an explicit salt.
    pub fn next_salted(&mut self, salt: u64) -> Ipid {
        next_pure(&mut self.rng, salt, self.selector.config.avoid_zero)
    }

    pub fn connection(&self) -> &ConnectionState {
        &self.connection
    }

    pub fn set_connection(&mut self, state: ConnectionState) {
        self.connection = state;
    }
}
