//! IPv4 identifier (IPID) selection: the seven selection methods, closed-form
//! and simulated collision/guess analytics, a multi-core contention benchmark,
//! and a rate-based method recommender.
//!
//! The crate is organized by concern:
//!
//! - [`select`]: concurrency-correct implementations of every selection method
//!   behind a shared [`Selector`].
//! - [`analytics`]: Poisson traffic model, collision probabilities, and
//!   adversarial guess probabilities.
//! - [`montecarlo`]: simulation of per-bucket stochastic increments.
//! - [`harness`]: packet traces and the wall-clock contention benchmark.
//! - [`recommend`]: mapping estimated traffic rates to a method configuration.

pub mod analytics;
pub mod clock;
pub mod harness;
mod ipid;
mod method;
pub mod montecarlo;
pub mod recommend;
pub mod rng;
pub mod select;
mod sum;

pub use crate::clock::{SystemClock, TickClock, VirtualClock};
pub use crate::ipid::{FlowKey, FlowKeyError, Ipid, IPID_SPACE};
pub use crate::method::{Method, UnknownMethod};
pub use crate::select::{ConfigError, Requester, Selector, SelectorConfig};
