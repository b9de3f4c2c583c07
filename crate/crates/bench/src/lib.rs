//! Fixtures shared by the criterion benchmarks.

use ipid_core::harness::{generate_trace, Trace, TraceParams};
use ipid_core::select::SelectorConfig;
use ipid_core::Method;

/// A small Zipf trace with a fixed seed.
pub fn fixture_trace() -> Trace {
    generate_trace(&TraceParams {
        packets: 1 << 14,
        flows: 1 << 10,
        seed: 7,
        ..TraceParams::default()
    })
    .expect("fixture parameters are valid")
}

pub fn fixture_config(method: Method) -> SelectorConfig {
    SelectorConfig::new(method).with_seed(7)
}
