//! Throughput benchmark over packet traces.

pub mod bench;
pub mod trace;

pub use bench::{
    export_report, read_reports, report_records, run_benchmark, write_report, BenchConfig,
    BenchError, BenchReport, TrialReport, WorkerRow, WorkerStats, REPORT_HEADER,
};
pub use trace::{
    generate_trace, load_trace, load_trace_as, save_trace, save_trace_as, PacketRecord, Trace,
    TraceError, TraceFormat, TraceParams, TraceSource,
};
