//! Multi-worker IPID request benchmark.
//!
//! Each trial builds a fresh selector and starts `workers` threads behind a
//! barrier. Every worker scans the trace in a loop from its own starting
//! offset, requesting one IPID per record. The first 5% of the duration is
//! warmup and is not timed; afterwards each worker counts requests and
//! measures its own busy time until told to stop.

use std::hint::black_box;
use std::path::Path;
use std::sync::atomic::{AtomicU8, Ordering};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::trace::Trace;
use crate::clock::SystemClock;
use crate::select::{ConfigError, Selector, SelectorConfig};
use crate::{Method, IPID_SPACE};

pub const REPORT_HEADER: [&str; 7] = [
    "method",
    "workers",
    "trial",
    "worker_id",
    "count",
    "mean_ns",
    "throughput",
];

const WARMUP: u8 = 0;
const MEASURE: u8 = 1;
const STOP: u8 = 2;
const BATCH: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub selector: SelectorConfig,
    pub workers: usize,
    pub duration: Duration,
    pub trials: usize,
    pub warmup_fraction: f64,
    /// Pin worker `i` to core `i` where possible.
    pub pin: bool,
}

impl BenchConfig {
    pub fn new(selector: SelectorConfig, workers: usize) -> Self {
        BenchConfig {
            selector,
            workers,
            duration: Duration::from_secs(10),
            trials: 10,
            warmup_fraction: 0.05,
            pin: true,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.workers == 0 {
            return Err(BenchError::Config("workers must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(BenchError::Config("trials must be at least 1".into()));
        }
        if self.duration.is_zero() {
            return Err(BenchError::Config("duration must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(BenchError::Config(format!(
                "warmup fraction {} outside [0, 1)",
                self.warmup_fraction
            )));
        }
        self.selector.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Selector(#[from] ConfigError),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trial {trial}: worker {worker} failed: {message}")]
    WorkerFailed {
        trial: usize,
        worker: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: std::path::PathBuf,
        line: u64,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerStats {
    pub worker_id: usize,
    /// Requests made during the measured window.
    pub count: u64,
    pub busy: Duration,
    /// Requests including warmup.
    pub total_requests: u64,
}

impl WorkerStats {
    pub fn mean_ns(&self) -> f64 {
        self.busy.as_nanos() as f64 / self.count.max(1) as f64
    }

    /// Requests per second of busy time.
    pub fn throughput(&self) -> f64 {
        self.count as f64 / self.busy.as_secs_f64().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub workers: Vec<WorkerRow>,
    /// Global counter conservation check; `None` for other methods.
    pub conservation_holds: Option<bool>,
}

/// One exported (trial, worker) row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerRow {
    pub worker_id: usize,
    pub count: u64,
    pub mean_ns: f64,
    pub throughput: f64,
}

impl From<&WorkerStats> for WorkerRow {
    fn from(s: &WorkerStats) -> Self {
        WorkerRow {
            worker_id: s.worker_id,
            count: s.count,
            mean_ns: s.mean_ns(),
            throughput: s.throughput(),
        }
    }
}

impl TrialReport {
    pub fn total_count(&self) -> u64 {
        self.workers.iter().map(|w| w.count).sum()
    }

    /// Sum of per-worker throughputs.
    pub fn throughput(&self) -> f64 {
        self.workers.iter().map(|w| w.throughput).sum()
    }

    /// Mean over workers of the mean request time.
    pub fn mean_ns(&self) -> f64 {
        self.workers.iter().map(|w| w.mean_ns).sum::<f64>() / self.workers.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub method: Method,
    pub workers: usize,
    pub trials: Vec<TrialReport>,
}

fn mean_std(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = v.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl BenchReport {
    /// Mean and sample standard deviation of trial throughput.
    pub fn throughput(&self) -> (f64, f64) {
        mean_std(self.trials.iter().map(TrialReport::throughput))
    }

    /// Mean and sample standard deviation of trial mean request time.
    pub fn mean_ns(&self) -> (f64, f64) {
        mean_std(self.trials.iter().map(TrialReport::mean_ns))
    }

    pub fn conservation_holds(&self) -> Option<bool> {
        self.trials
            .iter()
            .map(|t| t.conservation_holds)
            .try_fold(true, |acc, c| c.map(|c| acc && c))
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

fn worker(
    selector: &Selector,
    trace: &Trace,
    id: usize,
    workers: usize,
    core: Option<core_affinity::CoreId>,
    barrier: &Barrier,
    phase: &AtomicU8,
) -> WorkerStats {
    if let Some(core) = core {
        if !core_affinity::set_for_current(core) {
            log::debug!("worker {id}: could not pin to core {}", core.id);
        }
    }
    let records = &trace.records;
    let n = records.len();
    let mut i = id * n / workers;
    let mut req = selector.requester(id as u64);
    let mut run_batch = |i: &mut usize| {
        for _ in 0..BATCH {
            black_box(req.next(&records[*i].flow));
            *i += 1;
            if *i == n {
                *i = 0;
            }
        }
    };
    barrier.wait();
    let mut warm = 0u64;
    while phase.load(Ordering::Relaxed) == WARMUP {
        run_batch(&mut i);
        warm += BATCH;
    }
    let start = Instant::now();
    let mut count = 0u64;
    while phase.load(Ordering::Relaxed) == MEASURE {
        run_batch(&mut i);
        count += BATCH;
    }
    let busy = start.elapsed();
    WorkerStats {
        worker_id: id,
        count,
        busy,
        total_requests: warm + count,
    }
}

fn run_trial(
    config: &BenchConfig,
    trace: &Trace,
    trial: usize,
    cores: &[core_affinity::CoreId],
) -> Result<TrialReport, BenchError> {
    let mut sel_cfg = config.selector.clone();
    sel_cfg.seed = sel_cfg.seed.wrapping_add(trial as u64);
    let selector = Selector::with_clock(sel_cfg, Arc::new(SystemClock::default()))?;
    let start_counter = selector.global_counter().map(|c| c.current());
    let barrier = Barrier::new(config.workers + 1);
    let phase = AtomicU8::new(WARMUP);
    let warmup = config.duration.mul_f64(config.warmup_fraction);
    let measure = config.duration - warmup;

    let results: Vec<thread::Result<WorkerStats>> = thread::scope(|s| {
        let handles: Vec<_> = (0..config.workers)
            .map(|id| {
                let core = if config.pin {
                    cores.get(id).copied()
                } else {
                    None
                };
                let (selector, barrier, phase) = (&selector, &barrier, &phase);
                s.spawn(move || worker(selector, trace, id, config.workers, core, barrier, phase))
            })
            .collect();
        barrier.wait();
        thread::sleep(warmup);
        phase.store(MEASURE, Ordering::Relaxed);
        thread::sleep(measure);
        phase.store(STOP, Ordering::Relaxed);
        handles.into_iter().map(|h| h.join()).collect()
    });

    let mut stats = Vec::with_capacity(results.len());
    for (worker, r) in results.into_iter().enumerate() {
        stats.push(r.map_err(|p| BenchError::WorkerFailed {
            trial,
            worker,
            message: panic_message(p),
        })?);
    }
    let conservation_holds = start_counter.map(|start| {
        let end = selector
            .global_counter()
            .expect("global selector")
            .current();
        let total: u64 = stats.iter().map(|s| s.total_requests).sum();
        u64::from(end.wrapping_sub(start)) == total % IPID_SPACE as u64
    });
    Ok(TrialReport {
        trial,
        workers: stats.iter().map(WorkerRow::from).collect(),
        conservation_holds,
    })
}

pub fn run_benchmark(config: &BenchConfig, trace: &Trace) -> Result<BenchReport, BenchError> {
    config.validate()?;
    if trace.is_empty() {
        return Err(BenchError::EmptyTrace);
    }
    let available = thread::available_parallelism().map_or(1, |n| n.get());
    if config.workers > available {
        log::warn!(
            "{} workers exceed the {available} available execution units",
            config.workers
        );
    }
    let cores = if config.pin {
        core_affinity::get_core_ids().unwrap_or_default()
    } else {
        Vec::new()
    };
    if config.pin && cores.len() < config.workers {
        log::info!(
            "pinning {} of {} workers",
            cores.len().min(config.workers),
            config.workers
        );
    }
    let trials = (0..config.trials)
        .map(|t| run_trial(config, trace, t, &cores))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchReport {
        method: config.selector.method,
        workers: config.workers,
        trials,
    })
}

/// Writes one row per (trial, worker).
pub fn export_report(report: &BenchReport, path: &Path) -> Result<(), BenchError> {
    let io = |e: std::io::Error| BenchError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    write_report(report, file).map_err(io)
}

/// CSV fields for each (trial, worker) row, in [`REPORT_HEADER`] order.
pub fn report_records(report: &BenchReport) -> impl Iterator<Item = [String; 7]> + '_ {
    report.trials.iter().flat_map(move |t| {
        t.workers.iter().map(move |r| {
            [
                report.method.as_str().to_string(),
                report.workers.to_string(),
                t.trial.to_string(),
                r.worker_id.to_string(),
                r.count.to_string(),
                format!("{:?}", r.mean_ns),
                format!("{:?}", r.throughput),
            ]
        })
    })
}

pub fn write_report<W: std::io::Write>(report: &BenchReport, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for rec in report_records(report) {
        w.write_record(rec)?;
    }
    w.flush()
}

/// Reads reports written by [`export_report`], one per (method, workers)
/// group, in order of first appearance.
pub fn read_reports(path: &Path) -> Result<Vec<BenchReport>, BenchError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| BenchError::Parse {
        path: path.to_path_buf(),
        line: 1,
        reason: e.to_string(),
    })?;
    let bad = |line: u64, reason: String| BenchError::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let header = rd.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != REPORT_HEADER {
        return Err(bad(
            1,
            format!("expected header {}", REPORT_HEADER.join(",")),
        ));
    }
    let mut reports: Vec<BenchReport> = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| {
            rec.get(i)
                .ok_or_else(|| bad(line, format!("missing {}", REPORT_HEADER[i])))
        };
        let num = |i: usize| -> Result<f64, BenchError> {
            field(i)?
                .parse::<f64>()
                .map_err(|e| bad(line, format!("{}: {e}", REPORT_HEADER[i])))
        };
        let int = |i: usize| -> Result<u64, BenchError> {
            field(i)?
                .parse::<u64>()
                .map_err(|e| bad(line, format!("{}: {e}", REPORT_HEADER[i])))
        };
        let method: Method = field(0)?
            .parse()
            .map_err(|e: crate::UnknownMethod| bad(line, e.to_string()))?;
        let workers = int(1)? as usize;
        let trial = int(2)? as usize;
        let row = WorkerRow {
            worker_id: int(3)? as usize,
            count: int(4)?,
            mean_ns: num(5)?,
            throughput: num(6)?,
        };
        let report = match reports
            .iter_mut()
            .find(|r| r.method == method && r.workers == workers)
        {
            Some(r) => r,
            None => {
                reports.push(BenchReport {
                    method,
                    workers,
                    trials: Vec::new(),
                });
                reports.last_mut().expect("just pushed")
            }
        };
        match report.trials.iter_mut().find(|t| t.trial == trial) {
            Some(t) => t.workers.push(row),
            None => report.trials.push(TrialReport {
                trial,
                workers: vec![row],
                conservation_holds: None,
            }),
        }
    }
    Ok(reports)
}
