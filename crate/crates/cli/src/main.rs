use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ipid_core::analytics::{self, TrafficModel, Value, WorstCaseGrid};
use ipid_core::harness::{self, BenchConfig, TraceFormat, TraceParams};
use ipid_core::montecarlo::{self, SimParams};
use ipid_core::recommend::{self, RateEstimate};
use ipid_core::select::{DEFAULT_QUEUE_K, DEFAULT_SHUFFLE_K};
use ipid_core::{Method, SelectorConfig};

#[derive(Parser, Debug)]
#[command(
    name = "ipid",
    version,
    about = "IPv4 Identifier selection: analysis, simulation, benchmarks"
)]
struct Cli {
    /// Seed for every stochastic output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OutputFormat {
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Collision or guess probabilities over a grid of rates.
    Analyze(AnalyzeArgs),
    /// Multi-worker throughput benchmark.
    Bench(BenchArgs),
    /// Per-bucket Monte Carlo simulations.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Write a synthetic packet trace.
    GenTrace(GenTraceArgs),
    /// Recommend selection methods for a traffic profile.
    Recommend(RecommendArgs),
    /// Trace file utilities.
    #[command(subcommand)]
    Trace(TraceCommand),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Quantity {
    Correctness,
    SecurityUniform,
    SecurityWorst,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    quantity: Quantity,
    /// Comma-separated method names; all methods when absent.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    #[arg(long, default_value_t = -14.0, allow_negative_numbers = true)]
    lambda_log2_start: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    lambda_log2_stop: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_log2_step: f64,
    /// Guess budget.
    #[arg(long, default_value_t = 1)]
    g: usize,
    /// Reserved IPIDs for prng-queue and prng-shuffle.
    #[arg(long)]
    k: Option<u32>,
    /// Resource count; per-destination and per-bucket are swept at two
    /// default counts each when absent.
    #[arg(long)]
    r: Option<usize>,
    /// Monte Carlo trials per point (per-bucket only).
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 3)]
    ticks_per_unit: u32,
    /// Worst-case search resolution.
    #[arg(long, default_value_t = 64)]
    points_per_octave: u32,
    #[arg(long, default_value_t = 30)]
    octaves: u32,
}

#[derive(Args, Debug, Clone)]
struct TraceGenArgs {
    #[arg(long, default_value_t = 1 << 20)]
    packets: usize,
    #[arg(long, default_value_t = 1 << 14)]
    flows: usize,
    #[arg(long, default_value_t = 1.0)]
    skew: f64,
    #[arg(long, default_value_t = 0.824)]
    atomic_fraction: f64,
}

impl TraceGenArgs {
    fn params(&self, seed: u64) -> TraceParams {
        TraceParams {
            packets: self.packets,
            flows: self.flows,
            skew: self.skew,
            atomic_fraction: self.atomic_fraction,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', required = true)]
    method: Vec<Method>,
    /// Comma-separated worker counts.
    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = positive)]
    cpus: Vec<usize>,
    /// Seconds per trial.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    trials: usize,
    /// Trace file (CSV for a .csv extension, binary otherwise); a synthetic
    /// trace is generated when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    gen: TraceGenArgs,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    k: Option<u32>,
    /// Do not pin workers to cores.
    #[arg(long)]
    no_pin: bool,
}

#[derive(Subcommand, Debug)]
enum SimulateCommand {
    /// Probability that n consecutive per-bucket IPIDs contain a duplicate.
    BucketCollision {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 3)]
        ticks_per_unit: u32,
    },
    /// Distribution of the summed per-bucket increments mod 2^16.
    SumDist {
        #[arg(long)]
        lambda_i: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 3)]
        ticks_per_unit: u32,
    },
}

#[derive(Args, Debug)]
struct GenTraceArgs {
    #[command(flatten)]
    gen: TraceGenArgs,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("rates").required(true).args(["lambda", "bandwidth_bps"]))]
struct RecommendArgs {
    /// Total packets per unit time.
    #[arg(long, requires = "lambda_n")]
    lambda: Option<f64>,
    /// Non-connection-bound packets per unit time.
    #[arg(long, requires = "lambda")]
    lambda_n: Option<f64>,
    /// Outgoing bits per second.
    #[arg(long, requires = "cb_fraction", conflicts_with = "lambda")]
    bandwidth_bps: Option<f64>,
    /// Fraction of traffic that is connection-bound.
    #[arg(long, requires = "bandwidth_bps")]
    cb_fraction: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum TraceCommand {
    /// Convert between CSV and binary trace formats (chosen by extension).
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// One analysis series: a method with its resource count (`None` where it
/// does not matter) and reserved IPIDs.
#[derive(Debug, Clone, Copy)]
struct Series {
    method: Method,
    r: Option<usize>,
    k: u32,
}

impl Series {
    fn label(&self) -> String {
        match (self.method, self.r) {
            (
                Method::PerDestination | Method::PerBucketExclusive | Method::PerBucketRacy,
                Some(r),
            ) => {
                format!("{}:r={r}", self.method)
            }
            (Method::PrngQueue | Method::PrngShuffle, _) => format!("{}:k={}", self.method, self.k),
            _ => self.method.to_string(),
        }
    }
}

fn series(args: &AnalyzeArgs) -> Vec<Series> {
    let methods = if args.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.methods.clone()
    };
    let mut out = Vec::new();
    for method in methods {
        let k = match method {
            Method::PrngQueue => args.k.unwrap_or(DEFAULT_QUEUE_K),
            Method::PrngShuffle => args.k.unwrap_or(DEFAULT_SHUFFLE_K),
            _ => 0,
        };
        if args.quantity == Quantity::Correctness {
            // collisions do not depend on the number of resources
            out.push(Series { method, r: None, k });
            continue;
        }
        let rs: Vec<usize> = match (method, args.r) {
            (_, Some(r)) if analytics::resource_count(method, r) == r => vec![r],
            (Method::PerDestination, None) => vec![1 << 12, 1 << 15],
            (Method::PerBucketExclusive | Method::PerBucketRacy, None) => vec![1 << 11, 1 << 18],
            (Method::PerConnection, None) => vec![1 << 12],
            _ => vec![1],
        };
        out.extend(rs.into_iter().map(|r| Series {
            method,
            r: Some(r),
            k,
        }));
    }
    out
}

fn lambda_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    ensure!(
        start.is_finite() && stop.is_finite(),
        "lambda range must be finite"
    );
    ensure!(
        start < stop,
        "lambda-log2-start must be below lambda-log2-stop"
    );
    ensure!(step > 0.0, "lambda-log2-step must be positive");
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn cmd_analyze(args: &AnalyzeArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    ensure!(args.trials > 0, "trials must be positive");
    ensure!(args.ticks_per_unit > 0, "ticks-per-unit must be positive");
    if let Some(r) = args.r {
        ensure!(r > 0, "r must be positive");
    }
    let grid = lambda_grid(
        args.lambda_log2_start,
        args.lambda_log2_stop,
        args.lambda_log2_step,
    )?;
    let sim = SimParams {
        trials: args.trials,
        t: args.ticks_per_unit,
        seed,
    };
    let worst_grid = WorstCaseGrid {
        points_per_octave: args.points_per_octave,
        octaves: args.octaves,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "lambda_log2", "value", "std_err"])?;
    for s in series(args) {
        for &l2 in &grid {
            let lambda = l2.exp2();
            let value: Value = match args.quantity {
                Quantity::Correctness => analytics::collision_prob(s.method, lambda, s.k, &sim)?,
                Quantity::SecurityUniform | Quantity::SecurityWorst => {
                    let r = analytics::resource_count(s.method, s.r.unwrap_or(1));
                    let mut model = TrafficModel::uniform(lambda, r, args.g)?.with_k(s.k);
                    model.t = args.ticks_per_unit;
                    if args.quantity == Quantity::SecurityUniform {
                        analytics::guess_prob(s.method, &model, &sim)?
                    } else {
                        let wc =
                            analytics::worst_case_lambda_i(s.method, &model, &sim, &worst_grid)?;
                        log::debug!("{} at 2^{l2}: worst lambda_i = {}", s.label(), wc.lambda_i);
                        wc.value
                    }
                }
            };
            w.write_record([
                s.label(),
                format!("{l2}"),
                format!("{:e}", value.value),
                value.std_err.map(|e| format!("{e:e}")).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    ensure!(
        args.duration.is_finite() && args.duration > 0.0,
        "duration must be positive"
    );
    let trace = match &args.trace {
        Some(p) => harness::load_trace(p)?,
        None => harness::generate_trace(&args.gen.params(seed))?,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(harness::REPORT_HEADER)?;
    for &method in &args.method {
        for &workers in &args.cpus {
            let mut sel = SelectorConfig::new(method).with_seed(seed);
            if let Some(r) = args.r {
                sel.r = r;
            }
            if let Some(k) = args.k {
                sel.k = k;
            }
            let mut cfg = BenchConfig::new(sel, workers);
            cfg.duration = Duration::from_secs_f64(args.duration);
            cfg.trials = args.trials;
            cfg.pin = !args.no_pin;
            let report = harness::run_benchmark(&cfg, &trace)?;
            let (mean, sd) = report.mean_ns();
            log::info!("{method} x{workers}: {mean:.1} ns/request (sd {sd:.1})");
            if report.conservation_holds() == Some(false) {
                bail!("global counter conservation failed for {workers} workers");
            }
            for rec in harness::report_records(&report) {
                w.write_record(rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(cmd: &SimulateCommand, seed: u64, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match *cmd {
        SimulateCommand::BucketCollision {
            n,
            lambda,
            trials,
            ticks_per_unit,
        } => {
            let sim = SimParams {
                trials,
                t: ticks_per_unit,
                seed,
            };
            let e = montecarlo::conditional_collision_bucket(n, lambda, &sim)?;
            w.write_record(["n", "lambda", "probability", "std_err", "trials"])?;
            w.write_record([
                n.to_string(),
                format!("{lambda}"),
                format!("{:e}", e.probability),
                format!("{:e}", e.std_err),
                trials.to_string(),
            ])?;
        }
        SimulateCommand::SumDist {
            lambda_i,
            trials,
            ticks_per_unit,
        } => {
            let sim = SimParams {
                trials,
                t: ticks_per_unit,
                seed,
            };
            let h = montecarlo::increment_sum_histogram(lambda_i, &sim)?;
            w.write_record(["ipid", "count", "probability"])?;
            for (x, &c) in h.counts.iter().enumerate().filter(|(_, &c)| c > 0) {
                w.write_record([
                    x.to_string(),
                    c.to_string(),
                    format!("{:e}", c as f64 / trials as f64),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_gen_trace(args: &GenTraceArgs, seed: u64, out: &Option<PathBuf>) -> Result<()> {
    let Some(path) = out else {
        bail!("gen-trace needs --out (CSV for a .csv extension, binary otherwise)");
    };
    let trace = harness::generate_trace(&args.gen.params(seed))?;
    harness::save_trace(&trace, path)?;
    log::info!("wrote {} records to {}", trace.len(), path.display());
    Ok(())
}

fn cmd_recommend(args: &RecommendArgs, out: &mut dyn Write) -> Result<()> {
    let rates = match (
        args.lambda,
        args.lambda_n,
        args.bandwidth_bps,
        args.cb_fraction,
    ) {
        (Some(l), Some(ln), None, None) => RateEstimate::new(l, ln)?,
        (None, None, Some(bps), Some(f)) => RateEstimate::from_bandwidth(bps, f)?,
        _ => bail!("give either --lambda and --lambda-n, or --bandwidth-bps and --cb-fraction"),
    };
    let rec = recommend::recommend(&rates);
    let log2 = |x: f64| {
        if x > 0.0 {
            format!("2^{:.2}", x.log2())
        } else {
            "0".into()
        }
    };
    writeln!(
        out,
        "lambda = {} ({}), lambda_n = {} ({})",
        rates.lambda,
        log2(rates.lambda),
        rates.lambda_n,
        log2(rates.lambda_n)
    )?;
    writeln!(out, "use case {}: {}", rec.use_case, rec.title)?;
    writeln!(out, "non-connection-bound: {}", rec.non_cb_method)?;
    writeln!(out, "connection-bound: {}", rec.cb_handling)?;
    writeln!(out, "{}", rec.rationale)?;
    writeln!(out, "{}", rec.machine_line())?;
    Ok(())
}

fn cmd_trace_convert(input: &Path, output: &Path) -> Result<()> {
    let trace = harness::load_trace(input)?;
    harness::save_trace(&trace, output)?;
    log::info!(
        "converted {} records ({:?} -> {:?})",
        trace.len(),
        TraceFormat::from_path(input),
        TraceFormat::from_path(output)
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let OutputFormat::Csv = cli.format;
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, cli.seed, &mut *output(&cli.out)?),
        Command::Bench(a) => cmd_bench(a, cli.seed, &mut *output(&cli.out)?),
        Command::Simulate(c) => cmd_simulate(c, cli.seed, &mut *output(&cli.out)?),
        Command::GenTrace(a) => cmd_gen_trace(a, cli.seed, &cli.out),
        Command::Recommend(a) => cmd_recommend(a, &mut *output(&cli.out)?),
        Command::Trace(TraceCommand::Convert { input, output }) => cmd_trace_convert(input, output),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::error::ErrorKind;

    /// Runs `ipid <args>` with output sent to a temporary file and returns it.
    fn run_args(args: &[&str]) -> Result<String> {
        let dir = tempfile::tempdir()?;
        let out = dir.path().join("out.txt");
        let mut argv = vec!["ipid", "--out", out.to_str().unwrap()];
        argv.extend_from_slice(args);
        run(Cli::try_parse_from(argv)?)?;
        Ok(std::fs::read_to_string(&out)?)
    }

    fn usage_error(args: &[&str]) -> ErrorKind {
        let argv = std::iter::once("ipid").chain(args.iter().copied());
        Cli::try_parse_from(argv).unwrap_err().kind()
    }

    #[test]
    fn recommend_prints_machine_line() {
        let text = run_args(&["recommend", "--lambda", "0.25", "--lambda-n", "0.25"]).unwrap();
        assert_eq!(
            text.lines().last(),
            Some("RECOMMEND 1 prng-based merged-with-non-cb")
        );
        let text = run_args(&[
            "recommend",
            "--bandwidth-bps",
            "1e9",
            "--cb-fraction",
            "0.99",
        ])
        .unwrap();
        assert!(
            text.lines()
                .last()
                .unwrap()
                .starts_with("RECOMMEND 3 per-bucket"),
            "{text}"
        );
    }

    #[test]
    fn recommend_input_errors() {
        assert!(run_args(&["recommend", "--lambda", "1", "--lambda-n", "2"]).is_err());
        assert_eq!(
            usage_error(&["recommend"]),
            ErrorKind::MissingRequiredArgument
        );
        assert_eq!(
            usage_error(&[
                "recommend",
                "--lambda",
                "1",
                "--lambda-n",
                "1",
                "--bandwidth-bps",
                "1",
                "--cb-fraction",
                "0.5"
            ]),
            ErrorKind::ArgumentConflict
        );
    }

    #[test]
    fn bench_rejects_zero_workers() {
        assert_eq!(
            usage_error(&["bench", "--method", "global", "--cpus", "0"]),
            ErrorKind::ValueValidation
        );
        assert_eq!(
            usage_error(&["bench", "--method", "nope"]),
            ErrorKind::ValueValidation
        );
    }

    #[test]
    fn bench_single_worker_rows() {
        let text = run_args(&[
            "bench",
            "--method",
            "global",
            "--cpus",
            "1",
            "--duration",
            "0.1",
            "--trials",
            "2",
            "--packets",
            "4096",
            "--no-pin",
        ])
        .unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(
            rdr.headers().unwrap(),
            &csv::StringRecord::from(harness::REPORT_HEADER.to_vec())
        );
        let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows
            .iter()
            .all(|r| &r[0] == "global" && r[6].parse::<f64>().unwrap() > 0.0));
    }

    #[test]
    fn sum_dist_reproducible() {
        let run = |seed: &str| {
            run_args(&[
                "--seed",
                seed,
                "simulate",
                "sum-dist",
                "--lambda-i",
                "4",
                "--trials",
                "20000",
            ])
            .unwrap()
        };
        let a = run("11");
        assert_eq!(a, run("11"));
        assert_ne!(a, run("12"));
        assert!(a.starts_with("ipid,count,probability\n"));
        let total: u64 = a
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 20000);
    }

    #[test]
    fn single_packet_never_collides() {
        let text = run_args(&[
            "simulate",
            "bucket-collision",
            "--n",
            "1",
            "--lambda",
            "64",
            "--trials",
            "1000",
        ])
        .unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "1");
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    }

    #[test]
    fn gen_trace_and_convert() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("t.csv");
        let bin_path = dir.path().join("t.bin");
        let back = dir.path().join("u.csv");
        let p = |p: &Path| p.to_str().unwrap().to_string();
        run(Cli::try_parse_from([
            "ipid",
            "--out",
            &p(&csv_path),
            "gen-trace",
            "--packets",
            "1000",
            "--flows",
            "1",
        ])
        .unwrap())
        .unwrap();
        let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
        let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 1000);
        assert!(rows
            .iter()
            .all(|r| r.iter().take(5).eq(rows[0].iter().take(5))));

        let convert = |i: &Path, o: &Path| {
            run(Cli::try_parse_from([
                "ipid",
                "trace",
                "convert",
                "--input",
                &p(i),
                "--output",
                &p(o),
            ])
            .unwrap())
        };
        convert(&csv_path, &bin_path).unwrap();
        assert_eq!(std::fs::metadata(&bin_path).unwrap().len(), 1000 * 16);
        convert(&bin_path, &back).unwrap();
        assert_eq!(
            std::fs::read(&csv_path).unwrap(),
            std::fs::read(&back).unwrap()
        );

        std::fs::write(&bin_path, [0u8; 20]).unwrap();
        let err = convert(&bin_path, &back).unwrap_err();
        assert!(format!("{err:#}").contains("16"), "{err:#}");
        assert!(run(Cli::try_parse_from(["ipid", "gen-trace"]).unwrap()).is_err());
    }

    #[test]
    fn analyze_closed_forms() {
        let text = run_args(&[
            "analyze",
            "--quantity",
            "security-uniform",
            "--methods",
            "per-connection,prng-pure",
            "--lambda-log2-start",
            "0",
            "--lambda-log2-stop",
            "2",
            "--g",
            "10",
        ])
        .unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("method,lambda_log2,value,std_err"));
        let values: Vec<f64> = lines
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        assert_eq!(values, vec![10.0 / 65536.0; 6]);
    }

    #[test]
    fn analyze_series_labels() {
        let text = run_args(&[
            "analyze",
            "--quantity",
            "security-uniform",
            "--methods",
            "per-destination,prng-queue",
            "--lambda-log2-start",
            "0",
            "--lambda-log2-stop",
            "1",
        ])
        .unwrap();
        let labels: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(
            labels,
            [
                "per-destination:r=4096",
                "per-destination:r=4096",
                "per-destination:r=32768",
                "per-destination:r=32768",
                "prng-queue:k=8192",
                "prng-queue:k=8192"
            ]
        );
        assert!(run_args(&[
            "analyze",
            "--quantity",
            "correctness",
            "--lambda-log2-start",
            "3",
            "--lambda-log2-stop",
            "1"
        ])
        .is_err());
    }

    #[test]
    fn worst_case_equals_uniform_for_single_resource() {
        let sweep = |q: &str| {
            run_args(&[
                "analyze",
                "--quantity",
                q,
                "--methods",
                "global,prng-shuffle",
                "--lambda-log2-start",
                "-3",
                "--lambda-log2-stop",
                "6",
                "--g",
                "4",
            ])
            .unwrap()
        };
        assert_eq!(sweep("security-worst"), sweep("security-uniform"));
    }

    #[test]
    fn sum_dist_byte_identical() {
        let run = || {
            run_args(&[
                "--seed",
                "1",
                "simulate",
                "sum-dist",
                "--lambda-i",
                "256",
                "--trials",
                "20000",
            ])
            .unwrap()
        };
        assert_eq!(run().into_bytes(), run().into_bytes());
    }
}
