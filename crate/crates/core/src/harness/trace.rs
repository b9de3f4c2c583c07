//! Packet traces: synthetic generation and CSV / binary storage.
//!
//! Binary traces are a sequence of 16-byte little-endian records:
//!
//! | bytes | field |
//! |-------|-------|
//! | 0..4  | source address |
//! | 4..8  | destination address |
//! | 8     | protocol |
//! | 9     | flags (bit 0: atomic) |
//! | 10..12 | source port |
//! | 12..14 | destination port |
//! | 14..16 | zero padding |
//!
//! Ports are zero for protocols without ports. CSV traces have the header
//! `src_addr,dst_addr,protocol,src_port,dst_port,atomic` with empty port
//! fields for portless protocols.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Zipf};
use thiserror::Error;

use crate::ipid::{carries_ports, PROTO_ICMP};
use crate::rng::sim_rng;
use crate::FlowKey;

pub const RECORD_BYTES: usize = 16;
pub const CSV_HEADER: [&str; 6] = [
    "src_addr", "dst_addr", "protocol", "src_port", "dst_port", "atomic",
];
const FLAG_ATOMIC: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PacketRecord {
    pub flow: FlowKey,
    pub atomic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    Generated(TraceParams),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<PacketRecord>,
    pub source: TraceSource,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: trace is empty")]
    Empty(PathBuf),
    #[error("{path}: truncated record at byte offset {offset} ({len} trailing bytes)")]
    Truncated {
        path: PathBuf,
        offset: u64,
        len: usize,
    },
    #[error("{path}: malformed record at byte offset {offset}: {reason}")]
    Malformed {
        path: PathBuf,
        offset: u64,
        reason: String,
    },
    #[error("{path}: line {line}: {reason}")]
    Csv {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("invalid trace parameters: {0}")]
    Params(String),
}

/// Synthetic trace parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceParams {
    pub packets: usize,
    pub flows: usize,
    /// Zipf exponent of flow popularity; zero gives uniform popularity.
    pub skew: f64,
    pub atomic_fraction: f64,
    pub seed: u64,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams {
            packets: 1 << 20,
            flows: 1 << 14,
            skew: 1.0,
            atomic_fraction: 0.824,
            seed: 0,
        }
    }
}

fn random_flow<R: Rng>(rng: &mut R) -> FlowKey {
    let src = Ipv4Addr::from(rng.random::<u32>());
    let dst = Ipv4Addr::from(rng.random::<u32>());
    match rng.random_range(0..20u8) {
        0..=13 => FlowKey::tcp(src, rng.random(), dst, rng.random()),
        14..=18 => FlowKey::udp(src, rng.random(), dst, rng.random()),
        _ => FlowKey::portless(src, dst, PROTO_ICMP),
    }
}

/// Flows are random TCP (70%), UDP (25%) and ICMP (5%) tuples; packets pick
/// flow `i` (1-based rank) with probability proportional to `i^-skew`.
pub fn generate_trace(params: &TraceParams) -> Result<Trace, TraceError> {
    let p = params;
    if p.packets == 0 || p.flows == 0 {
        return Err(TraceError::Params(
            "packets and flows must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p.atomic_fraction) {
        return Err(TraceError::Params(format!(
            "atomic_fraction {} outside [0, 1]",
            p.atomic_fraction
        )));
    }
    let zipf = Zipf::new(p.flows as f64, p.skew)
        .map_err(|e| TraceError::Params(format!("skew {}: {e}", p.skew)))?;
    let mut flow_rng = sim_rng(p.seed, 0);
    let flows: Vec<FlowKey> = (0..p.flows).map(|_| random_flow(&mut flow_rng)).collect();
    let mut rng = sim_rng(p.seed, 1);
    let records = (0..p.packets)
        .map(|_| {
            let rank = zipf.sample(&mut rng) as usize;
            PacketRecord {
                flow: flows[rank.clamp(1, p.flows) - 1],
                atomic: rng.random_bool(p.atomic_fraction),
            }
        })
        .collect();
    Ok(Trace {
        records,
        source: TraceSource::Generated(*p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Binary,
}

impl TraceFormat {
    /// CSV for a `.csv` extension, binary otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::Binary,
        }
    }
}

pub fn encode_record(r: &PacketRecord) -> [u8; RECORD_BYTES] {
    let mut b = [0u8; RECORD_BYTES];
    b[0..4].copy_from_slice(&r.flow.src().octets());
    b[4..8].copy_from_slice(&r.flow.dst().octets());
    b[8] = r.flow.protocol();
    b[9] = if r.atomic { FLAG_ATOMIC } else { 0 };
    let (sp, dp) = r.flow.ports().unwrap_or((0, 0));
    b[10..12].copy_from_slice(&sp.to_le_bytes());
    b[12..14].copy_from_slice(&dp.to_le_bytes());
    b
}

/// Decodes one record; the error string explains what is malformed.
pub fn decode_record(b: &[u8; RECORD_BYTES]) -> Result<PacketRecord, String> {
    let src = Ipv4Addr::new(b[0], b[1], b[2], b[3]);
    let dst = Ipv4Addr::new(b[4], b[5], b[6], b[7]);
    let protocol = b[8];
    let flags = b[9];
    if flags & !FLAG_ATOMIC != 0 {
        return Err(format!("unknown flag bits {flags:#04x}"));
    }
    if b[14] != 0 || b[15] != 0 {
        return Err("nonzero padding".into());
    }
    let sp = u16::from_le_bytes([b[10], b[11]]);
    let dp = u16::from_le_bytes([b[12], b[13]]);
    let ports = if carries_ports(protocol) {
        Some((sp, dp))
    } else if sp != 0 || dp != 0 {
        return Err(format!(
            "protocol {protocol} has no ports but ports are set"
        ));
    } else {
        None
    };
    let flow = FlowKey::new(src, dst, protocol, ports).map_err(|e| e.to_string())?;
    Ok(PacketRecord {
        flow,
        atomic: flags & FLAG_ATOMIC != 0,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_trace(trace: &Trace, path: &Path) -> Result<(), TraceError> {
    save_trace_as(trace, path, TraceFormat::from_path(path))
}

pub fn save_trace_as(trace: &Trace, path: &Path, format: TraceFormat) -> Result<(), TraceError> {
    let file = File::create(path).map_err(io_err(path))?;
    match format {
        TraceFormat::Binary => {
            let mut w = BufWriter::new(file);
            for r in &trace.records {
                w.write_all(&encode_record(r)).map_err(io_err(path))?;
            }
            w.flush().map_err(io_err(path))
        }
        TraceFormat::Csv => {
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            let csv_err = |e: csv::Error| TraceError::Io {
                path: path.to_path_buf(),
                source: e.into(),
            };
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &trace.records {
                let (sp, dp) = match r.flow.ports() {
                    Some((s, d)) => (s.to_string(), d.to_string()),
                    None => (String::new(), String::new()),
                };
                w.write_record([
                    r.flow.src().to_string(),
                    r.flow.dst().to_string(),
                    r.flow.protocol().to_string(),
                    sp,
                    dp,
                    u8::from(r.atomic).to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io_err(path))
        }
    }
}

pub fn load_trace(path: &Path) -> Result<Trace, TraceError> {
    load_trace_as(path, TraceFormat::from_path(path))
}

pub fn load_trace_as(path: &Path, format: TraceFormat) -> Result<Trace, TraceError> {
    let records = match format {
        TraceFormat::Binary => load_binary(path)?,
        TraceFormat::Csv => load_csv(path)?,
    };
    if records.is_empty() {
        return Err(TraceError::Empty(path.to_path_buf()));
    }
    Ok(Trace {
        records,
        source: TraceSource::File(path.to_path_buf()),
    })
}

fn load_binary(path: &Path) -> Result<Vec<PacketRecord>, TraceError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    let whole = bytes.len() / RECORD_BYTES * RECORD_BYTES;
    if whole != bytes.len() {
        return Err(TraceError::Truncated {
            path: path.to_path_buf(),
            offset: whole as u64,
            len: bytes.len() - whole,
        });
    }
    bytes
        .chunks_exact(RECORD_BYTES)
        .enumerate()
        .map(|(i, chunk)| {
            decode_record(chunk.try_into().expect("exact chunk")).map_err(|reason| {
                TraceError::Malformed {
                    path: path.to_path_buf(),
                    offset: (i * RECORD_BYTES) as u64,
                    reason,
                }
            })
        })
        .collect()
}

fn load_csv(path: &Path) -> Result<Vec<PacketRecord>, TraceError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let bad = |line: u64, reason: String| TraceError::Csv {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let header = rd.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.is_empty() {
        return Err(TraceError::Empty(path.to_path_buf()));
    }
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(bad(1, format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            bad(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(parse_csv_record(&rec).map_err(|r| bad(line, r))?);
    }
    Ok(out)
}

fn parse_csv_record(rec: &csv::StringRecord) -> Result<PacketRecord, String> {
    if rec.len() != CSV_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            CSV_HEADER.len(),
            rec.len()
        ));
    }
    let addr = |i: usize| {
        rec[i]
            .parse::<Ipv4Addr>()
            .map_err(|e| format!("{}: {e}", CSV_HEADER[i]))
    };
    let src = addr(0)?;
    let dst = addr(1)?;
    let protocol: u8 = rec[2].parse().map_err(|e| format!("protocol: {e}"))?;
    let port = |i: usize| -> Result<Option<u16>, String> {
        if rec[i].is_empty() {
            Ok(None)
        } else {
            rec[i]
                .parse()
                .map(Some)
                .map_err(|e| format!("{}: {e}", CSV_HEADER[i]))
        }
    };
    let ports = match (port(3)?, port(4)?) {
        (Some(s), Some(d)) => Some((s, d)),
        (None, None) => None,
        _ => return Err("src_port and dst_port must both be set or both empty".into()),
    };
    let atomic = match &rec[5] {
        "0" => false,
        "1" => true,
        other => return Err(format!("atomic must be 0 or 1, got {other:?}")),
    };
    let flow = FlowKey::new(src, dst, protocol, ports).map_err(|e| e.to_string())?;
    Ok(PacketRecord { flow, atomic })
}
