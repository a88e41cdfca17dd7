//! On-disk formats: measure, histogram and step-function JSON, the ladder
//! CSV, JSON summaries and the binary dump of polymer tables.
//!
//! Non-finite reals are written as the strings `"inf"`, `"-inf"` and `"nan"`
//! in JSON; the CSV writer emits the same spellings.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use grid_entropy_core::estimators::EntropyEstimate;
use grid_entropy_core::polymer::{DpMode, DpTable};
use grid_entropy_core::{Histogram, Measure, TauFn};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// JSON number for finite reals, otherwise a string.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

pub fn real_from(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

pub fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| real(x)).collect())
}

pub fn measure_to_json(m: &Measure) -> String {
    let pairs: Vec<[f64; 2]> = m.atoms().iter().map(|a| [a.position, a.mass]).collect();
    serde_json::to_string(&pairs).expect("finite atoms serialize")
}

pub fn measure_from_json(text: &str) -> Result<Measure, String> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    Measure::from_atoms(pairs.into_iter().map(|[p, m]| (p, m))).map_err(|e| e.to_string())
}

#[derive(Serialize, Deserialize)]
struct HistogramJson {
    bin_count: usize,
    masses: Vec<f64>,
}

pub fn histogram_to_json(h: &Histogram) -> String {
    serde_json::to_string(&HistogramJson {
        bin_count: h.bin_count(),
        masses: h.masses().to_vec(),
    })
    .expect("finite masses serialize")
}

pub fn histogram_from_json(text: &str) -> Result<Histogram, String> {
    let h: HistogramJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if h.masses.len() != h.bin_count {
        return Err(format!("bin_count {} but {} masses", h.bin_count, h.masses.len()));
    }
    Histogram::new(h.masses).map_err(|e| e.to_string())
}

#[derive(Serialize, Deserialize)]
struct TauJson {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

pub fn tau_to_json(t: &TauFn) -> String {
    serde_json::to_string(&TauJson {
        breakpoints: t.breakpoints().to_vec(),
        values: t.values().to_vec(),
    })
    .expect("finite tau serializes")
}

pub fn tau_from_json(text: &str) -> Result<TauFn, String> {
    let t: TauJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
    TauFn::new(t.breakpoints, t.values).map_err(|e| e.to_string())
}

pub fn estimate_to_json(e: &EntropyEstimate) -> Value {
    let d = &e.diagnostics;
    serde_json::json!({
        "method": e.method.as_str(),
        "value": real(e.value),
        "extrapolated": real(e.extrapolated),
        "band": real(e.band),
        "n_ladder": e.n_ladder.iter().map(|&(n, v)| serde_json::json!([n, real(v)])).collect::<Vec<_>>(),
        "diagnostics": {
            "monotone": d.monotone,
            "exceeds_upper_bound": d.exceeds_upper_bound,
            "ambiguous": d.ambiguous,
            "alpha_classes": d.alpha_classes.iter().map(|&(a, v)| serde_json::json!([a, v])).collect::<Vec<_>>(),
            "eps_limits": d.eps_limits.iter().map(|&(e, v)| serde_json::json!([e, real(v)])).collect::<Vec<_>>(),
            "cross_check": d.cross_check.map(real),
        }
    })
}

/// One ladder point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub method: String,
    #[serde(rename = "D")]
    pub dim: usize,
    pub seed: u64,
    pub q_or_t: String,
    pub nu_id: String,
    pub n: u64,
    pub epsilon_or_alpha: f64,
    pub raw_value: f64,
    pub extrapolated: f64,
    pub band: f64,
}

/// Writes `# key=value` header lines followed by the CSV table.
pub fn write_csv(path: &Path, header: &[(String, String)], rows: &[CsvRow]) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (k, v) in header {
        writeln!(out, "# {k}={v}").map_err(|e| CliError::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Format {
            path: path.into(),
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Resolved `key=value` pairs from a CSV header.
pub type ConfigPairs = Vec<(String, String)>;

/// Reads a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> CliResult<(ConfigPairs, Vec<CsvRow>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = Vec::new();
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(|e| CliError::io(path, e))? == 0 {
            break;
        }
        match line.strip_prefix("# ") {
            Some(kv) => {
                let (k, v) = kv.trim_end_matches(['\n', '\r']).split_once('=').ok_or_else(|| CliError::Format {
                    path: path.into(),
                    message: format!("bad header line `{}`", line.trim_end()),
                })?;
                header.push((k.to_string(), v.to_string()));
            }
            None => {
                body.push_str(&line);
                reader.read_to_string(&mut body).map_err(|e| CliError::io(path, e))?;
                break;
            }
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let rows = r
        .deserialize()
        .collect::<Result<Vec<CsvRow>, _>>()
        .map_err(|e| CliError::Format {
            path: path.into(),
            message: e.to_string(),
        })?;
    Ok((header, rows))
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.into(),
        message: e.to_string(),
    })
}

const DUMP_MAGIC: &[u8; 4] = b"GEDP";
pub const DUMP_VERSION: u32 = 1;

/// Header of a polymer table dump.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpHeader {
    pub version: u32,
    pub dim: u32,
    pub extent: Vec<u32>,
    /// `None` for max-plus tables.
    pub beta: Option<f64>,
    pub tau_hash: u64,
    pub seed: u64,
}

/// Little-endian layout: magic, version, D, extent, mode byte, beta,
/// tau fingerprint, seed, value count, then the row-major values.
pub fn write_dump(path: &Path, table: &DpTable) -> CliResult<()> {
    let io = |e| CliError::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let mut put = |bytes: &[u8]| out.write_all(bytes).map_err(io);
    put(DUMP_MAGIC)?;
    put(&DUMP_VERSION.to_le_bytes())?;
    put(&(table.extent().len() as u32).to_le_bytes())?;
    for e in table.extent() {
        put(&e.to_le_bytes())?;
    }
    let (mode, beta) = match table.mode() {
        DpMode::Softmax { beta } => (0u8, beta),
        DpMode::MaxPlus => (1u8, 0.0),
    };
    put(&[mode])?;
    put(&beta.to_le_bytes())?;
    put(&table.tau().fingerprint().to_le_bytes())?;
    put(&table.environment().seed().to_le_bytes())?;
    put(&(table.values().len() as u64).to_le_bytes())?;
    for v in table.values() {
        put(&v.to_le_bytes())?;
    }
    out.flush().map_err(io)
}

pub fn read_dump(path: &Path) -> CliResult<(DumpHeader, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |m: &str| CliError::Format {
        path: path.into(),
        message: m.to_string(),
    };
    let mut pos = 0usize;
    let mut take = |k: usize| -> CliResult<&[u8]> {
        let s = bytes.get(pos..pos + k).ok_or_else(|| bad("truncated dump"))?;
        pos += k;
        Ok(s)
    };
    if take(4)? != DUMP_MAGIC {
        return Err(bad("not a polymer table dump"));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
    let u64_at = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("8 bytes"));
    let version = u32_at(take(4)?);
    if version != DUMP_VERSION {
        return Err(bad(&format!("unsupported dump version {version}")));
    }
    let dim = u32_at(take(4)?);
    let extent = (0..dim).map(|_| take(4).map(u32_at)).collect::<CliResult<Vec<_>>>()?;
    let mode = take(1)?[0];
    let beta = f64::from_bits(u64_at(take(8)?));
    let tau_hash = u64_at(take(8)?);
    let seed = u64_at(take(8)?);
    let count = u64_at(take(8)?) as usize;
    let expected: usize = extent.iter().map(|&e| e as usize + 1).product();
    if count != expected {
        return Err(bad("value count does not match the extent"));
    }
    let values = (0..count)
        .map(|_| take(8).map(|s| f64::from_bits(u64_at(s))))
        .collect::<CliResult<Vec<_>>>()?;
    let header = DumpHeader {
        version,
        dim,
        extent,
        beta: (mode == 0).then_some(beta),
        tau_hash,
        seed,
    };
    Ok((header, values))
}
