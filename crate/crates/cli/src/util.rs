use std::fmt::Display;
use std::fs;
use std::path::Path;

use chrono::DateTime;
use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use onemeter::beacon::{Reading, ReplaySource};
use onemeter::obis::ObisCode;

/// A failure reported as `{"stage": ..., "error": ...}` on stderr.
#[derive(Debug)]
pub struct Failure {
    pub stage: Option<&'static str>,
    pub message: String,
}

impl Failure {
    pub fn new(message: impl Display) -> Self {
        Failure {
            stage: None,
            message: message.to_string(),
        }
    }

    pub fn at(stage: &'static str) -> impl Fn(Failure) -> Failure {
        move |f| Failure {
            stage: f.stage.or(Some(stage)),
            message: f.message,
        }
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::new(e)
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Epoch seconds or an RFC 3339 timestamp.
pub fn parse_time(s: &str) -> CliResult<i64> {
    if let Ok(t) = s.parse::<i64>() {
        return Ok(t);
    }
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.timestamp())
        .map_err(|e| Failure::new(format!("time {s:?}: {e}")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTime {
    Epoch(i64),
    Text(String),
}

pub fn de_time<'de, D: Deserializer<'de>>(d: D) -> Result<i64, D::Error> {
    match RawTime::deserialize(d)? {
        RawTime::Epoch(t) => Ok(t),
        RawTime::Text(s) => parse_time(&s).map_err(|f| serde::de::Error::custom(f.message)),
    }
}

pub fn de_opt_time<'de, D: Deserializer<'de>>(d: D) -> Result<Option<i64>, D::Error> {
    de_time(d).map(Some)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Failure::new(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Failure::new(e.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeterRow {
    timestamp: i64,
    obis: ObisCode,
    value: Decimal,
}

/// Meter export with header `timestamp,obis,value`; one row per register
/// and readout.
pub fn load_meter_csv(path: &Path) -> CliResult<(ReplaySource, usize)> {
    let bytes = read(path)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let mut source = ReplaySource::new();
    let mut rows = 0;
    for (i, row) in rdr.deserialize::<MeterRow>().enumerate() {
        let row = row.map_err(|e| Failure::new(format!("{} row {}: {e}", path.display(), i + 1)))?;
        source.insert(row.timestamp, Reading::new(row.obis, row.value));
        rows += 1;
    }
    Ok((source, rows))
}
