use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::{io_err, Error, Result};
use crate::beacon::{decode_uplink, MeterRecord};
use crate::obis::ObisCode;

/// Register wrap span for a 6.3 display: 1 000 000 kWh.
pub const DEFAULT_REGISTER_SPAN: Decimal = Decimal::from_parts(1_000_000, 0, 0, false, 0);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredReading {
    pub timestamp: i64,
    pub obis: ObisCode,
    #[serde(with = "rust_decimal::serde::str")]
    pub value: Decimal,
    pub unit: String,
    pub received_at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub meter: String,
    #[serde(flatten)]
    pub reading: StoredReading,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestOutcome {
    pub added: usize,
    pub duplicates: usize,
    pub quarantined: usize,
}

#[derive(Debug, Clone, Default)]
struct MeterLog {
    readings: BTreeMap<(ObisCode, i64), StoredReading>,
    register_span: Option<Decimal>,
}

#[derive(Serialize)]
struct IndexEntry {
    readings: usize,
    first: Option<i64>,
    last: Option<i64>,
}

/// Append-only reading log per meter, deduplicated on
/// (meter, timestamp, OBIS code). The first value seen for a key wins.
///
/// With a data directory, each meter's log is `meters/<id>.ndjson`, readings
/// rejected for clock skew go to `quarantine.ndjson`, and `index.json`
/// summarises every meter.
#[derive(Debug, Clone)]
pub struct ReadingStore {
    dir: Option<PathBuf>,
    meters: BTreeMap<String, MeterLog>,
    quarantine: Vec<Quarantined>,
    max_clock_skew_s: i64,
}

fn check_meter_id(id: &str) -> Result<()> {
    let ok =
        !id.is_empty() && !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidMeterId(id.to_string()))
    }
}

fn read_ndjson<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Corrupt {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

fn append_ndjson<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Ok(());
    }
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(|e| io_err(path, e))?;
        buf.push(b'\n');
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    file.write_all(&buf).map_err(|e| io_err(path, e))
}

impl ReadingStore {
    /// Readings more than 5 minutes ahead of their reception time are
    /// quarantined by default.
    pub const DEFAULT_MAX_CLOCK_SKEW_S: i64 = 300;

    pub fn in_memory() -> Self {
        ReadingStore {
            dir: None,
            meters: BTreeMap::new(),
            quarantine: Vec::new(),
            max_clock_skew_s: Self::DEFAULT_MAX_CLOCK_SKEW_S,
        }
    }

    /// Open or create a store rooted at `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let meters_dir = dir.join("meters");
        fs::create_dir_all(&meters_dir).map_err(|e| io_err(&meters_dir, e))?;
        let mut store = ReadingStore {
            dir: Some(dir.clone()),
            ..Self::in_memory()
        };
        let mut entries: Vec<PathBuf> = fs::read_dir(&meters_dir)
            .map_err(|e| io_err(&meters_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "ndjson"))
            .collect();
        entries.sort();
        for path in entries {
            let meter = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| io_err(&path, "non-UTF-8 file name"))?
                .to_string();
            check_meter_id(&meter)?;
            let log = store.meters.entry(meter).or_default();
            for r in read_ndjson::<StoredReading>(&path)? {
                log.readings.entry((r.obis, r.timestamp)).or_insert(r);
            }
        }
        let q = dir.join("quarantine.ndjson");
        if q.exists() {
            store.quarantine = read_ndjson(&q)?;
        }
        Ok(store)
    }

    pub fn with_max_clock_skew(mut self, seconds: i64) -> Self {
        self.max_clock_skew_s = seconds;
        self
    }

    pub fn set_register_span(&mut self, meter: &str, span: Decimal) -> Result<()> {
        check_meter_id(meter)?;
        if span <= Decimal::ZERO {
            return Err(Error::InvalidRequest("register span must be positive".into()));
        }
        self.meters.entry(meter.to_string()).or_default().register_span = Some(span);
        Ok(())
    }

    pub fn register_span(&self, meter: &str) -> Decimal {
        self.meters
            .get(meter)
            .and_then(|m| m.register_span)
            .unwrap_or(DEFAULT_REGISTER_SPAN)
    }

    /// Decode an uplink and store its readings.
    pub fn ingest_uplink(&mut self, meter: &str, payload: &[u8], received_at: i64) -> Result<IngestOutcome> {
        let records = decode_uplink(payload)?;
        self.ingest_records(meter, &records, received_at)
    }

    pub fn ingest_records(&mut self, meter: &str, records: &[MeterRecord], received_at: i64) -> Result<IngestOutcome> {
        check_meter_id(meter)?;
        let mut outcome = IngestOutcome::default();
        let mut fresh = Vec::new();
        let mut held = Vec::new();
        let log = self.meters.entry(meter.to_string()).or_default();
        for record in records {
            for reading in &record.readings {
                let stored = StoredReading {
                    timestamp: record.timestamp,
                    obis: reading.obis,
                    value: reading.value,
                    unit: reading.unit.clone(),
                    received_at,
                };
                if record.timestamp - received_at > self.max_clock_skew_s {
                    let q = Quarantined {
                        meter: meter.to_string(),
                        reading: stored,
                        reason: format!(
                            "timestamp {} is {} s ahead of reception",
                            record.timestamp,
                            record.timestamp - received_at
                        ),
                    };
                    let seen = self.quarantine.iter().chain(&held).any(|x| {
                        x.meter == q.meter
                            && x.reading.timestamp == q.reading.timestamp
                            && x.reading.obis == q.reading.obis
                    });
                    if !seen {
                        held.push(q);
                    }
                    outcome.quarantined += 1;
                    continue;
                }
                let key = (reading.obis, record.timestamp);
                if log.readings.contains_key(&key) {
                    outcome.duplicates += 1;
                    continue;
                }
                log.readings.insert(key, stored.clone());
                fresh.push(stored);
                outcome.added += 1;
            }
        }
        if let Some(dir) = &self.dir {
            append_ndjson(&dir.join("meters").join(format!("{meter}.ndjson")), &fresh)?;
            append_ndjson(&dir.join("quarantine.ndjson"), &held)?;
        }
        self.quarantine.extend(held);
        self.write_index()?;
        Ok(outcome)
    }

    fn write_index(&self) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let index: BTreeMap<&str, IndexEntry> = self
            .meters
            .iter()
            .map(|(id, log)| {
                let ts = log.readings.values().map(|r| r.timestamp);
                (
                    id.as_str(),
                    IndexEntry {
                        readings: log.readings.len(),
                        first: ts.clone().min(),
                        last: ts.max(),
                    },
                )
            })
            .collect();
        let path = dir.join("index.json");
        let mut text = serde_json::to_string_pretty(&index).map_err(|e| io_err(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }

    pub fn meters(&self) -> impl Iterator<Item = &str> {
        self.meters.keys().map(String::as_str)
    }

    pub fn len(&self, meter: &str) -> usize {
        self.meters.get(meter).map_or(0, |m| m.readings.len())
    }

    pub fn is_empty(&self) -> bool {
        self.meters.values().all(|m| m.readings.is_empty())
    }

    pub fn quarantined(&self) -> &[Quarantined] {
        &self.quarantine
    }

    /// Snapshot of one register's readings, in time order.
    pub fn readings(&self, meter: &str, obis: ObisCode) -> Vec<StoredReading> {
        self.meters.get(meter).map_or_else(Vec::new, |m| {
            m.readings
                .range((obis, i64::MIN)..=(obis, i64::MAX))
                .map(|(_, r)| r.clone())
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beacon::{encode_uplink, Reading};
    use proptest::prelude::*;

    fn record(t: i64, kwh: i64) -> MeterRecord {
        MeterRecord {
            timestamp: t,
            readings: vec![Reading::new(ObisCode::ACTIVE_IMPORT, Decimal::new(kwh, 3))],
        }
    }

    fn payload(ts: &[i64]) -> Vec<u8> {
        let recs: Vec<MeterRecord> = ts.iter().map(|&t| record(t, 1_000_000 + t)).collect();
        let up = encode_uplink(&recs, 255).unwrap();
        assert_eq!(up.records, recs.len());
        up.payload
    }

    #[test]
    fn idempotent_ingestion() {
        let mut s = ReadingStore::in_memory();
        let p = payload(&[0, 900, 1800]);
        assert_eq!(s.ingest_uplink("m1", &p, 2000).unwrap().added, 3);
        let again = s.ingest_uplink("m1", &p, 2000).unwrap();
        assert_eq!((again.added, again.duplicates), (0, 3));
        let mixed = payload(&[1800, 2700]);
        assert_eq!(s.ingest_uplink("m1", &mixed, 3000).unwrap().added, 1);
        assert_eq!(s.len("m1"), 4);
    }

    #[test]
    fn rejects_garbage_and_bad_ids() {
        let mut s = ReadingStore::in_memory();
        assert!(matches!(s.ingest_uplink("m1", &[0xFF, 1], 0), Err(Error::Decode(_))));
        assert!(matches!(
            s.ingest_records("../x", &[record(0, 1)], 0),
            Err(Error::InvalidMeterId(_))
        ));
    }

    #[test]
    fn future_readings_are_quarantined() {
        let mut s = ReadingStore::in_memory().with_max_clock_skew(60);
        let out = s.ingest_records("m", &[record(0, 1), record(1000, 2)], 100).unwrap();
        assert_eq!((out.added, out.quarantined), (1, 1));
        s.ingest_records("m", &[record(1000, 2)], 100).unwrap();
        assert_eq!(s.quarantined().len(), 1);
    }

    #[test]
    fn file_store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = payload(&[0, 900]);
        {
            let mut s = ReadingStore::open(dir.path()).unwrap();
            s.ingest_uplink("meter-1", &p, 1000).unwrap();
        }
        let log = dir.path().join("meters/meter-1.ndjson");
        let before = fs::read(&log).unwrap();
        let index = fs::read_to_string(dir.path().join("index.json")).unwrap();
        assert!(index.contains("\"readings\": 2"));
        let mut s = ReadingStore::open(dir.path()).unwrap();
        assert_eq!(s.len("meter-1"), 2);
        assert_eq!(s.ingest_uplink("meter-1", &p, 1000).unwrap().added, 0);
        assert_eq!(fs::read(&log).unwrap(), before);
        let first = String::from_utf8(before).unwrap();
        assert_eq!(
            first.lines().next().unwrap(),
            r#"{"timestamp":0,"obis":"1.8.0","value":"1000.000","unit":"kWh","received_at":1000}"#
        );
    }

    proptest! {
        #[test]
        fn added_equals_set_difference(
            first in prop::collection::btree_set(0i64..200, 1..30),
            second in prop::collection::btree_set(0i64..200, 1..30),
        ) {
            let mut s = ReadingStore::in_memory();
            let a: Vec<MeterRecord> = first.iter().map(|&t| record(t * 900, t)).collect();
            let b: Vec<MeterRecord> = second.iter().map(|&t| record(t * 900, t)).collect();
            s.ingest_records("m", &a, i64::MAX / 2).unwrap();
            let out = s.ingest_records("m", &b, i64::MAX / 2).unwrap();
            prop_assert_eq!(out.added, second.difference(&first).count());
            prop_assert_eq!(s.len("m"), first.union(&second).count());
        }
    }
}
