//! Beacon behaviour: periodic meter readout into a flash ring buffer, and
//! packing of stored records into uplinks that respect daily limits.

mod flash;
mod plan;
mod uplink;

pub use flash::FlashStore;
pub use plan::{plan_uplinks, DailyLimits, DaySummary, PlannedUplink, UplinkPlan};
pub use uplink::{decode_uplink, encode_uplink, EncodedUplink, UPLINK_VERSION};

use std::collections::BTreeMap;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::obis::ObisCode;
use crate::phy::Battery;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty uplink")]
    EmptyUplink,
    #[error("a single record needs {needed} bytes, limit is {limit}")]
    RecordTooLarge { needed: usize, limit: usize },
    #[error("register {obis} has unit {unit:?}, uplinks carry {expected:?}")]
    NonCanonicalUnit {
        obis: ObisCode,
        unit: String,
        expected: &'static str,
    },
    #[error("value {0} cannot be encoded")]
    ValueNotEncodable(Decimal),
    #[error("timestamp {0} does not fit the 32-bit uplink field")]
    TimestampOutOfRange(i64),
    #[error("truncated payload at byte {0}")]
    Truncated(usize),
    #[error("unknown uplink version {0:#04x}")]
    UnknownVersion(u8),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("clock moved backwards from {last} to {now}")]
    ClockWentBackwards { last: i64, now: i64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Phy(#[from] crate::phy::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reading {
    pub obis: ObisCode,
    #[serde(with = "rust_decimal::serde::str")]
    pub value: Decimal,
    pub unit: String,
}

impl Reading {
    pub fn new(obis: ObisCode, value: Decimal) -> Self {
        Reading {
            obis,
            value,
            unit: obis.canonical_unit().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeterRecord {
    /// Epoch seconds.
    pub timestamp: i64,
    pub readings: Vec<Reading>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeaconConfig {
    pub readout_interval_s: i64,
    pub flash_capacity: usize,
    pub payload_limit: usize,
    pub battery: Battery,
    pub limits: DailyLimits,
    /// Offset added to every record timestamp, for skew experiments.
    pub clock_skew_s: i64,
}

impl Default for BeaconConfig {
    fn default() -> Self {
        BeaconConfig {
            readout_interval_s: 15 * 60,
            flash_capacity: 4096,
            payload_limit: 50,
            battery: Battery::default(),
            limits: DailyLimits::lora(),
            clock_skew_s: 0,
        }
    }
}

impl BeaconConfig {
    pub fn validate(&self) -> Result<()> {
        if self.readout_interval_s <= 0 {
            return Err(Error::InvalidConfig("readout interval must be positive".into()));
        }
        if !(1..=255).contains(&self.payload_limit) {
            return Err(Error::InvalidConfig(format!(
                "payload limit {} outside 1..=255",
                self.payload_limit
            )));
        }
        if self.flash_capacity == 0 {
            return Err(Error::InvalidConfig("flash capacity must be positive".into()));
        }
        self.limits.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("meter read failed: {0}")]
pub struct MeterError(pub String);

/// Anything the beacon can read registers from.
pub trait MeterSource {
    fn read(&mut self, at: i64) -> std::result::Result<Vec<Reading>, MeterError>;
}

impl<F> MeterSource for F
where
    F: FnMut(i64) -> std::result::Result<Vec<Reading>, MeterError>,
{
    fn read(&mut self, at: i64) -> std::result::Result<Vec<Reading>, MeterError> {
        self(at)
    }
}

/// Replays register values recorded at fixed timestamps. A slot with no row
/// reads as a meter failure.
#[derive(Debug, Clone, Default)]
pub struct ReplaySource {
    rows: BTreeMap<i64, Vec<Reading>>,
}

impl ReplaySource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, timestamp: i64, reading: Reading) {
        self.rows.entry(timestamp).or_default().push(reading);
    }

    pub fn span(&self) -> Option<(i64, i64)> {
        Some((*self.rows.keys().next()?, *self.rows.keys().next_back()?))
    }
}

impl MeterSource for ReplaySource {
    fn read(&mut self, at: i64) -> std::result::Result<Vec<Reading>, MeterError> {
        self.rows
            .get(&at)
            .cloned()
            .ok_or_else(|| MeterError(format!("no register values at {at}")))
    }
}

/// Record bookkeeping. Every readout slot ends up counted exactly once as
/// stored, transmitted, evicted or a gap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BeaconStats {
    pub slots: u64,
    pub readouts: u64,
    pub gaps: u64,
    pub transmitted: u64,
}

#[derive(Debug, Clone)]
pub struct Beacon {
    pub config: BeaconConfig,
    anchor: i64,
    last_clock: Option<i64>,
    last_slot: Option<i64>,
    store: FlashStore,
    stats: BeaconStats,
}

impl Beacon {
    /// Readout slots are multiples of the interval counted from `anchor`.
    pub fn new(config: BeaconConfig, anchor: i64) -> Result<Self> {
        config.validate()?;
        let store = FlashStore::new(config.flash_capacity);
        Ok(Beacon {
            config,
            anchor,
            last_clock: None,
            last_slot: None,
            store,
            stats: BeaconStats::default(),
        })
    }

    pub fn store(&self) -> &FlashStore {
        &self.store
    }

    pub fn stats(&self) -> BeaconStats {
        self.stats
    }

    /// Reads the meter when `clock` has crossed into a new slot. Slots skipped
    /// by a clock jump and failed reads are recorded as gaps.
    pub fn scheduled_readout(&mut self, clock: i64, meter: &mut dyn MeterSource) -> Result<Option<MeterRecord>> {
        if let Some(last) = self.last_clock {
            if clock < last {
                return Err(Error::ClockWentBackwards { last, now: clock });
            }
        }
        self.last_clock = Some(clock);

        let interval = self.config.readout_interval_s;
        let offset = clock - self.anchor;
        let slot = offset.div_euclid(interval);
        let due = match self.last_slot {
            None => offset.rem_euclid(interval) == 0,
            Some(last) => slot > last,
        };
        if !due {
            self.last_slot.get_or_insert(slot);
            return Ok(None);
        }
        if let Some(last) = self.last_slot {
            for missed in last + 1..slot {
                self.flag_gap(self.slot_time(missed));
            }
        }
        self.last_slot = Some(slot);

        let at = self.slot_time(slot);
        match meter.read(at) {
            Ok(readings) => {
                let record = MeterRecord {
                    timestamp: at,
                    readings,
                };
                self.stats.slots += 1;
                self.stats.readouts += 1;
                self.store.store_record(record.clone());
                Ok(Some(record))
            }
            Err(_) => {
                self.flag_gap(at);
                Ok(None)
            }
        }
    }

    fn slot_time(&self, slot: i64) -> i64 {
        self.anchor + slot * self.config.readout_interval_s + self.config.clock_skew_s
    }

    fn flag_gap(&mut self, at: i64) {
        self.stats.slots += 1;
        self.stats.gaps += 1;
        self.store.flag_gap(at);
    }

    /// Drops the `count` oldest records after they were handed to the radio.
    pub fn confirm_transmitted(&mut self, count: usize) -> Vec<MeterRecord> {
        let taken = self.store.take_oldest(count);
        self.stats.transmitted += taken.len() as u64;
        taken
    }
}
