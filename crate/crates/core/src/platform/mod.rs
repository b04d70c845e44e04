//! Metering data platform: a reading store fed by uplinks, consumption
//! profiles and the reports built on them, and tariff-based cost estimates.
//!
//! Timestamps are epoch seconds and calendar arithmetic is done in UTC.

mod profile;
mod store;
mod tariff;

pub use profile::{
    consumption_profile, max_power_demand, threshold_exceedance, Bucket, ConsumptionProfile, Demand, ProfileRequest,
};
pub use store::{IngestOutcome, Quarantined, ReadingStore, StoredReading, DEFAULT_REGISTER_SPAN};
pub use tariff::{cost_estimate, round_money, CostEstimate, Tariff, Zone, ZoneCost};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("undecodable payload: {0}")]
    Decode(#[from] crate::beacon::Error),
    #[error("io error on {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("corrupt store file {path} line {line}: {reason}")]
    Corrupt { path: String, line: usize, reason: String },
    #[error("invalid meter id {0:?}")]
    InvalidMeterId(String),
    #[error("no readings for meter {meter} register {obis} in range")]
    NoData { meter: String, obis: String },
    #[error("readings span {first}..{last}, range needs {from}..{to}")]
    Coverage { first: i64, last: i64, from: i64, to: i64 },
    #[error("register decreased without rollover at timestamps {0:?}")]
    DataQuality(Vec<i64>),
    #[error("invalid report request: {0}")]
    InvalidRequest(String),
    #[error("unsupported register unit {0:?}")]
    UnsupportedUnit(String),
    #[error("invalid tariff: {0}")]
    Tariff(String),
    #[error("tariff not valid on {0}")]
    TariffNotValid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}
