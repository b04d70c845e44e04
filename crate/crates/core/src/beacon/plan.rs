use serde::{Deserialize, Serialize};

use super::{encode_uplink, Error, FlashStore, MeterRecord, Result, SECONDS_PER_DAY};
use crate::phy::{time_on_air, ProtocolPreset, RadioParams};

/// Per-day transmission caps; `None` means unlimited. Days start at UTC
/// midnight.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DailyLimits {
    pub max_messages_per_day: Option<u32>,
    pub max_bytes_per_day: Option<u64>,
    pub max_airtime_per_day_s: Option<f64>,
}

impl DailyLimits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    /// The message cap of a protocol preset. The volume cap is left off: for
    /// LoRa the two published numbers disagree and the message cap is the
    /// binding one.
    pub fn from_preset(preset: &ProtocolPreset) -> Self {
        DailyLimits {
            max_messages_per_day: preset.daily_limit_messages,
            ..Self::default()
        }
    }

    /// Both the message and the volume cap of a preset.
    pub fn from_preset_strict(preset: &ProtocolPreset) -> Self {
        DailyLimits {
            max_messages_per_day: preset.daily_limit_messages,
            max_bytes_per_day: preset.daily_limit_kb.map(|kb| (kb * 1000.0) as u64),
            max_airtime_per_day_s: None,
        }
    }

    /// 10 messages per day.
    pub fn lora() -> Self {
        DailyLimits {
            max_messages_per_day: Some(10),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_airtime_per_day_s.is_some_and(|a| a.is_nan() || a < 0.0) {
            return Err(Error::InvalidConfig("daily airtime cap must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedUplink {
    pub send_time: i64,
    #[serde(serialize_with = "hex_bytes")]
    pub payload: Vec<u8>,
    pub records: usize,
    pub first_record: i64,
    pub last_record: i64,
    pub airtime_ms: f64,
}

fn hex_bytes<S: serde::Serializer>(bytes: &[u8], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&bytes.iter().map(|b| format!("{b:02x}")).collect::<String>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DaySummary {
    pub day_start: i64,
    pub messages: u32,
    pub bytes: u64,
    pub airtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UplinkPlan {
    pub uplinks: Vec<PlannedUplink>,
    pub days: Vec<DaySummary>,
    /// Records left for after the planning horizon.
    pub deferred_records: usize,
    /// A day with full budgets could not carry a single record.
    pub starved: bool,
}

struct DayBudget {
    messages: Option<u32>,
    bytes: Option<u64>,
    airtime_ms: Option<f64>,
}

impl DayBudget {
    fn fits(&self, bytes: usize, airtime_ms: f64) -> bool {
        self.messages.is_none_or(|m| m >= 1)
            && self.bytes.is_none_or(|b| b >= bytes as u64)
            && self.airtime_ms.is_none_or(|a| a >= airtime_ms)
    }

    fn spend(&mut self, bytes: usize, airtime_ms: f64) {
        if let Some(m) = self.messages.as_mut() {
            *m -= 1;
        }
        if let Some(b) = self.bytes.as_mut() {
            *b -= bytes as u64;
        }
        if let Some(a) = self.airtime_ms.as_mut() {
            *a -= airtime_ms;
        }
    }
}

/// Splits the stored records, oldest first, into uplinks of at most
/// `payload_limit` bytes over `horizon_days` days beginning with the day of
/// `start`. An uplink goes out only if it fits every remaining daily cap;
/// otherwise the rest waits for the next day. Uplinks within a day are
/// spread evenly from `start` (or midnight) to the end of the day.
///
/// Every record in `store` is taken to be available at `start`; plan after
/// the readouts, not before.
pub fn plan_uplinks(
    store: &FlashStore,
    limits: &DailyLimits,
    params: &RadioParams,
    payload_limit: usize,
    start: i64,
    horizon_days: u32,
) -> Result<UplinkPlan> {
    limits.validate()?;
    params.validate()?;
    if !(1..=255).contains(&payload_limit) {
        return Err(Error::InvalidConfig(format!(
            "payload limit {payload_limit} outside 1..=255"
        )));
    }
    let records: Vec<MeterRecord> = store.records();
    let mut next = 0;
    let mut uplinks = Vec::new();
    let mut days = Vec::new();
    let mut starved = false;
    let first_midnight = start.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY;

    for day in 0..i64::from(horizon_days) {
        if next == records.len() {
            break;
        }
        let day_start = first_midnight + day * SECONDS_PER_DAY;
        let window_start = day_start.max(start);
        let day_end = day_start + SECONDS_PER_DAY;
        let mut budget = DayBudget {
            messages: limits.max_messages_per_day,
            bytes: limits.max_bytes_per_day,
            airtime_ms: limits.max_airtime_per_day_s.map(|s| s * 1000.0),
        };
        let mut today = Vec::new();
        while next < records.len() {
            let encoded = match encode_uplink(&records[next..], payload_limit) {
                Ok(e) => e,
                Err(Error::RecordTooLarge { .. }) => break,
                Err(e) => return Err(e),
            };
            let airtime_ms = time_on_air(encoded.payload.len(), params)?;
            if !budget.fits(encoded.payload.len(), airtime_ms) {
                break;
            }
            budget.spend(encoded.payload.len(), airtime_ms);
            today.push(PlannedUplink {
                send_time: 0,
                records: encoded.records,
                first_record: records[next].timestamp,
                last_record: records[next + encoded.records - 1].timestamp,
                payload: encoded.payload,
                airtime_ms,
            });
            next += encoded.records;
        }
        if today.is_empty() {
            starved = true;
            break;
        }
        let span = day_end - window_start;
        let n = today.len() as i64;
        for (k, uplink) in today.iter_mut().enumerate() {
            uplink.send_time = window_start + span * k as i64 / n;
        }
        days.push(DaySummary {
            day_start,
            messages: today.len() as u32,
            bytes: today.iter().map(|u| u.payload.len() as u64).sum(),
            airtime_s: today.iter().map(|u| u.airtime_ms).sum::<f64>() / 1000.0,
        });
        uplinks.extend(today);
    }

    Ok(UplinkPlan {
        uplinks,
        days,
        deferred_records: records.len() - next,
        starved,
    })
}
