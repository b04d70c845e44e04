use std::path::Path;

use chrono::{DateTime, NaiveDate};
use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use super::{io_err, ConsumptionProfile, Error, Result};

const DAY_S: i64 = 86_400;
/// Decimal places kept when splitting an interval's energy across zones.
const SPLIT_SCALE: u32 = 9;

/// A time-of-day zone. `end` may be earlier than `start` to wrap past
/// midnight; `start == end` covers the whole day. Times are UTC "hh:mm",
/// with "24:00" accepted as an end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub name: String,
    pub start: String,
    pub end: String,
    /// Price per kWh, quoted so that it stays exact.
    #[serde(with = "rust_decimal::serde::str")]
    pub price: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tariff {
    pub name: String,
    #[serde(default)]
    pub currency: String,
    #[serde(default, with = "rust_decimal::serde::str")]
    pub fixed_daily_charge: Decimal,
    #[serde(default)]
    pub valid_from: Option<NaiveDate>,
    #[serde(default)]
    pub valid_to: Option<NaiveDate>,
    pub zones: Vec<Zone>,
}

fn parse_hhmm(s: &str, allow_24: bool) -> Result<i64> {
    let bad = || Error::Tariff(format!("time {s:?} is not hh:mm"));
    let (h, m) = s.split_once(':').ok_or_else(bad)?;
    if h.len() != 2 || m.len() != 2 {
        return Err(bad());
    }
    let h: i64 = h.parse().map_err(|_| bad())?;
    let m: i64 = m.parse().map_err(|_| bad())?;
    if m >= 60 || h > 24 || (h == 24 && (m != 0 || !allow_24)) {
        return Err(bad());
    }
    Ok(h * 3600 + m * 60)
}

impl Tariff {
    pub fn flat(price: Decimal) -> Self {
        Tariff {
            name: "flat".into(),
            currency: String::new(),
            fixed_daily_charge: Decimal::ZERO,
            valid_from: None,
            valid_to: None,
            zones: vec![Zone {
                name: "all-day".into(),
                start: "00:00".into(),
                end: "00:00".into(),
                price,
            }],
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let tariff: Tariff = toml::from_str(text).map_err(|e| Error::Tariff(e.to_string()))?;
        tariff.validate()?;
        Ok(tariff)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Day segments in seconds, sorted: (start, end, zone index).
    fn segments(&self) -> Result<Vec<(i64, i64, usize)>> {
        let mut segs = Vec::new();
        for (i, z) in self.zones.iter().enumerate() {
            let s = parse_hhmm(&z.start, false)?;
            let e = parse_hhmm(&z.end, true)?;
            if s < e {
                segs.push((s, e, i));
            } else if s == e {
                segs.push((0, DAY_S, i));
            } else {
                segs.push((s, DAY_S, i));
                if e > 0 {
                    segs.push((0, e, i));
                }
            }
        }
        segs.sort();
        Ok(segs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.zones.is_empty() {
            return Err(Error::Tariff("no zones".into()));
        }
        if let Some(z) = self.zones.iter().find(|z| z.price < Decimal::ZERO) {
            return Err(Error::Tariff(format!("zone {} has a negative price", z.name)));
        }
        if self.fixed_daily_charge < Decimal::ZERO {
            return Err(Error::Tariff("negative fixed charge".into()));
        }
        if let (Some(a), Some(b)) = (self.valid_from, self.valid_to) {
            if a > b {
                return Err(Error::Tariff("validity ends before it starts".into()));
            }
        }
        let mut covered = 0;
        for (s, e, i) in self.segments()? {
            if s != covered {
                let what = if s > covered { "gap" } else { "overlap" };
                return Err(Error::Tariff(format!(
                    "zones leave a {what} at {:02}:{:02} (zone {})",
                    s.min(covered) / 3600,
                    s.min(covered) % 3600 / 60,
                    self.zones[i].name
                )));
            }
            covered = e;
        }
        if covered != DAY_S {
            return Err(Error::Tariff("zones do not reach midnight".into()));
        }
        Ok(())
    }

    fn check_validity(&self, t: i64) -> Result<()> {
        let date = DateTime::from_timestamp(t, 0)
            .ok_or_else(|| Error::TariffNotValid(t.to_string()))?
            .date_naive();
        let early = self.valid_from.is_some_and(|d| date < d);
        let late = self.valid_to.is_some_and(|d| date > d);
        if early || late {
            return Err(Error::TariffNotValid(date.to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZoneCost {
    pub zone: String,
    #[serde(with = "rust_decimal::serde::str")]
    pub energy_kwh: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub price: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub cost: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostEstimate {
    pub tariff: String,
    pub currency: String,
    pub zones: Vec<ZoneCost>,
    #[serde(with = "rust_decimal::serde::str")]
    pub energy_kwh: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub energy_cost: Decimal,
    /// Calendar days touched by the profile.
    pub days: i64,
    #[serde(with = "rust_decimal::serde::str")]
    pub fixed_charges: Decimal,
    /// Unrounded.
    #[serde(with = "rust_decimal::serde::str")]
    pub total: Decimal,
    /// Rounded half-to-even to two places.
    #[serde(with = "rust_decimal::serde::str")]
    pub total_rounded: Decimal,
}

pub fn round_money(amount: Decimal) -> Decimal {
    amount.round_dp_with_strategy(2, RoundingStrategy::MidpointNearestEven)
}

/// Energy of each interval is priced by zone. An interval crossing a zone
/// boundary is split in proportion to the time spent in each zone; the last
/// zone it touches takes the remainder so no energy is lost.
pub fn cost_estimate(profile: &ConsumptionProfile, tariff: &Tariff) -> Result<CostEstimate> {
    tariff.validate()?;
    tariff.check_validity(profile.from)?;
    tariff.check_validity(profile.to - 1)?;
    let segs = tariff.segments()?;
    let mut zone_kwh = vec![Decimal::ZERO; tariff.zones.len()];
    let mut seconds = vec![0i64; tariff.zones.len()];
    let mut order = Vec::new();
    for b in &profile.buckets {
        order.clear();
        let mut t = b.start;
        while t < b.end() {
            let sod = t.rem_euclid(DAY_S);
            let &(_, seg_end, zone) = segs
                .iter()
                .find(|(s, e, _)| *s <= sod && sod < *e)
                .expect("validated zones cover the day");
            let piece_end = b.end().min(t - sod + seg_end);
            if seconds[zone] == 0 {
                order.push(zone);
            }
            seconds[zone] += piece_end - t;
            t = piece_end;
        }
        let mut left = b.energy_kwh;
        for (k, &zone) in order.iter().enumerate() {
            let part = if k + 1 == order.len() {
                left
            } else {
                (b.energy_kwh * Decimal::from(seconds[zone]) / Decimal::from(b.duration_s))
                    .round_dp_with_strategy(SPLIT_SCALE, RoundingStrategy::MidpointNearestEven)
            };
            zone_kwh[zone] += part;
            left -= part;
            seconds[zone] = 0;
        }
    }
    let zones: Vec<ZoneCost> = tariff
        .zones
        .iter()
        .zip(&zone_kwh)
        .map(|(z, &kwh)| ZoneCost {
            zone: z.name.clone(),
            energy_kwh: kwh,
            price: z.price,
            cost: kwh * z.price,
        })
        .collect();
    let energy_cost: Decimal = zones.iter().map(|z| z.cost).sum();
    let days = if profile.to > profile.from {
        (profile.to - 1).div_euclid(DAY_S) - profile.from.div_euclid(DAY_S) + 1
    } else {
        0
    };
    let fixed_charges = tariff.fixed_daily_charge * Decimal::from(days);
    let total = energy_cost + fixed_charges;
    Ok(CostEstimate {
        tariff: tariff.name.clone(),
        currency: tariff.currency.clone(),
        zones,
        energy_kwh: zone_kwh.iter().copied().sum(),
        energy_cost,
        days,
        fixed_charges,
        total,
        total_rounded: round_money(total),
    })
}
