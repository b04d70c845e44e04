use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use super::{Error, ReadingStore, Result, StoredReading};
use crate::obis::ObisCode;

/// Decimal places kept for interpolated register values, kWh.
const INTERP_SCALE: u32 = 9;
const MAX_BUCKETS: i64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRequest {
    pub meter: String,
    #[serde(default = "active_import")]
    pub obis: ObisCode,
    /// Range start, epoch seconds, inclusive.
    pub from: i64,
    /// Range end, epoch seconds, exclusive.
    pub to: i64,
    pub interval_s: i64,
}

fn active_import() -> ObisCode {
    ObisCode::ACTIVE_IMPORT
}

impl ProfileRequest {
    pub fn new(meter: &str, from: i64, to: i64, interval_s: i64) -> Self {
        ProfileRequest {
            meter: meter.to_string(),
            obis: ObisCode::ACTIVE_IMPORT,
            from,
            to,
            interval_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bucket {
    pub start: i64,
    pub duration_s: i64,
    #[serde(with = "rust_decimal::serde::str")]
    pub energy_kwh: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub avg_power_kw: Decimal,
}

impl Bucket {
    pub fn end(&self) -> i64 {
        self.start + self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsumptionProfile {
    pub meter: String,
    pub obis: ObisCode,
    pub from: i64,
    pub to: i64,
    pub interval_s: i64,
    /// Register at `from` and at `to`, rollovers unwrapped.
    #[serde(with = "rust_decimal::serde::str")]
    pub start_register_kwh: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub end_register_kwh: Decimal,
    pub buckets: Vec<Bucket>,
}

impl ConsumptionProfile {
    pub fn total_energy_kwh(&self) -> Decimal {
        self.buckets.iter().map(|b| b.energy_kwh).sum()
    }

    pub fn duration_s(&self) -> i64 {
        self.to - self.from
    }
}

fn to_kwh(r: &StoredReading) -> Result<Decimal> {
    match r.unit.as_str() {
        "kWh" => Ok(r.value),
        "Wh" => Ok(r.value / Decimal::ONE_THOUSAND),
        other => Err(Error::UnsupportedUnit(other.to_string())),
    }
}

/// Register series with rollovers unwrapped. A drop larger than 90 % of the
/// span counts as a wrap; any other drop is a data-quality error.
fn unwrap_series(readings: &[StoredReading], span: Decimal) -> Result<Vec<(i64, Decimal)>> {
    let threshold = span * Decimal::new(9, 1);
    let mut offset = Decimal::ZERO;
    let mut prev: Option<Decimal> = None;
    let mut bad = Vec::new();
    let mut out = Vec::with_capacity(readings.len());
    for r in readings {
        let v = to_kwh(r)?;
        if let Some(p) = prev {
            if v < p {
                if p - v > threshold {
                    offset += span;
                } else {
                    bad.push(r.timestamp);
                }
            }
        }
        prev = Some(v);
        out.push((r.timestamp, v + offset));
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(Error::DataQuality(bad))
    }
}

/// Register value at `t`, interpolating linearly between neighbours.
fn register_at(series: &[(i64, Decimal)], t: i64) -> Decimal {
    let i = series.partition_point(|&(ts, _)| ts < t);
    let (tb, vb) = series[i];
    if tb == t {
        return vb;
    }
    let (ta, va) = series[i - 1];
    let v = va + (vb - va) * Decimal::from(t - ta) / Decimal::from(tb - ta);
    v.round_dp_with_strategy(INTERP_SCALE, RoundingStrategy::MidpointNearestEven)
}

/// Energy per interval from a cumulative register. Interval boundaries
/// falling between readings are interpolated; the last interval is cut short
/// if the range is not a whole number of intervals.
pub fn consumption_profile(store: &ReadingStore, req: &ProfileRequest) -> Result<ConsumptionProfile> {
    if req.interval_s <= 0 {
        return Err(Error::InvalidRequest("interval must be positive".into()));
    }
    if req.from >= req.to {
        return Err(Error::InvalidRequest("range is empty".into()));
    }
    if (req.to - req.from) / req.interval_s > MAX_BUCKETS {
        return Err(Error::InvalidRequest("too many intervals".into()));
    }
    let readings = store.readings(&req.meter, req.obis);
    let no_data = || Error::NoData {
        meter: req.meter.clone(),
        obis: req.obis.to_string(),
    };
    if readings.is_empty() {
        return Err(no_data());
    }
    // Only the readings bracketing the range matter.
    let lo = readings.partition_point(|r| r.timestamp <= req.from).saturating_sub(1);
    let hi = readings.partition_point(|r| r.timestamp < req.to);
    let window = &readings[lo..(hi + 1).min(readings.len())];
    let (first, last) = (window[0].timestamp, window[window.len() - 1].timestamp);
    if first > req.from || last < req.to {
        if !readings.iter().any(|r| (req.from..req.to).contains(&r.timestamp)) {
            return Err(no_data());
        }
        return Err(Error::Coverage {
            first,
            last,
            from: req.from,
            to: req.to,
        });
    }
    let series = unwrap_series(window, store.register_span(&req.meter))?;

    let mut buckets = Vec::new();
    let mut start = req.from;
    let mut value = register_at(&series, start);
    let start_register = value;
    while start < req.to {
        let end = (start + req.interval_s).min(req.to);
        let next = register_at(&series, end);
        let energy = next - value;
        let duration = end - start;
        buckets.push(Bucket {
            start,
            duration_s: duration,
            energy_kwh: energy,
            avg_power_kw: energy * Decimal::from(3600) / Decimal::from(duration),
        });
        start = end;
        value = next;
    }
    Ok(ConsumptionProfile {
        meter: req.meter.clone(),
        obis: req.obis,
        from: req.from,
        to: req.to,
        interval_s: req.interval_s,
        start_register_kwh: start_register,
        end_register_kwh: value,
        buckets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Demand {
    #[serde(with = "rust_decimal::serde::str")]
    pub power_kw: Decimal,
    pub start: i64,
}

/// Highest average interval power; the earliest interval wins ties.
pub fn max_power_demand(profile: &ConsumptionProfile) -> Result<Demand> {
    let mut best: Option<Demand> = None;
    for b in &profile.buckets {
        if best.is_none_or(|d| b.avg_power_kw > d.power_kw) {
            best = Some(Demand {
                power_kw: b.avg_power_kw,
                start: b.start,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidRequest("empty profile".into()))
}

/// Percentage of the range spent in intervals whose average power is
/// strictly above `threshold_kw`.
pub fn threshold_exceedance(profile: &ConsumptionProfile, threshold_kw: Decimal) -> Result<Decimal> {
    let total = profile.duration_s();
    if total <= 0 {
        return Err(Error::InvalidRequest("empty profile".into()));
    }
    let above: i64 = profile
        .buckets
        .iter()
        .filter(|b| b.avg_power_kw > threshold_kw)
        .map(|b| b.duration_s)
        .sum();
    Ok(Decimal::from(above) * Decimal::ONE_HUNDRED / Decimal::from(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beacon::{MeterRecord, Reading};
    use proptest::prelude::*;

    fn store_with(points: &[(i64, Decimal)]) -> ReadingStore {
        let mut s = ReadingStore::in_memory();
        let recs: Vec<MeterRecord> = points
            .iter()
            .map(|&(t, v)| MeterRecord {
                timestamp: t,
                readings: vec![Reading::new(ObisCode::ACTIVE_IMPORT, v)],
            })
            .collect();
        s.ingest_records("m", &recs, i64::MAX / 2).unwrap();
        s
    }

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn single_quarter_hour() {
        let s = store_with(&[(0, d("100.0")), (900, d("100.5"))]);
        let p = consumption_profile(&s, &ProfileRequest::new("m", 0, 900, 900)).unwrap();
        assert_eq!(p.buckets.len(), 1);
        assert_eq!(p.buckets[0].energy_kwh, d("0.5"));
        assert_eq!(p.buckets[0].avg_power_kw, d("2"));
    }

    #[test]
    fn constant_register_gives_zero_profile() {
        let s = store_with(&[(0, d("5")), (900, d("5")), (1800, d("5"))]);
        let p = consumption_profile(&s, &ProfileRequest::new("m", 0, 1800, 300)).unwrap();
        assert_eq!(p.buckets.len(), 6);
        assert!(p.buckets.iter().all(|b| b.energy_kwh.is_zero()));
    }

    #[test]
    fn offset_grid_is_interpolated() {
        let s = store_with(&[(0, d("10")), (900, d("11")), (1800, d("13"))]);
        let p = consumption_profile(&s, &ProfileRequest::new("m", 450, 1350, 450)).unwrap();
        assert_eq!(p.buckets[0].energy_kwh, d("0.5"));
        assert_eq!(p.buckets[1].energy_kwh, d("1"));
    }

    #[test]
    fn rollover_and_bad_drop() {
        let s = store_with(&[(0, d("999999.5")), (900, d("0.5"))]);
        let p = consumption_profile(&s, &ProfileRequest::new("m", 0, 900, 900)).unwrap();
        assert_eq!(p.total_energy_kwh(), d("1.0"));
        let s = store_with(&[(0, d("100")), (900, d("99")), (1800, d("101"))]);
        match consumption_profile(&s, &ProfileRequest::new("m", 0, 1800, 900)) {
            Err(Error::DataQuality(ts)) => assert_eq!(ts, vec![900]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coverage_and_missing_data() {
        let s = store_with(&[(0, d("1")), (900, d("2"))]);
        assert!(matches!(
            consumption_profile(&s, &ProfileRequest::new("other", 0, 900, 900)),
            Err(Error::NoData { .. })
        ));
        assert!(matches!(
            consumption_profile(&s, &ProfileRequest::new("m", 0, 1800, 900)),
            Err(Error::Coverage { .. })
        ));
        assert!(matches!(
            consumption_profile(&s, &ProfileRequest::new("m", 5000, 6000, 900)),
            Err(Error::NoData { .. })
        ));
    }

    #[test]
    fn demand_ties_go_to_the_earliest() {
        let s = store_with(&[(0, d("0")), (900, d("1")), (1800, d("1")), (2700, d("2"))]);
        let p = consumption_profile(&s, &ProfileRequest::new("m", 0, 2700, 900)).unwrap();
        assert_eq!(
            max_power_demand(&p).unwrap(),
            Demand {
                power_kw: d("4"),
                start: 0
            }
        );
        assert_eq!(threshold_exceedance(&p, d("100")).unwrap(), Decimal::ZERO);
        assert_eq!(threshold_exceedance(&p, d("-1")).unwrap(), Decimal::ONE_HUNDRED);
    }

    fn monotone_series() -> impl Strategy<Value = Vec<(i64, Decimal)>> {
        prop::collection::vec((1i64..2000, 0i64..5_000), 2..60).prop_map(|steps| {
            let mut t = 0;
            let mut v = 0i64;
            steps
                .into_iter()
                .map(|(dt, dv)| {
                    let p = (t, Decimal::new(v, 3));
                    t += dt;
                    v += dv;
                    p
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn profile_telescopes(series in monotone_series(), interval in 60i64..3600) {
            let s = store_with(&series);
            let (from, to) = (series[0].0, series[series.len() - 1].0);
            let p = consumption_profile(&s, &ProfileRequest::new("m", from, to, interval)).unwrap();
            prop_assert_eq!(p.total_energy_kwh(), series[series.len() - 1].1 - series[0].1);
            prop_assert!(p.buckets.iter().all(|b| b.energy_kwh >= Decimal::ZERO));
            let demand = max_power_demand(&p).unwrap();
            let brute = p.buckets.iter().map(|b| b.avg_power_kw).max().unwrap();
            prop_assert_eq!(demand.power_kw, brute);
            let first_max = p.buckets.iter().find(|b| b.avg_power_kw == brute).unwrap();
            prop_assert_eq!(demand.start, first_max.start);
            let mean = p.total_energy_kwh() * Decimal::from(3600) / Decimal::from(to - from);
            prop_assert!(demand.power_kw >= mean - Decimal::new(1, 20));
        }

        #[test]
        fn exceedance_is_monotone(series in monotone_series(), a in 0i64..20_000, b in 0i64..20_000) {
            let s = store_with(&series);
            let (from, to) = (series[0].0, series[series.len() - 1].0);
            let p = consumption_profile(&s, &ProfileRequest::new("m", from, to, 900)).unwrap();
            let (lo, hi) = (Decimal::new(a.min(b), 3), Decimal::new(a.max(b), 3));
            prop_assert!(threshold_exceedance(&p, lo).unwrap() >= threshold_exceedance(&p, hi).unwrap());
            let brute: i64 = p.buckets.iter().filter(|b| b.avg_power_kw > lo).map(|b| b.duration_s).sum();
            prop_assert_eq!(
                threshold_exceedance(&p, lo).unwrap(),
                Decimal::from(brute) * Decimal::ONE_HUNDRED / Decimal::from(to - from)
            );
        }
    }
}
