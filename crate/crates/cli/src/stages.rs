//! Pipeline stages, shared by the individual subcommands and `pipeline`.

use std::path::Path;

use rust_decimal::Decimal;
use serde::Serialize;

use onemeter::beacon::{plan_uplinks, Beacon, BeaconConfig, MeterRecord, MeterSource, UplinkPlan};
use onemeter::netsim::{self, NodeGroup, SimConfig, SimReport, Traffic, TransmissionEvent};
use onemeter::phy::{battery_lifetime, tx_energy, EnergyModel, Lifetime, RadioParams};
use onemeter::platform::{
    consumption_profile, cost_estimate, max_power_demand, threshold_exceedance, ConsumptionProfile, CostEstimate,
    Demand, IngestOutcome, ProfileRequest, ReadingStore, Tariff,
};

use crate::util::{to_csv, CliResult, Failure};

pub struct BeaconRun {
    pub records: Vec<MeterRecord>,
    pub plan: UplinkPlan,
    /// Where planning starts: the end of the readout period.
    pub plan_start: i64,
}

/// Reads the meter every interval over `days` days from `start`, then plans
/// uplinks for everything stored.
pub fn run_beacon(
    config: &BeaconConfig,
    radio: &RadioParams,
    meter: &mut dyn MeterSource,
    start: i64,
    days: u32,
    horizon_days: u32,
) -> CliResult<BeaconRun> {
    let mut beacon = Beacon::new(config.clone(), start)?;
    let end = start + i64::from(days) * 86_400;
    let mut clock = start;
    while clock < end {
        beacon.scheduled_readout(clock, meter)?;
        clock += config.readout_interval_s;
    }
    let plan = plan_uplinks(
        beacon.store(),
        &config.limits,
        radio,
        config.payload_limit,
        end,
        horizon_days,
    )?;
    Ok(BeaconRun {
        records: beacon.store().records(),
        plan,
        plan_start: end,
    })
}

#[derive(Serialize)]
struct RecordRow<'a> {
    timestamp: i64,
    obis: String,
    value: String,
    unit: &'a str,
}

pub fn records_csv(records: &[MeterRecord]) -> CliResult<Vec<u8>> {
    let rows: Vec<RecordRow> = records
        .iter()
        .flat_map(|r| {
            r.readings.iter().map(move |x| RecordRow {
                timestamp: r.timestamp,
                obis: x.obis.to_string(),
                value: x.value.to_string(),
                unit: &x.unit,
            })
        })
        .collect();
    to_csv(&rows)
}

#[derive(Serialize)]
struct UplinkRow {
    send_time: i64,
    payload_hex: String,
    payload_bytes: usize,
    records: usize,
    first_record: i64,
    last_record: i64,
    airtime_ms: f64,
}

pub fn uplinks_csv(plan: &UplinkPlan) -> CliResult<Vec<u8>> {
    let rows: Vec<UplinkRow> = plan
        .uplinks
        .iter()
        .map(|u| UplinkRow {
            send_time: u.send_time,
            payload_hex: u.payload.iter().map(|b| format!("{b:02x}")).collect(),
            payload_bytes: u.payload.len(),
            records: u.records,
            first_record: u.first_record,
            last_record: u.last_record,
            airtime_ms: u.airtime_ms,
        })
        .collect();
    to_csv(&rows)
}

#[derive(Debug, Serialize)]
pub struct EnergySummary {
    pub uplinks: usize,
    pub days_planned: usize,
    pub energy_per_day_uah: f64,
    pub sleep_current_ua: f64,
    pub lifetime_days: Option<f64>,
    pub lifetime_years: Option<f64>,
}

/// Radio energy of the plan averaged over its days, and the battery life
/// that implies.
pub fn energy_summary(
    plan: &UplinkPlan,
    radio: &RadioParams,
    energy: &EnergyModel,
    battery: &onemeter::phy::Battery,
) -> CliResult<EnergySummary> {
    let total: f64 = plan
        .uplinks
        .iter()
        .map(|u| tx_energy(u.payload.len(), radio, energy))
        .sum::<Result<f64, _>>()?;
    let days = plan.days.len().max(1);
    let per_day = total / days as f64;
    let life = battery_lifetime(per_day, battery, Some(energy.sleep_current_ua))?;
    Ok(EnergySummary {
        uplinks: plan.uplinks.len(),
        days_planned: plan.days.len(),
        energy_per_day_uah: per_day,
        sleep_current_ua: energy.sleep_current_ua,
        lifetime_days: life.days(),
        lifetime_years: match life {
            Lifetime::Infinite => None,
            l => l.years(),
        },
    })
}

pub struct NetworkRun {
    pub report: SimReport,
    pub events: Vec<TransmissionEvent>,
    /// Per planned uplink, in plan order: delivered and reception time.
    pub deliveries: Vec<Option<i64>>,
}

/// Simulates the planned uplinks as node 0, alongside any background nodes
/// in `config.nodes`. Simulation time zero is `origin`.
pub fn run_network(
    mut config: SimConfig,
    plan: &UplinkPlan,
    origin: i64,
    meter_distance_m: f64,
    sf: u8,
) -> CliResult<NetworkRun> {
    let times: Vec<f64> = plan.uplinks.iter().map(|u| (u.send_time - origin) as f64).collect();
    let last = times.iter().copied().fold(0.0, f64::max);
    let payload = plan.uplinks.iter().map(|u| u.payload.len()).max().unwrap_or(1);
    // Node 0 carries the meter, every frame sized as its largest uplink.
    let mut nodes = vec![NodeGroup {
        count: 1,
        distance_m: meter_distance_m,
        sf,
        traffic: Traffic::Schedule { times_s: times },
        payload_bytes: payload,
    }];
    nodes.append(&mut config.nodes);
    config.nodes = nodes;
    config.duration_s = config.duration_s.max(last + 60.0);
    let (report, events) = netsim::run_with_trace(&config)?;
    let mine: Vec<&TransmissionEvent> = events.iter().filter(|e| e.node == 0).collect();
    if mine.len() != plan.uplinks.len() {
        return Err(Failure::new(format!(
            "{} uplinks planned but {} simulated",
            plan.uplinks.len(),
            mine.len()
        )));
    }
    let deliveries = mine
        .iter()
        .map(|e| (e.outcome == netsim::Outcome::Delivered).then(|| origin + (e.end_us() as i64 + 999_999) / 1_000_000))
        .collect();
    Ok(NetworkRun {
        report,
        events,
        deliveries,
    })
}

#[derive(Debug, Default, Serialize)]
pub struct IngestSummary {
    pub uplinks_delivered: usize,
    pub uplinks_lost: usize,
    #[serde(flatten)]
    pub readings: IngestOutcome,
}

pub fn ingest(
    store: &mut ReadingStore,
    meter: &str,
    plan: &UplinkPlan,
    deliveries: &[Option<i64>],
) -> CliResult<IngestSummary> {
    let mut summary = IngestSummary::default();
    for (uplink, delivered) in plan.uplinks.iter().zip(deliveries) {
        let Some(received_at) = delivered else {
            summary.uplinks_lost += 1;
            continue;
        };
        let out = store.ingest_uplink(meter, &uplink.payload, *received_at)?;
        summary.uplinks_delivered += 1;
        summary.readings.added += out.added;
        summary.readings.duplicates += out.duplicates;
        summary.readings.quarantined += out.quarantined;
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub meter: String,
    pub from: i64,
    pub to: i64,
    pub interval_s: i64,
    #[serde(with = "rust_decimal::serde::str")]
    pub energy_kwh: Decimal,
    pub max_demand: Demand,
    #[serde(with = "rust_decimal::serde::str")]
    pub threshold_kw: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub threshold_exceeded_pct: Decimal,
    pub cost: CostEstimate,
}

pub struct ReportRequest<'a> {
    pub meter: &'a str,
    pub from: Option<i64>,
    pub to: Option<i64>,
    pub interval_s: i64,
    pub threshold_kw: Decimal,
    pub tariff: &'a Path,
}

/// The three reports plus the cost estimate. Without explicit bounds the
/// range spans the meter's first to last active-import reading.
pub fn build_report(store: &ReadingStore, req: &ReportRequest) -> CliResult<(Report, ConsumptionProfile)> {
    let tariff = Tariff::load(req.tariff)?;
    let readings = store.readings(req.meter, onemeter::obis::ObisCode::ACTIVE_IMPORT);
    let from = match req.from {
        Some(t) => t,
        None => readings
            .first()
            .map(|r| r.timestamp)
            .ok_or_else(|| no_data(req.meter))?,
    };
    let to = match req.to {
        Some(t) => t,
        None => readings.last().map(|r| r.timestamp).ok_or_else(|| no_data(req.meter))?,
    };
    let profile = consumption_profile(store, &ProfileRequest::new(req.meter, from, to, req.interval_s))?;
    let report = Report {
        meter: req.meter.to_string(),
        from,
        to,
        interval_s: req.interval_s,
        energy_kwh: profile.total_energy_kwh(),
        max_demand: max_power_demand(&profile)?,
        threshold_kw: req.threshold_kw,
        threshold_exceeded_pct: threshold_exceedance(&profile, req.threshold_kw)?,
        cost: cost_estimate(&profile, &tariff)?,
    };
    Ok((report, profile))
}

fn no_data(meter: &str) -> Failure {
    Failure::new(format!("no readings for meter {meter}"))
}

#[derive(Serialize)]
struct ProfileRow {
    start: i64,
    duration_s: i64,
    energy_kwh: String,
    avg_power_kw: String,
}

pub fn profile_csv(profile: &ConsumptionProfile) -> CliResult<Vec<u8>> {
    let rows: Vec<ProfileRow> = profile
        .buckets
        .iter()
        .map(|b| ProfileRow {
            start: b.start,
            duration_s: b.duration_s,
            energy_kwh: b.energy_kwh.to_string(),
            avg_power_kw: b.avg_power_kw.to_string(),
        })
        .collect();
    to_csv(&rows)
}

pub fn trace_csv(events: &[TransmissionEvent]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    netsim::write_trace_csv(events, &mut buf)?;
    Ok(buf)
}
