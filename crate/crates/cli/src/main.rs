//! `onemeter`: command-line front end for the metering, radio and platform
//! models.

mod pipeline;
mod stages;
mod util;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rust_decimal::Decimal;
use serde::Serialize;

use onemeter::beacon::{BeaconConfig, DailyLimits};
use onemeter::netsim::{self, SimConfig};
use onemeter::obis::parse_readout;
use onemeter::phy::{
    self, battery_lifetime, compare_protocols, daily_budget, eirp, max_coupling_loss, time_on_air, tx_energy, Battery,
    CostModel, EnergyModel, Ldro, LinkBudgetParams, PerByteCost, RadioParams, SensitivityTable, TxCurrent,
};
use onemeter::platform::ReadingStore;
use onemeter::propagation::{
    calibrate_outdoor, fit_model, max_floors_band, max_range, predict_rssi, reachable, BuildingGeometry, IndoorDataset,
    ModelKind, OUTDOOR_REFERENCE_LOSS_DB,
};

use util::{parse_time, read, to_csv, to_json, write, CliResult, Failure};

#[derive(Parser)]
#[command(name = "onemeter", version, about = "Smart-meter LoRa beacon models and tools")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Seed for every random draw; overrides seeds in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an IEC 62056-21 readout (file or "-" for stdin).
    Parse(ParseArgs),
    /// Replay meter readings through the beacon and plan uplinks.
    Beacon(BeaconArgs),
    /// LoRa time on air of one frame.
    Toa(ToaArgs),
    /// Charge per uplink and per day.
    Energy(EnergyArgs),
    /// Battery lifetime for a daily data volume.
    Battery(BatteryArgs),
    /// EIRP, sensitivity and maximum coupling loss.
    Linkbudget(LinkArgs),
    /// Messages per day each LPWAN protocol needs.
    CompareProtocols(CompareArgs),
    /// Time on air and energy over payload sizes and spreading factors.
    Sweep(SweepArgs),
    /// Fit a path-loss model to stairwell RSSI data.
    Fit(FitArgs),
    /// Outdoor calibration, range per spreading factor and reachability.
    Coverage(CoverageArgs),
    /// Run the network simulator from a config file.
    Simulate(SimulateArgs),
    /// Consumption profile, demand, threshold and cost reports.
    Report(ReportArgs),
    /// Run the whole chain from meter readings to reports.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum LdroArg {
    Auto,
    On,
    Off,
}

/// LoRa modem settings shared by several subcommands.
#[derive(Args)]
struct RadioArgs {
    /// Spreading factor, 7 to 12.
    #[arg(long, default_value_t = 7)]
    sf: u8,
    #[arg(long, default_value_t = 125_000)]
    bandwidth_hz: u32,
    /// Coding rate index, 1 (4/5) to 4 (4/8).
    #[arg(long, default_value_t = 1)]
    cr: u8,
    #[arg(long, default_value_t = 8)]
    preamble: u16,
    #[arg(long)]
    implicit_header: bool,
    #[arg(long)]
    no_crc: bool,
    #[arg(long, value_enum, default_value = "auto")]
    ldro: LdroArg,
    #[arg(long, default_value_t = 13.0)]
    tx_power_dbm: f64,
}

impl RadioArgs {
    fn params(&self) -> CliResult<RadioParams> {
        let p = RadioParams {
            sf: self.sf,
            bandwidth_hz: self.bandwidth_hz,
            cr_idx: self.cr,
            preamble_symbols: self.preamble,
            explicit_header: !self.implicit_header,
            crc_on: !self.no_crc,
            ldro: match self.ldro {
                LdroArg::Auto => Ldro::Auto,
                LdroArg::On => Ldro::On,
                LdroArg::Off => Ldro::Off,
            },
            tx_power_dbm: self.tx_power_dbm,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct ParseArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct BeaconArgs {
    /// Meter CSV: timestamp,obis,value.
    #[arg(long)]
    readings: PathBuf,
    /// First readout, epoch seconds or RFC 3339.
    #[arg(long)]
    start: String,
    #[arg(long, default_value_t = 1)]
    days: u32,
    #[arg(long, default_value_t = 900)]
    interval_s: i64,
    #[arg(long, default_value_t = 50)]
    payload_limit: usize,
    #[arg(long, default_value_t = 10)]
    max_messages_per_day: u32,
    #[arg(long, default_value_t = 7)]
    horizon_days: u32,
    #[command(flatten)]
    radio: RadioArgs,
    /// Write beacon_records.csv, uplinks.csv and uplink_plan.json here
    /// instead of printing the plan.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ToaArgs {
    #[arg(long)]
    payload: usize,
    #[command(flatten)]
    radio: RadioArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EnergyArgs {
    #[arg(long, default_value_t = 50)]
    payload: usize,
    #[command(flatten)]
    radio: RadioArgs,
    #[arg(long, default_value_t = EnergyModel::DEFAULT_TX_CURRENT_MA)]
    current_ma: f64,
    /// Measured active time per uplink; the excess over airtime is charged
    /// as fixed overhead.
    #[arg(long)]
    active_ms: Option<f64>,
    #[arg(long)]
    daily_bytes: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    /// Measured per-byte constants at SF7 and SF11, analytic otherwise.
    Auto,
    PerByte,
    Analytic,
}

#[derive(Args)]
struct BatteryArgs {
    #[arg(long)]
    daily_bytes: u64,
    #[arg(long, default_value_t = 1000.0)]
    capacity_mah: f64,
    #[arg(long, default_value_t = 50)]
    payload: usize,
    #[arg(long, value_enum, default_value = "auto")]
    model: CostArg,
    /// Add a constant sleep draw.
    #[arg(long)]
    sleep_ua: Option<f64>,
    #[command(flatten)]
    radio: RadioArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Gateway,
    Transceiver,
}

impl TableArg {
    fn table(self) -> SensitivityTable {
        match self {
            TableArg::Gateway => SensitivityTable::gateway(),
            TableArg::Transceiver => SensitivityTable::transceiver(),
        }
    }
}

#[derive(Args)]
struct LinkArgs {
    #[arg(long, default_value_t = 15.0)]
    tx_power: f64,
    #[arg(long, default_value_t = 2.15)]
    gain: f64,
    #[arg(long, default_value_t = 1.0)]
    feed_loss: f64,
    #[arg(long, value_enum, default_value = "gateway")]
    table: TableArg,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 3000)]
    daily_bytes: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 50)]
    max_payload: usize,
    #[arg(long, value_delimiter = ',', default_value = "7,8,9,10,11,12")]
    sfs: Vec<u8>,
    #[arg(long, default_value_t = EnergyModel::DEFAULT_TX_CURRENT_MA)]
    current_ma: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Linear,
    LogDistance,
}

#[derive(Args)]
struct FitArgs {
    /// CSV distance_m,floor,sf,rssi_dbm,snr_db; the bundled campaign if absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    sf: u8,
    #[arg(long, value_enum, default_value = "linear")]
    kind: KindArg,
    /// RSSI on the gateway floor; the measurement at 0 m if absent.
    #[arg(long)]
    start_rssi: Option<f64>,
    #[arg(long, default_value_t = 6)]
    floors: u32,
    #[arg(long, default_value_t = 20.0)]
    height_m: f64,
    #[arg(long, default_value_t = 100)]
    floor_cap: u32,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long, default_value_t = 360.0)]
    range_m: f64,
    #[arg(long, default_value_t = OUTDOOR_REFERENCE_LOSS_DB)]
    pl_ref_db: f64,
    #[arg(long, default_value_t = 15.0)]
    tx_power: f64,
    #[arg(long, default_value_t = 2.15)]
    gain: f64,
    #[arg(long, default_value_t = 1.0)]
    feed_loss: f64,
    /// Sensitivity the observed range was reached at.
    #[arg(long, default_value_t = -126.0, allow_negative_numbers = true)]
    sensitivity: f64,
    /// Distances to check, comma separated.
    #[arg(long, value_delimiter = ',')]
    distance: Vec<f64>,
    #[arg(long, value_enum, default_value = "gateway")]
    table: TableArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Write sim_report.json and sim_trace.csv here instead of printing.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    meter: String,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long, default_value_t = 900)]
    interval: i64,
    #[arg(long, default_value = "1.0")]
    threshold_kw: Decimal,
    #[arg(long)]
    tariff: PathBuf,
    /// Reading store directory.
    #[arg(long, env = "ONEMETER_DATA_DIR", default_value = "onemeter-data")]
    store: PathBuf,
    /// Write report.json and profile.csv here as well.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Run config; use --demo for the bundled scenario.
    #[arg(long, required_unless_present = "demo", conflicts_with = "demo")]
    config: Option<PathBuf>,
    #[arg(long)]
    demo: bool,
    #[arg(long)]
    out_dir: PathBuf,
    /// Replace a reading store left by an earlier run.
    #[arg(long)]
    force: bool,
}

fn print(bytes: &[u8]) -> CliResult<()> {
    std::io::stdout().write_all(bytes)?;
    Ok(())
}

fn cmd_parse(a: &ParseArgs) -> CliResult<()> {
    let bytes = if a.input == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        buf
    } else {
        read(&a.input)?
    };
    let msg = parse_readout(&bytes)?;
    match a.format {
        Format::Json => print(&to_json(&msg)?),
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                obis: String,
                value: String,
                unit: String,
            }
            let rows: Vec<Row> = msg
                .lines
                .iter()
                .map(|l| Row {
                    obis: l.obis.to_string(),
                    value: l.value.to_string(),
                    unit: l.unit.clone().unwrap_or_default(),
                })
                .collect();
            print(&to_csv(&rows)?)
        }
    }
}

fn cmd_beacon(a: &BeaconArgs) -> CliResult<()> {
    let (mut source, _) = util::load_meter_csv(&a.readings)?;
    let config = BeaconConfig {
        readout_interval_s: a.interval_s,
        payload_limit: a.payload_limit,
        limits: DailyLimits {
            max_messages_per_day: Some(a.max_messages_per_day),
            ..DailyLimits::unlimited()
        },
        ..BeaconConfig::default()
    };
    let radio = a.radio.params()?;
    let run = stages::run_beacon(
        &config,
        &radio,
        &mut source,
        parse_time(&a.start)?,
        a.days,
        a.horizon_days,
    )?;
    match &a.out_dir {
        Some(dir) => {
            write(&dir.join("beacon_records.csv"), &stages::records_csv(&run.records)?)?;
            write(&dir.join("uplinks.csv"), &stages::uplinks_csv(&run.plan)?)?;
            write(&dir.join("uplink_plan.json"), &to_json(&run.plan)?)
        }
        None => print(&to_json(&run.plan)?),
    }
}

fn cmd_toa(a: &ToaArgs) -> CliResult<()> {
    let params = a.radio.params()?;
    let ms = time_on_air(a.payload, &params)?;
    if a.json {
        #[derive(Serialize)]
        struct Out {
            payload_bytes: usize,
            sf: u8,
            symbol_ms: f64,
            toa_ms: f64,
        }
        print(&to_json(&Out {
            payload_bytes: a.payload,
            sf: params.sf,
            symbol_ms: params.symbol_ms(),
            toa_ms: ms,
        })?)
    } else {
        println!("{ms:.3} ms");
        Ok(())
    }
}

fn energy_model(current_ma: f64) -> EnergyModel {
    EnergyModel {
        tx_current: TxCurrent::Constant(current_ma),
        ..EnergyModel::default()
    }
}

fn cmd_energy(a: &EnergyArgs) -> CliResult<()> {
    let params = a.radio.params()?;
    let mut model = energy_model(a.current_ma);
    if let Some(active) = a.active_ms {
        model = model.with_active_time(active, a.payload, &params)?;
    }
    let uah = tx_energy(a.payload, &params, &model)?;
    let daily = a
        .daily_bytes
        .map(|b| {
            daily_budget(
                b,
                a.payload,
                &CostModel::Analytic {
                    params: params.clone(),
                    energy: model.clone(),
                },
            )
        })
        .transpose()?;
    #[derive(Serialize)]
    struct Out {
        payload_bytes: usize,
        sf: u8,
        toa_ms: f64,
        energy_uah: f64,
        energy_nah_per_byte: f64,
        overhead_uah: f64,
        daily: Option<phy::DailyBudget>,
    }
    print(&to_json(&Out {
        payload_bytes: a.payload,
        sf: params.sf,
        toa_ms: time_on_air(a.payload, &params)?,
        energy_uah: uah,
        energy_nah_per_byte: uah * 1000.0 / a.payload.max(1) as f64,
        overhead_uah: model.per_uplink_overhead_uah,
        daily,
    })?)
}

fn cmd_battery(a: &BatteryArgs) -> CliResult<()> {
    let params = a.radio.params()?;
    let measured = match params.sf {
        7 => Some(PerByteCost::SF7_MEASURED),
        11 => Some(PerByteCost::SF11_MEASURED),
        _ => None,
    };
    let cost = match (a.model, measured) {
        (CostArg::Auto | CostArg::PerByte, Some(c)) => CostModel::PerByte(c),
        (CostArg::PerByte, None) => {
            return Err(Failure::new(format!("no measured per-byte cost for SF{}", params.sf)));
        }
        _ => CostModel::Analytic {
            params: params.clone(),
            energy: EnergyModel::default(),
        },
    };
    let budget = daily_budget(a.daily_bytes, a.payload, &cost)?;
    let battery = Battery {
        capacity_mah: a.capacity_mah,
    };
    let life = battery_lifetime(budget.energy_uah, &battery, a.sleep_ua)?;
    if a.json {
        #[derive(Serialize)]
        struct Out {
            daily_energy_uah: f64,
            daily_airtime_s: f64,
            messages_per_day: u64,
            lifetime_days: Option<f64>,
            lifetime_years: Option<f64>,
        }
        return print(&to_json(&Out {
            daily_energy_uah: budget.energy_uah,
            daily_airtime_s: budget.airtime_s,
            messages_per_day: budget.messages,
            lifetime_days: life.days(),
            lifetime_years: life.years(),
        })?);
    }
    match (life.days(), life.years()) {
        (Some(d), Some(y)) => println!("{d:.1} days ({y:.3} years) at {:.3} uAh/day", budget.energy_uah),
        _ => println!("unlimited (no draw)"),
    }
    Ok(())
}

fn cmd_linkbudget(a: &LinkArgs) -> CliResult<()> {
    let lb = LinkBudgetParams {
        tx_power_dbm: a.tx_power,
        antenna_gain_dbi: a.gain,
        feed_loss_db: a.feed_loss,
        rx_sensitivity: a.table.table(),
        ..LinkBudgetParams::default()
    };
    let e = eirp(&lb);
    #[derive(Serialize)]
    struct Row {
        sf: u8,
        eirp_dbm: f64,
        sensitivity_dbm: f64,
        max_coupling_loss_db: f64,
    }
    let rows: Vec<Row> = (7..=12)
        .map(|sf| {
            let s = lb.rx_sensitivity.get(sf).unwrap_or(f64::NAN);
            Row {
                sf,
                eirp_dbm: e,
                sensitivity_dbm: s,
                max_coupling_loss_db: max_coupling_loss(e, s),
            }
        })
        .collect();
    match a.format {
        Format::Json => print(&to_json(&rows)?),
        Format::Csv => print(&to_csv(&rows)?),
    }
}

fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    let rows = compare_protocols(a.daily_bytes);
    match a.format {
        Format::Json => print(&to_json(&rows)?),
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                protocol: &'static str,
                frame_size_bytes: u32,
                messages_needed: u64,
                daily_limit_messages: Option<u32>,
                daily_limit_kb: Option<f64>,
                exceeds_message_limit: bool,
                exceeds_volume_limit: bool,
            }
            let rows: Vec<Row> = rows
                .iter()
                .map(|r| Row {
                    protocol: r.name,
                    frame_size_bytes: r.frame_size_bytes,
                    messages_needed: r.messages_needed,
                    daily_limit_messages: r.daily_limit_messages,
                    daily_limit_kb: r.daily_limit_kb,
                    exceeds_message_limit: r.exceeds_message_limit,
                    exceeds_volume_limit: r.exceeds_volume_limit,
                })
                .collect();
            print(&to_csv(&rows)?)
        }
    }
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    #[derive(Serialize)]
    struct Row {
        payload_bytes: usize,
        sf: u8,
        toa_ms: f64,
        energy_uah: f64,
        energy_nah_per_byte: f64,
    }
    let model = energy_model(a.current_ma);
    let mut rows = Vec::new();
    for &sf in &a.sfs {
        let params = RadioParams::with_sf(sf);
        for n in 1..=a.max_payload {
            let e = tx_energy(n, &params, &model)?;
            rows.push(Row {
                payload_bytes: n,
                sf,
                toa_ms: time_on_air(n, &params)?,
                energy_uah: e,
                energy_nah_per_byte: e * 1000.0 / n as f64,
            });
        }
    }
    print(&to_csv(&rows)?)
}

fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    let ds = match &a.data {
        Some(p) => IndoorDataset::load(p)?,
        None => IndoorDataset::bundled()?,
    };
    let series = ds.rssi_series(a.sf);
    let kind = match a.kind {
        KindArg::Linear => ModelKind::Linear,
        KindArg::LogDistance => ModelKind::LogDistance,
    };
    let model = fit_model(&series, kind)?;
    let start = match a.start_rssi {
        Some(r) => r,
        None => series
            .iter()
            .find(|p| p.0 == 0.0)
            .map(|p| p.1)
            .unwrap_or(model.intercept_dbm),
    };
    let geometry = BuildingGeometry::uniform(a.floors, a.height_m);
    let (pessimistic, optimistic) =
        max_floors_band(&model, &geometry, start, phy::GATEWAY_SENSITIVITY_BAND, a.floor_cap)?;
    #[derive(Serialize)]
    struct Out {
        sf: u8,
        model: onemeter::propagation::PathLossModel,
        start_rssi_dbm: f64,
        rssi_at_20m_dbm: Option<f64>,
        floors_at_minus_126_dbm: onemeter::propagation::FloorEstimate,
        floors_at_minus_140_dbm: onemeter::propagation::FloorEstimate,
    }
    print(&to_json(&Out {
        sf: a.sf,
        start_rssi_dbm: start,
        rssi_at_20m_dbm: predict_rssi(&model, 20.0).ok(),
        model,
        floors_at_minus_126_dbm: pessimistic,
        floors_at_minus_140_dbm: optimistic,
    })?)
}

fn cmd_coverage(a: &CoverageArgs) -> CliResult<()> {
    let lb = LinkBudgetParams {
        tx_power_dbm: a.tx_power,
        antenna_gain_dbi: a.gain,
        feed_loss_db: a.feed_loss,
        ..LinkBudgetParams::default()
    };
    let e = eirp(&lb);
    let model = calibrate_outdoor(e, a.sensitivity, a.range_m, a.pl_ref_db)?;
    let table = a.table.table();
    #[derive(Serialize)]
    struct Range {
        sf: u8,
        sensitivity_dbm: f64,
        max_range_m: Option<f64>,
    }
    #[derive(Serialize)]
    struct Point {
        distance_m: f64,
        rssi_dbm: f64,
        reachable_sfs: Vec<u8>,
    }
    #[derive(Serialize)]
    struct Out {
        eirp_dbm: f64,
        model: onemeter::propagation::PathLossModel,
        ranges: Vec<Range>,
        points: Vec<Point>,
    }
    let ranges = (7..=12)
        .map(|sf| {
            let s = table.get(sf).unwrap_or(f64::NAN);
            Range {
                sf,
                sensitivity_dbm: s,
                max_range_m: max_range(&model, s),
            }
        })
        .collect();
    let mut points = Vec::new();
    for &d in &a.distance {
        let rssi = predict_rssi(&model, d)?;
        let mut sfs = Vec::new();
        for sf in 7..=12 {
            if reachable(rssi, sf, &table)? {
                sfs.push(sf);
            }
        }
        points.push(Point {
            distance_m: d,
            rssi_dbm: rssi,
            reachable_sfs: sfs,
        });
    }
    print(&to_json(&Out {
        eirp_dbm: e,
        model,
        ranges,
        points,
    })?)
}

fn cmd_simulate(a: &SimulateArgs, seed: Option<u64>) -> CliResult<()> {
    let text = String::from_utf8(read(&a.config)?).map_err(|e| Failure::new(e.to_string()))?;
    let mut config: SimConfig =
        toml::from_str(&text).map_err(|e| Failure::new(format!("{}: {e}", a.config.display())))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let (report, events) = netsim::run_with_trace(&config)?;
    match &a.out_dir {
        Some(dir) => {
            write(&dir.join("sim_report.json"), &to_json(&report)?)?;
            write(&dir.join("sim_trace.csv"), &stages::trace_csv(&events)?)
        }
        None => print(&to_json(&report)?),
    }
}

fn cmd_report(a: &ReportArgs) -> CliResult<()> {
    let store = ReadingStore::open(&a.store)?;
    let from = a.from.as_deref().map(parse_time).transpose()?;
    let to = a.to.as_deref().map(parse_time).transpose()?;
    let (report, profile) = stages::build_report(
        &store,
        &stages::ReportRequest {
            meter: &a.meter,
            from,
            to,
            interval_s: a.interval,
            threshold_kw: a.threshold_kw,
            tariff: &a.tariff,
        },
    )?;
    let json = to_json(&report)?;
    if let Some(dir) = &a.out_dir {
        write(&dir.join("report.json"), &json)?;
        write(&dir.join("profile.csv"), &stages::profile_csv(&profile)?)?;
    }
    print(&json)
}

fn cmd_pipeline(a: &PipelineArgs, seed: Option<u64>) -> CliResult<()> {
    let store = a.out_dir.join("store");
    if store.exists() {
        if !a.force {
            return Err(Failure {
                stage: Some("config"),
                message: format!(
                    "{} already holds a reading store; pass --force to replace it",
                    a.out_dir.display()
                ),
            });
        }
        std::fs::remove_dir_all(&store)?;
    }
    let config_path = match (&a.config, a.demo) {
        (Some(p), _) => p.clone(),
        (None, _) => pipeline::write_demo_inputs(&a.out_dir.join("inputs"))?,
    };
    let loaded = pipeline::load_config(&config_path, seed).map_err(Failure::at("config"))?;
    let summary = pipeline::run_pipeline(&loaded, &a.out_dir)?;
    print(&to_json(&summary)?)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Beacon(a) => cmd_beacon(a),
        Command::Toa(a) => cmd_toa(a),
        Command::Energy(a) => cmd_energy(a),
        Command::Battery(a) => cmd_battery(a),
        Command::Linkbudget(a) => cmd_linkbudget(a),
        Command::CompareProtocols(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Coverage(a) => cmd_coverage(a),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Report(a) => cmd_report(a),
        Command::Pipeline(a) => cmd_pipeline(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            #[derive(Serialize)]
            struct ErrorOut<'a> {
                #[serde(skip_serializing_if = "Option::is_none")]
                stage: Option<&'a str>,
                error: &'a str,
            }
            let out = ErrorOut {
                stage: f.stage,
                error: &f.message,
            };
            let line = serde_json::to_string(&out).unwrap_or_else(|_| format!("{{\"error\":{:?}}}", f.message));
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
