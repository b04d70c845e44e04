//! End-to-end scenario: meter replay, beacon, network, platform, reports.

use std::fs;
use std::path::{Path, PathBuf};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use onemeter::beacon::{BeaconConfig, DailyLimits};
use onemeter::netsim::{NodeGroup, SimConfig};
use onemeter::phy::{Battery, EnergyModel, RadioParams, SensitivityTable};
use onemeter::platform::ReadingStore;
use onemeter::propagation::{fit_model, IndoorDataset, ModelKind, PathLossModel};

use crate::stages::{self, ReportRequest};
use crate::util::{de_time, load_meter_csv, read, sha256_hex, to_json, write, CliResult, Failure};

pub const DEMO_CONFIG: &str = include_str!("../demo/run.toml");
pub const DEMO_METER: &str = include_str!("../demo/meter.csv");
pub const DEMO_TARIFF: &str = include_str!("../demo/tariff.toml");

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    /// First readout; epoch seconds or RFC 3339.
    #[serde(deserialize_with = "de_time")]
    pub start: i64,
    #[serde(default = "one")]
    pub days: u32,
    pub meter: MeterSection,
    #[serde(default)]
    pub beacon: BeaconSection,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub energy: EnergyModel,
    #[serde(default)]
    pub battery: Battery,
    #[serde(default = "DailyLimits::lora")]
    pub limits: DailyLimits,
    #[serde(default)]
    pub network: NetworkSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterSection {
    pub id: String,
    /// CSV with `timestamp,obis,value`, relative to the config file.
    pub readings: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeaconSection {
    pub readout_interval_s: i64,
    pub flash_capacity: usize,
    pub payload_limit: usize,
    pub horizon_days: u32,
    pub clock_skew_s: i64,
}

impl Default for BeaconSection {
    fn default() -> Self {
        let b = BeaconConfig::default();
        BeaconSection {
            readout_interval_s: b.readout_interval_s,
            flash_capacity: b.flash_capacity,
            payload_limit: b.payload_limit,
            horizon_days: 7,
            clock_skew_s: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub sf: u8,
    pub kind: ModelKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    /// Meter to gateway distance.
    pub distance_m: f64,
    pub channels: u32,
    pub duty_cycle: f64,
    pub capture_effect: bool,
    pub shadowing_sigma_db: f64,
    pub sensitivity: SensitivityTable,
    /// Explicit path-loss model; the calibrated outdoor model if absent.
    pub propagation: Option<PathLossModel>,
    /// Fit the model to the bundled stairwell data instead.
    pub fit: Option<FitSection>,
    /// Other devices sharing the gateway.
    pub background: Vec<NodeGroup>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let sim = SimConfig::new(Vec::new(), 1.0);
        NetworkSection {
            distance_m: 150.0,
            channels: sim.channels,
            duty_cycle: sim.duty_cycle,
            capture_effect: sim.capture_effect,
            shadowing_sigma_db: 0.0,
            sensitivity: SensitivityTable::gateway(),
            propagation: None,
            fit: None,
            background: Vec::new(),
        }
    }
}

fn default_interval() -> i64 {
    900
}

fn default_skew() -> i64 {
    ReadingStore::DEFAULT_MAX_CLOCK_SKEW_S
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Tariff TOML, relative to the config file.
    pub tariff: PathBuf,
    #[serde(default = "default_interval")]
    pub interval_s: i64,
    #[serde(with = "rust_decimal::serde::str")]
    pub threshold_kw: Decimal,
    #[serde(default, deserialize_with = "crate::util::de_opt_time")]
    pub from: Option<i64>,
    #[serde(default, deserialize_with = "crate::util::de_opt_time")]
    pub to: Option<i64>,
    #[serde(default = "default_skew")]
    pub max_clock_skew_s: i64,
}

pub struct LoadedConfig {
    pub config: RunConfig,
    /// Hash of the parsed config with the effective seed, before paths are
    /// resolved, so it does not depend on where the files live.
    pub hash: String,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

pub fn load_config(path: &Path, seed: Option<u64>) -> CliResult<LoadedConfig> {
    let text = String::from_utf8(read(path)?).map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
    let mut config: RunConfig = toml::from_str(&text).map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if config.network.propagation.is_some() && config.network.fit.is_some() {
        return Err(Failure::new(
            "network.propagation and network.fit are mutually exclusive",
        ));
    }
    let hash = sha256_hex(&serde_json::to_vec(&config)?);
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = LoadedConfig { config, hash, base };
    for p in [&loaded.config.meter.readings, &loaded.config.report.tariff] {
        let full = loaded.resolve(p);
        if !full.is_file() {
            return Err(Failure::new(format!(
                "referenced file {} does not exist",
                full.display()
            )));
        }
    }
    Ok(loaded)
}

/// Writes the bundled demo inputs to `dir` and returns the config path.
pub fn write_demo_inputs(dir: &Path) -> CliResult<PathBuf> {
    write(&dir.join("run.toml"), DEMO_CONFIG.as_bytes())?;
    write(&dir.join("meter.csv"), DEMO_METER.as_bytes())?;
    write(&dir.join("tariff.toml"), DEMO_TARIFF.as_bytes())?;
    Ok(dir.join("run.toml"))
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    scenario: &'a str,
    seed: u64,
    config_sha256: &'a str,
    files: Vec<ManifestEntry>,
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> CliResult<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).map_err(|e| Failure::new(e.to_string()))?;
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if rel == "manifest.json" {
                continue;
            }
            let bytes = read(&p)?;
            out.push(ManifestEntry {
                path: rel,
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PipelineSummary {
    pub scenario: String,
    pub seed: u64,
    pub out_dir: String,
    pub records: usize,
    pub uplinks: usize,
    pub uplinks_delivered: usize,
    pub readings_ingested: usize,
    pub manifest_sha256: String,
}

fn propagation_model(net: &NetworkSection) -> CliResult<PathLossModel> {
    if let Some(fit) = &net.fit {
        let ds = IndoorDataset::bundled()?;
        return Ok(fit_model(&ds.rssi_series(fit.sf), fit.kind)?);
    }
    Ok(net
        .propagation
        .clone()
        .unwrap_or_else(onemeter::netsim::default_propagation))
}

pub fn run_pipeline(loaded: &LoadedConfig, out: &Path) -> CliResult<PipelineSummary> {
    let cfg = &loaded.config;
    fs::create_dir_all(out).map_err(|e| Failure::new(format!("{}: {e}", out.display())))?;

    // Meter replay.
    let (mut source, _) = load_meter_csv(&loaded.resolve(&cfg.meter.readings)).map_err(Failure::at("meter-replay"))?;

    // Beacon readout and uplink planning.
    let beacon_cfg = BeaconConfig {
        readout_interval_s: cfg.beacon.readout_interval_s,
        flash_capacity: cfg.beacon.flash_capacity,
        payload_limit: cfg.beacon.payload_limit,
        battery: cfg.battery,
        limits: cfg.limits.clone(),
        clock_skew_s: cfg.beacon.clock_skew_s,
    };
    let beacon = (|| -> CliResult<_> {
        let run = stages::run_beacon(
            &beacon_cfg,
            &cfg.radio,
            &mut source,
            cfg.start,
            cfg.days,
            cfg.beacon.horizon_days,
        )?;
        write(&out.join("beacon_records.csv"), &stages::records_csv(&run.records)?)?;
        write(&out.join("uplink_plan.json"), &to_json(&run.plan)?)?;
        write(&out.join("uplinks.csv"), &stages::uplinks_csv(&run.plan)?)?;
        let energy = stages::energy_summary(&run.plan, &cfg.radio, &cfg.energy, &cfg.battery)?;
        write(&out.join("energy_summary.json"), &to_json(&energy)?)?;
        Ok(run)
    })()
    .map_err(Failure::at("beacon"))?;

    // Radio network.
    let network = (|| -> CliResult<_> {
        let mut sim = SimConfig::new(cfg.network.background.clone(), 1.0);
        sim.channels = cfg.network.channels;
        sim.duty_cycle = cfg.network.duty_cycle;
        sim.capture_effect = cfg.network.capture_effect;
        sim.seed = cfg.seed;
        sim.propagation = propagation_model(&cfg.network)?;
        sim.shadowing_sigma_db = cfg.network.shadowing_sigma_db;
        sim.sensitivity = cfg.network.sensitivity.clone();
        sim.radio = cfg.radio.clone();
        sim.energy = cfg.energy.clone();
        let run = stages::run_network(
            sim,
            &beacon.plan,
            beacon.plan_start,
            cfg.network.distance_m,
            cfg.radio.sf,
        )?;
        write(&out.join("sim_report.json"), &to_json(&run.report)?)?;
        write(&out.join("sim_trace.csv"), &stages::trace_csv(&run.events)?)?;
        Ok(run)
    })()
    .map_err(Failure::at("netsim"))?;

    // Platform ingestion.
    let store_dir = out.join("store");
    let (store, ingested) = (|| -> CliResult<_> {
        let mut store = ReadingStore::open(&store_dir)?.with_max_clock_skew(cfg.report.max_clock_skew_s);
        let summary = stages::ingest(&mut store, &cfg.meter.id, &beacon.plan, &network.deliveries)?;
        write(&out.join("ingest.json"), &to_json(&summary)?)?;
        Ok((store, summary))
    })()
    .map_err(Failure::at("ingest"))?;

    // Reports.
    (|| -> CliResult<_> {
        let tariff = loaded.resolve(&cfg.report.tariff);
        let (report, profile) = stages::build_report(
            &store,
            &ReportRequest {
                meter: &cfg.meter.id,
                from: cfg.report.from,
                to: cfg.report.to,
                interval_s: cfg.report.interval_s,
                threshold_kw: cfg.report.threshold_kw,
                tariff: &tariff,
            },
        )?;
        write(&out.join("report.json"), &to_json(&report)?)?;
        write(&out.join("profile.csv"), &stages::profile_csv(&profile)?)
    })()
    .map_err(Failure::at("report"))?;

    let manifest_bytes = (|| -> CliResult<_> {
        let mut files = Vec::new();
        collect_files(out, out, &mut files)?;
        let manifest = Manifest {
            scenario: &cfg.scenario,
            seed: cfg.seed,
            config_sha256: &loaded.hash,
            files,
        };
        let bytes = to_json(&manifest)?;
        write(&out.join("manifest.json"), &bytes)?;
        Ok(bytes)
    })()
    .map_err(Failure::at("manifest"))?;

    Ok(PipelineSummary {
        scenario: cfg.scenario.clone(),
        seed: cfg.seed,
        out_dir: out.display().to_string(),
        records: beacon.records.len(),
        uplinks: beacon.plan.uplinks.len(),
        uplinks_delivered: ingested.uplinks_delivered,
        readings_ingested: ingested.readings.added,
        manifest_sha256: sha256_hex(&manifest_bytes),
    })
}
