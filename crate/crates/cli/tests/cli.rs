use std::path::Path;
use std::process::{Command, Output};

fn onemeter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onemeter"))
        .args(args)
        .env_remove("ONEMETER_DATA_DIR")
        .output()
        .expect("spawn onemeter")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = onemeter(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(onemeter(&["toa", "--bogus"]).status.code(), Some(2));
}

#[test]
fn toa_fifty_bytes_sf7() {
    assert_eq!(
        stdout(&onemeter(&["toa", "--payload", "50", "--sf", "7"])),
        "97.536 ms\n"
    );
    let v = json(&onemeter(&["toa", "--payload", "50", "--sf", "12", "--json"]));
    assert_eq!(v["sf"], 12);
}

#[test]
fn invalid_sf_is_reported() {
    let v = error_line(&onemeter(&["toa", "--payload", "50", "--sf", "13"]));
    assert!(v["error"].as_str().unwrap().contains("13"));
}

#[test]
fn battery_lifetimes_for_three_kilobytes() {
    let sf7 = stdout(&onemeter(&["battery", "--daily-bytes", "3000", "--sf", "7"]));
    assert!(sf7.starts_with("17543.9 days (48.065 years)"), "{sf7}");
    let sf11 = json(&onemeter(&["battery", "--daily-bytes", "3000", "--sf", "11", "--json"]));
    assert!((sf11["lifetime_days"].as_f64().unwrap() - 1388.9).abs() < 0.05);
}

#[test]
fn linkbudget_eirp() {
    let v = json(&onemeter(&["linkbudget"]));
    assert!((v[0]["eirp_dbm"].as_f64().unwrap() - 16.15).abs() < 1e-9);
    assert_eq!(v[5]["sf"], 12);
}

#[test]
fn compare_protocols_flags_lora_message_cap() {
    let v = json(&onemeter(&["compare-protocols", "--daily-bytes", "3000"]));
    let lora = v.as_array().unwrap().iter().find(|r| r["name"] == "LoRa").unwrap();
    assert_eq!(lora["exceeds_message_limit"], true);
}

#[test]
fn sweep_header_and_row_count() {
    let out = stdout(&onemeter(&["sweep", "--max-payload", "5", "--sfs", "7,9"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "payload_bytes,sf,toa_ms,energy_uah,energy_nah_per_byte");
    assert_eq!(lines.len(), 11);
}

#[test]
fn fit_bundled_sf7_floor_band() {
    let v = json(&onemeter(&["fit", "--sf", "7"]));
    assert!((v["model"]["slope"].as_f64().unwrap() + 2.5051202707683196).abs() < 1e-9);
    assert_eq!(v["floors_at_minus_126_dbm"]["limit"]["floors"], 7);
    assert_eq!(v["floors_at_minus_140_dbm"]["limit"]["floors"], 9);
}

#[test]
fn coverage_reaches_calibration_range() {
    let v = json(&onemeter(&["coverage", "--distance", "360,1000"]));
    assert!((v["ranges"][0]["max_range_m"].as_f64().unwrap() - 360.0).abs() < 1e-6);
    assert_eq!(v["points"][0]["reachable_sfs"].as_array().unwrap().len(), 6);
    assert!(v["points"][1]["reachable_sfs"].as_array().unwrap().is_empty());
}

fn readout(lines: &[&str]) -> Vec<u8> {
    let mut span = Vec::new();
    for l in lines {
        span.extend_from_slice(l.as_bytes());
        span.extend_from_slice(b"\r\n");
    }
    span.extend_from_slice(b"!\r\n\x03");
    let bcc = span.iter().fold(0u8, |a, b| a ^ b);
    let mut frame = b"/ISK5MT174-0001\r\n\x02".to_vec();
    frame.extend(span);
    frame.push(bcc);
    frame
}

#[test]
fn parse_readout_file_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("readout.bin");
    std::fs::write(&path, readout(&["1.8.0(012345.678*kWh)", "2.8.0(000010.500*kWh)"])).unwrap();
    let out = stdout(&onemeter(&["parse", path.to_str().unwrap(), "--format", "csv"]));
    assert_eq!(out, "obis,value,unit\n1.8.0,12345.678,kWh\n2.8.0,10.500,kWh\n");
}

#[test]
fn parse_rejects_corrupted_bcc() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("readout.bin");
    let mut frame = readout(&["1.8.0(012345.678*kWh)"]);
    *frame.last_mut().unwrap() ^= 0x01;
    std::fs::write(&path, frame).unwrap();
    let v = error_line(&onemeter(&["parse", path.to_str().unwrap()]));
    assert!(v["error"].as_str().unwrap().contains("block check mismatch"));
}

fn demo(out: &Path) -> serde_json::Value {
    json(&onemeter(&["pipeline", "--demo", "--out-dir", out.to_str().unwrap()]))
}

#[test]
fn demo_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let summary = demo(dir.path());
    assert_eq!(summary["records"], 96);
    assert_eq!(summary["readings_ingested"], 96);
    assert_eq!(summary["uplinks"], summary["uplinks_delivered"]);
    for f in [
        "beacon_records.csv",
        "uplinks.csv",
        "uplink_plan.json",
        "energy_summary.json",
        "sim_report.json",
        "sim_trace.csv",
        "ingest.json",
        "report.json",
        "profile.csv",
        "manifest.json",
        "store/index.json",
        "store/meters/meter-001.ndjson",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    // Last minus first register of the demo export.
    assert_eq!(report["energy_kwh"], "23.669");
    assert_eq!(report["cost"]["currency"], "PLN");

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().all(|f| f["path"] != "manifest.json"));
    let paths: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    let mut sorted = paths.clone();
    sorted.sort();
    assert_eq!(paths, sorted);
}

#[test]
fn demo_pipeline_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (sa, sb) = (demo(a.path()), demo(b.path()));
    assert_eq!(sa["manifest_sha256"], sb["manifest_sha256"]);
    assert_eq!(
        std::fs::read(a.path().join("manifest.json")).unwrap(),
        std::fs::read(b.path().join("manifest.json")).unwrap()
    );
}

#[test]
fn pipeline_refuses_existing_store_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    demo(dir.path());
    let v = error_line(&onemeter(&["pipeline", "--demo", "--out-dir", out]));
    assert_eq!(v["stage"], "config");
    let again = json(&onemeter(&["pipeline", "--demo", "--out-dir", out, "--force"]));
    assert_eq!(again["readings_ingested"], 96);
}

#[test]
fn seed_override_changes_config_hash() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = demo(a.path());
    let sb = json(&onemeter(&[
        "--seed",
        "2",
        "pipeline",
        "--demo",
        "--out-dir",
        b.path().to_str().unwrap(),
    ]));
    assert_eq!(sb["seed"], 2);
    assert_ne!(sa["manifest_sha256"], sb["manifest_sha256"]);
}

#[test]
fn broken_tariff_fails_in_report_stage() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("inputs");
    demo(&dir.path().join("first"));
    std::fs::create_dir_all(&inputs).unwrap();
    for f in ["meter.csv", "run.toml", "tariff.toml"] {
        std::fs::copy(dir.path().join("first/inputs").join(f), inputs.join(f)).unwrap();
    }
    // Zones leave 22:00-24:00 uncovered.
    std::fs::write(
        inputs.join("tariff.toml"),
        "name = \"gap\"\ncurrency = \"PLN\"\n\n[[zones]]\nname = \"day\"\nstart = \"00:00\"\nend = \"22:00\"\nprice = \"0.9\"\n",
    )
    .unwrap();
    let v = error_line(&onemeter(&[
        "pipeline",
        "--config",
        inputs.join("run.toml").to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]));
    assert_eq!(v["stage"], "report");
}

#[test]
fn missing_config_file_fails_in_config_stage() {
    let dir = tempfile::tempdir().unwrap();
    let v = error_line(&onemeter(&[
        "pipeline",
        "--config",
        dir.path().join("nope.toml").to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]));
    assert_eq!(v["stage"], "config");
}

#[test]
fn simulate_seed_override_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    std::fs::write(
        &cfg,
        "seed = 3\nduration_s = 600.0\n\n[[nodes]]\ncount = 20\ndistance_m = 200.0\ntraffic = { kind = \"poisson\", rate_per_s = 0.01 }\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = json(&onemeter(&["simulate", "--config", cfg]));
    let b = json(&onemeter(&["simulate", "--config", cfg]));
    assert_eq!(a, b);
    let c = json(&onemeter(&["--seed", "4", "simulate", "--config", cfg]));
    assert_eq!(c["seed"], 4);

    let out = dir.path().join("out");
    stdout(&onemeter(&[
        "simulate",
        "--config",
        cfg,
        "--out-dir",
        out.to_str().unwrap(),
    ]));
    let trace = std::fs::read_to_string(out.join("sim_trace.csv")).unwrap();
    assert!(trace.starts_with("node,start_s,duration_ms,channel,sf,rssi_dbm,outcome,deferred_until_s\n"));
}

#[test]
fn report_from_pipeline_store() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_onemeter"))
        .args([
            "report",
            "--meter",
            "meter-001",
            "--tariff",
            dir.path().join("inputs/tariff.toml").to_str().unwrap(),
            "--from",
            "2024-03-01T06:00:00Z",
            "--to",
            "2024-03-01T12:00:00Z",
            "--interval",
            "3600",
        ])
        .env("ONEMETER_DATA_DIR", dir.path().join("store"))
        .output()
        .unwrap();
    let v = json(&out);
    assert_eq!(v["from"], 1_709_272_800);
    let zones = v["cost"]["zones"].as_array().unwrap();
    assert_eq!(zones[0]["zone"], "day");
    assert_eq!(zones[0]["energy_kwh"], v["energy_kwh"]);
    assert_eq!(zones[1]["energy_kwh"], "0");
}
