//! Discrete-event simulation of many meters uplinking through one gateway.
//!
//! Time is kept in integer microseconds. Each node draws traffic, channel
//! choices and shadowing from its own ChaCha stream, so adding a node does
//! not perturb the others' draws. Events are processed in (start, node id)
//! order.

mod duty;

pub use duty::{airtime_in, duty_cycle_gate, window_allowance_us, Airtime, DutyGate, WINDOW_US};

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phy::{self, tx_energy, EnergyModel, RadioParams, SensitivityTable};
use crate::propagation::{self, calibrate_outdoor, predict_rssi, PathLossModel, OUTDOOR_REFERENCE_LOSS_DB};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Phy(#[from] phy::Error),
    #[error(transparent)]
    Propagation(#[from] propagation::Error),
    #[error("trace output: {0}")]
    Trace(String),
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Traffic {
    /// Fixed period; without an offset the phase is drawn uniformly.
    Periodic {
        period_s: f64,
        #[serde(default)]
        offset_s: Option<f64>,
    },
    Poisson {
        rate_per_s: f64,
    },
    /// Explicit send times, e.g. from an uplink plan.
    Schedule {
        times_s: Vec<f64>,
    },
}

/// `count` identical nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeGroup {
    #[serde(default = "one")]
    pub count: u32,
    pub distance_m: f64,
    #[serde(default = "default_sf")]
    pub sf: u8,
    pub traffic: Traffic,
    #[serde(default = "default_payload")]
    pub payload_bytes: usize,
}

fn one() -> u32 {
    1
}
fn default_sf() -> u8 {
    7
}
fn default_payload() -> usize {
    50
}

/// Outdoor model reaching -126 dBm at 360 m from a 16.15 dBm EIRP.
pub fn default_propagation() -> PathLossModel {
    calibrate_outdoor(16.15, -126.0, 360.0, OUTDOOR_REFERENCE_LOSS_DB).expect("constants form a consistent calibration")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub nodes: Vec<NodeGroup>,
    #[serde(default = "default_channels")]
    pub channels: u32,
    #[serde(default = "default_duty")]
    pub duty_cycle: f64,
    #[serde(default)]
    pub capture_effect: bool,
    #[serde(default)]
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_propagation")]
    pub propagation: PathLossModel,
    #[serde(default)]
    pub shadowing_sigma_db: f64,
    #[serde(default)]
    pub sensitivity: SensitivityTable,
    /// Radio template; each node overrides the spreading factor.
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub energy: EnergyModel,
}

fn default_channels() -> u32 {
    8
}
fn default_duty() -> f64 {
    0.01
}

/// Power advantage that lets the stronger of two colliding frames survive.
pub const CAPTURE_THRESHOLD_DB: f64 = 6.0;

impl SimConfig {
    pub fn new(nodes: Vec<NodeGroup>, duration_s: f64) -> Self {
        SimConfig {
            nodes,
            channels: default_channels(),
            duty_cycle: default_duty(),
            capture_effect: false,
            seed: 0,
            duration_s,
            propagation: default_propagation(),
            shadowing_sigma_db: 0.0,
            sensitivity: SensitivityTable::gateway(),
            radio: RadioParams::default(),
            energy: EnergyModel::default(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().map(|g| g.count as usize).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.channels < 1 {
            return bad("channels must be at least 1".into());
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return bad(format!("duty_cycle {} outside (0, 1]", self.duty_cycle));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration_s {} must be positive", self.duration_s));
        }
        if !(self.shadowing_sigma_db >= 0.0 && self.shadowing_sigma_db.is_finite()) {
            return bad("shadowing_sigma_db must be a finite non-negative value".into());
        }
        if self.node_count() == 0 {
            return bad("no nodes".into());
        }
        self.radio.validate()?;
        for (i, g) in self.nodes.iter().enumerate() {
            if !(g.distance_m >= 0.0 && g.distance_m.is_finite()) {
                return bad(format!("group {i}: distance must be non-negative"));
            }
            if self.sensitivity.get(g.sf).is_none() {
                return bad(format!("group {i}: spreading factor {} outside 7..=12", g.sf));
            }
            if g.payload_bytes == 0 || g.payload_bytes > phy::MAX_PAYLOAD {
                return bad(format!("group {i}: payload {} B outside 1..=255", g.payload_bytes));
            }
            match &g.traffic {
                Traffic::Periodic { period_s, offset_s } => {
                    if !(*period_s > 0.0 && period_s.is_finite()) {
                        return bad(format!("group {i}: period must be positive"));
                    }
                    if offset_s.is_some_and(|o| !(o >= 0.0 && o.is_finite())) {
                        return bad(format!("group {i}: offset must be non-negative"));
                    }
                }
                Traffic::Poisson { rate_per_s } => {
                    if !(*rate_per_s > 0.0 && rate_per_s.is_finite()) {
                        return bad(format!("group {i}: rate must be positive"));
                    }
                }
                Traffic::Schedule { times_s } => {
                    if times_s.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                        return bad(format!("group {i}: schedule times must be non-negative"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Delivered,
    Collided,
    BelowSensitivity,
    DeferredDutyCycle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionEvent {
    pub node: usize,
    pub start_us: u64,
    pub duration_us: u64,
    pub channel: u32,
    pub sf: u8,
    pub rssi_dbm: f64,
    pub outcome: Outcome,
    /// Set for deferred events: earliest start the duty cycle would allow.
    pub deferred_until_us: Option<u64>,
}

impl TransmissionEvent {
    pub fn end_us(&self) -> u64 {
        self.start_us + self.duration_us
    }

    pub fn attempted(&self) -> bool {
        self.outcome != Outcome::DeferredDutyCycle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Collision {
    None,
    BothLost,
    FirstSurvives,
    SecondSurvives,
}

/// Frames interfere only on the same channel and spreading factor with
/// overlapping airtime. With capture, a frame at least 6 dB stronger wins.
pub fn collision_check(a: &TransmissionEvent, b: &TransmissionEvent, capture_effect: bool) -> Collision {
    let overlap = a.start_us < b.end_us() && b.start_us < a.end_us();
    if !overlap || a.channel != b.channel || a.sf != b.sf {
        return Collision::None;
    }
    if capture_effect {
        if a.rssi_dbm - b.rssi_dbm >= CAPTURE_THRESHOLD_DB {
            return Collision::FirstSurvives;
        }
        if b.rssi_dbm - a.rssi_dbm >= CAPTURE_THRESHOLD_DB {
            return Collision::SecondSurvives;
        }
    }
    Collision::BothLost
}

/// Mean path loss plus a Gaussian shadowing draw. No draw is taken when
/// sigma is zero.
pub fn assign_rssi<R: Rng + ?Sized>(distance_m: f64, model: &PathLossModel, sigma_db: f64, rng: &mut R) -> Result<f64> {
    let mean = predict_rssi(model, distance_m)?;
    if sigma_db == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(0.0, sigma_db).map_err(|e| Error::InvalidConfig(format!("shadowing sigma: {e}")))?;
    Ok(mean + normal.sample(rng))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Counts {
    pub scheduled: u64,
    pub attempted: u64,
    pub delivered: u64,
    pub collided: u64,
    pub below_sensitivity: u64,
    pub deferred: u64,
    pub airtime_us: u64,
    pub energy_uah: f64,
}

impl Counts {
    /// Delivered over attempted; undefined with no attempts.
    pub fn pdr(&self) -> Option<f64> {
        (self.attempted > 0).then(|| self.delivered as f64 / self.attempted as f64)
    }

    fn add(&mut self, ev: &TransmissionEvent, energy_uah: f64) {
        self.scheduled += 1;
        match ev.outcome {
            Outcome::DeferredDutyCycle => {
                self.deferred += 1;
                return;
            }
            Outcome::Delivered => self.delivered += 1,
            Outcome::Collided => self.collided += 1,
            Outcome::BelowSensitivity => self.below_sensitivity += 1,
        }
        self.attempted += 1;
        self.airtime_us += ev.duration_us;
        self.energy_uah += energy_uah;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeReport {
    pub node: usize,
    #[serde(flatten)]
    pub counts: Counts,
    pub pdr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub seed: u64,
    pub duration_s: f64,
    pub channels: u32,
    pub nodes: Vec<NodeReport>,
    pub aggregate: Counts,
    pub pdr: Option<f64>,
    pub airtime_per_channel_us: Vec<u64>,
}

struct NodeSpec {
    distance_m: f64,
    sf: u8,
    payload_bytes: usize,
    traffic: Traffic,
}

fn expand(config: &SimConfig) -> Vec<NodeSpec> {
    config
        .nodes
        .iter()
        .flat_map(|g| {
            (0..g.count).map(move |_| NodeSpec {
                distance_m: g.distance_m,
                sf: g.sf,
                payload_bytes: g.payload_bytes,
                traffic: g.traffic.clone(),
            })
        })
        .collect()
}

fn to_us(s: f64) -> u64 {
    (s * 1e6).round() as u64
}

fn arrivals(traffic: &Traffic, horizon_us: u64, rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    let mut times = Vec::new();
    match traffic {
        Traffic::Periodic { period_s, offset_s } => {
            let period = to_us(*period_s).max(1);
            let mut t = match offset_s {
                Some(o) => to_us(*o),
                None => rng.gen_range(0..period),
            };
            while t < horizon_us {
                times.push(t);
                t += period;
            }
        }
        Traffic::Poisson { rate_per_s } => {
            let exp = Exp::new(*rate_per_s).map_err(|e| Error::InvalidConfig(format!("poisson rate: {e}")))?;
            let mut t = 0.0;
            loop {
                t += exp.sample(rng);
                let us = to_us(t);
                if us >= horizon_us {
                    break;
                }
                times.push(us);
            }
        }
        Traffic::Schedule { times_s } => {
            times.extend(times_s.iter().map(|&s| to_us(s)).filter(|&t| t < horizon_us));
            times.sort_unstable();
        }
    }
    Ok(times)
}

pub fn run(config: &SimConfig) -> Result<SimReport> {
    run_with_trace(config).map(|(report, _)| report)
}

/// Runs the simulation and also returns every scheduled event in processing
/// order.
pub fn run_with_trace(config: &SimConfig) -> Result<(SimReport, Vec<TransmissionEvent>)> {
    config.validate()?;
    let specs = expand(config);
    let horizon = to_us(config.duration_s);

    let mut events = Vec::new();
    let mut energy_per_frame = Vec::with_capacity(specs.len());
    for (id, node) in specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(id as u64);
        let params = RadioParams {
            sf: node.sf,
            ..config.radio.clone()
        };
        let duration_us = phy::time_on_air_us(node.payload_bytes, &params)?;
        energy_per_frame.push(tx_energy(node.payload_bytes, &params, &config.energy)?);
        for start_us in arrivals(&node.traffic, horizon, &mut rng)? {
            let channel = rng.gen_range(0..config.channels);
            let rssi_dbm = assign_rssi(
                node.distance_m,
                &config.propagation,
                config.shadowing_sigma_db,
                &mut rng,
            )?;
            events.push(TransmissionEvent {
                node: id,
                start_us,
                duration_us,
                channel,
                sf: node.sf,
                rssi_dbm,
                outcome: Outcome::Delivered,
                deferred_until_us: None,
            });
        }
    }
    // Stable sort keeps each node's own arrival order on equal timestamps.
    events.sort_by_key(|e| (e.start_us, e.node));

    let mut history: Vec<VecDeque<Airtime>> = vec![VecDeque::new(); specs.len()];
    for ev in events.iter_mut() {
        let h = &mut history[ev.node];
        while h.front().is_some_and(|&(s, d)| s + d + WINDOW_US <= ev.start_us) {
            h.pop_front();
        }
        match duty_cycle_gate(h.make_contiguous(), ev.start_us, ev.duration_us, config.duty_cycle) {
            DutyGate::Allowed => h.push_back((ev.start_us, ev.duration_us)),
            DutyGate::DeferredUntil(at) => {
                ev.outcome = Outcome::DeferredDutyCycle;
                ev.deferred_until_us = Some(at);
                continue;
            }
            DutyGate::Never => {
                ev.outcome = Outcome::DeferredDutyCycle;
                continue;
            }
        }
        if !propagation::reachable(ev.rssi_dbm, ev.sf, &config.sensitivity)? {
            ev.outcome = Outcome::BelowSensitivity;
        }
    }

    let heard: Vec<usize> = (0..events.len())
        .filter(|&i| events[i].outcome == Outcome::Delivered)
        .collect();
    let mut lost = vec![false; events.len()];
    for (k, &i) in heard.iter().enumerate() {
        for &j in &heard[k + 1..] {
            if events[j].start_us >= events[i].end_us() {
                break;
            }
            match collision_check(&events[i], &events[j], config.capture_effect) {
                Collision::None => {}
                Collision::BothLost => {
                    lost[i] = true;
                    lost[j] = true;
                }
                Collision::FirstSurvives => lost[j] = true,
                Collision::SecondSurvives => lost[i] = true,
            }
        }
    }
    for (ev, lost) in events.iter_mut().zip(lost) {
        if lost {
            ev.outcome = Outcome::Collided;
        }
    }

    let mut nodes: Vec<NodeReport> = (0..specs.len())
        .map(|node| NodeReport {
            node,
            counts: Counts::default(),
            pdr: None,
        })
        .collect();
    let mut aggregate = Counts::default();
    let mut airtime_per_channel_us = vec![0; config.channels as usize];
    for ev in &events {
        let e = energy_per_frame[ev.node];
        nodes[ev.node].counts.add(ev, e);
        aggregate.add(ev, e);
        if ev.attempted() {
            airtime_per_channel_us[ev.channel as usize] += ev.duration_us;
        }
    }
    for n in &mut nodes {
        n.pdr = n.counts.pdr();
    }
    let report = SimReport {
        seed: config.seed,
        duration_s: config.duration_s,
        channels: config.channels,
        nodes,
        pdr: aggregate.pdr(),
        aggregate,
        airtime_per_channel_us,
    };
    Ok((report, events))
}

#[derive(Serialize)]
struct TraceRow {
    node: usize,
    start_s: f64,
    duration_ms: f64,
    channel: u32,
    sf: u8,
    rssi_dbm: f64,
    outcome: Outcome,
    deferred_until_s: Option<f64>,
}

/// One CSV row per event, in processing order.
pub fn write_trace_csv<W: Write>(events: &[TransmissionEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for ev in events {
        w.serialize(TraceRow {
            node: ev.node,
            start_s: ev.start_us as f64 / 1e6,
            duration_ms: ev.duration_us as f64 / 1e3,
            channel: ev.channel,
            sf: ev.sf,
            rssi_dbm: ev.rssi_dbm,
            outcome: ev.outcome,
            deferred_until_s: ev.deferred_until_us.map(|t| t as f64 / 1e6),
        })
        .map_err(|e| Error::Trace(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Trace(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(channel: u32, sf: u8, start_us: u64, rssi: f64) -> TransmissionEvent {
        TransmissionEvent {
            node: 0,
            start_us,
            duration_us: 100_000,
            channel,
            sf,
            rssi_dbm: rssi,
            outcome: Outcome::Delivered,
            deferred_until_us: None,
        }
    }

    fn poisson_group(count: u32, rate: f64, distance: f64) -> NodeGroup {
        NodeGroup {
            count,
            distance_m: distance,
            sf: 7,
            traffic: Traffic::Poisson { rate_per_s: rate },
            payload_bytes: 20,
        }
    }

    #[test]
    fn collision_rules() {
        let a = event(0, 7, 0, -100.0);
        assert_eq!(
            collision_check(&a, &event(0, 7, 50_000, -100.0), false),
            Collision::BothLost
        );
        assert_eq!(
            collision_check(&a, &event(0, 9, 50_000, -100.0), false),
            Collision::None
        );
        assert_eq!(
            collision_check(&a, &event(1, 7, 50_000, -100.0), false),
            Collision::None
        );
        assert_eq!(
            collision_check(&a, &event(0, 7, 100_000, -100.0), false),
            Collision::None
        );
        assert_eq!(
            collision_check(&a, &event(0, 7, 0, -110.0), true),
            Collision::FirstSurvives
        );
        assert_eq!(
            collision_check(&a, &event(0, 7, 0, -90.0), true),
            Collision::SecondSurvives
        );
        assert_eq!(collision_check(&a, &event(0, 7, 0, -103.0), true), Collision::BothLost);
    }

    #[test]
    fn lone_node_delivers_everything() {
        let cfg = SimConfig::new(vec![poisson_group(1, 0.01, 100.0)], 36_000.0);
        let r = run(&cfg).unwrap();
        assert!(r.aggregate.attempted > 0);
        assert_eq!(r.pdr, Some(1.0));
    }

    #[test]
    fn simultaneous_pair_collides() {
        let group = NodeGroup {
            count: 2,
            distance_m: 50.0,
            sf: 7,
            traffic: Traffic::Schedule { times_s: vec![10.0] },
            payload_bytes: 20,
        };
        let mut cfg = SimConfig::new(vec![group], 60.0);
        cfg.channels = 1;
        let r = run(&cfg).unwrap();
        assert_eq!(r.aggregate.collided, 2);
        assert_eq!(r.pdr, Some(0.0));
    }

    #[test]
    fn sensitivity_boundary_is_inclusive() {
        let at = |d: f64| {
            let g = NodeGroup {
                count: 1,
                distance_m: d,
                sf: 7,
                traffic: Traffic::Schedule { times_s: vec![1.0] },
                payload_bytes: 10,
            };
            run(&SimConfig::new(vec![g], 10.0)).unwrap().aggregate
        };
        assert_eq!(at(360.0).delivered, 1);
        assert_eq!(at(400.0).below_sensitivity, 1);
    }

    #[test]
    fn zero_sigma_rssi_is_the_model_mean() {
        let m = default_propagation();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            assign_rssi(100.0, &m, 0.0, &mut rng).unwrap(),
            predict_rssi(&m, 100.0).unwrap()
        );
        assert_ne!(
            assign_rssi(100.0, &m, 4.0, &mut rng).unwrap(),
            predict_rssi(&m, 100.0).unwrap()
        );
    }

    #[test]
    fn duty_cycle_defers_periodic_burst() {
        // 1 % of an hour holds floor(36 s / ToA) frames of 50 B at SF12.
        let toa = phy::time_on_air(50, &RadioParams::with_sf(12)).unwrap();
        let fit = (36_000.0 / toa).floor() as u64;
        let g = NodeGroup {
            count: 1,
            distance_m: 10.0,
            sf: 12,
            traffic: Traffic::Periodic {
                period_s: 60.0,
                offset_s: Some(0.0),
            },
            payload_bytes: 50,
        };
        let r = run(&SimConfig::new(vec![g], 3600.0)).unwrap();
        assert_eq!(r.aggregate.scheduled, 60);
        assert_eq!(r.aggregate.attempted, fit);
        assert_eq!(r.aggregate.deferred, 60 - fit);
    }

    #[test]
    fn conservation_and_airtime() {
        let mut cfg = SimConfig::new(
            vec![poisson_group(30, 0.05, 200.0), poisson_group(10, 0.05, 420.0)],
            600.0,
        );
        cfg.shadowing_sigma_db = 6.0;
        cfg.capture_effect = true;
        let (r, events) = run_with_trace(&cfg).unwrap();
        let mut sum = Counts::default();
        for n in &r.nodes {
            let c = &n.counts;
            assert_eq!(c.attempted, c.delivered + c.collided + c.below_sensitivity);
            assert_eq!(c.scheduled, c.attempted + c.deferred);
            sum.scheduled += c.scheduled;
            sum.attempted += c.attempted;
        }
        assert_eq!(sum.scheduled, r.aggregate.scheduled);
        assert_eq!(sum.attempted, r.aggregate.attempted);
        assert_eq!(events.len() as u64, r.aggregate.scheduled);
        let toa: u64 = events.iter().filter(|e| e.attempted()).map(|e| e.duration_us).sum();
        assert_eq!(r.airtime_per_channel_us.iter().sum::<u64>(), toa);
        let frame = tx_energy(20, &RadioParams::default(), &cfg.energy).unwrap();
        for n in &r.nodes {
            assert!((n.counts.energy_uah - frame * n.counts.attempted as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let mut cfg = SimConfig::new(vec![poisson_group(50, 0.02, 300.0)], 1800.0);
        cfg.shadowing_sigma_db = 3.0;
        cfg.seed = 42;
        let a = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        cfg.seed = 43;
        assert_ne!(a, serde_json::to_string(&run(&cfg).unwrap()).unwrap());
    }

    #[test]
    fn more_nodes_never_help() {
        let pdr = |n: u32| {
            (0..5)
                .map(|seed| {
                    let mut cfg = SimConfig::new(vec![poisson_group(n, 0.05, 100.0)], 1200.0);
                    cfg.channels = 1;
                    cfg.duty_cycle = 1.0;
                    cfg.seed = seed;
                    run(&cfg).unwrap().pdr.unwrap()
                })
                .sum::<f64>()
                / 5.0
        };
        let (a, b, c) = (pdr(10), pdr(50), pdr(150));
        assert!(a >= b && b >= c, "{a} {b} {c}");
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let cfg = SimConfig::new(vec![poisson_group(2, 0.1, 100.0)], 60.0);
        let (_, events) = run_with_trace(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&events, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node,start_s,duration_ms,channel,sf,rssi_dbm,outcome,deferred_until_s\n"));
        assert_eq!(text.lines().count(), events.len() + 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(vec![poisson_group(1, 0.1, 1.0)], 10.0);
        cfg.channels = 0;
        assert!(cfg.validate().is_err());
        cfg.channels = 1;
        cfg.duty_cycle = 0.0;
        assert!(cfg.validate().is_err());
        cfg.duty_cycle = 1.0;
        cfg.duration_s = 0.0;
        assert!(cfg.validate().is_err());
    }
}
