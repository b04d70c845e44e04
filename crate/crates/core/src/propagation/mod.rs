//! Signal-strength models for the indoor stairwell measurements and the
//! outdoor urban range test.
//!
//! Indoor data are fitted by least squares in the dB domain, either linear in
//! distance or log-distance. The outdoor model is a log-distance curve whose
//! exponent is solved from a single observed range.

mod dataset;

pub use dataset::{IndoorDataset, IndoorPoint, FLOOR_LABELS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phy::SensitivityTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot fit: {0}")]
    NoFit(String),
    #[error("distance {0} m outside the model domain")]
    Domain(f64),
    #[error("inconsistent calibration: {0}")]
    Inconsistent(String),
    #[error("spreading factor {0} outside 7..=12")]
    InvalidSf(u8),
    #[error("bad fixture: {0}")]
    Fixture(String),
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// rssi = intercept + slope * d, slope in dB/m.
    Linear,
    /// rssi = intercept - 10 n log10(d / d0), slope holds n.
    LogDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossModel {
    pub kind: ModelKind,
    /// RSSI at the reference distance (at 0 m for linear models), dBm.
    pub intercept_dbm: f64,
    pub slope: f64,
    pub reference_distance_m: f64,
    pub residual_rmse_db: f64,
    #[serde(default)]
    pub points_used: usize,
}

impl PathLossModel {
    pub fn linear(intercept_dbm: f64, slope_db_per_m: f64) -> Self {
        PathLossModel {
            kind: ModelKind::Linear,
            intercept_dbm,
            slope: slope_db_per_m,
            reference_distance_m: 0.0,
            residual_rmse_db: 0.0,
            points_used: 0,
        }
    }

    pub fn log_distance(intercept_dbm: f64, exponent: f64, reference_distance_m: f64) -> Self {
        PathLossModel {
            kind: ModelKind::LogDistance,
            intercept_dbm,
            slope: exponent,
            reference_distance_m,
            residual_rmse_db: 0.0,
            points_used: 0,
        }
    }

    /// RSSI decreases with distance.
    pub fn is_decaying(&self) -> bool {
        match self.kind {
            ModelKind::Linear => self.slope < 0.0,
            ModelKind::LogDistance => self.slope > 0.0,
        }
    }
}

/// Ordinary least squares of `rssi` on distance (linear) or on
/// log10(d / 1 m) (log-distance). Log-distance fits drop points at d <= 0.
pub fn fit_model(points: &[(f64, f64)], kind: ModelKind) -> Result<PathLossModel> {
    let reference = 1.0;
    let xy: Vec<(f64, f64)> = match kind {
        ModelKind::Linear => points.to_vec(),
        ModelKind::LogDistance => points
            .iter()
            .filter(|(d, _)| *d > 0.0)
            .map(|&(d, r)| ((d / reference).log10(), r))
            .collect(),
    };
    if xy.len() < 2 {
        return Err(Error::NoFit(format!("{} usable points, need at least 2", xy.len())));
    }
    let n = xy.len() as f64;
    let mean_x = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx <= f64::EPSILON * n {
        return Err(Error::NoFit("all points at the same distance".into()));
    }
    let b = sxy / sxx;
    let a = mean_y - b * mean_x;
    let sse: f64 = xy.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    let rmse = (sse / n).sqrt();
    Ok(match kind {
        ModelKind::Linear => PathLossModel {
            residual_rmse_db: rmse,
            points_used: xy.len(),
            ..PathLossModel::linear(a, b)
        },
        ModelKind::LogDistance => PathLossModel {
            residual_rmse_db: rmse,
            points_used: xy.len(),
            ..PathLossModel::log_distance(a, -b / 10.0, reference)
        },
    })
}

pub fn predict_rssi(model: &PathLossModel, distance_m: f64) -> Result<f64> {
    if distance_m.is_nan() || distance_m < 0.0 || !distance_m.is_finite() {
        return Err(Error::Domain(distance_m));
    }
    match model.kind {
        ModelKind::Linear => Ok(model.intercept_dbm + model.slope * distance_m),
        ModelKind::LogDistance => {
            if model.reference_distance_m <= 0.0 || distance_m < model.reference_distance_m {
                return Err(Error::Domain(distance_m));
            }
            Ok(model.intercept_dbm - 10.0 * model.slope * (distance_m / model.reference_distance_m).log10())
        }
    }
}

/// Signal lost between `d1` and `d2`, in dB.
pub fn attenuation_over(model: &PathLossModel, d1: f64, d2: f64) -> Result<f64> {
    Ok(predict_rssi(model, d1)? - predict_rssi(model, d2)?)
}

/// Distance at which the model reaches `sensitivity_dbm`.
pub fn max_range(model: &PathLossModel, sensitivity_dbm: f64) -> Option<f64> {
    if !model.is_decaying() {
        return None;
    }
    match model.kind {
        ModelKind::Linear => Some(((sensitivity_dbm - model.intercept_dbm) / model.slope).max(0.0)),
        ModelKind::LogDistance => Some(
            model.reference_distance_m * 10f64.powf((model.intercept_dbm - sensitivity_dbm) / (10.0 * model.slope)),
        ),
    }
}

/// Path loss at 1 m used for outdoor calibration: free space at 868 MHz
/// (about 31.5 dB) plus 8.5 dB for the signal leaving the building.
pub const OUTDOOR_REFERENCE_LOSS_DB: f64 = 40.0;

/// Log-distance model whose path loss at `observed_range_m` uses up the
/// whole budget `eirp - sensitivity`.
pub fn calibrate_outdoor(
    eirp_dbm: f64,
    sensitivity_dbm: f64,
    observed_range_m: f64,
    reference_loss_db: f64,
) -> Result<PathLossModel> {
    let reference = 1.0;
    if observed_range_m.is_nan() || observed_range_m <= reference {
        return Err(Error::Inconsistent(format!(
            "observed range {observed_range_m} m must exceed the {reference} m reference"
        )));
    }
    let budget = eirp_dbm - sensitivity_dbm - reference_loss_db;
    let n = budget / (10.0 * (observed_range_m / reference).log10());
    if n.is_nan() || n <= 0.0 {
        return Err(Error::Inconsistent(format!("required exponent {n:.3} is not positive")));
    }
    Ok(PathLossModel::log_distance(eirp_dbm - reference_loss_db, n, reference))
}

/// Slack for float rounding when comparing against sensitivity, dB.
const BOUNDARY_SLACK_DB: f64 = 1e-9;

/// Inclusive: a frame exactly at sensitivity is received.
pub fn reachable(rssi_dbm: f64, sf: u8, table: &SensitivityTable) -> Result<bool> {
    let sensitivity = table.get(sf).ok_or(Error::InvalidSf(sf))?;
    Ok(rssi_dbm >= sensitivity - BOUNDARY_SLACK_DB)
}

/// Floor positions relative to the gateway floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingGeometry {
    /// Distance of each floor from the gateway, starting with 0 for the
    /// gateway floor.
    pub floor_distances_m: Vec<f64>,
    /// Slab thickness between consecutive floors, cm. Informational.
    #[serde(default)]
    pub ceiling_thickness_cm: Vec<f64>,
}

impl BuildingGeometry {
    pub fn uniform(floors: u32, total_height_m: f64) -> Self {
        let step = total_height_m / f64::from(floors);
        BuildingGeometry {
            floor_distances_m: (0..=floors).map(|k| step * f64::from(k)).collect(),
            ceiling_thickness_cm: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.floor_distances_m.len() < 2 {
            return Err(Error::Fixture("geometry needs at least two floors".into()));
        }
        if !self.floor_distances_m.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Fixture("floor distances must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Distance to the floor `k` levels away; beyond the listed floors the
    /// mean spacing is extrapolated.
    pub fn distance_to(&self, k: u32) -> f64 {
        let d = &self.floor_distances_m;
        let last = d.len() - 1;
        let k = k as usize;
        if k <= last {
            return d[k] - d[0];
        }
        let spacing = (d[last] - d[0]) / last as f64;
        d[last] - d[0] + spacing * (k - last) as f64
    }
}

impl Default for BuildingGeometry {
    /// Six floors over 20 m.
    fn default() -> Self {
        Self::uniform(6, 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "floors")]
pub enum FloorLimit {
    Floors(u32),
    /// Still above sensitivity at the search cap.
    Capped(u32),
    NoLimit,
}

impl FloorLimit {
    pub fn count(&self) -> Option<u32> {
        match self {
            FloorLimit::Floors(n) | FloorLimit::Capped(n) => Some(*n),
            FloorLimit::NoLimit => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorEstimate {
    pub limit: FloorLimit,
    /// The estimate extrapolates a log-distance fit, which is not how the
    /// stairwell behaves; prefer the linear model.
    pub log_distance_extrapolation: bool,
}

/// Largest number of floors between device and gateway that still leaves
/// the predicted RSSI at or above `sensitivity_dbm`. The model supplies the
/// loss per distance; `start_rssi_dbm` is the level on the gateway floor.
pub fn max_floors(
    model: &PathLossModel,
    geometry: &BuildingGeometry,
    start_rssi_dbm: f64,
    sensitivity_dbm: f64,
    cap: u32,
) -> Result<FloorEstimate> {
    geometry.validate()?;
    let log = model.kind == ModelKind::LogDistance;
    if !model.is_decaying() {
        return Ok(FloorEstimate {
            limit: FloorLimit::NoLimit,
            log_distance_extrapolation: log,
        });
    }
    let loss_to = |d: f64| -> Result<f64> {
        match model.kind {
            ModelKind::Linear => Ok(-model.slope * d),
            ModelKind::LogDistance => {
                let d0 = model.reference_distance_m;
                attenuation_over(model, d0, d.max(d0))
            }
        }
    };
    let mut floors = 0;
    for k in 1..=cap {
        if start_rssi_dbm - loss_to(geometry.distance_to(k))? >= sensitivity_dbm {
            floors = k;
        } else {
            return Ok(FloorEstimate {
                limit: FloorLimit::Floors(floors),
                log_distance_extrapolation: log,
            });
        }
    }
    Ok(FloorEstimate {
        limit: if start_rssi_dbm >= sensitivity_dbm && cap > 0 {
            FloorLimit::Capped(cap)
        } else {
            FloorLimit::Floors(0)
        },
        log_distance_extrapolation: log,
    })
}

/// Floor limits at both ends of a sensitivity band, (pessimistic,
/// optimistic).
pub fn max_floors_band(
    model: &PathLossModel,
    geometry: &BuildingGeometry,
    start_rssi_dbm: f64,
    band: (f64, f64),
    cap: u32,
) -> Result<(FloorEstimate, FloorEstimate)> {
    let (best, worst) = if band.0 < band.1 { band } else { (band.1, band.0) };
    Ok((
        max_floors(model, geometry, start_rssi_dbm, worst, cap)?,
        max_floors(model, geometry, start_rssi_dbm, best, cap)?,
    ))
}

/// SNR = RSSI - noise floor, clamped at the demodulator's reporting ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrModel {
    pub noise_floor_dbm: f64,
    pub ceiling_db: f64,
}

impl SnrModel {
    /// Points within 1 dB of the largest SNR are treated as saturated and do
    /// not inform the noise floor.
    pub fn fit(points: &[(f64, f64)]) -> Result<Self> {
        let ceiling = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if !ceiling.is_finite() {
            return Err(Error::NoFit("no SNR points".into()));
        }
        let unsaturated: Vec<f64> = points
            .iter()
            .filter(|p| p.1 < ceiling - 1.0)
            .map(|p| p.0 - p.1)
            .collect();
        let pool: Vec<f64> = if unsaturated.is_empty() {
            points.iter().map(|p| p.0 - p.1).collect()
        } else {
            unsaturated
        };
        Ok(SnrModel {
            noise_floor_dbm: pool.iter().sum::<f64>() / pool.len() as f64,
            ceiling_db: ceiling,
        })
    }

    pub fn predict(&self, rssi_dbm: f64) -> f64 {
        (rssi_dbm - self.noise_floor_dbm).min(self.ceiling_db)
    }
}
