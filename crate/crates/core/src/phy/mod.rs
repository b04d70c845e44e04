//! Analytic LoRa modem model.
//!
//! Time on air follows the Semtech modem equation. Energy, daily budgets and
//! battery lifetime are built on top of it; the link-budget helpers and the
//! LPWAN protocol table live in their own submodules.

mod energy;
mod link;
mod presets;

pub use energy::{
    battery_lifetime, daily_budget, tx_energy, Battery, CostModel, DailyBudget, EnergyModel, Lifetime, PerByteCost,
    TxCurrent,
};
pub use link::{eirp, max_coupling_loss, LinkBudgetParams, SensitivityTable, GATEWAY_SENSITIVITY_BAND};
pub use presets::{compare_protocols, protocol_preset, ProtocolComparison, ProtocolPreset, PROTOCOLS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest LoRa PHY payload.
pub const MAX_PAYLOAD: usize = 255;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte frame")]
    PayloadTooLarge(usize),
    #[error("invalid radio parameters: {0}")]
    InvalidParams(String),
    #[error("unknown protocol {0:?}")]
    UnknownProtocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ldro {
    /// Enabled when the symbol time exceeds 16 ms.
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub sf: u8,
    pub bandwidth_hz: u32,
    /// Code rate 4/(4 + cr_idx).
    pub cr_idx: u8,
    pub preamble_symbols: u16,
    pub explicit_header: bool,
    pub crc_on: bool,
    pub ldro: Ldro,
    pub tx_power_dbm: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            sf: 7,
            bandwidth_hz: 125_000,
            cr_idx: 1,
            preamble_symbols: 8,
            explicit_header: true,
            crc_on: true,
            ldro: Ldro::Auto,
            tx_power_dbm: 13.0,
        }
    }
}

impl RadioParams {
    pub fn with_sf(sf: u8) -> Self {
        RadioParams { sf, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(7..=12).contains(&self.sf) {
            return Err(Error::InvalidParams(format!("sf {} outside 7..=12", self.sf)));
        }
        if ![125_000, 250_000, 500_000].contains(&self.bandwidth_hz) {
            return Err(Error::InvalidParams(format!(
                "bandwidth {} Hz not one of 125/250/500 kHz",
                self.bandwidth_hz
            )));
        }
        if !(1..=4).contains(&self.cr_idx) {
            return Err(Error::InvalidParams(format!("cr_idx {} outside 1..=4", self.cr_idx)));
        }
        if self.preamble_symbols < 6 {
            return Err(Error::InvalidParams("preamble shorter than 6 symbols".into()));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::InvalidParams("tx power must be finite".into()));
        }
        Ok(())
    }

    /// Symbol duration in milliseconds.
    pub fn symbol_ms(&self) -> f64 {
        f64::from(1u32 << self.sf) * 1000.0 / f64::from(self.bandwidth_hz)
    }
}

pub fn ldro_required(params: &RadioParams) -> bool {
    match params.ldro {
        Ldro::On => true,
        Ldro::Off => false,
        Ldro::Auto => params.symbol_ms() > 16.0,
    }
}

/// Number of payload symbols, including the 8 fixed ones.
pub fn payload_symbols(payload_len: usize, params: &RadioParams) -> u32 {
    let sf = i64::from(params.sf);
    let de = i64::from(ldro_required(params));
    let ih = i64::from(!params.explicit_header);
    let crc = i64::from(params.crc_on);
    let numerator = 8 * payload_len as i64 - 4 * sf + 28 + 16 * crc - 20 * ih;
    let denominator = 4 * (sf - 2 * de);
    let groups = if numerator > 0 {
        (numerator + denominator - 1) / denominator
    } else {
        0
    };
    8 + (groups * (i64::from(params.cr_idx) + 4)) as u32
}

/// Frame duration in milliseconds.
pub fn time_on_air(payload_len: usize, params: &RadioParams) -> Result<f64> {
    params.validate()?;
    if payload_len > MAX_PAYLOAD {
        return Err(Error::PayloadTooLarge(payload_len));
    }
    let preamble = f64::from(params.preamble_symbols) + 4.25;
    let payload = f64::from(payload_symbols(payload_len, params));
    Ok((preamble + payload) * params.symbol_ms())
}

/// Frame duration rounded to whole microseconds, the simulator's time base.
pub fn time_on_air_us(payload_len: usize, params: &RadioParams) -> Result<u64> {
    Ok((time_on_air(payload_len, params)? * 1000.0).round() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn ldro_rule() {
        assert!(!ldro_required(&RadioParams::with_sf(7)));
        assert!(ldro_required(&RadioParams::with_sf(11)));
        let wide = RadioParams {
            bandwidth_hz: 500_000,
            ..RadioParams::with_sf(11)
        };
        assert!(close(wide.symbol_ms(), 4.096));
        assert!(!ldro_required(&wide));
        assert!(close(RadioParams::with_sf(11).symbol_ms(), 16.384));
    }

    #[test]
    fn time_on_air_examples() {
        assert!(close(time_on_air(50, &RadioParams::with_sf(7)).unwrap(), 97.536));
        assert!(close(time_on_air(50, &RadioParams::with_sf(11)).unwrap(), 1314.816));
        assert!(close(time_on_air(1, &RadioParams::with_sf(7)).unwrap(), 25.856));
        assert_eq!(payload_symbols(50, &RadioParams::with_sf(7)), 83);
        assert_eq!(payload_symbols(50, &RadioParams::with_sf(11)), 68);
        assert_eq!(payload_symbols(1, &RadioParams::with_sf(7)), 13);
        assert_eq!(time_on_air_us(50, &RadioParams::with_sf(7)).unwrap(), 97_536);
    }

    #[test]
    fn rejects_oversized_payload_and_bad_params() {
        assert_eq!(
            time_on_air(256, &RadioParams::default()),
            Err(Error::PayloadTooLarge(256))
        );
        assert!(time_on_air(10, &RadioParams::with_sf(6)).is_err());
        let bad = RadioParams {
            bandwidth_hz: 200_000,
            ..RadioParams::default()
        };
        assert!(time_on_air(10, &bad).is_err());
        let bad = RadioParams {
            preamble_symbols: 5,
            ..RadioParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_payload_still_costs_header_symbols() {
        let t = time_on_air(0, &RadioParams::default()).unwrap();
        assert!(t > 12.25 * 1.024);
    }

    proptest! {
        #[test]
        fn steps_are_zero_or_one_codeword_group(sf in 7u8..=12, cr in 1u8..=4, len in 0usize..255, bw in 0usize..3) {
            let params = RadioParams {
                sf,
                cr_idx: cr,
                bandwidth_hz: [125_000, 250_000, 500_000][bw],
                ..RadioParams::default()
            };
            let a = time_on_air(len, &params).unwrap();
            let b = time_on_air(len + 1, &params).unwrap();
            let step = f64::from(cr + 4) * params.symbol_ms();
            prop_assert!(close(b - a, 0.0) || close(b - a, step), "step {}", b - a);
        }

        #[test]
        fn non_decreasing_in_sf(len in 1usize..=255, sf in 7u8..12) {
            let lo = time_on_air(len, &RadioParams::with_sf(sf)).unwrap();
            let hi = time_on_air(len, &RadioParams::with_sf(sf + 1)).unwrap();
            prop_assert!(hi >= lo);
        }
    }
}
