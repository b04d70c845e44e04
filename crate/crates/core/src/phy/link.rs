use serde::{Deserialize, Serialize};

/// Gateway receiver sensitivity range at 125 kHz, (best, worst) in dBm.
pub const GATEWAY_SENSITIVITY_BAND: (f64, f64) = (-140.0, -126.0);

/// Receiver sensitivity per spreading factor (SF7..=SF12) at 125 kHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub dbm: [f64; 6],
}

impl SensitivityTable {
    /// SX127x-class end-device transceiver.
    pub fn transceiver() -> Self {
        SensitivityTable {
            dbm: [-124.0, -127.0, -130.0, -133.0, -135.0, -137.0],
        }
    }

    /// Gateway concentrator: −126 dBm at SF7 to −140 dBm at SF12, linear in
    /// between.
    pub fn gateway() -> Self {
        let (best, worst) = GATEWAY_SENSITIVITY_BAND;
        let step = (worst - best) / 5.0;
        let mut dbm = [0.0; 6];
        for (i, v) in dbm.iter_mut().enumerate() {
            *v = worst - step * i as f64;
        }
        SensitivityTable { dbm }
    }

    pub fn get(&self, sf: u8) -> Option<f64> {
        sf.checked_sub(7).and_then(|i| self.dbm.get(usize::from(i))).copied()
    }
}

impl Default for SensitivityTable {
    fn default() -> Self {
        Self::gateway()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetParams {
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub feed_loss_db: f64,
    pub rx_sensitivity: SensitivityTable,
    pub max_link_budget_db: f64,
}

impl Default for LinkBudgetParams {
    /// SX1261 module with a 2.15 dBi antenna and 1 dB of feed loss.
    fn default() -> Self {
        LinkBudgetParams {
            tx_power_dbm: 15.0,
            antenna_gain_dbi: 2.15,
            feed_loss_db: 1.0,
            rx_sensitivity: SensitivityTable::transceiver(),
            max_link_budget_db: 163.0,
        }
    }
}

pub fn eirp(lb: &LinkBudgetParams) -> f64 {
    lb.tx_power_dbm + lb.antenna_gain_dbi - lb.feed_loss_db
}

/// Largest path loss a link tolerates.
pub fn max_coupling_loss(eirp_dbm: f64, sensitivity_dbm: f64) -> f64 {
    eirp_dbm - sensitivity_dbm
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lb(p: f64, g: f64, l: f64) -> LinkBudgetParams {
        LinkBudgetParams {
            tx_power_dbm: p,
            antenna_gain_dbi: g,
            feed_loss_db: l,
            ..LinkBudgetParams::default()
        }
    }

    #[test]
    fn eirp_examples() {
        assert_eq!(eirp(&LinkBudgetParams::default()), 16.15);
        assert_eq!(eirp(&lb(15.0, 0.0, 0.0)), 15.0);
        assert_eq!(eirp(&lb(13.0, 2.15, 1.0)), 14.15);
    }

    #[test]
    fn coupling_loss_examples() {
        assert!((max_coupling_loss(16.15, -137.0) - 153.15).abs() < 1e-9);
        assert_eq!(max_coupling_loss(0.0, -140.0), 140.0);
    }

    #[test]
    fn gateway_table_spans_band() {
        let t = SensitivityTable::gateway();
        assert_eq!(t.get(7), Some(-126.0));
        assert_eq!(t.get(12), Some(-140.0));
        assert_eq!(t.get(6), None);
        assert_eq!(t.get(13), None);
        let (lo, hi) = GATEWAY_SENSITIVITY_BAND;
        assert!(t.dbm.iter().all(|&s| (lo..=hi).contains(&s)));
        assert!(t.dbm.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(SensitivityTable::transceiver().get(12), Some(-137.0));
    }

    proptest! {
        #[test]
        fn eirp_is_additive_in_power(p in -10.0f64..30.0, g in 0.0f64..10.0, l in 0.0f64..5.0, d in -10.0f64..10.0) {
            let shifted = eirp(&lb(p + d, g, l));
            prop_assert!((shifted - (eirp(&lb(p, g, l)) + d)).abs() < 1e-9);
        }
    }
}
