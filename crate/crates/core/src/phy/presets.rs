use serde::Serialize;

use super::{Error, Result};

/// LPWAN protocol characteristics. `None` marks values the comparison does
/// not give.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolPreset {
    pub name: &'static str,
    pub bitrate_kbps: (f64, f64),
    pub frame_size_bytes: u32,
    pub daily_limit_kb: Option<f64>,
    pub daily_limit_messages: Option<u32>,
    /// Daily limits depend on the operator tariff; the values are examples.
    pub limits_tariff_dependent: bool,
    pub range_urban_km: Option<f64>,
    pub range_rural_km: Option<f64>,
    pub sleep_current_ma: Option<f64>,
    pub max_current_ma: Option<f64>,
    pub regular_activity_required: bool,
    pub corrective_coding: bool,
}

pub const PROTOCOLS: [ProtocolPreset; 6] = [
    ProtocolPreset {
        name: "DASH7",
        bitrate_kbps: (9.6, 166.0),
        frame_size_bytes: 256,
        daily_limit_kb: None,
        daily_limit_messages: None,
        limits_tariff_dependent: false,
        range_urban_km: Some(1.0),
        range_rural_km: Some(5.0),
        sleep_current_ma: None,
        max_current_ma: None,
        regular_activity_required: true,
        corrective_coding: true,
    },
    ProtocolPreset {
        name: "LoRa",
        bitrate_kbps: (0.3, 37.5),
        frame_size_bytes: 255,
        daily_limit_kb: Some(3240.0),
        daily_limit_messages: Some(10),
        limits_tariff_dependent: false,
        range_urban_km: Some(2.0),
        range_rural_km: Some(15.0),
        sleep_current_ma: Some(0.001),
        max_current_ma: Some(70.0),
        regular_activity_required: true,
        corrective_coding: true,
    },
    ProtocolPreset {
        name: "LTE-M",
        bitrate_kbps: (1000.0, 1000.0),
        frame_size_bytes: 1000,
        daily_limit_kb: Some(50_000.0),
        daily_limit_messages: Some(500),
        limits_tariff_dependent: true,
        range_urban_km: Some(1.0),
        range_rural_km: Some(10.0),
        sleep_current_ma: Some(0.011),
        max_current_ma: Some(380.0),
        regular_activity_required: false,
        corrective_coding: true,
    },
    ProtocolPreset {
        name: "NB-IoT",
        bitrate_kbps: (250.0, 250.0),
        frame_size_bytes: 1600,
        daily_limit_kb: Some(50_000.0),
        daily_limit_messages: Some(500),
        limits_tariff_dependent: true,
        range_urban_km: Some(1.0),
        range_rural_km: Some(10.0),
        sleep_current_ma: Some(0.005),
        max_current_ma: Some(120.0),
        regular_activity_required: false,
        corrective_coding: true,
    },
    ProtocolPreset {
        name: "Sigfox",
        bitrate_kbps: (0.1, 0.1),
        frame_size_bytes: 12,
        daily_limit_kb: Some(1.68),
        daily_limit_messages: Some(140),
        limits_tariff_dependent: false,
        range_urban_km: Some(10.0),
        range_rural_km: Some(40.0),
        sleep_current_ma: Some(0.001),
        max_current_ma: Some(50.0),
        regular_activity_required: true,
        corrective_coding: true,
    },
    ProtocolPreset {
        name: "Weightless",
        bitrate_kbps: (0.2, 100.0),
        frame_size_bytes: 48,
        daily_limit_kb: None,
        daily_limit_messages: None,
        limits_tariff_dependent: false,
        range_urban_km: Some(2.0),
        range_rural_km: None,
        sleep_current_ma: None,
        max_current_ma: None,
        regular_activity_required: true,
        corrective_coding: true,
    },
];

/// Case-insensitive lookup.
pub fn protocol_preset(name: &str) -> Result<&'static ProtocolPreset> {
    PROTOCOLS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownProtocol(name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolComparison {
    pub name: &'static str,
    pub frame_size_bytes: u32,
    pub messages_needed: u64,
    pub daily_limit_messages: Option<u32>,
    pub daily_limit_kb: Option<f64>,
    pub exceeds_message_limit: bool,
    pub exceeds_volume_limit: bool,
}

/// Messages per day each protocol needs for `daily_bytes`, with the daily
/// caps it would break.
pub fn compare_protocols(daily_bytes: u64) -> Vec<ProtocolComparison> {
    PROTOCOLS
        .iter()
        .map(|p| {
            let messages_needed = daily_bytes.div_ceil(u64::from(p.frame_size_bytes));
            ProtocolComparison {
                name: p.name,
                frame_size_bytes: p.frame_size_bytes,
                messages_needed,
                daily_limit_messages: p.daily_limit_messages,
                daily_limit_kb: p.daily_limit_kb,
                exceeds_message_limit: p.daily_limit_messages.is_some_and(|m| messages_needed > u64::from(m)),
                exceeds_volume_limit: p.daily_limit_kb.is_some_and(|kb| daily_bytes as f64 > kb * 1000.0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let sigfox = protocol_preset("Sigfox").unwrap();
        assert_eq!(sigfox.frame_size_bytes, 12);
        assert_eq!(sigfox.daily_limit_messages, Some(140));
        let lora = protocol_preset("lora").unwrap();
        assert_eq!(lora.max_current_ma, Some(70.0));
        assert_eq!(lora.frame_size_bytes, 255);
        assert_eq!(lora.daily_limit_kb, Some(3240.0));
        assert_eq!(lora.daily_limit_messages, Some(10));
        assert_eq!(protocol_preset("NB-IoT").unwrap().frame_size_bytes, 1600);
        assert!(matches!(protocol_preset("Zigbee"), Err(Error::UnknownProtocol(_))));
    }

    #[test]
    fn comparison_flags_sigfox_at_3kb() {
        let rows = compare_protocols(3000);
        let sigfox = rows.iter().find(|r| r.name == "Sigfox").unwrap();
        assert_eq!(sigfox.messages_needed, 250);
        assert!(sigfox.exceeds_message_limit);
        assert!(sigfox.exceeds_volume_limit);
        let lora = rows.iter().find(|r| r.name == "LoRa").unwrap();
        assert_eq!(lora.messages_needed, 12);
        assert!(lora.exceeds_message_limit);
        assert!(!lora.exceeds_volume_limit);
        let dash7 = rows.iter().find(|r| r.name == "DASH7").unwrap();
        assert!(!dash7.exceeds_message_limit);
    }
}
