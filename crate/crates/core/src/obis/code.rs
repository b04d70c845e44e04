use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Error, Result};

/// OBIS register identifier.
///
/// Optical readouts usually carry only the `C.D.E` part (quantity,
/// processing, tariff). The medium and channel groups are kept when a frame
/// spells them out as `A-B:C.D.E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObisCode {
    pub medium: Option<u8>,
    pub channel: Option<u8>,
    pub c: u8,
    pub d: u8,
    pub e: u8,
}

impl ObisCode {
    pub const fn new(c: u8, d: u8, e: u8) -> Self {
        ObisCode {
            medium: None,
            channel: None,
            c,
            d,
            e,
        }
    }

    pub const fn with_group(medium: u8, channel: u8, c: u8, d: u8, e: u8) -> Self {
        ObisCode {
            medium: Some(medium),
            channel: Some(channel),
            c,
            d,
            e,
        }
    }

    /// Cumulative positive active energy, total.
    pub const ACTIVE_IMPORT: ObisCode = ObisCode::new(1, 8, 0);
    /// Cumulative negative active energy, total.
    pub const ACTIVE_EXPORT: ObisCode = ObisCode::new(2, 8, 0);

    /// Unit a register of this kind is reported in.
    ///
    /// The uplink format does not carry units, so both ends agree on this
    /// table. Unknown quantities have no unit.
    pub fn canonical_unit(&self) -> &'static str {
        match (self.c, self.d) {
            (1 | 2 | 15 | 16 | 21 | 22 | 41 | 42 | 61 | 62, 8 | 9) => "kWh",
            (3..=8, 8 | 9) => "kvarh",
            (9 | 10, 8 | 9) => "kVAh",
            (1 | 2 | 15 | 16, 4..=7) => "kW",
            (3 | 4, 4..=7) => "kvar",
            (31 | 51 | 71, _) => "A",
            (32 | 52 | 72, _) => "V",
            (14, _) => "Hz",
            _ => "",
        }
    }
}

fn component(text: &str, offset: usize) -> Result<u8> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(offset, format!("malformed address group {text:?}")));
    }
    text.parse::<u8>()
        .map_err(|_| Error::parse(offset, format!("address group {text} exceeds 255")))
}

impl FromStr for ObisCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (group, rest, rest_offset) = match s.find(':') {
            Some(colon) => (Some(&s[..colon]), &s[colon + 1..], colon + 1),
            None => (None, s, 0),
        };
        let (medium, channel) = match group {
            Some(g) => {
                let (a, b) = g
                    .split_once('-')
                    .ok_or_else(|| Error::parse(0, "expected A-B before ':'"))?;
                (Some(component(a, 0)?), Some(component(b, a.len() + 1)?))
            }
            None => (None, None),
        };

        let mut parts = [0u8; 3];
        let mut offset = rest_offset;
        let mut count = 0;
        for piece in rest.split('.') {
            if count == 3 {
                return Err(Error::parse(offset, "too many address groups"));
            }
            parts[count] = component(piece, offset)?;
            offset += piece.len() + 1;
            count += 1;
        }
        if count != 3 {
            return Err(Error::parse(s.len(), "address needs C.D.E"));
        }
        Ok(ObisCode {
            medium,
            channel,
            c: parts[0],
            d: parts[1],
            e: parts[2],
        })
    }
}

impl fmt::Display for ObisCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(a), Some(b)) = (self.medium, self.channel) {
            write!(f, "{a}-{b}:")?;
        }
        write!(f, "{}.{}.{}", self.c, self.d, self.e)
    }
}

impl Serialize for ObisCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ObisCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_form_round_trips() {
        let code: ObisCode = "1.8.0".parse().unwrap();
        assert_eq!(code, ObisCode::ACTIVE_IMPORT);
        assert_eq!(code.to_string(), "1.8.0");
    }

    #[test]
    fn group_form_round_trips() {
        let code: ObisCode = "1-0:2.8.1".parse().unwrap();
        assert_eq!(code, ObisCode::with_group(1, 0, 2, 8, 1));
        assert_eq!(code.to_string(), "1-0:2.8.1");
    }

    #[test]
    fn rejects_out_of_range_and_garbage() {
        assert!("256.8.0".parse::<ObisCode>().is_err());
        assert!("1.8".parse::<ObisCode>().is_err());
        assert!("1.8.0.0".parse::<ObisCode>().is_err());
        assert!("C.1.0".parse::<ObisCode>().is_err());
        assert!("1..0".parse::<ObisCode>().is_err());
        match "1.x.0".parse::<ObisCode>() {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_units() {
        assert_eq!(ObisCode::ACTIVE_IMPORT.canonical_unit(), "kWh");
        assert_eq!(ObisCode::new(3, 8, 0).canonical_unit(), "kvarh");
        assert_eq!(ObisCode::new(32, 7, 0).canonical_unit(), "V");
        assert_eq!(ObisCode::new(0, 0, 0).canonical_unit(), "");
    }
}
