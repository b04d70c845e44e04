use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parse_data_line, serialize_data_line, DataLine, Error, Result};

pub const STX: u8 = 0x02;
pub const ETX: u8 = 0x03;
pub const ACK: u8 = 0x06;
pub const CR_LF: &[u8] = b"\r\n";

/// Leading escape sequence of an SML transport frame.
pub const SML_ESCAPE: [u8; 8] = [0x1b, 0x1b, 0x1b, 0x1b, 0x01, 0x01, 0x01, 0x01];

/// XOR of every byte in `span`. For a data message the span starts after STX
/// and ends with ETX inclusive.
pub fn compute_bcc(span: &[u8]) -> u8 {
    span.iter().fold(0, |acc, b| acc ^ b)
}

/// Meter identification message `/XXXZ<ident>\r\n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identification {
    pub manufacturer: String,
    pub baud_char: char,
    pub ident: String,
}

impl Identification {
    /// Parses an identification message including its trailing CR LF.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.first() != Some(&b'/') {
            return Err(Error::parse(0, "identification must start with '/'"));
        }
        if !bytes.ends_with(CR_LF) {
            return Err(Error::parse(bytes.len(), "identification must end with CR LF"));
        }
        let body = &bytes[1..bytes.len() - 2];
        if body.len() < 5 {
            return Err(Error::parse(bytes.len() - 2, "identification too short"));
        }
        if let Some(pos) = body.iter().position(|b| !b.is_ascii_graphic() && *b != b' ') {
            return Err(Error::parse(pos + 1, "non-printable byte in identification"));
        }
        if let Some(pos) = body[..3].iter().position(|b| !b.is_ascii_alphabetic()) {
            return Err(Error::parse(pos + 1, "manufacturer tag must be three letters"));
        }
        let ident = &body[4..];
        if ident.len() > 16 + 2 {
            return Err(Error::parse(5, "device identification longer than 16 characters"));
        }
        Ok(Identification {
            manufacturer: String::from_utf8_lossy(&body[..3]).into_owned(),
            baud_char: char::from(body[3]),
            ident: String::from_utf8_lossy(ident).into_owned(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.ident.len() + 7);
        out.push(b'/');
        out.extend_from_slice(self.manufacturer.as_bytes());
        let mut buf = [0u8; 4];
        out.extend_from_slice(self.baud_char.encode_utf8(&mut buf).as_bytes());
        out.extend_from_slice(self.ident.as_bytes());
        out.extend_from_slice(CR_LF);
        out
    }

    /// Mode E meters put the `\W` escape right after the baud character.
    pub fn is_mode_e(&self) -> bool {
        self.ident.starts_with('\\')
    }
}

impl fmt::Display for Identification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}{}{}", self.manufacturer, self.baud_char, self.ident)
    }
}

/// A complete readout: optional identification followed by the data message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataMessage {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub identification: Option<Identification>,
    pub lines: Vec<DataLine>,
    pub bcc: u8,
}

impl DataMessage {
    pub fn new(identification: Option<Identification>, lines: Vec<DataLine>) -> Self {
        let mut message = DataMessage {
            identification,
            lines,
            bcc: 0,
        };
        message.bcc = compute_bcc(&message.checked_span());
        message
    }

    fn checked_span(&self) -> Vec<u8> {
        let mut span = Vec::new();
        for line in &self.lines {
            span.extend_from_slice(serialize_data_line(line).as_bytes());
            span.extend_from_slice(CR_LF);
        }
        span.extend_from_slice(b"!\r\n");
        span.push(ETX);
        span
    }
}

/// Writes `message` as `[ident] STX lines "!" CR LF ETX BCC`. The BCC is
/// recomputed from the lines.
pub fn serialize_readout(message: &DataMessage) -> Vec<u8> {
    let mut out = Vec::new();
    if let Some(ident) = &message.identification {
        out.extend(ident.to_bytes());
    }
    out.push(STX);
    let span = message.checked_span();
    let bcc = compute_bcc(&span);
    out.extend(span);
    out.push(bcc);
    out
}

pub fn parse_readout(frame: &[u8]) -> Result<DataMessage> {
    if frame.starts_with(&SML_ESCAPE) {
        return Err(Error::UnsupportedProtocol("SML".into()));
    }

    let (identification, rest, base) = if frame.first() == Some(&b'/') {
        let end = frame
            .windows(2)
            .position(|w| w == CR_LF)
            .ok_or_else(|| Error::Framing("identification without CR LF".into()))?
            + 2;
        (Some(Identification::parse(&frame[..end])?), &frame[end..], end)
    } else {
        (None, frame, 0)
    };

    if rest.first() != Some(&STX) {
        return Err(Error::Framing(format!("expected STX at byte {base}")));
    }
    let etx = rest
        .iter()
        .position(|&b| b == ETX)
        .ok_or_else(|| Error::Framing("missing ETX".into()))?;
    match rest.len() - etx {
        1 => return Err(Error::Framing("missing block check character".into())),
        2 => {}
        _ => {
            return Err(Error::Framing(format!(
                "{} bytes after block check character",
                rest.len() - etx - 2
            )))
        }
    }
    let span = &rest[1..=etx];
    let stored = rest[etx + 1];
    let computed = compute_bcc(span);
    if stored != computed {
        return Err(Error::BccMismatch { stored, computed });
    }

    let block = &span[..span.len() - 1];
    let block_offset = base + 1;
    let text = std::str::from_utf8(block)
        .map_err(|e| Error::parse(block_offset + e.valid_up_to(), "data block is not text"))?;
    let body = if text.is_empty() {
        ""
    } else {
        text.strip_suffix("!\r\n")
            .ok_or_else(|| Error::Framing("data block must end with \"!\" CR LF".into()))?
    };

    let mut lines = Vec::new();
    if !body.is_empty() {
        let body = body
            .strip_suffix("\r\n")
            .ok_or_else(|| Error::Framing("last data line lacks CR LF".into()))?;
        for (index, raw) in body.split("\r\n").enumerate() {
            let line = parse_data_line(raw).map_err(|e| Error::Line {
                index,
                source: Box::new(e),
            })?;
            lines.push(line);
        }
    }

    Ok(DataMessage {
        identification,
        lines,
        bcc: stored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obis::ObisCode;
    use proptest::prelude::*;
    use rust_decimal::Decimal;
    use std::str::FromStr;

    fn three_line_frame() -> Vec<u8> {
        let mut frame = b"/ISK5ME162-0033\r\n".to_vec();
        frame.push(STX);
        let start = frame.len();
        frame.extend_from_slice(b"1.8.0(012345.678*kWh)\r\n2.8.0(000010.250*kWh)\r\n3.8.0(000421.007*kvarh)\r\n!\r\n");
        frame.push(ETX);
        let bcc = compute_bcc(&frame[start..]);
        frame.push(bcc);
        frame
    }

    #[test]
    fn bcc_examples() {
        assert_eq!(compute_bcc(&[]), 0x00);
        assert_eq!(compute_bcc(&[0x31, 0x2E, 0x38]), 0x27);
    }

    proptest! {
        #[test]
        fn bcc_is_self_inverse(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
            let mut framed = bytes.clone();
            framed.push(compute_bcc(&bytes));
            prop_assert_eq!(compute_bcc(&framed), 0);
        }

        #[test]
        fn single_byte_corruption_in_span_is_detected(pos in 0usize..64, flip in 1u8..=255) {
            let frame = three_line_frame();
            let stx = frame.iter().position(|&b| b == STX).unwrap();
            let span_len = frame.len() - stx - 2;
            let idx = stx + 1 + pos % span_len;
            let mut span = frame[stx + 1..frame.len() - 1].to_vec();
            let before = compute_bcc(&span);
            span[idx - stx - 1] ^= flip;
            prop_assert_ne!(compute_bcc(&span), before);
        }
    }

    #[test]
    fn parses_three_line_frame() {
        let message = parse_readout(&three_line_frame()).unwrap();
        let ident = message.identification.as_ref().unwrap();
        assert_eq!(ident.manufacturer, "ISK");
        assert_eq!(ident.baud_char, '5');
        assert_eq!(ident.ident, "ME162-0033");
        assert_eq!(message.lines.len(), 3);
        assert_eq!(message.lines[0].obis, ObisCode::new(1, 8, 0));
        assert_eq!(message.lines[1].value, Decimal::from_str("10.25").unwrap());
        assert_eq!(message.lines[2].unit.as_deref(), Some("kvarh"));
        assert_eq!(serialize_readout(&message), three_line_frame());
    }

    #[test]
    fn flipped_value_bit_is_a_bcc_mismatch() {
        let mut frame = three_line_frame();
        let pos = frame.windows(6).position(|w| w == b"012345").unwrap();
        frame[pos + 3] ^= 0x01;
        assert!(matches!(parse_readout(&frame), Err(Error::BccMismatch { .. })));
    }

    #[test]
    fn empty_block_with_valid_bcc() {
        let frame = [STX, ETX, ETX];
        assert_eq!(parse_readout(&frame).unwrap().lines.len(), 0);
        let mut frame = vec![STX];
        frame.extend_from_slice(b"!\r\n");
        frame.push(ETX);
        frame.push(compute_bcc(&frame[1..]));
        let message = parse_readout(&frame).unwrap();
        assert!(message.lines.is_empty());
        assert_eq!(serialize_readout(&message), frame);
    }

    #[test]
    fn line_error_reports_index() {
        let mut frame = vec![STX];
        frame.extend_from_slice(b"1.8.0(1*kWh)\r\n1.8.1(2)(3)\r\n!\r\n");
        frame.push(ETX);
        frame.push(compute_bcc(&frame[1..]));
        match parse_readout(&frame) {
            Err(Error::Line { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn framing_errors() {
        assert!(matches!(parse_readout(b"1.8.0(1)"), Err(Error::Framing(_))));
        assert!(matches!(parse_readout(&[STX, b'!']), Err(Error::Framing(_))));
        assert!(matches!(parse_readout(&[STX, ETX]), Err(Error::Framing(_))));
        assert!(matches!(parse_readout(&[STX, ETX, ETX, 0]), Err(Error::Framing(_))));
    }

    #[test]
    fn sml_is_recognised_and_rejected() {
        let mut frame = SML_ESCAPE.to_vec();
        frame.extend_from_slice(&[0x76, 0x05]);
        assert_eq!(parse_readout(&frame), Err(Error::UnsupportedProtocol("SML".into())));
    }
}
