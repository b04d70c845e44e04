use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::{Error, ObisCode, Result};

/// Zero-padding applied to a register value when it is written back out.
///
/// Parsing records the widths seen in the frame so that serializing the same
/// line reproduces it byte for byte. Lines built in code default to 6.3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValueFormat {
    pub int_digits: u8,
    pub frac_digits: u8,
}

impl Default for ValueFormat {
    fn default() -> Self {
        ValueFormat {
            int_digits: 6,
            frac_digits: 3,
        }
    }
}

/// One `ADDRESS(VALUE*UNIT)` data set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataLine {
    pub obis: ObisCode,
    #[serde(with = "rust_decimal::serde::str")]
    pub value: Decimal,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unit: Option<String>,
    #[serde(skip)]
    pub format: ValueFormat,
}

impl DataLine {
    /// Builds a line with the default 6.3 layout, widened when the value
    /// needs more digits than that.
    pub fn new(obis: ObisCode, value: Decimal, unit: Option<String>) -> Self {
        let format = ValueFormat::default();
        let format = ValueFormat {
            int_digits: format.int_digits.max(int_len(&value)),
            frac_digits: format.frac_digits.max(value.scale() as u8),
        };
        DataLine {
            obis,
            value,
            unit,
            format,
        }
    }
}

fn int_len(value: &Decimal) -> u8 {
    let text = value.trunc().abs().to_string();
    text.len() as u8
}

fn is_unit_byte(b: u8) -> bool {
    b.is_ascii_graphic() && !matches!(b, b'(' | b')' | b'*' | b'!' | b'/')
}

/// Parses a single data set. Offsets in errors are byte positions within
/// `text`.
pub fn parse_data_line(text: &str) -> Result<DataLine> {
    let open = text.find('(').ok_or_else(|| Error::parse(text.len(), "missing '('"))?;
    let obis: ObisCode = text[..open].parse()?;

    let body_start = open + 1;
    let close_rel = text[body_start..]
        .find(')')
        .ok_or_else(|| Error::parse(text.len(), "unbalanced parentheses"))?;
    let close = body_start + close_rel;
    let body = &text[body_start..close];
    if body.contains('(') {
        return Err(Error::parse(body_start + body.find('(').unwrap_or(0), "nested '('"));
    }
    if close + 1 != text.len() {
        return Err(Error::parse(close + 1, "trailing characters after ')'"));
    }

    let (value_text, unit) = match body.find('*') {
        Some(star) => {
            let unit = &body[star + 1..];
            if unit.is_empty() {
                return Err(Error::parse(body_start + star + 1, "empty unit"));
            }
            if let Some(pos) = unit.bytes().position(|b| !is_unit_byte(b)) {
                return Err(Error::parse(body_start + star + 1 + pos, "invalid unit character"));
            }
            (&body[..star], Some(unit.to_string()))
        }
        None => (body, None),
    };
    let (value, format) = parse_value(value_text, body_start)?;
    Ok(DataLine {
        obis,
        value,
        unit,
        format,
    })
}

fn parse_value(text: &str, offset: usize) -> Result<(Decimal, ValueFormat)> {
    if text.is_empty() {
        return Err(Error::parse(offset, "empty value"));
    }
    let (negative, digits, digits_offset) = match text.as_bytes()[0] {
        b'-' => (true, &text[1..], offset + 1),
        b'+' => (false, &text[1..], offset + 1),
        _ => (false, text, offset),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() {
        return Err(Error::parse(digits_offset, "missing integer digits"));
    }
    if let Some(pos) = digits.bytes().position(|b| !(b.is_ascii_digit() || b == b'.')) {
        return Err(Error::parse(digits_offset + pos, "non-numeric value"));
    }
    if frac_part.contains('.') || (digits.contains('.') && frac_part.is_empty()) {
        return Err(Error::parse(digits_offset, "malformed decimal point"));
    }
    if int_part.len() > u8::MAX as usize || frac_part.len() > 28 {
        return Err(Error::parse(digits_offset, "value has too many digits"));
    }

    let mut mantissa: i128 = 0;
    for b in int_part.bytes().chain(frac_part.bytes()) {
        mantissa = mantissa
            .checked_mul(10)
            .and_then(|m| m.checked_add(i128::from(b - b'0')))
            .ok_or_else(|| Error::parse(digits_offset, "value out of range"))?;
    }
    if negative {
        mantissa = -mantissa;
    }
    let value = Decimal::try_from_i128_with_scale(mantissa, frac_part.len() as u32)
        .map_err(|_| Error::parse(digits_offset, "value out of range"))?;
    Ok((
        value,
        ValueFormat {
            int_digits: int_part.len() as u8,
            frac_digits: frac_part.len() as u8,
        },
    ))
}

fn format_value(value: &Decimal, format: ValueFormat) -> String {
    let text = value.abs().to_string();
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let int_width = usize::from(format.int_digits).max(int_part.len());
    let frac_width = usize::from(format.frac_digits).max(frac_part.len());
    let mut out = String::with_capacity(int_width + frac_width + 2);
    if value.is_sign_negative() && !value.is_zero() {
        out.push('-');
    }
    out.extend(std::iter::repeat_n('0', int_width - int_part.len()));
    out.push_str(int_part);
    if frac_width > 0 {
        out.push('.');
        out.push_str(frac_part);
        out.extend(std::iter::repeat_n('0', frac_width - frac_part.len()));
    }
    out
}

pub fn serialize_data_line(line: &DataLine) -> String {
    let value = format_value(&line.value, line.format);
    match &line.unit {
        Some(unit) => format!("{}({}*{})", line.obis, value, unit),
        None => format!("{}({})", line.obis, value),
    }
}
