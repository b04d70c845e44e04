//! Uplink payload format.
//!
//! ```text
//! u8      version (0x01)
//! u32 BE  timestamp of the first record, epoch seconds
//! u8      register count R
//! R x     u8 C, u8 D, u8 E
//!         u8 (exponent << 4) | mantissa length, exponent signed 4-bit
//!         mantissa: big-endian two's complement, `length` bytes (0 => zero)
//! then, per further record until the end of the payload:
//!         varint zigzag(timestamp delta)
//!         R x varint zigzag(mantissa delta), at the first record's exponent
//! ```
//! Varints are LEB128. Units are not carried; each register decodes with
//! its canonical unit.

use rust_decimal::Decimal;

use super::{Error, MeterRecord, Reading, Result};
use crate::obis::ObisCode;

pub const UPLINK_VERSION: u8 = 0x01;

const MAX_DECIMALS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedUplink {
    pub payload: Vec<u8>,
    /// Leading records of the input that made it into `payload`.
    pub records: usize,
}

fn zigzag(v: i128) -> u128 {
    ((v << 1) ^ (v >> 127)) as u128
}

fn unzigzag(v: u128) -> i128 {
    ((v >> 1) as i128) ^ -((v & 1) as i128)
}

fn put_varint(out: &mut Vec<u8>, mut v: u128) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn mantissa_bytes(m: i128) -> Vec<u8> {
    if m == 0 {
        return Vec::new();
    }
    let full = m.to_be_bytes();
    let mut start = 0;
    while start < full.len() - 1 {
        let redundant = (full[start] == 0x00 && full[start + 1] & 0x80 == 0)
            || (full[start] == 0xff && full[start + 1] & 0x80 != 0);
        if !redundant {
            break;
        }
        start += 1;
    }
    full[start..].to_vec()
}

/// Mantissa of `value` at `decimals` places, if exact.
fn mantissa_at(value: &Decimal, decimals: u32) -> Option<i128> {
    let v = if value.scale() > decimals {
        value.normalize()
    } else {
        *value
    };
    if v.scale() > decimals {
        return None;
    }
    10i128
        .checked_pow(decimals - v.scale())
        .and_then(|f| v.mantissa().checked_mul(f))
}

fn check_record(record: &MeterRecord) -> Result<()> {
    if !(0..=i64::from(u32::MAX)).contains(&record.timestamp) {
        return Err(Error::TimestampOutOfRange(record.timestamp));
    }
    for r in &record.readings {
        let expected = r.obis.canonical_unit();
        if r.unit != expected {
            return Err(Error::NonCanonicalUnit {
                obis: r.obis,
                unit: r.unit.clone(),
                expected,
            });
        }
    }
    Ok(())
}

/// Packs as many leading `records` as fit in `limit` bytes. Packing stops
/// early at a record whose register list differs from the first one or whose
/// values need more decimals than the first record's.
pub fn encode_uplink(records: &[MeterRecord], limit: usize) -> Result<EncodedUplink> {
    let first = records.first().ok_or(Error::EmptyUplink)?;
    check_record(first)?;
    if first.readings.len() > usize::from(u8::MAX) {
        return Err(Error::Malformed("more than 255 registers".into()));
    }

    let mut payload = vec![UPLINK_VERSION];
    payload.extend_from_slice(&(first.timestamp as u32).to_be_bytes());
    payload.push(first.readings.len() as u8);

    let mut decimals = Vec::with_capacity(first.readings.len());
    let mut previous = Vec::with_capacity(first.readings.len());
    for r in &first.readings {
        let scale = if r.value.scale() > MAX_DECIMALS {
            r.value.normalize().scale()
        } else {
            r.value.scale()
        };
        if scale > MAX_DECIMALS {
            return Err(Error::ValueNotEncodable(r.value));
        }
        let m = mantissa_at(&r.value, scale).ok_or(Error::ValueNotEncodable(r.value))?;
        let bytes = mantissa_bytes(m);
        let exponent = (-(scale as i8)) as u8 & 0x0f;
        payload.extend_from_slice(&[r.obis.c, r.obis.d, r.obis.e]);
        payload.push((exponent << 4) | bytes.len() as u8);
        payload.extend(bytes);
        decimals.push(scale);
        previous.push(m);
    }
    if payload.len() > limit {
        return Err(Error::RecordTooLarge {
            needed: payload.len(),
            limit,
        });
    }

    let mut packed = 1;
    let mut prev_ts = first.timestamp;
    'records: for record in &records[1..] {
        let same_registers = record.readings.len() == first.readings.len()
            && record
                .readings
                .iter()
                .zip(&first.readings)
                .all(|(a, b)| short_code(a.obis) == short_code(b.obis));
        if !same_registers {
            break;
        }
        check_record(record)?;
        let mut chunk = Vec::new();
        put_varint(&mut chunk, zigzag(i128::from(record.timestamp - prev_ts)));
        let mut mantissas = Vec::with_capacity(record.readings.len());
        for ((r, &scale), &prev) in record.readings.iter().zip(&decimals).zip(&previous) {
            let Some(m) = mantissa_at(&r.value, scale) else {
                break 'records;
            };
            let Some(delta) = m.checked_sub(prev) else {
                break 'records;
            };
            put_varint(&mut chunk, zigzag(delta));
            mantissas.push(m);
        }
        if payload.len() + chunk.len() > limit {
            break;
        }
        payload.extend(chunk);
        previous = mantissas;
        prev_ts = record.timestamp;
        packed += 1;
    }

    Ok(EncodedUplink {
        payload,
        records: packed,
    })
}

fn short_code(code: ObisCode) -> (u8, u8, u8) {
    (code.c, code.d, code.e)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or(Error::Truncated(self.bytes.len()))?;
        self.pos = end;
        Ok(slice)
    }

    fn varint(&mut self) -> Result<u128> {
        let mut value: u128 = 0;
        for shift in (0..128).step_by(7) {
            let byte = self.take(1)?[0];
            value |= u128::from(byte & 0x7f)
                .checked_shl(shift)
                .filter(|v| v >> shift == u128::from(byte & 0x7f))
                .ok_or_else(|| Error::Malformed(format!("varint overflow at byte {}", self.pos)))?;
            if byte & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(Error::Malformed(format!("varint too long at byte {}", self.pos)))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn to_decimal(mantissa: i128, exponent: i8) -> Result<Decimal> {
    let value = if exponent <= 0 {
        Decimal::try_from_i128_with_scale(mantissa, u32::from(exponent.unsigned_abs()))
    } else {
        10i128
            .checked_pow(exponent as u32)
            .and_then(|f| mantissa.checked_mul(f))
            .ok_or(rust_decimal::Error::ExceedsMaximumPossibleValue)
            .and_then(|m| Decimal::try_from_i128_with_scale(m, 0))
    };
    value.map_err(|_| Error::Malformed(format!("value {mantissa}e{exponent} out of range")))
}

pub fn decode_uplink(payload: &[u8]) -> Result<Vec<MeterRecord>> {
    let mut cur = Cursor { bytes: payload, pos: 0 };
    let version = cur.take(1)?[0];
    if version != UPLINK_VERSION {
        return Err(Error::UnknownVersion(version));
    }
    let ts = cur.take(4)?;
    let mut timestamp = i64::from(u32::from_be_bytes([ts[0], ts[1], ts[2], ts[3]]));
    let count = usize::from(cur.take(1)?[0]);

    let mut codes = Vec::with_capacity(count);
    let mut exponents = Vec::with_capacity(count);
    let mut mantissas = Vec::with_capacity(count);
    for _ in 0..count {
        let cde = cur.take(3)?;
        let code = ObisCode::new(cde[0], cde[1], cde[2]);
        let packed = cur.take(1)?[0];
        let exponent = (packed as i8) >> 4;
        let len = usize::from(packed & 0x0f);
        let raw = cur.take(len)?;
        let mut m: i128 = if raw.first().is_some_and(|b| b & 0x80 != 0) {
            -1
        } else {
            0
        };
        for &b in raw {
            m = (m << 8) | i128::from(b);
        }
        codes.push(code);
        exponents.push(exponent);
        mantissas.push(m);
    }

    let build = |timestamp: i64, mantissas: &[i128]| -> Result<MeterRecord> {
        let readings = codes
            .iter()
            .zip(exponents.iter())
            .zip(mantissas)
            .map(|((&code, &exp), &m)| Ok(Reading::new(code, to_decimal(m, exp)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MeterRecord { timestamp, readings })
    };

    let mut records = vec![build(timestamp, &mantissas)?];
    while !cur.done() {
        let dt = unzigzag(cur.varint()?);
        timestamp =
            i64::try_from(i128::from(timestamp) + dt).map_err(|_| Error::Malformed("timestamp overflow".into()))?;
        for m in mantissas.iter_mut() {
            *m = m
                .checked_add(unzigzag(cur.varint()?))
                .ok_or_else(|| Error::Malformed("mantissa overflow".into()))?;
        }
        records.push(build(timestamp, &mantissas)?);
    }
    Ok(records)
}
