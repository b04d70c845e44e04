use std::ops::Range;

use super::{Error, Result};

/// Pulses seen on a meter's test LED, in seconds since an arbitrary origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseStream {
    timestamps: Vec<f64>,
    /// Impulses per kWh, as printed on the meter face.
    pub meter_constant: f64,
}

impl ImpulseStream {
    pub fn new(timestamps: Vec<f64>, meter_constant: f64) -> Result<Self> {
        if !(meter_constant > 0.0 && meter_constant.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "meter constant must be positive, got {meter_constant}"
            )));
        }
        if let Some(i) = timestamps
            .windows(2)
            .position(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidConfig(format!(
                "impulse timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(ImpulseStream {
            timestamps,
            meter_constant,
        })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// Appends a pulse; it must be later than every pulse already seen.
    pub fn push(&mut self, at: f64) -> Result<()> {
        if self.timestamps.last().is_some_and(|&last| at <= last) {
            return Err(Error::InvalidConfig(format!("pulse at {at} is out of order")));
        }
        self.timestamps.push(at);
        Ok(())
    }
}

/// Energy in kWh for pulses inside the half-open `window`.
pub fn count_impulses(stream: &ImpulseStream, window: Range<f64>) -> Result<f64> {
    if stream.meter_constant.is_nan() || stream.meter_constant <= 0.0 {
        return Err(Error::InvalidConfig("meter constant must be positive".into()));
    }
    if window.end < window.start {
        return Err(Error::InvalidConfig("window end precedes start".into()));
    }
    let ts = &stream.timestamps;
    let lo = ts.partition_point(|&t| t < window.start);
    let hi = ts.partition_point(|&t| t < window.end);
    Ok((hi - lo) as f64 / stream.meter_constant)
}
