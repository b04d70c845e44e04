//! IEC 62056-21 optical readout (mode C) and LED impulse counting.
//!
//! A beacon obtains meter data in one of two ways: it negotiates a readout
//! over the optical port and parses the returned data message, or it counts
//! the impulses emitted by the meter's test LED.

mod code;
mod frame;
mod handshake;
mod impulse;
mod line;

pub use code::ObisCode;
pub use frame::{
    compute_bcc, parse_readout, serialize_readout, DataMessage, Identification, ACK, CR_LF, ETX, SML_ESCAPE, STX,
};
pub use handshake::{baud_for_char, handshake_next, HandshakeState, Phase, BAUD_TABLE};
pub use impulse::{count_impulses, ImpulseStream};
pub use line::{parse_data_line, serialize_data_line, DataLine, ValueFormat};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("line {index}: {source}")]
    Line {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("framing error: {0}")]
    Framing(String),
    #[error("block check mismatch: stored {stored:#04x}, computed {computed:#04x}")]
    BccMismatch { stored: u8, computed: u8 },
    #[error("unsupported protocol: {0}")]
    UnsupportedProtocol(String),
    #[error("invalid OBIS code component {0}")]
    InvalidObis(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn parse(offset: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
