use serde::{Deserialize, Serialize};

use super::frame::{parse_readout, DataMessage, Identification, ACK, CR_LF, ETX, STX};

/// Mode C baud characters '0'..'6'.
pub const BAUD_TABLE: [u32; 7] = [300, 600, 1200, 2400, 4800, 9600, 19200];

const SIGN_ON: &[u8] = b"/?!\r\n";
const INITIAL_BAUD: u32 = 300;

pub fn baud_for_char(c: char) -> Option<u32> {
    let index = (c as u32).checked_sub('0' as u32)?;
    BAUD_TABLE.get(index as usize).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Idle,
    SignOnSent,
    IdentReceived,
    AckSent,
    DataReceiving,
    Done,
    Error,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Error)
    }
}

/// Master side of a mode C readout session.
///
/// Transitions:
/// `Idle --""--> SignOnSent --ident--> IdentReceived --""--> AckSent
///  --STX..--> DataReceiving --..ETX BCC--> Done`.
/// The empty step after the identification is where the master waits out
/// the meter's reaction time before acknowledging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeState {
    pub phase: Phase,
    pub negotiated_baud: u32,
    pub identification: Option<Identification>,
    pub message: Option<DataMessage>,
    pub reason: Option<String>,
    buffer: Vec<u8>,
}

impl Default for HandshakeState {
    fn default() -> Self {
        HandshakeState {
            phase: Phase::Idle,
            negotiated_baud: INITIAL_BAUD,
            identification: None,
            message: None,
            reason: None,
            buffer: Vec::new(),
        }
    }
}

impl HandshakeState {
    pub fn new() -> Self {
        Self::default()
    }

    fn fail(mut self, reason: impl Into<String>) -> (Self, Vec<u8>) {
        self.phase = Phase::Error;
        self.reason = Some(reason.into());
        self.buffer.clear();
        (self, Vec::new())
    }

    fn to(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }
}

/// Advances the session with the peer's next bytes. Partial messages are
/// buffered until complete.
pub fn handshake_next(state: HandshakeState, input: &[u8]) -> (HandshakeState, Vec<u8>) {
    match state.phase {
        Phase::Done | Phase::Error => (state, Vec::new()),
        Phase::Idle => {
            if !input.is_empty() {
                return state.fail("unexpected data before sign-on");
            }
            (state.to(Phase::SignOnSent), SIGN_ON.to_vec())
        }
        Phase::SignOnSent => {
            let mut state = state;
            state.buffer.extend_from_slice(input);
            if state.buffer.first().is_some_and(|&b| b != b'/') {
                return state.fail("expected identification message");
            }
            if !state.buffer.ends_with(CR_LF) {
                if state.buffer.windows(2).any(|w| w == CR_LF) {
                    return state.fail("trailing bytes after identification");
                }
                return (state, Vec::new());
            }
            let ident = match Identification::parse(&state.buffer) {
                Ok(ident) => ident,
                Err(e) => return state.fail(format!("malformed identification: {e}")),
            };
            if ident.is_mode_e() {
                return state.fail("mode E is not supported");
            }
            let baud = match ident.baud_char {
                c @ 'A'..='I' => return state.fail(format!("mode B baud character '{c}' is not supported")),
                c => match baud_for_char(c) {
                    Some(baud) => baud,
                    None => return state.fail(format!("unknown baud character {c:?}")),
                },
            };
            state.buffer.clear();
            state.negotiated_baud = baud;
            state.identification = Some(ident);
            (state.to(Phase::IdentReceived), Vec::new())
        }
        Phase::IdentReceived => {
            if !input.is_empty() {
                return state.fail("unexpected data before acknowledgement");
            }
            let baud_char = state.identification.as_ref().map(|i| i.baud_char).unwrap_or('0');
            let mut ack = vec![ACK, b'0'];
            ack.push(baud_char as u8);
            ack.push(b'0');
            ack.extend_from_slice(CR_LF);
            (state.to(Phase::AckSent), ack)
        }
        Phase::AckSent | Phase::DataReceiving => {
            let mut state = state;
            state.buffer.extend_from_slice(input);
            if state.buffer.is_empty() {
                return (state, Vec::new());
            }
            if state.buffer[0] != STX {
                return state.fail("expected STX");
            }
            let complete = state
                .buffer
                .iter()
                .position(|&b| b == ETX)
                .is_some_and(|etx| state.buffer.len() > etx + 1);
            if !complete {
                return (state.to(Phase::DataReceiving), Vec::new());
            }
            let mut frame = Vec::new();
            if let Some(ident) = &state.identification {
                frame.extend(ident.to_bytes());
            }
            frame.append(&mut state.buffer);
            match parse_readout(&frame) {
                Ok(message) => {
                    state.message = Some(message);
                    (state.to(Phase::Done), Vec::new())
                }
                Err(e) => state.fail(format!("bad data message: {e}")),
            }
        }
    }
}
