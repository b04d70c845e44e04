//! Executable model of a beacon-based electricity metering system: optical
//! meter readout, beacon storage and uplink planning, LoRa airtime and
//! energy budgeting, indoor/outdoor propagation fitting, a discrete-event
//! uplink simulator, and a file-backed metering data platform.

pub mod beacon;
pub mod netsim;
pub mod obis;
pub mod phy;
pub mod platform;
pub mod propagation;
