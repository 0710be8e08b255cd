//! Message accounting on simulated links.

use serde::{Deserialize, Serialize};

/// Bytes of the fixed message header.
pub const HEADER_BYTES: u64 = 16;

/// Wire size of an uncompressed model of `d` doubles.
pub const fn model_payload_bytes(d: usize) -> u64 {
    8 * d as u64 + HEADER_BYTES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Uplink,
    Downlink,
    Peer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// Client and central server.
    ClientServer,
    /// Client and edge aggregator.
    ClientEdge,
    /// Edge aggregator and central server.
    EdgeCentral,
    /// Client to client.
    Peer,
}

impl Link {
    fn touches_central(self) -> bool {
        matches!(self, Link::ClientServer | Link::EdgeCentral)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficCounters {
    pub bytes_uplink: u64,
    pub bytes_downlink: u64,
    pub bytes_peer: u64,
    /// Uplink bytes arriving at the central server.
    pub central_uplink_bytes: u64,
    /// Downlink bytes leaving the central server.
    pub central_downlink_bytes: u64,
    pub uplink_messages: u64,
    pub downlink_messages: u64,
    pub peer_messages: u64,
}

impl TrafficCounters {
    pub fn total_bytes(&self) -> u64 {
        self.bytes_uplink + self.bytes_downlink + self.bytes_peer
    }
}

/// Records one message and returns its transfer time,
/// `latency + bytes / bandwidth`.
pub fn account_message(
    counters: &mut TrafficCounters,
    direction: Direction,
    payload_bytes: u64,
    link: Link,
    bandwidth: f64,
    latency: f64,
) -> f64 {
    match direction {
        Direction::Uplink => {
            counters.bytes_uplink += payload_bytes;
            counters.uplink_messages += 1;
            if link.touches_central() {
                counters.central_uplink_bytes += payload_bytes;
            }
        }
        Direction::Downlink => {
            counters.bytes_downlink += payload_bytes;
            counters.downlink_messages += 1;
            if link.touches_central() {
                counters.central_downlink_bytes += payload_bytes;
            }
        }
        Direction::Peer => {
            counters.bytes_peer += payload_bytes;
            counters.peer_messages += 1;
        }
    }
    latency + payload_bytes as f64 / bandwidth
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfer_time_arithmetic() {
        let mut c = TrafficCounters::default();
        let t = account_message(&mut c, Direction::Uplink, 1000, Link::ClientServer, 1000.0, 0.1);
        assert!((t - 1.1).abs() < 1e-15);
        assert_eq!(c.bytes_uplink, 1000);
        assert_eq!(c.central_uplink_bytes, 1000);
    }

    #[test]
    fn counters_add_up() {
        let mut c = TrafficCounters::default();
        account_message(&mut c, Direction::Downlink, 300, Link::ClientEdge, 1.0, 0.0);
        account_message(&mut c, Direction::Downlink, 500, Link::EdgeCentral, 1.0, 0.0);
        assert_eq!(c.bytes_downlink, 800);
        assert_eq!(c.central_downlink_bytes, 500);
        assert_eq!(c.downlink_messages, 2);
        account_message(&mut c, Direction::Peer, 7, Link::Peer, 1.0, 0.0);
        assert_eq!(c.total_bytes(), 807);
    }

    #[test]
    fn wire_size() {
        assert_eq!(model_payload_bytes(1000), 8016);
        assert_eq!(model_payload_bytes(0), 16);
    }
}
