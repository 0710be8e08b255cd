//! Event queue and the event log digest.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Broadcast,
    DownlinkArrive,
    Dropout,
    TrainDone,
    UplinkArrive,
    EdgeAggregate,
    Aggregate,
    Merge,
    DiscardStale,
    DiscardRound,
    Gossip,
    ServerCrash,
    LabelDrift,
    ReplacementTrigger,
    Evaluate,
}

impl EventKind {
    fn code(self) -> u8 {
        self as u8
    }
}

/// A scheduled event.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<T> {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
    /// Client id, edge id, or `u64::MAX` for the server.
    pub actor: u64,
    pub bytes: u64,
    pub payload: T,
}

struct Entry<T>(Event<T>);

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Entry<T> {}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Entry<T> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.time.total_cmp(&self.0.time).then(other.0.seq.cmp(&self.0.seq))
    }
}

/// Pending events dequeued in `(time, sequence number)` order. Sequence
/// numbers are assigned at enqueue, which fixes the order of simultaneous
/// events.
pub struct EventQueue<T> {
    heap: BinaryHeap<Entry<T>>,
    next_seq: u64,
    now: f64,
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), next_seq: 0, now: 0.0 }
    }
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind, actor: u64, bytes: u64, payload: T) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event { time, seq, kind, actor, bytes, payload }));
        seq
    }

    pub fn pop(&mut self) -> Option<Event<T>> {
        let event = self.heap.pop()?.0;
        self.now = self.now.max(event.time);
        Some(event)
    }
}

/// One processed event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub time: f64,
    pub event: EventKind,
    pub actor: u64,
    pub bytes: u64,
}

/// Running SHA-256 over every processed event, optionally keeping the records.
#[derive(Clone)]
pub struct EventLog {
    hasher: Sha256,
    count: u64,
    keep: bool,
    records: Vec<LogRecord>,
}

impl EventLog {
    pub fn new(keep_records: bool) -> Self {
        EventLog { hasher: Sha256::new(), count: 0, keep: keep_records, records: Vec::new() }
    }

    pub fn record(&mut self, time: f64, event: EventKind, actor: u64, bytes: u64) {
        self.hasher.update(time.to_bits().to_le_bytes());
        self.hasher.update([event.code()]);
        self.hasher.update(actor.to_le_bytes());
        self.hasher.update(bytes.to_le_bytes());
        self.count += 1;
        if self.keep {
            self.records.push(LogRecord { time, event, actor, bytes });
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn digest_hex(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }

    pub fn into_records(self) -> Vec<LogRecord> {
        self.records
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_time_then_sequence_order() {
        let mut q = EventQueue::new();
        q.schedule(2.0, EventKind::Merge, 0, 0, 'a');
        q.schedule(1.0, EventKind::Merge, 1, 0, 'b');
        q.schedule(2.0, EventKind::Merge, 2, 0, 'c');
        q.schedule(1.0, EventKind::Merge, 3, 0, 'd');
        let order: Vec<char> = core::iter::from_fn(|| q.pop().map(|e| e.payload)).collect();
        assert_eq!(order, ['b', 'd', 'a', 'c']);
        assert_eq!(q.now(), 2.0);
    }

    #[test]
    fn digest_depends_on_every_field() {
        let digest = |t: f64, k, a, b| {
            let mut log = EventLog::new(false);
            log.record(t, k, a, b);
            log.digest_hex()
        };
        let base = digest(1.0, EventKind::Aggregate, 1, 10);
        assert_eq!(base, digest(1.0, EventKind::Aggregate, 1, 10));
        assert_ne!(base, digest(1.5, EventKind::Aggregate, 1, 10));
        assert_ne!(base, digest(1.0, EventKind::Merge, 1, 10));
        assert_ne!(base, digest(1.0, EventKind::Aggregate, 2, 10));
        assert_ne!(base, digest(1.0, EventKind::Aggregate, 1, 11));
    }
}
