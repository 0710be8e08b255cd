//! Append-only registries with an optional hash chain.
//!
//! Entry hash is `sha256(prev_hash || json(record))` with the genesis
//! `prev_hash` being 32 zero bytes. Export is one JSON object per line
//! followed by a footer `{"head": ..., "entries": n}`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sim::SimError;

const GENESIS: [u8; 32] = [0; 32];

/// Content hash of a weight vector (little-endian f64 bytes).
pub fn model_hash(weights: &[f64]) -> String {
    let mut h = Sha256::new();
    for w in weights {
        h.update(w.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn link(prev: &[u8], record_json: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(prev);
    h.update(record_json.as_bytes());
    h.finalize().into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainEntry<T> {
    pub index: u64,
    pub record: T,
    /// Hex hash; empty when the log is not chained.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Footer {
    head: Option<String>,
    entries: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashChain<T> {
    chained: bool,
    entries: Vec<ChainEntry<T>>,
    head: [u8; 32],
}

impl<T: Serialize + DeserializeOwned> HashChain<T> {
    pub fn new(chained: bool) -> Self {
        HashChain { chained, entries: Vec::new(), head: GENESIS }
    }

    pub fn append(&mut self, record: T) {
        let index = self.entries.len() as u64;
        let hash = if self.chained {
            let json = serde_json::to_string(&record).expect("record serializes");
            self.head = link(&self.head, &json);
            hex::encode(self.head)
        } else {
            String::new()
        };
        self.entries.push(ChainEntry { index, record, hash });
    }

    pub fn entries(&self) -> &[ChainEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_chained(&self) -> bool {
        self.chained
    }

    /// Hex chain head; `None` when not chained.
    pub fn head(&self) -> Option<String> {
        self.chained.then(|| hex::encode(self.head))
    }

    /// Index of the first entry whose stored hash disagrees with the
    /// recomputed chain, or `None` when the chain is intact.
    pub fn verify(&self) -> Option<usize> {
        if !self.chained {
            return None;
        }
        let mut prev = GENESIS;
        for (i, e) in self.entries.iter().enumerate() {
            let json = serde_json::to_string(&e.record).expect("record serializes");
            prev = link(&prev, &json);
            if e.index != i as u64 || e.hash != hex::encode(prev) {
                return Some(i);
            }
        }
        (prev != self.head).then_some(self.entries.len())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        let footer = Footer { head: self.head(), entries: self.entries.len() as u64 };
        out.push_str(&serde_json::to_string(&footer).expect("footer serializes"));
        out.push('\n');
        out
    }

    /// Parses an export; the footer head becomes the expected head, so
    /// [`verify`](Self::verify) reports any edit.
    pub fn from_jsonl(text: &str) -> Result<Self, SimError> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let (footer, body) = lines.split_last().ok_or_else(|| SimError::Config("empty registry export".into()))?;
        let footer: Footer =
            serde_json::from_str(footer).map_err(|e| SimError::Config(format!("registry footer: {e}")))?;
        let entries = body
            .iter()
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| SimError::Config(format!("registry line {}: {e}", i + 1))))
            .collect::<Result<Vec<ChainEntry<T>>, _>>()?;
        if footer.entries != entries.len() as u64 {
            return Err(SimError::Config("registry footer entry count does not match".into()));
        }
        let mut head = GENESIS;
        if let Some(h) = &footer.head {
            let bytes = hex::decode(h).map_err(|e| SimError::Config(format!("registry head: {e}")))?;
            head = bytes.try_into().map_err(|_| SimError::Config("registry head must be 32 bytes".into()))?;
        }
        Ok(HashChain { chained: footer.head.is_some(), entries, head })
    }
}

/// Device description kept by the client registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMetadata {
    pub os_version: String,
    pub memory_rank: u32,
    pub device_speed: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ClientRecord {
    Registered { client_id: usize, metadata: ClientMetadata },
    Seen { client_id: usize, round: usize, uptime_rounds: usize },
}

/// Participating devices and their activity.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientRegistry {
    pub log: HashChain<ClientRecord>,
    metadata: BTreeMap<usize, ClientMetadata>,
    last_seen: BTreeMap<usize, usize>,
    uptime: BTreeMap<usize, usize>,
}

impl ClientRegistry {
    pub fn new(hash_chained: bool) -> Self {
        ClientRegistry {
            log: HashChain::new(hash_chained),
            metadata: BTreeMap::new(),
            last_seen: BTreeMap::new(),
            uptime: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, client_id: usize, metadata: ClientMetadata) {
        self.metadata.insert(client_id, metadata.clone());
        self.log.append(ClientRecord::Registered { client_id, metadata });
    }

    pub fn seen(&mut self, client_id: usize, round: usize) {
        let uptime = self.uptime.entry(client_id).or_insert(0);
        *uptime += 1;
        self.last_seen.insert(client_id, round);
        self.log.append(ClientRecord::Seen { client_id, round, uptime_rounds: *uptime });
    }

    pub fn metadata(&self, client_id: usize) -> Option<&ClientMetadata> {
        self.metadata.get(&client_id)
    }

    pub fn last_seen(&self, client_id: usize) -> Option<usize> {
        self.last_seen.get(&client_id).copied()
    }

    pub fn clients(&self) -> impl Iterator<Item = (&usize, &ClientMetadata)> {
        self.metadata.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoVersionRecord {
    pub global_version: u64,
    pub round: usize,
    pub contributors: Vec<usize>,
    pub local_model_hashes: Vec<String>,
    pub global_model_hash: String,
    pub accuracy: f64,
}

/// Which local models fed which global version.
#[derive(Debug, Clone, PartialEq)]
pub struct CoVersioningRegistry {
    pub log: HashChain<CoVersionRecord>,
    by_local_hash: BTreeMap<String, u64>,
}

impl CoVersioningRegistry {
    pub fn new(hash_chained: bool) -> Self {
        CoVersioningRegistry { log: HashChain::new(hash_chained), by_local_hash: BTreeMap::new() }
    }

    pub fn record_co_version(&mut self, record: CoVersionRecord) -> Result<(), SimError> {
        if self.log.entries().iter().any(|e| e.record.global_version == record.global_version) {
            return Err(SimError::DuplicateVersion(record.global_version));
        }
        for h in &record.local_model_hashes {
            self.by_local_hash.entry(h.clone()).or_insert(record.global_version);
        }
        self.log.append(record);
        Ok(())
    }

    /// Global version a local model first fed.
    pub fn lookup(&self, local_hash: &str) -> Option<u64> {
        self.by_local_hash.get(local_hash).copied()
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn record(version: u64, locals: &[&[f64]]) -> CoVersionRecord {
        CoVersionRecord {
            global_version: version,
            round: version as usize,
            contributors: (0..locals.len()).collect(),
            local_model_hashes: locals.iter().map(|w| model_hash(w)).collect(),
            global_model_hash: model_hash(&[version as f64]),
            accuracy: 0.5,
        }
    }

    fn sample_registry() -> CoVersioningRegistry {
        let mut r = CoVersioningRegistry::new(true);
        for v in 1..=4 {
            let a = [v as f64, 1.0];
            let b = [v as f64, 2.0];
            r.record_co_version(record(v, &[&a, &b])).unwrap();
        }
        r
    }

    #[test]
    fn lookup_and_duplicates() {
        let mut r = sample_registry();
        assert_eq!(r.len(), 4);
        assert_eq!(r.lookup(&model_hash(&[3.0, 2.0])), Some(3));
        assert_eq!(r.lookup(&model_hash(&[9.0, 2.0])), None);
        assert_eq!(r.record_co_version(record(2, &[])), Err(SimError::DuplicateVersion(2)));
        assert_eq!(r.log.verify(), None);
    }

    #[test]
    fn export_round_trips_and_detects_tampering() {
        let r = sample_registry();
        let text = r.log.to_jsonl();
        assert_eq!(text.lines().count(), 5);
        let back = HashChain::<CoVersionRecord>::from_jsonl(&text).unwrap();
        assert_eq!(back.verify(), None);
        assert_eq!(back.head(), r.log.head());

        // change one stored local hash in entry 2
        let stored = &r.log.entries()[2].record.local_model_hashes[0];
        let mut forged = stored.clone();
        let last = forged.pop().unwrap();
        forged.push(if last == '0' { '1' } else { '0' });
        let tampered = text.replacen(stored.as_str(), &forged, 1);
        let bad = HashChain::<CoVersionRecord>::from_jsonl(&tampered).unwrap();
        assert_eq!(bad.verify(), Some(2));
    }

    #[test]
    fn every_single_bit_flip_of_a_record_is_detected() {
        let mut chain = HashChain::new(true);
        for i in 0..3u64 {
            chain.append(ClientRecord::Seen { client_id: i as usize, round: 0, uptime_rounds: 1 });
        }
        let json = serde_json::to_string(&chain.entries()[1].record).unwrap();
        for byte in 0..json.len() {
            for bit in 0..8 {
                let mut bytes = json.clone().into_bytes();
                bytes[byte] ^= 1 << bit;
                let Ok(text) = String::from_utf8(bytes) else { continue };
                let Ok(record) = serde_json::from_str::<ClientRecord>(&text) else { continue };
                let mut copy = chain.clone();
                copy.entries[1].record = record;
                assert_eq!(copy.verify(), Some(1), "flip at byte {byte} bit {bit}");
            }
        }
    }

    #[test]
    fn client_registry_tracks_activity() {
        let mut r = ClientRegistry::new(true);
        let meta = ClientMetadata { os_version: "os-1".to_string(), memory_rank: 2, device_speed: 10.0, bandwidth: 5.0 };
        r.register(7, meta.clone());
        r.seen(7, 0);
        r.seen(7, 3);
        assert_eq!(r.metadata(7), Some(&meta));
        assert_eq!(r.last_seen(7), Some(3));
        assert_eq!(r.log.len(), 3);
        assert_eq!(r.log.verify(), None);
        let unchained = ClientRegistry::new(false);
        assert_eq!(unchained.log.head(), None);
    }
}
