//! In-memory store of uploaded sets with least-recently-used eviction.

use std::collections::HashMap;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use tdc::seqcore::{SequenceSet, SetDescriptor};

/// Entries younger than this are never evicted.
pub const MIN_RETENTION: Duration = Duration::from_secs(600);

#[derive(Debug, Clone)]
pub struct StoredSet {
    pub set: SequenceSet,
    pub descriptor: SetDescriptor,
    pub uploaded: Instant,
}

#[derive(Debug)]
struct Slot {
    entry: StoredSet,
    last_used: u64,
}

/// Raised when every slot holds an entry inside the retention window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreFull {
    pub capacity: usize,
}

#[derive(Debug)]
pub struct SessionStore {
    capacity: usize,
    retention: Duration,
    slots: HashMap<String, Slot>,
    salt: u64,
    issued: u64,
    tick: u64,
}

impl SessionStore {
    pub fn new(capacity: usize) -> Self {
        let salt = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64);
        Self::with_salt(capacity, MIN_RETENTION, salt)
    }

    /// Deterministic ids for a given salt; `retention` is the eviction floor.
    pub fn with_salt(capacity: usize, retention: Duration, salt: u64) -> Self {
        SessionStore {
            capacity: capacity.max(1),
            retention,
            slots: HashMap::new(),
            salt,
            issued: 0,
            tick: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn insert(&mut self, set: SequenceSet, descriptor: SetDescriptor) -> Result<String, StoreFull> {
        self.insert_at(set, descriptor, Instant::now())
    }

    /// Stores a set as uploaded at `now` and returns its fresh id. A full store
    /// first drops its least recently used entry older than the retention window.
    pub fn insert_at(
        &mut self,
        set: SequenceSet,
        descriptor: SetDescriptor,
        now: Instant,
    ) -> Result<String, StoreFull> {
        if self.slots.len() >= self.capacity {
            let victim = self
                .slots
                .iter()
                .filter(|(_, s)| now.saturating_duration_since(s.entry.uploaded) >= self.retention)
                .min_by_key(|(_, s)| s.last_used)
                .map(|(id, _)| id.clone());
            match victim {
                Some(id) => {
                    self.slots.remove(&id);
                }
                None => {
                    return Err(StoreFull {
                        capacity: self.capacity,
                    })
                }
            }
        }
        let id = loop {
            self.issued += 1;
            let id = format!("{:016x}", tdc::derive_seed(self.salt, self.issued));
            if !self.slots.contains_key(&id) {
                break id;
            }
        };
        self.tick += 1;
        self.slots.insert(
            id.clone(),
            Slot {
                entry: StoredSet {
                    set,
                    descriptor,
                    uploaded: now,
                },
                last_used: self.tick,
            },
        );
        Ok(id)
    }

    /// Looks an entry up and marks it as recently used.
    pub fn get(&mut self, id: &str) -> Option<StoredSet> {
        self.tick += 1;
        let tick = self.tick;
        self.slots.get_mut(id).map(|s| {
            s.last_used = tick;
            s.entry.clone()
        })
    }

    pub fn contains(&self, id: &str) -> bool {
        self.slots.contains_key(id)
    }
}
