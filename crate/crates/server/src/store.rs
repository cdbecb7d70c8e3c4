//! In-memory session registry with idle expiry and a capacity bound.
//!
//! Each session sits behind its own mutex so requests on one session are
//! serialized while different sessions proceed in parallel. The registry lock
//! is only held for map bookkeeping.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rcses_core::inference::now_secs;
use rcses_core::SessionState;

pub const DEFAULT_TTL_SECS: u64 = 3600;
pub const DEFAULT_CAPACITY: usize = 10_000;

/// Seconds since the Unix epoch; swappable so tests can move time.
pub trait Clock: Send + Sync + std::fmt::Debug {
    fn now(&self) -> u64;
}

#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        now_secs()
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        Self(AtomicU64::new(start))
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

pub type SessionHandle = Arc<Mutex<SessionState>>;

#[derive(Debug)]
struct Entry {
    session: SessionHandle,
    last_active: u64,
    /// Position in the recency order.
    tick: u64,
}

#[derive(Debug, Default)]
struct Inner {
    entries: HashMap<String, Entry>,
    /// tick -> session id, oldest first.
    recency: BTreeMap<u64, String>,
    next_tick: u64,
}

impl Inner {
    fn remove(&mut self, id: &str) {
        if let Some(entry) = self.entries.remove(id) {
            self.recency.remove(&entry.tick);
        }
    }

    fn bump(&mut self, id: &str, now: u64) {
        let tick = self.next_tick;
        self.next_tick += 1;
        if let Some(entry) = self.entries.get_mut(id) {
            self.recency.remove(&entry.tick);
            entry.tick = tick;
            entry.last_active = entry.last_active.max(now);
            self.recency.insert(tick, id.to_owned());
        }
    }

    /// Drops sessions idle for `ttl` or longer, oldest first.
    fn purge_expired(&mut self, now: u64, ttl: u64) {
        while let Some((_, id)) = self.recency.first_key_value() {
            let idle = self.entries[id].last_active;
            if now.saturating_sub(idle) < ttl {
                break;
            }
            let id = id.clone();
            self.remove(&id);
        }
    }
}

#[derive(Debug)]
pub struct SessionStore {
    inner: Mutex<Inner>,
    ttl: u64,
    capacity: usize,
    clock: Arc<dyn Clock>,
}

impl SessionStore {
    pub fn new(ttl: u64, capacity: usize, clock: Arc<dyn Clock>) -> Self {
        Self {
            inner: Mutex::new(Inner::default()),
            ttl,
            capacity: capacity.max(1),
            clock,
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Registers `session`, evicting the least recently active one if full.
    pub fn insert(&self, session: SessionState) -> (String, SessionHandle) {
        let now = self.clock.now();
        let id = session.id().to_owned();
        let handle = Arc::new(Mutex::new(session));
        let mut inner = self.lock();
        inner.purge_expired(now, self.ttl);
        while inner.entries.len() >= self.capacity {
            let Some((_, oldest)) = inner.recency.first_key_value() else {
                break;
            };
            let oldest = oldest.clone();
            inner.remove(&oldest);
        }
        let tick = inner.next_tick;
        inner.next_tick += 1;
        inner.entries.insert(
            id.clone(),
            Entry {
                session: Arc::clone(&handle),
                last_active: now,
                tick,
            },
        );
        inner.recency.insert(tick, id.clone());
        (id, handle)
    }

    /// The live session with this id, marking it active. Expired sessions are
    /// removed and reported as absent.
    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        let now = self.clock.now();
        let mut inner = self.lock();
        let entry = inner.entries.get(id)?;
        if now.saturating_sub(entry.last_active) >= self.ttl {
            inner.remove(id);
            return None;
        }
        let handle = Arc::clone(&entry.session);
        inner.bump(id, now);
        Some(handle)
    }

    pub fn len(&self) -> usize {
        self.lock().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }
}
