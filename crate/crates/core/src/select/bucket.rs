//! Per-bucket counters with stochastic increments.
//!
//! A flow is hashed to one of `r` buckets with SipHash-2-4 over the
//! destination address, source address, and protocol number. Each request
//! draws an increment uniformly from `1..=max(1, now - last_access)` ticks.

use std::hash::Hasher;
use std::sync::atomic::{AtomicU16, AtomicU32, Ordering};

use parking_lot::Mutex;
use siphasher::sip::SipHasher24;

use crate::clock::ticks_since;
use crate::rng::IpidRng;
use crate::{FlowKey, Ipid};

/// 128-bit SipHash key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashKey(pub [u8; 16]);

impl HashKey {
    pub fn from_u128(v: u128) -> Self {
        HashKey(v.to_le_bytes())
    }

    pub fn random<R: IpidRng + ?Sized>(rng: &mut R) -> Self {
        let lo = rng.next_u64();
        let hi = rng.next_u64();
        HashKey::from_u128((u128::from(hi) << 64) | u128::from(lo))
    }

    fn hasher(&self) -> SipHasher24 {
        SipHasher24::new_with_key(&self.0)
    }
}

/// SipHash-2-4 of the 12-byte message `dst || src || protocol as u32 (LE)`.
/// Ports never enter the hash.
pub fn flow_hash(flow: &FlowKey, key: &HashKey) -> u64 {
    let mut msg = [0u8; 12];
    msg[0..4].copy_from_slice(&flow.dst().octets());
    msg[4..8].copy_from_slice(&flow.src().octets());
    msg[8..12].copy_from_slice(&u32::from(flow.protocol()).to_le_bytes());
    let mut h = key.hasher();
    h.write(&msg);
    h.finish()
}

#[inline]
pub fn bucket_index(flow: &FlowKey, key: &HashKey, r: usize) -> usize {
    assert!(r >= 1, "bucket count must be positive");
    (flow_hash(flow, key) % r as u64) as usize
}

/// Draws an increment uniformly from `1..=max(1, elapsed)`.
#[inline]
pub fn stochastic_increment<R: IpidRng + ?Sized>(elapsed: u32, rng: &mut R) -> u32 {
    rng.uniform_inclusive(1, u64::from(elapsed.max(1))) as u32
}

/// Everything observed during one per-bucket request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketStep {
    pub index: usize,
    pub elapsed: u32,
    pub increment: u32,
    pub ipid: Ipid,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    counter: u16,
    last_access: u32,
}

/// Buckets guarded by one lock each; a request holds its bucket's lock for
/// the whole read-draw-update step.
#[derive(Debug)]
pub struct ExclusiveBuckets {
    key: HashKey,
    slots: Box<[Mutex<Slot>]>,
}

impl ExclusiveBuckets {
    pub fn new<R: IpidRng + ?Sized>(r: usize, key: HashKey, now: u32, rng: &mut R) -> Self {
        let slots = (0..r)
            .map(|_| {
                Mutex::new(Slot {
                    counter: rng.next_u16(),
                    last_access: now,
                })
            })
            .collect();
        ExclusiveBuckets { key, slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn key(&self) -> &HashKey {
        &self.key
    }

    pub fn counter(&self, index: usize) -> u16 {
        self.slots[index].lock().counter
    }

    #[inline]
    pub fn next<R: IpidRng + ?Sized>(
        &self,
        flow: &FlowKey,
        now: impl FnOnce() -> u32,
        rng: &mut R,
    ) -> Ipid {
        self.step(flow, now, rng).ipid
    }

    pub fn step<R: IpidRng + ?Sized>(
        &self,
        flow: &FlowKey,
        now: impl FnOnce() -> u32,
        rng: &mut R,
    ) -> BucketStep {
        let index = bucket_index(flow, &self.key, self.slots.len());
        let mut slot = self.slots[index].lock();
        let now = now();
        let elapsed = ticks_since(now, slot.last_access);
        let increment = stochastic_increment(elapsed, rng);
        slot.counter = slot.counter.wrapping_add(increment as u16);
        slot.last_access = now;
        BucketStep {
            index,
            elapsed,
            increment,
            ipid: Ipid(slot.counter),
        }
    }
}

/// Buckets whose counter and timestamp are individually atomic. Two
/// concurrent requests to one bucket may both read the same old timestamp and
/// both apply their increments; the timestamp swap always happens before the
/// counter add within a request.
#[derive(Debug)]
pub struct RacyBuckets {
    key: HashKey,
    counters: Box<[AtomicU16]>,
    stamps: Box<[AtomicU32]>,
}

impl RacyBuckets {
    pub fn new<R: IpidRng + ?Sized>(r: usize, key: HashKey, now: u32, rng: &mut R) -> Self {
        RacyBuckets {
            key,
            counters: (0..r).map(|_| AtomicU16::new(rng.next_u16())).collect(),
            stamps: (0..r).map(|_| AtomicU32::new(now)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn key(&self) -> &HashKey {
        &self.key
    }

    pub fn counter(&self, index: usize) -> u16 {
        self.counters[index].load(Ordering::SeqCst)
    }

    #[inline]
    pub fn next<R: IpidRng + ?Sized>(
        &self,
        flow: &FlowKey,
        now: impl FnOnce() -> u32,
        rng: &mut R,
    ) -> Ipid {
        self.step(flow, now, rng).ipid
    }

    pub fn step<R: IpidRng + ?Sized>(
        &self,
        flow: &FlowKey,
        now: impl FnOnce() -> u32,
        rng: &mut R,
    ) -> BucketStep {
        let index = bucket_index(flow, &self.key, self.counters.len());
        let now = now();
        let old = self.stamps[index].swap(now, Ordering::AcqRel);
        let elapsed = ticks_since(now, old);
        let increment = stochastic_increment(elapsed, rng);
        let prev = self.counters[index].fetch_add(increment as u16, Ordering::AcqRel);
        BucketStep {
            index,
            elapsed,
            increment,
            ipid: Ipid(prev.wrapping_add(increment as u16)),
        }
    }
}
